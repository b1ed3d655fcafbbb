"""Experiment orchestration: dispatch, verdicts, artifacts, reports.

Reports are JSON with floats serialized at 17 significant digits so that
reruns with identical inputs are byte-identical; timings are included only
outside canonical mode.  Independent experiments may run on a small thread
pool capped by SRC_GEOLAB_THREADS; records are merged in config order.
"""

from __future__ import annotations

import csv
import hashlib
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .config import ExperimentSpec, load_config
from .errors import ConfigError, NumericalError, SrcGeoLabError
from .finsler import energy
from .geodesic import (
    euler_lagrange_residual,
    integrate_finsler_geodesic,
    lorentz_el_residual,
    reparametrize_constant_h_speed,
    shoot_geodesic,
)
from .lift import lightlike_lift, project_to_base, uhlenbeck_action
from .morse import (
    conformal_index_check,
    energy_hessian,
    hessian_report,
    index_from_conjugate_points,
    verify_src_index,
)
from .regularity import probe_metric
from .variational import finsler_linearized_flow
from .zoo import ZooRegistry

# verdict thresholds, pinned once
EL_RESIDUAL_TOL = 1e-5
F_DRIFT_TOL = 1e-7
TERMINAL_TOL = 1e-8
LIFT_DRIFT_TOL = 1e-9
ROUND_TRIP_TOL = 1e-12
ACTION_IDENTITY_TOL = 1e-8
HESSIAN_IDENTITY_TOL = 1e-3
HAUSDORFF_TOL = 1e-5
SLOPE_RANGE = (0.9, 1.1)
SLOPE_SPREAD_TOL = 0.1


@dataclass
class RunFlags:
    out_dir: Path
    canonical: bool = False
    steps: Optional[int] = None
    basis_n: Optional[int] = None
    seed: Optional[int] = None


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dump_canonical_json(obj, indent=0) -> str:
    """Deterministic JSON text with floats at 17 significant digits."""
    import json as _json

    pad = "  " * indent
    pad_in = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{pad_in}{_json.dumps(str(k))}: {dump_canonical_json(v, indent + 1)}"
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [
            f"{pad_in}{dump_canonical_json(v, indent + 1)}" for v in obj
        ]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, float):
        if not np.isfinite(obj):
            raise NumericalError(f"non-finite value in report: {obj}")
        return format(obj, ".17g")
    if isinstance(obj, int):
        return str(obj)
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return _json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj)!r}")


def _write_csv(path: Path, header, columns) -> None:
    rows = np.column_stack(columns)
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(["%.17g" % v for v in row])


def _flow_csv(path: Path, flow) -> None:
    ratio = np.linalg.svd(flow.Y, compute_uv=False)
    smax = np.where(ratio[:, 0] == 0.0, 1.0, ratio[:, 0])
    _write_csv(
        path,
        ["s", "det", "sigma_ratio"],
        [flow.s, flow.det(), ratio[:, -1] / smax],
    )


def _endpoints(spec: ExperimentSpec, case):
    p = np.asarray(spec.p, dtype=float) if spec.p is not None else case.p
    q = np.asarray(spec.q, dtype=float) if spec.q is not None else case.q
    v0 = np.asarray(spec.v0, dtype=float) if spec.v0 is not None else case.v0
    return p, q, v0


def _lambda_callable(lam: dict):
    coeff = lam["coeff"]
    if lam["form"] == "constant":
        return lambda x: coeff
    def radial(x):
        acc = None
        for c in x:
            acc = c * c if acc is None else acc + c * c
        return 1.0 + coeff * acc
    return radial


def _run_geodesic(spec, case, out_dir):
    R = case.R
    if spec.x0 is not None:
        if spec.v0 is None:
            raise ConfigError(f"experiments[{spec.name}].v0",
                              "initial-value geodesics need v0")
        traj = integrate_finsler_geodesic(R, spec.x0, spec.v0, steps=spec.steps)
        terminal_err = None
    else:
        p, q, v0 = _endpoints(spec, case)
        traj = shoot_geodesic(R, p, q, v0=v0, steps=spec.steps)
        terminal_err = float(np.linalg.norm(traj.x[-1] - q))
    res = euler_lagrange_residual(R, traj)
    drift = float(np.ptp(traj.logs["F"]))
    csv_path = out_dir / f"{spec.name}_trajectory.csv"
    traj.to_csv(csv_path)
    verdicts = {
        "el_residual": res < EL_RESIDUAL_TOL,
        "f_drift": drift < F_DRIFT_TOL,
    }
    if terminal_err is not None:
        verdicts["terminal_error"] = terminal_err < TERMINAL_TOL
    results = {
        "el_residual": res,
        "f_drift": drift,
        "energy": energy(R, traj),
        "terminal_error": terminal_err,
    }
    return verdicts, results, {"trajectory_csv": csv_path.name}


def _run_lift(spec, case, out_dir):
    R = case.R
    p, q, v0 = _endpoints(spec, case)
    traj = shoot_geodesic(R, p, q, v0=v0, steps=spec.steps)
    const_speed = reparametrize_constant_h_speed(traj, R)
    lifted = lightlike_lift(R, const_speed, t0=spec.t0)
    field = case.product.matrix_field()
    res = lorentz_el_residual(field, lifted.spacetime)
    zz = float(np.ptp(lifted.spacetime.logs["g_zz"]))
    zt = float(np.ptp(lifted.spacetime.logs["g_zt"]))
    back = project_to_base(lifted, R)
    round_trip = float(
        max(np.abs(back.x - const_speed.x).max(),
            np.abs(back.v - const_speed.v).max())
    )
    action = uhlenbeck_action(case.product, lifted.spacetime)
    twice_energy = 2.0 * energy(R, const_speed)
    action_err = abs(action - twice_energy) / abs(twice_energy)
    base_csv = out_dir / f"{spec.name}_base.csv"
    lift_csv = out_dir / f"{spec.name}_lift.csv"
    const_speed.to_csv(base_csv)
    lifted.to_csv(lift_csv)
    verdicts = {
        "lift_el_residual": res < EL_RESIDUAL_TOL,
        "g_zz_drift": zz < LIFT_DRIFT_TOL,
        "g_zt_drift": zt < LIFT_DRIFT_TOL,
        "round_trip": round_trip < ROUND_TRIP_TOL,
        "action_identity": action_err < ACTION_IDENTITY_TOL,
    }
    results = {
        "lift_el_residual": res,
        "g_zz_drift": zz,
        "g_zt_drift": zt,
        "round_trip_deviation": round_trip,
        "uhlenbeck_action": action,
        "twice_energy": twice_energy,
        "t_span": float(lifted.t[-1] - lifted.t[0]),
    }
    return verdicts, results, {
        "trajectory_csv": base_csv.name,
        "lift_csv": lift_csv.name,
    }


def _run_index(spec, case, out_dir):
    R = case.R
    p, q, v0 = _endpoints(spec, case)
    traj = shoot_geodesic(R, p, q, v0=v0, steps=spec.steps)
    flow = finsler_linearized_flow(R, traj)
    rep_cp = index_from_conjugate_points(flow, geodesic_id=spec.name)
    h_e = energy_hessian(R, traj, spec.basis_n, geodesic_id=spec.name)
    rep_he = hessian_report(h_e, geodesic_id=spec.name)
    detj_csv = out_dir / f"{spec.name}_detj.csv"
    _flow_csv(detj_csv, flow)
    verdicts = {
        "methods_agree": rep_cp.mu == rep_he.mu,
        "flags_agree": rep_cp.degenerate_endpoint == rep_he.degenerate_endpoint,
    }
    results = {
        "mu": rep_cp.mu,
        "reports": {
            "conjugate-count": rep_cp.as_dict(),
            "hessian-E": rep_he.as_dict(),
        },
    }
    return verdicts, results, {"detj_csv": detj_csv.name}


def _run_verify_src(spec, case, out_dir):
    p, q, v0 = _endpoints(spec, case)
    ver = verify_src_index(case.R, p, q, v0=v0, steps=spec.steps,
                           basis_n=spec.basis_n, label=spec.name)
    detj_base = out_dir / f"{spec.name}_detj_base.csv"
    detj_lift = out_dir / f"{spec.name}_detj_lift.csv"
    _flow_csv(detj_base, ver.flows["base"])
    _flow_csv(detj_lift, ver.flows["spacetime"])
    cert = ver.lift_certificate
    verdicts = {
        "mu_agree": ver.agree,
        "flags_agree": ver.flags_agree,
        "hessian_identity": ver.hessian_identity_error < HESSIAN_IDENTITY_TOL,
        "lift_el_residual": cert["el_residual"] < EL_RESIDUAL_TOL,
        "lift_drifts": max(cert["g_zz_drift"], cert["g_zt_drift"])
        < LIFT_DRIFT_TOL,
    }
    return verdicts, ver.as_dict(), {
        "detj_base_csv": detj_base.name,
        "detj_lift_csv": detj_lift.name,
    }


def _run_conformal(spec, case, out_dir):
    R = case.R
    p, q, v0 = _endpoints(spec, case)
    traj = shoot_geodesic(R, p, q, v0=v0, steps=spec.steps)
    rep = conformal_index_check(R, traj, _lambda_callable(spec.lam),
                                steps=spec.steps, label=spec.name)
    detj_csv = out_dir / f"{spec.name}_detj_rescaled.csv"
    _flow_csv(detj_csv, rep.flows["rescaled"])
    proj_csv = out_dir / f"{spec.name}_projection.csv"
    rep.projected_trajectory.to_csv(proj_csv)
    verdicts = {
        "mu_invariant": rep.mu_unscaled == rep.mu_scaled,
        "image_coincides": rep.hausdorff_images < HAUSDORFF_TOL,
    }
    results = {
        "mu_unscaled": rep.mu_unscaled,
        "mu_scaled": rep.mu_scaled,
        "hausdorff": rep.hausdorff_images,
        "time_endpoint_deviation": rep.time_endpoint_deviation,
        "lambda": spec.lam,
    }
    return verdicts, results, {
        "detj_csv": detj_csv.name,
        "trajectory_csv": proj_csv.name,
    }


def _run_probe(spec, case, out_dir):
    R = case.R
    p, q = case.p, case.q
    direction = q - p

    def fn(s):
        return p + s * direction

    def dfn(s):
        return direction

    from .trajectory import Trajectory

    curve = Trajectory.from_function(fn, dfn, spec.steps, R.dim)
    rep = probe_metric(
        R, curve, label=spec.zoo, s0_windows=tuple(spec.windows),
        ell=spec.ell, eps_grid=spec.epsilon_grid(),
        expect_linear=not case.omega_is_zero,
    )
    artifacts = {}
    for k, (s0, curve_k) in enumerate(rep.windows):
        path = out_dir / f"{spec.name}_residuals_w{k}.csv"
        _write_csv(path, ["epsilon", "residual", "abs_residual"],
                   [curve_k.eps, curve_k.residuals,
                    np.abs(curve_k.residuals)])
        artifacts[f"residual_csv_w{k}"] = path.name
    verdict_doc = {
        "metric": spec.zoo,
        "witness": {
            "v": to_jsonable(rep.witness_v),
            "w": to_jsonable(rep.witness_w),
            "s0": list(spec.windows),
        },
        "slope": rep.slope,
        "intercept": rep.intercept,
        "verdict": rep.verdict,
    }
    verdicts = {"probe": rep.passed}
    if rep.verdict == "linear":
        verdicts["slope_in_range"] = all(
            SLOPE_RANGE[0] <= c.slope <= SLOPE_RANGE[1] for _, c in rep.windows
        )
        verdicts["slope_stable"] = rep.slope_spread <= SLOPE_SPREAD_TOL
    results = dict(
        verdict_doc,
        slope_spread=rep.slope_spread,
        max_abs_residual=rep.max_abs_residual,
        window_slopes=[c.slope for _, c in rep.windows],
    )
    return verdicts, results, artifacts


_RUNNERS = {
    "geodesic": _run_geodesic,
    "lift": _run_lift,
    "index": _run_index,
    "verify-src": _run_verify_src,
    "conformal-check": _run_conformal,
    "probe": _run_probe,
}


def run_experiment(spec: ExperimentSpec, registry: ZooRegistry,
                   out_dir: Path) -> dict:
    """Execute one experiment; returns its report record."""
    record = {"name": spec.name, "kind": spec.kind, "zoo": spec.zoo}
    start = time.monotonic()
    try:
        case = registry.case(spec.zoo)
        verdicts, results, artifacts = _RUNNERS[spec.kind](spec, case, out_dir)
        record["status"] = "pass" if all(verdicts.values()) else "fail"
        record["verdicts"] = to_jsonable(verdicts)
        record["results"] = to_jsonable(results)
        record["artifacts"] = artifacts
    except ConfigError as exc:
        record["status"] = "input-error"
        record["error"] = str(exc)
    except (NumericalError, SrcGeoLabError) as exc:
        record["status"] = "numerical-failure"
        record["error"] = str(exc)
    record["elapsed_s"] = time.monotonic() - start
    return record


_STATUS_CODE = {"pass": 0, "fail": 1, "input-error": 2, "numerical-failure": 3}


def worker_count(n_tasks: int) -> int:
    raw = os.environ.get("SRC_GEOLAB_THREADS", "1")
    try:
        cap = max(1, int(raw))
    except ValueError:
        cap = 1
    return max(1, min(cap, n_tasks))


def run_config_file(config_path, flags: RunFlags):
    """Run every experiment of a config; returns (report dict, exit code)."""
    config_path = Path(config_path)
    experiments, zoo_entries = load_config(config_path)
    registry = ZooRegistry(zoo_entries)
    for spec in experiments:
        registry.entry(spec.zoo)  # unknown references are input errors
        if flags.steps is not None:
            spec.steps = flags.steps
        if flags.basis_n is not None:
            spec.basis_n = flags.basis_n
        if flags.seed is not None:
            spec.seed = flags.seed

    out_dir = Path(flags.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    workers = worker_count(len(experiments))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(
                pool.map(lambda s: run_experiment(s, registry, out_dir),
                         experiments)
            )
    else:
        records = [run_experiment(s, registry, out_dir) for s in experiments]

    exit_code = max((_STATUS_CODE[r["status"]] for r in records), default=0)
    if flags.canonical:
        for r in records:
            r.pop("elapsed_s", None)
    report = {
        "tool": "srcgeolab",
        "version": __version__,
        "config_hash": hashlib.sha256(config_path.read_bytes()).hexdigest(),
        "canonical": flags.canonical,
        "experiments": records,
        "overall": {"pass": exit_code == 0, "exit_code": exit_code},
    }
    report_path = out_dir / "report.json"
    report_path.write_text(dump_canonical_json(to_jsonable(report)) + "\n")
    return report, exit_code
