"""Built-in metric zoo: analytic Randers and stationary test cases.

Each entry builds a validated metric on its chart together with canonical
endpoints and a shooting guess, so experiments can reference cases by name.
Polynomial fields are specified as coefficient/exponent lists and assembled
into differentiation-friendly callbacks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import jets as jm
from .errors import ConfigError
from .finsler import (
    ChartDomain,
    OneFormField,
    RandersMetric,
    RiemannianField,
    validate,
)
from .spacetime import LorentzProduct, StationaryData, src_backward, src_forward

ZOO_KINDS = (
    "euclidean_wind",
    "sphere_stereographic",
    "radial_wind",
    "polynomial_custom",
    "stationary_data",
)


@dataclass(frozen=True)
class ZooEntry:
    """Declarative description of one zoo metric."""

    name: str
    kind: str
    params: dict
    bounds: tuple


@dataclass
class ZooCase:
    """Constructed metric with canonical experiment data."""

    entry: ZooEntry
    R: RandersMetric
    product: LorentzProduct
    stationary: Optional[StationaryData]
    p: np.ndarray
    q: np.ndarray
    v0: Optional[np.ndarray]
    omega_is_zero: bool
    validation: object = None

    @property
    def name(self) -> str:
        return self.entry.name


def _poly_evaluator(terms, n: int, constant: float = 0.0):
    """[[coef, e1, ..., en], ...] -> differentiation-friendly polynomial."""

    def poly(x):
        acc = constant
        for term in terms:
            coef = term[0]
            mono = coef
            for i in range(n):
                e = int(term[1 + i])
                for _ in range(e):
                    mono = mono * x[i]
            acc = acc + mono
        return acc

    return poly


def _conformal_factor(rho: float):
    def phi(x):
        r2 = None
        for c in x:
            r2 = c * c if r2 is None else r2 + c * c
        den = rho * rho + r2
        return 4.0 * rho ** 4 / (den * den)

    return phi


def _identity_entries(n):
    return [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]


def build_case(entry: ZooEntry, rng_seed: int = 0,
               validation_samples: int = 200) -> ZooCase:
    """Construct and validate the metric described by a zoo entry."""
    kind = entry.kind
    params = entry.params
    domain = ChartDomain(bounds=tuple(tuple(b) for b in entry.bounds))
    n = domain.dim
    stationary = None

    if kind == "euclidean_wind":
        a = float(params.get("wind", 0.0))
        if not abs(a) < 1.0:
            raise ConfigError(f"zoo[{entry.name}].params.wind",
                              f"|wind| must be < 1, got {a}")
        direction = np.asarray(params.get("direction", [1.0] + [0.0] * (n - 1)),
                               dtype=float)
        direction = direction / np.linalg.norm(direction)
        omega = [a * direction[i] for i in range(n)]
        R = RandersMetric(
            domain=domain,
            h=RiemannianField(lambda x: _identity_entries(n)),
            omega=OneFormField(lambda x: list(omega)),
        )
        omega_zero = a == 0.0

    elif kind == "sphere_stereographic":
        rho = float(params.get("radius", 1.0))
        a = float(params.get("wind", 0.0))
        if rho <= 0.0:
            raise ConfigError(f"zoo[{entry.name}].params.radius",
                              "radius must be positive")
        if not abs(a) < 1.0:
            raise ConfigError(f"zoo[{entry.name}].params.wind",
                              f"|wind| must be < 1, got {a}")
        phi = _conformal_factor(rho)

        def h_fn(x, phi=phi):
            p = phi(x)
            return [[p if i == j else 0.0 for j in range(n)] for i in range(n)]

        def om_fn(x, phi=phi, a=a):
            # wind scaled by sqrt(phi) keeps the h-norm equal to |a| everywhere
            root = jm.sqrt(phi(x))
            return [a * root] + [0.0] * (n - 1)

        R = RandersMetric(domain=domain, h=RiemannianField(h_fn),
                          omega=OneFormField(om_fn))
        omega_zero = a == 0.0

    elif kind == "radial_wind":
        a = float(params.get("strength", 0.1))

        def om_fn(x, a=a):
            return [a * c for c in x]

        R = RandersMetric(
            domain=domain,
            h=RiemannianField(lambda x: _identity_entries(n)),
            omega=OneFormField(om_fn),
        )
        omega_zero = a == 0.0

    elif kind == "polynomial_custom":
        h_terms = params.get("h_scale_coeffs", [])
        om_terms = params.get("omega_coeffs", [[] for _ in range(n)])
        if len(om_terms) != n:
            raise ConfigError(f"zoo[{entry.name}].params.omega_coeffs",
                              f"need {n} component lists")
        scale = _poly_evaluator(h_terms, n, constant=1.0)
        comps = [_poly_evaluator(terms, n) for terms in om_terms]

        def h_fn(x, scale=scale):
            sc = scale(x)
            return [[sc if i == j else 0.0 for j in range(n)] for i in range(n)]

        def om_fn(x, comps=comps):
            return [c(x) for c in comps]

        R = RandersMetric(domain=domain, h=RiemannianField(h_fn),
                          omega=OneFormField(om_fn))
        omega_zero = all(len(t) == 0 for t in om_terms)

    elif kind == "stationary_data":
        w_terms = params.get("w_coeffs", [[] for _ in range(n)])
        beta_terms = params.get("beta_coeffs", [])
        if len(w_terms) != n:
            raise ConfigError(f"zoo[{entry.name}].params.w_coeffs",
                              f"need {n} component lists")
        w_comps = [_poly_evaluator(terms, n) for terms in w_terms]
        beta = _poly_evaluator(beta_terms, n, constant=1.0)
        stationary = StationaryData(
            domain=domain,
            g0=RiemannianField(lambda x: _identity_entries(n)),
            w=OneFormField(lambda x: [c(x) for c in w_comps]),
            beta=beta,
        )
        rng = np.random.default_rng(rng_seed)
        R = src_forward(stationary, samples=domain.sample(validation_samples, rng))
        omega_zero = all(len(t) == 0 for t in w_terms)

    else:
        raise ConfigError(f"zoo[{entry.name}].kind",
                          f"unknown kind {kind!r}; expected one of {ZOO_KINDS}")

    rng = np.random.default_rng(rng_seed)
    report = validate(R, domain.sample(validation_samples, rng))
    if not report.passed:
        raise ConfigError(
            f"zoo[{entry.name}]",
            f"metric fails the Randers condition: max one-form norm "
            f"{report.max_omega_norm:.6f} at {report.worst_point}",
        )

    p = np.asarray(params.get("p", _default_endpoints(kind, n)[0]), dtype=float)
    q = np.asarray(params.get("q", _default_endpoints(kind, n)[1]), dtype=float)
    v0 = params.get("v0")
    if v0 is None and kind == "sphere_stereographic":
        v0 = _sphere_guess(p, q)
    return ZooCase(
        entry=entry, R=R, product=src_backward(R), stationary=stationary,
        p=p, q=q, v0=None if v0 is None else np.asarray(v0, dtype=float),
        omega_is_zero=omega_zero, validation=report,
    )


def _default_endpoints(kind: str, n: int):
    if kind == "sphere_stereographic":
        return [1.0] + [0.0] * (n - 1), [-1.0] + [0.0] * (n - 1)
    p = [0.0] * n
    q = [1.0] + [0.0] * (n - 1)
    if n >= 2:
        q[1] = 0.5
    return p, q


def _sphere_guess(p, q):
    """Equator-arc shooting guess for points on the chart circle |x| = rho."""
    rp = np.linalg.norm(p)
    ang_p = np.arctan2(p[1], p[0])
    ang_q = np.arctan2(q[1], q[0])
    dtheta = (ang_q - ang_p) % (2 * np.pi)
    tangent = np.array([-np.sin(ang_p), np.cos(ang_p)])
    return dtheta * rp * tangent


DEFAULT_ENTRIES = (
    ZooEntry(
        name="euclidean",
        kind="euclidean_wind",
        params={"wind": 0.0, "p": [0.0, 0.0], "q": [1.0, 0.0]},
        bounds=((-5.0, 5.0), (-5.0, 5.0)),
    ),
    ZooEntry(
        name="euclidean-wind",
        kind="euclidean_wind",
        params={"wind": 0.5, "p": [0.0, 0.0], "q": [0.0, 1.0]},
        bounds=((-5.0, 5.0), (-5.0, 5.0)),
    ),
    ZooEntry(
        name="sphere",
        kind="sphere_stereographic",
        params={"radius": 1.0, "wind": 0.0,
                "p": [1.0, 0.0], "q": [0.0, -1.0],
                "v0": [0.0, 1.5 * np.pi]},
        bounds=((-6.0, 6.0), (-6.0, 6.0)),
    ),
    ZooEntry(
        name="sphere-wind",
        kind="sphere_stereographic",
        params={"radius": 1.0, "wind": 0.12,
                "p": [1.0, 0.0], "q": [0.0, -1.0],
                "v0": [0.0, 1.5 * np.pi]},
        bounds=((-6.0, 6.0), (-6.0, 6.0)),
    ),
    ZooEntry(
        name="radial-wind",
        kind="radial_wind",
        params={"strength": 0.15, "p": [-1.0, -0.5], "q": [1.0, 0.8]},
        bounds=((-3.0, 3.0), (-3.0, 3.0)),
    ),
    ZooEntry(
        name="poly-bump",
        kind="polynomial_custom",
        params={
            "h_scale_coeffs": [[0.05, 2, 0], [0.05, 0, 2]],
            "omega_coeffs": [[[0.2, 0, 0], [0.05, 0, 1]], []],
            "p": [-1.0, -0.5],
            "q": [1.0, 0.5],
        },
        bounds=((-2.0, 2.0), (-2.0, 2.0)),
    ),
    ZooEntry(
        name="stationary-basic",
        kind="stationary_data",
        params={
            "w_coeffs": [[[0.3, 0, 0]], []],
            "beta_coeffs": [[0.1, 2, 0], [0.1, 0, 2]],
            "p": [-0.8, -0.4],
            "q": [0.9, 0.6],
        },
        bounds=((-2.0, 2.0), (-2.0, 2.0)),
    ),
)


class ZooRegistry:
    """Named zoo entries with lazily built and cached cases."""

    def __init__(self, extra_entries=()):
        self._entries = {e.name: e for e in DEFAULT_ENTRIES}
        for e in extra_entries:
            if e.name in self._entries:
                raise ConfigError(f"zoo[{e.name}]", "duplicate zoo entry name")
            self._entries[e.name] = e
        self._cases = {}

    def names(self):
        return list(self._entries)

    def entry(self, name: str) -> ZooEntry:
        if name not in self._entries:
            raise ConfigError("zoo", f"unknown zoo case {name!r}; "
                                     f"known: {', '.join(self._entries)}")
        return self._entries[name]

    def case(self, name: str) -> ZooCase:
        if name not in self._cases:
            self._cases[name] = build_case(self.entry(name))
        return self._cases[name]
