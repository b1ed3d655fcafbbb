"""Sampled curves with cubic Hermite dense output and CSV serialization."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .numerics import fd_derivative, hermite_eval


@dataclass
class Trajectory:
    """Curve samples on a strictly increasing grid, plus monitored scalars.

    Positions x and velocities v have shape (len(s), dim).  The logs dict
    holds per-sample monitored quantities keyed by name (e.g. "F",
    "h_speed", "g_zz", "g_zt").  Treat instances as immutable.
    """

    s: np.ndarray
    x: np.ndarray
    v: np.ndarray
    logs: dict = field(default_factory=dict)

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if np.any(np.diff(self.s) <= 0):
            raise ValueError("parameter grid must be strictly increasing")
        if self.x.shape != self.v.shape or self.x.shape[0] != self.s.shape[0]:
            raise ValueError("inconsistent sample array shapes")

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def steps(self) -> int:
        return len(self.s) - 1

    def interpolate(self, s_query):
        """Cubic Hermite position/velocity at arbitrary parameters.

        Velocity interpolation uses 4th-order finite-difference
        accelerations, so both outputs are O(h^4) accurate.
        """
        h = self.s[1] - self.s[0]
        acc = fd_derivative(self.v, h)
        xq, _ = hermite_eval(self.s, self.x, self.v, s_query)
        vq, _ = hermite_eval(self.s, self.v, acc, s_query)
        return xq, vq

    def reversed(self) -> "Trajectory":
        """Same image traversed backwards on the same grid."""
        logs = {k: val[::-1].copy() for k, val in self.logs.items()}
        return Trajectory(
            s=self.s.copy(),
            x=self.x[::-1].copy(),
            v=-self.v[::-1].copy(),
            logs=logs,
        )

    @staticmethod
    def from_function(fn, dfn, steps: int, dim: int) -> "Trajectory":
        """Sample an analytic curve fn: s -> R^dim with derivative dfn."""
        s = np.linspace(0.0, 1.0, steps + 1)
        x = np.stack([np.asarray(fn(si), dtype=float) for si in s])
        v = np.stack([np.asarray(dfn(si), dtype=float) for si in s])
        return Trajectory(s=s, x=x.reshape(-1, dim), v=v.reshape(-1, dim))

    @staticmethod
    def from_positions(s, x) -> "Trajectory":
        """Build a trajectory from positions only; velocities by 4th-order FD."""
        s = np.asarray(s, dtype=float)
        x = np.asarray(x, dtype=float)
        v = fd_derivative(x, s[1] - s[0])
        return Trajectory(s=s, x=x, v=v)

    def column_names(self, position_names=None, velocity_names=None):
        n = self.dim
        if position_names is None:
            position_names = [f"x{i + 1}" for i in range(n)]
        if velocity_names is None:
            velocity_names = [f"v{i + 1}" for i in range(n)]
        return ["s"] + list(position_names) + list(velocity_names) + sorted(
            self.logs.keys()
        )

    def to_csv(self, path, position_names=None, velocity_names=None,
               float_format="%.17g") -> None:
        """Write samples as headered CSV: s, positions, velocities, logs."""
        cols = self.column_names(position_names, velocity_names)
        log_keys = sorted(self.logs.keys())
        with open(path, "w", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(cols)
            for k in range(len(self.s)):
                row = [float_format % self.s[k]]
                row += [float_format % xi for xi in self.x[k]]
                row += [float_format % vi for vi in self.v[k]]
                row += [float_format % self.logs[key][k] for key in log_keys]
                writer.writerow(row)
