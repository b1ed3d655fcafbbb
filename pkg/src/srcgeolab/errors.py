"""Exception types shared across the package.

Exit-code mapping used by the CLI: ConfigError -> 2, AssertionFailure
(verdict mismatches, handled as report verdicts) -> 1, NumericalError and
subclasses -> 3.
"""

from __future__ import annotations


class SrcGeoLabError(Exception):
    """Base class for all package errors."""


class ConfigError(SrcGeoLabError):
    """Invalid configuration input; carries the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class NumericalError(SrcGeoLabError):
    """Numerical failure (non-convergence, degenerate data, ...)."""


class DomainError(NumericalError):
    """Position outside the coordinate chart."""


class ChartExitError(DomainError):
    """Trajectory left the chart; carries the exit parameter."""

    def __init__(self, s_exit: float, message: str = ""):
        self.s_exit = s_exit
        super().__init__(message or f"trajectory left the chart at s={s_exit:.6g}")


class NondifferentiablePointError(NumericalError):
    """Jet requested at v=0 where F^2 is only C^{1,1}."""


class InvalidRandersError(NumericalError):
    """One-form norm reaches 1 or h fails positive definiteness."""


class InvalidStationaryError(NumericalError):
    """Stationary data with nonpositive beta or degenerate g0."""


class RegularityError(NumericalError):
    """Curve has velocity samples below the floor."""


class CausalCharacterError(NumericalError):
    """Curve does not have the required causal character."""


class ShootingConvergenceError(NumericalError):
    """Newton shooting stagnated; carries the best terminal residual."""

    def __init__(self, best_residual: float, iterations: int):
        self.best_residual = best_residual
        self.iterations = iterations
        super().__init__(
            f"shooting did not converge after {iterations} iterations "
            f"(best terminal residual {best_residual:.3e})"
        )


class RefineGridError(NumericalError):
    """Conjugate-point bracketing was ambiguous; rerun at doubled resolution."""


class VariationConsistencyError(NumericalError):
    """Closed-form and integral routes for a lifted variation disagree."""


class DirectionDegeneracyError(NumericalError):
    """Probe residuals below noise floor despite omega != 0; rotate the witness."""


class PlotInputError(ConfigError):
    """Required artifact for plotting is missing."""
