"""Worst-case l1 error bound for noisy recovery on a uniform grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import AdmissibilityReport

__all__ = ["BoundReport", "InvalidBoundError", "theorem2_bound", "audit_bound"]


class InvalidBoundError(ValueError):
    pass


@dataclass
class BoundReport:
    gamma: float
    d1: float
    d2: float
    bound: float
    simplified_bound: float
    denominator: float
    valid: bool
    nu: float = float("nan")
    delta: float = float("nan")

    @property
    def limit_bound(self):
        """The ``nu -> inf`` value of ``bound``: ``8 gamma^2 delta / beta``."""
        return self.simplified_bound / 2


def theorem2_bound(report: AdmissibilityReport, nu: float, n_grid: int, sigma: float,
                   delta: float) -> BoundReport:
    """Error bound ``||x_hat - x||_1 <= bound`` for separation ``nu``.

    ``gamma = max(N sigma, 1/eps)``;
    ``bound = 72 K(0)|K''(0)| gamma^2 delta / (9 beta K(0)|K''(0)| - D1/nu^2 - D2/nu^4)``.
    A non-positive denominator gives ``valid=False`` and ``bound=inf``.
    """
    if nu <= 0 or sigma <= 0 or delta < 0:
        raise ValueError("nu and sigma must be positive, delta nonnegative")
    c0, c1, c2, _ = report.c
    k0, k2, beta, eps = report.k0, abs(report.k2_0), report.beta, report.epsilon
    if not (beta > 0 and eps > 0):
        raise ValueError("report lacks valid local constants")
    pi2 = np.pi ** 2
    gamma = max(n_grid * sigma, 1.0 / eps)
    g2 = gamma * gamma
    d1 = 3 * pi2 * (c2 * beta + 2 * c0 * beta + 8 * c1 ** 2 * k0 * g2)
    d2 = 4 * pi2 ** 2 * c1 ** 2 * k0 * g2
    den = 9 * beta * k0 * k2 - d1 / nu ** 2 - d2 / nu ** 4
    valid = den > 0
    bound = 72 * k0 * k2 * g2 * delta / den if valid else float("inf")
    return BoundReport(gamma, d1, d2, bound, 16 * g2 * delta / beta, den, bool(valid), nu, delta)


def audit_bound(bound_report: BoundReport, observed_l1_error: float) -> dict:
    """Compare an observed error with the bound (``holds``, ``slack``)."""
    if not bound_report.valid:
        raise InvalidBoundError("bound report is not valid (non-positive denominator)")
    slack = bound_report.bound - observed_l1_error
    return {"holds": bool(observed_l1_error <= bound_report.bound), "slack": float(slack)}
