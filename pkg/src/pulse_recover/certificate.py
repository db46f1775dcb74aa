"""Dual certificates built from kernel atoms and their derivatives.

A univariate certificate has the form

    q(t) = sum_m a_m K(t - t_m) + b_m K'(t - t_m)

with ``q(t_m) = v_m`` and ``q'(t_m) = 0``; the bivariate one adds the
``K^(0,1)`` atoms.  Supports are in sigma-normalized units (sigma = 1); use
``q(t / sigma)`` for other scales.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .kernels import (
    DEFAULT_EPSILON,
    AdmissibilityReport,
    KernelSpec,
    eval2,
    eval_kernel,
    verify_local_property,
)

__all__ = [
    "NearSingularError",
    "Certificate1D",
    "Certificate2D",
    "CertificateVerification",
    "CoefficientBounds",
    "CoefficientBounds2D",
    "build_system_1d",
    "solve_certificate_1d",
    "schur_solve_1d",
    "eval_q",
    "verify_certificate",
    "theoretical_bounds",
    "theoretical_bounds_2d",
    "e_nu",
    "e2_nu",
    "ring_count",
    "build_system_2d",
    "solve_certificate_2d",
    "schur_solve_2d",
    "eval_q2",
    "verify_certificate_2d",
]

INTERP_TOL = 1e-8
MAX_CONDITION = 1e12


class NearSingularError(ValueError):
    """The interpolation system is singular to working precision."""


@dataclass
class Certificate1D:
    support: np.ndarray
    signs: np.ndarray
    a: np.ndarray
    b: np.ndarray
    kernel: KernelSpec
    condition: float = float("nan")


@dataclass
class Certificate2D:
    support: np.ndarray
    signs: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    kernel: KernelSpec
    condition: float = float("nan")


@dataclass
class CertificateVerification:
    """Numerical check of the interpolation and boundedness conditions.

    ``near_region_margin`` is the smallest value of
    ``1 - beta/(4 K(0)) (t - t_m)^2 - v_m q(t)`` over probes within epsilon of
    a spike (1D) and is positive when the quadratic dip bound holds.
    ``far_region_margin`` is ``1 - beta eps^2/(4 K(0)) - |q|`` minimized over
    probes farther than epsilon from every spike.  Neither enters ``valid``.
    """

    max_interp_residual: float
    max_gradient_residual: float
    max_abs_q_off_support: float
    near_region_margin: float
    valid: bool
    far_region_margin: float = float("nan")
    argmax_off_support: object = None
    hessian_negative_definite: bool | None = None
    extras: dict = field(default_factory=dict)


def _as_support(support):
    s = np.asarray(support, dtype=float).reshape(-1)
    if np.unique(s).size != s.size:
        raise ValueError("support points must be pairwise distinct")
    return s


def _check_signs(signs, m):
    v = np.asarray(signs, dtype=float).reshape(-1)
    if v.size != m:
        raise ValueError("need one sign per support point")
    if np.any(np.abs(np.abs(v) - 1) > 0):
        raise ValueError("signs must be +1 or -1")
    return v


def build_system_1d(kernel: KernelSpec, support) -> np.ndarray:
    """Block matrix ``[[G0, G1], [G1, G2]]`` with ``(G_l)_km = K^(l)(t_k - t_m)``."""
    t = _as_support(support)
    d = t[:, None] - t[None, :]
    g0, g1, g2 = (eval_kernel(kernel, d, order) for order in range(3))
    return np.block([[g0, g1], [g1, g2]])


def _dense_solve(M, rhs):
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise NearSingularError(f"interpolation system is near-singular (cond ~ {cond:.3g})")
    lu = sla.lu_factor(M)
    sol = sla.lu_solve(lu, rhs)
    res = np.max(np.abs(M @ sol - rhs))
    if res > 1e-10 * max(np.max(np.abs(rhs)), 1.0):
        raise NearSingularError(f"post-solve residual {res:.3g} too large")
    return sol, float(cond)


def solve_certificate_1d(kernel: KernelSpec, support, signs) -> Certificate1D:
    """Solve for ``(a, b)`` so that ``q`` interpolates ``signs`` with zero slope."""
    t = _as_support(support)
    v = _check_signs(signs, t.size)
    M = build_system_1d(kernel, t)
    sol, cond = _dense_solve(M, np.concatenate([v, np.zeros_like(v)]))
    m = t.size
    return Certificate1D(t, v, sol[:m], sol[m:], kernel, cond)


def schur_solve_1d(kernel: KernelSpec, support, signs):
    """Coefficients by Schur-complement elimination of the ``G2`` block.

    ``a = S^-1 v`` and ``b = -G2^-1 G1 a`` with ``S = G0 - G1 G2^-1 G1``.
    Kept as an independent route for checking the direct solve.
    """
    t = _as_support(support)
    v = _check_signs(signs, t.size)
    d = t[:, None] - t[None, :]
    g0, g1, g2 = (eval_kernel(kernel, d, order) for order in range(3))
    g2_inv_g1 = np.linalg.solve(g2, g1)
    S = g0 - g1 @ g2_inv_g1
    a = np.linalg.solve(S, v)
    b = -g2_inv_g1 @ a
    return a, b


def eval_q(cert: Certificate1D, t, order: int = 0):
    """Evaluate ``q^(order)(t)`` for ``order`` in 0..2."""
    if order not in (0, 1, 2):
        raise ValueError("certificate derivatives are available up to order 2")
    arr = np.asarray(t, dtype=float)
    d = arr[..., None] - cert.support
    out = (eval_kernel(cert.kernel, d, order) @ cert.a
           + eval_kernel(cert.kernel, d, order + 1) @ cert.b)
    return float(out) if np.ndim(out) == 0 else out


def _local_constants(kernel, epsilon, beta):
    if epsilon is None:
        epsilon = DEFAULT_EPSILON.get(kernel.kind)
        if epsilon is None:
            raise ValueError("custom kernels need explicit epsilon")
    if beta is None:
        beta, _ = verify_local_property(kernel, epsilon)
    return float(epsilon), float(beta)


def verify_certificate(cert: Certificate1D, probe_step: float = 1e-3, probe_extent: float = 10.0,
                       exclusion_radius: float | None = None, epsilon: float | None = None,
                       beta: float | None = None) -> CertificateVerification:
    """Probe ``|q| < 1`` away from the support and the interpolation residuals."""
    if probe_step > 1e-3 * (1 + 1e-12):
        raise ValueError("probe_step must be at most 1e-3 (sigma units)")
    if exclusion_radius is None:
        exclusion_radius = probe_step
    eps, beta = _local_constants(cert.kernel, epsilon, beta)
    k0 = eval_kernel(cert.kernel, 0.0, 0)
    t_m = cert.support

    interp = float(np.max(np.abs(eval_q(cert, t_m, 0) - cert.signs)))
    grad = float(np.max(np.abs(eval_q(cert, t_m, 1))))

    lo, hi = t_m.min() - probe_extent, t_m.max() + probe_extent
    n = int(np.ceil((hi - lo) / probe_step))
    grid = lo + probe_step * np.arange(n + 1)
    max_abs, arg = 0.0, None
    near_margin = np.inf
    far_margin = np.inf
    chunk = 20000
    for start in range(0, grid.size, chunk):
        g = grid[start:start + chunk]
        dist = np.abs(g[:, None] - t_m[None, :])
        nearest = np.argmin(dist, axis=1)
        dmin = dist[np.arange(g.size), nearest]
        q = eval_q(cert, g, 0)
        off = dmin >= exclusion_radius
        if np.any(off):
            i = int(np.argmax(np.abs(q) * off))
            if abs(q[i]) > max_abs:
                max_abs, arg = float(abs(q[i])), float(g[i])
        near = off & (dmin <= eps)
        if np.any(near):
            dip = 1 - beta / (4 * k0) * dmin[near] ** 2 - cert.signs[nearest[near]] * q[near]
            near_margin = min(near_margin, float(dip.min()))
        far = dmin > eps
        if np.any(far):
            far_margin = min(far_margin, float((1 - beta * eps ** 2 / (4 * k0) - np.abs(q[far])).min()))
    valid = interp <= INTERP_TOL and grad <= INTERP_TOL and max_abs < 1
    return CertificateVerification(interp, grad, max_abs, float(near_margin), bool(valid),
                                   far_region_margin=float(far_margin), argmax_off_support=arg,
                                   extras={"epsilon": eps, "beta": beta})


def e_nu(nu: float) -> float:
    """Tail-sum majorant ``pi^2 / (6 nu^2)``."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    return np.pi ** 2 / (6 * nu ** 2)


def e2_nu(nu: float) -> float:
    """Ring-sum majorant ``3 pi^2 / (2 nu^3)`` for bivariate supports."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    return 3 * np.pi ** 2 / (2 * nu ** 3)


@dataclass
class CoefficientBounds:
    """Sup-norm bounds on certificate coefficients at separation ``nu``.

    ``b_inf_bound`` is what the elimination argument yields,
    ``3 pi^2 C1 nu^2 / ((3|K''(0)| nu^2 - pi^2 C2)(3 K(0) nu^2 - 2 pi^2 C0))``;
    ``b_inf_bound_printed`` is the same expression without the ``3 nu^2``
    factor, kept for comparison.
    """

    a_inf_bound: float
    b_inf_bound: float
    a_lower: float
    nu_thresholds: tuple[float, float, float]
    applicable: bool
    offending: tuple[str, ...] = ()
    b_inf_bound_printed: float = float("nan")


def theoretical_bounds(report: AdmissibilityReport, nu: float) -> CoefficientBounds:
    c0, c1, c2, _ = report.c
    k0, k2 = report.k0, abs(report.k2_0)
    pi2 = np.pi ** 2
    thr = (
        np.sqrt(c2 * pi2 / (3 * k2)),
        np.sqrt(pi2 * (c1 ** 2 + c0 * c2) / (3 * c0 * k2)),
        np.sqrt(2 * pi2 * c0 / (3 * k0)),
    )
    names = ("G2 invertible", "Schur estimate", "S invertible")
    offending = tuple(n for n, th in zip(names, thr) if not nu > th)
    nu2 = nu * nu
    den_a = 3 * k0 * nu2 - 2 * pi2 * c0
    den_b = 3 * k2 * nu2 - pi2 * c2
    if den_a > 0 and den_b > 0:
        a_inf = 3 * nu2 / den_a
        b_printed = pi2 * c1 / (den_b * den_a)
        b_inf = 3 * nu2 * b_printed
        a_low = (1 - 2 * pi2 * c0 / den_a) / k0
    else:
        a_inf = b_inf = b_printed = float("inf")
        a_low = float("-inf")
    return CoefficientBounds(a_inf, b_inf, a_low, thr, not offending, offending, b_printed)


def ring_count(support2d, center, nu: float, n: int) -> int:
    """Points whose max-norm distance to ``center`` lies in ``[n nu, (n+1) nu]``."""
    if n < 1 or nu <= 0:
        raise ValueError("need n >= 1 and nu > 0")
    pts = np.asarray(support2d, dtype=float).reshape(-1, 2)
    if pts.size == 0:
        return 0
    d = np.max(np.abs(pts - np.asarray(center, dtype=float)), axis=1)
    tol = 1e-12 * max(1.0, nu * (n + 1))
    return int(np.count_nonzero((d >= n * nu - tol) & (d <= (n + 1) * nu + tol)))


_ORDERS_2D = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))


def _as_support_2d(support):
    p = np.asarray(support, dtype=float).reshape(-1, 2)
    if np.unique(p, axis=0).shape[0] != p.shape[0]:
        raise ValueError("support points must be pairwise distinct")
    return p


def _blocks_2d(kernel, p):
    dt = p[:, 0][:, None] - p[:, 0][None, :]
    du = p[:, 1][:, None] - p[:, 1][None, :]
    return {o: eval2(kernel, dt, du, *o) for o in _ORDERS_2D}


def build_system_2d(kernel: KernelSpec, support) -> np.ndarray:
    """Block matrix of the bivariate interpolation system (3M x 3M)."""
    G = _blocks_2d(kernel, _as_support_2d(support))
    return np.block([
        [G[0, 0], G[1, 0], G[0, 1]],
        [G[1, 0], G[2, 0], G[1, 1]],
        [G[0, 1], G[1, 1], G[0, 2]],
    ])


def solve_certificate_2d(kernel: KernelSpec, support, signs) -> Certificate2D:
    p = _as_support_2d(support)
    v = _check_signs(signs, p.shape[0])
    M = build_system_2d(kernel, p)
    z = np.zeros_like(v)
    sol, cond = _dense_solve(M, np.concatenate([v, z, z]))
    m = p.shape[0]
    return Certificate2D(p, v, sol[:m], sol[m:2 * m], sol[2 * m:], kernel, cond)


def schur_solve_2d(kernel: KernelSpec, support, signs):
    """Nested elimination: first the ``G^(0,2)`` block, then ``G^(2,0)``.

    With ``G1s = G10 - G11 G02^-1 G01`` and ``G2s = G20 - G11 G02^-1 G11``:
    ``b = -G2s^-1 G1s a`` and ``c = G02^-1 (G11 G2s^-1 G1s - G01) a``, where
    ``a`` solves the fully reduced system.
    """
    p = _as_support_2d(support)
    v = _check_signs(signs, p.shape[0])
    G = _blocks_2d(kernel, p)
    g02_inv_g01 = np.linalg.solve(G[0, 2], G[0, 1])
    g02_inv_g11 = np.linalg.solve(G[0, 2], G[1, 1])
    g1s = G[1, 0] - G[1, 1] @ g02_inv_g01
    g2s = G[2, 0] - G[1, 1] @ g02_inv_g11
    g2s_inv_g1s = np.linalg.solve(g2s, g1s)
    # reduced first row: (G00 - G01 G02^-1 G01) a + (G10 - G01 G02^-1 G11) b = v
    row_a = G[0, 0] - G[0, 1] @ g02_inv_g01
    row_b = G[1, 0] - G[0, 1] @ g02_inv_g11
    gs = row_a - row_b @ g2s_inv_g1s
    a = np.linalg.solve(gs, v)
    b = -g2s_inv_g1s @ a
    c = np.linalg.solve(G[0, 2], G[1, 1] @ (g2s_inv_g1s @ a) - G[0, 1] @ a)
    return a, b, c


def eval_q2(cert: Certificate2D, t, u, order_t: int = 0, order_u: int = 0):
    """Evaluate ``q^(order_t, order_u)(t, u)``; total order at most 2."""
    if order_t + order_u > 2:
        raise ValueError("certificate derivatives are available up to total order 2")
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    t, u = np.broadcast_arrays(t, u)
    dt = t[..., None] - cert.support[:, 0]
    du = u[..., None] - cert.support[:, 1]
    k = cert.kernel
    out = (eval2(k, dt, du, order_t, order_u) @ cert.a
           + eval2(k, dt, du, order_t + 1, order_u) @ cert.b
           + eval2(k, dt, du, order_t, order_u + 1) @ cert.c)
    return float(out) if np.ndim(out) == 0 else out


def verify_certificate_2d(cert: Certificate2D, probe_step: float = 1e-2, probe_extent: float = 5.0,
                          exclusion_radius: float | None = None, epsilon: float | None = None,
                          ) -> CertificateVerification:
    """2D analogue of :func:`verify_certificate` plus a Hessian check.

    Near each spike (max-norm distance below ``min(epsilon, 0.2)``) the
    Hessian of ``v_k q`` must be negative definite at every probe.
    """
    if exclusion_radius is None:
        exclusion_radius = probe_step
    if epsilon is None:
        epsilon = DEFAULT_EPSILON.get(cert.kernel.kind, 0.2)
    eps1 = min(epsilon, 0.2)
    p = cert.support
    zeros = np.zeros(len(p))
    interp = float(np.max(np.abs(eval_q2(cert, p[:, 0], p[:, 1]) - cert.signs)))
    grad = float(max(np.max(np.abs(eval_q2(cert, p[:, 0], p[:, 1], 1, 0))),
                     np.max(np.abs(eval_q2(cert, p[:, 0], p[:, 1], 0, 1)))))
    del zeros

    axes = []
    for j in range(2):
        lo, hi = p[:, j].min() - probe_extent, p[:, j].max() + probe_extent
        n = int(np.ceil((hi - lo) / probe_step))
        if n > 2000:
            raise ValueError("probe grid exceeds 2000 points per axis")
        axes.append(lo + probe_step * np.arange(n + 1))
    max_abs, arg = 0.0, None
    hess_ok = True
    for row in range(0, axes[0].size, 64):
        T, U = np.meshgrid(axes[0][row:row + 64], axes[1], indexing="ij")
        dist = np.max(np.abs(np.stack([T, U], -1)[..., None, :] - p), axis=-1)
        nearest = np.argmin(dist, axis=-1)
        dmin = np.take_along_axis(dist, nearest[..., None], -1)[..., 0]
        q = eval_q2(cert, T, U)
        off = dmin >= exclusion_radius
        if np.any(off):
            idx = np.unravel_index(int(np.argmax(np.abs(q) * off)), q.shape)
            if abs(q[idx]) > max_abs:
                max_abs, arg = float(abs(q[idx])), (float(T[idx]), float(U[idx]))
        near = (dmin < eps1) & (dmin > 0)
        if np.any(near):
            s = cert.signs[nearest[near]]
            h20 = s * eval_q2(cert, T[near], U[near], 2, 0)
            h02 = s * eval_q2(cert, T[near], U[near], 0, 2)
            h11 = s * eval_q2(cert, T[near], U[near], 1, 1)
            hess_ok = hess_ok and bool(np.all(h20 * h02 - h11 ** 2 > 0) and np.all(h20 + h02 < 0))
    valid = interp <= INTERP_TOL and grad <= INTERP_TOL and max_abs < 1
    return CertificateVerification(interp, grad, max_abs, float("nan"), bool(valid),
                                   argmax_off_support=arg, hessian_negative_definite=hess_ok,
                                   extras={"epsilon1": eps1})


@dataclass
class CoefficientBounds2D:
    """Bivariate coefficient bounds; ``*_printed`` omit the ``2 nu^3`` factor."""

    a_inf_bound: float
    b_inf_bound: float
    c_inf_bound: float
    a_lower: float
    applicable: bool
    offending: tuple[str, ...] = ()
    b_inf_bound_printed: float = float("nan")
    c_inf_bound_printed: float = float("nan")


def theoretical_bounds_2d(report: AdmissibilityReport, nu: float) -> CoefficientBounds2D:
    """Bounds for the bivariate system from the mixed constants in ``report``.

    Applicability requires every condition used by the elimination argument,
    not only the three explicit separation thresholds.
    """
    C = report.c_mixed
    if C is None:
        raise ValueError("a 2D admissibility report is required")
    pi2 = np.pi ** 2
    k0 = report.k0
    k20 = k02 = abs(report.k2_0)
    E2 = e2_nu(nu)
    nu3 = nu ** 3
    conds = {
        "cond-nu-biv": nu3 >= 3 * pi2 * C[0, 2] / (2 * k02),
        "cond-nu-biv-2": nu3 >= 3 * pi2 * (C[1, 1] ** 2 + C[2, 0] * C[0, 2]) / (2 * C[2, 0] * k02),
        "cond-nu-biv-3": nu3 > 3 * pi2 * C[2, 0] / k20,
        "G1s estimate": E2 <= C[1, 0] * k02 / (C[1, 1] * C[0, 1] + C[1, 0] * C[0, 2]),
        "Gs estimate": E2 <= min(C[0, 0] * k20 / (2 * (2 * C[1, 0] ** 2 + C[2, 0] * C[0, 0])),
                                 C[0, 0] * k02 / (C[0, 1] ** 2 + C[0, 0] * C[0, 2])),
        "c estimate": E2 <= C[0, 1] * k20 / (2 * (C[1, 1] * C[1, 0] + C[0, 1] * C[2, 0])),
        "Gs invertible": 3 * C[0, 0] * E2 < k0,
    }
    offending = tuple(k for k, ok in conds.items() if not ok)
    den_a = 2 * k0 * nu3 - 9 * pi2 * C[0, 0]
    den_b = 2 * nu3 * k20 - 6 * pi2 * C[2, 0]
    den_c = 2 * nu3 * k02 - 3 * pi2 * C[0, 2]
    if den_a > 0 and den_b > 0 and den_c > 0:
        a_inf = 2 * nu3 / den_a
        b_pr = 6 * pi2 * C[1, 0] / (den_b * den_a)
        c_pr = 6 * pi2 * C[0, 1] / (den_c * den_a)
        a_low = (1 - 9 * pi2 * C[0, 0] / den_a) / k0
    else:
        a_inf = b_pr = c_pr = float("inf")
        a_low = float("-inf")
    return CoefficientBounds2D(a_inf, 2 * nu3 * b_pr, 2 * nu3 * c_pr, a_low, not offending,
                               offending, b_pr, c_pr)
