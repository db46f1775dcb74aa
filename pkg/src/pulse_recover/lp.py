"""Dense primal-dual interior-point solver for small linear programs.

Solves ``min c'x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0`` with
Mehrotra's predictor-corrector method.  Inequalities are turned into
equalities with slack columns before the iteration starts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

__all__ = ["LPResult", "solve_lp"]

_STEP_FRACTION = 0.995


@dataclass
class LPResult:
    """Outcome of :func:`solve_lp`.

    ``x`` holds only the original variables (slacks are dropped).
    ``status`` is one of ``"optimal"``, ``"infeasible"``,
    ``"iteration_limit"`` or ``"numerical_failure"``.
    """

    x: np.ndarray
    fun: float
    status: str
    iterations: int
    primal_residual: float
    dual_residual: float
    gap: float
    y: np.ndarray | None = None


def _to_standard_form(c, A_ub, b_ub, A_eq, b_eq):
    n = c.size
    blocks, rhs = [], []
    m_ub = 0 if A_ub is None else A_ub.shape[0]
    if m_ub:
        blocks.append(np.hstack([A_ub, np.eye(m_ub)]))
        rhs.append(b_ub)
    if A_eq is not None and A_eq.shape[0]:
        blocks.append(np.hstack([A_eq, np.zeros((A_eq.shape[0], m_ub))]))
        rhs.append(b_eq)
    A = np.vstack(blocks) if blocks else np.zeros((0, n + m_ub))
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    cc = np.concatenate([c, np.zeros(m_ub)])
    return cc, A, b


class _NormalSolver:
    """Solves ``A D A' dy = r`` and tolerates a rank-deficient ``A``.

    A slightly regularized Cholesky factorization is used, followed by one
    step of iterative refinement against the unregularized matrix. If the
    factorization breaks down, a truncated eigendecomposition (minimum-norm
    solve) is used instead.
    """

    def __init__(self, A, d, rtol=1e-14):
        M = (A * d) @ A.T
        scale = max(np.max(np.abs(np.diag(M))), 1.0) if M.size else 1.0
        self._M = M
        self._chol = None
        self._eig = None
        try:
            self._chol = sla.cho_factor(M + (rtol * scale) * np.eye(M.shape[0]), lower=True)
            if not np.all(np.isfinite(self._chol[0])):
                self._chol = None
        except (np.linalg.LinAlgError, ValueError):
            self._chol = None
        if self._chol is None:
            w, V = np.linalg.eigh(M)
            keep = w > rtol * max(w.max(), 0.0) * M.shape[0]
            self._eig = (w[keep], V[:, keep])

    @property
    def kind(self):
        return "chol" if self._chol is not None else "eig"

    def solve(self, r):
        if self._chol is not None:
            dy = sla.cho_solve(self._chol, r)
            return dy + sla.cho_solve(self._chol, r - self._M @ dy)
        w, V = self._eig
        return V @ ((V.T @ r) / w)


def _starting_point(c, A, b):
    # Mehrotra's heuristic, computed with a minimum-norm solve.
    n = c.size
    if A.shape[0] == 0:
        return np.ones(n), np.zeros(0), np.maximum(c, 1.0)
    ns = _NormalSolver(A, np.ones(n))
    x = A.T @ ns.solve(b)
    y = ns.solve(A @ c)
    s = c - A.T @ y
    dx = max(-1.5 * x.min(), 0.0)
    ds = max(-1.5 * s.min(), 0.0)
    x = x + dx
    s = s + ds
    xs = x @ s
    dx = 0.5 * xs / max(s.sum(), 1e-300)
    ds = 0.5 * xs / max(x.sum(), 1e-300)
    x = x + dx
    s = s + ds
    # degenerate data (e.g. b = 0, c = 1) can leave a zero start
    x = np.maximum(x, 1e-2)
    s = np.maximum(s, 1e-2)
    return x, y, s


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(np.min(-v[neg] / dv[neg])))


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, *, max_iters=200,
             feas_tol=1e-10, opt_tol=1e-10):
    """Minimize ``c'x`` over ``x >= 0`` subject to linear constraints.

    Parameters
    ----------
    c : array_like, shape (n,)
        Cost vector.
    A_ub, b_ub : array_like, optional
        Inequality constraints ``A_ub x <= b_ub``.
    A_eq, b_eq : array_like, optional
        Equality constraints ``A_eq x = b_eq``.
    max_iters : int
        Iteration cap; hitting it yields status ``"iteration_limit"``.
    feas_tol : float
        Relative primal and dual residual tolerance.
    opt_tol : float
        Relative duality-gap tolerance.

    Returns
    -------
    LPResult
    """
    c = np.asarray(c, dtype=float)
    n_orig = c.size
    A_ub = None if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    A_eq = None if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_ub = None if b_ub is None else np.asarray(b_ub, dtype=float)
    b_eq = None if b_eq is None else np.asarray(b_eq, dtype=float)
    cc, A, b = _to_standard_form(c, A_ub, b_ub, A_eq, b_eq)
    n = cc.size

    x, y, s = _starting_point(cc, A, b)
    nb = 1.0 + np.linalg.norm(b)
    nc = 1.0 + np.linalg.norm(cc)
    status = "iteration_limit"
    it = 0
    rp = rd = gap = np.inf
    best = None
    stall = 0
    for it in range(1, max_iters + 1):
        r_b = A @ x - b
        r_c = A.T @ y + s - cc
        mu = x @ s / n
        pobj = cc @ x
        dobj = b @ y
        rp = np.linalg.norm(r_b) / nb
        rd = np.linalg.norm(r_c) / nc
        gap = abs(pobj - dobj) / (1.0 + abs(pobj))
        if rp <= feas_tol and rd <= feas_tol and gap <= opt_tol:
            status = "optimal"
            it -= 1
            break
        # Round-off can stall the residuals just above tolerance and then
        # destabilize the iteration; keep the best iterate seen so far.
        merit = max(rp / feas_tol, rd / feas_tol, gap / opt_tol)
        if best is None or merit < best[0]:
            best = (merit, x.copy(), y.copy(), s.copy(), it - 1, rp, rd, gap)
            stall = 0
        else:
            stall += 1
            if stall >= 8:
                status = "numerical_failure"
                break
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(s))):
            status = "numerical_failure"
            break
        if np.max(x) > 1e14 * (1.0 + np.abs(b).max(initial=0.0)) and rp > feas_tol:
            status = "infeasible"
            break

        d = x / s
        try:
            ns = _NormalSolver(A, d)
        except np.linalg.LinAlgError:
            status = "numerical_failure"
            break

        def direction(r_xs):
            rhs = -r_b - A @ (r_xs / s + d * r_c)
            dy = ns.solve(rhs)
            ds = -r_c - A.T @ dy
            dx = r_xs / s - d * ds
            return dx, dy, ds

        # predictor
        dx_a, dy_a, ds_a = direction(-x * s)
        ap = _max_step(x, dx_a)
        ad = _max_step(s, ds_a)
        mu_aff = (x + ap * dx_a) @ (s + ad * ds_a) / n
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
        # corrector
        dx, dy, ds = direction(-x * s - dx_a * ds_a + sigma * mu)
        ap = min(1.0, _STEP_FRACTION * _max_step(x, dx))
        ad = min(1.0, _STEP_FRACTION * _max_step(s, ds))
        x = x + ap * dx
        y = y + ad * dy
        s = s + ad * ds
        x = np.maximum(x, 1e-300)
        s = np.maximum(s, 1e-300)

    if status != "optimal" and best is not None:
        _, x, y, s, it, rp, rd, gap = best
        if best[0] <= 1.0:
            status = "optimal"
    return LPResult(x=x[:n_orig].copy(), fun=float(c @ x[:n_orig]), status=status,
                    iterations=it, primal_residual=float(rp), dual_residual=float(rd),
                    gap=float(gap), y=y)
