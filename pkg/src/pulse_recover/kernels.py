"""Admissible pulse kernels, their derivatives and admissibility constants.

Built-in kernels are the Gaussian ``exp(-t^2/2)`` and the Cauchy
``1/(1+t^2)``; bivariate kernels are tensor products of two univariate
ones.  Custom kernels supply every derivative themselves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "KernelSpec",
    "AdmissibilityReport",
    "gaussian",
    "cauchy",
    "custom",
    "tensor",
    "get_kernel",
    "eval_kernel",
    "eval2",
    "estimate_global_constants",
    "verify_local_property",
    "admissibility_report",
    "DEFAULT_EPSILON",
]

MAX_ORDER = 3

#: Local-property radius used when none is given (concavity window).
DEFAULT_EPSILON = {"gaussian": 0.5, "cauchy": 0.3}


def _gaussian(t, order):
    e = np.exp(-0.5 * t * t)
    if order == 0:
        return e
    if order == 1:
        return -t * e
    if order == 2:
        return (t * t - 1.0) * e
    return (3.0 * t - t ** 3) * e


def _cauchy(t, order):
    r = 1.0 / (1.0 + t * t)
    if order == 0:
        return r
    if order == 1:
        return -2.0 * t * r * r
    if order == 2:
        return (6.0 * t * t - 2.0) * r ** 3
    return 24.0 * t * (1.0 - t * t) * r ** 4


_BUILTIN = {"gaussian": _gaussian, "cauchy": _cauchy}


@dataclass(frozen=True)
class KernelSpec:
    """An even pulse kernel with derivatives up to order 3.

    Parameters
    ----------
    kind : {"gaussian", "cauchy", "custom"}
        Kernel family.  For ``dim == 2`` this names the univariate factor
        of the tensor product (or ``"custom"``).
    dim : {1, 2}
        Dimensionality.
    func : callable, optional
        For custom kernels.  1D: ``func(t, order)``; 2D:
        ``func(t, u, order_t, order_u)``.  Must accept numpy arrays.
    name : str, optional
        Label used in reports.
    """

    kind: str
    dim: int = 1
    func: Callable | None = field(default=None, compare=False, repr=False)
    name: str = ""

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.kind == "custom":
            if self.func is None:
                raise ValueError("custom kernels need an evaluator callback")
        elif self.kind not in _BUILTIN:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not self.name:
            object.__setattr__(self, "name", self.kind if self.dim == 1 else f"{self.kind}2")

    def __call__(self, t, order=0):
        return eval_kernel(self, t, order)


def gaussian() -> KernelSpec:
    return KernelSpec("gaussian")


def cauchy() -> KernelSpec:
    return KernelSpec("cauchy")


def custom(func, dim=1, name="custom") -> KernelSpec:
    """Wrap a user evaluator.  No derivatives are computed internally."""
    return KernelSpec("custom", dim=dim, func=func, name=name)


def tensor(kernel: KernelSpec | str) -> KernelSpec:
    """Bivariate kernel ``K2(t, u) = K(t) K(u)`` from a univariate built-in."""
    if isinstance(kernel, str):
        kernel = get_kernel(kernel)
    if kernel.dim != 1 or kernel.kind == "custom":
        raise ValueError("tensor() takes a univariate built-in kernel")
    return KernelSpec(kernel.kind, dim=2)


def get_kernel(name: str, dim: int = 1) -> KernelSpec:
    """Look up a built-in kernel by name (``"gaussian"`` or ``"cauchy"``)."""
    key = name.lower()
    if key not in _BUILTIN:
        raise ValueError(f"unknown kernel {name!r}; expected one of {sorted(_BUILTIN)}")
    return KernelSpec(key, dim=dim)


def _check_order(order):
    if int(order) != order or not 0 <= order <= MAX_ORDER:
        raise ValueError(f"derivative order must be in 0..{MAX_ORDER}, got {order}")
    return int(order)


def eval_kernel(kernel: KernelSpec, t, order: int = 0):
    """Evaluate ``K^(order)(t)`` for a univariate kernel.

    Accepts scalars or arrays; returns a float for scalar input.
    """
    if kernel.dim != 1:
        raise ValueError("eval_kernel needs a 1D kernel; use eval2 for 2D kernels")
    order = _check_order(order)
    arr = np.asarray(t, dtype=float)
    if kernel.kind == "custom":
        out = np.asarray(kernel.func(arr, order), dtype=float)
    else:
        out = _BUILTIN[kernel.kind](arr, order)
    return float(out) if out.ndim == 0 else out


def eval2(kernel: KernelSpec, t, u, order_t: int = 0, order_u: int = 0):
    """Evaluate the mixed partial ``K2^(order_t, order_u)(t, u)``."""
    if kernel.dim != 2:
        raise ValueError("eval2 needs a 2D kernel")
    order_t = _check_order(order_t)
    order_u = _check_order(order_u)
    if order_t + order_u > MAX_ORDER:
        raise ValueError(f"total derivative order must be <= {MAX_ORDER}")
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    if kernel.kind == "custom":
        out = np.asarray(kernel.func(t, u, order_t, order_u), dtype=float)
    else:
        f = _BUILTIN[kernel.kind]
        out = f(t, order_t) * f(u, order_u)
    return float(out) if out.ndim == 0 else out


@dataclass
class AdmissibilityReport:
    """Global and local admissibility constants of a kernel.

    ``c0..c3`` are the decay constants with 1% headroom over the probed
    maximum; ``raw_c`` keeps the probed maxima themselves and ``argmax``
    where they occur.  For 2D kernels ``c_mixed`` maps ``(l1, l2)`` to the
    corresponding constant and ``c0..c3`` hold the largest constant of each
    total order.
    """

    kernel: str
    c0: float
    c1: float
    c2: float
    c3: float
    k0: float
    k2_0: float
    epsilon: float = float("nan")
    beta: float = float("nan")
    passed: bool = False
    raw_c: tuple = ()
    argmax: tuple = ()
    c_mixed: dict | None = None
    checks: dict = field(default_factory=dict)

    @property
    def c(self):
        return (self.c0, self.c1, self.c2, self.c3)


HEADROOM = 1.01


def _no_growth(weighted, radius, extent):
    # The weighted derivative must not keep growing toward the probe edge,
    # otherwise the sup is an artifact of the truncated window.
    inner = weighted[radius <= extent / 2].max()
    outer = weighted[radius > extent / 2]
    return bool(outer.size == 0 or outer.max() <= inner * (1 + 1e-6))


def estimate_global_constants(kernel: KernelSpec, extent: float = 20.0,
                              step: float = 1e-3) -> AdmissibilityReport:
    """Probe ``sup |K^(l)(t)| (1 + t^2)`` on a uniform grid.

    For 2D kernels the weight is ``(1 + t^2 + u^2)^(3/2)`` and all partials
    with ``l1 + l2 <= 3`` are probed on a square grid (the step is coarsened
    so the grid stays under ~4M points).

    Returns a report with only the global fields, ``k0`` and ``k2_0`` filled;
    ``passed`` reflects the decay check alone (all constants finite).
    """
    if extent <= 0 or step <= 0:
        raise ValueError("extent and step must be positive")
    if kernel.dim == 1:
        n = int(round(extent / step))
        t = np.arange(-n, n + 1) * step
        w = 1.0 + t * t
        raw, where = [], []
        for order in range(MAX_ORDER + 1):
            v = np.abs(eval_kernel(kernel, t, order)) * w
            i = int(np.argmax(v))
            raw.append(float(v[i]))
            where.append(float(t[i]))
        k0 = eval_kernel(kernel, 0.0, 0)
        k2 = eval_kernel(kernel, 0.0, 2)
        c = [HEADROOM * r for r in raw]
        decays = all(_no_growth(np.abs(eval_kernel(kernel, t, k)) * w, np.abs(t), extent)
                     for k in range(MAX_ORDER + 1))
        ok = bool(decays and all(np.isfinite(c)) and all(x > 0 for x in c))
        return AdmissibilityReport(kernel.name, *c, k0=k0, k2_0=k2, raw_c=tuple(raw),
                                   argmax=tuple(where), passed=ok, checks={"global": ok})

    step2 = max(step, 2 * extent / 2000)
    n = int(round(extent / step2))
    g = np.arange(-n, n + 1) * step2
    T, U = np.meshgrid(g, g, indexing="ij")
    w = (1.0 + T * T + U * U) ** 1.5
    mixed, where = {}, {}
    decays = True
    for l1 in range(MAX_ORDER + 1):
        for l2 in range(MAX_ORDER + 1 - l1):
            v = np.abs(eval2(kernel, T, U, l1, l2)) * w
            i = np.unravel_index(int(np.argmax(v)), v.shape)
            mixed[(l1, l2)] = HEADROOM * float(v[i])
            where[(l1, l2)] = (float(T[i]), float(U[i]))
            decays = decays and _no_growth(v, np.maximum(np.abs(T), np.abs(U)), extent)
    by_order = [max(v for (a, b), v in mixed.items() if a + b == k) for k in range(MAX_ORDER + 1)]
    k0 = eval2(kernel, 0.0, 0.0)
    k2 = max(eval2(kernel, 0.0, 0.0, 2, 0), eval2(kernel, 0.0, 0.0, 0, 2))
    ok = bool(decays and all(np.isfinite(by_order)))
    return AdmissibilityReport(kernel.name, *by_order, k0=k0, k2_0=k2,
                               raw_c=tuple(v / HEADROOM for v in by_order),
                               argmax=tuple(where.items()), c_mixed=mixed,
                               passed=ok, checks={"global": ok})


def verify_local_property(kernel: KernelSpec, epsilon: float, extent: float = 20.0,
                          step: float = 1e-4) -> tuple[float, bool]:
    """Check positivity, the monotone tail and concavity on ``|t| <= epsilon``.

    Returns ``(beta, passed)`` where ``beta`` is the minimum of ``-K''`` on
    the window.  ``beta <= 0`` means concavity fails inside the window.

    For a 2D kernel the window is the square ``|t|, |u| <= epsilon`` and
    beta is the smaller of the two pure second-partial minima.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if kernel.dim == 1:
        n = int(np.ceil(epsilon / step))
        t = np.linspace(-epsilon, epsilon, 2 * n + 1)
        beta = float(np.min(-eval_kernel(kernel, t, 2)))
        positive = bool(np.all(eval_kernel(kernel, t, 0) > 0))
        m = int(np.ceil((extent - epsilon) / 1e-3))
        tail = epsilon + np.linspace(0, extent - epsilon, m + 1)[1:]
        k_eps = eval_kernel(kernel, epsilon, 0)
        below = bool(np.all(eval_kernel(kernel, tail, 0) < k_eps))
        return beta, bool(beta > 0 and positive and below)

    n = max(int(np.ceil(epsilon / max(step, epsilon / 200))), 1)
    g = np.linspace(-epsilon, epsilon, 2 * n + 1)
    T, U = np.meshgrid(g, g, indexing="ij")
    beta = float(min(np.min(-eval2(kernel, T, U, 2, 0)), np.min(-eval2(kernel, T, U, 0, 2))))
    positive = eval2(kernel, epsilon, 0.0) > 0 and eval2(kernel, 0.0, epsilon) > 0
    h = np.linspace(-extent, extent, 801)
    TT, UU = np.meshgrid(h, h, indexing="ij")
    vals = eval2(kernel, TT, UU)
    far_t = np.abs(TT) > epsilon
    far_u = np.abs(UU) > epsilon
    below = (np.all(vals[far_t] < eval2(kernel, epsilon, 0.0))
             and np.all(vals[far_u] < eval2(kernel, 0.0, epsilon)))
    return beta, bool(beta > 0 and positive and below)


def admissibility_report(kernel: KernelSpec, epsilon: float | None = None,
                         extent: float = 20.0, step: float = 1e-3) -> AdmissibilityReport:
    """Full report: global constants plus local constants at ``epsilon``."""
    if epsilon is None:
        if kernel.kind not in DEFAULT_EPSILON:
            raise ValueError("custom kernels need an explicit epsilon")
        epsilon = DEFAULT_EPSILON[kernel.kind]
    rep = estimate_global_constants(kernel, extent, step)
    beta, local_ok = verify_local_property(kernel, epsilon, extent)
    rep.epsilon = float(epsilon)
    rep.beta = beta
    rep.checks["local"] = local_ok
    rep.checks["k2_0_negative"] = rep.k2_0 < 0
    rep.passed = bool(rep.checks["global"] and local_ok and rep.k2_0 < 0)
    return rep
