"""Spike trains, uniform sampling, convolution matrices and noise."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kernels import KernelSpec, eval2, eval_kernel

__all__ = [
    "SpikeTrain",
    "SampleGrid",
    "SampledSignal",
    "NoiseSpec",
    "sample_signal",
    "sample_signal_2d",
    "convolution_matrix",
    "condition_number",
    "add_noise",
    "random_separated_support",
    "random_amplitudes",
    "spikes_to_vector",
    "write_signal_csv",
    "read_signal_csv",
    "write_spikes_csv",
    "read_spikes_csv",
]

# Sample positions N*t within this distance of an integer count as on-grid.
_SNAP_TOL = 1e-9


@dataclass(frozen=True)
class SpikeTrain:
    """Positions and signed amplitudes of a sparse measure.

    1D positions have shape ``(M,)`` and must be strictly increasing; 2D
    positions have shape ``(M, 2)`` and must be distinct and sorted
    lexicographically.  Zero amplitudes are rejected.
    """

    positions: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        amp = np.asarray(self.amplitudes, dtype=float).reshape(-1)
        if pos.ndim == 1 or pos.size == 0:
            pos = pos.reshape(-1)
        if pos.shape[0] != amp.shape[0]:
            raise ValueError("positions and amplitudes differ in length")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(amp))):
            raise ValueError("spike train must be finite")
        if np.any(amp == 0):
            raise ValueError("zero amplitudes are not stored in a spike train")
        if pos.ndim == 1:
            if np.any(np.diff(pos) <= 0):
                raise ValueError("1D positions must be strictly increasing")
        else:
            if pos.shape[1] != 2:
                raise ValueError("2D positions must have shape (M, 2)")
            order = np.lexsort((pos[:, 1], pos[:, 0]))
            if np.any(order != np.arange(len(order))):
                raise ValueError("2D positions must be sorted lexicographically")
            if len(pos) > 1 and np.any(np.all(np.diff(pos, axis=0) == 0, axis=1)):
                raise ValueError("2D positions must be distinct")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def from_unsorted(cls, positions, amplitudes):
        pos = np.asarray(positions, dtype=float)
        amp = np.asarray(amplitudes, dtype=float)
        if pos.ndim == 1:
            order = np.argsort(pos, kind="stable")
        else:
            order = np.lexsort((pos[:, 1], pos[:, 0]))
        return cls(pos[order], amp[order])

    @classmethod
    def empty(cls):
        return cls(np.zeros(0), np.zeros(0))

    def __len__(self):
        return len(self.amplitudes)

    @property
    def l1_mass(self):
        return float(np.abs(self.amplitudes).sum())

    def scaled(self, factor):
        return SpikeTrain(self.positions, factor * self.amplitudes)

    def min_separation(self):
        """Smallest distance between spikes (``inf`` for fewer than two)."""
        if len(self) < 2:
            return np.inf
        if self.positions.ndim == 1:
            return float(np.min(np.diff(self.positions)))
        d = np.abs(self.positions[:, None, :] - self.positions[None, :, :]).max(axis=2)
        np.fill_diagonal(d, np.inf)
        return float(d.min())


@dataclass(frozen=True)
class SampleGrid:
    """Uniform grid ``k/N`` restricted to ``[a, b]`` (endpoints included)."""

    n: int
    interval: tuple[float, float]

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("grid density n must be a positive integer")
        a, b = map(float, self.interval)
        if not b > a:
            raise ValueError("grid interval needs b > a")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "interval", (a, b))

    @property
    def indices(self) -> np.ndarray:
        a, b = self.interval
        lo = int(np.ceil(a * self.n - _SNAP_TOL))
        hi = int(np.floor(b * self.n + _SNAP_TOL))
        return np.arange(lo, hi + 1)

    @property
    def times(self) -> np.ndarray:
        return self.indices / self.n

    @property
    def step(self) -> float:
        return 1.0 / self.n

    def __len__(self):
        return len(self.indices)

    def index_of(self, t) -> np.ndarray:
        """Array position of grid-aligned times ``t`` (raises if off-grid)."""
        nt = np.atleast_1d(np.asarray(t, dtype=float)) * self.n
        k = np.rint(nt)
        if np.any(np.abs(nt - k) > 1e-6):
            raise ValueError("time is not on the sampling grid")
        pos = k.astype(int) - self.indices[0]
        if np.any(pos < 0) or np.any(pos >= len(self)):
            raise ValueError("time lies outside the grid interval")
        return pos


@dataclass(frozen=True)
class SampledSignal:
    grid: SampleGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.size != len(self.grid):
            raise ValueError("signal length does not match the grid")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise request: an l1 budget ``delta`` or a target SNR in dB."""

    mode: str
    level: float
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("l1_budget", "snr_db"):
            raise ValueError(f"unknown noise mode {self.mode!r}")
        if self.mode == "l1_budget" and self.level < 0:
            raise ValueError("l1 budget must be nonnegative")


def _grid_offsets(grid_idx, n, positions):
    # k - N t_m, with on-grid spikes snapped to exact integers so that the
    # direct and matrix paths evaluate the kernel at identical arguments.
    nt = positions * n
    snapped = np.rint(nt)
    nt = np.where(np.abs(nt - snapped) <= _SNAP_TOL * np.maximum(1.0, np.abs(nt)), snapped, nt)
    return grid_idx[:, None] - nt[None, :]


def sample_signal(kernel: KernelSpec, sigma: float, spikes: SpikeTrain,
                  grid: SampleGrid) -> SampledSignal:
    """Sample ``y[k] = sum_m c_m K((k/N - t_m)/sigma)`` on ``grid``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if len(spikes) == 0:
        return SampledSignal(grid, np.zeros(len(grid)))
    arg = _grid_offsets(grid.indices, grid.n, spikes.positions) / (grid.n * sigma)
    return SampledSignal(grid, eval_kernel(kernel, arg, 0) @ spikes.amplitudes)


def sample_signal_2d(kernel: KernelSpec, sigma: tuple[float, float], spikes: SpikeTrain,
                     grid_t: SampleGrid, grid_u: SampleGrid) -> np.ndarray:
    """Sample a bivariate stream on the product grid; returns shape (len_t, len_u)."""
    st, su = sigma
    if st <= 0 or su <= 0:
        raise ValueError("sigma_t and sigma_u must be positive")
    out = np.zeros((len(grid_t), len(grid_u)))
    if len(spikes) == 0:
        return out
    dt = _grid_offsets(grid_t.indices, grid_t.n, spikes.positions[:, 0]) / (grid_t.n * st)
    du = _grid_offsets(grid_u.indices, grid_u.n, spikes.positions[:, 1]) / (grid_u.n * su)
    for m, c in enumerate(spikes.amplitudes):
        out += c * eval2(kernel, dt[:, m][:, None], du[:, m][None, :])
    return out


def convolution_matrix(kernel: KernelSpec, sigma: float, grid: SampleGrid) -> np.ndarray:
    """Square matrix with entries ``K((j - k)/(N sigma))``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    idx = grid.indices
    diff = idx[:, None] - idx[None, :]
    return eval_kernel(kernel, diff / (grid.n * sigma), 0)


def condition_number(matrix) -> float:
    """2-norm condition number from the singular values (``inf`` if singular)."""
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("condition_number expects a square matrix")
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[-1] <= np.finfo(float).tiny:
        return float("inf")
    return float(s[0] / s[-1])


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def add_noise(y: SampledSignal, spec: NoiseSpec):
    """Add calibrated white noise in the sample domain.

    Returns ``(noisy, achieved_delta, achieved_snr_db)`` where
    ``achieved_delta`` is the l1 norm of the perturbation.
    """
    v = y.values
    if spec.mode == "l1_budget" and spec.level == 0:
        return y, 0.0, float("inf")
    e = _rng(spec.seed).standard_normal(v.size)
    if spec.mode == "l1_budget":
        e *= spec.level / np.abs(e).sum()
    else:
        power = v @ v
        if power == 0:
            raise ValueError("cannot set an SNR on the zero signal")
        e *= np.sqrt(power / (10.0 ** (spec.level / 10.0) * (e @ e)))
    delta = float(np.abs(e).sum())
    snr = float(10.0 * np.log10((v @ v) / (e @ e))) if v @ v > 0 else float("-inf")
    return SampledSignal(y.grid, v + e), delta, snr


def random_separated_support(count_target: int, interval, step: float, min_gap: float,
                             seed=0, max_rejections: int = 10_000) -> np.ndarray:
    """Sequentially draw grid positions that keep a minimum gap.

    Candidates are uniform on the ``step`` grid of ``interval`` and are kept
    only if they are at least ``min_gap`` away from every accepted point.
    Stops after ``count_target`` points or ``max_rejections`` rejections, so
    fewer points than requested may come back.  Output is sorted.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if min_gap < step * (1 - 1e-9):
        raise ValueError("min_gap must be at least one grid step")
    rng = _rng(seed)
    a, b = map(float, interval)
    lo = int(np.ceil(a / step - 1e-9))
    hi = int(np.floor(b / step + 1e-9))
    gap = int(np.ceil(min_gap / step - 1e-9))
    accepted: list[int] = []
    rejections = 0
    while len(accepted) < count_target and rejections < max_rejections:
        k = int(rng.integers(lo, hi + 1))
        if all(abs(k - j) >= gap for j in accepted):
            accepted.append(k)
        else:
            rejections += 1
    ks = np.sort(np.array(accepted, dtype=int))
    inv = 1.0 / step
    if abs(inv - round(inv)) < 1e-9:
        return ks / round(inv)
    return ks * step


def random_amplitudes(count: int, std: float = 1.0, seed=0) -> np.ndarray:
    """I.i.d. ``N(0, std^2)`` amplitudes; exact zeros are redrawn."""
    if std <= 0:
        raise ValueError("std must be positive")
    rng = _rng(seed)
    out = rng.normal(0.0, std, count)
    while np.any(out == 0):
        bad = out == 0
        out[bad] = rng.normal(0.0, std, int(bad.sum()))
    return out


def spikes_to_vector(spikes: SpikeTrain, grid: SampleGrid) -> np.ndarray:
    """Dense grid vector of a grid-aligned spike train."""
    x = np.zeros(len(grid))
    if len(spikes):
        np.add.at(x, grid.index_of(spikes.positions), spikes.amplitudes)
    return x


def write_signal_csv(path, signal: SampledSignal) -> None:
    """Write columns ``k, t, y``."""
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "t", "y"])
        for k, t, v in zip(signal.grid.indices, signal.grid.times, signal.values):
            w.writerow([int(k), repr(float(t)), repr(float(v))])


def read_signal_csv(path, n: int | None = None) -> SampledSignal:
    """Read a ``k, t, y`` file; ``n`` is inferred from ``k/t`` when omitted."""
    with open(Path(path), newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError("empty signal file")
    k = np.array([int(r["k"]) for r in rows])
    t = np.array([float(r["t"]) for r in rows])
    y = np.array([float(r["y"]) for r in rows])
    if np.any(np.diff(k) != 1):
        raise ValueError("signal rows must have consecutive k")
    if n is None:
        nz = np.nonzero(t)[0]
        if nz.size == 0:
            raise ValueError("cannot infer grid density from the file")
        n = int(round(k[nz[0]] / t[nz[0]]))
    grid = SampleGrid(n, (k[0] / n, k[-1] / n))
    if len(grid) != len(k) or grid.indices[0] != k[0]:
        raise ValueError("signal rows do not form a grid of density n")
    return SampledSignal(grid, y)


def write_spikes_csv(path, spikes: SpikeTrain) -> None:
    """Write columns ``t, c`` (1D spike trains only)."""
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "c"])
        for t, c in zip(spikes.positions, spikes.amplitudes):
            w.writerow([repr(float(t)), repr(float(c))])


def read_spikes_csv(path) -> SpikeTrain:
    with open(Path(path), newline="") as fh:
        rows = list(csv.DictReader(fh))
    return SpikeTrain.from_unsorted([float(r["t"]) for r in rows], [float(r["c"]) for r in rows])
