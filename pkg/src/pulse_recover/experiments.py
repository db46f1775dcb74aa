"""Seeded experiment runners that write ``results.csv``, ``metrics.json`` and ``plot.svg``.

Each runner is a pure function of its :class:`ExperimentConfig`.  Trial
``i`` draws everything it needs (support, amplitudes, noise) from
``numpy.random.default_rng(seed + i)``, so trials are independent and a
rerun reproduces the CSV byte for byte.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from . import plotting
from .bounds import theorem2_bound
from .certificate import (
    NearSingularError,
    eval_q,
    eval_q2,
    solve_certificate_1d,
    solve_certificate_2d,
    theoretical_bounds,
    theoretical_bounds_2d,
    verify_certificate,
    verify_certificate_2d,
)
from .kernels import admissibility_report, eval_kernel, get_kernel
from .l1 import (
    DEFAULT_REL_THRESHOLD,
    RANK_RTOL,
    L1Problem,
    SingularMatrixError,
    recovery_metrics,
    solve_l1,
    solve_least_squares,
)
from .signal import (
    NoiseSpec,
    SampledSignal,
    SampleGrid,
    SpikeTrain,
    add_noise,
    condition_number,
    convolution_matrix,
    random_amplitudes,
    random_separated_support,
    read_signal_csv,
    read_spikes_csv,
    spikes_to_vector,
)

__all__ = [
    "EXPERIMENTS",
    "ConfigError",
    "SolverFailure",
    "NuRange",
    "ExperimentConfig",
    "SweepResult",
    "transition_nu",
    "run_sweep_nu",
    "run_cond_number",
    "run_noisy_demo",
    "run_ls_vs_l1",
    "run_certify",
    "run_recover",
    "run_instability_demo",
    "run_experiment",
    "bound_audit_trials",
    "large_spike_recovery",
]

EXPERIMENTS = ("sweep_nu", "cond_number", "noisy_demo", "ls_vs_l1", "certify", "recover",
               "instability_demo")

# Solver settings recorded in every metrics report.
SOLVER_SETTINGS = {"feas_tol": 1e-9, "opt_tol": 1e-8, "cert_tol": 1e-7, "rank_rtol": RANK_RTOL,
                   "support_threshold_rel": DEFAULT_REL_THRESHOLD}


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


class SolverFailure(RuntimeError):
    """A solve needed by the experiment did not reach a certified answer."""


@dataclass(frozen=True)
class NuRange:
    start: float
    stop: float
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError("nu_range.step must be positive")
        if self.stop < self.start:
            raise ConfigError("nu_range.stop must not be below nu_range.start")

    def values(self) -> np.ndarray:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return np.round(self.start + self.step * np.arange(count), 10)


@dataclass
class ExperimentConfig:
    """Settings shared by all experiments; unused fields are ignored.

    ``noise`` is an l1 budget or target SNR; ``deltas`` lists the budgets of
    the noisy demo.  ``count_target`` caps the number of spikes per support;
    when unset, the separation sweep fills the interval until no more spikes
    fit and the single-instance demos place 5.
    """

    experiment: str = "sweep_nu"
    kernel: str = "gaussian"
    sigma: float = 0.1
    n_grid: int = 100
    interval: tuple = (-1.0, 1.0)
    nu_range: NuRange = field(default_factory=lambda: NuRange(0.8, 1.5, 0.05))
    trials_per_point: int = 10
    noise: NoiseSpec | None = None
    seed: int = 0
    output_dir: str | None = None
    # experiment-specific knobs
    nu: float | None = None
    count_target: int | None = None
    support_step: float = 0.01
    amplitude_std: float = 1.0
    deltas: tuple = (20.0, 60.0)
    dt_values: tuple = (0.2, 0.1, 0.05, 0.04, 0.025, 0.02, 0.01)
    t_eps_values: tuple | None = None
    support: list | None = None
    signs: list | None = None
    signal: str | None = None
    truth: str | None = None
    threshold: float | None = None
    bound: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if isinstance(self.nu_range, dict):
            try:
                self.nu_range = NuRange(**self.nu_range)
            except TypeError as exc:
                raise ConfigError(f"bad nu_range: {exc}") from exc
        if isinstance(self.noise, dict):
            try:
                self.noise = NoiseSpec(**self.noise)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad noise spec: {exc}") from exc
        try:
            a, b = (float(v) for v in self.interval)
        except (TypeError, ValueError) as exc:
            raise ConfigError("interval must be a pair [a, b]") from exc
        if not b > a:
            raise ConfigError("interval needs b > a")
        self.interval = (a, b)
        self.deltas = tuple(float(d) for d in self.deltas)
        self.dt_values = tuple(float(d) for d in self.dt_values)
        if self.t_eps_values is not None:
            self.t_eps_values = tuple(float(v) for v in self.t_eps_values)
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")
        if int(self.n_grid) != self.n_grid or self.n_grid < 1:
            raise ConfigError("n_grid must be a positive integer")
        if int(self.trials_per_point) != self.trials_per_point or self.trials_per_point < 1:
            raise ConfigError("trials_per_point must be at least 1")
        if self.amplitude_std <= 0:
            raise ConfigError("amplitude_std must be positive")
        if (self.count_target is not None and self.count_target < 1) or self.workers < 1:
            raise ConfigError("count_target and workers must be positive")
        if self.threshold is not None and self.threshold <= 0:
            raise ConfigError("threshold must be positive")
        if any(d < 0 for d in self.deltas) or any(d <= 0 for d in self.dt_values):
            raise ConfigError("deltas must be nonnegative and dt_values positive")
        if self.kernel not in ("gaussian", "cauchy"):
            raise ConfigError(f"unknown kernel {self.kernel!r}")

    @classmethod
    def from_dict(cls, data: dict, **overrides) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        merged = {**data, **{k: v for k, v in overrides.items() if v is not None}}
        if "delta" in merged:
            merged["noise"] = {"mode": "l1_budget", "level": merged.pop("delta")}
        if "snr" in merged:
            merged["noise"] = {"mode": "snr_db", "level": merged.pop("snr")}
        unknown = set(merged) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        try:
            return cls(**merged)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path, **overrides) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data, **overrides)

    @property
    def grid(self) -> SampleGrid:
        return SampleGrid(self.n_grid, self.interval)

    def out_dir(self) -> Path:
        path = Path(self.output_dir) if self.output_dir else Path("results") / self.experiment
        path.mkdir(parents=True, exist_ok=True)
        return path

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("output_dir")
        return d


@dataclass
class SweepResult:
    rows: list  # (nu, success_rate, mean_l1_error, trials)
    transition: float | None = None

    def __post_init__(self):
        for r in self.rows:
            if not 0.0 <= r[1] <= 1.0:
                raise ValueError("success rate outside [0, 1]")


# ---------------------------------------------------------------- helpers

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (NuRange, NoiseSpec)):
        return _jsonable(asdict(obj))
    return obj


def _write_json(path, data):
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


# spikes per support when count_target is unset
FILL_COUNT = 1000
DEMO_COUNT = 5
# noisy demo: SNR reached at the first noise budget unless configured otherwise
DEMO_SNR_DB = 27.5


def _draw_instance(cfg: ExperimentConfig, nu: float, rng, default_count: int = DEMO_COUNT):
    """Random grid-aligned support at separation ``nu * sigma`` and normal amplitudes."""
    count = default_count if cfg.count_target is None else cfg.count_target
    # distinct grid points are always one step apart
    gap = max(nu * cfg.sigma, cfg.support_step)
    pos = random_separated_support(count, cfg.interval, cfg.support_step, gap, rng)
    amp = random_amplitudes(len(pos), cfg.amplitude_std, rng)
    return SpikeTrain(pos, amp)


def transition_nu(rows) -> float | None:
    """Smallest swept nu from which every larger swept nu has success rate 1."""
    trans = None
    for nu, rate, *_ in sorted(rows, key=lambda r: r[0], reverse=True):
        if rate < 1.0:
            break
        trans = nu
    return trans


# ---------------------------------------------------------------- sweep

def _sweep_trial(args):
    K, cfg, nu, trial = args
    grid = cfg.grid
    rng = np.random.default_rng(cfg.seed + trial)
    spikes = _draw_instance(cfg, nu, rng, FILL_COUNT)
    x = spikes_to_vector(spikes, grid)
    sol = solve_l1(L1Problem(K, K @ x, 0.0))
    m = recovery_metrics(sol.x_hat, x, grid, cfg.threshold)
    ok = sol.status == "optimal" and m["exact_support"]
    return ok, m["l1_error"], sol.status, len(spikes)


def run_sweep_nu(cfg: ExperimentConfig, write: bool = True) -> SweepResult:
    """Noise-free success rate of exact support recovery versus separation."""
    grid = cfg.grid
    K = convolution_matrix(get_kernel(cfg.kernel), cfg.sigma, grid)
    nus = cfg.nu_range.values()
    jobs = [(K, cfg, float(nu), t) for nu in nus for t in range(cfg.trials_per_point)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as ex:
            results = list(ex.map(_sweep_trial, jobs, chunksize=4))
    else:
        results = [_sweep_trial(j) for j in jobs]
    rows, statuses, sizes = [], {}, []
    T = cfg.trials_per_point
    for i, nu in enumerate(nus):
        chunk = results[i * T:(i + 1) * T]
        succ = sum(r[0] for r in chunk)
        rows.append((float(nu), succ / T, float(np.mean([r[1] for r in chunk])), T))
        for r in chunk:
            statuses[r[2]] = statuses.get(r[2], 0) + 1
        sizes.append([r[3] for r in chunk])
    res = SweepResult(rows, transition_nu(rows))
    if write:
        out = cfg.out_dir()
        _write_csv(out / "results.csv", ["nu", "success_rate", "mean_l1_error", "trials"], rows)
        _write_json(out / "metrics.json", {
            "experiment": "sweep_nu", "config": cfg.to_dict(), "solver": SOLVER_SETTINGS,
            "transition_nu": res.transition,
            "transition_at_range_start": res.transition is not None
            and abs(res.transition - float(nus[0])) < 1e-12,
            "solver_status_counts": statuses,
            "spikes_per_trial": {"min": int(np.min(sizes)), "max": int(np.max(sizes))},
        })
        plotting.plot_sweep(out / "results.csv", out / "plot.svg",
                            title=f"{cfg.kernel}, sigma={cfg.sigma:g}")
    return res


# ---------------------------------------------------------------- conditioning

def run_cond_number(cfg: ExperimentConfig, write: bool = True) -> list:
    """Condition number of the kernel's convolution matrix versus step ``dt``."""
    kernel = get_kernel(cfg.kernel)
    rows = []
    for dt in sorted(cfg.dt_values, reverse=True):
        n = round(1.0 / dt)
        if abs(n * dt - 1.0) > 1e-9:
            raise ConfigError(f"dt={dt} is not the reciprocal of an integer")
        K = convolution_matrix(kernel, cfg.sigma, SampleGrid(n, cfg.interval))
        rows.append((float(dt), condition_number(K)))
    if write:
        out = cfg.out_dir()
        _write_csv(out / "results.csv", ["dt", "cond"], rows)
        _write_json(out / "metrics.json", {"experiment": "cond_number", "config": cfg.to_dict(),
                                           "cond": {repr(d): c for d, c in rows}})
        plotting.plot_cond(out / "results.csv", out / "plot.svg",
                           title=f"{cfg.kernel}, sigma={cfg.sigma:g}")
    return rows


# ---------------------------------------------------------------- noisy demo

def _bound_entry(report, nu, cfg, delta, observed):
    br = theorem2_bound(report, nu, cfg.n_grid, cfg.sigma, delta)
    entry = {"valid": br.valid, "bound": br.bound, "simplified_bound": br.simplified_bound,
             "denominator": br.denominator, "gamma": br.gamma, "d1": br.d1, "d2": br.d2,
             "nu": nu, "holds": None}
    if br.valid:
        entry["holds"] = bool(observed <= br.bound)
    return entry


def large_spike_recovery(x_hat, x_true, grid: SampleGrid, window: float, fraction=0.5):
    """Share of large true spikes recovered at their exact grid position.

    A spike with ``|c| >= fraction * max|c|`` counts as recovered when
    ``x_hat`` has the same sign there and its largest magnitude within
    ``window`` of the spike sits at that very grid point.
    """
    xt = np.asarray(x_true, dtype=float)
    xh = np.asarray(x_hat, dtype=float)
    if not np.any(xt):
        return float("nan"), 0
    t = grid.times
    big = np.flatnonzero(np.abs(xt) >= fraction * np.abs(xt).max())
    hits = 0
    for i in big:
        win = np.flatnonzero(np.abs(t - t[i]) <= window + 1e-12)
        j = win[np.argmax(np.abs(xh[win]))]
        hits += int(j == i and np.sign(xh[i]) == np.sign(xt[i]))
    return hits / big.size, int(big.size)


def run_noisy_demo(cfg: ExperimentConfig, write: bool = True) -> dict:
    """One random stream recovered from measurements at each noise budget.

    The clean signal depends only on ``seed``; the noise for budget ``i`` is
    drawn from ``seed + 1 + i``.  The amplitudes are rescaled so that the
    first budget in ``deltas`` produces the SNR of an ``snr_db`` noise spec
    (``DEMO_SNR_DB`` when no spec is given); an ``l1_budget`` spec keeps the
    drawn amplitudes (standard deviation ``amplitude_std``) and replaces
    ``deltas`` by its single level.
    """
    grid = cfg.grid
    nu = 0.7 if cfg.nu is None else cfg.nu
    kernel = get_kernel(cfg.kernel)
    K = convolution_matrix(kernel, cfg.sigma, grid)
    spikes = _draw_instance(cfg, nu, np.random.default_rng(cfg.seed))
    deltas = cfg.deltas
    target_snr = DEMO_SNR_DB
    if cfg.noise is not None:
        if cfg.noise.mode == "snr_db":
            target_snr = cfg.noise.level
        else:
            deltas, target_snr = (float(cfg.noise.level),), None
    noises = [add_noise(SampledSignal(grid, np.zeros(len(grid))),
                        NoiseSpec("l1_budget", d, cfg.seed + 1 + i))[0].values
              for i, d in enumerate(deltas)]
    if target_snr is not None and len(spikes):
        y0 = K @ spikes_to_vector(spikes, grid)
        e0 = noises[0]
        if not e0 @ e0 > 0:
            raise ConfigError("an SNR target needs a positive first noise budget")
        if not y0 @ y0 > 0:
            raise ConfigError("an SNR target needs a nonzero clean signal")
        scale = np.sqrt(10 ** (target_snr / 10) * (e0 @ e0) / (y0 @ y0))
        spikes = spikes.scaled(scale)
    x = spikes_to_vector(spikes, grid)
    y = K @ x
    report = admissibility_report(kernel)
    cols = {"k": grid.indices, "t": grid.times, "y_clean": y, "x_true": x}
    per_delta = {}
    for d, e in zip(deltas, noises):
        achieved = float(np.abs(e).sum())
        snr = float(10 * np.log10((y @ y) / (e @ e))) if e @ e > 0 else float("inf")
        sol = solve_l1(L1Problem(K, y + e, achieved))
        if sol.status != "optimal":
            raise SolverFailure(f"noisy demo solve at delta={d} ended with {sol.status}")
        m = recovery_metrics(sol.x_hat, x, grid, cfg.threshold)
        rate, n_big = large_spike_recovery(sol.x_hat, x, grid, nu * cfg.sigma / 2)
        tag = plotting._delta_tag(d)
        cols[f"y_noisy_{tag}"] = y + e
        cols[f"x_hat_{tag}"] = sol.x_hat
        entry = {"delta": d, "achieved_delta": achieved, "snr_db": snr, "status": sol.status,
                 "residual_l1": sol.residual_l1, "large_spike_exact_rate": rate,
                 "n_large_spikes": n_big, **m}
        if d > 0:
            entry["theorem2"] = _bound_entry(report, nu, cfg, achieved, m["l1_error"])
        per_delta[repr(d)] = entry
    if write:
        out = cfg.out_dir()
        _write_csv(out / "results.csv", list(cols), zip(*cols.values()))
        _write_json(out / "metrics.json", {
            "experiment": "noisy_demo", "config": cfg.to_dict(), "solver": SOLVER_SETTINGS,
            "nu": nu, "n_spikes": len(spikes), "runs": per_delta})
        plotting.plot_recovery(out / "results.csv", out / "plot.svg", deltas,
                               title=f"{cfg.kernel}, nu={nu:g}")
    return per_delta


# ---------------------------------------------------------------- LS vs l1

def run_ls_vs_l1(cfg: ExperimentConfig, write: bool = True) -> dict:
    """Noise-free recovery by l1 minimization and by direct inversion."""
    grid = cfg.grid
    nu = 1.2 if cfg.nu is None else cfg.nu
    K = convolution_matrix(get_kernel(cfg.kernel), cfg.sigma, grid)
    spikes = _draw_instance(cfg, nu, np.random.default_rng(cfg.seed))
    x = spikes_to_vector(spikes, grid)
    y = K @ x
    sol = solve_l1(L1Problem(K, y, 0.0))
    if sol.status != "optimal":
        raise SolverFailure(f"l1 solve ended with {sol.status}")
    m_l1 = recovery_metrics(sol.x_hat, x, grid, cfg.threshold)
    try:
        x_ls = solve_least_squares(K, y)
        ls_error = None
    except SingularMatrixError as exc:
        x_ls = np.full_like(x, np.nan)
        ls_error = str(exc)
    m_ls = recovery_metrics(x_ls, x, grid, cfg.threshold) if ls_error is None else None
    result = {"condition_number": condition_number(K), "n_spikes": len(spikes), "nu": nu,
              "l1": m_l1, "least_squares": m_ls, "least_squares_error": ls_error}
    if write:
        out = cfg.out_dir()
        _write_csv(out / "results.csv", ["k", "t", "x_true", "x_l1", "x_ls"],
                   zip(grid.indices, grid.times, x, sol.x_hat, x_ls))
        _write_json(out / "metrics.json", {"experiment": "ls_vs_l1", "config": cfg.to_dict(),
                                           "solver": SOLVER_SETTINGS, **result})
        plotting.plot_ls_vs_l1(out / "results.csv", out / "plot.svg",
                               title=f"{cfg.kernel}, nu={nu:g}, dt={grid.step:g}")
    return result


# ---------------------------------------------------------------- instability

def _difference_signal(kernel, sigma, t0, t_eps):
    def y(t):
        return (eval_kernel(kernel, (t0 - t) / sigma, 0)
                - eval_kernel(kernel, (t0 + t_eps - t) / sigma, 0))
    return y


def max_abs_difference(kernel, sigma, t0, t_eps, step=None):
    """``max_t |K((t0-t)/s) - K((t0+t_eps-t)/s)|`` by grid search plus refinement."""
    if t_eps == 0:
        return 0.0, t0
    y = _difference_signal(kernel, sigma, t0, t_eps)
    step = sigma * 1e-3 if step is None else step
    lo, hi = t0 - 10 * sigma, t0 + t_eps + 10 * sigma
    t = np.arange(lo, hi + step, step)
    v = np.abs(y(t))
    i = int(np.argmax(v))
    a, b = t[max(i - 1, 0)], t[min(i + 1, t.size - 1)]
    r = minimize_scalar(lambda s: -abs(float(y(s))), bounds=(a, b), method="bounded",
                        options={"xatol": 1e-12})
    if -r.fun >= v[i]:
        return float(-r.fun), float(r.x)
    return float(v[i]), float(t[i])


def run_instability_demo(cfg: ExperimentConfig, write: bool = True) -> list:
    """``||y||_inf`` of two opposite-sign atoms as their spacing shrinks."""
    kernel = get_kernel(cfg.kernel)
    t_eps = cfg.t_eps_values
    if t_eps is None:
        t_eps = tuple(np.round(np.linspace(0.0, cfg.sigma, 21), 12))
    rows = []
    for te in sorted(t_eps):
        peak, _ = max_abs_difference(kernel, cfg.sigma, 0.0, te)
        rows.append((float(te), peak))
    if write:
        out = cfg.out_dir()
        _write_csv(out / "results.csv", ["t_eps", "max_abs_y"], rows)
        _write_json(out / "metrics.json", {"experiment": "instability_demo",
                                           "config": cfg.to_dict(), "rows": rows})
        plotting.plot_instability(out / "results.csv", out / "plot.svg",
                                  title=f"{cfg.kernel}, sigma={cfg.sigma:g}")
    return rows


# ---------------------------------------------------------------- certify

def run_certify(cfg: ExperimentConfig, write: bool = True) -> dict:
    """Solve and verify the dual certificate for a support given in sigma units."""
    if not cfg.support:
        raise ConfigError("certify needs a nonempty support")
    support = np.asarray(cfg.support, dtype=float)
    signs = np.ones(len(support)) if cfg.signs is None else np.asarray(cfg.signs, dtype=float)
    two_d = support.ndim == 2
    if two_d and support.shape[1] != 2:
        raise ConfigError("2D support points must be pairs")
    kernel = get_kernel(cfg.kernel, dim=2 if two_d else 1)
    try:
        if two_d:
            cert = solve_certificate_2d(kernel, support, signs)
            ver = verify_certificate_2d(cert)
        else:
            cert = solve_certificate_1d(kernel, support, signs)
            ver = verify_certificate(cert)
    except NearSingularError as exc:
        raise SolverFailure(f"certificate system: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    report = {
        "kernel": cfg.kernel, "dim": 2 if two_d else 1, "n_spikes": len(support),
        "max_interp_residual": ver.max_interp_residual,
        "max_gradient_residual": ver.max_gradient_residual,
        "max_abs_q_off_support": ver.max_abs_q_off_support,
        "argmax_off_support": ver.argmax_off_support,
        "near_region_margin": ver.near_region_margin,
        "far_region_margin": ver.far_region_margin,
        "hessian_negative_definite": ver.hessian_negative_definite,
        "valid": ver.valid, "condition": cert.condition,
    }
    if cfg.nu is not None:
        adm = admissibility_report(kernel)
        tb = theoretical_bounds_2d(adm, cfg.nu) if two_d else theoretical_bounds(adm, cfg.nu)
        report["theory"] = _jsonable({k: v for k, v in asdict(tb).items()})
    if write:
        out = cfg.out_dir()
        if two_d:
            lo, hi = support.min(axis=0) - 3, support.max(axis=0) + 3
            tt = np.linspace(lo[0], hi[0], 121)
            uu = np.linspace(lo[1], hi[1], 121)
            T, U = np.meshgrid(tt, uu, indexing="ij")
            q = eval_q2(cert, T.ravel(), U.ravel())
            _write_csv(out / "results.csv", ["t", "u", "q"], zip(T.ravel(), U.ravel(), q))
            plotting.plot_certificate_2d(out / "results.csv", out / "plot.svg",
                                         title=f"{cfg.kernel} x {cfg.kernel} certificate")
        else:
            t = np.linspace(support.min() - 5, support.max() + 5, 2001)
            _write_csv(out / "results.csv", ["t", "q"], zip(t, eval_q(cert, t, 0)))
            plotting.plot_certificate(out / "results.csv", out / "plot.svg",
                                      title=f"{cfg.kernel} certificate")
        _write_json(out / "metrics.json", {"experiment": "certify", "config": cfg.to_dict(),
                                           "report": report})
    return report


# ---------------------------------------------------------------- recover

def run_recover(cfg: ExperimentConfig, write: bool = True) -> dict:
    """Recover a spike train from a signal CSV (columns ``k, t, y``)."""
    if not cfg.signal:
        raise ConfigError("recover needs a signal CSV path")
    try:
        sig = read_signal_csv(cfg.signal, cfg.n_grid)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read signal {cfg.signal}: {exc}") from exc
    grid = sig.grid
    delta = 0.0
    if cfg.noise is not None:
        if cfg.noise.mode != "l1_budget":
            raise ConfigError("recover needs an l1 budget (delta), not an SNR")
        delta = cfg.noise.level
    kernel = get_kernel(cfg.kernel)
    K = convolution_matrix(kernel, cfg.sigma, grid)
    sol = solve_l1(L1Problem(K, sig.values, delta))
    metrics = {"experiment": "recover", "config": cfg.to_dict(), "solver": SOLVER_SETTINGS,
               "status": sol.status, "objective": sol.objective,
               "residual_l1": sol.residual_l1, "iterations": sol.iterations,
               "duality_gap": sol.duality_gap, "polished": sol.polished}
    thr = cfg.threshold
    peak = np.abs(sol.x_hat).max(initial=0.0)
    thr_abs = thr if thr is not None else DEFAULT_REL_THRESHOLD * peak
    det = np.flatnonzero(np.abs(sol.x_hat) > thr_abs) if peak > 0 else np.array([], int)
    metrics["detected"] = {"t": grid.times[det], "c": sol.x_hat[det]}
    x_true = None
    if cfg.truth:
        try:
            x_true = spikes_to_vector(read_spikes_csv(cfg.truth), grid)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read truth {cfg.truth}: {exc}") from exc
        metrics["recovery"] = recovery_metrics(sol.x_hat, x_true, grid, thr)
    if cfg.bound:
        if cfg.nu is not None:
            nu = cfg.nu
        else:
            pos = grid.times[det] if x_true is None else grid.times[np.flatnonzero(x_true)]
            nu = float(np.diff(pos).min() / cfg.sigma) if pos.size > 1 else float("inf")
        if delta > 0 and math.isfinite(nu):
            observed = (metrics["recovery"]["l1_error"] if x_true is not None else float("nan"))
            entry = _bound_entry(admissibility_report(kernel), nu, cfg, delta, observed)
            if x_true is None:
                entry["holds"] = None
            metrics["theorem2"] = entry
        else:
            metrics["theorem2"] = {"valid": False, "nu": nu,
                                   "reason": "bound needs delta > 0 and two or more spikes"}
    if write:
        out = cfg.out_dir()
        _write_csv(out / "results.csv", ["k", "t", "x_hat"], zip(grid.indices, grid.times, sol.x_hat))
        _write_json(out / "metrics.json", metrics)
    if sol.status != "optimal":
        raise SolverFailure(f"recovery solve ended with {sol.status}")
    return metrics


# ---------------------------------------------------------------- dispatch

_RUNNERS = {
    "sweep_nu": run_sweep_nu,
    "cond_number": run_cond_number,
    "noisy_demo": run_noisy_demo,
    "ls_vs_l1": run_ls_vs_l1,
    "certify": run_certify,
    "recover": run_recover,
    "instability_demo": run_instability_demo,
}


def run_experiment(cfg: ExperimentConfig, write: bool = True):
    return _RUNNERS[cfg.experiment](cfg, write=write)


def bound_audit_trials(kernel: str = "gaussian", sigma: float = 0.1, n_grid: int = 100,
                       nu: float = 2.0, delta: float = 0.5, trials: int = 20, seed: int = 0,
                       count_target: int = FILL_COUNT) -> list[dict]:
    """Noisy recoveries audited against the worst-case l1 error bound.

    Each trial draws a support at separation ``nu``, unit-variance
    amplitudes and noise of l1 norm ``delta`` from ``default_rng(seed + i)``.
    """
    cfg = ExperimentConfig(experiment="recover", kernel=kernel, sigma=sigma, n_grid=n_grid,
                           count_target=count_target, seed=seed)
    grid = cfg.grid
    spec = get_kernel(kernel)
    K = convolution_matrix(spec, sigma, grid)
    report = admissibility_report(spec)
    out = []
    for i in range(trials):
        rng = np.random.default_rng(seed + i)
        spikes = _draw_instance(cfg, nu, rng)
        x = spikes_to_vector(spikes, grid)
        noisy, achieved, _ = add_noise(SampledSignal(grid, K @ x), NoiseSpec("l1_budget", delta, rng))
        sol = solve_l1(L1Problem(K, noisy.values, achieved))
        err = float(np.abs(sol.x_hat - x).sum())
        entry = _bound_entry(report, nu, cfg, achieved, err)
        entry.update(status=sol.status, l1_error=err, trial=i)
        out.append(entry)
    return out
