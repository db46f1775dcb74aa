"""SVG figures for the experiment outputs.

Every figure is drawn from a results CSV on disk, never from in-memory
state, so a plot can only show what the CSV records.  The SVG writer is
configured for reproducible output (fixed hash salt, no timestamp).
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["read_columns", "plot_sweep", "plot_cond", "plot_recovery", "plot_ls_vs_l1",
           "plot_instability", "plot_certificate", "plot_certificate_2d"]

_RC = {"svg.hashsalt": "pulse-recover", "svg.fonttype": "path", "figure.figsize": (6.4, 4.0),
       "axes.grid": True, "grid.alpha": 0.3}


def read_columns(path) -> dict[str, list[float]]:
    """Read a header-first CSV into float columns."""
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols: dict[str, list[float]] = {h: [] for h in header}
        for row in reader:
            for h, v in zip(header, row):
                cols[h].append(float(v))
    return cols


def _save(fig, out):
    fig.tight_layout()
    fig.savefig(Path(out), format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_sweep(csv_path, out, title=""):
    c = read_columns(csv_path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.step(c["nu"], c["success_rate"], where="mid", marker="o")
        ax.set_ylim(-0.05, 1.05)
        ax.set_xlabel("separation constant nu")
        ax.set_ylabel("success rate")
        ax.set_title(title)
        _save(fig, out)


def plot_cond(csv_path, out, title=""):
    c = read_columns(csv_path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.semilogy(c["dt"], c["cond"], marker="o")
        ax.set_xlabel("discretization step dt")
        ax.set_ylabel("condition number")
        ax.set_title(title)
        _save(fig, out)


def _stems(ax, t, v, **kw):
    nz = [(a, b) for a, b in zip(t, v) if b != 0]
    if nz:
        ts, vs = zip(*nz)
        ax.vlines(ts, 0, vs, **{k: kw[k] for k in ("colors", "linewidth") if k in kw})
        ax.plot(ts, vs, linestyle="none", marker=kw.get("marker", "o"),
                color=kw.get("colors"), label=kw.get("label"), markerfacecolor="none")


def plot_recovery(csv_path, out, deltas, title=""):
    """Noisy measurements, true spikes and recovered spikes for each budget."""
    c = read_columns(csv_path)
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(len(deltas), 1, squeeze=False,
                                 figsize=(6.4, 3.2 * len(deltas)))
        for ax, d in zip(axes[:, 0], deltas):
            tag = _delta_tag(d)
            ax.plot(c["t"], c[f"y_noisy_{tag}"], color="0.6", linewidth=1, label="measurements")
            _stems(ax, c["t"], c["x_true"], colors="C0", linewidth=1, marker="o", label="true")
            _stems(ax, c["t"], c[f"x_hat_{tag}"], colors="C3", linewidth=1, marker="x",
                   label="recovered")
            ax.set_title(f"{title} delta={d:g}".strip())
            ax.legend(loc="upper right", fontsize="small")
        axes[-1, 0].set_xlabel("t")
        _save(fig, out)


def plot_ls_vs_l1(csv_path, out, title=""):
    c = read_columns(csv_path)
    with plt.rc_context(_RC):
        fig, (a1, a2) = plt.subplots(2, 1, figsize=(6.4, 6.0), sharex=True)
        _stems(a1, c["t"], c["x_true"], colors="C0", linewidth=1, marker="o", label="true")
        _stems(a1, c["t"], c["x_l1"], colors="C3", linewidth=1, marker="x", label="l1")
        a1.legend(loc="upper right", fontsize="small")
        a1.set_title(title)
        a2.plot(c["t"], c["x_ls"], color="C2", linewidth=1, label="least squares")
        a2.legend(loc="upper right", fontsize="small")
        a2.set_xlabel("t")
        _save(fig, out)


def plot_instability(csv_path, out, title=""):
    c = read_columns(csv_path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(c["t_eps"], c["max_abs_y"], marker="o")
        ax.set_xlabel("spike spacing t_eps")
        ax.set_ylabel("max |y|")
        ax.set_title(title)
        _save(fig, out)


def plot_certificate(csv_path, out, title=""):
    c = read_columns(csv_path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(c["t"], c["q"], linewidth=1)
        ax.axhline(1.0, color="0.5", linestyle="--", linewidth=0.8)
        ax.axhline(-1.0, color="0.5", linestyle="--", linewidth=0.8)
        ax.set_xlabel("t (sigma units)")
        ax.set_ylabel("q(t)")
        ax.set_title(title)
        _save(fig, out)


def plot_certificate_2d(csv_path, out, title=""):
    """Heat map of ``q(t, u)`` from a ``t, u, q`` table on a product grid."""
    c = read_columns(csv_path)
    t, u, q = (np.asarray(c[k]) for k in ("t", "u", "q"))
    tt, uu = np.unique(t), np.unique(u)
    Q = q.reshape(tt.size, uu.size)
    with plt.rc_context({**_RC, "axes.grid": False}):
        fig, ax = plt.subplots(figsize=(5.2, 4.4))
        im = ax.imshow(Q.T, origin="lower", extent=(tt[0], tt[-1], uu[0], uu[-1]),
                       cmap="RdBu_r", vmin=-1, vmax=1, aspect="auto")
        fig.colorbar(im, ax=ax, label="q")
        ax.set_xlabel("t (sigma units)")
        ax.set_ylabel("u (sigma units)")
        ax.set_title(title)
        _save(fig, out)


def _delta_tag(d) -> str:
    return f"d{d:g}".replace(".", "p")
