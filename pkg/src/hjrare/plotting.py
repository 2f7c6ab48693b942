"""Matplotlib figures written next to the CSV output (``--plot``)."""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

COLORS = ["#0072b2", "#e69f00", "#009e72", "#d55c00", "#cc79a7", "#56b4e9"]

STYLE = {
    "axes.prop_cycle": matplotlib.cycler(color=COLORS),
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "axes.grid": True,
    "grid.color": "#dddddd",
    "grid.linewidth": 0.5,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def new_figure(figsize=(5.0, 3.5)):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize)
    return fig, ax


def save(fig, out_dir, name, formats=("png",)) -> list[str]:
    """Write ``fig`` as ``out_dir/name.<fmt>`` and close it."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    with plt.rc_context(STYLE):
        for fmt in formats:
            p = os.path.join(out_dir, f"{name}.{fmt}")
            fig.savefig(p)
            paths.append(p)
    plt.close(fig)
    return paths


def plot_table1(rows, out_dir, name="table1"):
    """Estimate against T, one line per epsilon; open markers are references."""
    fig, ax = new_figure()
    with plt.rc_context(STYLE):
        for i, eps in enumerate(sorted({r["epsilon"] for r in rows}, reverse=True)):
            sub = sorted((r for r in rows if r["epsilon"] == eps), key=lambda r: r["T"])
            T = [r["T"] for r in sub]
            est = np.array([r["estimate"] for r in sub])
            err = est * np.array([r["rel_err"] for r in sub])
            col = COLORS[i % len(COLORS)]
            ax.errorbar(T, est, yerr=err, marker="o", color=col, capsize=2, label=f"eps={eps:g}")
            ref = [r["reference"] for r in sub]
            if np.all(np.isfinite(ref)):
                ax.plot(T, ref, linestyle="none", marker="s", mfc="none", color=col)
        ax.set_xscale("log", base=2)
        ax.set_yscale("log")
        ax.set_xlabel("T")
        ax.set_ylabel("P(exit before T)")
        ax.legend()
    return save(fig, out_dir, name)


def plot_table2(rows, out_dir, name="table2"):
    fig, ax = new_figure()
    with plt.rc_context(STYLE):
        n = [r["n"] for r in rows]
        est = np.array([r["estimate"] for r in rows])
        ax.errorbar(n, est, yerr=est * np.array([r["rel_err"] for r in rows]),
                    marker="o", capsize=2, label="estimate")
        ref = [r["reference"] for r in rows]
        if np.all(np.isfinite(ref)):
            ax.plot(n, ref, linestyle="none", marker="s", mfc="none", label="reference")
        ax.set_yscale("log")
        ax.set_xlabel("n")
        ax.set_ylabel("P(exit before T)")
        ax.legend()
    return save(fig, out_dir, name)


def plot_objective(cs, curves, c_star, out_dir, name="minmax"):
    """``c -> g(y) + S^c(x0, y) - cT`` for both boundary points."""
    fig, ax = new_figure()
    with plt.rc_context(STYLE):
        for y, vals in curves.items():
            ax.plot(cs, vals, label=f"y={y:g}")
        ax.axvline(c_star, color="#444444", linestyle=":", linewidth=1)
        ax.set_xlabel("c")
        ax.set_ylabel("objective")
        ax.legend()
    return save(fig, out_dir, name)


def plot_profile(zs, ps, out_dir, name="potential"):
    fig, ax = new_figure()
    with plt.rc_context(STYLE):
        ax.plot(zs, ps)
        ax.set_xlabel("z")
        ax.set_ylabel("p^c(z)")
    return save(fig, out_dir, name)


def plot_batches(batch_means, out_dir, name="batches"):
    fig, ax = new_figure()
    with plt.rc_context(STYLE):
        b = np.asarray(batch_means)
        ax.plot(np.arange(b.size), b, marker=".", linestyle="none")
        ax.axhline(b.mean(), color="#444444", linewidth=1)
        ax.set_xlabel("batch")
        ax.set_ylabel("batch mean")
    return save(fig, out_dir, name)


def plot_duality(report, out_dir, name="duality"):
    fig, ax = new_figure()
    with plt.rc_context(STYLE):
        if report.t_rows:
            t = [r[0] for r in report.t_rows]
            ax.plot(t, [r[1] for r in report.t_rows], marker="o", label="sup_c {S^c - ct}")
            ax.plot(t, [r[2] for r in report.t_rows], marker="s", mfc="none", label="grid action")
        ax.set_xlabel("t")
        ax.set_ylabel("action")
        ax.legend()
    return save(fig, out_dir, name)
