"""Figure rendering for run outputs (PNG files next to the CSV tables).

Every renderer reads the delimited files a driver produced, so figures can
be (re)built later with the `report` subcommand without recomputing.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .config import RunConfig
from .potentials import TrapParams, eval_initial, eval_quenched

DPI = 180


def _read_table(path: str) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) if v else np.nan for v in row] for row in reader
                if row and row[0] != "Gamma_total"]
    return header, np.array(rows)


def potential_figure(trap: TrapParams, path: str) -> str:
    x = np.linspace(-1.2, 1.2, 2000)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(x, eval_initial(x, trap), "k--", lw=1.2, label="initial well $V_I$")
    ax.plot(x, eval_quenched(x, trap), "C0-", lw=1.5, label="quenched trap $V$")
    ax.axvline(trap.cut, color="C3", lw=0.8, ls=":", label=r"region cut $a$")
    ax.set_xlabel("x")
    ax.set_ylabel("V(x)")
    ax.legend(loc="lower right", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def decay_figure(timeseries_csv: str, path: str) -> str:
    header, data = _read_table(timeseries_csv)
    t, p, s = data[:, 0], data[:, 1], data[:, 2]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.plot(t, p, "C0-", label="$P_N(t)$")
    ax1.plot(t, s, "C1--", label="$S_N(t)$")
    ax1.set_xlabel("t")
    ax1.set_ylabel("probability")
    ax1.legend(fontsize=9)
    positive = (p > 0) & (s > 0)
    ax2.semilogy(t[positive], p[positive], "C0-")
    ax2.semilogy(t[positive], s[positive], "C1--")
    ax2.set_xlabel("t")
    ax2.set_ylabel("probability (log)")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def fcs_figure(fcs_csv: str, path: str) -> str:
    header, data = _read_table(fcs_csv)
    t = data[:, 0]
    p = data[:, 1:]
    fig, ax = plt.subplots(figsize=(6, 4))
    mesh = ax.pcolormesh(
        t, np.arange(p.shape[1]), p.T, cmap="viridis", shading="nearest"
    )
    fig.colorbar(mesh, ax=ax, label="$p(n, t)$")
    ax.set_xlabel("t")
    ax.set_ylabel("n atoms inside the trap")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def zeno_figure(summary_csv: str, path: str) -> str:
    header, data = _read_table(summary_csv)
    n = data[:, header.index("N")]
    tz_a = data[:, header.index("tau_z_analytic")]
    tz_f = data[:, header.index("tau_z_fit")]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(n, tz_a, "ks", mfc="none", label=r"analytic $\tau_Z$")
    ax.plot(n, tz_f, "C3o", ms=4, label=r"parabolic fit")
    good = np.isfinite(tz_a) & (tz_a > 0)
    if np.count_nonzero(good) >= 2:
        slope, intercept = np.polyfit(n[good], np.log(tz_a[good]), 1)
        ax.plot(n, np.exp(intercept + slope * n), "C0-", lw=0.8,
                label=f"exp fit, slope {slope:.3f}")
    ax.set_yscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel(r"$\tau_Z$")
    ax.legend(fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def fidelity_figure(summary_csv: str, path: str) -> str:
    header, data = _read_table(summary_csv)
    n = data[:, header.index("N")]
    f = data[:, header.index("fidelity_at_tq")]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(n, f, "C0o-", ms=4)
    ax.set_xlabel("N")
    ax.set_ylabel(r"$P_N(t_q) / P_N(0)$")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def rates_figure(summary_csv: str, path: str) -> str:
    header, data = _read_table(summary_csv)
    n = data[:, header.index("N")]
    semi = data[:, header.index("Gamma_semiclassical")]
    fit_p = data[:, header.index("Gamma_fit_P")]
    fit_s = data[:, header.index("Gamma_fit_S")]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(n, semi, "C0-", lw=1.2, label=r"semiclassical $\Gamma$")
    ax.semilogy(n, fit_s, "ks", mfc="none", label=r"fit of $S_N$")
    ax.semilogy(n, fit_p, "C3^", mfc="none", label=r"fit of $P_N$")
    ax.set_xlabel("N")
    ax.set_ylabel(r"$\Gamma$")
    ax.legend(fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def render_report(out_dir: str, cfg: RunConfig | None = None) -> list[str]:
    """Render every figure whose source table exists in out_dir."""
    made = []
    ts = os.path.join(out_dir, "timeseries.csv")
    if os.path.exists(ts):
        made.append(decay_figure(ts, os.path.join(out_dir, "decay.png")))
    fc = os.path.join(out_dir, "fcs.csv")
    if os.path.exists(fc):
        made.append(fcs_figure(fc, os.path.join(out_dir, "fcs.png")))
    summary = os.path.join(out_dir, "summary.csv")
    if os.path.exists(summary):
        with open(summary, newline="", encoding="utf-8") as fh:
            first = fh.readline()
        if first.startswith("N,"):
            made.append(zeno_figure(summary, os.path.join(out_dir, "zeno.png")))
            made.append(fidelity_figure(summary, os.path.join(out_dir, "fidelity.png")))
            header, data = _read_table(summary)
            if np.any(np.isfinite(data[:, header.index("Gamma_fit_S")])):
                made.append(rates_figure(summary, os.path.join(out_dir, "rates.png")))
    if cfg is not None:
        trap = TrapParams(
            v0=cfg.resolved_v0(), well_width=cfg.well_width,
            barrier_width=cfg.barrier_width, sigma=cfg.sigma,
            sigma1=cfg.sigma1, cut=cfg.cut, capacity=cfg.capacity,
        )
        made.append(potential_figure(trap, os.path.join(out_dir, "potential.png")))
    for sub in sorted(os.listdir(out_dir)) if os.path.isdir(out_dir) else []:
        subpath = os.path.join(out_dir, sub)
        if os.path.isdir(subpath) and sub.startswith("N_"):
            made.extend(render_report(subpath))
    return made
