"""Matplotlib figures written next to the CSV outputs.

Figures use the Agg backend and strip the PNG software tag so that identical
inputs produce identical files.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

PNG_META = {"Software": None}

plt.rcParams.update({
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
})


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, metadata=PNG_META)
    plt.close(fig)
    return path


def plot_measure_curve(rows, path):
    t = [r[0] for r in rows]
    fig, ax = plt.subplots()
    ax.loglog(t, [r[1] for r in rows], label=r"$|E_t\cap\mathbb{R}|$")
    ax.loglog(t, [r[2] for r in rows], label=r"$\rho(t)$")
    ax.loglog(t, [r[3] for r in rows], label=r"$\rho_1(t)$")
    ax.set_xlabel("t")
    ax.legend()
    return _save(fig, path)


def plot_omega(omega, path):
    ts, ds = omega.knots_t, omega.knots_d
    fig, ax = plt.subplots()
    ax.loglog(ts, ds, "o-", ms=3, label=r"knots $(t_k, d_k)$")
    bound = [omega.curve.rho1(t) / t for t in ts]
    ax.loglog(ts, bound, "--", label=r"$\rho_1(t)/t$")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\omega$")
    ax.legend()
    return _save(fig, path)


def plot_liminf(bounds, path):
    fig, ax = plt.subplots()
    ax.loglog([b[0] for b in bounds], [b[1] for b in bounds], "o-", ms=3)
    ax.set_xlabel(r"$t_n$")
    ax.set_ylabel(r"bound on $\frac{|E_t|}{t}\int_0^t\omega$")
    return _save(fig, path)


def plot_useq(seq, path):
    ns = list(range(1, seq.N + 1))
    fig, ax = plt.subplots()
    ax.plot(ns, seq.log_u, lw=1)
    ax.set_xlabel("n")
    ax.set_ylabel(r"$\log u_n$")
    return _save(fig, path)


def plot_verification(report, path):
    fig, ax = plt.subplots()
    v = [lu + ld for lu, ld in zip(report.log_u, report.log_delta)]
    ax.plot(report.ns, v, lw=1, label=r"$\log(u_n\delta_n)$")
    ax.plot(report.ns, report.running_min, lw=1, label="running min")
    ax.plot(report.ns, [2 * lu + ld for lu, ld in zip(report.log_u, report.log_delta)], lw=1,
            label=r"$\log(u_n^2\delta_n)$")
    ax.axhline(math.log(report.slack), color="k", lw=0.8, ls=":")
    ax.set_xlabel("n")
    ax.legend()
    return _save(fig, path)
