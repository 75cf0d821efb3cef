"""Figure rendering for sweep and certificate reports.

Consumes in-memory records (or the CSV they serialize to) and writes
PNG files next to the delimited output.  Kept separate from the data
emitters so reports stay byte-reproducible.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def render_sweep_figures(records, outdir):
    """Error-vs-tau scaling plot plus bound-ratio histogram; returns paths."""
    os.makedirs(outdir, exist_ok=True)
    paths = []
    conv = [r for r in records if r.converged]
    if not conv:
        return paths

    taus = np.array([r.tau for r in conv])
    errs = np.array([r.error for r in conv])
    by_tau = {}
    for r in conv:
        by_tau.setdefault(r.tau, []).append(r.error)
    med_t = np.array(sorted(by_tau))
    med_e = np.array([np.median(by_tau[t]) for t in med_t])

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.loglog(taus, errs, ".", color="0.6", ms=4, alpha=0.6, label="records")
    ax.loglog(med_t, med_e, "o-", color="C0", label="median error")
    r0 = conv[0]
    grid = np.geomspace(med_t[0], med_t[-1], 64)
    env = np.array([max((np.log(r0.omega * r0.L)) ** 0.25 * np.sqrt(r0.nu * t),
                        np.sqrt(np.log(r0.omega * r0.L)) * t) for t in grid])
    ax.loglog(grid, env, "--", color="C3", label="bound (c = 1)")
    ax.set_xlabel(r"noise level $\tau$")
    ax.set_ylabel(r"$\|X^\ast - X_0\|_F$")
    ax.set_title(f"L={r0.L}, K={r0.K}, N={r0.N}, {r0.noise_mode} noise")
    ax.legend(loc="best", fontsize=9)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    p = os.path.join(outdir, "error_vs_tau.png")
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(p)

    ratios = [r.error / r.bound for r in conv if r.bound > 0]
    if ratios:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        ax.hist(ratios, bins=30, color="C0", alpha=0.8)
        ax.set_xlabel("error / bound")
        ax.set_ylabel("count")
        ax.set_title("bound-ratio distribution (converged records)")
        fig.tight_layout()
        p = os.path.join(outdir, "bound_ratio_hist.png")
        fig.savefig(p, dpi=150)
        plt.close(fig)
        paths.append(p)
    return paths


def render_decay_figure(decay_trace, outpath):
    """Golfing residual decay against the 4^{-p} reference line."""
    os.makedirs(os.path.dirname(outpath) or ".", exist_ok=True)
    ps = np.arange(len(decay_trace))
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.semilogy(ps, decay_trace, "o-", color="C0", label=r"$\|W_p\|_F$")
    ax.semilogy(ps, 4.0 ** (-ps), "--", color="C3", label=r"$4^{-p}$")
    ax.set_xlabel("Golfing step p")
    ax.set_ylabel("tangent residual")
    ax.set_xticks(ps)
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(outpath, dpi=150)
    plt.close(fig)
    return outpath
