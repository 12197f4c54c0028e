"""Standalone SVG figures for experiment results.

matplotlib is an optional dependency; when it is missing the caller's
try/except keeps the CSV outputs authoritative.
"""

from __future__ import annotations

import os

import numpy as np


def _mpl():
    import matplotlib
    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt
    return plt


def _save(fig, out_dir, name):
    fig.savefig(os.path.join(out_dir, name), format="svg", bbox_inches="tight")


def _band_plot(plt, cells, xkey, out_dir, name, xlabel, logx=False):
    fig, ax = plt.subplots(figsize=(5, 3.4))
    series: dict = {}
    for c in cells:
        if "mean_tau_f" not in c:
            continue
        label = ", ".join(f"{k}={v}" for k, v in c.items()
                          if k not in (xkey, "n") and not k.startswith(("mean_", "std_", "cv_", "censor")))
        series.setdefault(label, []).append((c[xkey], c["mean_tau_f"], c["std_tau_f"]))
    for label, pts in series.items():
        pts.sort()
        x, m, s = (np.array(v) for v in zip(*pts))
        ax.plot(x, m, marker="o", ms=3, label=label or None)
        ax.fill_between(x, m - s, m + s, alpha=0.25)
    if logx:
        ax.set_xscale("log", base=2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("mean forecast time")
    if len(series) > 1:
        ax.legend(fontsize=7)
    _save(fig, out_dir, name)
    plt.close(fig)


def render(result, out_dir) -> None:
    plt = _mpl()
    kind = result.config.kind
    cells = result.summary.get("cells", [])
    if kind == "heatmap":
        ws = sorted({c["w"] for c in cells})
        bs = sorted({c["b"] for c in cells})
        grid = np.full((len(bs), len(ws)), np.nan)
        for c in cells:
            grid[bs.index(c["b"]), ws.index(c["w"])] = c.get("mean_tau_f", np.nan)
        fig, ax = plt.subplots(figsize=(4.6, 3.6))
        im = ax.pcolormesh(ws, bs, grid, shading="nearest")
        fig.colorbar(im, ax=ax, label="mean forecast time")
        ax.set_xlabel("weight half-interval w")
        ax.set_ylabel("bias half-interval b")
        _save(fig, out_dir, "heatmap.svg")
        plt.close(fig)
    elif kind in ("pg_sweep", "beta_sweep", "effective_dim"):
        _band_plot(plt, cells, "p_g", out_dir, f"{kind}.svg", "fraction of good rows")
    elif kind == "wnorm_scaling":
        pts = sorted((c["d_r"], c["mean_w_norm"]) for c in cells
                     if c.get("p_g") == 1.0 and "mean_w_norm" in c)
        if pts:
            fig, ax = plt.subplots(figsize=(4.6, 3.4))
            x, y = zip(*pts)
            ax.loglog(x, y, "o-")
            ax.set_xlabel("feature dimension")
            ax.set_ylabel("mean outer-weight norm")
            slope = result.summary.get("wnorm_loglog_slope")
            if slope is not None:
                ax.set_title(f"log-log slope {slope:.3f}", fontsize=9)
            _save(fig, out_dir, "wnorm_scaling.svg")
            plt.close(fig)
    elif kind == "sampler_compare":
        fig, ax = plt.subplots(figsize=(5, 3.4))
        for alg in ("standard", "one-shot"):
            taus = [r["tau_f"] for r in result.records if r.get("algorithm") == alg]
            if taus:
                ax.hist(taus, bins=30, alpha=0.55, label=alg, density=True)
        ax.set_xlabel("forecast time")
        ax.set_ylabel("density")
        ax.legend()
        _save(fig, out_dir, "sampler_compare.svg")
        plt.close(fig)
    elif kind == "suppression":
        rows = result.extras.get("columns", [])
        checkpoints = sorted({r["n_good"] for r in rows})
        if rows and checkpoints:
            fig, axes = plt.subplots(1, len(checkpoints),
                                     figsize=(3.2 * len(checkpoints), 3.0),
                                     sharey=True)
            axes = np.atleast_1d(axes)
            colors = {"good": "tab:blue", "linear": "tab:orange",
                      "saturated": "tab:green", "mixed": "tab:red"}
            for ax, ng in zip(axes, checkpoints):
                sub = [r for r in rows if r["n_good"] == ng and r["realization"] == 0]
                for cls in colors:
                    pts = [(r["column"], r["normalized_supnorm"]) for r in sub
                           if r["class"] == cls]
                    if pts:
                        x, y = zip(*pts)
                        ax.scatter(x, y, s=4, color=colors[cls], label=cls)
                ax.set_title(f"good rows: {ng}", fontsize=9)
                ax.set_xlabel("column")
            axes[0].set_ylabel("normalized sup-norm")
            axes[0].legend(fontsize=7)
            _save(fig, out_dir, "suppression.svg")
            plt.close(fig)
    elif kind == "invariant_measure":
        items = [it for it in result.extras.get("histograms", [])
                 if it["realization"] == 0]
        if items:
            fig, axes = plt.subplots(1, 3, figsize=(10, 3.0))
            styles = {"truth": "k-", "pg1": "C0-", "pg0": "C1--"}
            for coord in range(3):
                for it in items:
                    hist = it["hist"]
                    centers = 0.5 * (hist.edges[coord][:-1] + hist.edges[coord][1:])
                    density = hist.counts[coord] / max(hist.total, 1)
                    axes[coord].plot(centers, density, styles.get(it["model"], "-"),
                                     label=it["model"], lw=1)
                axes[coord].set_xlabel("xyz"[coord])
            axes[0].set_ylabel("probability mass")
            axes[0].legend(fontsize=7)
            _save(fig, out_dir, "invariant_measure.svg")
            plt.close(fig)
    elif kind == "nn_compare":
        nn = [r for r in result.records if r.get("model") == "nn"]
        rfm = [r["mean_tau_f"] for r in result.records if r.get("model") == "rfm"]
        if nn:
            fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.0))
            steps = [r["step"] for r in nn]
            ax1.plot(steps, [r["mean_tau_f"] for r in nn], "o-", label="network")
            if rfm:
                ax1.axhline(float(np.mean(rfm)), color="tab:orange", ls="--",
                            label="feature map (p_g=1)")
            ax1.set_xlabel("gradient step")
            ax1.set_ylabel("mean forecast time")
            ax1.legend(fontsize=7)
            ax2.semilogy(steps, [max(r["loss"], 1e-300) for r in nn], "o-")
            ax2.set_xlabel("gradient step")
            ax2.set_ylabel("loss")
            _save(fig, out_dir, "nn_compare.svg")
            plt.close(fig)
