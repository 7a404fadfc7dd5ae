"""Benchmark figures (matplotlib, written to files)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .pipeline import METHOD_ORDER  # noqa: E402

_LABEL = {"esl": "ESL", "sgm": "SGM", "mc3d": "MC3D"}
# PNG metadata without the software/version stamp, so files are reproducible
_META = {"Software": None}


def _series(rows, scene, method, stage, attr):
    pts = sorted((r.sigma, getattr(r, attr)) for r in rows
                 if r.scene == scene and r.method == method and r.stage == stage)
    return [p[0] for p in pts], [p[1] for p in pts]


def plot_sweep(rows, path, attr="rmse_cm", ylabel="RMSE (cm)", stage="raw"):
    """One panel per scene, one line per method, jitter on the x axis."""
    scenes = list(dict.fromkeys(r.scene for r in rows))
    fig, axes = plt.subplots(1, len(scenes), figsize=(3.2 * len(scenes), 3.0), squeeze=False)
    for ax, scene in zip(axes[0], scenes):
        for method in METHOD_ORDER:
            x, y = _series(rows, scene, method, stage, attr)
            if x:
                ax.plot(x, y, marker="o", label=_LABEL[method])
        ax.set_title(scene)
        ax.set_xlabel("jitter σ (µs)")
        ax.grid(alpha=0.3)
    axes[0][0].set_ylabel(ylabel)
    axes[0][0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)


def plot_depth_panel(maps, scene, sigma, path, stage="raw"):
    """Ground truth next to each method's depth map, on a shared color scale."""
    gt = maps[(scene, "gt")]
    ok = np.isfinite(gt)
    vmin, vmax = (float(np.min(gt[ok])), float(np.max(gt[ok]))) if ok.any() else (0.0, 1.0)
    panels = [("ground truth", gt)] + [
        (_LABEL[m], maps[(scene, sigma, m, stage)]) for m in METHOD_ORDER if (scene, sigma, m, stage) in maps
    ]
    fig, axes = plt.subplots(1, len(panels), figsize=(3.0 * len(panels), 2.6))
    cmap = plt.get_cmap("turbo").copy()
    cmap.set_bad("black")
    for ax, (title, depth) in zip(np.atleast_1d(axes), panels):
        im = ax.imshow(np.ma.masked_invalid(depth), cmap=cmap, vmin=vmin, vmax=vmax)
        ax.set_title(title, fontsize=9)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.colorbar(im, ax=axes, shrink=0.8, label="depth (m)")
    fig.suptitle(f"{scene}, σ = {sigma:g} µs", fontsize=10)
    fig.savefig(path, metadata=_META)
    plt.close(fig)


def write_figures(rows, maps, out_dir, panel_sigma=None):
    """All bench figures into ``out_dir``; returns the written paths."""
    paths = []
    for attr, label, name in (("rmse_cm", "RMSE (cm)", "rmse"), ("fill_rate", "fill rate", "fill_rate")):
        for stage in ("raw", "proc"):
            p = os.path.join(out_dir, f"{name}_{stage}.png")
            plot_sweep(rows, p, attr, label, stage)
            paths.append(p)
    sigmas = sorted({r.sigma for r in rows})
    if maps and sigmas:
        s = panel_sigma if panel_sigma in sigmas else sigmas[len(sigmas) // 2]
        for scene in dict.fromkeys(r.scene for r in rows):
            p = os.path.join(out_dir, f"depth_{scene}.png")
            plot_depth_panel(maps, scene, s, p)
            paths.append(p)
    return paths
