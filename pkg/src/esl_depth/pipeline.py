"""End-to-end runs shared by the command line and the benchmark.

Each function here is deterministic given its config; ``threads`` only
changes wall time.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .baselines import mc3d_disparity, sgm_estimate
from .config import RunConfig
from .errors import DomainError
from .esl import estimate_depth
from .events import EventStream, TimeMap, build_camera_time_map, build_projector_time_map, resample_projector_map
from .geometry import StereoRig, depth_from_disparity
from .metrics import fill_rate, rmse
from .postproc import postprocess
from .simulator import ground_truth_depth, illuminated_mask, simulate_scan


def projector_map(cfg: RunConfig, rig: StereoRig | None = None) -> TimeMap:
    """Projector time map resampled onto the camera grid."""
    rig = rig or cfg.build_rig()
    return resample_projector_map(build_projector_time_map(cfg.build_timing(rig), rig.projector), rig)


def camera_map(cfg: RunConfig, stream: EventStream) -> TimeMap:
    cam = cfg.build_rig().camera
    if (stream.width, stream.height) != (cam.width, cam.height):
        raise DomainError(f"events are {stream.width}x{stream.height} but the rig camera is "
                          f"{cam.width}x{cam.height}")
    return build_camera_time_map(stream, cfg.run.polarity)


def _to_depth(rig, disp):
    return np.where(np.isnan(disp), np.nan, depth_from_disparity(rig, np.nan_to_num(disp, nan=1.0)))


def estimate(cfg: RunConfig, tau_c: TimeMap, method: str | None = None, tau_p: TimeMap | None = None,
             threads: int = 1) -> np.ndarray:
    """Depth map from a camera time map with the configured (or given) method."""
    method = method or cfg.run.method
    rig = cfg.build_rig()
    if tau_c.shape != rig.camera.shape:
        raise DomainError(f"time map is {tau_c.width}x{tau_c.height} but the rig camera is "
                          f"{rig.camera.width}x{rig.camera.height}")
    timing = cfg.build_timing(rig)
    if method == "mc3d":
        return _to_depth(rig, mc3d_disparity(tau_c, timing, rig, cfg.latency_est))
    if tau_p is None:
        tau_p = projector_map(cfg, rig)
    elif tau_p.shape != tau_c.shape:
        raise DomainError("camera and projector time maps differ in shape")
    if method == "sgm":
        return sgm_estimate(tau_c, tau_p, rig, cfg.sgm, threads=threads)
    if method != "esl":
        raise DomainError(f"unknown method {method!r}")
    init = mc3d_disparity(tau_c, timing, rig, cfg.latency_est) if cfg.run.esl_init == "mc3d" else None
    return estimate_depth(tau_c, tau_p, rig, cfg.esl, init=init, threads=threads)


def evaluation_ground_truth(cfg: RunConfig) -> np.ndarray:
    """Analytic depth on pixels the projector can light (NaN elsewhere)."""
    scene = cfg.build_scene()
    gt = ground_truth_depth(scene)
    gt[~illuminated_mask(scene)] = np.nan
    return gt


@dataclass(frozen=True)
class BenchRow:
    scene: str
    sigma: float
    method: str
    stage: str  # "raw" or "proc"
    fill_rate: float
    rmse_cm: float


METHOD_ORDER = ("esl", "sgm", "mc3d")


def run_bench(cfg: RunConfig, scenes, sigmas, threads: int = 1, keep_maps: bool = False):
    """RMSE and fill rate of every method, raw and post-processed, per scene and jitter.

    Returns the rows and, when ``keep_maps`` is set, a dict
    ``(scene, sigma, method, stage) -> depth`` plus ``(scene, "gt")`` entries.
    """
    rows = []
    maps = {}
    for name in scenes:
        scfg = replace(cfg, scene=replace(cfg.scene, name=name))
        gt = evaluation_ground_truth(scfg)
        tau_p = projector_map(scfg)
        if keep_maps:
            maps[(name, "gt")] = gt
        for sigma in sigmas:
            ncfg = replace(scfg, noise=replace(scfg.noise, jitter_sigma=float(sigma)))
            stream = simulate_scan(ncfg.build_scene(), ncfg.noise)
            tau_c = camera_map(ncfg, stream)
            for method in METHOD_ORDER:
                raw = estimate(ncfg, tau_c, method, tau_p, threads)
                proc = postprocess(raw, ncfg.postproc)
                for stage, depth in (("raw", raw), ("proc", proc)):
                    rows.append(BenchRow(name, float(sigma), method, stage,
                                         fill_rate(depth, gt), _safe_rmse(depth, gt)))
                    if keep_maps:
                        maps[(name, float(sigma), method, stage)] = depth
    return rows, maps


def _safe_rmse(depth, gt):
    try:
        return rmse(depth, gt)
    except DomainError:
        return float("nan")


def format_tsv(rows) -> str:
    lines = ["scene\tsigma_us\tmethod\tstage\tFR\tRMSE_cm"]
    for r in rows:
        lines.append(f"{r.scene}\t{r.sigma:g}\t{r.method}\t{r.stage}\t{r.fill_rate:.4f}\t{r.rmse_cm:.4f}")
    return "\n".join(lines) + "\n"
