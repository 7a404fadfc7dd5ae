"""Forward simulation of a raster-scanning laser projector seen by an event camera."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .events import EventStream
from .geometry import ScanTiming, StereoRig, camera_rays, intersect_rays, projector_rays

# A lit point counts as visible when the camera ray through its image hits
# the scene within this distance of the point (meters).
_VISIBILITY_TOL = 1e-6


@dataclass(frozen=True)
class NoiseConfig:
    """Event-camera timing noise.

    Attributes:
        jitter_sigma: Std of zero-mean Gaussian timestamp noise (µs).
        latency: Constant delay added to every timestamp (µs).
        burst_group: Camera rows sharing one readout timestamp (1 disables).
        dropout_prob: Probability that an illumination produces no event.
        seed: Base seed; each pass draws from its own ``(seed, pass)`` stream.
    """

    jitter_sigma: float = 0.0
    latency: float = 0.0
    burst_group: int = 1
    dropout_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.jitter_sigma < 0:
            raise ConfigError("jitter_sigma must be >= 0")
        if self.latency < 0:
            raise ConfigError("latency must be >= 0")
        if self.burst_group < 1:
            raise ConfigError("burst_group must be >= 1")
        # 1.0 is accepted: it produces an empty stream
        if not 0 <= self.dropout_prob <= 1:
            raise ConfigError("dropout_prob must lie in [0, 1]")


@dataclass(frozen=True)
class SimScene:
    primitives: tuple
    rig: StereoRig
    timing: ScanTiming

    def __post_init__(self):
        prims = tuple(self.primitives) if isinstance(self.primitives, (list, tuple)) else (self.primitives,)
        if not prims:
            raise ConfigError("scene needs at least one primitive")
        object.__setattr__(self, "primitives", prims)
        p = self.rig.projector
        if p.width != self.timing.lines or p.height != self.timing.pixels_per_line:
            raise ConfigError(
                f"projector grid {p.width}x{p.height} must be lines x pixels_per_line "
                f"({self.timing.lines}x{self.timing.pixels_per_line}) after the 90 degree rotation"
            )


def _quantize_ns(t: np.ndarray) -> np.ndarray:
    # exact decimal at 1e-3 µs so the 3-decimal text format round-trips
    return np.round(t * 1000.0) / 1000.0


def _projector_hits(scene: SimScene):
    """Lit points for every projector pixel, raster order (line-major)."""
    rig, timing = scene.rig, scene.timing
    lines = np.arange(timing.lines)
    pix = np.arange(timing.pixels_per_line)
    kk, jj = np.meshgrid(lines, pix, indexing="ij")
    kk, jj = kk.ravel(), jj.ravel()
    origin, dirs = projector_rays(rig, kk, jj)
    s = intersect_rays(scene.primitives, origin, dirs, rig)
    hit = np.isfinite(s)
    points = origin + np.where(hit, s, 0.0)[:, None] * dirs
    return kk, jj, hit, points


def _visible_from_camera(scene: SimScene, points: np.ndarray, hit: np.ndarray):
    """Camera pixel of each lit point and whether the camera actually sees it."""
    rig = scene.rig
    cam = rig.camera
    z = np.where(hit, points[:, 2], 1.0)
    u = cam.fx * points[:, 0] / z + cam.cx
    v = cam.fy * points[:, 1] / z + cam.cy
    ok = hit & (z > 0) & cam.contains(u, v)
    depth = np.full(len(z), np.inf)
    if np.any(ok):
        depth[ok] = intersect_rays(scene.primitives, np.zeros(3), camera_rays(rig, u[ok], v[ok]), rig)
    ok &= np.abs(depth - z) <= _VISIBILITY_TOL
    return np.rint(u).astype(np.int64), np.rint(v).astype(np.int64), ok


def simulate_scan(scene: SimScene, noise: NoiseConfig, pass_index: int = 0) -> EventStream:
    """Events generated by one raster pass over the scene.

    Each projector pixel that lights a point visible to the camera yields one
    positive event. Timestamps get latency, then Gaussian jitter, then burst
    readout quantization, and are rounded to nanoseconds.
    """
    rig, timing = scene.rig, scene.timing
    cam = rig.camera
    kk, jj, hit, points = _projector_hits(scene)
    n = len(kk)

    rng = np.random.default_rng([int(noise.seed), int(pass_index)])
    dropped = rng.random(n) < noise.dropout_prob
    jitter = rng.normal(0.0, 1.0, n) * noise.jitter_sigma

    u, v, ok = _visible_from_camera(scene, points, hit)
    ok &= ~dropped
    kk, v_ok, u_ok = kk[ok], v[ok], u[ok]
    t = timing.t0 + kk * timing.dt_line() + jj[ok] * timing.dt()
    t = t + noise.latency + jitter[ok]

    if noise.burst_group > 1 and len(t):
        # one readout per (raster line, camera row group): all share the first arrival
        key = kk * (cam.height // noise.burst_group + 1) + v_ok // noise.burst_group
        uniq, inv = np.unique(key, return_inverse=True)
        first = np.full(len(uniq), np.inf)
        np.minimum.at(first, inv, t)
        t = first[inv]

    t = _quantize_ns(t)
    order = np.argsort(t, kind="stable")
    return EventStream(
        u_ok[order], v_ok[order], t[order], np.ones(len(order), np.int8),
        cam.width, cam.height, timing.t0, timing.pass_duration(),
    )


def ground_truth_depth(scene: SimScene) -> np.ndarray:
    """Analytic depth of the first surface along every camera ray (NaN on miss)."""
    cam = scene.rig.camera
    rows, cols = np.mgrid[0 : cam.height, 0 : cam.width]
    s = intersect_rays(scene.primitives, np.zeros(3), camera_rays(scene.rig, cols, rows), scene.rig)
    return np.where(np.isfinite(s), s, np.nan)


def illuminated_mask(scene: SimScene) -> np.ndarray:
    """Camera pixels whose surface point the projector can light.

    This is the camera/projector overlap region that evaluation is restricted to.
    """
    rig = scene.rig
    gt = ground_truth_depth(scene)
    ok = np.isfinite(gt)
    rows, cols = np.mgrid[0 : rig.camera.height, 0 : rig.camera.width]
    pts = camera_rays(rig, cols, rows) * np.where(ok, gt, 1.0)[..., None]
    rel = pts - np.array([rig.baseline, 0.0, 0.0])
    p = rig.projector
    pc = p.fx * rel[..., 0] / rel[..., 2] + p.cx
    pr = p.fy * rel[..., 1] / rel[..., 2] + p.cy
    ok &= p.contains(pc, pr)
    origin, dirs = projector_rays(rig, pc[ok], pr[ok])
    s = intersect_rays(scene.primitives, origin, dirs, rig)
    lit = np.zeros_like(ok)
    lit[ok] = np.abs(s - pts[ok][:, 2]) <= _VISIBILITY_TOL
    return lit


def averaged_reference(scene: SimScene, noise: NoiseConfig, passes: int, latency_est=None) -> np.ndarray:
    """Per-pixel mean of MC3D depth over ``passes`` independently simulated scans."""
    from .baselines import mc3d_estimate

    if passes < 1:
        raise ConfigError("passes must be >= 1")
    # accumulate offsets from the first value seen so identical passes average exactly
    anchor = np.full(scene.rig.camera.shape, np.nan)
    offset = np.zeros(anchor.shape)
    count = np.zeros(anchor.shape, np.int64)
    for i in range(passes):
        stream = simulate_scan(scene, noise, i)
        z = mc3d_estimate(stream, scene.timing, scene.rig,
                          latency_est=noise.latency if latency_est is None else latency_est)
        ok = np.isfinite(z)
        fresh = ok & (count == 0)
        anchor[fresh] = z[fresh]
        offset[ok] += z[ok] - anchor[ok]
        count[ok] += 1
    out = np.full(anchor.shape, np.nan)
    has = count > 0
    out[has] = anchor[has] + offset[has] / count[has]
    return out
