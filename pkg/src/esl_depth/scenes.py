"""Default desk-scale rig and the benchmark scenes."""

from __future__ import annotations

from .errors import ConfigError
from .geometry import FrontoPlane, PinholeIntrinsics, ScanTiming, SlantedPlane, Sphere, StepEdge, StereoRig
from .simulator import SimScene

CAMERA_WIDTH = 320
CAMERA_HEIGHT = 240
FOCAL = 600.0
BASELINE = 0.11
# keeps the 15.43 µs line period of a 60 Hz, 1080-line projector
SCAN_FREQUENCY = 60.0 * 1080 / CAMERA_WIDTH


def default_rig(width: int = CAMERA_WIDTH, height: int = CAMERA_HEIGHT, focal: float = FOCAL,
                baseline: float = BASELINE, projector_scale: int = 1) -> StereoRig:
    """Camera and projector sharing orientation and principal point.

    ``projector_scale`` multiplies the projector's horizontal resolution and
    focal length relative to the camera.
    """
    cam = PinholeIntrinsics(focal, focal, width / 2.0, height / 2.0, width, height)
    s = projector_scale
    proj = PinholeIntrinsics(focal * s, focal, width * s / 2.0, height / 2.0, width * s, height)
    return StereoRig(cam, proj, baseline)


def default_timing(rig: StereoRig, f: float = SCAN_FREQUENCY, t0: float = 0.0) -> ScanTiming:
    return ScanTiming(f, rig.projector.width, rig.projector.height, t0)


def make_scene(name: str, rig: StereoRig | None = None, timing: ScanTiming | None = None) -> SimScene:
    """One of ``plane``, ``slanted``, ``sphere``, ``step``."""
    rig = rig or default_rig()
    timing = timing or default_timing(rig)
    cam = rig.camera
    if name == "plane":
        prims = [FrontoPlane(0.5)]
    elif name == "slanted":
        # tilted about the vertical axis: depth grows to the right
        prims = [SlantedPlane((-0.35, 0.1, 1.0), 0.5)]
    elif name == "sphere":
        z = 0.45
        cx = (0.7 * cam.width - cam.cx) / cam.fx * z
        prims = [Sphere((cx, 0.0, z), 0.07)]
    elif name == "step":
        prims = [StepEdge(0.45, 0.6, split_column=round(0.7 * cam.width))]
    else:
        raise ConfigError(f"unknown scene {name!r}")
    return SimScene(tuple(prims), rig, timing)


SCENE_NAMES = ("plane", "slanted", "sphere", "step")
