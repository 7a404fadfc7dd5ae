"""Depth from an event camera and a raster-scanning laser projector.

Time-map matching (ESL) with point-wise (MC3D) and semi-global (SGM)
baselines, a scan simulator, post-processing and evaluation.
"""

from .baselines import SgmConfig, TwoPlaneCalib, mc3d_estimate, mc3d_legacy_interpolate, sgm_estimate
from .errors import ConfigError, DataError, DomainError, EslError, IOFailure, ParseError
from .esl import EslConfig, TvRefine, cost_profile, estimate_depth, estimate_disparity, window_cost
from .events import Event, EventStream, TimeMap, build_camera_time_map, build_projector_time_map
from .geometry import PinholeIntrinsics, ScanTiming, StereoRig, depth_from_disparity, disparity_from_depth
from .metrics import fill_rate, rmse
from .postproc import PostprocConfig, postprocess
from .scenes import default_rig, default_timing, make_scene
from .simulator import NoiseConfig, SimScene, ground_truth_depth, simulate_scan

__all__ = [
    "ConfigError",
    "DataError",
    "DomainError",
    "EslConfig",
    "EslError",
    "Event",
    "EventStream",
    "IOFailure",
    "NoiseConfig",
    "ParseError",
    "PinholeIntrinsics",
    "PostprocConfig",
    "ScanTiming",
    "SgmConfig",
    "SimScene",
    "StereoRig",
    "TimeMap",
    "TvRefine",
    "TwoPlaneCalib",
    "build_camera_time_map",
    "build_projector_time_map",
    "cost_profile",
    "default_rig",
    "default_timing",
    "depth_from_disparity",
    "disparity_from_depth",
    "estimate_depth",
    "estimate_disparity",
    "fill_rate",
    "ground_truth_depth",
    "make_scene",
    "mc3d_estimate",
    "mc3d_legacy_interpolate",
    "postprocess",
    "rmse",
    "sgm_estimate",
    "simulate_scan",
    "window_cost",
]
