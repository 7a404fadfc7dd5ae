"""Run configuration: TOML file <-> frozen dataclasses.

Sections are ``[rig] [timing] [scene] [noise] [esl] [sgm] [postproc]`` plus
``[run]`` for pipeline choices. Every key is optional; unknown sections or
keys are rejected. ``dumps(loads(text))`` is a fixed point.
"""

from __future__ import annotations

import dataclasses
import os
import sys
from dataclasses import dataclass, field, fields, replace
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import tomli_w

from .baselines import SgmConfig
from .errors import ConfigError, IOFailure
from .esl import EslConfig, TvRefine
from .events import BOTH, POSITIVE_ONLY
from .geometry import ScanTiming, StereoRig
from .postproc import PostprocConfig
from .scenes import BASELINE, CAMERA_HEIGHT, CAMERA_WIDTH, FOCAL, SCAN_FREQUENCY, SCENE_NAMES, default_rig, make_scene
from .simulator import NoiseConfig, SimScene

SEED_ENV = "ESL_SEED"
METHODS = ("esl", "mc3d", "sgm")
ESL_INIT = ("search", "mc3d")

# disparities of depths between roughly 0.35 m and 0.8 m on the default rig
DEFAULT_DISPARITY = (80, 190)


@dataclass(frozen=True)
class RigSection:
    width: int = CAMERA_WIDTH
    height: int = CAMERA_HEIGHT
    focal: float = FOCAL
    baseline: float = BASELINE
    projector_scale: int = 1

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigError("rig width and height must be >= 1")
        if not self.focal > 0 or not self.baseline > 0:
            raise ConfigError("focal and baseline must be positive")
        if self.projector_scale < 1:
            raise ConfigError("projector_scale must be >= 1")


@dataclass(frozen=True)
class TimingSection:
    frequency: float = SCAN_FREQUENCY
    t0: float = 0.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise ConfigError("scan frequency must be positive")


@dataclass(frozen=True)
class SceneSection:
    name: str = "plane"

    def __post_init__(self):
        if self.name not in SCENE_NAMES:
            raise ConfigError(f"scene must be one of {', '.join(SCENE_NAMES)}; got {self.name!r}")


@dataclass(frozen=True)
class RunSection:
    method: str = "esl"
    esl_init: str = "search"
    latency_est: Optional[float] = None
    polarity: str = POSITIVE_ONLY
    output_dir: str = "."

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {', '.join(METHODS)}")
        if self.esl_init not in ESL_INIT:
            raise ConfigError(f"esl_init must be one of {', '.join(ESL_INIT)}")
        if self.polarity not in (POSITIVE_ONLY, BOTH):
            raise ConfigError(f"polarity must be {POSITIVE_ONLY!r} or {BOTH!r}")


def _default_esl():
    return EslConfig(disparity_min=DEFAULT_DISPARITY[0], disparity_max=DEFAULT_DISPARITY[1])


def _default_sgm():
    return SgmConfig(disparity_min=DEFAULT_DISPARITY[0], disparity_max=DEFAULT_DISPARITY[1])


@dataclass(frozen=True)
class RunConfig:
    rig: RigSection = field(default_factory=RigSection)
    timing: TimingSection = field(default_factory=TimingSection)
    scene: SceneSection = field(default_factory=SceneSection)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    esl: EslConfig = field(default_factory=_default_esl)
    sgm: SgmConfig = field(default_factory=_default_sgm)
    postproc: PostprocConfig = field(default_factory=PostprocConfig)
    run: RunSection = field(default_factory=RunSection)

    def __post_init__(self):
        w = self.rig.width
        for name, cfg in (("esl", self.esl), ("sgm", self.sgm)):
            if cfg.disparity_max >= w:
                raise ConfigError(f"{name}.disparity_max must be smaller than rig.width ({w})")

    def build_rig(self) -> StereoRig:
        r = self.rig
        return default_rig(r.width, r.height, r.focal, r.baseline, r.projector_scale)

    def build_timing(self, rig: StereoRig | None = None) -> ScanTiming:
        rig = rig or self.build_rig()
        return ScanTiming(self.timing.frequency, rig.projector.width, rig.projector.height, self.timing.t0)

    def build_scene(self) -> SimScene:
        rig = self.build_rig()
        return make_scene(self.scene.name, rig, self.build_timing(rig))

    @property
    def latency_est(self) -> float:
        """MC3D latency estimate; defaults to the simulated latency."""
        return self.noise.latency if self.run.latency_est is None else self.run.latency_est


SECTIONS = {f.name: f for f in fields(RunConfig)}
_NESTED = {(EslConfig, "tv_refine"): TvRefine}

KEY_HELP = {
    "rig.width": "camera columns",
    "rig.height": "camera rows",
    "rig.focal": "camera focal length (px); shared by the rectified projector",
    "rig.baseline": "camera-projector baseline (m)",
    "rig.projector_scale": "projector lines per camera column",
    "timing.frequency": "projector scan frequency (Hz)",
    "timing.t0": "scan start time (µs)",
    "scene.name": "one of " + ", ".join(SCENE_NAMES),
    "noise.jitter_sigma": "Gaussian timestamp jitter std (µs)",
    "noise.latency": "constant event latency (µs)",
    "noise.burst_group": "camera rows sharing one readout timestamp (1 = off)",
    "noise.dropout_prob": "probability an illumination emits no event",
    "noise.seed": f"simulation seed (overridden by ${SEED_ENV})",
    "esl.window": "odd matching window side (px)",
    "esl.disparity_min": "smallest searched disparity (px)",
    "esl.disparity_max": "largest searched disparity (px)",
    "esl.min_valid_fraction": "window fraction that must be valid in both maps",
    "esl.subpixel": "parabolic subpixel refinement",
    "esl.init_radius": "search radius around the MC3D seed when run.esl_init = 'mc3d'",
    "esl.tv_refine.lam": "TV weight of the optional depth regularization (table enables it)",
    "esl.tv_refine.iterations": "TV iterations of the optional depth regularization",
    "sgm.p1": "penalty for a 1 px disparity change (µs)",
    "sgm.p2": "penalty for larger disparity changes (µs)",
    "sgm.directions": "aggregation paths: 1, 2, 4 or 8",
    "sgm.disparity_min": "smallest searched disparity (px)",
    "sgm.disparity_max": "largest searched disparity (px)",
    "sgm.subpixel": "parabolic subpixel refinement",
    "postproc.median": "apply the median filter",
    "postproc.median_kernel": "odd median kernel size",
    "postproc.inpaint": "fill small holes",
    "postproc.max_hole_radius": "largest distance to a valid pixel that gets filled (px)",
    "postproc.tv": "apply TV denoising",
    "postproc.tv_lambda": "TV weight",
    "postproc.tv_iterations": "TV iterations",
    "run.method": "estimator: " + ", ".join(METHODS),
    "run.esl_init": "ESL search: 'search' (full range) or 'mc3d' (seeded)",
    "run.latency_est": "latency subtracted by MC3D (µs); defaults to noise.latency",
    "run.polarity": f"events used for time maps: {POSITIVE_ONLY!r} or {BOTH!r}",
    "run.output_dir": "directory for bench outputs",
}


def _coerce(value, default, where):
    """Check a TOML scalar against the type of the field's default."""
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int) and not isinstance(default, bool):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float) or default is None:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif isinstance(default, str):
        ok = isinstance(value, str)
    else:
        ok = False
    if not ok:
        raise ConfigError(f"{where}: expected {type(default).__name__ if default is not None else 'number'}, "
                          f"got {value!r}")
    return value


def _build(proto, table, where):
    if not isinstance(table, dict):
        raise ConfigError(f"[{where}] must be a table")
    cls = type(proto)
    known = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in table.items():
        if key not in known:
            raise ConfigError(f"unknown key {where}.{key}")
        nested = _NESTED.get((cls, key))
        if nested is not None:
            kwargs[key] = _build(nested(), value, f"{where}.{key}")
        else:
            kwargs[key] = _coerce(value, getattr(proto, key), f"{where}.{key}")
    return replace(proto, **kwargs)


def from_dict(data: dict) -> RunConfig:
    base = RunConfig()
    parts = {}
    for name, table in data.items():
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
        parts[name] = _build(getattr(base, name), table, name)
    return replace(base, **parts)


def loads(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return from_dict(data)


def load(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IOFailure(f"cannot read config {path}: {exc}") from exc
    try:
        return loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config {path} is not UTF-8") from exc


def to_dict(cfg: RunConfig) -> dict:
    def table(obj):
        out = {}
        for f in fields(obj):
            v = getattr(obj, f.name)
            if v is None:
                continue
            out[f.name] = table(v) if dataclasses.is_dataclass(v) else v
        return out

    return {name: table(getattr(cfg, name)) for name in SECTIONS}


def dumps(cfg: RunConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(cfg: RunConfig, assignments) -> RunConfig:
    """Apply ``section.key=value`` strings (values in TOML syntax, bare strings allowed)."""
    data = to_dict(cfg)
    for item in assignments:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        path = key.strip().split(".")
        if len(path) < 2:
            raise ConfigError(f"override key {key!r} needs a section")
        node = data.setdefault(path[0], {})
        for part in path[1:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = _parse_value(value.strip())
    return from_dict(data)


def apply_env(cfg: RunConfig, environ=None) -> RunConfig:
    """Override the noise seed from ``$ESL_SEED`` when set."""
    environ = os.environ if environ is None else environ
    raw = environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return cfg
    try:
        seed = int(raw)
    except ValueError as exc:
        raise ConfigError(f"${SEED_ENV} must be an integer, got {raw!r}") from exc
    return replace(cfg, noise=replace(cfg.noise, seed=seed))


def describe_keys() -> str:
    """One line per config key with its default, for ``--help``."""
    defaults = to_dict(RunConfig())
    lines = []
    for key, text in KEY_HELP.items():
        node = defaults
        for part in key.split("."):
            node = node.get(part) if isinstance(node, dict) else None
        shown = "unset" if node is None else repr(node)
        lines.append(f"  {key:<28} {text} [default: {shown}]")
    return "\n".join(lines)
