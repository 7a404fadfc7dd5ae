import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esl_depth import config as cfgmod
from esl_depth.config import RunConfig, apply_env, apply_overrides, dumps, from_dict, load, loads, to_dict
from esl_depth.errors import ConfigError, IOFailure


def test_default_round_trip():
    cfg = RunConfig()
    text = dumps(cfg)
    assert loads(text) == cfg
    assert dumps(loads(text)) == text


finite = st.floats(0.0, 1e4, allow_nan=False, allow_infinity=False)


@st.composite
def configs(draw):
    width = draw(st.integers(64, 640))
    dmin = draw(st.integers(0, 20))
    dmax = draw(st.integers(dmin + 1, width - 1))
    p1 = draw(finite)
    data = {
        "rig": {"width": width, "height": draw(st.integers(8, 480)), "focal": draw(st.floats(1.0, 2000.0)),
                "baseline": draw(st.floats(0.01, 1.0)), "projector_scale": draw(st.integers(1, 3))},
        "timing": {"frequency": draw(st.floats(1.0, 1000.0)), "t0": draw(finite)},
        "scene": {"name": draw(st.sampled_from(["plane", "slanted", "sphere", "step"]))},
        "noise": {"jitter_sigma": draw(finite), "latency": draw(finite), "burst_group": draw(st.integers(1, 8)),
                  "dropout_prob": draw(st.floats(0.0, 1.0)), "seed": draw(st.integers(0, 2**31))},
        "esl": {"window": draw(st.sampled_from([1, 3, 5, 7, 15])), "disparity_min": dmin, "disparity_max": dmax,
                "min_valid_fraction": draw(st.floats(0.01, 1.0)), "subpixel": draw(st.booleans()),
                "init_radius": draw(st.integers(0, 10))},
        "sgm": {"p1": p1, "p2": p1 + draw(finite), "directions": draw(st.sampled_from([1, 2, 4, 8])),
                "disparity_min": dmin, "disparity_max": dmax, "subpixel": draw(st.booleans())},
        "postproc": {"median": draw(st.booleans()), "median_kernel": draw(st.sampled_from([3, 5, 7])),
                     "inpaint": draw(st.booleans()), "max_hole_radius": draw(finite), "tv": draw(st.booleans()),
                     "tv_lambda": draw(st.floats(1e-6, 10.0)), "tv_iterations": draw(st.integers(1, 500))},
        "run": {"method": draw(st.sampled_from(["esl", "sgm", "mc3d"])),
                "esl_init": draw(st.sampled_from(["search", "mc3d"])),
                "polarity": draw(st.sampled_from(["positive", "both"])), "output_dir": draw(st.text(max_size=20))},
    }
    if draw(st.booleans()):
        data["esl"]["tv_refine"] = {"lam": draw(st.floats(1e-6, 1.0)), "iterations": draw(st.integers(1, 100))}
    if draw(st.booleans()):
        data["run"]["latency_est"] = draw(finite)
    return data


@settings(max_examples=60, deadline=None)
@given(configs())
def test_round_trip_is_fixed_point(data):
    cfg = from_dict(data)
    text = dumps(cfg)
    again = loads(text)
    assert again == cfg
    assert dumps(again) == text
    assert to_dict(again) == to_dict(cfg)


def test_partial_file_keeps_defaults(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("[esl]\nwindow = 5\n[noise]\njitter_sigma = 2\n")
    cfg = load(path)
    assert cfg.esl.window == 5 and cfg.esl.disparity_max == RunConfig().esl.disparity_max
    assert cfg.noise.jitter_sigma == 2.0 and isinstance(cfg.noise.jitter_sigma, float)
    assert cfg.sgm == RunConfig().sgm


def test_tv_refine_table_enables_refinement():
    assert RunConfig().esl.tv_refine is None
    cfg = loads("[esl.tv_refine]\nlam = 0.02\n")
    assert cfg.esl.tv_refine is not None and cfg.esl.tv_refine.lam == 0.02


@pytest.mark.parametrize("text", [
    "[bogus]\nx = 1\n",
    "[esl]\nwindows = 5\n",
    "[esl]\nwindow = 4\n",
    "[esl]\nwindow = 5.0\n",
    "[esl]\nsubpixel = 1\n",
    "[noise]\nseed = \"one\"\n",
    "[noise]\njitter_sigma = true\n",
    "[scene]\nname = \"cube\"\n",
    "[run]\nmethod = \"magic\"\n",
    "[esl]\ndisparity_max = 400\n",
    "esl = 3\n",
    "[esl\n",
    "[esl.tv_refine]\nlambda = 0.1\n",
])
def test_invalid_configs_rejected(text):
    with pytest.raises(ConfigError):
        loads(text)


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(IOFailure):
        load(tmp_path / "nope.toml")


def test_env_seed_overrides_config():
    cfg = loads("[noise]\nseed = 3\n")
    assert apply_env(cfg, {}).noise.seed == 3
    assert apply_env(cfg, {"ESL_SEED": "17"}).noise.seed == 17
    assert apply_env(cfg, {"ESL_SEED": ""}).noise.seed == 3
    with pytest.raises(ConfigError):
        apply_env(cfg, {"ESL_SEED": "x"})


def test_overrides():
    cfg = apply_overrides(RunConfig(), ["esl.window=9", "scene.name=step", "run.method='sgm'",
                                        "esl.tv_refine.lam=0.5", "sgm.disparity_min=90"])
    assert cfg.esl.window == 9 and cfg.scene.name == "step" and cfg.run.method == "sgm"
    assert cfg.esl.tv_refine.lam == 0.5 and cfg.sgm.disparity_min == 90
    for bad in (["esl.window"], ["window=3"], ["esl.nope=1"]):
        with pytest.raises(ConfigError):
            apply_overrides(RunConfig(), bad)


def test_key_help_covers_every_key():
    def keys(d, prefix=""):
        for k, v in d.items():
            if isinstance(v, dict):
                yield from keys(v, f"{prefix}{k}.")
            else:
                yield prefix + k

    data = to_dict(from_dict({"esl": {"tv_refine": {}}, "run": {"latency_est": 0.0}}))
    assert set(keys(data)) == set(cfgmod.KEY_HELP)
    text = cfgmod.describe_keys()
    for key in cfgmod.KEY_HELP:
        assert key in text


def test_build_helpers_match_sections():
    cfg = loads("[rig]\nwidth = 160\nheight = 120\n[esl]\ndisparity_max = 100\n[sgm]\ndisparity_max = 100\n"
                "[noise]\nlatency = 12.5\n")
    scene = cfg.build_scene()
    assert scene.rig.camera.shape == (120, 160)
    assert scene.timing.lines == 160
    assert cfg.latency_est == 12.5
    assert np.isclose(apply_overrides(cfg, ["run.latency_est=0"]).latency_est, 0.0)
