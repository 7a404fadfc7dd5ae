import shutil
import subprocess
import sys

import numpy as np
import pytest

from esl_depth import config as cfgmod
from esl_depth.cli import main
from esl_depth.pfm import read_pfm, write_pfm
from esl_depth.render import read_ppm


@pytest.fixture(scope="module")
def plane_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("plane")
    ev, gt, tc = d / "ev.txt", d / "gt.pfm", d / "tc.pfm"
    assert main(["simulate", "--scene", "plane", "--events", str(ev), "--gt", str(gt), "--tau-c", str(tc)]) == 0
    return d


def read_tsv(path):
    header, row = path.read_text().splitlines()
    return dict(zip(header.split("\t"), row.split("\t")))


@pytest.mark.parametrize("method", ["esl", "sgm", "mc3d"])
def test_noiseless_pipeline_end_to_end(plane_run, method):
    d = plane_run
    out = d / f"{method}.pfm"
    assert main(["estimate", "--events", str(d / "ev.txt"), "--method", method, "--out", str(out)]) == 0
    assert main(["eval", "--est", str(out), "--gt", str(d / "gt.pfm"), "--out", str(d / f"{method}.tsv"),
                 "--scene", "plane", "--method", method]) == 0
    row = read_tsv(d / f"{method}.tsv")
    assert row["scene"] == "plane" and row["method"] == method
    # one pixel of disparity quantization at 0.5 m on a bF = 66 rig
    assert float(row["RMSE_cm"]) <= 100 * 0.5 ** 2 / 66.0
    assert float(row["FR"]) > 0.9


def test_estimate_from_time_map_matches_events(plane_run):
    d = plane_run
    a, b = d / "a.pfm", d / "b.pfm"
    main(["estimate", "--events", str(d / "ev.txt"), "--method", "mc3d", "--out", str(a)])
    main(["estimate", "--tau-c", str(d / "tc.pfm"), "--method", "esl", "--out", str(b)])
    assert np.isfinite(read_pfm(b)).sum() > 0.9 * np.isfinite(read_pfm(a)).sum()


def test_eval_identical_maps(plane_run, capsys):
    gt = str(plane_run / "gt.pfm")
    assert main(["eval", "--est", gt, "--gt", gt]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "scene\tmethod\tFR\tRMSE_cm"
    assert lines[1].split("\t")[2:] == ["1.0000", "0.0000"]


def test_postproc_and_render(plane_run):
    d = plane_run
    noisy = d / "noisy.pfm"
    rng = np.random.default_rng(0)
    gt = read_pfm(d / "gt.pfm")
    write_pfm(noisy, gt + 0.005 * rng.standard_normal(gt.shape))
    assert main(["postproc", "--in", str(noisy), "--out", str(d / "clean.pfm"), "--no-tv"]) == 0
    assert main(["render", "--in", str(d / "clean.pfm"), "--out", str(d / "clean.ppm")]) == 0
    img = read_ppm(d / "clean.ppm")
    assert img.shape == gt.shape + (3,)
    assert main(["render", "--in", str(d / "gt.pfm"), "--out", str(d / "gt.ppm"), "--range", "0.4", "0.6"]) == 0


@pytest.mark.parametrize("method", ["esl", "sgm"])
def test_threads_do_not_change_bytes(tmp_path, method):
    ev = tmp_path / "ev.txt"
    main(["simulate", "--scene", "slanted", "--jitter", "2", "--seed", "4", "--events", str(ev)])
    outs = []
    for t in (1, 8):
        out = tmp_path / f"{method}{t}.pfm"
        assert main(["estimate", "--events", str(ev), "--method", method, "--threads", str(t),
                     "--set", "sgm.directions=8", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_env_seed_controls_simulation(tmp_path, monkeypatch):
    def sim(name, *extra):
        path = tmp_path / name
        main(["simulate", "--scene", "plane", "--jitter", "2", "--events", str(path), *extra])
        return path.read_bytes()

    monkeypatch.setenv("ESL_SEED", "5")
    a = sim("a.txt", "--seed", "1")
    b = sim("b.txt", "--seed", "2")
    monkeypatch.delenv("ESL_SEED")
    c = sim("c.txt", "--seed", "5")
    assert a == b == c


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(cfgmod.dumps(cfgmod.apply_overrides(cfgmod.RunConfig(), ["scene.name=step"])))
    ev = tmp_path / "ev.txt"
    gt = tmp_path / "gt.pfm"
    assert main(["simulate", "-c", str(cfg), "--events", str(ev), "--gt", str(gt)]) == 0
    z = read_pfm(gt)
    assert set(np.unique(z[np.isfinite(z)]).round(6)) == {0.45, 0.6}


@pytest.mark.parametrize("argv, code", [
    (["simulate", "--events", "x", "--set", "esl.window=4"], 3),
    (["simulate", "--events", "x", "--set", "bogus.key=1"], 3),
    (["simulate", "--events", "x", "--threads", "0"], 3),
    (["simulate", "--events", "x", "-c", "/nonexistent/run.toml"], 5),
    (["estimate", "--events", "/nonexistent/ev.txt", "--out", "o.pfm"], 5),
    (["render", "--in", "/nonexistent.pfm", "--out", "o.ppm"], 5),
])
def test_exit_codes(argv, code, capsys):
    assert main(argv) == code
    assert capsys.readouterr().err.startswith("error: ")


def test_parse_and_domain_exit_codes(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("# esl-events v1 width=4 height=3 t0=0.000 T=10.000\nnot an event\n")
    assert main(["estimate", "--events", str(bad), "--out", str(tmp_path / "o.pfm")]) == 4
    small = tmp_path / "small.pfm"
    write_pfm(small, np.ones((3, 4)))
    big = tmp_path / "big.pfm"
    write_pfm(big, np.ones((5, 4)))
    assert main(["eval", "--est", str(small), "--gt", str(big)]) == 6
    empty = tmp_path / "empty.pfm"
    write_pfm(empty, np.full((3, 4), np.nan))
    assert main(["eval", "--est", str(empty), "--gt", str(small)]) == 6
    # a time map of the wrong size for the configured camera
    assert main(["estimate", "--tau-c", str(small), "--out", str(tmp_path / "o.pfm")]) == 6


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["estimate", "--out", "x.pfm"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--scenes", "cube"])
    assert exc.value.code == 2


def test_help_lists_every_config_key(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    text = capsys.readouterr().out
    for key in cfgmod.KEY_HELP:
        assert key in text
    for sub in ("simulate", "estimate", "postproc", "eval", "render", "bench"):
        assert sub in text


def test_bench_writes_table_and_figures(tmp_path):
    out = tmp_path / "bench"
    assert main(["bench", "--scenes", "slanted", "--sigmas", "0", "2", "--out-dir", str(out), "--quiet"]) == 0
    rows = [r.split("\t") for r in (out / "bench.tsv").read_text().splitlines()]
    assert rows[0] == ["scene", "sigma_us", "method", "stage", "FR", "RMSE_cm"]
    raw = {(r[1], r[2]): float(r[5]) for r in rows[1:] if r[3] == "raw"}
    assert raw[("2", "esl")] < raw[("2", "mc3d")]
    for name in ("rmse_raw.png", "rmse_proc.png", "fill_rate_raw.png", "fill_rate_proc.png", "depth_slanted.png"):
        assert (out / name).stat().st_size > 0
    assert read_ppm(out / "slanted_2_esl.ppm").shape == (240, 320, 3)


def test_bench_is_repeatable(tmp_path):
    args = ["bench", "--scenes", "plane", "--sigmas", "2", "--no-figures", "--quiet"]
    main(args + ["--out-dir", str(tmp_path / "a")])
    main(args + ["--out-dir", str(tmp_path / "b"), "--threads", "4"])
    assert (tmp_path / "a" / "bench.tsv").read_bytes() == (tmp_path / "b" / "bench.tsv").read_bytes()


def test_console_entry_point(tmp_path):
    exe = shutil.which("esl-depth")
    cmd = [exe] if exe else [sys.executable, "-m", "esl_depth"]
    res = subprocess.run(cmd + ["eval", "--est", str(tmp_path / "x.pfm"), "--gt", str(tmp_path / "y.pfm")],
                         capture_output=True, text=True)
    assert res.returncode == 5
    assert "error:" in res.stderr
