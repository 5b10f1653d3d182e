import numpy as np
import pytest

from sublift import fileio, synthetic
from sublift.cli import UsageError, main, parse_args


@pytest.fixture
def small_pgm(tmp_path):
    rng = np.random.default_rng(0)
    img = np.clip(synthetic.piecewise_smooth_image(12, 10) + rng.normal(0, 0.03, (10, 12)), 0, 1)
    path = tmp_path / "in.pgm"
    fileio.write_pgm(path, img)
    return path


def test_parse_basic_flags(small_pgm):
    cfg = parse_args(
        ["rof", "--input", str(small_pgm), "--labels", "8", "--lambda", "0.25", "--method", "sublabel"]
    )
    assert cfg.subcommand == "rof"
    assert cfg.labels == 8 and cfg.lam == 0.25 and cfg.method == "sublabel"
    assert (cfg.gamma_min, cfg.gamma_max) == (0.0, 1.0)


def test_parse_unwrap_paper_defaults(small_pgm):
    cfg = parse_args(["unwrap", "--input", str(small_pgm)])
    assert cfg.gamma_min == 0.0
    assert abs(cfg.gamma_max - 4 * np.pi) < 1e-12
    assert cfg.lam == 0.005


def test_parse_rejects_bad_labels(small_pgm):
    with pytest.raises(UsageError):
        parse_args(["rof", "--input", str(small_pgm), "--labels", "1"])
    assert main(["rof", "--input", str(small_pgm), "--labels", "1"]) == 1


def test_parse_rejects_unknown_flag(small_pgm):
    assert main(["rof", "--input", str(small_pgm), "--frobnicate"]) == 1
    assert main(["nonsense"]) == 1


def test_config_file_flags_override(tmp_path, small_pgm):
    conf = tmp_path / "run.conf"
    conf.write_text("labels = 4\nlambda = 0.5  # comment\nmethod = baseline\n")
    cfg = parse_args(["rof", "--input", str(small_pgm), "--config", str(conf)])
    assert cfg.labels == 4 and cfg.lam == 0.5 and cfg.method == "baseline"
    # explicit flags win over the file
    cfg = parse_args(
        ["rof", "--input", str(small_pgm), "--config", str(conf), "--labels", "6"]
    )
    assert cfg.labels == 6 and cfg.lam == 0.5
    bad = tmp_path / "bad.conf"
    bad.write_text("labels 4\n")
    with pytest.raises(UsageError):
        parse_args(["rof", "--input", str(small_pgm), "--config", str(bad)])


def test_missing_input_is_io_error(tmp_path):
    code = main(["rof", "--input", str(tmp_path / "nope.pgm"), "--output", str(tmp_path / "o")])
    assert code == 3


def test_rof_run_constant_image(tmp_path):
    path = tmp_path / "const.pgm"
    fileio.write_pgm(path, np.full((6, 8), 128 / 255.0))
    out = tmp_path / "out"
    code = main(
        ["rof", "--input", str(path), "--output", str(out), "--labels", "4",
         "--max-iters", "800", "--tol", "1e-9"]
    )
    assert code == 0
    result = fileio.read_pfm(out / "result.pfm")
    np.testing.assert_allclose(result, 128 / 255.0, atol=1e-4)
    summary = (out / "summary.txt").read_text()
    assert "final_energy" in summary and "variables_sublabel" in summary
    energy_csv = (out / "energy.csv").read_text()
    assert energy_csv.splitlines()[0] == "iter,energy,primal_res,dual_res,seconds"
    # constant image: energy is (quantization) zero
    final_energy = float(summary.split("final_energy: ")[1].splitlines()[0])
    assert final_energy <= 1e-6


def test_cli_runs_byte_identical(tmp_path, small_pgm):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = main(
            ["rof", "--input", str(small_pgm), "--output", str(out), "--labels", "3",
             "--max-iters", "400"]
        )
        assert code == 0
        outs.append(out)
    for fname in ("result.pfm", "preview.pgm", "energy.csv", "summary.txt"):
        a = (outs[0] / fname).read_bytes()
        b = (outs[1] / fname).read_bytes()
        assert a == b, fname


def test_stereo_end_to_end(tmp_path):
    left, right = synthetic.stereo_pair(32, 24, shift=3)
    lp, rp = tmp_path / "l.pfm", tmp_path / "r.pfm"
    fileio.write_pfm(lp, left)
    fileio.write_pfm(rp, right)
    out = tmp_path / "out"
    code = main(
        ["stereo", "--left", str(lp), "--right", str(rp), "--output", str(out),
         "--labels", "2", "--gamma-min", "0", "--gamma-max", "6", "--disp-samples", "7",
         "--lambda", "0.05", "--max-iters", "3000", "--tol", "1e-8"]
    )
    assert code == 0
    disp = fileio.read_pfm(out / "result.pfm")
    interior = disp[4:-4, 8:-8]
    assert abs(np.median(interior) - 3.0) <= 0.5


def test_stereo_needs_pair_or_volume(tmp_path):
    assert main(["stereo", "--output", str(tmp_path / "o")]) == 1


def test_dff_from_costvolume(tmp_path):
    frames, depth = synthetic.focus_stack(16, 16, n_frames=3)
    vol = __import__("sublift").problems.build_dff_cost(frames)
    cv = tmp_path / "dff.cvol"
    fileio.write_cvol(cv, vol)
    out = tmp_path / "out"
    code = main(
        ["dff", "--costvolume", str(cv), "--output", str(out), "--labels", "3",
         "--lambda", "0.1", "--max-iters", "1500"]
    )
    assert code == 0
    assert (out / "result.pfm").exists()


def test_verify_subcommand(tmp_path):
    out = tmp_path / "rep"
    code = main(["verify", "--trials", "2000", "--output", str(out)])
    assert code == 0
    assert (out / "report.txt").exists() and (out / "report.csv").exists()
    assert "pass" in (out / "report.txt").read_text()


def test_baseline_method_cli(tmp_path, small_pgm):
    out = tmp_path / "out"
    code = main(
        ["rof", "--input", str(small_pgm), "--output", str(out), "--labels", "4",
         "--method", "baseline", "--max-iters", "400"]
    )
    assert code == 0
    assert "method: baseline" in (out / "summary.txt").read_text()


def test_thread_cap_env_var(tmp_path, small_pgm, monkeypatch):
    monkeypatch.setenv("SUBLIFT_THREADS", "1")
    monkeypatch.delenv("OMP_NUM_THREADS", raising=False)
    out = tmp_path / "out"
    code = main(
        ["rof", "--input", str(small_pgm), "--output", str(out), "--labels", "3",
         "--max-iters", "100"]
    )
    assert code == 0
    import os

    assert os.environ.get("OMP_NUM_THREADS") == "1"


def test_robust_paper_parameters_logged(tmp_path, small_pgm):
    out = tmp_path / "out"
    code = main(
        ["robust", "--input", str(small_pgm), "--output", str(out), "--labels", "3",
         "--max-iters", "400"]
    )
    assert code == 0
    summary = (out / "summary.txt").read_text()
    assert "alpha: 25" in summary and "nu: 0.025" in summary and "lambda: 1" in summary
