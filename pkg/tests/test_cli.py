import json

import numpy as np
import pytest

from eitdbar.cli import main
from eitdbar.dataset import read_pair


def run(argv):
    return main(argv)


def test_generate_dataset_smoke_and_rerun_identical(tmp_path):
    out = tmp_path / "d"
    argv = [
        "generate-dataset", "--style", "kit4", "--count", "2", "--seed", "7",
        "--out", str(out), "--cgo-n", "64", "--sim-n", "16", "--out-n", "32", "--z-n", "16", "--tol", "1e-5",
    ]
    assert run(argv) == 0
    files = sorted(out.glob("*.eitp"))
    assert len(files) == 2
    assert (out / "manifest.json").exists()
    assert (out / "generate_dataset_config.json").exists()
    blobs = [f.read_bytes() for f in files]
    for f in files:
        f.unlink()
    assert run(argv) == 0
    assert [f.read_bytes() for f in sorted(out.glob("*.eitp"))] == blobs


@pytest.fixture(scope="module")
def homog_measurement(tmp_path_factory):
    d = tmp_path_factory.mktemp("meas")
    out = d / "homog.json"
    assert run([
        "simulate", "--phantom", "homogeneous", "--layout", "unit-disc-32",
        "--background", "1.0", "--record-sigma0", "--out", str(out),
    ]) == 0
    return out


def test_reconstruct_homogeneous_near_constant(tmp_path, homog_measurement):
    out = tmp_path / "rec"
    assert run([
        "reconstruct", "--measurements", str(homog_measurement),
        "--radius", "3.5", "--z-n", "16", "--k-n", "32", "--out", str(out),
    ]) == 0
    rec = read_pair(out / "reconstruction.eitp")
    dev = np.max(np.abs(rec.recon.sigma_db - 1.0))
    assert dev < 0.05
    assert (out / "reconstruction.png").exists()
    assert (out / "reconstruct_config.json").exists()


def test_reconstruct_missing_layout_flag_named(tmp_path, homog_measurement, capsys):
    out = tmp_path / "rec"
    code = run([
        "reconstruct", "--measurements", str(homog_measurement),
        "--layout", str(tmp_path / "nope.json"),
        "--radius", "3.0", "--out", str(out),
    ])
    assert code == 1
    err = capsys.readouterr().err
    assert "--layout" in err


def test_reconstruct_missing_measurements(tmp_path, capsys):
    code = run([
        "reconstruct", "--measurements", str(tmp_path / "missing.json"),
        "--radius", "3.0", "--out", str(tmp_path / "o"),
    ])
    assert code == 1
    assert "--measurements" in capsys.readouterr().err


@pytest.mark.slow
def test_reconstruct_kit4_style_tank(tmp_path):
    meas = tmp_path / "kit4.json"
    truth = tmp_path / "truth.eitp"
    assert run([
        "simulate", "--phantom", "kit4", "--layout", "unit-disc-32",
        "--seed", "3", "--record-sigma0", "--truth-out", str(truth),
        "--out", str(meas),
    ]) == 0
    out = tmp_path / "rec"
    assert run([
        "reconstruct", "--measurements", str(meas), "--radius", "4.0",
        "--z-n", "32", "--out", str(out),
    ]) == 0
    rec = read_pair(out / "reconstruction.eitp")
    tr = read_pair(truth)
    from eitdbar.metrics import rel_error
    from scipy.ndimage import zoom

    truth_vals = zoom(tr.truth.values, 0.5, order=0)
    err = rel_error(rec.recon.sigma_db, truth_vals, 2)
    assert err < 40.0


def test_evaluate_identical_gives_ssim_one(tmp_path, capsys):
    from tests_helpers_pair import make_synthetic_pair_file

    p = make_synthetic_pair_file(tmp_path / "p.eitp")
    assert run(["evaluate", "--recon", str(p), "--truth-eitp", str(p)]) == 0
    out = capsys.readouterr().out
    assert "ssim:" in out
    # recon slot evaluated against its own truth slot: not identical images
    assert run(["evaluate", "--recon", str(p), "--out", str(tmp_path / "r.txt")]) == 0
    assert (tmp_path / "r.txt").exists()


def test_render_constant_and_shared_scale(tmp_path):
    from tests_helpers_pair import make_synthetic_pair_file

    p1 = make_synthetic_pair_file(tmp_path / "a.eitp", seed=1)
    p2 = make_synthetic_pair_file(tmp_path / "b.eitp", seed=2)
    o1 = tmp_path / "a.png"
    assert run(["render", "--input", str(p1), "--out", str(o1)]) == 0
    assert o1.exists()
    sidecar = (tmp_path / "a.png.txt").read_text()
    assert "min:" in sidecar and "max:" in sidecar
    o2 = tmp_path / "b.png"
    assert run(["render", "--input", str(p2), "--match", str(p1), "--out", str(o2)]) == 0
    s2 = (tmp_path / "b.png.txt").read_text()
    scale_lines = [l for l in s2.splitlines() if l.startswith("scale_")]
    assert len(scale_lines) == 2


def test_render_report_row_stability(tmp_path, capsys):
    from tests_helpers_pair import make_synthetic_pair_file

    p = make_synthetic_pair_file(tmp_path / "p.eitp")
    run(["evaluate", "--recon", str(p)])
    first = capsys.readouterr().out
    run(["evaluate", "--recon", str(p)])
    second = capsys.readouterr().out
    assert first == second
