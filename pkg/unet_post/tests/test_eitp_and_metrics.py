import numpy as np
import pytest

from unet_post.eitp import EitpError, PairRecord, load_directory, read_pair, write_pair
from unet_post.evaluate import SSIM_K1, rel_error, score, ssim


def make_record(seed=0, n=64):
    rng = np.random.default_rng(seed)
    return PairRecord(
        truth=rng.uniform(0.05, 0.35, (n, n)),
        recon=rng.uniform(0.05, 0.35, (n, n)),
        m0_imag=0.01 * rng.normal(size=(n, n)),
        seed=1234,
        radius=4.5,
        sigma_b=0.14,
        style="kit4",
    )


def test_round_trip(tmp_path):
    rec = make_record()
    p = tmp_path / "r.eitp"
    write_pair(rec, p)
    back = read_pair(p)
    assert np.array_equal(back.truth, rec.truth)
    assert np.array_equal(back.recon, rec.recon)
    assert np.array_equal(back.m0_imag, rec.m0_imag)
    assert (back.seed, back.radius, back.sigma_b, back.style) == (1234, 4.5, 0.14, "kit4")


def test_corruption_rejected(tmp_path):
    rec = make_record()
    p = tmp_path / "r.eitp"
    write_pair(rec, p)
    raw = bytearray(p.read_bytes())
    raw[100] ^= 0xFF
    p.write_bytes(bytes(raw))
    with pytest.raises(EitpError):
        read_pair(p)


def test_load_directory_skips_invalid(tmp_path):
    write_pair(make_record(0), tmp_path / "a.eitp")
    write_pair(make_record(1), tmp_path / "b.eitp")
    (tmp_path / "c.eitp").write_bytes(b"garbage")
    records = load_directory(tmp_path)
    assert len(records) == 2


def test_ssim_identities():
    a = make_record(3).truth
    assert ssim(a, a) == pytest.approx(1.0)
    b = make_record(4).truth
    dr = 1.0
    assert ssim(a, b, dr) == pytest.approx(ssim(b, a, dr), abs=1e-12)
    assert -1.0 <= ssim(a, b, dr) <= 1.0


def test_ssim_constant_shift_closed_form():
    mu, c, dr = 0.5, 0.8, 1.0
    a = np.full((64, 64), mu)
    b = np.full((64, 64), mu + c)
    c1 = (SSIM_K1 * dr) ** 2
    expect = (2 * mu * (mu + c) + c1) / (mu**2 + (mu + c) ** 2 + c1)
    assert ssim(b, a, dr) == pytest.approx(expect, rel=1e-10)


def test_rel_error_identities():
    b = make_record(5).truth
    assert rel_error(b, b, 2) == 0.0
    assert rel_error(2 * b, b, 1) == pytest.approx(100.0)
    assert rel_error(2 * b, b, 2) == pytest.approx(100.0)


def test_score_row_format():
    r = make_record(6)
    row = score(r.recon, r.truth).row()
    parts = row.split(",")
    assert len(parts) == 4 and parts[3] == "full-square"
