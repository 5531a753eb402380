import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eitdbar.errors import ValidationError
from eitdbar.grids import SquareGrid
from eitdbar.metrics import (
    SSIM_K1,
    build_truth_image,
    disc_mask,
    evaluate_images,
    rel_error,
    ssim,
)
from eitdbar.phantoms import InclusionSpec, OrganTemplate, SplitSpec, generate_act4_phantom


def _image(seed=0, n=64):
    rng = np.random.default_rng(seed)
    g = SquareGrid(n, 1.0)
    X, Y = g.mesh()
    return 0.3 + 0.2 * np.sin(3 * X) * np.cos(2 * Y) + 0.05 * rng.normal(size=(n, n))


def test_ssim_identity():
    a = _image()
    assert ssim(a, a) == pytest.approx(1.0)


def test_ssim_symmetry_and_bounds():
    a, b = _image(1), _image(2)
    dr = float(max(a.max(), b.max()) - min(a.min(), b.min()))
    assert ssim(a, b, data_range=dr) == pytest.approx(ssim(b, a, data_range=dr), abs=1e-12)
    for pair in [(a, b), (a, -a), (a, 2 * a)]:
        v = ssim(*pair, data_range=dr)
        assert -1.0 <= v <= 1.0


def test_ssim_constant_shift_closed_form():
    # for constant images a = mu, b = mu + c the local stats are exact:
    # contrast/structure terms are 1 and SSIM = (2 mu (mu+c) + C1) / (mu^2 + (mu+c)^2 + C1)
    mu, c, dr = 0.5, 0.8, 1.0
    a = np.full((64, 64), mu)
    b = np.full((64, 64), mu + c)
    c1 = (SSIM_K1 * dr) ** 2
    expect = (2 * mu * (mu + c) + c1) / (mu**2 + (mu + c) ** 2 + c1)
    got = ssim(b, a, data_range=dr)
    assert got == pytest.approx(expect, rel=1e-10)
    assert got < 1.0


def test_ssim_shape_mismatch():
    with pytest.raises(ValidationError):
        ssim(np.zeros((8, 8)), np.zeros((9, 9)))


def test_rel_error_basics():
    b = _image(3)
    assert rel_error(b, b, 1) == 0.0
    assert rel_error(b, b, 2) == 0.0
    assert rel_error(2 * b, b, 1) == pytest.approx(100.0)
    assert rel_error(2 * b, b, 2) == pytest.approx(100.0)


def test_rel_error_single_node_bump():
    b = _image(4)
    norm2 = np.linalg.norm(b.ravel())
    a = b.copy()
    a[5, 7] += norm2
    assert rel_error(a, b, 2) == pytest.approx(100.0)
    assert rel_error(a, b, 1) == pytest.approx(100.0 * norm2 / np.abs(b).sum())


@settings(max_examples=25, deadline=None)
@given(c=st.floats(0.01, 100.0), seed=st.integers(0, 1000))
def test_rel_error_scale_invariant(c, seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.1, 1.0, (16, 16))
    b = rng.uniform(0.1, 1.0, (16, 16))
    for p in (1, 2):
        assert rel_error(c * a, c * b, p) == pytest.approx(rel_error(a, b, p), rel=1e-9)


def test_masked_evaluation():
    g = SquareGrid(64, 1.0)
    a, b = _image(5), _image(6)
    full = evaluate_images(a, b, grid=g, mask="full-square")
    disc = evaluate_images(a, b, grid=g, mask="disc")
    assert full.masked == "full-square"
    assert disc.masked == "disc"
    m = disc_mask(g)
    assert disc.rel_l2 == pytest.approx(rel_error(a, b, 2, m))
    assert "mask: disc" in disc.to_text()
    assert disc.to_row().count(",") == 3


def test_build_truth_image_healthy_values():
    # measured values on an unperturbed template: exactly three levels
    template = OrganTemplate.load()
    g = SquareGrid(64, 1.0)
    specs = [
        InclusionSpec(kind="polygon", name=o.name, conductivity=1.0, vertices=o.curve)
        for o in template.organs
    ]
    measured = {
        "heart": 0.67781,
        "aorta": 0.67781,
        "left_lung": 0.056714,
        "right_lung": 0.056714,
        "spine": 0.056714,
    }
    truth = build_truth_image(specs, measured, g, background=0.3)
    assert set(np.unique(truth.values)) == {0.67781, 0.056714, 0.3}


def test_build_truth_image_assigns_injury_to_whole_subregion():
    template = OrganTemplate.load()
    rng = np.random.default_rng(0)
    for _ in range(50):
        img, specs = generate_act4_phantom(rng, template)
        if any(s.split is not None for s in specs):
            break
    else:
        pytest.fail("no injured phantom drawn")
    measured = {
        "heart": 0.67781,
        "aorta": 0.67781,
        "left_lung": 0.056714,
        "right_lung": 0.056714,
        "spine": 0.056714,
        "left_lung_injury": 0.9,
        "right_lung_injury": 0.9,
    }
    g = SquareGrid(64, 1.0)
    truth = build_truth_image(specs, measured, g, background=0.3)
    assert 0.9 in np.unique(truth.values)


def test_build_truth_image_rejects_infinite_conductor():
    # perfect conductors (copper) cannot be rasterized into a truth image
    g = SquareGrid(64, 1.0)
    spec = InclusionSpec(kind="ellipse", name="copper", conductivity=1.0,
                         center=(0.0, 0.0), semi_axes=(0.2, 0.2))
    with pytest.raises(ValidationError):
        build_truth_image([spec], {"copper": np.inf}, g, background=0.3)
