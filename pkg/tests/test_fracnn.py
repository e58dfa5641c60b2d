import numpy as np
import pytest

from fracfilter import synthetic
from fracfilter.bench import time_conv_max
from fracfilter.config import FdifConfig, FracnnConfig
from fracfilter.direction import adaptive_filter, build_filter_bank
from fracfilter.direction import direction_field
from fracfilter.exceptions import InvalidArgumentError
from fracfilter.fdif import fdif_iterate
from fracfilter.fracnn import (bank_responses, conv_max_layer, fracnn_forward,
                               fracnn_layers, nonlinear_layer)

from conftest import horizontal_line


def _contrast(img, mask):
    return img[mask].mean() / img[~mask].mean()


def test_conv_max_fixes_constants():
    out = conv_max_layer(np.full((20, 20), 0.35))
    np.testing.assert_allclose(out, 0.35, atol=1e-12)


def test_bank_responses_shape():
    bank = build_filter_bank(6, 5)
    assert bank_responses(np.ones((10, 12)), bank).shape == (6, 10, 12)


def test_conv_max_on_a_horizontal_line():
    img = horizontal_line((31, 31))
    bank = build_filter_bank()

    out, index = conv_max_layer(img, bank, return_index=True)
    horizontal = bank_responses(img, bank)[0]

    np.testing.assert_allclose(out[15], horizontal[15])
    np.testing.assert_allclose(out[15], 1)
    assert np.all(index[15] == 0)


def test_conv_max_dominates_snapped_adaptive_filter(curve_fixture):
    img, _ = curve_fixture
    bank = build_filter_bank()

    theta = bank.snap(direction_field(img).theta)
    adaptive = adaptive_filter(img, theta, side=bank.side)

    assert np.all(conv_max_layer(img, bank) >= adaptive - 1e-12)


def test_conv_max_with_threads(curve_fixture):
    img, _ = curve_fixture
    bank = build_filter_bank(12, 9)
    np.testing.assert_array_equal(conv_max_layer(img, bank, threads=1),
                                  conv_max_layer(img, bank, threads=4))


@pytest.mark.parametrize('k', [0, 3, 7, 12, 15, 22, 29])
def test_conv_max_rotation_at_bank_resolution(k):
    bank = build_filter_bank()
    img = synthetic.line_raster((41, 41), bank.angles[k])

    out, index = conv_max_layer(img, bank, return_index=True)
    responses = bank_responses(img, bank)[:, 20, 20]

    assert out[20, 20] == pytest.approx(1, abs=1e-6)
    assert responses[k] == pytest.approx(out[20, 20], abs=1e-6)
    assert index[20, 20] == np.flatnonzero(
        np.isclose(responses, responses.max()))[0]


@pytest.mark.parametrize('c', [0.1, 0.6, 1.0])
@pytest.mark.parametrize('alpha', [0.5, 2.0, 3.5])
def test_nonlinear_fixes_constants(c, alpha):
    out = nonlinear_layer(np.full((12, 12), c), alpha=alpha)
    np.testing.assert_allclose(out, c, atol=1e-9)


def test_nonlinear_annihilates_non_positive(rng):
    f = rng.normal(0, 1, size=(30, 30))

    out = nonlinear_layer(f, alpha=2.0)

    assert np.all(out[f <= 0] == 0)


def test_nonlinear_sharpens_a_line():
    img = np.full((9, 9), 0.1)
    img[4] = 0.9
    line = img > 0.5

    out = nonlinear_layer(img, alpha=2.0, mean_side=9)

    assert _contrast(out, line) > _contrast(img, line)
    assert _contrast(out, line) == pytest.approx(81)


def test_nonlinear_numerator_variant(rng):
    positive = rng.uniform(size=(16, 16))
    signed = rng.normal(0.2, 0.5, size=(16, 16))

    np.testing.assert_allclose(
        nonlinear_layer(positive, rectify_numerator=True),
        nonlinear_layer(positive))

    literal = nonlinear_layer(signed)
    rectified = nonlinear_layer(signed, rectify_numerator=True)

    assert np.all(rectified >= literal - 1e-12)
    assert np.any(rectified > literal)


@pytest.mark.parametrize('kwargs, message', [
    [dict(alpha=0), 'Expected alpha to be positive, got 0'],
    [dict(alpha=-1.0), 'Expected alpha to be positive, got -1.0'],
    [dict(mean_side=4), 'Expected mean_side to be an odd integer >= 1, got 4'],
])
def test_nonlinear_invalid_arguments(kwargs, message):
    with pytest.raises(InvalidArgumentError) as excinfo:
        nonlinear_layer(np.ones((5, 5)), **kwargs)

    assert str(excinfo.value) == message


@pytest.mark.parametrize('depth', [1, 3])
def test_fracnn_fixes_constants(depth):
    out = fracnn_forward(np.full((24, 24), 0.55), FracnnConfig(depth=depth))
    np.testing.assert_allclose(out, 0.55, atol=1e-6)


def test_fracnn_layers_are_measurements(curve_fixture):
    img, _ = curve_fixture

    layers = list(fracnn_layers(img, FracnnConfig(depth=3, bank_size=12)))

    assert len(layers) == 3
    assert all(layer.min() >= 0 for layer in layers)


def test_fracnn_margin_grows_per_layer(curve_fixture):
    img, gt = curve_fixture
    curve = gt > 0

    def margin(x):
        return x[curve].mean() - x[~curve].mean()

    margins = [margin(img)] + [
        margin(layer) for layer in fracnn_layers(img, FracnnConfig(depth=3))
    ]

    assert np.all(np.diff(margins) > 0)


def test_fracnn_output_is_bounded(curve_fixture):
    img, _ = curve_fixture
    out = fracnn_forward(img, FracnnConfig(depth=2))
    assert out.min() >= 0 and out.max() <= 1


def test_fracnn_is_deterministic(curve_fixture):
    img, _ = curve_fixture
    cfg = FracnnConfig(depth=2, bank_size=10)
    np.testing.assert_array_equal(fracnn_forward(img, cfg),
                                  fracnn_forward(img, cfg))


@pytest.mark.parametrize('transpose', [False, True],
                         ids=['horizontal', 'vertical'])
def test_fracnn_approximates_fdif_on_aligned_structure(transpose):
    # intensity changes across rows only, structure is horizontal everywhere
    ramp = np.repeat(np.linspace(0, 1, 64)[:, None], 64, axis=1)
    img = ramp.T if transpose else ramp

    fracnn = fracnn_forward(img, FracnnConfig(depth=3, alpha=2.0))
    fdif = fdif_iterate(img, FdifConfig(iterations=3, alpha=2.0))

    assert np.abs(fracnn - fdif).mean() <= 0.05


@pytest.mark.slow
def test_conv_max_cost_is_linear_in_bank_size(rng):
    img = rng.uniform(size=(512, 512))

    full = time_conv_max(img, 30, repeat=5)
    half = time_conv_max(img, 15, repeat=5)

    assert 1.6 <= full / half <= 2.4
