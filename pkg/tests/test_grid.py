"""Grid construction, spectral differentiation, quadrature and norms."""

import numpy as np
import pytest

from mkdvlab.grid import (
    Field,
    derivative_matrix,
    h2_norm_sq,
    integrate,
    make_field,
    make_grid,
    quadrature,
    sample,
    spectral_derivative,
)


def test_grid_properties():
    g = make_grid(50.0, 256)
    assert g.h == pytest.approx(100.0 / 256)
    assert g.x[0] == pytest.approx(-50.0)
    assert g.x[-1] == pytest.approx(50.0 - g.h)
    assert g.k_max == pytest.approx(np.pi * 256 / 100.0)
    assert len(g.wavenumbers) == 129


@pytest.mark.parametrize("n", [0, 15, 17, 100, 1000])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        make_grid(10.0, n)


def test_grid_rejects_nonpositive_length():
    with pytest.raises(ValueError):
        make_grid(-1.0, 64)


def test_field_shape_and_finiteness():
    g = make_grid(10.0, 64)
    with pytest.raises(ValueError):
        make_field(g, np.zeros(65))
    with pytest.raises(ValueError):
        make_field(g, np.full(64, np.nan))


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_spectral_derivative_of_gaussian(order):
    g = make_grid(20.0, 512)
    x = g.x
    f = make_field(g, np.exp(-(x**2)))
    # analytic derivatives of exp(-x^2) via Hermite-style recursions
    exact = {
        1: -2 * x * np.exp(-(x**2)),
        2: (4 * x**2 - 2) * np.exp(-(x**2)),
        3: (12 * x - 8 * x**3) * np.exp(-(x**2)),
        4: (16 * x**4 - 48 * x**2 + 12) * np.exp(-(x**2)),
    }[order]
    np.testing.assert_allclose(spectral_derivative(f, order).values, exact, atol=1e-9)


def test_spectral_derivative_order_validation():
    g = make_grid(10.0, 64)
    f = make_field(g, np.zeros(64))
    with pytest.raises(ValueError):
        spectral_derivative(f, 5)


def test_quadrature_of_gaussian():
    g = make_grid(30.0, 512)
    f = sample(g, lambda x: np.exp(-(x**2)))
    assert quadrature(f) == pytest.approx(np.sqrt(np.pi), abs=1e-12)
    assert integrate(g, f.values) == pytest.approx(np.sqrt(np.pi), abs=1e-12)


def test_h2_norm_of_sine():
    # int over one period of sin^2(kx)(1 + k^2 + k^4) with k = pi/L
    g = make_grid(np.pi, 128)
    k = 1.0
    f = sample(g, lambda x: np.sin(k * x))
    expected = np.pi * (1 + k**2 + k**4)
    assert h2_norm_sq(f) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_derivative_matrix_matches_spectral_derivative(order):
    g = make_grid(15.0, 128)
    rng = np.random.default_rng(3)
    vals = np.exp(-(g.x**2) / 4) * rng.standard_normal(g.n)
    # smooth it so the matrix and the FFT agree to round-off on the same data
    f = make_field(g, np.convolve(vals, np.ones(8) / 8, mode="same"))
    D = derivative_matrix(g, order)
    np.testing.assert_allclose(
        D @ f.values, spectral_derivative(f, order).values, atol=1e-8
    )
