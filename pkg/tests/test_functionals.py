"""Conserved quantities, cutoff family, localized integrals, criticality."""

import numpy as np
import pytest

from mkdvlab.functionals import (
    CutoffFamily,
    cutoff_derivative_inequality,
    cutoff_eval,
    derivative_inequality_holds,
    energy,
    localized_triple,
    make_cutoff_family,
    mass,
    psi,
    psi_prime,
    psi_second,
    second_energy,
)
from mkdvlab.grid import h2_norm_sq, integrate, make_field, make_grid, sample
from mkdvlab.profiles import (
    Breather,
    Soliton,
    breather_eval,
    order_and_validate,
    q_profile,
    shape_pair,
    soliton_eval,
)


@pytest.fixture(scope="module")
def grid():
    return make_grid(50.0, 2048)


def _q1(grid, x0=0.0):
    return make_field(grid, q_profile(1.0, grid.x - x0))


def test_mass_of_zero(grid):
    assert mass(make_field(grid, np.zeros(grid.n))) == 0.0


def test_mass_of_soliton(grid):
    # int Q_c^2 = 4 sqrt(c), so the half-convention mass of Q_1 is 2
    assert mass(_q1(grid)) == pytest.approx(2.0, abs=1e-12)


def test_energy_of_soliton(grid):
    # E[Q_c] = -(2/3) c^{3/2}
    assert energy(_q1(grid)) == pytest.approx(-2.0 / 3.0, abs=1e-9)
    q2 = make_field(grid, q_profile(2.0, grid.x))
    assert energy(q2) == pytest.approx(-(2.0 / 3.0) * 2.0**1.5, abs=1e-9)


def test_energy_small_amplitude(grid):
    eps = 1e-3
    u = make_field(grid, eps * q_profile(1.0, grid.x))
    from mkdvlab.grid import spectral_derivative

    qx = spectral_derivative(_q1(grid), 1).values
    expected = 0.5 * eps**2 * integrate(grid, qx**2)
    assert energy(u) == pytest.approx(expected, rel=1e-5)
    assert energy(u) > 0


def test_second_energy_grid_converged():
    vals = []
    for n in (2048, 4096):
        g = make_grid(50.0, n)
        vals.append(second_energy(make_field(g, q_profile(1.0, g.x))))
    assert vals[0] == pytest.approx(vals[1], rel=1e-8)


def test_second_energy_small_amplitude_scaling(grid):
    eps = 1e-4
    base = np.exp(-(grid.x**2) / 8)
    u = make_field(grid, eps * base)
    uxx = make_field(grid, base)
    from mkdvlab.grid import spectral_derivative

    lead = 0.5 * integrate(grid, spectral_derivative(uxx, 2).values ** 2)
    assert second_energy(u) == pytest.approx(eps**2 * lead, rel=1e-6)


def test_psi_pointwise_values():
    assert psi(0.01, 0.0) == pytest.approx(0.5, abs=1e-14)
    for x in (0.3, 1.7, 9.0):
        assert psi(0.01, x) + psi(0.01, -x) == pytest.approx(1.0, abs=1e-14)
    # Psi'(0) = -sqrt(sigma)/(2 pi) from differentiating the arctan-exp form
    assert psi_prime(0.01, 0.0) == pytest.approx(-np.sqrt(0.01) / (2 * np.pi))
    assert psi_prime(0.01, 0.0) == pytest.approx(-1.59154943e-2, rel=1e-8)


def test_psi_monotone_decreasing():
    x = np.linspace(-40, 40, 500)
    vals = psi(0.01, x)
    assert np.all(np.diff(vals) < 0)
    assert np.all((vals > 0) & (vals < 1))


def test_psi_requires_positive_sigma():
    with pytest.raises(ValueError):
        psi(0.0, 1.0)


def test_psi_derivatives_match_finite_differences():
    x = np.linspace(-30, 30, 200)
    eps = 1e-6
    fd1 = (psi(0.04, x + eps) - psi(0.04, x - eps)) / (2 * eps)
    fd2 = (psi_prime(0.04, x + eps) - psi_prime(0.04, x - eps)) / (2 * eps)
    np.testing.assert_allclose(psi_prime(0.04, x), fd1, atol=1e-9)
    np.testing.assert_allclose(psi_second(0.04, x), fd2, atol=1e-9)


def test_cutoff_eval_is_translated_psi():
    x = np.linspace(-20, 20, 100)
    np.testing.assert_allclose(cutoff_eval(0.01, 0.5, 4.0, x), psi(0.01, x - 2.0))


@pytest.mark.parametrize("sigma", [1e-3, 1e-2, 1e-1, 1.0])
def test_cutoff_derivative_inequality(sigma):
    assert cutoff_derivative_inequality(sigma, make_grid(100.0, 4096))


def test_derivative_inequality_negative_control():
    # a perturbed weight violates the second/first derivative bound
    x = make_grid(100.0, 4096).x
    first = psi_prime(0.01, x) + 0.1 * np.cos(x)
    second = psi_second(0.01, x) - 0.1 * np.sin(x)
    assert not derivative_inequality_holds(first, second, 0.01)


def _flagship():
    return order_and_validate(
        [Breather(1.0, 1.0, x2=60.0), Soliton(1.0), Soliton(4.0, x0=60.0)]
    )


def test_make_cutoff_family_flagship():
    fam = make_cutoff_family(_flagship(), (0.5, 2.5), 0.01)
    assert fam.J == 3
    assert fam.tau0 == pytest.approx(0.5)


def test_make_cutoff_family_rejects_bad_speeds():
    cfg = _flagship()
    with pytest.raises(ValueError):
        make_cutoff_family(cfg, (1.5, 2.5), 0.01)  # m_1 above v_2
    with pytest.raises(ValueError):
        make_cutoff_family(cfg, (0.5,), 0.01)  # wrong count


def test_weight_last_is_one(grid):
    fam = make_cutoff_family(_flagship(), (0.5, 2.5), 0.01)
    np.testing.assert_array_equal(fam.weight(3, 1.0, grid.x), np.ones(grid.n))
    np.testing.assert_array_equal(fam.weight_x(3, 1.0, grid.x), np.zeros(grid.n))
    with pytest.raises(IndexError):
        fam.weight(4, 0.0, grid.x)


def test_localized_triple_global_weight(grid):
    fam = make_cutoff_family(_flagship(), (0.5, 2.5), 0.01)
    u = _q1(grid)
    trip = localized_triple(u, fam, 3, 0.0)
    # M_j drops the 1/2 of the conserved mass, hence the factor 2
    assert trip.Mj == pytest.approx(2.0 * mass(u), rel=1e-12)
    assert trip.Ej == pytest.approx(energy(u), rel=1e-12)
    assert trip.Fj == pytest.approx(second_energy(u), rel=1e-12)


def test_localized_triple_weight_localization(grid):
    # sigma = 1 keeps the cutoff transition narrow enough that a profile 40
    # units away sees weight ~1e-9 on one side and ~1 on the other
    fam = CutoffFamily(sigma=1.0, speeds=(0.5,), J=2, tau0=0.5)
    far_right = make_field(grid, q_profile(1.0, grid.x - 40.0))
    far_left = make_field(grid, q_profile(1.0, grid.x + 40.0))
    l2 = integrate(grid, far_right.values**2)
    assert localized_triple(far_right, fam, 1, 0.0).Mj < 1e-3 * l2
    assert localized_triple(far_left, fam, 1, 0.0).Mj == pytest.approx(4.0, abs=1e-3)


def test_localization_consistency(grid):
    fam = CutoffFamily(sigma=0.01, speeds=(0.5,), J=2, tau0=0.5)
    u = make_field(grid, breather_eval(Breather(1.0, 1.0), 0.0, grid.x))
    phi = fam.weight(1, 0.0, grid.x)
    total = integrate(grid, u.values**2)
    split = localized_triple(u, fam, 1, 0.0).Mj + integrate(
        grid, u.values**2 * (1 - phi)
    )
    assert split == pytest.approx(total, rel=1e-14)


@pytest.mark.parametrize(
    "obj",
    [Soliton(c=1.0), Soliton(c=2.5), Breather(alpha=1.0, beta=1.0)],
)
def test_criticality_of_profiles(obj, grid):
    # the first variation of F + 2(b^2-a^2)E + (a^2+b^2)^2 * mass vanishes
    # at the profile, for random smooth localized directions
    a, b = shape_pair(obj)
    if isinstance(obj, Soliton):
        p = make_field(grid, soliton_eval(obj, 0.0, grid.x))
    else:
        p = make_field(grid, breather_eval(obj, 0.0, grid.x))

    def functional(u):
        return (
            second_energy(u)
            + 2.0 * (b**2 - a**2) * energy(u)
            + (a**2 + b**2) ** 2 * mass(u)
        )

    rng = np.random.default_rng(11)
    s = 1e-4
    for _ in range(20):
        coef = rng.standard_normal(5)
        width = rng.uniform(2.0, 6.0)
        phi_vals = np.exp(-(grid.x**2) / (2 * width**2)) * sum(
            c * np.cos(0.3 * k * grid.x) for k, c in enumerate(coef)
        )
        phi = make_field(grid, phi_vals)
        up = make_field(grid, p.values + s * phi.values)
        um = make_field(grid, p.values - s * phi.values)
        deriv = (functional(up) - functional(um)) / (2 * s)
        assert abs(deriv) < 1e-5 * np.sqrt(h2_norm_sq(phi))
