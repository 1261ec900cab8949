import math

import numpy as np
import pytest
from scipy import integrate

from fractonsim.analytic import (
    TwoFractonGeometry,
    boundary_charge,
    boundary_charges,
    conservation_totals,
    detailed_balance_ratio,
    interior_charge_density,
    lattice_two_fracton_profile,
    peak_fwhm,
    piston_weight,
    single_fracton_final,
    stationary_gas_densities,
    two_fracton_final_profile,
)
from fractonsim.errors import ValidationError


def test_single_fracton_final_examples():
    m = single_fracton_final(51, 26).mean_charge
    assert (m[0], m[-1]) == (0.5, 0.5) and not m[1:-1].any()
    m = single_fracton_final(10, 1).mean_charge
    assert m[0] == 1 and not m[1:].any()
    for L, p in [(7, 3), (30, 11), (51, 40)]:
        single_fracton_final(L, p).check_conservation(1, p)
    with pytest.raises(ValidationError):
        single_fracton_final(1, 1)
    with pytest.raises(ValidationError):
        single_fracton_final(8, 9)


def test_geometry_validation_and_sampling():
    with pytest.raises(ValidationError):
        TwoFractonGeometry(40, 40)
    with pytest.raises(ValidationError):
        TwoFractonGeometry(40, 0)
    g = TwoFractonGeometry(40, 20)
    assert g.n_sites() == 41 and g.fracton_sites() == (11, 31)
    x = g.site_coordinates()
    assert x[0] == -20 and x[-1] == 20 and x[10] == -10 and x[30] == 10
    with pytest.raises(ValidationError):
        TwoFractonGeometry(40, 19).n_sites()


def test_gas_densities():
    g = TwoFractonGeometry(80, 40)
    red, blue = stationary_gas_densities(g, 0.0)
    assert red(-5.0) == blue(5.0) == pytest.approx(0.5)
    assert red(5.0) == 0 and blue(-5.0) == 0
    for xi in (-15.0, 3.0, 19.0):
        red, blue = stationary_gas_densities(g, xi)
        assert red(xi - 1) * (40 + xi) == pytest.approx(20)
        assert blue(xi + 1) * (40 - xi) == pytest.approx(20)
    _, blue = stationary_gas_densities(g, 20 - 1e-9)
    assert blue(20.0) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        stationary_gas_densities(g, 20.0)


def test_piston_weight():
    g = TwoFractonGeometry(80, 40)
    total, _ = integrate.quad(lambda s: piston_weight(g, s), -np.inf, np.inf, epsabs=1e-10)
    assert total == pytest.approx(1.0, abs=1e-8)
    assert g.piston_width == pytest.approx(4.472, abs=5e-4)
    var, _ = integrate.quad(lambda s: s * s * piston_weight(g, s), -np.inf, np.inf, epsabs=1e-10)
    assert math.sqrt(var) == pytest.approx(g.piston_width, rel=1e-8)


def test_detailed_balance_ratio():
    g = TwoFractonGeometry(80, 40)
    assert detailed_balance_ratio(g, 0.0) == 1.0
    for xi in (0.5, 1, 3, 10):
        assert detailed_balance_ratio(g, xi) > 1
        assert detailed_balance_ratio(g, -xi - 1) < 1
    with pytest.raises(ValidationError):
        detailed_balance_ratio(g, 19.5)


def test_ratio_matches_gaussian_to_leading_order():
    for L in (400, 1600):
        g = TwoFractonGeometry(L, L / 2)
        for xi in (1, 2, 4):
            exact = math.log(detailed_balance_ratio(g, xi))
            gauss = math.log(piston_weight(g, xi) / piston_weight(g, xi + 1))
            # the discrete ratio is centred on xi, the Gaussian one on xi + 1/2
            assert abs(exact - gauss) < 3 / L
            centred = math.log(piston_weight(g, xi - 0.5) / piston_weight(g, xi + 0.5))
            assert exact == pytest.approx(centred, rel=20 * (xi / L) ** 2)


def test_peak_height_and_width():
    g = TwoFractonGeometry(80, 40)
    assert float(interior_charge_density(g, 0.0)) == pytest.approx(0.0892, abs=5e-5)
    assert float(interior_charge_density(g, 0.0)) == pytest.approx(piston_weight(g, 0.0) * 2 * 40 / 80)
    w1, w2 = peak_fwhm(g), peak_fwhm(TwoFractonGeometry(320, 160))
    assert w1 < 40 / 2
    assert w2 / w1 == pytest.approx(2.0, rel=0.02)


def test_boundary_charge():
    g = TwoFractonGeometry(80, 40)
    left, right = boundary_charges(g)
    assert left == pytest.approx(right, abs=1e-12)
    assert boundary_charge(g) == pytest.approx(0.49350487, abs=1e-7)
    assert boundary_charge(TwoFractonGeometry(80, 79.99)) > 0.999
    assert boundary_charge(TwoFractonGeometry(80, 8)) < boundary_charge(g)


@pytest.mark.parametrize("L", [40, 80, 160])
@pytest.mark.parametrize("frac", [0.25, 0.5, 0.75])
def test_conservation_grid(L, frac):
    q, p = conservation_totals(TwoFractonGeometry(L, L * frac))
    assert q == pytest.approx(2.0, rel=1e-6)
    assert abs(p) < 1e-6 * L


def test_sampled_profile():
    g = TwoFractonGeometry(80, 40)
    prof = two_fracton_final_profile(g)
    m = prof.mean_charge
    assert len(m) == 81
    np.testing.assert_allclose(m, m[::-1], atol=1e-12)
    assert np.argmax(m[1:-1]) + 2 == 41
    assert not m[1:20].any() and not m[61:80].any()
    assert m.sum() == pytest.approx(2.0, abs=2e-3)


def test_lattice_oracle_tracks_continuum():
    g = TwoFractonGeometry(80, 40)
    cont = two_fracton_final_profile(g).mean_charge
    lat = lattice_two_fracton_profile(81, *g.fracton_sites()).mean_charge
    assert lat.sum() == pytest.approx(2.0, abs=1e-9)
    assert np.abs(lat - cont).max() < 0.01
    with pytest.raises(ValidationError):
        lattice_two_fracton_profile(10, 1, 5)
