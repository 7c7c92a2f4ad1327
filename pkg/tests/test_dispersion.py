import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lrcone.dispersion import (DispersionParams, circulant_from_laurent, circle_mean_abs,
                               group_velocity_max, laurent_coefficients, m_gamma, omega_complex,
                               symbol, velocity_bound_quadratic)
from lrcone.harmonic import evolve_matrices_spectral
from lrcone.model import ModelSpec, build_coupling

P = DispersionParams(5.0, 2.0)


def brute_m(a, b, gamma, n=200_001):
    theta = np.linspace(0, 2 * np.pi, n)
    z = np.exp(gamma + 1j * theta)
    return float(np.max(np.abs(np.sqrt(a - b * (z + 1 / z)).imag)))


def test_params_reject_indefinite():
    with pytest.raises(ValueError):
        DispersionParams(4.0, 2.0)


def test_omega_matches_cosh_form():
    z = cmath.exp(0.5 + 1j * math.pi / 3)
    expected = cmath.sqrt(5 - 4 * cmath.cosh(0.5 + 1j * math.pi / 3))
    assert omega_complex(P, z) == pytest.approx(expected, abs=1e-14)


def test_omega_on_unit_circle_is_phonon_frequency():
    theta = np.linspace(0, 2 * np.pi, 17)
    w = omega_complex(P, np.exp(1j * theta))
    assert np.allclose(w.imag, 0, atol=1e-14)
    assert np.allclose(w.real, np.sqrt(5 - 4 * np.cos(theta)), atol=1e-14)


def test_omega_pole():
    with pytest.raises(ValueError):
        omega_complex(P, 0)


@pytest.mark.parametrize("gamma", [0.1, 0.5, 1.0, 2.0])
def test_m_gamma_against_brute_grid(gamma):
    assert m_gamma(P, gamma) == pytest.approx(brute_m(5, 2, gamma), rel=1e-8)


def test_m_gamma_anchor_values():
    assert m_gamma(P, 1.0) == pytest.approx(math.sinh(1.0), rel=1e-9)
    assert m_gamma(P, 0.5) == pytest.approx(0.5211, abs=1e-4)


def test_m_gamma_zero_on_circle():
    assert m_gamma(P, 0.0) == pytest.approx(0.0, abs=1e-14)


def test_m_gamma_uncoupled():
    assert m_gamma(DispersionParams(3.0, 0.0), 1.0) == 0.0


def test_m_gamma_refinement_never_decreases():
    coarse = m_gamma(P, 0.7, grid_size=64)
    fine = m_gamma(P, 0.7, grid_size=8192)
    assert fine >= coarse - 1e-12
    assert fine == pytest.approx(coarse, rel=1e-8)


@given(st.floats(0.01, 3.0), st.floats(0.01, 3.0))
@settings(max_examples=40, deadline=None)
def test_m_gamma_monotone_in_gamma(g1, g2):
    lo, hi = sorted((g1, g2))
    assert m_gamma(P, lo) <= m_gamma(P, hi) + 1e-12


def test_group_velocity_closed_form():
    # maximum of b sin(th)/sqrt(a - 2b cos th) sits at cos th = (a - sqrt(a^2 - 4b^2)) / 2b
    for a, b in [(5.0, 2.0), (3.0, 1.0), (10.0, 0.5)]:
        c = (a - math.sqrt(a * a - 4 * b * b)) / (2 * b)
        expected = b * math.sqrt(1 - c * c) / math.sqrt(a - 2 * b * c)
        assert group_velocity_max(DispersionParams(a, b)) == pytest.approx(expected, rel=1e-10)


def test_velocity_bound_quadratic_near_group_velocity():
    vq = velocity_bound_quadratic(P)
    assert vq.group_velocity == pytest.approx(1.0, rel=1e-10)
    assert abs(vq.value - 1.0) <= 0.01
    assert vq.value >= vq.group_velocity - 1e-9


def test_velocity_bound_quadratic_validation():
    with pytest.raises(ValueError):
        velocity_bound_quadratic(P, [])
    with pytest.raises(ValueError):
        velocity_bound_quadratic(P, [0.0, 1.0])


def test_symbol_small_omega_limit():
    assert symbol("g", 0.0, 2.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        symbol("x", 1.0, 1.0)


@pytest.mark.parametrize("kind", ["f", "g", "h"])
def test_symbol_even_in_omega(kind):
    w = np.array([0.3 + 0.2j, 2.1 - 0.7j])
    assert np.allclose(symbol(kind, w, 1.3), symbol(kind, -w, 1.3))


@pytest.mark.parametrize("kind", ["f", "g", "h"])
@pytest.mark.parametrize("t", [0.5, 1.0, 3.0])
@pytest.mark.parametrize("gamma", [0.25, 0.5, 1.0, 2.0])
def test_laurent_bound_holds(kind, t, gamma):
    tab = laurent_coefficients(P, kind, t, gamma, K=40)
    assert tab.violations(1e-8) == 0


def test_laurent_symmetric_and_real():
    tab = laurent_coefficients(P, "f", 1.0, 0.5, K=10)
    assert np.allclose(tab.coeffs.imag, 0, atol=1e-14)
    assert np.allclose(tab.coeffs, tab.coeffs[::-1], atol=1e-14)


def test_laurent_reconstructs_symbol():
    tab = laurent_coefficients(P, "g", 1.5, 0.5, K=60)
    theta = 0.37
    series = np.sum(tab.coeffs * np.exp(1j * tab.ks * theta))
    direct = symbol("g", omega_complex(P, np.exp(1j * theta)), 1.5)
    assert series == pytest.approx(direct, abs=1e-12)


def test_laurent_matches_ring_matrix():
    dim, t = 41, 1.2
    ring = evolve_matrices_spectral(build_coupling(ModelSpec(20, "cyclic", 5, 2)), t)
    for kind, mat in (("f", ring.A), ("g", ring.B), ("h", ring.Adot)):
        tab = laurent_coefficients(P, kind, t, 1.0, K=20)
        assert np.allclose(circulant_from_laurent(tab, dim).real, mat, atol=1e-10)


def test_laurent_coeff_lookup():
    tab = laurent_coefficients(P, "f", 1.0, 0.5, K=5)
    assert tab.coeff(-5) == tab.coeffs[0]
    assert tab.coeff(0) == tab.coeffs[5]


def test_laurent_errors():
    with pytest.raises(ValueError):
        laurent_coefficients(P, "f", 1.0, 0.5, K=5, fft_size=1000)
    with pytest.raises(ValueError):
        laurent_coefficients(P, "f", 1.0, 0.5, K=32, fft_size=64)
    with pytest.raises(ValueError):
        laurent_coefficients(P, "q", 1.0, 0.5, K=5)


def test_laurent_csv(tmp_path):
    tab = laurent_coefficients(P, "h", 1.0, 0.5, K=3)
    tab.to_csv(tmp_path / "l.csv")
    lines = (tmp_path / "l.csv").read_text().splitlines()
    assert lines[0] == "k,re_c,im_c,bound"
    assert len(lines) == 8


def test_circle_mean_at_t_zero():
    assert circle_mean_abs(P, "f", 0.0, 0.7) == pytest.approx(1.0)
    assert circle_mean_abs(P, "h", 0.0, 0.7) == pytest.approx(0.0)


def test_omega_real_axis_values():
    assert omega_complex(P, 1.0) == pytest.approx(1.0)
    assert omega_complex(P, -1.0) == pytest.approx(3.0)


def test_small_gamma_ratio_is_group_velocity():
    assert m_gamma(P, 1e-3) / 1e-3 == pytest.approx(1.0, abs=1e-3)


def test_velocity_bound_other_chain():
    from scipy.optimize import minimize_scalar
    res = minimize_scalar(lambda th: -0.5 * math.sin(th) / math.sqrt(2 - math.cos(th)),
                          bounds=(0, math.pi), method="bounded", options={"xatol": 1e-12})
    vq = velocity_bound_quadratic(DispersionParams(2.0, 0.5))
    assert vq.value == pytest.approx(-res.fun, abs=1e-2)
    assert vq.group_velocity == pytest.approx(-res.fun, rel=1e-9)


def test_uncoupled_velocity_is_zero():
    assert velocity_bound_quadratic(DispersionParams(3.0, 0.0)).value == 0.0


def test_laurent_at_time_zero():
    f = laurent_coefficients(P, "f", 0.0, 0.5, K=5)
    g = laurent_coefficients(P, "g", 0.0, 0.5, K=5)
    assert f.coeff(0) == pytest.approx(1.0)
    assert np.allclose(np.delete(f.coeffs, 5), 0, atol=1e-15)
    assert np.allclose(g.coeffs, 0, atol=1e-15)
