import math

import numpy as np
import pytest

from lrcone.model import ModelSpec, build_coupling
from lrcone.odes import (CertificationError, certificate, growth_constant, initial_data,
                         ode_propagate, weighted_norm)


def test_scalar_oscillator():
    sol = ode_propagate(np.array([[-4.0]]), 1.0, "A")
    assert sol.X0[0, 0] == pytest.approx(math.cos(2.0), abs=1e-10)
    assert sol.X1[0, 0] == pytest.approx(-2 * math.sin(2.0), abs=1e-10)
    assert sol.halving_error <= 1e-8


def test_b_type_scalar():
    sol = ode_propagate(np.array([[-4.0]]), 1.0, "B")
    assert sol.X0[0, 0] == pytest.approx(math.sin(2.0) / 2, abs=1e-10)


def test_forcing_constant():
    # X0'' = 1 from rest gives t^2 / 2
    sol = ode_propagate(np.zeros((1, 1)), 2.0, "B", forcing=lambda t: np.ones((1, 1)),
                        init=(np.zeros((1, 1)), np.zeros((1, 1))))
    assert sol.X0[0, 0] == pytest.approx(2.0, abs=1e-12)


def test_backward_integration_returns_to_start():
    fwd = ode_propagate(np.array([[-1.0]]), 1.0, "A")
    back = ode_propagate(np.array([[-1.0]]), 0.0, "A", s=1.0, init=(fwd.X0, fwd.X1))
    assert back.X0[0, 0] == pytest.approx(1.0, abs=1e-10)
    assert back.X1[0, 0] == pytest.approx(0.0, abs=1e-10)


def test_callable_omega():
    sol = ode_propagate(lambda t: np.array([[-t]]), 0.5, "A", dim=1)
    # Airy-type equation; compare with a tight reference
    ref = ode_propagate(lambda t: np.array([[-t]]), 0.5, "A", dim=1, step=1e-4)
    assert sol.X0[0, 0] == pytest.approx(ref.X0[0, 0], abs=1e-12)


def test_zero_interval():
    sol = ode_propagate(np.eye(2), 0.0, "B")
    assert sol.steps == 0 and np.array_equal(sol.X1, np.eye(2))


def test_certification_failure():
    with pytest.raises(CertificationError):
        ode_propagate(np.array([[-100.0]]), 3.0, "A", step=0.2, tol=1e-10)


def test_initial_data_kind():
    with pytest.raises(ValueError):
        initial_data("C", 2)


def test_weighted_norm():
    X = np.array([[1.0, 0.5], [0.0, 2.0]])
    assert weighted_norm(X, 1.0) == pytest.approx(max(2.0, 0.5 * math.e))


def test_growth_constant_tridiagonal():
    W = build_coupling(ModelSpec(5, "open", 5, 2)).entries
    # far from the diagonal an interior row gives a + b e^gamma + b e^-gamma
    assert growth_constant(-W, 0.5, [0.0]) == pytest.approx(5 + 4 * math.cosh(0.5), rel=1e-12)


@pytest.mark.parametrize("kind", ["A", "B"])
@pytest.mark.parametrize("t", [0.5, 2.0])
def test_certificate_holds(kind, t):
    W = build_coupling(ModelSpec(6, "open", 5, 2)).entries
    sol = ode_propagate(-W, t, kind)
    c = certificate(sol, -W, 0.5)
    assert c.holds
    assert c.M == pytest.approx(math.sqrt(5 + 4 * math.cosh(0.5)), rel=1e-12)


def test_free_motion():
    sol = ode_propagate(np.zeros((3, 3)), 2.5, "B", s=0.5)
    assert np.allclose(sol.X0, 2.0 * np.eye(3))
    assert np.allclose(ode_propagate(np.zeros((3, 3)), 2.5, "A").X0, np.eye(3))


def test_constant_forcing_matches_duhamel():
    # X0(t) = int_0^t B(t-s) F ds = W^{-1} (I - cos(t sqrt W)) F
    W = build_coupling(ModelSpec(2, "open", 5, 2)).entries
    F = np.arange(1.0, 6.0)[:, None]
    zero = np.zeros((5, 1))
    sol = ode_propagate(-W, 1.5, "B", forcing=lambda t: F, init=(zero, zero))
    lam, V = np.linalg.eigh(W)
    closed = (V * ((1 - np.cos(1.5 * np.sqrt(lam))) / lam)) @ V.T @ F
    assert np.allclose(sol.X0, closed, atol=1e-6)


def test_agrees_with_spectral():
    from lrcone.harmonic import evolve_matrices_spectral
    W = build_coupling(ModelSpec(8, "open", 5, 2)).entries
    ref = evolve_matrices_spectral(W, 1.0)
    assert np.max(np.abs(ode_propagate(-W, 1.0, "A").X0 - ref.A)) <= 1e-6
    assert np.max(np.abs(ode_propagate(-W, 1.0, "B").X0 - ref.B)) <= 1e-6
