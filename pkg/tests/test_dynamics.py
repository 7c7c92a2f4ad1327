import math

import numpy as np
import pytest

from lrcone.dynamics import (HamiltonianBundle, assemble_hamiltonian, commutator_norm,
                             commutator_profile, convergence_gap, default_bulk_level,
                             distance_to_complement, evolved_commutator_on_probes,
                             hamiltonian_operator, heisenberg_evolve, interaction_split,
                             shift_observable, weyl_growth_exact, weyl_norms_exact,
                             wk_growth_curve)
from lrcone.fock import (BudgetError, TruncatedRep, local_operator, momentum, natural_rep,
                         position, single_site_weyl)
from lrcone.harmonic import PhasePoint, evolve_matrices_spectral
from lrcone.model import ModelSpec, PerturbationSpec, build_coupling

QUAD = ModelSpec(1, "open", 5, 2)


def test_two_site_spectrum_exact():
    rep = natural_rep((0, 1), 14, 5.0)
    bundle = assemble_hamiltonian(QUAD, rep, sites=(0, 1))
    w1, w2 = math.sqrt(3), math.sqrt(7)
    levels = sorted(0.5 * (w1 + w2) + i * w1 + j * w2 for i in range(4) for j in range(4))[:4]
    assert np.allclose(bundle.eigenvalues[:4], levels, atol=1e-10)


def test_hamiltonian_symmetric_real():
    rep = natural_rep(QUAD.sites, 5, 5.0)
    H = hamiltonian_operator(ModelSpec(1, "open", 5, 2, PerturbationSpec(0.2, 0.2, 1, 1)), rep)
    M = H.dense()
    assert np.allclose(M, M.T) and np.isrealobj(M)


def test_ring_bond_only_on_full_chain():
    spec = ModelSpec(1, "cyclic", 5, 2)
    rep = TruncatedRep(spec.sites, 3)
    ring = hamiltonian_operator(spec, rep).dense()
    chain = hamiltonian_operator(ModelSpec(1, "open", 5, 2), rep).dense()
    QQ = np.kron(rep.site_ops["Q"], rep.site_ops["Q"])
    bond = local_operator(rep, (-1, 1), QQ).dense()
    assert np.allclose(ring - chain, -2 * bond)
    sub = hamiltonian_operator(spec, rep, sites=(-1, 0)).dense()
    sub_open = hamiltonian_operator(ModelSpec(1, "open", 5, 2), rep, sites=(-1, 0)).dense()
    assert np.allclose(sub, sub_open)


def test_coverage_checks():
    rep = TruncatedRep((0,), 3)
    with pytest.raises(ValueError):
        hamiltonian_operator(QUAD, rep)
    with pytest.raises(ValueError):
        assemble_hamiltonian(QUAD, rep)


def test_sparse_and_dense_propagation_agree():
    rep = natural_rep(QUAD.sites, 6, 5.0)
    dense = assemble_hamiltonian(QUAD, rep)
    sparse = assemble_hamiltonian(QUAD, rep, dense_limit=0)
    assert dense.dense and not sparse.dense
    F = rep.probe_block(1)
    assert np.allclose(dense.propagate(F, 0.7), sparse.propagate(F, 0.7), atol=1e-10)
    with pytest.raises(BudgetError):
        sparse.unitary(0.1)


def test_vacuum_probe_matches_harmonic_value():
    spec = ModelSpec(1, "open", 5, 2)
    rep = natural_rep(spec.sites, 12, 5.0)
    bundle = assemble_hamiltonian(spec, rep, dense_limit=0)
    A = single_site_weyl(rep, -1)
    B = single_site_weyl(rep, 1)
    W = build_coupling(spec)
    for t in (0.5, 1.0):
        num = evolved_commutator_on_probes(bundle, A, B, t, rep.probe_block(0))
        exact = 2 * abs(math.sin(evolve_matrices_spectral(W, t).B[0, 2] / 2))
        assert num == pytest.approx(exact, abs=5e-3)


def test_heisenberg_evolution():
    rep = TruncatedRep((0,), 30)
    spec = ModelSpec(0, "open", 1.0, 0.0)
    bundle = assemble_hamiltonian(spec, rep)
    X = position(rep, 0)
    assert np.allclose(heisenberg_evolve(bundle, X, 0).dense(), X.dense())
    t = 0.9
    Xt = heisenberg_evolve(bundle, X, t).dense()
    expected = math.cos(t) * X.dense() + math.sin(t) * momentum(rep, 0).dense()
    # low block is exact for a single oscillator in its own basis
    assert np.allclose(Xt[:10, :10], expected[:10, :10], atol=1e-10)
    with pytest.raises(ValueError):
        heisenberg_evolve(bundle, position(TruncatedRep((0,), 5), 0), t)


def test_commutator_norm_bulk():
    rep = TruncatedRep((0,), 8)
    Q, P = position(rep, 0), momentum(rep, 0)
    assert commutator_norm(Q, P, bulk=True) == pytest.approx(1.0)
    assert commutator_norm(Q, P) == pytest.approx(7.0)
    assert default_bulk_level(rep) == 3


def test_commutator_profile_local():
    rep = TruncatedRep((0, 1), 5)
    prof = commutator_profile(position(rep, 0), bulk_level=2)
    assert prof[0] == pytest.approx(1.0) and prof[1] == 0.0


def test_growth_curve_shapes():
    rep = TruncatedRep(QUAD.sites, 3)
    bundle = assemble_hamiltonian(QUAD, rep)
    curve = wk_growth_curve(bundle, single_site_weyl(rep, 0), [0.0, 0.5], bulk_level=1)
    assert len(curve) == 2 and curve[0].t == 0.0
    assert set(curve[1].profile) == set(rep.sites)


def test_interaction_split_harmonic():
    rep = TruncatedRep(QUAD.sites, 3)
    split = interaction_split(QUAD, [0], rep)
    QQ = np.kron(rep.site_ops["Q"], rep.site_ops["Q"])
    expected = -2 * (local_operator(rep, (-1, 0), QQ).dense() + local_operator(rep, (0, 1), QQ).dense())
    assert np.allclose(split.V_inter.dense(), expected)
    assert np.allclose(split.H_theta(1.0).dense(), split.H_full.dense())
    with pytest.raises(ValueError):
        interaction_split(QUAD, [-1, 0, 1], rep)
    with pytest.raises(ValueError):
        interaction_split(QUAD, 1, rep, n=1)


def test_distance_to_complement():
    assert distance_to_complement([-2], [-2, -1], range(-2, 3)) == 2
    assert distance_to_complement([0], [0], [0]) == math.inf


def test_convergence_gap_basic():
    spec = ModelSpec(1, "open", 5, 2)
    rep = natural_rep(spec.sites, 6, 5.0)
    A = single_site_weyl(rep, -1)
    assert convergence_gap(spec, A, [-1], 0.0).gap == 0.0
    one = convergence_gap(spec, A, [-1], 0.5)
    two = convergence_gap(spec, A, [-1, 0], 0.5)
    assert one.distance == 1 and two.distance == 2
    assert 0 < two.gap < one.gap
    with pytest.raises(ValueError):
        convergence_gap(spec, A, [0], 0.5)


def test_shift_observable():
    rep = natural_rep((0, 1, 2), 5, 5.0)
    A = single_site_weyl(rep, 0)
    moved = shift_observable(A, 2)
    assert np.allclose(moved.dense(), single_site_weyl(rep, 2).dense())
    assert shift_observable(A, 0) is A
    with pytest.raises(ValueError):
        shift_observable(A, 3)


def test_weyl_norms_exact():
    nb = weyl_norms_exact(PhasePoint(np.array([1.0, -0.5]), np.array([0.0, 2.0])))
    assert nb.w1 == pytest.approx(4.5) and nb.w2 == pytest.approx(4.5 + 3.5 ** 2 / 2)


def test_weyl_growth_exact():
    spec = ModelSpec(16, "cyclic", 5, 2)
    rep = weyl_growth_exact(spec, np.linspace(0, 3, 13))
    assert rep.w2[0] == pytest.approx(2.5)
    assert rep.envelope_holds and rep.theory_holds
    assert rep.slope <= rep.slope_theory


def test_single_oscillator_levels():
    rep = TruncatedRep((0,), 20)
    bundle = assemble_hamiltonian(ModelSpec(0, "open", 1.0, 0.0), rep)
    assert np.allclose(bundle.eigenvalues[:3], [0.5, 1.5, 2.5], atol=1e-8)


def test_zero_perturbation_is_harmonic():
    rep = natural_rep(QUAD.sites, 5, 5.0)
    quad = hamiltonian_operator(QUAD, rep).dense()
    zero = hamiltonian_operator(ModelSpec(1, "open", 5, 2, PerturbationSpec(0, 0, 1, 1)), rep).dense()
    assert np.array_equal(quad, zero)


def test_evolution_preserves_norm():
    rep = natural_rep(QUAD.sites, 5, 5.0)
    bundle = assemble_hamiltonian(QUAD, rep)
    A = single_site_weyl(rep, 0).scale(2.0)
    from lrcone.fock import op_norm
    assert op_norm(heisenberg_evolve(bundle, A, 1.3)) == pytest.approx(op_norm(A), abs=1e-10)


def test_evolved_position_on_vacuum():
    # alpha_t(Q_0) Omega = sum_mu A_0mu Q_mu Omega + B_0mu P_mu Omega
    rep = natural_rep(QUAD.sites, 12, 5.0)
    bundle = assemble_hamiltonian(QUAD, rep, dense_limit=0)
    W = build_coupling(QUAD)
    f = rep.probe_block(0)
    for t in (1.0, 2.0):
        E = evolve_matrices_spectral(W, t)
        num = bundle.propagate(position(rep, -1).matrix @ bundle.propagate(f, t), -t)
        exact = sum(E.A[0, k] * (position(rep, s).matrix @ f) + E.B[0, k] * (momentum(rep, s).matrix @ f)
                    for k, s in enumerate(QUAD.sites))
        assert np.max(np.abs(num - exact)) <= 1e-3


def test_pair_commutator_against_fock():
    # |[alpha_t(Q_-1), Q_1] Omega| = |B_{0,2}(t)| on the three-site chain
    from lrcone.harmonic import pair_commutator_scalar
    rep = natural_rep(QUAD.sites, 12, 5.0)
    bundle = assemble_hamiltonian(QUAD, rep, dense_limit=0)
    E = evolve_matrices_spectral(build_coupling(QUAD), 1.0)
    num = evolved_commutator_on_probes(bundle, position(rep, -1), position(rep, 1), 1.0,
                                       rep.probe_block(0))
    assert num == pytest.approx(abs(pair_commutator_scalar(E, 0, 2, 0, 0)), abs=1e-3)


def test_commutator_of_operator_with_itself():
    rep = TruncatedRep((0,), 6)
    X = single_site_weyl(rep, 0, 0.3, 0.4)
    assert commutator_norm(X, X) == 0.0


def test_decoupled_sites_gap_zero():
    spec = ModelSpec(1, "open", 5, 0.0)
    rep = natural_rep(spec.sites, 5, 5.0)
    A = single_site_weyl(rep, -1)
    assert convergence_gap(spec, A, [-1], 0.7).gap == pytest.approx(0.0, abs=1e-12)


def test_interaction_split_nearest_neighbour():
    spec = ModelSpec(2, "open", 5, 2)
    rep = TruncatedRep(spec.sites, 2)
    split = interaction_split(spec, 1, rep, n=2)
    QQ = np.kron(rep.site_ops["Q"], rep.site_ops["Q"])
    expected = -2 * (local_operator(rep, (1, 2), QQ).dense() + local_operator(rep, (-2, -1), QQ).dense())
    assert np.allclose(split.V_inter.dense(), expected)


def test_cut_hamiltonian_decouples_inner_volume():
    spec = ModelSpec(2, "open", 5, 2, PerturbationSpec(0.2, 0.2, 1.0, 1.0))
    rep = TruncatedRep(spec.sites, 3)
    split = interaction_split(spec, 1, rep, n=2)
    H0 = split.H_theta(0.0).dense()
    H_in = hamiltonian_operator(spec, rep, sites=(-1, 0, 1)).dense()
    for s in (-1, 0, 1):
        Q = position(rep, s).dense()
        assert np.max(np.abs((H0 @ Q - Q @ H0) - (H_in @ Q - Q @ H_in))) <= 1e-10


def test_shift_composes_and_preserves_norm():
    from lrcone.fock import op_norm
    rep = natural_rep((0, 1, 2, 3), 4, 5.0)
    A = single_site_weyl(rep, 0, 0.5, 0.5)
    twice = shift_observable(shift_observable(A, 1), 2)
    assert np.allclose(twice.dense(), shift_observable(A, 3).dense())
    assert op_norm(shift_observable(A, 2)) == pytest.approx(op_norm(A))


def test_centred_volumes_gap_decreases():
    spec = ModelSpec(2, "open", 5, 2, PerturbationSpec(0.2, 0.2, 1.0, 1.0))
    rep = natural_rep(spec.sites, 10, 5.0)
    A = single_site_weyl(rep, 0)
    g0 = convergence_gap(spec, A, 0, 0.5)
    g1 = convergence_gap(spec, A, 1, 0.5)
    assert (g0.distance, g1.distance) == (1, 2)
    assert 0 < g1.gap < g0.gap


def test_energy_conservation_and_group_law():
    from lrcone.fock import op_norm
    spec = ModelSpec(1, "open", 5, 2, PerturbationSpec(0.2, 0.2, 1.0, 1.0))
    rep = natural_rep(spec.sites, 6, 5.0)
    bundle = assemble_hamiltonian(spec, rep)
    H = bundle.H
    for t in (0.5, 2.0):
        drift = op_norm(heisenberg_evolve(bundle, H, t).dense() - H.dense())
        assert drift <= 1e-9 * op_norm(H)
    A = single_site_weyl(rep, -1)
    two_step = heisenberg_evolve(bundle, heisenberg_evolve(bundle, A, 0.4), 0.7)
    assert np.max(np.abs(two_step.dense() - heisenberg_evolve(bundle, A, 1.1).dense())) <= 1e-9
