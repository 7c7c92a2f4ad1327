"""Truncated Hamiltonians and their Heisenberg dynamics.

H = sum P^2/2 + a/2 sum Q^2 - b sum Q_i Q_{i+1} (+ ring bond) + perturbation.
Small spaces are diagonalized once; larger ones are propagated on a block of
probe states with a sparse Krylov-type exponential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import expm_multiply

from .fock import (BudgetError, NormBundle, ObservableOp, PotentialTerm, TruncatedRep,
                   canonical, compress_operator, embed_operator, local_operator, op_norm,
                   potential_operator, site_operator, site_squares, wk_norm)
from .model import Boundary, ModelSpec
from .odes import CertificationError, certificate, ode_propagate  # noqa: F401  (re-exported)

DENSE_EIG_LIMIT = 1024


# ---------------------------------------------------------------- assembly

def _pair_list(model: ModelSpec, sites: Sequence[int]):
    """Unordered pairs with their amplitude (ordered-pair sum gives factor 2)."""
    pert = model.perturbation
    out = []
    if pert is None or pert.eps_pair == 0:
        return out
    for i, s in enumerate(sites):
        for t in sites[i + 1:]:
            amp = pert.pair_amplitude(t - s)
            if amp:
                out.append(((s, t), 2 * amp))
    return out


def _bonds(model: ModelSpec, sites: Sequence[int], ring: bool):
    sites = sorted(sites)
    bonds = [(s, s + 1) for s in sites if s + 1 in sites]
    if ring and len(sites) >= 3:
        bonds.append((sites[0], sites[-1]))
    return bonds


def hamiltonian_operator(model: ModelSpec, rep: TruncatedRep,
                         sites: Sequence[int] | None = None) -> ObservableOp:
    """Sparse H restricted to `sites` (defaults to every model site).

    The ring bond is included only when the full cyclic chain is assembled.
    """
    all_sites = sorted(model.sites)
    sites = all_sites if sites is None else sorted(int(s) for s in sites)
    if not set(sites) <= set(rep.sites):
        raise ValueError("representation does not cover the requested sites")
    ring = model.boundary == Boundary.CYCLIC and sites == all_sites
    Q2, P2 = site_squares(rep.d, rep.omega)
    onsite = P2 / 2 + model.a / 2 * Q2
    pert = model.perturbation
    terms = []
    for s in sites:
        terms.append(site_operator(rep, s, onsite).matrix)
        if pert is not None and pert.eps_self:
            terms.append(potential_operator(rep, PotentialTerm((s,), pert.eps_self, pert.w)).matrix)
    Q = rep.site_ops["Q"]
    QQ = np.kron(Q, Q)
    for i, j in _bonds(model, sites, ring):
        terms.append(-model.b * local_operator(rep, (i, j), QQ).matrix)
    for (i, j), amp in _pair_list(model, sites):
        terms.append(potential_operator(rep, PotentialTerm((i, j), amp, pert.w)).matrix)
    H = sp.csr_matrix((rep.total_dim, rep.total_dim), dtype=complex)
    for T in terms:
        H = H + T
    H = ((H + H.conj().T) / 2).real.tocsr()
    return ObservableOp(rep, H, frozenset(sites))


@dataclass(frozen=True)
class HamiltonianBundle:
    rep: TruncatedRep
    H: ObservableOp
    model: ModelSpec
    eigenvalues: np.ndarray | None = None
    eigenvectors: np.ndarray | None = None

    @property
    def dense(self) -> bool:
        return self.eigenvectors is not None

    def propagate(self, F: np.ndarray, t: float) -> np.ndarray:
        """e^{-itH} F for a block of states F (columns)."""
        if t == 0:
            return np.array(F, dtype=complex, copy=True)
        if self.dense:
            U = self.eigenvectors
            return U @ (np.exp(-1j * t * self.eigenvalues)[:, None] * (U.T @ F))
        return expm_multiply(-1j * t * self.H.matrix, F)

    def unitary(self, t: float) -> np.ndarray:
        if not self.dense:
            raise BudgetError("dense propagator needs an eigendecomposition")
        U = self.eigenvectors
        return (U * np.exp(-1j * t * self.eigenvalues)) @ U.T


def _decompose(H: ObservableOp):
    m = H.dense().real
    try:
        lam, U = eigh(m)
    except np.linalg.LinAlgError as exc:
        raise CertificationError(f"eigensolve failed: {exc}") from exc
    return lam, U


def assemble_hamiltonian(model: ModelSpec, rep: TruncatedRep,
                         dense_limit: int = DENSE_EIG_LIMIT,
                         sites: Sequence[int] | None = None) -> HamiltonianBundle:
    """Build H on rep; diagonalize when the dimension is at most dense_limit.

    `sites` selects an open sub-chain (for example two sites) instead of the
    full model volume.
    """
    if sites is None and not set(model.sites) <= set(rep.sites):
        raise ValueError("representation does not cover the model")
    H = hamiltonian_operator(model, rep, sites)
    if rep.total_dim <= dense_limit:
        lam, U = _decompose(H)
        return HamiltonianBundle(rep, H, model, lam, U)
    return HamiltonianBundle(rep, H, model)


def heisenberg_evolve(bundle: HamiltonianBundle, A: ObservableOp, t: float) -> ObservableOp:
    """e^{itH} A e^{-itH} as a dense operator."""
    if A.rep != bundle.rep:
        raise ValueError("representation mismatch")
    if t == 0:
        return ObservableOp(A.rep, A.dense().copy(), A.support)
    U = bundle.unitary(t)
    out = U.conj().T @ A.dense() @ U
    return ObservableOp(A.rep, out, frozenset(bundle.rep.sites))


def commutator(X: ObservableOp, Y: ObservableOp) -> ObservableOp:
    if X.rep != Y.rep:
        raise ValueError("representation mismatch")
    return X @ Y - Y @ X


def commutator_norm(X: ObservableOp, Y: ObservableOp, bulk: bool = False,
                    level: int | None = None) -> float:
    """||XY - YX||; with bulk=True only on basis states of total excitation <= level."""
    C = commutator(X, Y)
    cols = None
    if bulk:
        cols = X.rep.bulk_indices(default_bulk_level(X.rep) if level is None else level)
    return op_norm(C.matrix, cols)


def default_bulk_level(rep: TruncatedRep) -> int:
    """Half of the per-site truncation, where the ladder identities hold well."""
    return max(0, (min(rep.d, rep.cap + 1) - 1) // 2)


def evolved_commutator_on_probes(bundle: HamiltonianBundle, A: ObservableOp, B: ObservableOp,
                                 t: float, probes: np.ndarray) -> float:
    """||[alpha_t(A), B] F|| for a block of probe states F, without dense unitaries."""
    Am, Bm = A.matrix, B.matrix
    F = probes
    Y = bundle.propagate(F, t)
    AY = bundle.propagate(Am @ Y, -t)            # alpha_t(A) F
    Z = bundle.propagate(Bm @ F, t)
    T1 = bundle.propagate(Am @ Z, -t)            # alpha_t(A) B F
    X = T1 - Bm @ AY
    return float(np.linalg.norm(X, 2))


# ---------------------------------------------------------------- growth of norms

@dataclass(frozen=True)
class GrowthPoint:
    t: float
    norms: NormBundle
    profile: dict


def commutator_profile(A: ObservableOp, sites: Iterable[int] | None = None,
                       bulk_level: int | None = None) -> dict:
    """site -> max over j of ||[A, Q_site^(j)]||."""
    rep = A.rep
    cols = None if bulk_level is None else rep.bulk_indices(bulk_level)
    out = {}
    for s in (rep.sites if sites is None else sites):
        vals = []
        for j in (0, 1):
            C = canonical(rep, s, j).matrix
            vals.append(op_norm(A.matrix @ C - C @ A.matrix, cols))
        out[s] = max(vals)
    return out


def wk_growth_curve(bundle: HamiltonianBundle, A: ObservableOp, t_grid,
                    bulk_level: int | None = None) -> list[GrowthPoint]:
    out = []
    sites = list(bundle.rep.sites)
    for t in t_grid:
        At = heisenberg_evolve(bundle, A, t)
        At_local = ObservableOp(At.rep, At.matrix, frozenset(sites))
        nb = wk_norm(At_local, 2, sites=sites, bulk_level=bulk_level)
        out.append(GrowthPoint(float(t), nb, commutator_profile(At, sites, bulk_level)))
    return out


# ---------------------------------------------------------------- finite-volume convergence

@dataclass(frozen=True)
class InteractionSplit:
    inner: tuple[int, ...]
    H_full: ObservableOp
    V_inter: ObservableOp

    def H_theta(self, theta: float) -> ObservableOp:
        return self.H_full - self.V_inter.scale(1 - theta)


def _volume(model: ModelSpec, m) -> tuple[int, ...]:
    if isinstance(m, (int, np.integer)):
        return tuple(range(-int(m), int(m) + 1))
    return tuple(sorted(int(s) for s in m))


def interaction_split(model: ModelSpec, m, rep: TruncatedRep,
                      n: int | None = None) -> InteractionSplit:
    """Bonds and pair potentials linking the inner volume to the rest of rep.

    m is a radius (volume -m..m) or an explicit list of inner sites; the outer
    volume is rep.sites (its radius must equal n when n is given).
    """
    inner = _volume(model, m)
    outer = tuple(rep.sites)
    if n is not None and isinstance(m, (int, np.integer)) and not m < n:
        raise ValueError("need m < n")
    if not set(inner) < set(outer):
        raise ValueError("inner volume must be a proper subset of the representation")
    H_full = hamiltonian_operator(model, rep, outer)
    H_in = hamiltonian_operator(model, rep, inner)
    H_out = hamiltonian_operator(model, rep, [s for s in outer if s not in inner])
    V = H_full - H_in - H_out
    return InteractionSplit(inner, H_full, ObservableOp(rep, V.matrix, frozenset(outer)))


def distance_to_complement(support: Iterable[int], inner: Iterable[int], outer: Iterable[int]) -> int:
    """Lattice distance from the support to the outer sites not in the inner volume."""
    rest = [s for s in outer if s not in set(inner)]
    if not rest:
        return math.inf
    return min(abs(x - y) for x in support for y in rest)


@dataclass(frozen=True)
class GapResult:
    gap: float
    distance: int
    inner: tuple[int, ...]


def _bundle_from(model, rep, H: ObservableOp, dense_limit) -> HamiltonianBundle:
    if rep.total_dim <= dense_limit:
        lam, U = _decompose(H)
        return HamiltonianBundle(rep, H, model, lam, U)
    return HamiltonianBundle(rep, H, model)


def convergence_gap(model: ModelSpec, A: ObservableOp, m, t: float,
                    probe_level: int = 0, dense_limit: int = 0) -> GapResult:
    """||(alpha_inner^t(A) tensor I - alpha_outer^t(A)) F|| on low-excitation probes F.

    The inner evolution uses H with the interaction removed, which acts as the
    inner Hamiltonian on A and commutes with everything outside.
    """
    rep = A.rep
    split = interaction_split(model, m, rep)
    if not set(A.support) <= set(split.inner):
        raise ValueError("support of A must lie in the inner volume")
    dist = distance_to_complement(A.support, split.inner, rep.sites)
    if t == 0:
        return GapResult(0.0, dist, split.inner)
    F = rep.probe_block(probe_level)
    full = _bundle_from(model, rep, split.H_full, dense_limit)
    cut = _bundle_from(model, rep, split.H_theta(0.0), dense_limit)
    Am = A.matrix
    X_full = full.propagate(Am @ full.propagate(F, t), -t)
    X_cut = cut.propagate(Am @ cut.propagate(F, t), -t)
    return GapResult(float(np.linalg.norm(X_full - X_cut, 2)), dist, split.inner)


# ---------------------------------------------------------------- translations

def shift_observable(A: ObservableOp, h: int) -> ObservableOp:
    """Translate the support of A by h sites inside the same representation."""
    if h == 0:
        return A
    rep = A.rep
    support = sorted(A.support)
    if not support:
        return A
    target = [s + h for s in support]
    if any(s not in rep.sites for s in target):
        raise ValueError("shifted support leaves the representation")
    local = compress_operator(A, support)
    moved_rep = TruncatedRep(tuple(target), rep.d, rep.max_total, rep.omega, rep.budget)
    moved = ObservableOp(moved_rep, local.matrix, frozenset(target))
    return embed_operator(moved, rep)


# ---------------------------------------------------------------- exact growth in the quadratic chain

def weyl_norms_exact(q) -> NormBundle:
    """W_2 data of a Weyl operator W(q) from its phase-space coefficients.

    [W, Q_l] = u_l W and [W, P_l] = -v_l W, so with s = sum |u_l| + |v_l| the
    single commutator sum is s and the halved double sum is s^2 / 2.
    """
    s = float(np.sum(np.abs(q.u)) + np.sum(np.abs(q.v)))
    return NormBundle(1.0, s, 0.5 * s * s)


@dataclass(frozen=True)
class GrowthReport:
    t: np.ndarray
    w2: np.ndarray
    slope: float
    intercept: float
    slope_theory: float
    intercept_theory: float

    @property
    def envelope_holds(self) -> bool:
        return bool(np.all(np.log(self.w2) <= self.intercept + self.slope * self.t + 1e-12))

    @property
    def theory_holds(self) -> bool:
        rhs = self.intercept_theory + self.slope_theory * self.t
        return bool(np.all(np.log(self.w2) <= rhs + 1e-12))


def weyl_growth_exact(spec: ModelSpec, t_grid, gamma: float = 0.5, site: int = 0,
                      uv: tuple[float, float] = (0.0, 1.0)) -> GrowthReport:
    """log ||alpha_t(W)||_{W_2} for a single-site Weyl operator, with affine bounds.

    The fitted line is the least-squares slope lifted to lie above every point.
    The theoretical line uses the ring constants: s(t) <= w C e^{Mt} coth(gamma/2)
    with w = |u| + |v|, and 1 + s + s^2/2 <= (1 + s)^2.
    """
    from .dispersion import DispersionParams
    from .harmonic import (PhasePoint, evolve_matrices_circulant, evolve_matrices_spectral,
                           ring_bound, symplectic_propagate)
    from .model import build_coupling

    t = np.asarray(list(t_grid), dtype=float)
    N = spec.dim
    p = PhasePoint.single(N, spec.index(site), uv[0], uv[1])
    cyclic = spec.boundary == Boundary.CYCLIC
    W = build_coupling(spec)
    w2 = []
    for tau in t:
        E = evolve_matrices_circulant(spec, tau) if cyclic else evolve_matrices_spectral(W, tau)
        w2.append(weyl_norms_exact(symplectic_propagate(E, p)).w2)
    w2 = np.array(w2)
    y = np.log(w2)
    slope = float(np.polyfit(t, y, 1)[0]) if len(t) > 1 else 0.0
    intercept = float(np.max(y - slope * t))
    rb = ring_bound(DispersionParams(spec.a, spec.b), gamma, float(np.max(np.abs(t))),
                    extra_times=t)
    weight = abs(uv[0]) + abs(uv[1])
    # 1 + s <= (1 + w C coth) e^{Mt}
    base = 1.0 + weight * rb.C * (1.0 / math.tanh(gamma / 2))
    return GrowthReport(t, w2, slope, intercept, 2 * rb.M, 2 * math.log(base))
