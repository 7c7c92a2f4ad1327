"""Exact Heisenberg evolution of the quadratic chain.

alpha_t(Q) = A Q + B P and alpha_t(P) = Adot Q + Bdot P with
A = cos(t sqrt W), B = sin(t sqrt W) / sqrt W, Adot = -W B, Bdot = A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import circulant

from .dispersion import DispersionParams, circle_mean_abs, m_gamma
from .model import Boundary, CouplingMatrix, ModelSpec, build_coupling
from .odes import ode_propagate


class Source(str, Enum):
    SPECTRAL = "spectral"
    CIRCULANT = "circulant"
    ODE = "ode"


@dataclass(frozen=True)
class EvolutionMatrices:
    t: float
    A: np.ndarray
    B: np.ndarray
    Adot: np.ndarray
    Bdot: np.ndarray
    source: Source

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def max_diff(self, other: "EvolutionMatrices") -> float:
        return max(float(np.max(np.abs(x - y))) for x, y in
                   zip((self.A, self.B, self.Adot, self.Bdot),
                       (other.A, other.B, other.Adot, other.Bdot)))

    def entry_sum(self) -> np.ndarray:
        return np.abs(self.A) + np.abs(self.B) + np.abs(self.Adot) + np.abs(self.Bdot)


def _matrix(W) -> np.ndarray:
    return W.entries if isinstance(W, CouplingMatrix) else np.asarray(W, dtype=float)


def _at_zero(N: int, source: "Source") -> EvolutionMatrices:
    eye, zero = np.eye(N), np.zeros((N, N))
    return EvolutionMatrices(0.0, eye, zero, zero.copy(), eye.copy(), source)


def _sin_over(s: np.ndarray, t: float) -> np.ndarray:
    # sin(t s) / s with the limit t at s = 0
    safe = np.where(s == 0, 1.0, s)
    return np.where(s == 0, t, np.sin(t * s) / safe)


def evolve_matrices_spectral(W, t: float) -> EvolutionMatrices:
    """All four matrices from one symmetric eigendecomposition of W."""
    W = _matrix(W)
    if W.ndim != 2 or W.shape[0] != W.shape[1] or not np.allclose(W, W.T, atol=0, rtol=0):
        raise ValueError("W must be a symmetric square matrix")
    lam, V = np.linalg.eigh(W)
    if lam[0] < 0:
        raise ValueError("W must be positive semidefinite")
    if t == 0:
        return _at_zero(W.shape[0], Source.SPECTRAL)
    s = np.sqrt(np.clip(lam, 0, None))
    c = np.cos(t * s)
    so = _sin_over(s, t)
    A = (V * c) @ V.T
    B = (V * so) @ V.T
    Adot = (V * (-lam * so)) @ V.T
    return EvolutionMatrices(float(t), A, B, Adot, A.copy(), Source.SPECTRAL)


def cyclic_frequencies(dim: int, a: float, b: float) -> np.ndarray:
    k = np.arange(dim)
    return a - 2 * b * np.cos(2 * np.pi * k / dim)


def evolve_matrices_circulant(spec: ModelSpec, t: float) -> EvolutionMatrices:
    """Same matrices via the Fourier diagonalization of the ring."""
    if spec.boundary != Boundary.CYCLIC:
        raise ValueError("circulant path needs a cyclic model")
    N = spec.dim
    if N < 3:
        raise ValueError("ring needs at least 3 sites")
    if t == 0:
        return _at_zero(N, Source.CIRCULANT)
    lam = cyclic_frequencies(N, spec.a, spec.b)
    s = np.sqrt(lam)

    def circ(values):
        return circulant(np.fft.ifft(values).real)

    A = circ(np.cos(t * s))
    B = circ(_sin_over(s, t))
    Adot = circ(-lam * _sin_over(s, t))
    return EvolutionMatrices(float(t), A, B, Adot, A.copy(), Source.CIRCULANT)


def evolve_matrices_ode(W, t: float, step: float = 1e-3, tol: float = 1e-8) -> EvolutionMatrices:
    """Integrate X0' = X1, X1' = -W X0 for both initial families."""
    W = _matrix(W)
    sa = ode_propagate(-W, t, "A", step=step, tol=tol)
    sb = ode_propagate(-W, t, "B", step=step, tol=tol)
    return EvolutionMatrices(float(t), sa.X0, sb.X0, sa.X1, sb.X1, Source.ODE)


def evolve(spec: ModelSpec, t: float, source: Source | str = Source.SPECTRAL) -> EvolutionMatrices:
    source = Source(source)
    if source == Source.CIRCULANT:
        return evolve_matrices_circulant(spec, t)
    W = build_coupling(spec)
    if source == Source.ODE:
        return evolve_matrices_ode(W, t)
    return evolve_matrices_spectral(W, t)


# ---------------------------------------------------------------- phase space

@dataclass(frozen=True)
class PhasePoint:
    """Coefficients of Pi(u, v) = sum_lam u_lam P_lam + v_lam Q_lam."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.shape != v.shape or u.ndim != 1:
            raise ValueError("u and v must be vectors of equal length")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(np.flatnonzero((self.u != 0) | (self.v != 0)).tolist())

    @classmethod
    def single(cls, dim: int, index: int, u: float = 0.0, v: float = 0.0) -> "PhasePoint":
        uu, vv = np.zeros(dim), np.zeros(dim)
        uu[index], vv[index] = u, v
        return cls(uu, vv)

    @classmethod
    def q_type(cls, dim: int, index: int, v: float = 1.0) -> "PhasePoint":
        """Pi = v Q_index, so W(p) = exp(i v Q_index)."""
        return cls.single(dim, index, 0.0, v)


def symplectic_form(p1: PhasePoint, p2: PhasePoint) -> float:
    """sigma = sum u1 v2 - v1 u2, so that [Pi(p1), Pi(p2)] = -i sigma."""
    if p1.u.shape != p2.u.shape:
        raise ValueError("dimension mismatch")
    return float(p1.u @ p2.v - p1.v @ p2.u)


def symplectic_propagate(E: EvolutionMatrices, p: PhasePoint) -> PhasePoint:
    """Phase-space coefficients of alpha_t(Pi(u, v))."""
    if p.u.shape[0] != E.dim:
        raise ValueError("dimension mismatch")
    u = E.Bdot.T @ p.u + E.B.T @ p.v
    v = E.Adot.T @ p.u + E.A.T @ p.v
    return PhasePoint(u, v)


def pair_commutator_scalar(E: EvolutionMatrices, lam: int, mu: int, j: int, k: int) -> complex:
    """c with [alpha_t(X_lam), Y_mu] = c I, X = Q (j=0) or P (j=1), same for Y.

    lam and mu are matrix indices (0-based).
    """
    n = E.dim
    if not (0 <= lam < n and 0 <= mu < n):
        raise IndexError("site index out of range")
    if j not in (0, 1) or k not in (0, 1):
        raise ValueError("j and k must be 0 (Q) or 1 (P)")
    # alpha_t(X_lam) = sum_nu cq[nu] Q_nu + cp[nu] P_nu; [Q, P] = i
    cq, cp = (E.A, E.B) if j == 0 else (E.Adot, E.Bdot)
    if k == 0:
        return -1j * cp[lam, mu]
    return 1j * cq[lam, mu]


def weyl_commutator_norm_exact(E: EvolutionMatrices, p1: PhasePoint, p2: PhasePoint) -> float:
    """||[alpha_t(W(p1)), W(p2)]|| = 2 |sin(sigma(S_t p1, p2) / 2)|."""
    sigma = symplectic_form(symplectic_propagate(E, p1), p2)
    return 2 * abs(math.sin(sigma / 2))


# ---------------------------------------------------------------- ring decay bound

def cyclic_distance(i, j, dim: int):
    d = np.abs(np.asarray(i) - np.asarray(j)) % dim
    return np.minimum(d, dim - d)


@dataclass(frozen=True)
class RingBound:
    gamma: float
    M: float
    C1: float
    C2: float

    @property
    def C(self) -> float:
        return self.C1 * self.C2

    def rhs(self, t: float, dist):
        return self.C * math.exp(abs(t) * self.M) * np.exp(-self.gamma * np.asarray(dist))


def ring_bound(params: DispersionParams, gamma: float, t_max: float,
               t_points: int = 401, extra_times=(), n_circle: int = 4096) -> RingBound:
    """Constants for |A|+|B|+|Adot|+|Bdot| <= C e^{M|t|} e^{-gamma d_n} on any ring.

    Each entry of a circulant f(S) is sum_p c_{k+pN}; with |c_k| <= R e^{-gamma|k|}
    the periodic sum is at most R coth(gamma/2) e^{-gamma d_n}. R is the circle
    mean of |symbol|, and C2 = sup_t e^{-tM} (R_f + R_g + R_h + R_f) over
    the time grid (A and Bdot share the symbol f).
    """
    M = m_gamma(params, gamma)
    C1 = 1.0 / math.tanh(gamma / 2)
    ts = np.union1d(np.linspace(0.0, t_max, t_points), np.abs(np.asarray(extra_times, float)))
    best = 0.0
    for t in ts:
        r = (2 * circle_mean_abs(params, "f", t, gamma, n_circle)
             + circle_mean_abs(params, "g", t, gamma, n_circle)
             + circle_mean_abs(params, "h", t, gamma, n_circle))
        best = max(best, r * math.exp(-t * M))
    return RingBound(float(gamma), M, C1, best)


def ring_bound_violations(spec: ModelSpec, bound: RingBound, t_grid, rtol: float = 1e-12) -> int:
    """Entries of the evolution matrices exceeding the ring bound on the grid."""
    N = spec.dim
    i = np.arange(N)
    dist = cyclic_distance(i[:, None], i[None, :], N)
    count = 0
    for t in t_grid:
        E = evolve_matrices_circulant(spec, t)
        count += int(np.sum(E.entry_sum() > bound.rhs(t, dist) * (1 + rtol)))
    return count
