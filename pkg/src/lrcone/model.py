"""Chain models, coupling matrices and the constants that control their decay.

Sites are labelled lambda = -n, ..., n and stored at array index lambda + n.
The quadratic part of the potential is 1/2 x^T W x with W tridiagonal
(diagonal a, off-diagonal -b), plus corner entries for the ring.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.special import gamma as gamma_fn


class Boundary(str, Enum):
    OPEN = "open"
    CYCLIC = "cyclic"


@dataclass(frozen=True)
class PerturbationSpec:
    """Gaussian one-site and pair bumps.

    v_lam(x) = eps_self * exp(-x^2 / 2w^2)
    v_lam,mu(x, y) = eps_pair * exp(-gamma0 |lam - mu|) * exp(-(x - y)^2 / 2w^2)

    The pair sum runs over ordered pairs lam != mu with |lam - mu| <= range_cut.
    range_cut=None means no cutoff.
    """

    eps_self: float = 0.0
    eps_pair: float = 0.0
    w: float = 1.0
    gamma0: float = 1.0
    range_cut: int | None = None

    def pair_amplitude(self, h: int) -> float:
        h = abs(int(h))
        if h == 0 or (self.range_cut is not None and h > self.range_cut):
            return 0.0
        return self.eps_pair * math.exp(-self.gamma0 * h)

    def is_zero(self) -> bool:
        return self.eps_self == 0.0 and self.eps_pair == 0.0


@dataclass(frozen=True)
class ModelSpec:
    n_sites: int
    boundary: Boundary = Boundary.OPEN
    a: float = 5.0
    b: float = 2.0
    perturbation: PerturbationSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @property
    def dim(self) -> int:
        return 2 * self.n_sites + 1

    @property
    def sites(self) -> list[int]:
        return list(range(-self.n_sites, self.n_sites + 1))

    def index(self, site: int) -> int:
        if abs(site) > self.n_sites:
            raise IndexError(f"site {site} outside [-{self.n_sites}, {self.n_sites}]")
        return site + self.n_sites

    def scaled(self, g: float) -> "ModelSpec":
        """Multiply a, b and all perturbation amplitudes by g."""
        pert = self.perturbation
        if pert is not None:
            pert = PerturbationSpec(pert.eps_self * g, pert.eps_pair * g, pert.w,
                                    pert.gamma0, pert.range_cut)
        return ModelSpec(self.n_sites, self.boundary, self.a * g, self.b * g, pert)

    def to_dict(self) -> dict:
        out = {"n_sites": self.n_sites, "boundary": self.boundary.value,
               "a": self.a, "b": self.b}
        if self.perturbation is not None:
            p = asdict(self.perturbation)
            if p["range_cut"] is None:
                p["range_cut"] = "inf"
            out["perturbation"] = p
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        pert = data.get("perturbation")
        if pert is not None:
            pert = dict(pert)
            rc = pert.get("range_cut")
            if rc is None or rc == "inf" or (isinstance(rc, float) and math.isinf(rc)):
                pert["range_cut"] = None
            else:
                pert["range_cut"] = int(rc)
            pert = PerturbationSpec(**pert)
        return cls(int(data["n_sites"]), Boundary(data.get("boundary", "open")),
                   float(data["a"]), float(data["b"]), pert)

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        return cls.from_dict(json.loads(text))


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_spec(spec: ModelSpec) -> ValidationReport:
    """Collect every violated model constraint. Never raises."""
    rep = ValidationReport()
    if not isinstance(spec.n_sites, (int, np.integer)) or spec.n_sites < 1:
        rep.violations.append("n_sites>=1 fails")
    if not spec.b > 0:
        rep.violations.append("b>0 fails")
    if not spec.a > 2 * spec.b:
        rep.violations.append("a>2b fails")
    p = spec.perturbation
    if p is not None:
        if p.eps_self < 0:
            rep.violations.append("eps_self>=0 fails")
        if p.eps_pair < 0:
            rep.violations.append("eps_pair>=0 fails")
        if not p.w > 0:
            rep.violations.append("w>0 fails")
        if not p.gamma0 > 0:
            rep.violations.append("gamma0>0 fails")
        if p.range_cut is not None and p.range_cut < 1:
            rep.violations.append("range_cut>=1 fails")
    return rep


@dataclass(frozen=True)
class CouplingMatrix:
    entries: np.ndarray
    boundary: Boundary

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def coupling_entries(dim: int, a: float, b: float, cyclic: bool) -> np.ndarray:
    W = a * np.eye(dim) - b * (np.eye(dim, k=1) + np.eye(dim, k=-1))
    if cyclic and dim >= 3:
        W[0, -1] = W[-1, 0] = -b
    return W


def build_coupling(spec: ModelSpec) -> CouplingMatrix:
    """W with V_quad(x) = 1/2 x^T W x.

    Only the positive-definiteness conditions are enforced here, so the
    decoupled chain (b = 0) and a single site (n = 0) are allowed.
    """
    if spec.n_sites < 0:
        raise ValueError("n_sites must be >= 0")
    if not spec.a > 2 * abs(spec.b):
        raise ValueError(f"coupling not positive definite: a={spec.a}, b={spec.b}")
    cyclic = spec.boundary == Boundary.CYCLIC
    return CouplingMatrix(coupling_entries(spec.dim, spec.a, spec.b, cyclic), spec.boundary)


# ---------------------------------------------------------------- hypothesis constants

def gaussian_moment_l1(m: int, w: float) -> float:
    """L1 norm of xi^m times the Fourier transform of exp(-x^2 / 2w^2).

    With v^(xi) = int v(x) exp(-i x xi) dx the transform is
    w sqrt(2 pi) exp(-w^2 xi^2 / 2), and the integral of |xi|^m against it is
    sqrt(2 pi) w^-m 2^((m+1)/2) Gamma((m+1)/2).
    """
    return math.sqrt(2 * math.pi) * w ** (-m) * 2 ** ((m + 1) / 2) * gamma_fn((m + 1) / 2)


@dataclass(frozen=True)
class HypothesisConstants:
    """Decay constants of a model.

    k(h) for |h| <= len(k_near) - 1 is stored explicitly; beyond that
    k(h) = tail_amp * exp(-tail_rate * |h|) (tail_amp = 0 for finite range).
    """

    C0: float
    gamma0: float
    k_near: np.ndarray
    tail_amp: float = 0.0
    tail_rate: float = math.inf

    def k(self, h: int) -> float:
        h = abs(int(h))
        if h < len(self.k_near):
            return float(self.k_near[h])
        if self.tail_amp == 0.0:
            return 0.0
        return self.tail_amp * math.exp(-self.tail_rate * h)

    def profile(self, hmax: int) -> np.ndarray:
        """k(0), ..., k(hmax)."""
        return np.array([self.k(h) for h in range(hmax + 1)])

    @property
    def finite_range(self) -> bool:
        return self.tail_amp == 0.0

    def scaled(self, g: float) -> "HypothesisConstants":
        return HypothesisConstants(self.C0 * g, self.gamma0, self.k_near * g,
                                   self.tail_amp * g, self.tail_rate)


def hypothesis_constants(spec: ModelSpec) -> HypothesisConstants:
    """C0 and the gradient-coupling profile k(h) for the Gaussian families.

    Second derivatives of the bumps are bounded by their value at the origin:
    |v_self''| <= eps_self / w^2 and each pair term contributes
    eps_pair e^{-gamma0 |h|} / w^2, counted twice because both orderings of a
    pair appear in the potential.
    """
    a, b = spec.a, spec.b
    pert = spec.perturbation
    if pert is None or pert.is_zero():
        gamma0 = math.inf if pert is None else pert.gamma0
        if pert is not None:
            _check_pert(pert)
        return HypothesisConstants(0.0, gamma0, np.array([a, b], dtype=float))
    _check_pert(pert)
    w2 = pert.w ** 2
    m2, m3 = gaussian_moment_l1(2, pert.w), gaussian_moment_l1(3, pert.w)
    # pair bumps depend on x - y only, so the 2D transform lives on a line
    c_self = pert.eps_self * (m2 + m3)
    c_pair = 2 * math.pi * pert.eps_pair * (3 * m2 + 4 * m3)
    C0 = max(c_self, c_pair)

    s = pert.eps_self / w2
    p = pert.eps_pair / w2
    g0 = pert.gamma0
    rc = pert.range_cut
    if rc is not None:
        hs = np.arange(1, rc + 1)
        pair = 2 * p * np.exp(-g0 * hs)
        k = np.zeros(rc + 1)
        k[0] = a + s + 2 * pair.sum()
        k[1:] = pair
        k[1] += b
        return HypothesisConstants(C0, g0, k)
    # infinite range: sum_{h != 0} 2 p e^{-g0|h|} = 4 p e^{-g0} / (1 - e^{-g0})
    q = math.exp(-g0)
    k0 = a + s + 4 * p * q / (1 - q)
    k1 = b + 2 * p * q
    return HypothesisConstants(C0, g0, np.array([k0, k1]), tail_amp=2 * p, tail_rate=g0)


def _check_pert(pert: PerturbationSpec) -> None:
    if not pert.w > 0:
        raise ValueError("w must be > 0")
    if not pert.gamma0 > 0:
        raise ValueError("gamma0 must be > 0")


def s_gamma(consts: HypothesisConstants, gamma: float, sharp: bool = False) -> float:
    """Constant S with sum_mu k(lam-mu) e^{-gamma|mu-nu|} <= S e^{-gamma|lam-nu|}.

    Default: S = sum_h k(h) e^{gamma|h|} over all integers h.
    sharp=True: S = k(0) + 2 sum_{h>=1} k(h) cosh(gamma h), the supremum of the
    left side over lattice positions (smaller, still sufficient).
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    if not consts.finite_range and gamma >= consts.tail_rate:
        raise ValueError(f"series diverges for gamma={gamma} >= gamma0={consts.tail_rate}")
    h = np.arange(1, len(consts.k_near))
    kk = consts.k_near[1:]
    if sharp:
        total = consts.k_near[0] + 2 * np.sum(kk * np.cosh(gamma * h))
    else:
        total = consts.k_near[0] + 2 * np.sum(kk * np.exp(gamma * h))
    if not consts.finite_range:
        L = len(consts.k_near)
        A, r = consts.tail_amp, consts.tail_rate
        up = A * math.exp((gamma - r) * L) / (1 - math.exp(gamma - r))
        if sharp:
            down = A * math.exp((-gamma - r) * L) / (1 - math.exp(-gamma - r))
            total += up + down
        else:
            total += 2 * up
    return float(total)


@dataclass(frozen=True)
class VelocityBound:
    value: float
    gamma: float


def velocity_bound_general(consts: HypothesisConstants, gamma_grid: Sequence[float],
                           sharp: bool = False) -> VelocityBound:
    """min over the grid of 2 sqrt(S_gamma) / gamma."""
    grid = np.asarray(list(gamma_grid), dtype=float)
    if grid.size == 0:
        raise ValueError("empty gamma grid")
    if np.any(grid <= 0):
        raise ValueError("gamma grid must be positive")
    vals = np.array([2 * math.sqrt(s_gamma(consts, g, sharp)) / g for g in grid])
    i = int(np.argmin(vals))
    return VelocityBound(float(vals[i]), float(grid[i]))


def admissible_gamma_grid(consts: HypothesisConstants, num: int = 64,
                          lo: float = 0.01, hi: float = 3.0) -> np.ndarray:
    """Log grid of decay rates, clipped below gamma0 when the range is infinite."""
    if not consts.finite_range:
        hi = min(hi, 0.999 * consts.tail_rate)
    return np.geomspace(lo, hi, num)


def sgamma_violations(consts: HypothesisConstants, gamma: float, dim: int,
                      sharp: bool = False, rtol: float = 1e-12) -> int:
    """Count entries (lam, nu) where the convolution inequality fails on dim sites."""
    S = s_gamma(consts, gamma, sharp)
    idx = np.arange(dim)
    dist = np.abs(idx[:, None] - idx[None, :])
    K = np.vectorize(consts.k)(dist)
    E = np.exp(-gamma * dist)
    lhs = K @ E
    rhs = S * E
    return int(np.sum(lhs > rhs * (1 + rtol)))
