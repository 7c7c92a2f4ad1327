"""Truncated Fock representations of a few oscillator sites.

Each site keeps the lowest d levels of an oscillator with frequency `omega`
(omega = 1 gives Q = (a + a*)/sqrt 2). Optionally the total excitation number
is capped, which keeps five or more sites tractable. Every operator is the
compression of its infinite-dimensional counterpart to the kept basis states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import svds

from .harmonic import PhasePoint

DENSE_SVD_LIMIT = 2048


class BudgetError(RuntimeError):
    """Representation larger than the configured budget."""


# ---------------------------------------------------------------- single site

def build_site_ops(d: int, omega: float = 1.0):
    """lower, raise, Q, P as d x d matrices; lower[j-1, j] = sqrt(j)."""
    if d < 2:
        raise ValueError("d must be >= 2")
    lower = np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1)
    rais = lower.T.copy()
    Q = (lower + rais) / math.sqrt(2 * omega)
    P = (lower - rais) * math.sqrt(omega) / (1j * math.sqrt(2))
    return lower, rais, Q, P


def site_squares(d: int, omega: float = 1.0):
    """Compressions of Q^2 and P^2 (products formed with one extra level)."""
    _, _, Q, P = build_site_ops(d + 1, omega)
    return (Q @ Q)[:d, :d].real, (P @ P)[:d, :d].real


def _capped_occupations(ns: int, d: int, cap: int) -> np.ndarray:
    if ns == 0:
        return np.zeros((1, 0), dtype=np.int64)
    if ns == 1:
        return np.arange(min(d, cap + 1), dtype=np.int64)[:, None]
    blocks = []
    for k in range(min(d, cap + 1)):
        rest = _capped_occupations(ns - 1, d, cap - k)
        blocks.append(np.hstack([np.full((len(rest), 1), k, dtype=np.int64), rest]))
    return np.vstack(blocks)


# ---------------------------------------------------------------- representation

@dataclass(frozen=True)
class TruncatedRep:
    """Product basis over `sites` (ascending), d levels each, optional excitation cap."""

    sites: tuple[int, ...]
    d: int
    max_total: int | None = None
    omega: float = 1.0
    budget: int = 2 ** 16

    def __post_init__(self):
        sites = tuple(sorted(int(s) for s in self.sites))
        if len(set(sites)) != len(sites):
            raise ValueError("duplicate sites")
        object.__setattr__(self, "sites", sites)
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if self.max_total is not None and self.max_total < 0:
            raise ValueError("max_total must be >= 0")
        if self.omega <= 0:
            raise ValueError("omega must be > 0")
        if self.total_dim > self.budget:
            raise BudgetError(f"dimension {self.total_dim} exceeds budget {self.budget}")

    @property
    def cap(self) -> int:
        full = len(self.sites) * (self.d - 1)
        return full if self.max_total is None else min(self.max_total, full)

    @property
    def total_dim(self) -> int:
        ns, d = len(self.sites), self.d
        if self.max_total is None or self.cap >= ns * (d - 1):
            return d ** ns
        # inclusion-exclusion count of occupations with sum <= cap
        return sum((-1) ** j * math.comb(ns, j) * math.comb(self.cap - j * d + ns, ns)
                   for j in range(ns + 1) if self.cap - j * d >= 0)

    @cached_property
    def occupations(self) -> np.ndarray:
        return _capped_occupations(len(self.sites), self.d, self.cap)

    @cached_property
    def radix(self) -> np.ndarray:
        ns = len(self.sites)
        return self.d ** np.arange(ns - 1, -1, -1, dtype=np.int64)

    @cached_property
    def codes(self) -> np.ndarray:
        return self.occupations @ self.radix

    @cached_property
    def totals(self) -> np.ndarray:
        return self.occupations.sum(axis=1)

    def position(self, site: int) -> int:
        try:
            return self.sites.index(int(site))
        except ValueError:
            raise ValueError(f"site {site} not in representation") from None

    def restricted(self, sites: Iterable[int]) -> "TruncatedRep":
        return TruncatedRep(tuple(sites), self.d, self.max_total, self.omega, self.budget)

    def vacuum(self) -> np.ndarray:
        f = np.zeros(self.total_dim, dtype=complex)
        f[0] = 1.0
        return f

    def bulk_indices(self, level: int) -> np.ndarray:
        """Basis states with total excitation <= level."""
        return np.flatnonzero(self.totals <= level)

    def probe_block(self, level: int = 0) -> np.ndarray:
        """Columns of the identity on the bulk block (total excitation <= level)."""
        idx = self.bulk_indices(level)
        F = np.zeros((self.total_dim, len(idx)), dtype=complex)
        F[idx, np.arange(len(idx))] = 1.0
        return F

    @cached_property
    def site_ops(self) -> dict:
        _, _, Q, P = build_site_ops(self.d, self.omega)
        return {"Q": Q, "P": P}


def natural_rep(sites: Sequence[int], d: int, a: float, max_total: int | None = "auto",
                budget: int = 2 ** 16) -> TruncatedRep:
    """Basis adapted to on-site stiffness a: frequency sqrt(a), cap d - 1 by default."""
    if max_total == "auto":
        max_total = d - 1
    return TruncatedRep(tuple(sites), d, max_total, math.sqrt(a), budget)


# ---------------------------------------------------------------- operators

@dataclass(frozen=True)
class ObservableOp:
    rep: TruncatedRep
    matrix: object  # ndarray or scipy sparse
    support: frozenset = field(default_factory=frozenset)

    def dense(self) -> np.ndarray:
        m = self.matrix
        return m.toarray() if sp.issparse(m) else np.asarray(m)

    def sparse(self):
        m = self.matrix
        return m.tocsr() if sp.issparse(m) else sp.csr_matrix(m)

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def __matmul__(self, other: "ObservableOp") -> "ObservableOp":
        _same_rep(self, other)
        return ObservableOp(self.rep, self.matrix @ other.matrix, self.support | other.support)

    def __add__(self, other: "ObservableOp") -> "ObservableOp":
        _same_rep(self, other)
        return ObservableOp(self.rep, self.matrix + other.matrix, self.support | other.support)

    def __sub__(self, other: "ObservableOp") -> "ObservableOp":
        _same_rep(self, other)
        return ObservableOp(self.rep, self.matrix - other.matrix, self.support | other.support)

    def scale(self, c) -> "ObservableOp":
        return ObservableOp(self.rep, self.matrix * c, self.support)

    def adjoint(self) -> "ObservableOp":
        return ObservableOp(self.rep, self.matrix.conj().T, self.support)

    def to_text(self) -> str:
        """Debug dump: site list, d, then row-major complex entries."""
        m = self.dense()
        lines = [" ".join(map(str, self.rep.sites)), str(self.rep.d)]
        lines += [" ".join(f"{z.real:.17g}{z.imag:+.17g}j" for z in row) for row in m]
        return "\n".join(lines) + "\n"


def _same_rep(x: ObservableOp, y: ObservableOp) -> None:
    if x.rep != y.rep:
        raise ValueError("operators live on different representations")


def identity(rep: TruncatedRep) -> ObservableOp:
    return ObservableOp(rep, sp.identity(rep.total_dim, dtype=complex, format="csr"), frozenset())


def zero(rep: TruncatedRep) -> ObservableOp:
    return ObservableOp(rep, sp.csr_matrix((rep.total_dim, rep.total_dim), dtype=complex), frozenset())


def _embed_local(rep: TruncatedRep, sub_sites: Sequence[int], sub_occ: np.ndarray,
                 M: np.ndarray) -> sp.csr_matrix:
    """Compression of (M on sub_sites) tensor identity to the basis of rep.

    sub_occ lists the local basis (rows of occupations on sub_sites, sorted
    lexicographically) that indexes M.
    """
    pos = np.array([rep.position(s) for s in sub_sites], dtype=np.int64)
    occ = rep.occupations
    N = rep.total_dim
    loc_radix = rep.d ** np.arange(len(pos) - 1, -1, -1, dtype=np.int64)
    sub_codes = sub_occ @ loc_radix
    state_local = occ[:, pos] @ loc_radix
    lidx = np.searchsorted(sub_codes, state_local)
    lidx_ok = (lidx < len(sub_codes)) & (sub_codes[np.minimum(lidx, len(sub_codes) - 1)] == state_local)
    glob = sub_occ @ rep.radix[pos]
    loc_tot = sub_occ.sum(axis=1)
    M = np.asarray(M)
    rows, cols, vals = [], [], []
    order = np.argsort(np.where(lidx_ok, lidx, -1), kind="stable")
    keyed = np.where(lidx_ok, lidx, -1)[order]
    starts = np.searchsorted(keyed, np.arange(len(sub_codes)))
    ends = np.searchsorted(keyed, np.arange(len(sub_codes)), side="right")
    for l in range(len(sub_codes)):
        states = order[starts[l]:ends[l]]
        if states.size == 0:
            continue
        r = np.flatnonzero(M[:, l])
        if r.size == 0:
            continue
        tgt_tot = rep.totals[states][:, None] - loc_tot[l] + loc_tot[r][None, :]
        ok = tgt_tot <= rep.cap
        tgt = rep.codes[states][:, None] + (glob[r] - glob[l])[None, :]
        ii, jj = np.nonzero(ok)
        rows.append(np.searchsorted(rep.codes, tgt[ii, jj]))
        cols.append(states[ii])
        vals.append(M[r[jj], l])
    if not rows:
        return sp.csr_matrix((N, N), dtype=complex)
    return sp.csr_matrix((np.concatenate(vals).astype(complex),
                          (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))


def _full_local_basis(k: int, d: int) -> np.ndarray:
    return _capped_occupations(k, d, k * (d - 1))


def local_operator(rep: TruncatedRep, sites: Sequence[int], M: np.ndarray) -> ObservableOp:
    """Embed a d^k x d^k matrix acting on `sites` (ascending order, kron layout)."""
    sites = tuple(int(s) for s in sites)
    if list(sites) != sorted(sites):
        raise ValueError("sites must be ascending")
    k = len(sites)
    if M.shape != (rep.d ** k, rep.d ** k):
        raise ValueError("matrix shape does not match sites and d")
    mat = _embed_local(rep, sites, _full_local_basis(k, rep.d), M)
    return ObservableOp(rep, mat, frozenset(sites))


def site_operator(rep: TruncatedRep, site: int, M: np.ndarray) -> ObservableOp:
    return local_operator(rep, (site,), M)


def position(rep: TruncatedRep, site: int) -> ObservableOp:
    return site_operator(rep, site, rep.site_ops["Q"])


def momentum(rep: TruncatedRep, site: int) -> ObservableOp:
    return site_operator(rep, site, rep.site_ops["P"])


def canonical(rep: TruncatedRep, site: int, j: int) -> ObservableOp:
    """Q (j=0) or P (j=1) at a site."""
    return position(rep, site) if j == 0 else momentum(rep, site)


def embed_operator(T: ObservableOp, rep_F: TruncatedRep) -> ObservableOp:
    """T tensor identity on the larger site set, compressed to rep_F's basis."""
    E = T.rep
    if not set(E.sites) <= set(rep_F.sites):
        raise ValueError("sites of T are not contained in the target representation")
    if E.d != rep_F.d or E.omega != rep_F.omega:
        raise ValueError("local dimension or frequency mismatch")
    if E.cap < min(rep_F.cap, len(E.sites) * (E.d - 1)):
        raise ValueError("source cap too small for the target representation")
    mat = _embed_local(rep_F, E.sites, E.occupations, T.dense())
    return ObservableOp(rep_F, mat, T.support)


def compress_operator(T: ObservableOp, sites_E: Iterable[int]) -> ObservableOp:
    """Vacuum matrix element over the dropped sites."""
    F = T.rep
    sites_E = tuple(sorted(int(s) for s in sites_E))
    if not set(sites_E) <= set(F.sites):
        raise ValueError("target sites are not a subset of the operator's sites")
    dropped = [F.position(s) for s in F.sites if s not in sites_E]
    keep = np.flatnonzero(np.all(F.occupations[:, dropped] == 0, axis=1)) if dropped \
        else np.arange(F.total_dim)
    rep_E = F.restricted(sites_E)
    m = T.matrix
    sub = m[keep][:, keep]
    return ObservableOp(rep_E, sub, frozenset(s for s in T.support if s in sites_E))


# ---------------------------------------------------------------- potentials and Weyl operators

@dataclass(frozen=True)
class PotentialTerm:
    """amplitude * exp(-x^2 / 2w^2) at one site, or of x_i - x_j for a pair."""

    sites: tuple[int, ...]
    amplitude: float
    w: float = 1.0

    def __post_init__(self):
        if len(self.sites) not in (1, 2):
            raise ValueError("unsupported potential: need one or two sites")
        if self.w <= 0:
            raise ValueError("w must be > 0")

    def profile(self, x):
        return self.amplitude * np.exp(-np.asarray(x) ** 2 / (2 * self.w ** 2))


def potential_operator(rep: TruncatedRep, term: PotentialTerm) -> ObservableOp:
    """Functional calculus on the truncated position operators."""
    Q = rep.site_ops["Q"].real
    x, V = np.linalg.eigh(Q)
    if len(term.sites) == 1:
        M = (V * term.profile(x)) @ V.T
        return site_operator(rep, term.sites[0], M)
    i, j = term.sites
    if i == j:
        raise ValueError("pair potential needs two distinct sites")
    lo, hi = sorted((i, j))
    diff = (x[:, None] - x[None, :]).ravel()
    VV = np.kron(V, V)
    M = (VV * term.profile(diff)) @ VV.T
    return local_operator(rep, (lo, hi), M)


def _site_exp(rep: TruncatedRep, u: float, v: float) -> np.ndarray:
    ops = rep.site_ops
    G = u * ops["P"] + v * ops["Q"]
    G = (G + G.conj().T) / 2
    lam, V = np.linalg.eigh(G)
    return (V * np.exp(1j * lam)) @ V.conj().T


def weyl_operator(rep: TruncatedRep, p: PhasePoint, sites: Sequence[int] | None = None) -> ObservableOp:
    """exp(i Pi(u, v)); p is indexed like `sites` (defaults to rep.sites)."""
    sites = tuple(rep.sites if sites is None else sites)
    if len(sites) != p.u.shape[0]:
        raise ValueError("phase point length does not match sites")
    active = [(s, p.u[k], p.v[k]) for k, s in enumerate(sites) if p.u[k] != 0 or p.v[k] != 0]
    for s, _, _ in active:
        if s not in rep.sites:
            raise ValueError(f"support site {s} outside representation")
    if not active:
        return identity(rep)
    active.sort()
    M = np.ones((1, 1), dtype=complex)
    for _, u, v in active:
        M = np.kron(M, _site_exp(rep, u, v))
    return local_operator(rep, tuple(s for s, _, _ in active), M)


def single_site_weyl(rep: TruncatedRep, site: int, u: float = 0.0, v: float = 1.0) -> ObservableOp:
    return local_operator(rep, (site,), _site_exp(rep, u, v))


# ---------------------------------------------------------------- norms

def op_norm(X, columns: np.ndarray | None = None, seed: int = 0) -> float:
    """Largest singular value, optionally of X restricted to some basis columns."""
    if isinstance(X, ObservableOp):
        X = X.matrix
    if columns is not None:
        X = X[:, columns]
    shape = X.shape
    if min(shape) == 0:
        return 0.0
    if max(shape) <= DENSE_SVD_LIMIT or min(shape) <= 2:
        m = X.toarray() if sp.issparse(X) else np.asarray(X)
        return float(np.linalg.norm(m, 2))
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(min(shape))
    s = svds(X, k=1, v0=v0, tol=1e-10, return_singular_vectors=False)
    return float(s[0])


@dataclass(frozen=True)
class NormBundle:
    op_norm: float
    w1_extra: float = 0.0
    w2_extra: float = 0.0

    @property
    def w0(self) -> float:
        return self.op_norm

    @property
    def w1(self) -> float:
        return self.op_norm + self.w1_extra

    @property
    def w2(self) -> float:
        return self.w1 + self.w2_extra

    def scaled(self, c: float) -> "NormBundle":
        c = abs(c)
        return NormBundle(self.op_norm * c, self.w1_extra * c, self.w2_extra * c)


def _comm(X, Y):
    return X @ Y - Y @ X


def wk_norm(A: ObservableOp, k: int = 2, sites: Iterable[int] | None = None,
            bulk_level: int | None = None) -> NormBundle:
    """Operator norm plus single and halved double commutator sums with Q and P.

    Commutators vanish away from the support, so by default the sums run over
    the support and its nearest neighbours inside the representation.
    bulk_level restricts every norm to basis columns with total excitation
    at most that level.
    """
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1 or 2")
    rep = A.rep
    cols = None if bulk_level is None else rep.bulk_indices(bulk_level)
    if sites is None:
        halo = set()
        for s in A.support:
            halo |= {s - 1, s, s + 1}
        sites = sorted(s for s in halo if s in rep.sites)
    sites = list(sites)
    X = A.matrix
    base = op_norm(X, cols)
    if k == 0:
        return NormBundle(base)
    cans = [canonical(rep, s, j).matrix for s in sites for j in (0, 1)]
    firsts = [_comm(X, C) for C in cans]
    w1 = sum(op_norm(F, cols) for F in firsts)
    if k == 1:
        return NormBundle(base, w1)
    w2 = 0.0
    for F in firsts:
        for C in cans:
            w2 += op_norm(_comm(F, C), cols)
    return NormBundle(base, w1, 0.5 * w2)


def hk_seminorm(f: np.ndarray, k: int, rep: TruncatedRep) -> float:
    """||f|| + sup ||X f|| (+ sup ||X Y f|| for k = 2) over site Q and P."""
    f = np.asarray(f)
    if f.shape[0] != rep.total_dim:
        raise ValueError("state dimension mismatch")
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    cans = [canonical(rep, s, j).matrix for s in rep.sites for j in (0, 1)]
    ones = [C @ f for C in cans]
    total = float(np.linalg.norm(f)) + max(float(np.linalg.norm(g)) for g in ones)
    if k == 2:
        total += max(float(np.linalg.norm(C @ g)) for C in cans for g in ones)
    return total
