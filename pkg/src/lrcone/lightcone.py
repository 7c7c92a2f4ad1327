"""Commutator-norm scans over (distance, time) and empirical propagation speeds."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .dispersion import DispersionParams, velocity_bound_quadratic
from .dynamics import HamiltonianBundle, shift_observable
from .fock import ObservableOp
from .harmonic import (PhasePoint, RingBound, cyclic_distance, evolve_matrices_circulant,
                       evolve_matrices_spectral, symplectic_propagate)
from .model import (Boundary, HypothesisConstants, ModelSpec, admissible_gamma_grid,
                    build_coupling, velocity_bound_general)


class ScanSource(str, Enum):
    HARMONIC_EXACT = "harmonic-exact"
    FOCK_NUMERIC = "fock-numeric"


@dataclass
class ConeScan:
    h_grid: np.ndarray
    t_grid: np.ndarray
    norms: np.ndarray  # shape (len(h_grid), len(t_grid))
    source: ScanSource = ScanSource.HARMONIC_EXACT
    model_id: str = ""
    a_desc: str = ""
    b_desc: str = ""
    dropped: list = field(default_factory=list)

    def rows(self):
        for i, h in enumerate(self.h_grid):
            for j, t in enumerate(self.t_grid):
                yield int(h), float(t), float(self.norms[i, j])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["h", "t", "norm"])
            for h, t, v in self.rows():
                w.writerow([h, f"{t:.17g}", f"{v:.17g}"])

    @classmethod
    def from_function(cls, h_grid, t_grid, fn, **kw) -> "ConeScan":
        h_grid, t_grid = np.asarray(h_grid), np.asarray(t_grid, float)
        norms = np.array([[fn(h, t) for t in t_grid] for h in h_grid], dtype=float)
        return cls(h_grid, t_grid, norms, **kw)


def _site_weyl(dim: int, index: int, uv: tuple[float, float]) -> PhasePoint:
    return PhasePoint.single(dim, index, uv[0], uv[1])


def cone_scan_harmonic(spec: ModelSpec, h_grid: Sequence[int], t_grid: Sequence[float],
                       a_uv: tuple[float, float] = (0.0, 1.0),
                       b_uv: tuple[float, float] = (0.0, 1.0),
                       origin: int = 0) -> ConeScan:
    """Exact ||[alpha_t(W_A), W_B(h)]|| for single-site Weyl operators.

    W_A sits at site `origin`, W_B at origin + h (wrapped on the ring).
    Open chains drop shifts landing in the outer quarter of the lattice.
    """
    N, n = spec.dim, spec.n_sites
    h_grid = np.asarray(list(h_grid), dtype=int)
    t_grid = np.asarray(list(t_grid), dtype=float)
    i0 = spec.index(origin)
    cyclic = spec.boundary == Boundary.CYCLIC
    keep, dropped = [], []
    for h in h_grid:
        if cyclic:
            if abs(h) > n:
                raise ValueError(f"shift {h} exceeds the ring half-length {n}")
            keep.append(h)
            continue
        s = origin + h
        if abs(s) > n:
            raise ValueError(f"shift {h} leaves the chain")
        if abs(s) > n - n // 4 or abs(origin) > n - n // 4:
            dropped.append(int(h))
        else:
            keep.append(h)
    keep = np.array(keep, dtype=int)
    targets = (i0 + keep) % N
    p1 = _site_weyl(N, i0, a_uv)
    W = build_coupling(spec) if not cyclic else None
    norms = np.zeros((len(keep), len(t_grid)))
    for j, t in enumerate(t_grid):
        E = evolve_matrices_circulant(spec, t) if cyclic else evolve_matrices_spectral(W, t)
        q = symplectic_propagate(E, p1)
        sigma = q.u[targets] * b_uv[1] - q.v[targets] * b_uv[0]
        norms[:, j] = 2 * np.abs(np.sin(sigma / 2))
    return ConeScan(keep, t_grid, norms, ScanSource.HARMONIC_EXACT,
                    spec.to_json(), f"weyl{a_uv}@{origin}", f"weyl{b_uv}@{origin}+h", dropped)


def cone_scan_fock(bundle: HamiltonianBundle, A: ObservableOp, B: ObservableOp,
                   h_grid: Sequence[int], t_grid: Sequence[float], probe_level: int = 0) -> ConeScan:
    """||[alpha_t(A), tau_h(B)] F|| on the low-excitation probe block F."""
    rep = bundle.rep
    F = rep.probe_block(probe_level)
    h_grid = np.asarray(list(h_grid), dtype=int)
    t_grid = np.asarray(list(t_grid), dtype=float)
    shifted = [shift_observable(B, int(h)) for h in h_grid]
    norms = np.zeros((len(h_grid), len(t_grid)))
    for j, t in enumerate(t_grid):
        # alpha_t(A) F is shared by every shift
        AF = bundle.propagate(A.matrix @ bundle.propagate(F, t), -t)
        for i, Bh in enumerate(shifted):
            Z = bundle.propagate(A.matrix @ bundle.propagate(Bh.matrix @ F, t), -t)
            norms[i, j] = float(np.linalg.norm(Z - Bh.matrix @ AF, 2))
    return ConeScan(h_grid, t_grid, norms, ScanSource.FOCK_NUMERIC, bundle.model.to_json(),
                    f"A{sorted(A.support)}", f"B{sorted(B.support)}+h")


# ---------------------------------------------------------------- velocity fit

@dataclass
class VelocityReport:
    v_empirical: float
    threshold: float
    crossings: list
    gamma_fit: float = math.nan
    M_fit: float = math.nan
    v_bound_quadratic: float = math.nan
    v_bound_general: float = math.nan

    @property
    def defined(self) -> bool:
        return not math.isnan(self.v_empirical)

    def to_dict(self) -> dict:
        return asdict(self)


def crossing_times(scan: ConeScan, threshold: float) -> list[tuple[int, float]]:
    """First time each |h| > 0 exceeds the threshold, linearly interpolated."""
    out = []
    t = scan.t_grid
    for i, h in enumerate(scan.h_grid):
        if h == 0:
            continue
        y = scan.norms[i]
        above = np.flatnonzero(y > threshold)
        if above.size == 0:
            continue
        k = int(above[0])
        if k == 0:
            tc = float(t[0])
        else:
            y0, y1 = y[k - 1], y[k]
            tc = float(t[k - 1] + (threshold - y0) / (y1 - y0) * (t[k] - t[k - 1]))
        out.append((abs(int(h)), tc))
    return out


def fit_velocity(scan: ConeScan, threshold: float, params: DispersionParams | None = None,
                 consts: HypothesisConstants | None = None, floor: float = 1e-13,
                 fit_fraction: float = 0.5) -> VelocityReport:
    """Slope of distance against crossing time, plus a log-linear fit outside the cone.

    The line is fitted to the farthest `fit_fraction` of the crossing
    distances (at least three): the front broadens like t^(1/3), so near
    crossings bias the slope upward. Fewer than three crossings gives an
    undefined (nan) velocity.
    """
    if not 0 < fit_fraction <= 1:
        raise ValueError("fit_fraction must be in (0, 1]")
    cross = crossing_times(scan, threshold)
    vq = velocity_bound_quadratic(params).value if params is not None else math.nan
    vg = (velocity_bound_general(consts, admissible_gamma_grid(consts)).value
          if consts is not None else math.nan)
    if len({h for h, _ in cross}) < 3:
        return VelocityReport(math.nan, threshold, cross, v_bound_quadratic=vq, v_bound_general=vg)
    cross.sort()
    used = cross[-max(3, int(math.ceil(fit_fraction * len(cross)))):]
    hs = np.array([h for h, _ in used], float)
    ts = np.array([tc for _, tc in used])
    v = float(np.polyfit(ts, hs, 1)[0])
    # outside the cone: log norm = c + M t - gamma h
    H, T = np.meshgrid(np.abs(scan.h_grid), scan.t_grid, indexing="ij")
    mask = (scan.norms < threshold) & (scan.norms > floor) & (H > v * T) & (H > 0)
    gamma_fit = M_fit = math.nan
    if mask.sum() >= 3:
        X = np.column_stack([np.ones(mask.sum()), T[mask], -H[mask]])
        coef, *_ = np.linalg.lstsq(X, np.log(scan.norms[mask]), rcond=None)
        M_fit, gamma_fit = float(coef[1]), float(coef[2])
    return VelocityReport(v, threshold, cross, gamma_fit, M_fit, vq, vg)


# ---------------------------------------------------------------- checks against bounds

def cone_bound_violations(scan: ConeScan, bound: RingBound, dim: int,
                          a_uv=(0.0, 1.0), b_uv=(0.0, 1.0), rtol: float = 1e-12) -> int:
    """Grid points where the norm exceeds weight * C e^{M t} e^{-gamma d_n(h)}.

    2|sin(sigma/2)| <= |sigma| and sigma is a combination of one entry of each
    evolution matrix, so the entrywise ring bound carries over with weight
    (|u_A| + |v_A|)(|u_B| + |v_B|).
    """
    weight = (abs(a_uv[0]) + abs(a_uv[1])) * (abs(b_uv[0]) + abs(b_uv[1]))
    dist = cyclic_distance(0, scan.h_grid, dim)
    count = 0
    for j, t in enumerate(scan.t_grid):
        rhs = weight * bound.rhs(t, dist)
        count += int(np.sum(scan.norms[:, j] > rhs * (1 + rtol)))
    return count


def ray_norms(spec: ModelSpec, v: float, dt: float, k_max: int,
              a_uv=(0.0, 1.0), b_uv=(0.0, 1.0)) -> np.ndarray:
    """Norms along (h_k, t_k) = (ceil(v t_k), k dt) for k = 1..k_max."""
    out = []
    for k in range(1, k_max + 1):
        t = k * dt
        h = int(math.ceil(v * t))
        out.append(cone_scan_harmonic(spec, [h], [t], a_uv, b_uv).norms[0, 0])
    return np.array(out)
