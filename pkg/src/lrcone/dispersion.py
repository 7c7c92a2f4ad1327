"""Complex dispersion relation and the Laurent expansions of the evolution symbols.

Omega(z) = sqrt(a - b (z + 1/z)). On the unit circle z = e^{i theta} this is
the phonon frequency sqrt(a - 2b cos theta); off the circle its imaginary part
controls how fast matrix elements of the evolution decay with distance.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

KINDS = ("f", "g", "h")


@dataclass(frozen=True)
class DispersionParams:
    a: float
    b: float

    def __post_init__(self):
        if not self.a > 2 * abs(self.b):
            raise ValueError(f"need a > 2|b|, got a={self.a}, b={self.b}")


def omega_complex(params: DispersionParams, z):
    """Principal square root of a - b(z + 1/z). Works on arrays."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ValueError("z = 0 is a pole of the dispersion relation")
    out = np.sqrt(params.a - params.b * (z + 1 / z))
    return out[()] if out.ndim == 0 else out


def _circle(gamma: float, theta):
    return np.exp(gamma + 1j * np.asarray(theta))


def _abs_im_omega(params, gamma, theta):
    return np.abs(omega_complex(params, _circle(gamma, theta)).imag)


def m_gamma(params: DispersionParams, gamma: float, grid_size: int = 4096) -> float:
    """sup of |Im Omega| on the circle |z| = e^gamma (grid plus local refinement)."""
    if grid_size < 64:
        raise ValueError("grid_size must be >= 64")
    if params.b == 0:
        return 0.0
    theta = np.linspace(0.0, 2 * np.pi, grid_size, endpoint=False)
    vals = _abs_im_omega(params, gamma, theta)
    i = int(np.argmax(vals))
    step = 2 * np.pi / grid_size
    res = minimize_scalar(lambda th: -float(_abs_im_omega(params, gamma, th)),
                          bounds=(theta[i] - step, theta[i] + step), method="bounded",
                          options={"xatol": 1e-12})
    return float(max(vals[i], -res.fun))


def group_velocity_max(params: DispersionParams) -> float:
    """max over theta of d omega / d theta = b sin(theta) / omega(theta)."""
    if params.b == 0:
        return 0.0
    a, b = params.a, params.b
    f = lambda th: -abs(b) * math.sin(th) / math.sqrt(a - 2 * b * math.cos(th))
    theta = np.linspace(0, np.pi, 2049)
    vals = np.array([f(t) for t in theta])
    i = int(np.argmin(vals))
    lo, hi = theta[max(i - 1, 0)], theta[min(i + 1, len(theta) - 1)]
    res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
    return float(-min(res.fun, vals[i]))


@dataclass(frozen=True)
class QuadraticVelocity:
    value: float
    gamma: float
    group_velocity: float


def default_gamma_grid() -> np.ndarray:
    return np.geomspace(1e-3, 5.0, 128)


def velocity_bound_quadratic(params: DispersionParams,
                             gamma_grid: Sequence[float] | None = None,
                             grid_size: int = 4096) -> QuadraticVelocity:
    """min over the grid of M(gamma)/gamma, refined by bounded golden search.

    For the chain the ratio is nondecreasing in gamma, so the minimum sits at
    the small-gamma end and approaches the maximal group velocity.
    """
    grid = default_gamma_grid() if gamma_grid is None else np.asarray(list(gamma_grid), float)
    if grid.size == 0:
        raise ValueError("empty gamma grid")
    if np.any(grid <= 0):
        raise ValueError("gamma grid must be positive")
    vg = group_velocity_max(params)
    if params.b == 0:
        return QuadraticVelocity(0.0, float(grid[0]), 0.0)
    grid = np.sort(grid)
    ratio = lambda g: m_gamma(params, g, grid_size) / g
    vals = np.array([ratio(g) for g in grid])
    i = int(np.argmin(vals))
    best, gbest = float(vals[i]), float(grid[i])
    if 0 < i < len(grid) - 1:
        res = minimize_scalar(ratio, bounds=(grid[i - 1], grid[i + 1]), method="bounded")
        if res.fun < best:
            best, gbest = float(res.fun), float(res.x)
    return QuadraticVelocity(best, gbest, vg)


# ---------------------------------------------------------------- Laurent coefficients

def symbol(kind: str, omega, t: float):
    """f = cos(t W), g = sin(t W)/W, h = -W sin(t W), evaluated at W = omega.

    All three are even in omega, so the branch of the square root is irrelevant.
    """
    omega = np.asarray(omega, dtype=complex)
    if kind == "f":
        return np.cos(t * omega)
    if kind == "g":
        safe = np.where(omega == 0, 1.0, omega)
        return np.where(omega == 0, t, np.sin(t * omega) / safe)
    if kind == "h":
        return -omega * np.sin(t * omega)
    raise ValueError(f"unknown kind {kind!r}")


@dataclass(frozen=True)
class LaurentTable:
    kind: str
    t: float
    gamma: float
    ks: np.ndarray
    coeffs: np.ndarray
    radius_integral: float

    @property
    def bounds(self) -> np.ndarray:
        return np.exp(-self.gamma * np.abs(self.ks)) * self.radius_integral

    def coeff(self, k: int) -> complex:
        return complex(self.coeffs[int(k) + (len(self.ks) - 1) // 2])

    def violations(self, slack: float = 1e-8) -> int:
        return int(np.sum(np.abs(self.coeffs) > self.bounds + slack))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "re_c", "im_c", "bound"])
            for k, c, bd in zip(self.ks, self.coeffs, self.bounds):
                w.writerow([int(k), f"{c.real:.17g}", f"{c.imag:.17g}", f"{bd:.17g}"])


def circle_mean_abs(params: DispersionParams, kind: str, t: float, gamma: float,
                    n: int = 4096) -> float:
    """(1/2pi) int |kind(e^{gamma + i theta}, t)| d theta by the periodic trapezoid rule."""
    theta = 2 * np.pi * np.arange(n) / n
    vals = symbol(kind, omega_complex(params, _circle(gamma, theta)), t)
    return float(np.mean(np.abs(vals)))


def laurent_coefficients(params: DispersionParams, kind: str, t: float, gamma: float,
                         K: int, fft_size: int = 4096) -> LaurentTable:
    """c_k for |k| <= K of kind(z, t) = sum_k c_k z^k, from samples on |z| = 1."""
    if fft_size < 1 or fft_size & (fft_size - 1):
        raise ValueError("fft_size must be a power of two")
    if K >= fft_size // 2:
        raise ValueError("K must be < fft_size / 2")
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    theta = 2 * np.pi * np.arange(fft_size) / fft_size
    samples = symbol(kind, omega_complex(params, np.exp(1j * theta)), t)
    c = np.fft.fft(samples) / fft_size
    ks = np.arange(-K, K + 1)
    coeffs = c[ks % fft_size]
    R = circle_mean_abs(params, kind, t, gamma, fft_size)
    return LaurentTable(kind, float(t), float(gamma), ks, coeffs, R)


def circulant_from_laurent(table: LaurentTable, dim: int) -> np.ndarray:
    """sum_k c_k S^k for the cyclic shift S on dim sites (S e_j = e_{j+1})."""
    out = np.zeros((dim, dim), dtype=complex)
    i = np.arange(dim)
    for k, c in zip(table.ks, table.coeffs):
        out[(i + k) % dim, i] += c
    return out
