"""Second-order matrix ODE X0' = X1, X1' = Omega(t) X0 + F(t).

A-type data starts at (X0, X1) = (I, 0) and B-type at (0, I). In the static
quadratic chain Omega = -W and the two families are the position and momentum
columns of the Heisenberg evolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

MatrixFn = Callable[[float], np.ndarray]


class CertificationError(RuntimeError):
    """Step-halving disagreement above tolerance."""


@dataclass(frozen=True)
class OdeSolution:
    t: float
    s: float
    kind: str
    X0: np.ndarray
    X1: np.ndarray
    steps: int
    halving_error: float


def _as_fn(omega) -> MatrixFn:
    if callable(omega):
        return omega
    mat = np.asarray(omega, dtype=float)
    return lambda _t: mat


def _rk4(omega: MatrixFn, forcing, X0, X1, s, t, steps):
    h = (t - s) / steps

    def rhs(tau, x0, x1):
        d1 = omega(tau) @ x0
        if forcing is not None:
            d1 = d1 + forcing(tau)
        return x1, d1

    tau = s
    for _ in range(steps):
        k1 = rhs(tau, X0, X1)
        k2 = rhs(tau + h / 2, X0 + h / 2 * k1[0], X1 + h / 2 * k1[1])
        k3 = rhs(tau + h / 2, X0 + h / 2 * k2[0], X1 + h / 2 * k2[1])
        k4 = rhs(tau + h, X0 + h * k3[0], X1 + h * k3[1])
        X0 = X0 + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        X1 = X1 + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        tau = s + (_ + 1) * h
    return X0, X1


def initial_data(kind: str, dim: int):
    eye, zero = np.eye(dim), np.zeros((dim, dim))
    if kind == "A":
        return eye, zero
    if kind == "B":
        return zero, eye
    raise ValueError(f"initial kind must be 'A' or 'B', got {kind!r}")


def ode_propagate(omega, t: float, kind: str = "A", s: float = 0.0, step: float = 1e-3,
                  dim: int | None = None, forcing: MatrixFn | None = None,
                  init: tuple[np.ndarray, np.ndarray] | None = None,
                  tol: float = 1e-8) -> OdeSolution:
    """Classical RK4 with a fixed step, certified against a run at half the step.

    The returned matrices come from the finer run. Raises CertificationError
    when the two runs differ by more than tol (max abs entry).
    """
    fn = _as_fn(omega)
    if dim is None:
        dim = fn(s).shape[0]
    X0, X1 = init if init is not None else initial_data(kind, dim)
    if t == s:
        return OdeSolution(t, s, kind, X0.copy(), X1.copy(), 0, 0.0)
    steps = max(1, int(math.ceil(abs(t - s) / step)))
    c0, c1 = _rk4(fn, forcing, X0, X1, s, t, steps)
    f0, f1 = _rk4(fn, forcing, X0, X1, s, t, 2 * steps)
    err = float(max(np.max(np.abs(c0 - f0)), np.max(np.abs(c1 - f1))))
    if not err <= tol:
        raise CertificationError(f"step-halving error {err:.3e} exceeds {tol:.1e} at step {step}")
    return OdeSolution(t, s, kind, f0, f1, 2 * steps, err)


def weighted_norm(X: np.ndarray, gamma: float) -> float:
    """sup over (lam, mu) of e^{gamma |lam - mu|} |X_{lam mu}|."""
    i = np.arange(X.shape[0])
    return float(np.max(np.exp(gamma * np.abs(i[:, None] - i[None, :])) * np.abs(X)))


def growth_constant(omega, gamma: float, t_samples) -> float:
    """S = sup over samples and (lam, nu) of e^{gamma|lam-nu|} sum_mu |Omega_{lam mu}| e^{-gamma|mu-nu|}."""
    fn = _as_fn(omega)
    best = 0.0
    for tau in np.atleast_1d(t_samples):
        Om = np.abs(fn(float(tau)))
        i = np.arange(Om.shape[0])
        E = np.exp(-gamma * np.abs(i[:, None] - i[None, :]))
        val = np.max((Om @ E) / E)
        best = max(best, float(val))
    return best


@dataclass(frozen=True)
class Certificate:
    gamma: float
    M: float
    norm0: float
    norm1: float
    bound0: float
    bound1: float

    @property
    def holds(self) -> bool:
        return self.norm0 <= self.bound0 * (1 + 1e-9) and self.norm1 <= self.bound1 * (1 + 1e-9)


def certificate(sol: OdeSolution, omega, gamma: float, n_samples: int = 33) -> Certificate:
    """Weighted-norm bounds for a homogeneous solution.

    With S from growth_constant and M = sqrt(S), the weighted norms obey
    A-type: |X0| <= e^{M dt}, |X1| <= M e^{M dt};
    B-type: |X0| <= e^{M dt} / M, |X1| <= e^{M dt}.
    """
    dt = abs(sol.t - sol.s)
    S = growth_constant(omega, gamma, np.linspace(min(sol.s, sol.t), max(sol.s, sol.t), n_samples))
    M = math.sqrt(S)
    e = math.exp(M * dt)
    if sol.kind == "A":
        b0, b1 = e, M * e
    else:
        b0, b1 = (e / M if M > 0 else dt), e
    return Certificate(gamma, M, weighted_norm(sol.X0, gamma), weighted_norm(sol.X1, gamma), b0, b1)
