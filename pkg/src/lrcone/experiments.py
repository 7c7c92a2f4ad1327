"""Named experiments. Each returns (headline numbers, {filename: (header, rows)})."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dispersion import (DispersionParams, KINDS, laurent_coefficients, m_gamma,
                         velocity_bound_quadratic, default_gamma_grid)
from .dynamics import (assemble_hamiltonian, convergence_gap, weyl_growth_exact)
from .fock import (ObservableOp, TruncatedRep, compress_operator, natural_rep, op_norm,
                   single_site_weyl)
from .harmonic import (evolve, evolve_matrices_ode, evolve_matrices_spectral, ring_bound,
                       ring_bound_violations)
from .lightcone import cone_bound_violations, cone_scan_fock, cone_scan_harmonic, fit_velocity
from .model import (Boundary, ModelSpec, admissible_gamma_grid, build_coupling,
                    hypothesis_constants, velocity_bound_general)
from .odes import certificate, ode_propagate

EXPERIMENTS = ("dispersion", "harmonic-cone", "fock-cone", "converge", "norms",
               "odecheck", "compress-check")


def grid(spec, default):
    """A list, or {"start", "stop", "num", "log"}; None gives the default."""
    if spec is None:
        return np.asarray(default, dtype=float)
    if isinstance(spec, dict):
        fn = np.geomspace if spec.get("log") else np.linspace
        return fn(float(spec["start"]), float(spec["stop"]), int(spec["num"]))
    arr = np.asarray(spec, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("grids must be nonempty lists")
    return arr


@dataclass
class Config:
    experiment: str
    model: ModelSpec
    grids: dict = field(default_factory=dict)
    threshold: float = 1e-3
    seed: int = 0
    options: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        exp = data.get("experiment")
        if exp not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {exp!r}; choose from {', '.join(EXPERIMENTS)}")
        if "model" not in data:
            raise ValueError("config needs a 'model' section")
        return cls(exp, ModelSpec.from_dict(data["model"]), dict(data.get("grids", {})),
                   float(data.get("threshold", 1e-3)), int(data.get("seed", 0)),
                   dict(data.get("options", {})), dict(data.get("output", {})))

    def g(self, name, default):
        return grid(self.grids.get(name), default)


Table = tuple[list[str], list[list]]


def run_dispersion(cfg: Config):
    params = DispersionParams(cfg.model.a, cfg.model.b)
    gammas = cfg.g("gamma", default_gamma_grid())
    rows = [[g, m_gamma(params, g), m_gamma(params, g) / g] for g in gammas]
    vq = velocity_bound_quadratic(params, gammas)
    K = int(cfg.options.get("K", 20))
    lrows, worst = [], -math.inf
    for kind in KINDS:
        for t in cfg.g("t", [0.5, 1.0, 2.0]):
            for g in cfg.g("laurent_gamma", [0.25, 0.5, 1.0]):
                tab = laurent_coefficients(params, kind, t, g, K)
                worst = max(worst, float(np.max(np.abs(tab.coeffs) - tab.bounds)))
                for k, c, bd in zip(tab.ks, tab.coeffs, tab.bounds):
                    lrows.append([kind, t, g, int(k), c.real, c.imag, bd])
    head = {"v_bound": vq.value, "gamma_argmin": vq.gamma, "group_velocity": vq.group_velocity,
            "max_laurent_slack": worst}
    return head, {"m_gamma.csv": (["gamma", "M", "M_over_gamma"], rows),
                  "laurent.csv": (["kind", "t", "gamma", "k", "re_c", "im_c", "bound"], lrows)}


def run_harmonic_cone(cfg: Config):
    spec = cfg.model
    n = spec.n_sites
    h = cfg.g("h", np.arange(0, n + 1)).astype(int)
    t = cfg.g("t", np.linspace(0, 1.3 * n, int(13 * n) + 1))
    scan = cone_scan_harmonic(spec, h, t)
    params = DispersionParams(spec.a, spec.b)
    rep = fit_velocity(scan, cfg.threshold, params, hypothesis_constants(spec))
    head = {"v_empirical": rep.v_empirical, "v_bound_quadratic": rep.v_bound_quadratic,
            "v_bound_general": rep.v_bound_general, "gamma_fit": rep.gamma_fit,
            "M_fit": rep.M_fit, "threshold": cfg.threshold, "crossings": len(rep.crossings)}
    if spec.boundary == Boundary.CYCLIC:
        viol = {}
        for g in cfg.g("gamma", [0.25, 0.5, 1.0]):
            rb = ring_bound(params, g, float(np.max(t)), extra_times=t)
            viol[f"{g:g}"] = cone_bound_violations(scan, rb, spec.dim)
        head["bound_violations"] = viol
    return head, {"cone.csv": (["h", "t", "norm"], [list(r) for r in scan.rows()])}


def _fock_rep(cfg: Config, d: int) -> TruncatedRep:
    opts = cfg.options
    cap = opts.get("max_total", "auto")
    if cap == "auto":
        cap = d - 1
    return natural_rep(cfg.model.sites, d, cfg.model.a, cap, int(opts.get("budget", 2 ** 18)))


def run_fock_cone(cfg: Config):
    spec = cfg.model
    ds = cfg.g("d", [16]).astype(int)
    t = cfg.g("t", np.linspace(0, 2, 9))
    left = spec.sites[0]
    h = cfg.g("h", np.arange(1, spec.dim)).astype(int)
    oracle = None
    if spec.perturbation is None or spec.perturbation.is_zero():
        W = build_coupling(spec)
        oracle = np.array([[2 * abs(math.sin(evolve_matrices_spectral(W, tt).B[0, hh] / 2))
                            for tt in t] for hh in h])
    rows, errors = [], {}
    for d in ds:
        rep = _fock_rep(cfg, int(d))
        bundle = assemble_hamiltonian(spec, rep, dense_limit=0)
        A = single_site_weyl(rep, left)
        scan = cone_scan_fock(bundle, A, A, h, t, int(cfg.options.get("probe_level", 0)))
        for hh, tt, v in scan.rows():
            rows.append([int(d), hh, tt, v])
        if oracle is not None:
            errors[str(int(d))] = float(np.max(np.abs(scan.norms - oracle)))
    head = {"d_grid": [int(x) for x in ds], "max_error_by_d": errors}
    if errors:
        errs = [errors[str(int(x))] for x in ds]
        head["error_monotone"] = bool(all(b < a for a, b in zip(errs, errs[1:])))
    return head, {"cone_fock.csv": (["d", "h", "t", "norm"], rows)}


def run_converge(cfg: Config):
    spec = cfg.model
    d = int(cfg.g("d", [10])[0])
    rep = _fock_rep(cfg, d)
    t = float(cfg.g("t", [0.5])[0])
    site = int(cfg.options.get("site", spec.sites[0]))
    A = single_site_weyl(rep, site)
    steps = int(cfg.options.get("volumes", 3))
    direction = 1 if site < 0 else -1
    rows = []
    for k in range(steps):
        inner = sorted(site + direction * j for j in range(k + 1))
        res = convergence_gap(spec, A, inner, t, int(cfg.options.get("probe_level", 0)))
        rows.append([k, res.distance, res.gap])
    gaps = np.array([r[2] for r in rows])
    logs = np.log(gaps)
    second = np.diff(logs, 2)
    head = {"gaps": gaps.tolist(), "strictly_decreasing": bool(np.all(np.diff(gaps) < 0)),
            "log_second_differences": second.tolist(),
            "log_concave": bool(np.all(second <= 1e-12))}
    return head, {"gaps.csv": (["margin", "distance", "gap"], rows)}


def run_norms(cfg: Config):
    t = cfg.g("t", np.linspace(0, 3, 31))
    gamma = float(cfg.g("gamma", [0.5])[0])
    rep = weyl_growth_exact(cfg.model, t, gamma)
    head = {"slope": rep.slope, "intercept": rep.intercept, "slope_theory": rep.slope_theory,
            "intercept_theory": rep.intercept_theory, "envelope_holds": rep.envelope_holds,
            "theory_holds": rep.theory_holds}
    return head, {"norms.csv": (["t", "w2"], [[a, b] for a, b in zip(rep.t, rep.w2)])}


def run_odecheck(cfg: Config):
    spec = cfg.model
    W = build_coupling(spec).entries
    step = float(cfg.options.get("step", 1e-3))
    gamma = float(cfg.g("gamma", [0.5])[0])
    rows, worst, cert_ok = [], 0.0, True
    for t in cfg.g("t", [0.5, 1.0, 2.0]):
        ref = evolve_matrices_spectral(W, t)
        ode = evolve_matrices_ode(W, t, step=step)
        diff = ref.max_diff(ode)
        worst = max(worst, diff)
        for kind in ("A", "B"):
            sol = ode_propagate(-W, t, kind, step=step)
            c = certificate(sol, -W, gamma)
            cert_ok &= c.holds
            rows.append([t, kind, diff, c.norm0, c.bound0, c.norm1, c.bound1])
    head = {"max_diff": worst, "certificate_holds": bool(cert_ok)}
    return head, {"ode.csv": (["t", "kind", "max_diff", "norm0", "bound0", "norm1", "bound1"], rows)}


def random_operator(rep: TruncatedRep, rng: np.random.Generator) -> ObservableOp:
    N = rep.total_dim
    m = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    return ObservableOp(rep, m, frozenset(rep.sites))


def run_compress_check(cfg: Config):
    rng = np.random.default_rng(cfg.seed)
    trials = int(cfg.options.get("trials", 100))
    rows, worst_contr, worst_comp = [], -math.inf, 0.0
    for i in range(trials):
        nsites = int(rng.integers(2, 4))
        d = int(rng.integers(2, 7 if nsites == 2 else 5))
        rep = TruncatedRep(tuple(range(nsites)), d)
        T = random_operator(rep, rng)
        mid = tuple(range(nsites - 1))
        low = (0,)
        rT = compress_operator(T, mid)
        contr = op_norm(rT.matrix) - op_norm(T.matrix)
        comp = float(np.max(np.abs(compress_operator(rT, low).dense()
                                   - compress_operator(T, low).dense())))
        worst_contr = max(worst_contr, contr)
        worst_comp = max(worst_comp, comp)
        rows.append([i, nsites, d, contr, comp])
    head = {"trials": trials, "max_norm_increase": worst_contr, "max_composition_error": worst_comp}
    return head, {"compress.csv": (["trial", "sites", "d", "norm_increase", "composition_error"], rows)}


RUNNERS: dict[str, Callable] = {
    "dispersion": run_dispersion,
    "harmonic-cone": run_harmonic_cone,
    "fock-cone": run_fock_cone,
    "converge": run_converge,
    "norms": run_norms,
    "odecheck": run_odecheck,
    "compress-check": run_compress_check,
}
