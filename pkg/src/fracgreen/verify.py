"""Property suites run against an experiment configuration.

Every check yields a :class:`Check` with the property it exercises, the
measured value and the threshold it is held to.  All randomness comes from
one ``numpy.random.Generator`` seeded from the config.
"""
from dataclasses import dataclass, asdict
import math

import numpy as np
from scipy.special import gamma as Gamma

from .discretization import assemble, build_grid
from .errors import ConfigurationError
from .fields import random_bump_field, random_nonnegative_field, random_smooth_field
from .fundamental import run_exhaustion
from .kernel import QuadratureParams, multiplier
from .solver import (
    SolveConfig,
    check_comparison,
    check_maximum_principle,
    mp_tolerance,
    plancherel_crosscheck,
    verify_weak_formulation,
    weak_solve,
)
from .variational import embedding_ratio, energy_from_operator, hdot_s_identity_check

__all__ = ["Check", "SUITES", "run_suite", "sobolev_constant"]

SUITES = ("multiplier", "embedding", "maxprinciple", "comparison", "plancherel", "minimizer", "decay", "all")


@dataclass
class Check:
    suite: str
    check: str
    anchor: str
    measured: float
    threshold: object  # float, or [lo, hi] for band checks
    passed: bool
    message: str = ""

    def to_dict(self):
        return asdict(self)


def sobolev_constant(n, s):
    """Sharp S with ||u||_{2n/(n-2s)}^2 <= S ||(-Delta)^{s/2} u||_2^2."""
    return (
        2.0 ** (-2 * s) * math.pi ** (-s) * Gamma((n - 2 * s) / 2) / Gamma((n + 2 * s) / 2)
        * (Gamma(n) / Gamma(n / 2)) ** (2 * s / n)
    )


def _grid(cfg):
    return build_grid(cfg.n, cfg.R, cfg.N_side)


def _multiplier(cfg, rng):
    k = cfg.kernel
    if cfg.n not in (2, 3):
        raise ConfigurationError("multiplier suite supports n in {2, 3}")
    out = []
    lo, hi = (0.99, 1.01) if k.family == "pure_fractional" else (0.99 * k.lam, 1.01 * k.Lam)
    for mag in np.logspace(-1, 2, 20):
        d = rng.standard_normal(cfg.n)
        xi = mag * d / np.linalg.norm(d)
        ratio = float(multiplier(k, xi, QuadratureParams()) / mag ** (2 * k.s))
        ok = lo <= ratio <= hi
        out.append(Check("multiplier", f"|xi|={mag:.4g}", "multiplier bounds", ratio, [lo, hi], ok,
                         "" if ok else f"multiplier bounds violated: ratio {ratio:.6g} outside [{lo:g}, {hi:g}]"))
    return out


def _embedding(cfg, rng):
    g = _grid(cfg)
    s, n = cfg.kernel.s, cfg.n
    bound = math.sqrt(sobolev_constant(n, s)) * 1.05
    out = []
    for i in range(cfg.verify_samples):
        u = random_bump_field(g, rng)
        r = hdot_s_identity_check(g, u, s)
        out.append(Check("embedding", f"hdot_identity[{i}]", "Gagliardo/Fourier seminorm identity",
                         abs(r - 1.0), 0.05, abs(r - 1.0) <= 0.05))
        e = embedding_ratio(g, u, s)
        out.append(Check("embedding", f"sobolev_ratio[{i}]", "fractional Sobolev embedding", e, bound, e <= bound))
    return out


def _maxprinciple(cfg, rng, A, scfg):
    out = []
    for i in range(cfg.verify_samples):
        h = random_nonnegative_field(A.grid, rng)
        umin, rep = check_maximum_principle(A, h, scfg)
        tol = mp_tolerance(rep.solution.values)
        out.append(Check("maxprinciple", f"source[{i}]", "maximum principle", umin, -tol, umin >= -tol,
                         "" if umin >= -tol else f"maximum principle violated: min u = {umin:.3e}"))
    return out


def _comparison(cfg, rng, A, scfg):
    out = []
    for i in range(cfg.verify_samples):
        h1 = random_smooth_field(A.grid, rng).values
        h2 = h1 + random_nonnegative_field(A.grid, rng).values
        if cfg.negate_ordering:
            h1, h2 = h2, h1
        gap, u1, u2 = check_comparison(A, h1, h2, scfg, require_order=not cfg.negate_ordering)
        tol = 1e-8 * max(np.max(np.abs(u1)), np.max(np.abs(u2)))
        ok = gap <= tol
        out.append(Check("comparison", f"pair[{i}]", "comparison principle", gap, tol, ok,
                         "" if ok else f"comparison principle violated: max(u1 - u2) = {gap:.3e}"))
    return out


def _plancherel(cfg, rng, A):
    out = []
    for i in range(cfg.verify_samples):
        u = random_bump_field(A.grid, rng, max_center=0.0)
        v = random_bump_field(A.grid, rng, max_center=0.0)
        gap = plancherel_crosscheck(A, u, v)
        out.append(Check("plancherel", f"pair[{i}]", "square-root (Plancherel) identity", gap, 0.10, gap <= 0.10))
    return out


def _minimizer(cfg, rng, A, scfg):
    out = []
    g = A.grid
    ts = (-1e-1, -1e-2, -1e-3, 1e-3, 1e-2, 1e-1)
    n_solves = max(1, cfg.verify_samples // 4)
    for i in range(n_solves):
        f = random_smooth_field(g, rng).values
        u = weak_solve(A, f, scfg).solution.values
        e0 = energy_from_operator(A, u, f)
        slack = 1e-12 * max(1.0, abs(e0))
        worst = math.inf
        for _ in range(cfg.verify_samples):
            phi = random_smooth_field(g, rng).values
            for t in ts:
                worst = min(worst, energy_from_operator(A, u + t * phi, f) - e0)
        out.append(Check("minimizer", f"energy[{i}]", "energy minimizer", worst, -slack, worst >= -slack))
        d = verify_weak_formulation(A, u, f, cfg.verify_samples, rng)
        lim = 10 * scfg.cg_tolerance
        out.append(Check("minimizer", f"weak_form[{i}]", "weak formulation", d, lim, d <= lim))
    return out


def _decay(cfg, rng):
    if cfg.schedule is None:
        raise ConfigurationError("decay suite needs a [schedule] section")
    rep = run_exhaustion(cfg.kernel, cfg.potential, cfg.schedule, cfg.solver, cfg.diagnostics,
                         cfg.fit_window, cfg.n_shells)
    target = -cfg.kernel.order.decay_exponent
    fit = rep.decay_fit
    out = [
        Check("decay", "slope", "decay of the fundamental solution", fit.slope, 0.15,
              abs(fit.slope - target) <= 0.15),
        Check("decay", "r_squared", "decay of the fundamental solution", fit.r_squared, 0.98, fit.r_squared >= 0.98),
    ]
    umin = min(st.min_value for st in rep.stages)
    tol = mp_tolerance(rep.final_field.values)
    out.append(Check("decay", "nonnegative", "maximum principle", umin, -tol, umin >= -tol))
    pbc = [st.pointwise_bound_constant for st in rep.stages]
    spread = max(pbc) / min(pbc) if min(pbc) > 0 else math.inf
    out.append(Check("decay", "pointwise_constant_spread", "pointwise decay bound", spread, 2.0, spread <= 2.0))
    return out


def run_suite(name, cfg):
    """Run one suite (or ``'all'``) and return the list of checks."""
    if name not in SUITES:
        raise ConfigurationError(f"unknown suite {name!r}; valid suites: {', '.join(SUITES)}")
    rng = np.random.default_rng(cfg.seed)
    names = SUITES[:-1] if name == "all" else (name,)
    scfg = SolveConfig(min(cfg.solver.cg_tolerance, 1e-10), cfg.solver.max_iterations, cfg.solver.preconditioner)
    A = None
    checks = []
    for nm in names:
        if name == "all" and nm == "plancherel" and cfg.kernel.family != "pure_fractional":
            continue
        if name == "all" and nm == "decay" and cfg.schedule is None:
            continue
        if nm in ("maxprinciple", "comparison", "plancherel", "minimizer") and A is None:
            A = assemble(cfg.kernel, cfg.potential, _grid(cfg))
        if nm == "multiplier":
            checks += _multiplier(cfg, rng)
        elif nm == "embedding":
            checks += _embedding(cfg, rng)
        elif nm == "maxprinciple":
            checks += _maxprinciple(cfg, rng, A, scfg)
        elif nm == "comparison":
            checks += _comparison(cfg, rng, A, scfg)
        elif nm == "plancherel":
            checks += _plancherel(cfg, rng, A)
        elif nm == "minimizer":
            checks += _minimizer(cfg, rng, A, scfg)
        elif nm == "decay":
            checks += _decay(cfg, rng)
    return checks
