"""Approximate fundamental solutions from mollified point sources.

A unit-mass bump ``f_l(x) = l^n f(l x)`` is used as the source of the
weak problem on a growing sequence of balls; the last solution approximates
the fundamental solution.  Diagnostics track the uniform local estimates
(L^p, weighted L^1 and W^{gamma,p} scaling in the radius, pointwise decay)
and the radial decay exponent.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import logging
import math

import numpy as np
from scipy import integrate
from scipy.interpolate import RegularGridInterpolator

from .discretization import DiscreteField, Grid, assemble, build_grid, sample_potential, _values
from .errors import ConfigurationError, DomainError, NumericFailure, StageFailure
from .kernel import FractionalOrder, Kernel, Potential, sphere_area
from .solver import SolveConfig, mp_tolerance, weak_solve
from .variational import lp_norm, wgamma_p_seminorm

log = logging.getLogger(__name__)

__all__ = [
    "Mollifier",
    "ExhaustionSchedule",
    "StageRecord",
    "DecayFit",
    "FundamentalReport",
    "DiagnosticParams",
    "sample_mollifier",
    "run_exhaustion",
    "lemma58_diagnostics",
    "fit_decay",
    "radial_profile",
    "transfer_field",
]

DEGENERATE_FLOOR = 1e-14


def _bump(r2):
    out = np.zeros_like(r2)
    m = r2 < 1.0
    out[m] = np.exp(-1.0 / (1.0 - r2[m]))
    return out


@lru_cache(maxsize=None)
def _bump_mass(n):
    val, _ = integrate.quad(lambda r: math.exp(-1.0 / (1.0 - r * r)) * r ** (n - 1), 0.0, 1.0,
                            epsabs=0, epsrel=1e-13)
    return sphere_area(n) * val


@dataclass(frozen=True)
class Mollifier:
    """f_l(x) = l^n f(l x) with f the normalized exp(-1/(1-|x|^2)) bump."""

    l: float

    def __post_init__(self):
        if not self.l >= 1:
            raise ConfigurationError(f"mollifier scale must satisfy l >= 1, got {self.l}")

    @property
    def support_radius(self):
        return 1.0 / self.l

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        r2 = np.sum(x * x, axis=-1) * self.l**2
        return self.l**n * _bump(r2) / _bump_mass(n)


def sample_mollifier(m, g):
    """Samples of f_l on the active nodes, rescaled so that h^n sum = 1."""
    if g.h > 1.0 / (4.0 * m.l) * (1 + 1e-12):
        raise ConfigurationError(
            f"resolution rule h <= 1/(4l) violated: h={g.h:g}, 1/(4l)={1 / (4 * m.l):g}"
        )
    vals = m(g.coords)
    mass = g.cell_volume * vals.sum()
    if mass <= 0:
        raise ConfigurationError("mollifier support contains no active nodes")
    return DiscreteField(g, vals / mass)


@dataclass(frozen=True)
class ExhaustionSchedule:
    """Stages (a_k, l_k) solved on balls B_{a_k}.

    ``radii`` must increase strictly; ``scales`` is broadcast when it has one
    entry, otherwise it pairs with ``radii`` and must not decrease.  The grid
    spacing is ``h`` (default 1/(4 max l)), or per-stage ``n_sides`` if given.
    """

    radii: tuple
    scales: tuple
    h: float = None
    n_sides: tuple = None

    def __post_init__(self):
        radii = tuple(float(a) for a in self.radii)
        scales = tuple(float(l) for l in self.scales)
        if not radii:
            raise ConfigurationError("schedule needs at least one radius")
        if any(b <= a for a, b in zip(radii, radii[1:])) or radii[0] <= 0:
            raise ConfigurationError("schedule radii must be positive and strictly increasing")
        if len(scales) == 1:
            scales = scales * len(radii)
        if len(scales) != len(radii):
            raise ConfigurationError("schedule scales must have one entry or one per radius")
        if any(b < a for a, b in zip(scales, scales[1:])) or scales[0] < 1:
            raise ConfigurationError("schedule scales must be >= 1 and nondecreasing")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "scales", scales)
        if self.n_sides is not None:
            ns = tuple(int(v) for v in self.n_sides)
            if len(ns) != len(radii):
                raise ConfigurationError("n_sides must have one entry per radius")
            object.__setattr__(self, "n_sides", ns)
        for k, (a, l, N) in enumerate(self.stages()):
            h = 2.0 * a / (N - 1)
            if h > 1.0 / (4.0 * l) * (1 + 1e-12):
                raise ConfigurationError(
                    f"resolution rule h <= 1/(4l) violated at stage {k}: h={h:g}, l={l:g}"
                )

    @property
    def spacing(self):
        return self.h if self.h is not None else 1.0 / (4.0 * max(self.scales))

    def stages(self):
        """List of (a, l, N_side)."""
        out = []
        for k, (a, l) in enumerate(zip(self.radii, self.scales)):
            if self.n_sides is not None:
                N = self.n_sides[k]
            else:
                N = int(math.ceil(2.0 * a / self.spacing - 1e-9)) + 1
                if N % 2 == 0:
                    N += 1
            out.append((a, l, N))
        return out


@dataclass(frozen=True)
class DiagnosticParams:
    p: float = 1.0
    gamma: float = None  # default s/2
    radii: tuple = (0.5, 1.0, 2.0)
    centers: tuple = ((0.0, 0.0),)
    wgp: bool = True


@dataclass
class DecayFit:
    slope: float
    intercept: float
    r_squared: float
    shell_radii: list
    shell_values: list
    r_min: float
    r_max: float

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "shell_radii": list(self.shell_radii),
            "shell_values": list(self.shell_values),
        }


@dataclass
class StageRecord:
    index: int
    radius: float
    scale: float
    N_side: int
    h: float
    n_active: int
    iterations: int
    final_residual: float
    min_value: float
    max_value: float
    source_mass: float
    mass_identity_defect: float
    pointwise_bound_constant: float
    diagnostics: dict
    field: DiscreteField = None

    def to_dict(self):
        d = {k: v for k, v in self.__dict__.items() if k != "field"}
        return d


@dataclass
class FundamentalReport:
    final_field: DiscreteField
    stages: list
    cauchy_gaps: list
    decay_fit: DecayFit
    pointwise_bound_constant: float
    order: FractionalOrder
    potential: Potential
    failed_stage: int = None
    message: str = ""

    def to_dict(self):
        return {
            "n": self.order.n,
            "s": self.order.s,
            "potential": self.potential.kind,
            "stages": [st.to_dict() for st in self.stages],
            "cauchy_gaps": list(self.cauchy_gaps),
            "decay_fit": self.decay_fit.to_dict() if self.decay_fit else None,
            "pointwise_bound_constant": self.pointwise_bound_constant,
            "failed_stage": self.failed_stage,
            "message": self.message,
        }


# ---------------------------------------------------------------------------


def _shells(r, r_min, r_max, n_shells, min_nodes=8):
    edges = np.linspace(r_min, r_max, n_shells + 1)
    groups = []
    cur = None
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = (r >= lo) & ((r < hi) if hi < r_max else (r <= hi))
        cur = m if cur is None else (cur | m)
        if cur.sum() >= min_nodes:
            groups.append(cur)
            cur = None
    if cur is not None and cur.any():
        if groups:
            groups[-1] = groups[-1] | cur
        else:
            groups.append(cur)
    return groups


def radial_profile(field_, r_min=0.0, r_max=None, n_shells=32):
    """Equal-width shell averages: (mean radius, arithmetic mean, node count) per shell."""
    g = field_.grid
    r_max = g.R if r_max is None else r_max
    r = g.radii
    out = []
    for m in _shells(r, r_min, r_max, n_shells):
        out.append((float(r[m].mean()), float(field_.values[m].mean()), int(m.sum())))
    return out


def fit_decay(field_, r_min, r_max, n_shells=8):
    """Least-squares power law through radial shell averages.

    Shells are equal-width with at least 8 nodes each (smaller ones merge with
    the next).  Each shell contributes the log-mean of radius and value, so an
    exact power law is fitted exactly.  Returns a :class:`DecayFit`.
    """
    g = field_.grid
    if r_min < 4.0 * g.h * (1 - 1e-12):
        raise DomainError(f"r_min={r_min:g} is below 4h={4 * g.h:g}")
    if r_max > 0.5 * g.R * (1 + 1e-12):
        raise DomainError(f"r_max={r_max:g} exceeds R/2={0.5 * g.R:g}")
    if n_shells < 4:
        raise DomainError("need at least 4 shells")
    r = g.radii
    xs, ys, rad, val = [], [], [], []
    for m in _shells(r, r_min, r_max, n_shells):
        v = field_.values[m]
        if np.any(v <= DEGENERATE_FLOOR):
            raise NumericFailure(
                f"degenerate field: shell near r={r[m].mean():.3g} has values <= {DEGENERATE_FLOOR:g}"
            )
        lx, ly = float(np.mean(np.log(r[m]))), float(np.mean(np.log(v)))
        xs.append(lx)
        ys.append(ly)
        rad.append(math.exp(lx))
        val.append(math.exp(ly))
    if len(xs) < 2:
        raise DomainError("fit window holds fewer than two shells")
    xs, ys = np.array(xs), np.array(ys)
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    sst = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / sst if sst > 0 else 1.0
    return DecayFit(float(slope), float(intercept), r2, rad, val, float(r_min), float(r_max))


def pointwise_bound_constant(field_, order, r_floor):
    """max of u(x) |x|^{n-2s} over nodes with |x| >= r_floor."""
    g = field_.grid
    m = g.radii >= r_floor
    if not np.any(m):
        return 0.0
    return float(np.max(field_.values[m] * g.radii[m] ** order.decay_exponent))


def _fit_column(radii, values, exponent):
    radii, values = np.asarray(radii, float), np.asarray(values, float)
    ok = values > 0
    out = {"exponent": exponent, "envelope_C": 0.0, "fitted_exponent": None}
    if ok.sum() >= 1:
        lr, lv = np.log(radii[ok]), np.log(values[ok])
        out["envelope_C"] = float(np.exp(np.mean(lv - exponent * lr)))
    if ok.sum() >= 2:
        out["fitted_exponent"] = float(np.polyfit(np.log(radii[ok]), np.log(values[ok]), 1)[0])
    return out


def lemma58_diagnostics(field_, V, order, params=DiagnosticParams(), l=None):
    """Local-estimate diagnostics of an approximant, per radius and center.

    Columns: L^p norm on B_r(x0), V-weighted L^1 norm and its ratio to
    ||V||_{L^q(B_r)}, W^{gamma,p} seminorm, and the pointwise constant
    sup u(x)|x|^{n-2s} over |x| >= max(3/l, 2h sqrt(n)).  Each column is
    paired with a least-squares envelope C r^{exponent}.
    """
    g = field_.grid
    n, s = order.n, order.s
    p = float(params.p)
    gamma = params.gamma if params.gamma is not None else 0.5 * s
    if not 1.0 <= p < n / (n - 2.0 * s):
        raise ConfigurationError(f"L^p estimate requires 1 <= p < n/(n-2s) = {n / (n - 2 * s):g}, got p={p}")
    if not 0.0 < gamma < s:
        raise ConfigurationError(f"W^(gamma,p) estimate requires 0 < gamma < s = {s}, got gamma={gamma}")
    wgp_ok = p < n / (n - s)
    if params.wgp and not wgp_ok:
        raise ConfigurationError(f"W^(gamma,p) estimate requires p < n/(n-s) = {n / (n - s):g}, got p={p}")
    q_dual = math.inf if p == 1.0 else p / (p - 1.0)
    Vs = sample_potential(V, g).values
    u = field_.values
    rows = []
    for c in params.centers:
        c = np.asarray(c, float)
        d = np.sqrt(np.sum((g.coords - c) ** 2, axis=-1))
        for r in params.radii:
            m = d < r
            lp = lp_norm(g, u, p, m)
            l1v = float(g.cell_volume * np.sum(Vs[m] * np.abs(u[m])))
            vq = lp_norm(g, Vs, q_dual, m) if V.kind != "zero" else 0.0
            wgp = wgamma_p_seminorm(g, u, gamma, p, c, r, order) if (params.wgp and np.any(u)) else 0.0
            rows.append({
                "center": c.tolist(),
                "r": float(r),
                "lp_norm": lp,
                "l1_V_norm": l1v,
                "l1_V_over_Vq": l1v / vq if vq > 0 else 0.0,
                "wgp_seminorm": wgp,
            })
    floor = max(3.0 / l if l else 0.0, 2.0 * g.h * math.sqrt(n))
    pbc = pointwise_bound_constant(field_, order, floor)
    e_lp = n / p - (n - 2.0 * s)
    e_w = n / p - (n - 2.0 * s + gamma)
    fits = {}
    for c in params.centers:
        sel = [row for row in rows if row["center"] == list(map(float, c))]
        radii = [row["r"] for row in sel]
        fits[str(list(map(float, c)))] = {
            "lp_norm": _fit_column(radii, [row["lp_norm"] for row in sel], e_lp),
            "l1_V_over_Vq": _fit_column(radii, [row["l1_V_over_Vq"] for row in sel], e_lp),
            "wgp_seminorm": _fit_column(radii, [row["wgp_seminorm"] for row in sel], e_w),
        }
    return {
        "p": p,
        "gamma": gamma,
        "rows": rows,
        "fits": fits,
        "pointwise_floor": floor,
        "pointwise_bound_constant": pbc,
    }


def transfer_field(src, dst_grid):
    """Values of ``src`` at the active nodes of ``dst_grid`` (zero outside src's ball).

    Exact node matching when spacings agree, linear interpolation otherwise.
    """
    g = src.grid
    x = dst_grid.coords
    if abs(g.h - dst_grid.h) <= 1e-12 * g.h:
        idx = np.rint(x / g.h + 0.5 * (g.N_side - 1)).astype(int)
        inside = np.all((idx >= 0) & (idx < g.N_side), axis=-1)
        full = src.full()
        out = np.zeros(dst_grid.n_active)
        ii = idx[inside]
        out[inside] = full[tuple(ii[:, a] for a in range(g.n))]
        return DiscreteField(dst_grid, out)
    axes = [np.arange(g.N_side) * g.h - g.R] * g.n
    interp = RegularGridInterpolator(axes, src.full(), bounds_error=False, fill_value=0.0)
    return DiscreteField(dst_grid, interp(x))


def run_exhaustion(k, V, sched, cfg=SolveConfig(), diag=DiagnosticParams(), fit_window=None,
                   n_shells=8, keep_fields=False):
    """Solve L_V u = f_l on each stage ball and collect diagnostics.

    ``fit_window`` defaults to ``(max(3/l, 4h), a_max/4)``.  A solver failure
    raises :class:`StageFailure` carrying the partial report.
    """
    order = k.order
    order.require_subcritical()
    V.validate(order)
    stages = []
    fields = []
    gaps = []
    for idx, (a, l, N) in enumerate(sched.stages()):
        g = build_grid(order.n, a, N)
        f = sample_mollifier(Mollifier(l), g)
        A = assemble(k, V, g)
        log.info("stage %d: a=%g l=%g N=%d active=%d", idx, a, l, N, g.n_active)
        try:
            rep = weak_solve(A, f, cfg)
        except NumericFailure as exc:
            partial = FundamentalReport(
                final_field=fields[-1] if fields else None, stages=stages, cauchy_gaps=gaps,
                decay_fit=None, pointwise_bound_constant=stages[-1].pointwise_bound_constant if stages else 0.0,
                order=order, potential=V, failed_stage=idx, message=str(exc),
            )
            raise StageFailure(f"stage {idx} (a={a:g}, l={l:g}) failed: {exc}", idx, partial, exc) from exc
        u = rep.solution
        mass = g.cell_volume * float(f.values.sum())
        defect = abs(float(np.sum(A.matvec(u.values))) - mass) / mass
        dg = lemma58_diagnostics(u, V, order, diag, l)
        if fields:
            prev = transfer_field(fields[-1], g)
            common = g.radii < sched.radii[0]
            gaps.append(lp_norm(g, u.values - prev.values, diag.p, common))
        stages.append(StageRecord(
            index=idx, radius=a, scale=l, N_side=N, h=g.h, n_active=g.n_active,
            iterations=rep.iterations, final_residual=rep.final_residual,
            min_value=float(u.values.min()), max_value=float(u.values.max()),
            source_mass=mass, mass_identity_defect=defect,
            pointwise_bound_constant=dg["pointwise_bound_constant"], diagnostics=dg,
            field=u if keep_fields else None,
        ))
        fields.append(u)
        if not keep_fields and len(fields) > 1:
            fields = fields[-1:]
    final = fields[-1]
    a_max, l_last = sched.radii[-1], sched.scales[-1]
    g = final.grid
    if fit_window is None:
        fit_window = (max(3.0 / l_last, 4.0 * g.h), 0.25 * a_max)
    fit = fit_decay(final, fit_window[0], fit_window[1], n_shells)
    return FundamentalReport(
        final_field=final, stages=stages, cauchy_gaps=gaps, decay_fit=fit,
        pointwise_bound_constant=stages[-1].pointwise_bound_constant, order=order, potential=V,
    )
