"""Discrete fractional Sobolev norms, the energy functional and spectral checks.

Conventions
-----------
* ``xs0_inner`` is the Gagliardo form with the bare kernel |x-y|^{-n-2s},
  integrated over all pairs with at least one point in the ball.
* The homogeneous norm uses the Plancherel normalization
  ``||u||_{Hdot^s}^2 = (2 pi)^{-n} int |xi|^{2s} |u^(xi)|^2 dxi``, for which
  ``||u||_{Hdot^s}^2 = (c_{n,s} / 2) * xs0_norm(u)^2``.
"""
from dataclasses import dataclass, field, asdict
from functools import lru_cache
import math

import numpy as np
from scipy import fft as sfft

from .discretization import DiscreteField, Grid, _values, assemble
from .errors import ConfigurationError, DomainError
from .kernel import FractionalOrder, Kernel, Potential, normalization_constant

__all__ = [
    "NormReport",
    "xs0_inner",
    "xs0_norm",
    "lp_norm",
    "l2_inner",
    "energy",
    "energy_from_operator",
    "hdot_s_norm_sq",
    "hdot_s_identity_check",
    "hs_norm_spectral",
    "spectral_form",
    "wgamma_p_seminorm",
    "embedding_ratio",
    "norm_report",
    "raw_kernel",
]


def raw_kernel(order):
    """The bare kernel |y|^{-n-2s} (no normalization constant)."""
    return Kernel(order, normalized=False)


@lru_cache(maxsize=8)
def _raw_operator(grid, order):
    return assemble(raw_kernel(order), Potential(), grid)


@lru_cache(maxsize=8)
def _operator(grid, kernel, potential):
    return assemble(kernel, potential, grid)


def _order(g, s):
    return s if isinstance(s, FractionalOrder) else FractionalOrder(float(s), g.n)


def _check_grid(g, *fields):
    for f in fields:
        if isinstance(f, DiscreteField) and f.grid != g:
            raise DomainError("fields live on different grids")


def xs0_inner(g, u, v, s):
    """Discrete <u, v>_{X^s_0}: double sum of difference products against |x-y|^{-n-2s}.

    Uses the same pairwise scheme as :func:`assemble`; since the assembled
    form carries a factor 1/2 over ordered pairs, the result is twice that form.
    """
    _check_grid(g, u, v)
    A = _raw_operator(g, _order(g, s))
    return 2.0 * A.bilinear(_values(u, g), _values(v, g))


def xs0_norm(g, u, s):
    return math.sqrt(max(xs0_inner(g, u, u, s), 0.0))


def l2_inner(g, u, v):
    return g.cell_volume * float(np.dot(_values(u, g), _values(v, g)))


def lp_norm(g, u, p, mask=None):
    """(h^n sum |u|^p)^{1/p} over active nodes (optionally masked)."""
    vals = np.abs(_values(u, g))
    if mask is not None:
        vals = vals[mask]
    if math.isinf(p):
        return float(vals.max()) if vals.size else 0.0
    return float((g.cell_volume * np.sum(vals**p)) ** (1.0 / p))


def energy_from_operator(A, u, f):
    """E(u) = u^T A u - 2 h^n <f, u> for an assembled operator."""
    g = A.grid
    u = _values(u, g)
    return A.bilinear(u, u) - 2.0 * l2_inner(g, _values(f, g), u)


def energy(g, k, V, u, f):
    """Energy ||u||_K^2 + ||u||_{L^2_V}^2 - 2 <f, u>.

    The kernel part is the form <u, u>_K of the assembled operator, so the
    unique minimizer is the discrete weak solution with source ``f``.
    """
    _check_grid(g, u, f)
    return energy_from_operator(_operator(g, k, V), u, f)


# ---------------------------------------------------------------------------
# spectral side


def _padded_spectrum(g, u, factor=4):
    """FFT of the zero-padded field on a periodic box of side >= factor * 2R."""
    P = sfft.next_fast_len(factor * (g.N_side - 1))
    full = DiscreteField(g, _values(u, g)).full() if not isinstance(u, DiscreteField) else u.full()
    U = sfft.fftn(full, (P,) * g.n)
    k1 = 2.0 * np.pi * sfft.fftfreq(P, d=g.h)
    kk = np.meshgrid(*([k1] * g.n), indexing="ij", sparse=True)
    xi2 = sum(k * k for k in kk)
    return U, xi2, P


def spectral_form(g, u, v, symbol):
    """(2 pi)^{-n} int symbol(|xi|^2) u^ conj(v^) on the padded periodic box."""
    U, xi2, P = _padded_spectrum(g, u)
    Vh = U if v is u else _padded_spectrum(g, v)[0]
    dens = symbol(xi2) * (U * np.conj(Vh)).real
    return float(g.cell_volume * dens.sum() / P**g.n)


def hdot_s_norm_sq(g, u, s):
    """||u||_{Hdot^s}^2 computed spectrally with multiplier |xi|^{2s}."""
    s = float(s.s if isinstance(s, FractionalOrder) else s)
    return spectral_form(g, u, u, lambda xi2: xi2**s)


def hdot_s_identity_check(g, u, s):
    """Ratio of the spectral ||u||^2_{Hdot^s} to (c_{n,s}/2) * Gagliardo double sum.

    Returns 1.0 for the zero field.
    """
    order = _order(g, s)
    gag = xs0_inner(g, u, u, order)
    spec = hdot_s_norm_sq(g, u, order.s)
    if gag == 0.0 and spec == 0.0:
        return 1.0
    return spec / (0.5 * normalization_constant(order) * gag)


def hs_norm_spectral(g, u, s):
    """||u||_{L^2} + [u]_{W^{s,2}(R^n)}, the seminorm taken from the spectral side."""
    order = _order(g, s)
    semi_sq = 2.0 * hdot_s_norm_sq(g, u, order.s) / normalization_constant(order)
    return lp_norm(g, u, 2) + math.sqrt(max(semi_sq, 0.0))


# ---------------------------------------------------------------------------


def wgamma_p_seminorm(g, u, gamma, p, center, r, s):
    """[u]_{W^{gamma,p}(B_r(center))} by a double sum over distinct lattice nodes in the ball.

    Nodes outside the active set count with value 0.
    """
    order = _order(g, s)
    n = g.n
    if not 0.0 < gamma < order.s:
        raise ConfigurationError(f"need 0 < gamma < s = {order.s}, got gamma={gamma}")
    if not 1.0 <= p < n / (n - order.s):
        raise ConfigurationError(f"need 1 <= p < n/(n-s) = {n / (n - order.s):g}, got p={p}")
    center = np.asarray(center, dtype=float)
    pts = g.all_coords.reshape(-1, n)
    inside = np.sum((pts - center) ** 2, axis=-1) < r * r
    if not np.any(inside):
        raise DomainError("ball contains no lattice nodes")
    vals = DiscreteField(g, _values(u, g)).full().ravel()[inside]
    x = pts[inside]
    expo = -(n + gamma * p)
    total = 0.0
    m = x.shape[0]
    step = max(1, 4_000_000 // m)
    for i0 in range(0, m, step):
        xi = x[i0:i0 + step]
        d2 = np.sum((xi[:, None, :] - x[None, :, :]) ** 2, axis=-1)
        diff = np.abs(vals[i0:i0 + step, None] - vals[None, :]) ** p
        with np.errstate(divide="ignore", invalid="ignore"):
            term = np.where(d2 > 0, diff * d2 ** (0.5 * expo), 0.0)
        total += term.sum()
    return float((total * g.cell_volume**2) ** (1.0 / p))


def embedding_ratio(g, u, s):
    """||u||_{L^{2n/(n-2s)}} / ||u||_{Hdot^s}, the latter as sqrt(c/2) times the Gagliardo seminorm."""
    order = _order(g, s)
    order.require_subcritical()
    vals = _values(u, g)
    if not np.any(vals):
        raise DomainError("embedding ratio undefined for the zero field")
    p = 2.0 * g.n / (g.n - 2.0 * order.s)
    denom = math.sqrt(0.5 * normalization_constant(order)) * xs0_norm(g, vals, order)
    return lp_norm(g, vals, p) / denom


@dataclass
class NormReport:
    """Norms of one field.

    ``x_s0_norm`` is the energy seminorm of the kernel the report was built
    with (the bare Gagliardo seminorm when no kernel is given), so that
    ``y_s0_norm**2 == x_s0_norm**2 + l2_V_norm**2``.
    """

    x_s0_norm: float
    l2_norm: float
    l2_V_norm: float
    y_s0_norm: float
    hdot_s_norm: float
    lp_norms: dict = field(default_factory=dict)
    kernel_family: str = "gagliardo"

    def to_dict(self):
        d = asdict(self)
        d["lp_norms"] = {str(k): v for k, v in sorted(self.lp_norms.items())}
        return d


def norm_report(g, u, s, kernel=None, potential=None, p_values=(1.0, 2.0), operator=None):
    """Collect the norms of ``u``; pass ``operator`` to reuse an assembled form."""
    order = _order(g, s)
    vals = _values(u, g)
    potential = potential or Potential()
    if operator is not None:
        kernel_form = operator.bilinear(vals, vals) - g.cell_volume * float(
            np.dot(operator.potential_samples * vals, vals))
        Vs = operator.potential_samples
        family = operator.kernel.family
    elif kernel is not None:
        kernel_form = _operator(g, kernel, Potential()).bilinear(vals, vals)
        Vs = _operator(g, kernel, potential).potential_samples
        family = kernel.family
    else:
        kernel_form = xs0_inner(g, vals, vals, order)
        Vs = _raw_operator(g, order).with_potential(potential).potential_samples if potential.kind != "zero" \
            else np.zeros_like(vals)
        family = "gagliardo"
    x = math.sqrt(max(kernel_form, 0.0))
    lv = math.sqrt(max(g.cell_volume * float(np.dot(Vs * vals, vals)), 0.0))
    y = math.sqrt(x * x + lv * lv)
    hd = math.sqrt(max(hdot_s_norm_sq(g, vals, order.s), 0.0)) if np.any(vals) else 0.0
    return NormReport(
        x_s0_norm=x,
        l2_norm=lp_norm(g, vals, 2),
        l2_V_norm=lv,
        y_s0_norm=y,
        hdot_s_norm=hd,
        lp_norms={float(p): lp_norm(g, vals, p) for p in p_values},
        kernel_family=family,
    )
