"""Admissible kernels, the normalization constant and the Fourier multiplier.

A kernel here is a symmetric function

    K(y) = c_{n,s} * a(y / |y|) * |y|^{-n-2s},

with ``a`` an even angular factor taking values in ``[lam, Lam]``.  The pure
fractional kernel has ``a == 1`` and generates the fractional Laplacian.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Union
import math
import warnings

import numpy as np
from scipy import integrate
from scipy.special import gamma

from ._quadrature import graded_unit_rule, sphere_rule
from .errors import ConfigurationError, DomainError, NumericFailure

__all__ = [
    "FractionalOrder",
    "Kernel",
    "Potential",
    "QuadratureParams",
    "MODULATIONS",
    "normalization_constant",
    "normalization_constant_closed_form",
    "kernel_eval",
    "multiplier",
    "tail_mass",
    "near_mass_second_moment",
    "axis_second_moments",
    "sphere_area",
]


def sphere_area(n):
    """Surface area of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(frozen=True)
class FractionalOrder:
    """Order ``s`` of the operator together with the space dimension ``n``."""

    s: float
    n: int

    def __post_init__(self):
        if not (0.0 < self.s < 1.0):
            raise ConfigurationError(f"fractional order must satisfy s in (0,1), got s={self.s}")
        if int(self.n) != self.n or self.n < 2:
            raise ConfigurationError(f"dimension must be an integer n >= 2, got n={self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "s", float(self.s))

    def require_subcritical(self):
        """Assert ``2s < n`` (needed by embedding and decay routines)."""
        if not 2.0 * self.s < self.n:
            raise ConfigurationError(f"routine requires 2s < n, got s={self.s}, n={self.n}")

    @property
    def decay_exponent(self):
        return self.n - 2.0 * self.s


def _axis_modulation(theta, lam, Lam):
    return lam + (Lam - lam) * theta[..., 0] ** 2


def _cross_modulation(theta, lam, Lam):
    return lam + (Lam - lam) * (2.0 * theta[..., 0] * theta[..., 1]) ** 2


def _constant_modulation(theta, lam, Lam):
    return np.full(theta.shape[:-1], float(lam))


#: Named angular factors ``a(theta; lam, Lam)``; each is even and in [lam, Lam].
MODULATIONS = {
    "axis": _axis_modulation,
    "cross": _cross_modulation,
    "constant": _constant_modulation,
}


@dataclass(frozen=True)
class Kernel:
    """Kernel in the class bounded by ``lam`` and ``Lam`` multiples of c|y|^{-n-2s}.

    Parameters
    ----------
    order : FractionalOrder
    lam, Lam : float
        Ellipticity bounds, ``0 < lam <= Lam``.  The pure fractional kernel
        needs ``lam <= 1 <= Lam``.
    family : {'pure_fractional', 'modulated'}
    modulation : str or callable
        For the modulated family, a name from :data:`MODULATIONS` or a
        callable ``a(theta, lam, Lam)`` acting on unit vectors of shape (..., n).
    normalized : bool
        If False the factor ``c_{n,s}`` is dropped; this is the bare kernel
        ``|y|^{-n-2s}`` entering the Gagliardo seminorm.
    """

    order: FractionalOrder
    lam: float = 1.0
    Lam: float = 1.0
    family: str = "pure_fractional"
    modulation: Union[str, Callable] = "axis"
    normalized: bool = True

    def __post_init__(self):
        if self.family not in ("pure_fractional", "modulated"):
            raise ConfigurationError(f"unknown kernel family {self.family!r}")
        if not (self.lam > 0 and self.Lam >= self.lam and math.isfinite(self.Lam)):
            raise ConfigurationError(
                f"ellipticity bounds must satisfy 0 < lambda <= Lambda < inf, got {self.lam}, {self.Lam}"
            )
        if self.family == "pure_fractional" and not (self.lam <= 1.0 <= self.Lam):
            raise ConfigurationError("pure_fractional kernel requires lambda <= 1 <= Lambda")
        if self.family == "modulated" and isinstance(self.modulation, str):
            if self.modulation not in MODULATIONS:
                raise ConfigurationError(
                    f"unknown modulation {self.modulation!r}; choose from {sorted(MODULATIONS)}"
                )

    @property
    def n(self):
        return self.order.n

    @property
    def s(self):
        return self.order.s

    @property
    def scale(self):
        return normalization_constant(self.order) if self.normalized else 1.0

    @property
    def is_isotropic(self):
        return self.family == "pure_fractional"

    def angular(self, theta):
        """Angular factor a(theta) for unit vectors ``theta`` of shape (..., n)."""
        theta = np.asarray(theta, dtype=float)
        if self.family == "pure_fractional":
            return np.ones(theta.shape[:-1])
        fn = MODULATIONS[self.modulation] if isinstance(self.modulation, str) else self.modulation
        return np.asarray(fn(theta, self.lam, self.Lam), dtype=float)

    def __call__(self, y):
        return kernel_eval(self, y)

    def homogeneous(self, z):
        """Evaluate without the origin check; ``z`` must be nonzero. Shape (..., n)."""
        z = np.asarray(z, dtype=float)
        r = np.sqrt(np.sum(z * z, axis=-1))
        val = self.scale * r ** (-self.n - 2.0 * self.s)
        if self.family == "pure_fractional":
            return val
        return val * self.angular(z / r[..., None])

    def angular_integral(self, weight=None):
        """Integral of a(theta) (times an optional weight(theta)) over S^{n-1}."""
        if self.family == "pure_fractional" and weight is None:
            return sphere_area(self.n)
        if self.n not in (2, 3):
            raise DomainError("angular quadrature of modulated kernels needs n in {2, 3}")
        pts, wts = sphere_rule(self.n)
        vals = self.angular(pts)
        if weight is not None:
            vals = vals * weight(pts)
        return float(np.dot(vals, wts))


@dataclass(frozen=True)
class Potential:
    """Nonnegative potential V with a declared local integrability exponent q.

    ``kind`` is one of ``zero``, ``constant`` (uses ``value``),
    ``inverse_power`` (V = |x|^{-beta}) or ``tabulated`` (radial table
    ``radii``/``values`` with linear interpolation, constant extension).
    """

    kind: str = "zero"
    value: float = 0.0
    beta: Optional[float] = None
    radii: tuple = ()
    values: tuple = ()
    q: float = math.inf

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "inverse_power", "tabulated"):
            raise ConfigurationError(f"unknown potential kind {self.kind!r}")
        if self.kind == "constant" and not (self.value >= 0 and math.isfinite(self.value)):
            raise ConfigurationError(f"constant potential must be finite and >= 0, got {self.value}")
        if self.kind == "inverse_power" and not (self.beta is not None and self.beta > 0):
            raise ConfigurationError("inverse_power potential needs beta > 0")
        if self.kind == "tabulated":
            r = np.asarray(self.radii, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if r.ndim != 1 or r.size == 0 or r.shape != v.shape:
                raise ConfigurationError("tabulated potential needs equal-length radii and values")
            if np.any(np.diff(r) <= 0):
                raise ConfigurationError("tabulated potential radii must be strictly increasing")
            bad = np.flatnonzero(~(v >= 0) | ~np.isfinite(v))
            if bad.size:
                raise ConfigurationError(
                    f"tabulated potential value at index {bad[0]} is {v[bad[0]]}; V must be >= 0"
                )

    def validate(self, order):
        """Check the integrability constraints against ``order``."""
        if self.kind == "zero":
            return
        if not self.q > order.n / (2.0 * order.s):
            raise ConfigurationError(
                f"potential exponent must satisfy q > n/(2s) = {order.n / (2 * order.s):g}, got q={self.q}"
            )
        if self.kind == "inverse_power" and not self.beta * self.q < order.n:
            raise ConfigurationError(
                f"inverse_power needs beta*q < n for local L^q integrability, got {self.beta * self.q:g} >= {order.n}"
            )

    def __call__(self, x):
        """Pointwise values at points ``x`` of shape (..., n)."""
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1]
        if self.kind == "zero":
            return np.zeros(shape)
        if self.kind == "constant":
            return np.full(shape, float(self.value))
        r = np.sqrt(np.sum(x * x, axis=-1))
        if self.kind == "inverse_power":
            with np.errstate(divide="ignore"):
                return r ** (-float(self.beta))
        return np.interp(r, np.asarray(self.radii, float), np.asarray(self.values, float))


@dataclass(frozen=True)
class QuadratureParams:
    """Controls for the multiplier quadrature."""

    angular_points: int = 48
    epsrel: float = 1e-10
    tolerance: float = 1e-6
    split_radius: Optional[float] = None  # default min(1, 1/|xi|)


def _quad(fn, a, b, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(fn, a, b, limit=400, **kw)


def normalization_constant_closed_form(order):
    """Known closed form s 4^s Gamma(n/2+s) / (pi^{n/2} Gamma(1-s)); test oracle only."""
    n, s = order.n, order.s
    return s * 4.0**s * gamma(n / 2.0 + s) / (math.pi ** (n / 2.0) * gamma(1.0 - s))


@lru_cache(maxsize=None)
def normalization_constant(order, rtol=1e-6):
    """Constant c_{n,s} with c * int (1 - cos xi_1) |xi|^{-n-2s} dxi = 1.

    The defining integral is split into a radial factor
    ``int_0^inf (1 - cos t) t^{-1-2s} dt`` and the angular factor
    ``int_{S^{n-1}} |theta_1|^{2s}``, both by adaptive quadrature.
    """
    n, s = order.n, order.s

    def core(t):
        # (1 - cos t) / t^2, evaluated without cancellation
        if t < 1e-4:
            return 0.5 - t * t / 24.0
        return 2.0 * math.sin(0.5 * t) ** 2 / (t * t)

    near, e1 = _quad(core, 0.0, 1.0, weight="alg", wvar=(1.0 - 2.0 * s, 0.0), epsabs=0, epsrel=1e-12)
    osc, e2 = _quad(lambda t: t ** (-1.0 - 2.0 * s), 1.0, np.inf, weight="cos", wvar=1.0, epsabs=1e-14)
    radial = near + 1.0 / (2.0 * s) - osc

    # |theta_1|^{2s} over S^{n-1}: the cosine t = theta_1 carries the density
    # area(S^{n-2}) (1 - t^2)^{(n-3)/2}.
    half = 0.5 * (n - 3)
    ang, e3 = _quad(lambda t: (1.0 + t) ** half, 0.0, 1.0, weight="alg", wvar=(2.0 * s, half), epsabs=0, epsrel=1e-12)
    angular = 2.0 * sphere_area(n - 1) * ang
    achieved = (e1 + e2) / abs(radial) + e3 / abs(ang)
    if not (np.isfinite(radial) and np.isfinite(angular)) or achieved > rtol:
        raise NumericFailure(
            f"normalization quadrature for n={n}, s={s} reached relative error {achieved:.3g} > {rtol:g}",
            achieved=achieved,
        )
    return 1.0 / (radial * angular)


def kernel_eval(k, y):
    """K(y) for a single vector or an array of vectors of shape (..., n)."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != k.n:
        raise DomainError(f"expected vectors of length {k.n}, got shape {y.shape}")
    if np.any(np.all(y == 0.0, axis=-1)):
        raise DomainError("kernel is singular at y = 0")
    out = k.homogeneous(y)
    return float(out) if out.ndim == 0 else out


def _cos_remainder(x):
    # 1 - cos x - x^2/2
    if abs(x) < 2e-2:
        x2 = x * x
        return x2 * x2 * (-1.0 / 24.0 + x2 * (1.0 / 720.0 - x2 / 40320.0))
    return 2.0 * math.sin(0.5 * x) ** 2 - 0.5 * x * x


def _radial_symbol(kappa, s, delta, epsrel):
    """int_0^inf (1 - cos(kappa r)) r^{-1-2s} dr with the near/far split at delta.

    Returns (value, error estimate).
    """
    if kappa == 0.0:
        return 0.0, 0.0
    p = -1.0 - 2.0 * s
    # |y| < delta: quadratic Taylor part exactly, remainder numerically
    taylor = kappa * kappa * delta ** (2.0 - 2.0 * s) / (2.0 * (2.0 - 2.0 * s))
    rem, e_rem = _quad(lambda r: _cos_remainder(kappa * r) * r**p, 0.0, delta, epsabs=0, epsrel=epsrel)
    # |y| >= delta: non-oscillatory up to one wavelength, Fourier quadrature beyond
    b = max(delta, 1.0 / kappa)
    mid, e_mid = 0.0, 0.0
    if b > delta:
        mid, e_mid = _quad(lambda r: 2.0 * math.sin(0.5 * kappa * r) ** 2 * r**p, delta, b, epsabs=0, epsrel=epsrel)
    osc, e_osc = _quad(lambda r: r**p, b, np.inf, weight="cos", wvar=kappa, epsabs=1e-13 * b ** (-2 * s))
    far = b ** (-2.0 * s) / (2.0 * s) - osc
    return taylor + rem + mid + far, e_rem + e_mid + e_osc


def _orthonormal_frame(xhat):
    """Columns completing ``xhat`` to an orthonormal basis (n = 2 or 3)."""
    n = xhat.size
    q, _ = np.linalg.qr(np.column_stack([xhat, np.eye(n)]))
    frame = q[:, 1:n]
    return frame


def multiplier(k, xi, quad=QuadratureParams()):
    """Fourier symbol m(xi) = int (1 - cos<y, xi>) K(y) dy.

    Radial integrals are done per direction with the split radius
    ``min(1, 1/|xi|)``; the angular integral uses Gauss rules graded toward
    the great circle orthogonal to ``xi``, where the integrand has a kink.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (k.n,):
        raise DomainError(f"xi must have shape ({k.n},)")
    if not np.all(np.isfinite(xi)):
        raise DomainError("xi must be finite")
    norm = float(np.linalg.norm(xi))
    if norm == 0.0:
        return 0.0
    if k.n not in (2, 3):
        raise DomainError("multiplier quadrature implemented for n in {2, 3}")
    s = k.s
    delta = quad.split_radius if quad.split_radius is not None else min(1.0, 1.0 / norm)
    xhat = xi / norm
    frame = _orthonormal_frame(xhat)
    u, w = graded_unit_rule(quad.angular_points)

    if k.n == 2:
        # phi measured from xhat; x = pi/2 - phi is the distance to the kink
        x = 0.5 * np.pi * u
        wx = 0.5 * np.pi * w
        cosphi, sinphi = np.sin(x), np.cos(x)
        kappas = norm * cosphi
        e2 = frame[:, 0]
        ang = np.zeros_like(u)
        for sc in (1.0, -1.0):
            for ss in (1.0, -1.0):
                th = sc * cosphi[:, None] * xhat + ss * sinphi[:, None] * e2
                ang += k.angular(th)
        weights = wx * ang
    else:
        t = u
        npsi = 2 * quad.angular_points
        psi = 2.0 * np.pi * np.arange(npsi) / npsi
        st = np.sqrt(1.0 - t * t)
        ring = np.cos(psi)[:, None] * frame[:, 0] + np.sin(psi)[:, None] * frame[:, 1]
        ang = np.zeros_like(u)
        for sign in (1.0, -1.0):
            th = sign * t[:, None, None] * xhat + st[:, None, None] * ring[None, :, :]
            ang += k.angular(th).mean(axis=1) * 2.0 * np.pi
        kappas = norm * t
        weights = w * ang

    total, err = 0.0, 0.0
    for kap, wt in zip(kappas, weights):
        val, e = _radial_symbol(float(kap), s, delta, quad.epsrel)
        total += wt * val
        err += abs(wt) * e
    total *= k.scale
    err *= k.scale
    if not np.isfinite(total) or err > quad.tolerance * max(abs(total), 1e-300):
        raise NumericFailure(
            f"multiplier quadrature at |xi|={norm:g} reached relative error {err / abs(total):.3g}",
            achieved=err / abs(total) if total else np.inf,
        )
    return max(total, 0.0)


def tail_mass(k, rho):
    """Mass of the kernel outside the ball of radius ``rho``."""
    if not rho > 0:
        raise DomainError("tail_mass requires rho > 0")
    s = k.s
    radial = rho ** (-2.0 * s) / (2.0 * s)
    return k.scale * k.angular_integral() * radial


def near_mass_second_moment(k, rho):
    """int_{|y|<rho} |y|^2 K(y) dy, finite because 2 - 2s > 0."""
    if not rho > 0:
        raise DomainError("near_mass_second_moment requires rho > 0")
    s = k.s
    return k.scale * k.angular_integral() * rho ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)


def axis_second_moments(k, rho):
    """Per-axis moments int_{|y|<rho} y_a^2 K(y) dy, a = 0..n-1."""
    if k.is_isotropic:
        return np.full(k.n, near_mass_second_moment(k, rho) / k.n)
    s = k.s
    radial = rho ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
    return np.array(
        [k.scale * radial * k.angular_integral(lambda th, a=a: th[..., a] ** 2) for a in range(k.n)]
    )
