import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracgreen import (
    ConfigurationError,
    DomainError,
    FractionalOrder,
    Kernel,
    Potential,
    QuadratureParams,
    kernel_eval,
    multiplier,
    near_mass_second_moment,
    normalization_constant,
    tail_mass,
)
from fracgreen.kernel import normalization_constant_closed_form


def closed_form(n, s):
    return s * 4**s * math.gamma(n / 2 + s) / (math.pi ** (n / 2) * math.gamma(1 - s))


# ---- FractionalOrder / Kernel / Potential ---------------------------------

@pytest.mark.parametrize("s,n", [(0.0, 2), (1.0, 2), (1.2, 2), (-0.1, 3), (0.5, 1), (0.5, 2.5)])
def test_order_rejects_invalid(s, n):
    with pytest.raises(ConfigurationError):
        FractionalOrder(s, n)


def test_order_decay_exponent():
    assert FractionalOrder(0.25, 3).decay_exponent == pytest.approx(2.5)


def test_kernel_rejects_bad_bounds(half_order):
    with pytest.raises(ConfigurationError):
        Kernel(half_order, 2.0, 1.0, family="modulated")
    with pytest.raises(ConfigurationError):
        Kernel(half_order, 2.0, 3.0)  # pure kernel outside [lam, Lam]
    with pytest.raises(ConfigurationError):
        Kernel(half_order, family="nope")
    with pytest.raises(ConfigurationError):
        Kernel(half_order, 1, 2, family="modulated", modulation="unknown")


def test_potential_constraints(half_order):
    with pytest.raises(ConfigurationError):
        Potential("constant", value=-1.0)
    with pytest.raises(ConfigurationError):
        Potential("inverse_power")
    with pytest.raises(ConfigurationError, match="index 1"):
        Potential("tabulated", radii=(0, 1), values=(1, -2))
    with pytest.raises(ConfigurationError, match="q > n/"):
        Potential("constant", value=1.0, q=1.5).validate(half_order)
    with pytest.raises(ConfigurationError, match="beta\\*q < n"):
        Potential("inverse_power", beta=1.0, q=3.0).validate(half_order)
    Potential("inverse_power", beta=0.5, q=3.0).validate(half_order)


def test_potential_values_nonnegative():
    x = np.random.default_rng(0).normal(size=(50, 2))
    for V in (Potential(), Potential("constant", 2.0), Potential("inverse_power", beta=0.5),
              Potential("tabulated", radii=(0.0, 1.0), values=(2.0, 0.0))):
        assert np.all(V(x) >= 0)


# ---- normalization constant ----------------------------------------------

def test_normalization_2d_half():
    c = normalization_constant(FractionalOrder(0.5, 2))
    assert c == pytest.approx(1 / (2 * math.pi), rel=1e-8)


def test_normalization_3d_half_matches_closed_form():
    c = normalization_constant(FractionalOrder(0.5, 3))
    assert abs(c - closed_form(3, 0.5)) <= 1e-5 * closed_form(3, 0.5)


@settings(max_examples=25, deadline=None)
@given(s=st.floats(0.05, 0.95), n=st.integers(2, 4))
def test_normalization_dual_method(s, n):
    order = FractionalOrder(s, n)
    assert normalization_constant(order) == pytest.approx(closed_form(n, s), rel=1e-6)
    assert normalization_constant_closed_form(order) == pytest.approx(closed_form(n, s), rel=1e-12)


def test_normalization_vanishes_like_one_minus_s():
    ratios = [normalization_constant(FractionalOrder(s, 2)) / (s * (1 - s)) for s in (0.9, 0.99, 0.999)]
    assert all(0.1 < r < 10 for r in ratios)
    assert normalization_constant(FractionalOrder(0.999, 2)) < 1e-2


# ---- kernel_eval ----------------------------------------------------------

def test_kernel_eval_unit_vector(pure_kernel):
    assert kernel_eval(pure_kernel, [1.0, 0.0]) == pytest.approx(0.159155, abs=1e-6)


def test_kernel_eval_origin(pure_kernel):
    with pytest.raises(DomainError):
        kernel_eval(pure_kernel, [0.0, 0.0])


def test_kernel_symmetry_and_bounds(half_order):
    y = np.random.default_rng(1).normal(size=(200, 2))
    c = normalization_constant(half_order)
    base = c * np.linalg.norm(y, axis=1) ** -3
    for mod in ("axis", "cross", "constant"):
        k = Kernel(half_order, 1.0, 2.0, family="modulated", modulation=mod)
        v = kernel_eval(k, y)
        assert np.array_equal(v, kernel_eval(k, -y))
        assert np.all(v >= base * (1 - 1e-12)) and np.all(v <= 2 * base * (1 + 1e-12))


def test_degenerate_modulation_equals_pure(half_order, pure_kernel):
    y = np.random.default_rng(2).normal(size=(30, 2))
    k = Kernel(half_order, 1.0, 1.0, family="modulated")
    assert np.allclose(kernel_eval(k, y), kernel_eval(pure_kernel, y), rtol=1e-14)
    assert tail_mass(k, 0.7) == pytest.approx(tail_mass(pure_kernel, 0.7), rel=1e-12)


# ---- multiplier -----------------------------------------------------------

def _radial_symbol_mp(s):
    # int_0^inf (1 - cos t) t^{-1-2s} dt by oscillatory quadrature
    near = mpmath.quad(lambda t: (1 - mpmath.cos(t)) * t ** (-1 - 2 * s), [0, 1])
    osc = mpmath.quadosc(lambda t: mpmath.cos(t) * t ** (-1 - 2 * s), [1, mpmath.inf], period=2 * mpmath.pi)
    return float(near + 1 / (2 * s) - osc)


def test_multiplier_example(pure_kernel):
    m = multiplier(pure_kernel, np.array([2.0, 0.0]))
    assert m == pytest.approx(2.0, rel=1e-2)
    # independent: c * |xi|^{2s} * radial integral * int_{S^1} |cos phi|^{2s}
    pi = mpmath.pi
    ang = float(mpmath.quad(lambda p: abs(mpmath.cos(p)), [0, pi / 2, 3 * pi / 2, 2 * pi]))
    ref = (1 / (2 * math.pi)) * 2.0 * _radial_symbol_mp(0.5) * ang
    assert m == pytest.approx(ref, rel=1e-6)


def test_multiplier_zero(pure_kernel):
    assert multiplier(pure_kernel, np.zeros(2)) == 0.0


@pytest.mark.parametrize("n,s", [(2, 0.25), (2, 0.75), (3, 0.5)])
def test_multiplier_pure_scaling(n, s):
    k = Kernel(FractionalOrder(s, n))
    rng = np.random.default_rng(3)
    for mag in (0.1, 3.0, 100.0):
        d = rng.normal(size=n)
        xi = mag * d / np.linalg.norm(d)
        assert multiplier(k, xi) / mag ** (2 * s) == pytest.approx(1.0, rel=1e-2)


def test_multiplier_rotation_invariance():
    k = Kernel(FractionalOrder(0.5, 3))
    rng = np.random.default_rng(4)
    xi = np.array([1.5, -0.3, 2.0])
    m0 = multiplier(k, xi)
    for _ in range(3):
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        assert abs(multiplier(k, q @ xi) - m0) <= 1e-2 * m0


@pytest.mark.parametrize("n", [2, 3])
def test_multiplier_modulated_bounds(n):
    k = Kernel(FractionalOrder(0.5, n), 1.0, 2.0, family="modulated")
    rng = np.random.default_rng(5)
    for mag in (0.1, 1.0, 10.0, 100.0):
        d = rng.normal(size=n)
        r = multiplier(k, mag * d / np.linalg.norm(d)) / mag
        assert 1.0 - 1e-2 <= r <= 2.0 + 2e-2


def test_multiplier_monotone_in_kernel():
    o = FractionalOrder(0.5, 2)
    xi = np.array([0.7, 1.9])
    small = multiplier(Kernel(o, 1.0, 2.0, family="modulated"), xi)
    large = multiplier(Kernel(o, 1.0, 3.0, family="modulated"), xi)
    assert large > small


def test_multiplier_rejects_bad_shape(pure_kernel):
    with pytest.raises(DomainError):
        multiplier(pure_kernel, np.ones(3))


# ---- tail mass and second moment ------------------------------------------

def test_tail_mass_example(pure_kernel):
    assert tail_mass(pure_kernel, 1.0) == pytest.approx(1.0, rel=1e-8)
    # independent radial quadrature: 2 pi c int_1^inf r^{-2} dr
    val = 2 * math.pi * (1 / (2 * math.pi)) * float(mpmath.quad(lambda r: r**-2, [1, mpmath.inf]))
    assert tail_mass(pure_kernel, 1.0) == pytest.approx(val, rel=1e-10)


def test_tail_mass_decreasing(pure_kernel):
    vals = [tail_mass(pure_kernel, r) for r in np.geomspace(0.1, 1e4, 30)]
    assert all(a > b for a, b in zip(vals, vals[1:])) and vals[-1] < 1e-3


def test_second_moment_example(pure_kernel):
    assert near_mass_second_moment(pure_kernel, 1.0) == pytest.approx(1.0, rel=1e-8)
    vals = [near_mass_second_moment(pure_kernel, r) for r in np.geomspace(1e-6, 10, 30)]
    assert all(a < b for a, b in zip(vals, vals[1:])) and vals[0] < 1e-5


def test_second_moment_bounded_as_s_to_one():
    vals = [near_mass_second_moment(Kernel(FractionalOrder(s, 2)), 1.0) for s in (0.9, 0.99, 0.999)]
    assert max(vals) / min(vals) < 2 and max(vals) < 10


def test_domain_errors(pure_kernel):
    with pytest.raises(DomainError):
        tail_mass(pure_kernel, 0.0)
    with pytest.raises(DomainError):
        near_mass_second_moment(pure_kernel, -1.0)
