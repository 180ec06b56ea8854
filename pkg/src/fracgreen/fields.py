"""Test-field generators: compact bumps and seeded random combinations."""
import numpy as np

from .discretization import DiscreteField

__all__ = ["bump", "getoor_profile", "random_bump_field", "random_smooth_field", "random_nonnegative_field"]


def bump(center, width):
    """exp(-1/(1-|x-c|^2/w^2)) inside B_w(c), zero outside."""
    center = np.asarray(center, dtype=float)

    def f(x):
        r2 = np.sum((x - center) ** 2, axis=-1) / width**2
        out = np.zeros(r2.shape)
        m = r2 < 1.0
        out[m] = np.exp(-1.0 / (1.0 - r2[m]))
        return out

    return f


def getoor_profile(s, radius=1.0):
    """(1 - |x|^2/radius^2)_+^s."""

    def f(x):
        return np.maximum(1.0 - np.sum(x * x, axis=-1) / radius**2, 0.0) ** s

    return f


def random_bump_field(g, rng, max_center=0.25, widths=(0.2, 0.5), inner=0.75):
    """One bump with random center and width, supported in B_{inner R}."""
    R = g.R
    while True:
        c = rng.uniform(-max_center * R, max_center * R, g.n)
        w = rng.uniform(widths[0] * R, widths[1] * R)
        if np.linalg.norm(c) + w <= inner * R:
            return DiscreteField.from_function(g, bump(c, w))


def random_smooth_field(g, rng, n_bumps=3, signed=True):
    """Sum of a few random bumps inside the ball; signed amplitudes by default."""
    vals = np.zeros(g.n_active)
    for _ in range(n_bumps):
        amp = rng.uniform(0.5, 1.5) * (rng.choice([-1.0, 1.0]) if signed else 1.0)
        c = rng.uniform(-0.5, 0.5, g.n) * g.R
        w = rng.uniform(0.2, 0.5) * g.R
        vals += amp * bump(c, w)(g.coords)
    return DiscreteField(g, vals)


def random_nonnegative_field(g, rng, sparsity=0.5):
    """Nonnegative random field: uniform values on a random subset of nodes."""
    vals = rng.uniform(0.0, 1.0, g.n_active)
    vals[rng.uniform(size=g.n_active) < sparsity] = 0.0
    return DiscreteField(g, vals)
