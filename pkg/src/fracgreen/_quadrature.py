"""Low-level quadrature rules used by the kernel and discretization modules.

Everything here works on kernels that are positively homogeneous of degree
``-n-2s``, so integrals over cubes, cube complements and spheres reduce to
integrals over the faces of the unit cube or over the unit sphere.
"""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre(npts, a=-1.0, b=1.0, panels=1):
    """Composite Gauss-Legendre nodes/weights on [a, b] with equal panels."""
    x, w = np.polynomial.legendre.leggauss(npts)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def tensor_rule(dim, npts, a=-1.0, b=1.0, panels=1):
    """Tensor-product Gauss rule on [a, b]^dim. Returns (points, weights)."""
    x, w = gauss_legendre(npts, a, b, panels)
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wts = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return pts, wts


@lru_cache(maxsize=None)
def cube_face_rule(n, npts=16, panels=2):
    """Points on the boundary of [-1, 1]^n with surface-measure weights.

    Face points are returned in the order (axis 0 -, axis 0 +, axis 1 -, ...).
    """
    fpts, fw = tensor_rule(n - 1, npts, panels=panels)
    pts, wts = [], []
    for axis in range(n):
        for sign in (-1.0, 1.0):
            p = np.empty((fpts.shape[0], n))
            p[:, axis] = sign
            others = [d for d in range(n) if d != axis]
            p[:, others] = fpts
            pts.append(p)
            wts.append(fw)
    pts = np.concatenate(pts)
    wts = np.concatenate(wts)
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


@lru_cache(maxsize=None)
def sphere_rule(n, npts=64):
    """Quadrature on the unit sphere S^{n-1} for n in {2, 3}.

    Integrands are assumed smooth (no kinks); trapezoid in azimuth, Gauss in
    the polar cosine for n = 3.
    """
    if n == 2:
        phi = 2.0 * np.pi * np.arange(4 * npts) / (4 * npts)
        pts = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        wts = np.full(phi.size, 2.0 * np.pi / phi.size)
    elif n == 3:
        t, wt = gauss_legendre(npts, -1.0, 1.0, 2)
        psi = 2.0 * np.pi * np.arange(2 * npts) / (2 * npts)
        T, P = np.meshgrid(t, psi, indexing="ij")
        W = np.outer(wt, np.full(psi.size, 2.0 * np.pi / psi.size))
        st = np.sqrt(1.0 - T**2)
        pts = np.stack([st * np.cos(P), st * np.sin(P), T], axis=-1).reshape(-1, 3)
        wts = W.ravel()
    else:
        raise ValueError("sphere quadrature implemented for n in {2, 3}")
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


def graded_unit_rule(npts, power=3):
    """Rule on [0, 1] for integrands with an algebraic singularity at 0.

    Substitutes x = u**power, which smooths |x|^alpha endpoint behaviour.
    """
    u, w = gauss_legendre(npts, 0.0, 1.0, 1)
    x = u**power
    return x, w * power * u ** (power - 1)
