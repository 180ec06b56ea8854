"""Uniform-grid fields vanishing outside a ball, and the assembled operator.

The discrete form is built from pairwise differences,

    u^T A v = h^n sum_i [ (D + V_i) u_i v_i - sum_j w(x_j - x_i) u_i v_j ],

where the lattice stencil ``w`` approximates cell integrals of the kernel and
``D = sum_o w(o) + (tail beyond the lattice)``.  Off-diagonal entries are
``-h^n w <= 0`` and rows are strictly diagonally dominant, so ``A`` is a
symmetric nonsingular M-matrix.
"""
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
import csv
import math

import numpy as np
from scipy import fft as sfft
from scipy.sparse.linalg import LinearOperator

from ._quadrature import cube_face_rule, tensor_rule
from .errors import ConfigurationError, DomainError
from .kernel import Kernel, Potential, axis_second_moments, tail_mass

__all__ = [
    "Grid",
    "DiscreteField",
    "AssembledOperator",
    "build_grid",
    "apply_LK",
    "apply_LK_field",
    "assemble",
    "sample_potential",
    "write_field_csv",
    "read_field_csv",
    "DENSE_LIMIT",
]

#: Largest active-node count stored as a dense matrix.
DENSE_LIMIT = 5000


@dataclass(frozen=True)
class Grid:
    """Lattice on [-R, R]^n with ``N_side`` nodes per axis; active nodes have |x| < R."""

    n: int
    R: float
    N_side: int

    @property
    def h(self):
        return 2.0 * self.R / (self.N_side - 1)

    @property
    def shape(self):
        return (self.N_side,) * self.n

    @property
    def cell_volume(self):
        return self.h**self.n

    @cached_property
    def _doubled(self):
        # doubled integer coordinates q = 2 i - (N - 1); x = q h / 2
        q = 2 * np.arange(self.N_side) - (self.N_side - 1)
        grids = np.meshgrid(*([q] * self.n), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    @cached_property
    def active_mask(self):
        """Boolean array of shape ``shape``; exact integer test, no round-off."""
        r2 = np.sum(self._doubled.astype(np.int64) ** 2, axis=-1)
        return (r2 < (self.N_side - 1) ** 2).reshape(self.shape)

    @cached_property
    def active_flat(self):
        return np.flatnonzero(self.active_mask.ravel())

    @cached_property
    def active_index(self):
        """Multi-indices (n_active, n) of active nodes, C order."""
        return np.stack(np.unravel_index(self.active_flat, self.shape), axis=-1)

    @cached_property
    def coords(self):
        """Coordinates (n_active, n) of active nodes."""
        return self._doubled[self.active_flat] * (0.5 * self.h)

    @cached_property
    def all_coords(self):
        return (self._doubled * (0.5 * self.h)).reshape(self.shape + (self.n,))

    @property
    def n_active(self):
        return self.active_flat.size

    @cached_property
    def radii(self):
        return np.sqrt(np.sum(self.coords**2, axis=-1))

    def locate(self, multi_index):
        """Active position of a grid multi-index, or -1 if the node is inactive."""
        flat = np.ravel_multi_index(tuple(multi_index), self.shape)
        pos = np.searchsorted(self.active_flat, flat)
        if pos < self.active_flat.size and self.active_flat[pos] == flat:
            return int(pos)
        return -1

    def origin_index(self):
        """Active position of the node at the origin (odd ``N_side`` only)."""
        if self.N_side % 2 == 0:
            raise DomainError("grid has no node at the origin (N_side even)")
        return self.locate([(self.N_side - 1) // 2] * self.n)


def build_grid(n, R, N_side):
    """Validated :class:`Grid`; raises ConfigurationError on bad input."""
    if n not in (2, 3):
        raise ConfigurationError(f"grid dimension must be 2 or 3, got n={n}")
    if not (R > 0 and math.isfinite(R)):
        raise ConfigurationError(f"ball radius must be positive, got R={R}")
    if int(N_side) != N_side or N_side < 3:
        raise ConfigurationError(f"N_side must be an integer >= 3, got {N_side}")
    g = Grid(int(n), float(R), int(N_side))
    if g.n_active == 0:
        raise ConfigurationError("grid has no nodes strictly inside the ball")
    return g


@dataclass
class DiscreteField:
    """Values on the active nodes of a grid; identically zero elsewhere."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_active,):
            raise DomainError(
                f"field has {self.values.shape} values, grid has {self.grid.n_active} active nodes"
            )

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.n_active))

    @classmethod
    def from_function(cls, grid, fn):
        """Sample ``fn`` (vectorized over (m, n) points) at active nodes."""
        return cls(grid, np.asarray(fn(grid.coords), dtype=float))

    def full(self):
        """Array of shape ``grid.shape`` with zeros at inactive nodes."""
        out = np.zeros(self.grid.N_side**self.grid.n)
        out[self.grid.active_flat] = self.values
        return out.reshape(self.grid.shape)

    def at(self, multi_index):
        """Value at any lattice node; exactly 0 at inactive nodes."""
        pos = self.grid.locate(multi_index)
        return 0.0 if pos < 0 else float(self.values[pos])

    def __add__(self, other):
        return DiscreteField(self.grid, self.values + _values(other, self.grid))

    def __sub__(self, other):
        return DiscreteField(self.grid, self.values - _values(other, self.grid))

    def __mul__(self, c):
        return DiscreteField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return DiscreteField(self.grid, -self.values)


def _values(u, grid):
    if isinstance(u, DiscreteField):
        if u.grid != grid:
            raise DomainError("field lives on a different grid")
        return u.values
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.n_active,):
        raise DomainError(f"expected {grid.n_active} values, got shape {u.shape}")
    return u


# ---------------------------------------------------------------------------
# kernel stencil, in units where the lattice spacing is 1


@lru_cache(maxsize=None)
def _face_moments(kernel):
    """Face integrals over the unit cube boundary: (F0, F_a) with
    F0 = sum_faces int K(z) dw and F_a = sum_faces int z_a^2 K(z) dw."""
    pts, wts = cube_face_rule(kernel.n)
    kz = kernel.homogeneous(pts) * wts
    return float(kz.sum()), (pts**2 * kz[:, None]).sum(axis=0)


@lru_cache(maxsize=None)
def _neighbor_cell_weight(kernel, offset):
    """int over the unit cell centred at ``offset`` (|offset|_inf = 1) of K."""
    pts, wts = tensor_rule(kernel.n, 8, -0.5, 0.5, panels=4)
    return float(np.dot(kernel.homogeneous(pts + np.asarray(offset, float)), wts))


def _unit_weights(kernel, offsets):
    """Stencil weights w(o) for h = 1 at integer offsets (m, n); w(0) = 0."""
    offsets = np.asarray(offsets)
    out = np.zeros(offsets.shape[0])
    linf = np.max(np.abs(offsets), axis=-1)
    far = linf >= 2
    if np.any(far):
        out[far] = kernel.homogeneous(offsets[far].astype(float))
    near = np.flatnonzero(linf == 1)
    for i in near:
        out[i] = _neighbor_cell_weight(kernel, tuple(int(v) for v in offsets[i]))
    # self-cell second moment, as a discrete Laplacian on the axis neighbours
    s = kernel.s
    _, Fa = _face_moments(kernel)
    l1 = np.sum(np.abs(offsets), axis=-1)
    axis_nb = np.flatnonzero((l1 == 1) & (linf == 1))
    for i in axis_nb:
        a = int(np.flatnonzero(offsets[i])[0])
        out[i] += 2.0 ** (2.0 * s - 2.0) * Fa[a] / (2.0 * (2.0 - 2.0 * s))
    return out


def _offset_block(n, extent):
    r = np.arange(-extent, extent + 1)
    grids = np.meshgrid(*([r] * n), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


@lru_cache(maxsize=32)
def _unit_stencil(kernel, extent):
    """Weights on offsets in [-extent, extent]^n, shape (2 extent + 1,)^n."""
    w = _unit_weights(kernel, _offset_block(kernel.n, extent))
    w = w.reshape((2 * extent + 1,) * kernel.n)
    w.setflags(write=False)
    return w


@lru_cache(maxsize=32)
def _unit_row_total(kernel, extent):
    """sum over 0 < |o|_inf <= extent of w(o), plus the kernel mass outside
    the cube of half-width extent + 1/2 (exact for homogeneous kernels)."""
    n, s = kernel.n, kernel.s
    total = 0.0
    r = np.arange(-extent, extent + 1)
    inner = _unit_stencil(kernel, 1).sum()
    rest = _offset_block(n - 1, extent)
    for first in r:
        o = np.column_stack([np.full(rest.shape[0], first), rest])
        o = o[np.max(np.abs(o), axis=-1) >= 2]
        total += kernel.homogeneous(o.astype(float)).sum()
    F0, _ = _face_moments(kernel)
    tail = (extent + 0.5) ** (-2.0 * s) / (2.0 * s) * F0
    return inner + total + tail


def exterior_extent(grid):
    """Lattice half-width (in cells) of the exterior sum: at least 4R."""
    return max(grid.N_side - 1, int(math.ceil(4.0 * grid.R / grid.h - 1e-9)))


# ---------------------------------------------------------------------------
# potentials


def _cell_average_inverse_power(beta, n, h):
    """(1/h^n) int_{[-h/2, h/2]^n} |y|^{-beta} dy, via the cube-face reduction."""
    pts, wts = cube_face_rule(n)
    F = float(np.dot(np.sum(pts**2, axis=-1) ** (-0.5 * beta), wts))
    return (0.5 * h) ** (n - beta) / (n - beta) * F / h**n


def sample_potential(V, g):
    """Nonnegative potential samples on the active nodes.

    For ``inverse_power`` potentials, nodes with |x| < h/2 carry the cell
    average of |x|^{-beta} instead of the (infinite) point value.
    """
    if not isinstance(V, Potential):
        raise ConfigurationError("expected a Potential")
    vals = np.asarray(V(g.coords), dtype=float)
    if V.kind == "inverse_power":
        if V.beta >= g.n:
            raise ConfigurationError(f"inverse_power needs beta < n for a finite cell average, got {V.beta}")
        core = g.radii < 0.5 * g.h
        if np.any(core):
            vals[core] = _cell_average_inverse_power(float(V.beta), g.n, g.h)
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        raise ConfigurationError(f"potential is not finite at node {tuple(g.coords[bad[0]])}")
    neg = np.flatnonzero(vals < 0)
    if neg.size:
        raise ConfigurationError(f"potential is negative ({vals[neg[0]]}) at node {tuple(g.coords[neg[0]])}")
    return DiscreteField(g, vals)


# ---------------------------------------------------------------------------
# assembled operator


@dataclass(eq=False)
class AssembledOperator:
    """Symmetric positive definite discrete form of <u, v>_K + int V u v.

    ``u @ (A @ v)`` approximates the continuous form; ``A @ u = h^n f`` is the
    discrete weak problem with source ``f``.  Matrix-free (FFT convolution)
    above :data:`DENSE_LIMIT` active nodes, dense below.
    """

    grid: Grid
    kernel: Kernel
    potential: Potential
    stencil: np.ndarray  # physical weights w(o), offsets |o|_inf <= N - 1
    row_total: float  # D: sum of all weights incl. exterior lattice and tail
    potential_samples: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        g = self.grid
        self.h = g.h
        self.scale = g.cell_volume
        self.diag_weights = self.row_total + self.potential_samples
        self._dense = None
        if g.n_active <= DENSE_LIMIT:
            self._dense = self._build_dense()
        else:
            self._setup_fft()

    @property
    def shape(self):
        m = self.grid.n_active
        return (m, m)

    @property
    def is_dense(self):
        return self._dense is not None

    def _build_dense(self):
        g = self.grid
        idx = g.active_index
        ext = g.N_side - 1
        m = g.n_active
        W = np.empty((m, m))
        step = max(1, 2_000_000 // max(m, 1))
        for start in range(0, m, step):
            rows = idx[start:start + step]
            off = idx[None, :, :] - rows[:, None, :] + ext
            W[start:start + step] = self.stencil[tuple(off[..., a] for a in range(g.n))]
        A = -W
        A[np.diag_indices(m)] += self.diag_weights
        A *= self.scale
        # exact symmetry
        A = 0.5 * (A + A.T)
        return A

    def _setup_fft(self):
        g = self.grid
        N = g.N_side
        self._fft_shape = tuple(sfft.next_fast_len(2 * N - 1, real=True) for _ in range(g.n))
        padded = np.zeros(self._fft_shape)
        # place w(o) at o mod P
        ext = N - 1
        src = [np.r_[ext:2 * ext + 1, 0:ext] for _ in range(g.n)]
        dst = [np.r_[0:ext + 1, P - ext:P] for P in self._fft_shape]
        padded[np.ix_(*dst)] = self.stencil[np.ix_(*src)]
        self._stencil_hat = sfft.rfftn(padded)

    def _convolve(self, u):
        g = self.grid
        full = np.zeros(g.N_side**g.n)
        full[g.active_flat] = u
        full = full.reshape(g.shape)
        conv = sfft.irfftn(sfft.rfftn(full, self._fft_shape) * self._stencil_hat, self._fft_shape)
        conv = conv[tuple(slice(0, g.N_side) for _ in range(g.n))]
        return conv.ravel()[g.active_flat]

    def matvec(self, u):
        u = _values(u, self.grid)
        if self._dense is not None:
            return self._dense @ u
        return self.scale * (self.diag_weights * u - self._convolve(u))

    def __matmul__(self, u):
        return self.matvec(u)

    def bilinear(self, u, v):
        """u^T A v."""
        return float(np.dot(_values(u, self.grid), self.matvec(v)))

    def diagonal(self):
        return self.scale * self.diag_weights

    def to_dense(self):
        if self._dense is None:
            if self.grid.n_active > 4 * DENSE_LIMIT:
                raise ConfigurationError("operator too large to densify")
            return self._build_dense()
        return self._dense.copy()

    def as_linear_operator(self):
        return LinearOperator(self.shape, matvec=self.matvec, dtype=float)

    def with_potential(self, V):
        """Same kernel part, different potential."""
        V.validate(self.kernel.order)
        samples = sample_potential(V, self.grid).values
        return AssembledOperator(self.grid, self.kernel, V, self.stencil, self.row_total, samples,
                                 dict(self.metadata))


def assemble(k, V, g):
    """Assemble the discrete operator L_K + V on grid ``g``.

    Stencil: midpoint kernel values ``K(o h) h^n`` for |o|_inf >= 2, cell
    integrals of K for the 3^n - 1 neighbour cells, and the self-cell second
    moment added to the axis neighbours.  The exterior weight of node i is the
    lattice sum over inactive nodes out to ``4R`` plus the exact kernel mass
    beyond that cube.
    """
    if k.n != g.n:
        raise ConfigurationError(f"kernel dimension {k.n} does not match grid dimension {g.n}")
    V.validate(k.order)
    samples = sample_potential(V, g).values
    ext = g.N_side - 1
    hs = g.h ** (-2.0 * k.s)
    stencil = _unit_stencil(k, ext) * hs
    extent = exterior_extent(g)
    row_total = _unit_row_total(k, extent) * hs
    F0, Fa = _face_moments(k)
    meta = {
        "exterior_extent_cells": extent,
        "self_cell_axis_moments": ((0.5 * g.h) ** (2.0 - 2.0 * k.s) / (2.0 - 2.0 * k.s) * Fa).tolist(),
        "row_total": row_total,
    }
    return AssembledOperator(g, k, V, stencil, row_total, samples, meta)


# ---------------------------------------------------------------------------
# pointwise operator, independent route


def apply_LK(k, g, u, x_index):
    """L_K u at one active node by direct lattice quadrature of the second difference.

    Sums ``(1/2) mu(u, x, y) K(y) h^n`` over lattice offsets with
    ``0 < |y| <= R + |x| + h``, adds the singular correction (discrete second
    derivatives times the ball moments of radius h/2) and the tail
    ``u(x) * tail_mass(R_cut)``.
    """
    if k.n != g.n:
        raise ConfigurationError("kernel and grid dimensions differ")
    x_index = int(x_index)
    if not 0 <= x_index < g.n_active:
        raise DomainError(f"node {x_index} is not an active node")
    full = u.full() if isinstance(u, DiscreteField) else DiscreteField(g, u).full()
    return _apply_LK_full(k, g, full, g.active_index[x_index])


@lru_cache(maxsize=16)
def _ball_offsets(n, radius_cells):
    ext = int(math.floor(radius_cells))
    o = _offset_block(n, ext)
    r2 = np.sum(o * o, axis=-1)
    keep = (r2 > 0) & (r2 <= radius_cells**2)
    o = o[keep]
    o.setflags(write=False)
    return o


def _lookup(full, pts):
    N = full.shape[0]
    inside = np.all((pts >= 0) & (pts < N), axis=-1)
    vals = np.zeros(pts.shape[0])
    p = pts[inside]
    vals[inside] = full[tuple(p[:, a] for a in range(p.shape[1]))]
    return vals


def _apply_LK_full(k, g, full, mi):
    h = g.h
    x = (2 * mi - (g.N_side - 1)) * 0.5 * h
    r_cut = g.R + float(np.linalg.norm(x)) + h
    offs = _ball_offsets(g.n, r_cut / h)
    ux = full[tuple(mi)]
    up = _lookup(full, mi + offs)
    um = _lookup(full, mi - offs)
    mu = 2.0 * ux - up - um
    K = k.homogeneous(offs * h)
    total = 0.5 * np.sum(mu * K) * h**g.n
    moments = axis_second_moments(k, 0.5 * h)
    for a in range(g.n):
        e = np.zeros((1, g.n), dtype=int)
        e[0, a] = 1
        d2 = 2.0 * ux - _lookup(full, mi + e)[0] - _lookup(full, mi - e)[0]
        total += 0.5 * moments[a] * d2 / h**2
    total += ux * tail_mass(k, r_cut)
    return total


def apply_LK_field(k, g, u, nodes=None):
    """apply_LK at many active nodes (all by default)."""
    full = u.full() if isinstance(u, DiscreteField) else DiscreteField(g, u).full()
    nodes = range(g.n_active) if nodes is None else nodes
    return np.array([_apply_LK_full(k, g, full, g.active_index[i]) for i in nodes])


# ---------------------------------------------------------------------------
# CSV


def write_field_csv(path_or_file, field_):
    """Node coordinates plus value, 17 significant digits, header row."""
    g = field_.grid
    names = [f"x{a}" for a in range(g.n)] + ["value"]
    close = False
    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        fh = open(path_or_file, "w", newline="")
        close = True
    else:
        fh = path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for xrow, v in zip(g.coords, field_.values):
            w.writerow([f"{c:.17g}" for c in xrow] + [f"{v:.17g}"])
    finally:
        if close:
            fh.close()


def read_field_csv(path, grid):
    """Read a field written by :func:`write_field_csv` (or any coordinate table) onto ``grid``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != grid.n + 1:
        raise ConfigurationError(f"{path}: expected {grid.n + 1} columns")
    idx = np.rint(data[:, :grid.n] / grid.h + 0.5 * (grid.N_side - 1)).astype(int)
    vals = np.zeros(grid.n_active)
    for mi, v in zip(idx, data[:, grid.n]):
        if np.any(mi < 0) or np.any(mi >= grid.N_side):
            continue
        pos = grid.locate(mi)
        if pos >= 0:
            vals[pos] = v
    return DiscreteField(grid, vals)
