"""Weak solves by conjugate gradients, plus the principle and identity checks."""
from dataclasses import dataclass, field
import math

import numpy as np

from .discretization import AssembledOperator, DiscreteField, _values
from .errors import AssemblyError, ConfigurationError, DomainError, NonConvergence
from .variational import NormReport, energy_from_operator, l2_inner, lp_norm, norm_report, spectral_form

__all__ = [
    "SolveConfig",
    "SolveReport",
    "conjugate_gradient",
    "weak_solve",
    "direct_solve",
    "verify_weak_formulation",
    "check_maximum_principle",
    "check_comparison",
    "plancherel_crosscheck",
    "mp_tolerance",
]


@dataclass(frozen=True)
class SolveConfig:
    cg_tolerance: float = 1e-10
    max_iterations: int = None  # default 10 * n_active
    preconditioner: str = "diagonal"

    def __post_init__(self):
        if not 0.0 < self.cg_tolerance < 1e-2:
            raise ConfigurationError(f"cg_tolerance must lie in (0, 1e-2), got {self.cg_tolerance}")
        if self.max_iterations is not None and int(self.max_iterations) < 1:
            raise ConfigurationError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.preconditioner not in ("none", "diagonal"):
            raise ConfigurationError(f"preconditioner must be 'none' or 'diagonal', got {self.preconditioner!r}")


@dataclass
class SolveReport:
    solution: DiscreteField
    iterations: int
    final_residual: float
    energy_value: float
    norm_report: NormReport
    laxmilgram_ratio: float = None
    residual_history: list = field(default_factory=list)

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "energy_value": self.energy_value,
            "laxmilgram_ratio": self.laxmilgram_ratio,
            "norm_report": self.norm_report.to_dict(),
            "n_active": self.solution.grid.n_active,
        }


def conjugate_gradient(matvec, b, tol=1e-10, maxiter=None, diag=None):
    """Preconditioned CG from a zero initial guess.

    Stops when ||b - A x|| <= tol ||b||.  Returns ``(x, iterations, history)``
    where ``history`` holds relative residuals, starting with 1.

    Raises
    ------
    AssemblyError
        If a search direction has nonpositive curvature.
    NonConvergence
        If ``maxiter`` iterations do not reach the tolerance.
    """
    b = np.asarray(b, dtype=float)
    m = b.size
    maxiter = 10 * m if maxiter is None else int(maxiter)
    x = np.zeros(m)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return x, 0, [0.0]
    r = b.copy()
    z = r / diag if diag is not None else r
    p = z.copy()
    rz = float(np.dot(r, z))
    history = [1.0]
    for it in range(1, maxiter + 1):
        Ap = matvec(p)
        curv = float(np.dot(p, Ap))
        if not curv > 0.0:
            raise AssemblyError(f"nonpositive curvature {curv:.3e} at CG iteration {it}; operator is not SPD")
        alpha = rz / curv
        x += alpha * p
        r -= alpha * Ap
        res = float(np.linalg.norm(r)) / bnorm
        history.append(res)
        if res <= tol:
            return x, it, history
        z = r / diag if diag is not None else r
        rz_new = float(np.dot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NonConvergence(
        f"CG did not reach relative residual {tol:g} in {maxiter} iterations (last {history[-1]:.3e})",
        achieved=history[-1],
        residual_history=history,
    )


def weak_solve(A, h, cfg=SolveConfig()):
    """Solve the discrete weak problem A u = h^n h (exterior value zero).

    The result is the unique minimizer of the discrete energy.
    """
    if not isinstance(A, AssembledOperator):
        raise ConfigurationError("weak_solve needs an AssembledOperator")
    g = A.grid
    rhs = _values(h, g)
    b = g.cell_volume * rhs
    diag = A.diagonal() if cfg.preconditioner == "diagonal" else None
    maxiter = cfg.max_iterations if cfg.max_iterations is not None else 10 * g.n_active
    u, its, hist = conjugate_gradient(A.matvec, b, cfg.cg_tolerance, maxiter, diag)
    nr = norm_report(g, u, A.kernel.order, operator=A)
    l2h = lp_norm(g, rhs, 2)
    return SolveReport(
        solution=DiscreteField(g, u),
        iterations=its,
        final_residual=hist[-1],
        energy_value=energy_from_operator(A, u, rhs),
        norm_report=nr,
        laxmilgram_ratio=(nr.y_s0_norm / l2h) if l2h > 0 else None,
        residual_history=hist,
    )


def direct_solve(A, h):
    """Dense LU solve; independent reference for small grids."""
    g = A.grid
    return DiscreteField(g, np.linalg.solve(A.to_dense(), g.cell_volume * _values(h, g)))


def verify_weak_formulation(A, u, h, trials=20, rng=None):
    """max over random test fields phi of |phi^T A u - h^n <h, phi>| / (||phi|| ||A u||)."""
    rng = np.random.default_rng(0) if rng is None else rng
    g = A.grid
    uv = _values(u, g)
    b = g.cell_volume * _values(h, g)
    Au = A.matvec(uv)
    scale = max(float(np.linalg.norm(Au)), float(np.linalg.norm(b)), 1e-300)
    worst = 0.0
    for _ in range(int(trials)):
        phi = rng.standard_normal(g.n_active)
        defect = abs(float(np.dot(phi, Au - b))) / (float(np.linalg.norm(phi)) * scale)
        worst = max(worst, defect)
    return worst


def mp_tolerance(u):
    """Round-off allowance 1e-8 * max(u) used by the maximum principle checks."""
    return 1e-8 * max(float(np.max(np.abs(u))), 0.0) if np.size(u) else 0.0


def check_maximum_principle(A, h, cfg=SolveConfig()):
    """Solve with a nonnegative source and return ``(min(u), report)``."""
    hv = _values(h, A.grid)
    if np.any(hv < 0):
        raise ConfigurationError("maximum principle check needs a nonnegative source")
    rep = weak_solve(A, hv, cfg)
    return float(rep.solution.values.min()), rep


def check_comparison(A, h1, h2, cfg=SolveConfig(), require_order=True):
    """Solve for both sources and return ``(max(u1 - u2), u1, u2)``.

    ``require_order=False`` skips the h1 <= h2 precondition (negative-path fixtures).
    """
    g = A.grid
    a, b = _values(h1, g), _values(h2, g)
    if require_order and np.any(a > b):
        raise ConfigurationError("comparison check needs h1 <= h2 nodewise")
    u1 = weak_solve(A, a, cfg).solution.values
    u2 = weak_solve(A, b, cfg).solution.values
    return float(np.max(u1 - u2)), u1, u2


def plancherel_crosscheck(A, u, v):
    """Relative gap between u^T A v and the spectral <Q u, Q v> with Q = |xi|^s.

    Requires the pure fractional kernel, zero potential and fields vanishing
    within distance R/4 of the boundary.
    """
    g = A.grid
    if A.kernel.family != "pure_fractional" or not A.kernel.normalized:
        raise ConfigurationError("plancherel_crosscheck needs the pure fractional kernel")
    uv, vv = _values(u, g), _values(v, g)
    far = g.radii > 0.75 * g.R
    if np.any(uv[far] != 0) or np.any(vv[far] != 0):
        raise ConfigurationError("fields must vanish within R/4 of the boundary")
    s = A.kernel.s
    form = A.bilinear(uv, vv) - g.cell_volume * float(np.dot(A.potential_samples * uv, vv))
    spec = spectral_form(g, uv, vv, lambda xi2: xi2**s)
    denom = max(abs(spec), abs(form))
    if denom == 0.0:
        return 0.0
    return abs(form - spec) / denom
