"""Experiment configuration: a sectioned key = value text file.

Grammar (INI style, parsed by :mod:`configparser`)::

    [kernel]       s, family (pure_fractional | modulated), lambda, Lambda, modulation
    [potential]    kind (zero | constant | inverse_power | tabulated), value, beta, q,
                   radii, values            # comma-separated lists for tabulated
    [grid]         n, R, N_side
    [solver]       tolerance, max_iterations, preconditioner (none | diagonal)
    [rhs]          kind (mollifier | constant | tabulated), l, value, path
    [schedule]     radii, scales, h, n_sides
    [fit]          r_min, r_max, n_shells
    [diagnostics]  p, gamma, radii, centers   # centers: "x,y; x,y"
    [verify]       samples, negate_ordering
    [run]          seed, output_dir

Lines starting with ``#`` or ``;`` are comments.  Every constraint on the
parameters is checked at parse time and reported as a ConfigurationError.
"""
from dataclasses import dataclass, field
import configparser
import math
import os
from pathlib import Path

from .errors import ConfigurationError
from .fundamental import DiagnosticParams, ExhaustionSchedule
from .kernel import FractionalOrder, Kernel, Potential
from .solver import SolveConfig

__all__ = ["ExperimentConfig", "RhsSpec", "parse_config", "parse_config_string", "OUTPUT_ENV"]

#: Environment variable overriding the output directory.
OUTPUT_ENV = "FRACGREEN_OUT"

_KEYS = {
    "kernel": {"s", "family", "lambda", "Lambda", "modulation"},
    "potential": {"kind", "value", "beta", "q", "radii", "values"},
    "grid": {"n", "R", "N_side"},
    "solver": {"tolerance", "max_iterations", "preconditioner"},
    "rhs": {"kind", "l", "value", "path"},
    "schedule": {"radii", "scales", "h", "n_sides"},
    "fit": {"r_min", "r_max", "n_shells"},
    "diagnostics": {"p", "gamma", "radii", "centers"},
    "verify": {"samples", "negate_ordering"},
    "run": {"seed", "output_dir"},
}
_SECTIONS = set(_KEYS)


@dataclass(frozen=True)
class RhsSpec:
    kind: str = "constant"
    value: float = 1.0
    l: float = 4.0
    path: str = None


@dataclass
class ExperimentConfig:
    kernel: Kernel
    potential: Potential
    n: int
    R: float = 1.0
    N_side: int = 33
    solver: SolveConfig = field(default_factory=SolveConfig)
    rhs: RhsSpec = field(default_factory=RhsSpec)
    schedule: ExhaustionSchedule = None
    fit_window: tuple = None
    n_shells: int = 8
    diagnostics: DiagnosticParams = field(default_factory=DiagnosticParams)
    seed: int = 0
    output_dir: str = "."
    verify_samples: int = 20
    negate_ordering: bool = False
    source_path: str = None
    raw: dict = field(default_factory=dict)

    @property
    def order(self):
        return self.kernel.order

    def resolved_output_dir(self, override=None):
        if override:
            return override
        return os.environ.get(OUTPUT_ENV) or self.output_dir


def _floats(text):
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _get(sec, key, conv, default):
    if sec is None or key not in sec:
        return default
    raw = sec[key].strip()
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigurationError(f"[{sec.name}] {key} = {raw!r}: {exc}") from None


def _bool(text):
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError("expected an integer")
    return int(v)


def parse_config_string(text, base_dir="."):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"config syntax error: {exc}") from None
    unknown = set(cp.sections()) - _SECTIONS
    if unknown:
        raise ConfigurationError(f"unknown config sections: {sorted(unknown)}")
    for name in cp.sections():
        extra = set(cp[name]) - _KEYS[name]
        if extra:
            raise ConfigurationError(f"unknown keys in [{name}]: {sorted(extra)}")
    sec = {name: (cp[name] if cp.has_section(name) else None) for name in _SECTIONS}

    n = _get(sec["grid"], "n", _int, 2)
    s = _get(sec["kernel"], "s", float, 0.5)
    if not 0.0 < s < 1.0:
        raise ConfigurationError(f"constraint s in (0,1) violated: s = {s}")
    if n < 2:
        raise ConfigurationError(f"constraint n >= 2 violated: n = {n}")
    order = FractionalOrder(s, n)
    lam = _get(sec["kernel"], "lambda", float, 1.0)
    Lam = _get(sec["kernel"], "Lambda", float, max(1.0, lam))
    if not lam <= Lam:
        raise ConfigurationError(f"constraint lambda <= Lambda violated: lambda = {lam}, Lambda = {Lam}")
    kernel = Kernel(
        order, lam, Lam,
        family=_get(sec["kernel"], "family", str, "pure_fractional"),
        modulation=_get(sec["kernel"], "modulation", str, "axis"),
    )

    pk = _get(sec["potential"], "kind", str, "zero")
    potential = Potential(
        kind=pk,
        value=_get(sec["potential"], "value", float, 0.0),
        beta=_get(sec["potential"], "beta", float, None),
        radii=_get(sec["potential"], "radii", _floats, ()),
        values=_get(sec["potential"], "values", _floats, ()),
        q=_get(sec["potential"], "q", float, math.inf),
    )
    if pk != "zero" and not potential.q > n / (2 * s):
        raise ConfigurationError(f"constraint q > n/(2s) violated: q = {potential.q}, n/(2s) = {n / (2 * s):g}")
    potential.validate(order)

    solver = SolveConfig(
        cg_tolerance=_get(sec["solver"], "tolerance", float, 1e-10),
        max_iterations=_get(sec["solver"], "max_iterations", _int, None),
        preconditioner=_get(sec["solver"], "preconditioner", str, "diagonal"),
    )

    rhs_kind = _get(sec["rhs"], "kind", str, "constant")
    if rhs_kind not in ("mollifier", "constant", "tabulated"):
        raise ConfigurationError(f"[rhs] kind must be mollifier, constant or tabulated, got {rhs_kind!r}")
    rhs_path = _get(sec["rhs"], "path", str, None)
    if rhs_path is not None and not os.path.isabs(rhs_path):
        rhs_path = str(Path(base_dir) / rhs_path)
    if rhs_kind == "tabulated" and rhs_path is None:
        raise ConfigurationError("[rhs] kind = tabulated needs a path")
    rhs = RhsSpec(rhs_kind, _get(sec["rhs"], "value", float, 1.0), _get(sec["rhs"], "l", float, 4.0), rhs_path)

    schedule = None
    if sec["schedule"] is not None:
        schedule = ExhaustionSchedule(
            radii=_get(sec["schedule"], "radii", _floats, ()),
            scales=_get(sec["schedule"], "scales", _floats, ()),
            h=_get(sec["schedule"], "h", float, None),
            n_sides=_get(sec["schedule"], "n_sides", lambda t: tuple(int(v) for v in _floats(t)), None),
        )

    fit_window = None
    if sec["fit"] is not None and ("r_min" in sec["fit"] or "r_max" in sec["fit"]):
        fit_window = (_get(sec["fit"], "r_min", float, None), _get(sec["fit"], "r_max", float, None))
        if None in fit_window:
            raise ConfigurationError("[fit] needs both r_min and r_max")

    p = _get(sec["diagnostics"], "p", float, 1.0)
    gamma = _get(sec["diagnostics"], "gamma", float, 0.5 * s)
    if not 0.0 < gamma < s:
        raise ConfigurationError(f"constraint gamma in (0,s) violated: gamma = {gamma}, s = {s}")
    if not 1.0 <= p < n / (n - 2 * s):
        raise ConfigurationError(f"constraint 1 <= p < n/(n-2s) violated: p = {p}, n/(n-2s) = {n / (n - 2 * s):g}")
    wgp = p < n / (n - s)
    centers = ((0.0,) * n,)
    if sec["diagnostics"] is not None and "centers" in sec["diagnostics"]:
        centers = tuple(_floats(c) for c in sec["diagnostics"]["centers"].split(";") if c.strip())
        if any(len(c) != n for c in centers):
            raise ConfigurationError(f"[diagnostics] centers must have {n} coordinates each")
    diag = DiagnosticParams(
        p=p, gamma=gamma,
        radii=_get(sec["diagnostics"], "radii", _floats, (0.5, 1.0, 2.0)),
        centers=centers, wgp=wgp,
    )

    cfg = ExperimentConfig(
        kernel=kernel,
        potential=potential,
        n=n,
        R=_get(sec["grid"], "R", float, 1.0),
        N_side=_get(sec["grid"], "N_side", _int, 33),
        solver=solver,
        rhs=rhs,
        schedule=schedule,
        fit_window=fit_window,
        n_shells=_get(sec["fit"], "n_shells", _int, 8),
        diagnostics=diag,
        seed=_get(sec["run"], "seed", _int, 0),
        output_dir=_get(sec["run"], "output_dir", str, "."),
        verify_samples=_get(sec["verify"], "samples", _int, 20),
        negate_ordering=_get(sec["verify"], "negate_ordering", _bool, False),
        raw={name: dict(cp[name]) for name in cp.sections()},
    )
    if cfg.n not in (2, 3):
        raise ConfigurationError(f"constraint n in {{2,3}} for grids violated: n = {cfg.n}")
    if not cfg.R > 0:
        raise ConfigurationError(f"constraint R > 0 violated: R = {cfg.R}")
    if cfg.N_side < 3:
        raise ConfigurationError(f"constraint N_side >= 3 violated: N_side = {cfg.N_side}")
    return cfg


def parse_config(path):
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    cfg = parse_config_string(text, base_dir=str(p.parent))
    cfg.source_path = str(p)
    return cfg
