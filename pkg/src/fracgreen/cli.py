"""Command-line entry point.

    fracgreen solve --config run.ini [--out DIR] [--seed N]
    fracgreen fundamental --config run.ini [--out DIR] [--seed N]
    fracgreen verify SUITE --config run.ini [--out DIR] [--seed N]

Exit codes: 0 success, 1 configuration or validation error, 2 numerical failure.
"""
import argparse
import dataclasses
import logging
import os
import sys

import numpy as np

from .config import parse_config
from .discretization import DiscreteField, assemble, build_grid, read_field_csv
from .errors import ConfigurationError, DomainError, NonConvergence, NumericFailure, StageFailure
from .fundamental import Mollifier, radial_profile, run_exhaustion, sample_mollifier
from .io import envelope, write_csv, write_json
from .solver import weak_solve
from .verify import SUITES, run_suite

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; usage errors are configuration errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_CONFIG)


def build_parser():
    p = _Parser(prog="fracgreen", description="Fundamental solutions of nonlocal Schrodinger operators.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("solve", "fundamental", "verify"):
        sp = sub.add_parser(name)
        if name == "verify":
            sp.add_argument("suite")
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", default=None)
        sp.add_argument("--seed", type=int, default=None)
    return p


def _config_echo(cfg):
    return {"source": cfg.source_path, "sections": cfg.raw}


def _field_csv(path, field_):
    g = field_.grid
    rows = [list(x) + [v] for x, v in zip(g.coords, field_.values)]
    write_csv(path, [f"x{a}" for a in range(g.n)] + ["value"], rows)


def _rhs(cfg, g):
    r = cfg.rhs
    if r.kind == "mollifier":
        return sample_mollifier(Mollifier(r.l), g)
    if r.kind == "constant":
        return DiscreteField(g, np.full(g.n_active, r.value))
    if not os.path.exists(r.path):
        raise ConfigurationError(f"[rhs] path {r.path} does not exist")
    return read_field_csv(r.path, g)


def cmd_solve(cfg, out):
    g = build_grid(cfg.n, cfg.R, cfg.N_side)
    f = _rhs(cfg, g)
    A = assemble(cfg.kernel, cfg.potential, g)
    base = {"config": _config_echo(cfg), "n_active": g.n_active, "N_side": g.N_side, "h": g.h}
    try:
        rep = weak_solve(A, f, cfg.solver)
    except NonConvergence as exc:
        write_csv(os.path.join(out, "residual_history.csv"), ["iteration", "relative_residual"],
                  list(enumerate(exc.residual_history)))
        write_json(os.path.join(out, "solve_report.json"),
                   envelope("solve_report", {**base, "status": "failed", "message": str(exc),
                                             "final_residual": exc.achieved}, cfg.seed))
        raise
    _field_csv(os.path.join(out, "solution.csv"), rep.solution)
    write_json(os.path.join(out, "solve_report.json"),
               envelope("solve_report", {**base, "status": "converged", **rep.to_dict()}, cfg.seed))
    return EXIT_OK


def _write_fundamental(out, cfg, rep, status):
    payload = {"config": _config_echo(cfg), "status": status, **rep.to_dict()}
    if rep.decay_fit is not None:
        target = -cfg.kernel.order.decay_exponent
        payload["decay_target"] = target
        payload["decay_within_window"] = abs(rep.decay_fit.slope - target) <= 0.15
    write_json(os.path.join(out, "fundamental_report.json"), envelope("fundamental_report", payload, cfg.seed))
    rows = []
    for st in rep.stages:
        d = st.diagnostics
        for row in d["rows"]:
            rows.append([st.index, st.radius, st.scale, *row["center"], row["r"], row["lp_norm"], row["l1_V_norm"],
                         row["l1_V_over_Vq"], row["wgp_seminorm"], d["pointwise_bound_constant"]])
    hdr = ["stage", "radius", "scale", *[f"c{a}" for a in range(cfg.n)], "r", "lp_norm", "l1_V_norm",
           "l1_V_over_Vq", "wgp_seminorm", "pointwise_bound_constant"]
    write_csv(os.path.join(out, "lemma58_diagnostics.csv"), hdr, rows)
    if rep.final_field is not None:
        prof = radial_profile(rep.final_field, 0.0, rep.final_field.grid.R, 64)
        write_csv(os.path.join(out, "radial_profile.csv"), ["r", "mean_value", "count"], prof)


def cmd_fundamental(cfg, out):
    if cfg.schedule is None:
        raise ConfigurationError("fundamental needs a [schedule] section")
    try:
        rep = run_exhaustion(cfg.kernel, cfg.potential, cfg.schedule, cfg.solver, cfg.diagnostics,
                             cfg.fit_window, cfg.n_shells)
    except StageFailure as exc:
        if exc.partial_report is not None:
            _write_fundamental(out, cfg, exc.partial_report, "failed")
        raise
    _write_fundamental(out, cfg, rep, "completed")
    return EXIT_OK


def cmd_verify(cfg, out, suite):
    checks = run_suite(suite, cfg)
    failed = [c for c in checks if not c.passed]
    payload = {
        "suite": suite,
        "config": _config_echo(cfg),
        "n_checks": len(checks),
        "n_failed": len(failed),
        "passed": not failed,
        "checks": [c.to_dict() for c in checks],
    }
    write_json(os.path.join(out, "verify_summary.json"), envelope("verify_summary", payload, cfg.seed))
    for c in failed:
        msg = c.message or f"{c.anchor} check failed: measured {c.measured!r}, threshold {c.threshold!r}"
        sys.stderr.write(f"FAIL {c.suite}/{c.check} [{c.anchor}]: {msg}\n")
    return EXIT_OK if not failed else EXIT_NUMERIC


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify" and args.suite not in SUITES:
            raise ConfigurationError(f"unknown suite {args.suite!r}; valid suites: {', '.join(SUITES)}")
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        out = cfg.resolved_output_dir(args.out)
        os.makedirs(out, exist_ok=True)
        if args.command == "solve":
            return cmd_solve(cfg, out)
        if args.command == "fundamental":
            return cmd_fundamental(cfg, out)
        return cmd_verify(cfg, out, args.suite)
    except (ConfigurationError, DomainError) as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_CONFIG
    except StageFailure as exc:
        sys.stderr.write(f"stage {exc.stage} failed: {exc}\n")
        return EXIT_NUMERIC
    except NumericFailure as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
