"""Command-line front end.

    optrecovery COMMAND --config PATH [--out DIR] [--grid N] [--seed K] [--trials T]

Exit status is 0 on success, 2 when a mathematical premise fails (or a
``validate``/``verify`` check does not pass) and 1 for I/O and
configuration problems.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import csvio
from .adversary import verify_optimality
from .config import ProblemConfig, compute_error, load_config, operator_matrix, solve
from .errors import PreconditionError, RecoveryError
from .modulus import validate_modulus

COMMANDS = ("validate", "tau", "partition", "recover", "error", "verify", "solve")

EXIT_OK = 0
EXIT_IO = 1
EXIT_PRECONDITION = 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="optrecovery", description="Optimal recovery of solutions of linear equations")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, metavar="PATH", help="JSON problem configuration")
    p.add_argument("--out", default=".", metavar="DIR", help="output directory (created if missing)")
    p.add_argument("--grid", type=int, metavar="N", help="override the quadrature resolution")
    p.add_argument("--seed", type=int, metavar="K", help="override the random seed")
    p.add_argument("--trials", type=int, metavar="T", help="override the number of verification trials")
    return p


def _validate(cfg: ProblemConfig, out: Path) -> int:
    reports = []
    for m in cfg.methods:
        t_max = max(m.domain.diameter, 1e-12)
        reports.append(validate_modulus(m.modulus, grid_size=max(cfg.resolution, 2), t_max=t_max))
    csvio.write_table(out / "validate.csv", *csvio.validation_rows(reports))
    failed = [k for k, r in enumerate(reports) if not r.ok]
    if failed:
        print(f"modulus axioms fail for class(es) {failed}; see validate.csv", file=sys.stderr)
        return EXIT_PRECONDITION
    return EXIT_OK


def _per_class(cfg: ProblemConfig, out: Path, name: str, rows_fn, needs_data=False) -> int:
    data = cfg.data() if needs_data else [None] * len(cfg.classes)
    methods = [c.method for c in cfg.classes if hasattr(c, "method")]
    offset = len(cfg.classes) - len(methods)
    for k, m in enumerate(methods):
        grid = m.domain.build_grid(cfg.resolution)
        args = (m, data[k + offset], grid) if needs_data else (m, grid)
        csvio.write_table(out / f"{name}_{k + offset}.csv", *rows_fn(*args))
    return EXIT_OK


def _verify(cfg: ProblemConfig, out: Path) -> int:
    mat = operator_matrix(cfg)
    report = verify_optimality(mat, cfg.methods, cfg.norm, cfg.psi, trials=cfg.trials, seed=cfg.seed,
                               resolution=cfg.resolution)
    csvio.write_text(out / "verify.csv", report.to_csv())
    if not report.passed:
        bad = sorted({r.clause for r in report.failures()})
        print(f"verification failed for clause(s) {', '.join(bad)}", file=sys.stderr)
        return EXIT_PRECONDITION
    return EXIT_OK


def run(command: str, cfg: ProblemConfig, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    if command == "validate":
        return _validate(cfg, out)
    if command == "tau":
        return _per_class(cfg, out, "tau", csvio.tau_rows)
    if command == "partition":
        return _per_class(cfg, out, "partition", csvio.partition_rows)
    if command == "recover":
        return _per_class(cfg, out, "recovered", csvio.recovered_rows, needs_data=True)
    if command == "error":
        csvio.write_text(out / "error.csv", compute_error(cfg).to_csv())
        return EXIT_OK
    if command == "verify":
        return _verify(cfg, out)
    table, report = solve(cfg)
    csvio.write_table(out / "solution.csv", *table)
    csvio.write_text(out / "error.csv", report.to_csv())
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.grid is not None:
            if args.grid < 2:
                raise ValueError("--grid must be at least 2")
            cfg.resolution = args.grid
        if args.seed is not None:
            cfg.seed = args.seed
        if args.trials is not None:
            if args.trials < 0:
                raise ValueError("--trials must be nonnegative")
            cfg.trials = args.trials
        return run(args.command, cfg, Path(args.out))
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (RecoveryError, OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
