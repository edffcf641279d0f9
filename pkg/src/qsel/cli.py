"""Command-line front end: ``qsel {solve,gen,validate,bench}``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import os
import sys
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .gen import GenSpec, PROCESSES, SLA_CLASSES, TemplateError, format_template, generate_instance, parse_template
from .model import InstanceError, parse_instance, serialize_instance, validate_decomposable, write_instance
from .solve import EnumerationCapExceeded, SolverConfig, Status, solve
from .validation import with_lambda

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_CUTOFF = 0, 1, 2, 3

CSV_COLUMNS = (
    "template", "sla_class", "domain_size", "rep", "seed", "algorithm", "status",
    "opt_penalty", "wall_time_ms", "complete_evaluations", "useless_work",
    "nodes_expanded", "instance_hash",
)

DEFAULT_DOMAINS = (4, 6, 8, 10, 12)
DEFAULT_REPS = 10
FULL_REPS = 100


def _fmt(x: float) -> str:
    return repr(float(x))


def _status_exit(status: Status) -> int:
    if status in (Status.OPTIMAL, Status.FEASIBLE):
        return EXIT_OK
    if status is Status.INFEASIBLE:
        return EXIT_INFEASIBLE
    return EXIT_CUTOFF


def cmd_solve(args) -> int:
    instance = with_lambda(parse_instance(args.instance), args.lam)
    config = SolverConfig(args.alg, args.objective, args.cutoff_ms, args.seed)
    report = solve(instance, config)
    st = report.stats
    print(f"status: {report.status.value}")
    if report.best is not None:
        print(f"penalty: {_fmt(report.opt_penalty)}")
        print(f"qos: s={_fmt(report.best_qos.s)} e={_fmt(report.best_qos.e)}")
        concrete = report.concrete(instance)
        print("assignment: " + " ".join(f"{op}={concrete[op]}" for op in instance.operations))
    if report.all_solutions is not None:
        print(f"solutions: {len(report.all_solutions)}")
    print(f"stats: complete_evaluations={st.complete_evaluations} useless_work={st.useless_work} "
          f"nodes_expanded={st.nodes_expanded} wall_time_ms={st.wall_time_ms:.3f}")
    return _status_exit(report.status)


def _domain_arg(text: str):
    lo, sep, hi = text.partition("-")
    try:
        return (int(lo), int(hi)) if sep else int(lo)
    except ValueError:
        raise argparse.ArgumentTypeError(f"domain size must be N or LO-HI, got {text!r}") from None


def _template_of(args) -> tuple[str, tuple]:
    name, params = parse_template(args.template)
    if args.params:
        _, params = parse_template("x:" + args.params)
    return name, params


def cmd_gen(args) -> int:
    name, params = _template_of(args)
    out = Path(args.out) if args.out else None
    if args.count > 1 and out is not None:
        out.mkdir(parents=True, exist_ok=True)
    for k in range(args.count):
        seed = args.seed + k
        spec = GenSpec(name, params, args.domain, args.sla_class, args.lam, seed, args.max_s, args.max_e)
        instance = generate_instance(spec)
        stem = f"{name}_d{args.domain if isinstance(args.domain, int) else '%d-%d' % args.domain}_{args.sla_class}_s{seed}.json"
        if out is None:
            path = Path(stem)
        elif args.count > 1:
            path = out / stem
        else:
            path = out
        write_instance(instance, path)
        print(f"wrote {path} (seed={seed})")
    return EXIT_OK


def cmd_validate(args) -> int:
    instance = parse_instance(args.instance, check_decomposable=False)
    report = validate_decomposable(instance.graph)
    if report:
        ops = len(instance.operations)
        print(f"ok: {ops} operations, {len(instance.graph.nodes) - ops} connectors, "
              f"search space {instance.search_space()}")
        return EXIT_OK
    for v in report.violations:
        print(v)
    return EXIT_ERROR


@dataclass(frozen=True)
class BenchCell:
    template: str
    params: tuple
    sla_class: str
    domain_size: int
    rep: int
    seed: int
    algorithm: str
    objective: str
    lam: float
    cutoff_ms: float | None


def instance_hash(instance) -> str:
    return hashlib.sha256(serialize_instance(instance).encode()).hexdigest()[:16]


def cell_seed(base: int, template: str, sla_class: str, domain_size: int, rep: int) -> int:
    return zlib.crc32(f"{base}|{template}|{sla_class}|{domain_size}|{rep}".encode())


def run_cell(cell: BenchCell) -> dict:
    """Generate the cell's instance and time one solve (generation excluded)."""
    spec = GenSpec(cell.template, cell.params, cell.domain_size, cell.sla_class, cell.lam, cell.seed)
    instance = generate_instance(spec)
    report = solve(instance, SolverConfig(cell.algorithm, cell.objective, cell.cutoff_ms))
    st = report.stats
    return {
        "template": format_template(cell.template, cell.params),
        "sla_class": cell.sla_class,
        "domain_size": cell.domain_size,
        "rep": cell.rep,
        "seed": cell.seed,
        "algorithm": cell.algorithm,
        "status": report.status.value,
        "opt_penalty": "" if report.opt_penalty is None else _fmt(report.opt_penalty),
        "wall_time_ms": f"{st.wall_time_ms:.6f}",
        "complete_evaluations": st.complete_evaluations,
        "useless_work": st.useless_work,
        "nodes_expanded": st.nodes_expanded,
        "instance_hash": instance_hash(instance),
    }


def plan_cells(templates, classes, domains, reps, algorithms, seed, objective="opt", lam=0.5,
               cutoff_ms=None) -> list[BenchCell]:
    """Every (template, class, size, rep, algorithm); algorithms of a rep share the instance seed."""
    if reps < 1:
        raise ValueError("repetitions must be >= 1")
    if not algorithms:
        raise ValueError("at least one algorithm is required")
    cells = []
    for text in templates:
        name, params = parse_template(text)
        for cls in classes:
            for d in domains:
                for rep in range(reps):
                    s = cell_seed(seed, text, cls, d, rep)
                    for alg in algorithms:
                        cells.append(BenchCell(name, params, cls, d, rep, s, alg, objective, lam, cutoff_ms))
    return cells


def write_rows(rows, out: Path) -> None:
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow(row)


def cmd_bench(args) -> int:
    reps = args.reps if args.reps is not None else (FULL_REPS if args.full else DEFAULT_REPS)
    cells = plan_cells(args.template or ["fig5"], args.sla_class or list(SLA_CLASSES),
                       args.domain or list(DEFAULT_DOMAINS), reps, args.alg or ["exh", "p", "pm"],
                       args.seed, args.objective, args.lam, args.cutoff_ms)
    out = Path(args.out)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        open(out, "a").close()
    except OSError as exc:
        print(f"error: cannot write {out}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    workers = int(os.environ.get("QSEL_WORKERS", "1") or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_cell, cells))
    else:
        rows = [run_cell(c) for c in cells]
    write_rows(rows, out)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsel", description="Exact QoS-aware service selection.")
    sub = p.add_subparsers(dest="command", required=True)

    def solver_flags(sp):
        sp.add_argument("--alg", choices=["exh", "p", "pm"], default="pm")
        sp.add_argument("--objective", choices=["opt", "feas", "all"], default="opt")
        sp.add_argument("--lambda", dest="lam", type=float, default=None)
        sp.add_argument("--cutoff-ms", type=float, default=None)
        sp.add_argument("--seed", type=int, default=None)

    sp = sub.add_parser("solve", help="solve one instance file")
    sp.add_argument("instance")
    solver_flags(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("validate", help="check an instance file")
    sp.add_argument("instance")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("gen", help="generate instance files")
    sp.add_argument("--template", default="fig5",
                    help="seq, fig5, nested, mixed, loopy, random or one of: " + ", ".join(PROCESSES))
    sp.add_argument("--params", default="", help="comma separated template parameters")
    sp.add_argument("--domain", type=_domain_arg, default=4)
    sp.add_argument("--class", dest="sla_class", choices=list(SLA_CLASSES) + ["custom"], default="simple")
    sp.add_argument("--max-s", type=float, default=None)
    sp.add_argument("--max-e", type=float, default=None)
    sp.add_argument("--lambda", dest="lam", type=float, default=0.5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--count", type=int, default=1)
    sp.add_argument("--out", default=None, help="file (count 1) or directory")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("bench", help="run an experiment plan and write CSV")
    sp.add_argument("--template", action="append", help="repeatable; e.g. fig5, seq:5, nested:2,2")
    sp.add_argument("--class", dest="sla_class", action="append", choices=list(SLA_CLASSES))
    sp.add_argument("--domain", type=int, action="append")
    sp.add_argument("--reps", type=int, default=None)
    sp.add_argument("--full", action="store_true", help=f"{FULL_REPS} repetitions per cell")
    sp.add_argument("--alg", action="append", choices=["exh", "p", "pm"])
    sp.add_argument("--objective", choices=["opt", "feas"], default="opt")
    sp.add_argument("--lambda", dest="lam", type=float, default=0.5)
    sp.add_argument("--cutoff-ms", type=float, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default="bench.csv")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InstanceError, TemplateError, EnumerationCapExceeded, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
