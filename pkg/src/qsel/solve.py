"""Exact service selection: exhaustive search, backtracking, feasibility and
all-solutions enumeration.

Assignments map each abstract operation to the index of its chosen candidate.
"""

from __future__ import annotations

import enum
import itertools
import math
import random
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

from .model import Instance, QosVector, penalty
from .order import build_nels, build_nels_plus, generate_nelo, mdf_sort
from .reduce import Evaluator, compute_reduction_order, evaluate

DEFAULT_ENUMERATION_CAP = 10 ** 7


class Algorithm(str, enum.Enum):
    EXHAUSTIVE = "exh"
    BACKTRACK_P = "p"
    BACKTRACK_PM = "pm"


class Objective(str, enum.Enum):
    OPTIMIZE = "opt"
    FEASIBILITY = "feas"
    ALL_SOLUTIONS = "all"


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    CUTOFF = "CutoffReached"


class EnumerationCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    algorithm: Algorithm = Algorithm.BACKTRACK_PM
    objective: Objective = Objective.OPTIMIZE
    cutoff_ms: float | None = None
    seed: int | None = None
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        object.__setattr__(self, "objective", Objective(self.objective))
        if self.cutoff_ms is not None and not self.cutoff_ms > 0:
            raise ValueError(f"cutoff_ms must be > 0, got {self.cutoff_ms!r}")


@dataclass
class SolveStats:
    complete_evaluations: int = 0
    useless_work: int = 0
    nodes_expanded: int = 0
    wall_time_ms: float = 0.0


@dataclass
class SolveReport:
    status: Status
    best: dict[str, int] | None = None
    opt_penalty: float | None = None
    best_qos: QosVector | None = None
    stats: SolveStats = field(default_factory=SolveStats)
    all_solutions: list[dict[str, int]] | None = None

    def concrete(self, instance: Instance) -> dict[str, str] | None:
        """Best assignment as concrete candidate ids."""
        if self.best is None:
            return None
        return {op: instance.domains[op].candidates[i].id for op, i in self.best.items()}


class _Cutoff(Exception):
    pass


class _Found(Exception):
    pass


class _Search:
    """Shared incumbent and counters for one solve."""

    def __init__(self, instance: Instance, config: SolverConfig):
        self.instance = instance
        self.sla = instance.sla
        self.config = config
        self.best: dict[str, int] | None = None
        self.opt = math.inf
        self.evaluations = 0
        self.improvements = 0
        self.expanded = 0
        self.start = time.perf_counter()
        self.deadline = None if config.cutoff_ms is None else self.start + config.cutoff_ms / 1000.0
        self.stop_at_first = config.objective is Objective.FEASIBILITY

    def tick(self):
        if self.deadline is not None and time.perf_counter() > self.deadline:
            raise _Cutoff

    def leaf(self, s: float, e: float, f: Callable[[], dict[str, int]]):
        self.evaluations += 1
        if s <= self.sla.max_s and e <= self.sla.max_e:
            pen = self.sla.lam * s + (1.0 - self.sla.lam) * e
            if pen < self.opt:
                self.opt = pen
                self.best = f()
                self.improvements += 1
                if self.stop_at_first:
                    raise _Found

    def report(self, cut: bool) -> SolveReport:
        stats = SolveStats(self.evaluations, self.evaluations - self.improvements, self.expanded,
                           (time.perf_counter() - self.start) * 1000.0)
        if self.best is None:
            status = Status.CUTOFF if cut else Status.INFEASIBLE
            return SolveReport(status, stats=stats)
        qos = evaluate(self.instance, self.best)
        if cut:
            status = Status.CUTOFF
        elif self.stop_at_first:
            status = Status.FEASIBLE
        else:
            status = Status.OPTIMAL
        return SolveReport(status, dict(self.best), penalty(qos, self.sla.lam), qos, stats)


def candidate_orders(instance: Instance, ops, seed: int | None) -> list[list[int]]:
    """Candidate iteration order per operation: file order, or shuffled by seed."""
    rng = random.Random(seed) if seed is not None else None
    out = []
    for op in ops:
        idx = list(range(len(instance.domains[op])))
        if rng is not None:
            rng.shuffle(idx)
        out.append(idx)
    return out


def _expanded_nodes(leaves: int, sizes: list[int]) -> int:
    """Internal nodes of the lexicographic search tree touched by the first ``leaves`` leaves."""
    total, below = 0, 1
    for d in reversed(sizes):
        below *= d
        total += -(-leaves // below)
    return total


def solve_exhaustive(instance: Instance, config: SolverConfig | None = None) -> SolveReport:
    """Enumerate every complete assignment in domain order and keep the best."""
    config = config or SolverConfig(algorithm=Algorithm.EXHAUSTIVE)
    search = _Search(instance, config)
    ops = instance.operations
    ev = Evaluator(instance.graph)
    orders = candidate_orders(instance, ops, config.seed)
    qos = [[(c.qos.s, c.qos.e) for c in instance.domains[op].candidates] for op in ops]
    sizes = [len(o) for o in orders]
    n = len(ops)
    s_vals = [0.0] * n
    e_vals = [0.0] * n
    cut = False
    try:
        for k, choice in enumerate(itertools.product(*orders)):
            if not k & 1023:
                search.tick()
            for i, c in enumerate(choice):
                s_vals[i], e_vals[i] = qos[i][c]
            s, e = ev.run(s_vals, e_vals)
            search.leaf(s, e, lambda: dict(zip(ops, choice)))
    except _Cutoff:
        cut = True
    except _Found:
        pass
    search.expanded = _expanded_nodes(search.evaluations, sizes)
    return search.report(cut)


def _prepare(instance: Instance, use_mdf: bool, seed: int | None):
    graph = instance.graph
    if use_mdf:
        rng = random.Random(seed) if seed is not None else None
        graph = mdf_sort(graph, build_nels_plus(graph), instance.domains, rng)
    order = compute_reduction_order(graph)
    nelo = generate_nelo(graph, order, build_nels(graph))
    return graph, order, nelo


def solve_backtrack(instance: Instance, config: SolverConfig | None = None,
                    on_prune: Callable[[dict[str, int]], None] | None = None) -> SolveReport:
    """Depth-first assignment in NeLO order with partial-evaluation pruning.

    After an entry that carries reductions, the zero-padded partial QoS is a
    lower bound on every completion; the subtree is cut when it violates an
    SLA bound or cannot beat the incumbent penalty.  ``on_prune`` receives
    each pruned partial assignment (for instrumentation).
    """
    config = config or SolverConfig()
    search = _Search(instance, config)
    use_mdf = config.algorithm is Algorithm.BACKTRACK_PM
    graph, order, nelo = _prepare(instance, use_mdf, config.seed)
    ev = Evaluator(graph, order)
    slot = ev.op_slot
    var_ops = nelo.operations
    n = len(var_ops)
    slots = [slot[op] for op in var_ops]
    checks = [bool(e.reductions) for e in nelo.entries]
    orders = candidate_orders(instance, var_ops, config.seed)
    qos = [[(c.qos.s, c.qos.e) for c in instance.domains[op].candidates] for op in var_ops]
    max_s, max_e, lam = instance.sla.max_s, instance.sla.max_e, instance.sla.lam
    s_vals = [0.0] * len(graph.operations)
    e_vals = [0.0] * len(graph.operations)
    f = [0] * n

    def snapshot(upto: int) -> dict[str, int]:
        return {var_ops[i]: f[i] for i in range(upto)}

    def backtrack(index: int):
        if index == n:
            s, e = ev.run(s_vals, e_vals)
            search.leaf(s, e, lambda: snapshot(n))
            return
        search.tick()
        search.expanded += 1
        sl = slots[index]
        cands = qos[index]
        check = checks[index]
        for c in orders[index]:
            f[index] = c
            s_vals[sl], e_vals[sl] = cands[c]
            if check:
                s, e = ev.run(s_vals, e_vals)
                if s > max_s or e > max_e or lam * s + (1.0 - lam) * e >= search.opt:
                    if on_prune is not None:
                        on_prune(snapshot(index + 1))
                    continue
            backtrack(index + 1)
        s_vals[sl] = e_vals[sl] = 0.0

    cut = False
    try:
        backtrack(0)
    except _Cutoff:
        cut = True
    except _Found:
        pass
    return search.report(cut)


def solve_feasibility(instance: Instance, config: SolverConfig | None = None) -> SolveReport:
    """Stop at the first SLA-satisfying complete assignment."""
    config = replace(config or SolverConfig(), objective=Objective.FEASIBILITY)
    if config.algorithm is Algorithm.EXHAUSTIVE:
        return solve_exhaustive(instance, config)
    return solve_backtrack(instance, config)


def solve_all_solutions(instance: Instance, config: SolverConfig | None = None) -> SolveReport:
    """Every SLA-satisfying complete assignment, plus the min-penalty one.

    Plain enumeration with the whole-graph evaluator; independent of the
    backtracking machinery so it can serve as an oracle.
    """
    config = config or SolverConfig(objective=Objective.ALL_SOLUTIONS)
    if instance.search_space() > config.enumeration_cap:
        raise EnumerationCapExceeded(
            f"search space {instance.search_space()} exceeds cap {config.enumeration_cap}")
    start = time.perf_counter()
    ops = instance.operations
    sla = instance.sla
    solutions = []
    best, best_pen, best_qos = None, math.inf, None
    count = improvements = 0
    for choice in itertools.product(*(range(len(instance.domains[op])) for op in ops)):
        f = dict(zip(ops, choice))
        q = evaluate(instance, f)
        count += 1
        if sla.satisfied_by(q):
            solutions.append(f)
            pen = penalty(q, sla.lam)
            if pen < best_pen:
                best, best_pen, best_qos = f, pen, q
                improvements += 1
    stats = SolveStats(count, count - improvements, 0, (time.perf_counter() - start) * 1000.0)
    if best is None:
        return SolveReport(Status.INFEASIBLE, stats=stats, all_solutions=solutions)
    return SolveReport(Status.OPTIMAL, best, best_pen, best_qos, stats, solutions)


def solve(instance: Instance, config: SolverConfig | None = None) -> SolveReport:
    config = config or SolverConfig()
    if config.objective is Objective.ALL_SOLUTIONS:
        return solve_all_solutions(instance, config)
    if config.objective is Objective.FEASIBILITY:
        return solve_feasibility(instance, config)
    if config.algorithm is Algorithm.EXHAUSTIVE:
        return solve_exhaustive(instance, config)
    return solve_backtrack(instance, config)
