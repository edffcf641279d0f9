"""QoS evaluation by elementary-subgraph reduction.

A reduction order is a stack of ``(x, y)`` frontier pairs.  Popping a pair
reduces one elementary subgraph: either a split/join block whose branches are
single units, or two adjacent units of a sequence.  Units are named by their
representative (first operation, or the split of a reduced block), so a
sequence pair may be ``(op, op)``, ``(op, split)``, ``(split, op)`` or
``(split, split)``.

Evaluation replays the order on a vector of per-unit QoS values.  The order is
compiled once per graph into integer slot operations so that the solvers can
evaluate millions of assignments.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from graphlib import TopologicalSorter
from typing import Mapping, Sequence

from .model import (
    Block, Instance, OperationGraph, Op, QosVector, ReducibleGraph, Seq, Tree,
    is_join, is_split,
)

SEQUENCE, FORK, LOOP, XOR, OR = "sequence", "fork", "loop", "xor", "or"
_FAMILY_PATTERN = {"and": FORK, "xor": XOR, "or": OR, "loop": LOOP}


class AggregationError(ValueError):
    pass


class IncompleteAssignmentError(ValueError):
    pass


def aggregate(pattern: str, children: Sequence, params: Sequence[float] = ()) -> QosVector:
    """Combine child QoS vectors according to the pattern's aggregation rule."""
    kids = [tuple(c) for c in children]
    n = len(kids)
    if pattern == SEQUENCE:
        if n != 2:
            raise AggregationError(f"sequence takes 2 children, got {n}")
        (s1, e1), (s2, e2) = kids
        return QosVector(s1 + s2, e1 + e2)
    if pattern == FORK:
        if n < 2:
            raise AggregationError(f"fork takes at least 2 children, got {n}")
        return QosVector(max(s for s, _ in kids), sum(e for _, e in kids))
    if pattern == LOOP:
        if n != 1 or len(params) != 1:
            raise AggregationError("loop takes one child and the mean iteration count")
        (m,) = params
        return QosVector(m * kids[0][0], m * kids[0][1])
    if pattern == XOR:
        if n < 2:
            raise AggregationError(f"xor takes at least 2 children, got {n}")
        if len(params) != n:
            raise AggregationError(f"xor got {len(params)} probabilities for {n} children")
        return QosVector(sum(p * s for p, (s, _) in zip(params, kids)),
                         sum(p * e for p, (_, e) in zip(params, kids)))
    if pattern == OR:
        if n != 2:
            raise AggregationError(f"or takes 2 children, got {n}")
        if len(params) != 3:
            raise AggregationError("or takes (p_or1, p_or2, p_par)")
        p1, p2, pp = params
        (s1, e1), (s2, e2) = kids
        return QosVector(p1 * s1 + p2 * s2 + pp * max(s1, s2),
                         p1 * e1 + p2 * e2 + pp * (e1 + e2))
    raise AggregationError(f"unknown pattern {pattern!r}")


# ---------------------------------------------------------------------------
# Deepness and reachability


def deepness(graph: OperationGraph) -> dict[str, int]:
    """Max over incoming paths of (#splits - #joins) strictly before each node."""
    ts = TopologicalSorter({n: graph.predecessors[n] for n, _ in graph.nodes})
    kind = graph.kind
    depth: dict[str, int] = {}
    for n in ts.static_order():
        best = None
        for p in graph.predecessors[n]:
            k = kind[p]
            d = depth[p] + (1 if is_split(k) else -1 if is_join(k) else 0)
            best = d if best is None else max(best, d)
        depth[n] = 0 if best is None else best
    return depth


def reachability(graph: OperationGraph) -> dict[str, float]:
    """Probability that a request reaches each node."""
    out: dict[str, float] = {}

    def walk(node: Tree, p: float):
        if isinstance(node, Op):
            out[node.id] = p
        elif isinstance(node, Seq):
            for item in node.items:
                walk(item, p)
        else:
            out[node.split] = out[node.join] = p
            if node.family == "xor":
                weights = node.params
            elif node.family == "or":
                p1, p2, pp = node.params
                weights = (p1 + pp, p2 + pp)
            else:
                weights = (1.0,) * len(node.branches)
            for w, br in zip(weights, node.branches):
                walk(br, p * w)

    walk(graph.tree, 1.0)
    return out


# ---------------------------------------------------------------------------
# Reduction orders


@dataclass(frozen=True)
class ReductionOrder:
    """Frontier pairs in pop order: ``pairs[0]`` is the top of the stack."""

    pairs: tuple[tuple[str, str], ...]

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __str__(self):
        return "; ".join(f"({x}, {y})" for x, y in self.pairs)


def pair_case(graph: OperationGraph, pair: tuple[str, str]) -> str:
    """Classify a pair: 'op-op', 'split-join', 'split-op', 'op-split' or 'split-split'."""
    kx, ky = graph.kind[pair[0]], graph.kind[pair[1]]
    x = "split" if is_split(kx) else "op"
    y = "join" if is_join(ky) else "split" if is_split(ky) else "op"
    return f"{x}-{y}"


def _emit(node: Tree, out: list) -> None:
    if isinstance(node, Op):
        return
    if isinstance(node, Block):
        for br in node.branches:
            _emit(br, out)
        out.append((node.split, node.join))
        return
    items = node.items
    for item in reversed(items):
        if isinstance(item, Block):
            _emit(item, out)
    for i in range(len(items) - 2, -1, -1):
        out.append((items[i].rep, items[i + 1].rep))


def order_from_tree(tree: Tree) -> ReductionOrder:
    """Innermost blocks first; sequence pairs right to left."""
    out: list = []
    _emit(tree, out)
    return ReductionOrder(tuple(out))


def compute_reduction_order(graph: OperationGraph) -> ReductionOrder:
    """Reduction order for a decomposable graph (raises NonDecomposableError)."""
    return order_from_tree(graph.tree)


def replay(graph: OperationGraph, order: ReductionOrder, trace: list | None = None) -> ReducibleGraph:
    """Apply every pair of ``order``; each must be elementary when reached.

    ``trace`` collects the node count after each reduction.
    """
    rg = ReducibleGraph(graph)
    for pair in order:
        rg.apply(pair)
        if trace is not None:
            trace.append(len(rg))
    return rg


# ---------------------------------------------------------------------------
# Compiled evaluation


class Evaluator:
    """Replays a reduction order on per-slot QoS arrays.

    Operation ``graph.operations[i]`` lives in slot ``i``; reduced blocks are
    accumulated in the slot of their representative.
    """

    def __init__(self, graph: OperationGraph, order: ReductionOrder | None = None):
        self.graph = graph
        self.order = order if order is not None else compute_reduction_order(graph)
        self.ops = graph.operations
        self.op_slot = {op: i for i, op in enumerate(self.ops)}
        slot = dict(self.op_slot)
        for n, k in graph.nodes:
            if is_split(k):
                slot[n] = len(slot)
        self.n_slots = len(slot)
        rg = ReducibleGraph(graph)
        steps = []
        for x, y in self.order:
            if is_join(rg.kind[y]) and y not in rg.tree:
                kids = tuple(slot[b] for b in rg.succ[x])
                pattern = _FAMILY_PATTERN[graph.kind[x].rsplit("_", 1)[0]]
                steps.append((pattern, slot[x], kids, graph.params(x)))
            else:
                steps.append((SEQUENCE, slot[x], slot[y], None))
            rg.apply((x, y))
        final = rg.result()
        if final is None:
            raise ValueError("reduction order does not reduce the graph to a single node")
        self.steps = tuple(steps)
        self.result_slot = slot[final.rep]

    def run(self, s_vals: Sequence[float], e_vals: Sequence[float]) -> tuple[float, float]:
        """Evaluate with operation QoS given positionally by operation slot."""
        pad = self.n_slots - len(s_vals)
        s = list(s_vals) + [0.0] * pad
        e = list(e_vals) + [0.0] * pad
        for pattern, a, b, params in self.steps:
            if pattern is SEQUENCE:
                s[a] += s[b]
                e[a] += e[b]
            elif pattern is FORK:
                s[a] = max(s[k] for k in b)
                e[a] = sum(e[k] for k in b)
            elif pattern is XOR:
                s[a] = sum(p * s[k] for p, k in zip(params, b))
                e[a] = sum(p * e[k] for p, k in zip(params, b))
            elif pattern is LOOP:
                m = params[0]
                s[a] = m * s[b[0]]
                e[a] = m * e[b[0]]
            else:
                p1, p2, pp = params
                k1, k2 = b
                s1, s2, e1, e2 = s[k1], s[k2], e[k1], e[k2]
                s[a] = p1 * s1 + p2 * s2 + pp * (s1 if s1 > s2 else s2)
                e[a] = p1 * e1 + p2 * e2 + pp * (e1 + e2)
        r = self.result_slot
        return s[r], e[r]


_evaluators: "weakref.WeakKeyDictionary[OperationGraph, Evaluator]" = weakref.WeakKeyDictionary()


def evaluator_for(graph: OperationGraph) -> Evaluator:
    ev = _evaluators.get(graph)
    if ev is None:
        ev = _evaluators[graph] = Evaluator(graph)
    return ev


def _vectors(instance: Instance, f: Mapping[str, int], complete: bool):
    ops = instance.graph.operations
    s = [0.0] * len(ops)
    e = [0.0] * len(ops)
    for i, op in enumerate(ops):
        if op in f and f[op] is not None:
            q = instance.domains[op].candidates[f[op]].qos
            s[i], e[i] = q.s, q.e
        elif complete:
            raise IncompleteAssignmentError(f"operation {op!r} is unassigned")
    return s, e


def evaluate(instance: Instance, f: Mapping[str, int]) -> QosVector:
    """QoS of the composition under a complete assignment (op -> candidate index)."""
    s, e = _vectors(instance, f, complete=True)
    return QosVector(*evaluator_for(instance.graph).run(s, e))


def evaluate_partial(instance: Instance, f: Mapping[str, int]) -> QosVector:
    """Lower bound on the QoS of every completion of ``f``.

    Unassigned operations contribute (0, 0); all aggregation rules are monotone
    in nonnegative child QoS, so the result never exceeds any completion.
    """
    s, e = _vectors(instance, f, complete=False)
    return QosVector(*evaluator_for(instance.graph).run(s, e))
