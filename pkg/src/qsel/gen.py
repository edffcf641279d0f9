"""Random instances and parametric process templates.

Candidate QoS follows the experimental protocol: response time uniform over
the integers 1..1500 and energy ``p * s`` with ``p`` uniform over 100..150.
"""

from __future__ import annotations

import random
import zlib
from dataclasses import dataclass
from typing import Sequence

from .model import (
    Block, Candidate, Domain, Instance, Op, OperationGraph, QosVector, Seq, Sla, Tree,
)

SLA_CLASSES = {
    "simple": (3500.0, 7000.0),
    "medium": (3000.0, 5500.0),
    "hard": (2700.0, 4000.0),
}

S_RANGE = (1, 1500)
POWER_RANGE = (100, 150)
LOOP_RANGE = (1, 3)

# Stand-ins for the benchmark processes: same operation counts, random topology
# fixed by the process name.
PROCESSES = {
    "shipment": 8,
    "procurement": 8,
    "disbursement": 9,
    "meal": 7,
    "motif": 15,
    "genelife2": 11,
}


class TemplateError(ValueError):
    pass


class _Builder:
    def __init__(self, rng: random.Random | None = None):
        self.rng = rng or random.Random(0)
        self.n_ops = 0
        self.n_blocks = 0

    def op(self) -> Op:
        self.n_ops += 1
        return Op(f"u{self.n_ops}")

    def seq(self, items: Sequence[Tree]) -> Tree:
        flat = []
        for it in items:
            flat.extend(it.items if isinstance(it, Seq) else (it,))
        return flat[0] if len(flat) == 1 else Seq(tuple(flat))

    def block(self, fam: str, branches: Sequence[Tree], params: tuple | None = None) -> Block:
        self.n_blocks += 1
        k = self.n_blocks
        n = len(branches)
        if params is None:
            if fam == "xor":
                params = tuple(1.0 / n for _ in range(n))
            elif fam == "or":
                params = (1.0 / 3, 1.0 / 3, 1.0 / 3)
            elif fam == "loop":
                params = (float(self.rng.randint(*LOOP_RANGE)),)
            else:
                params = ()
        return Block(fam, f"s{k}", f"j{k}", tuple(branches), params)


def graph_of(tree: Tree) -> OperationGraph:
    """Flatten a block tree into an operations graph."""
    nodes: list[tuple[str, str]] = []
    edges: list[tuple[str, str]] = []
    xor, orp, loops = {}, {}, {}

    def wire(node: Tree) -> tuple[str, str]:
        if isinstance(node, Op):
            nodes.append((node.id, "operation"))
            return node.id, node.id
        if isinstance(node, Seq):
            ends = [wire(i) for i in node.items]
            for (_, a), (b, _) in zip(ends, ends[1:]):
                edges.append((a, b))
            return ends[0][0], ends[-1][1]
        nodes.append((node.split, f"{node.family}_split"))
        for br in node.branches:
            a, b = wire(br)
            edges.append((node.split, a))
            edges.append((b, node.join))
        nodes.append((node.join, f"{node.family}_join"))
        if node.family == "xor":
            xor[node.split] = node.params
        elif node.family == "or":
            orp[node.split] = node.params
        elif node.family == "loop":
            loops[node.split] = node.params[0]
        return node.split, node.join

    wire(tree)
    return OperationGraph(tuple(nodes), tuple(edges), xor, orp, loops)


def fig5_graph() -> OperationGraph:
    """A -> AND{ B -> XOR{C, D} ; E } -> F, with uniform XOR routing."""
    inner = Block("xor", "g3", "g4", (Op("C"), Op("D")), (0.5, 0.5))
    outer = Block("and", "g1", "g2", (Seq((Op("B"), inner)), Op("E")))
    return graph_of(Seq((Op("A"), outer, Op("F"))))


def _seq(b: _Builder, k: int) -> Tree:
    if k < 1:
        raise TemplateError("seq needs k >= 1")
    return b.seq([b.op() for _ in range(k)])


def _nested(b: _Builder, depth: int, width: int) -> Tree:
    if depth < 0 or width < 2:
        raise TemplateError("nested needs depth >= 0 and width >= 2")
    if depth == 0:
        return b.op()
    head = b.op()
    inner = _nested(b, depth - 1, width)
    others = [b.op() for _ in range(width - 1)]
    fam = "and" if depth % 2 else "xor"
    return b.block(fam, [b.seq([head, inner])] + others)


def _mixed(b: _Builder, k: int) -> Tree:
    """Sequence of random pattern blocks holding exactly ``k`` operations."""
    if k < 1:
        raise TemplateError("mixed needs k >= 1")
    rng = b.rng
    parts: list[Tree] = []
    left = k
    while left:
        choices = ["loop", "op"] if left == 1 else ["sequence", "and", "xor", "or", "loop"]
        pat = rng.choice(choices)
        if pat == "op":
            parts.append(b.op())
            left -= 1
        elif pat == "loop":
            parts.append(b.block("loop", [b.op()]))
            left -= 1
        elif pat == "sequence":
            parts.append(b.seq([b.op(), b.op()]))
            left -= 2
        elif pat == "or":
            parts.append(b.block("or", [b.op(), b.op()]))
            left -= 2
        else:
            n = rng.randint(2, min(3, left))
            parts.append(b.block(pat, [b.op() for _ in range(n)]))
            left -= n
    return b.seq(parts)


def _loopy(b: _Builder, k: int, m: float) -> Tree:
    if k < 1 or m < 0:
        raise TemplateError("loopy needs k >= 1 and m >= 0")
    parts = []
    for i in range(k):
        parts.append(b.block("loop", [b.op()], (float(m),)) if i % 2 else b.op())
    return b.seq(parts)


def _random(b: _Builder, n: int, width: int = 2) -> Tree:
    """Random decomposable graph with ``n`` operations and splits of degree <= width."""
    if n < 1 or width < 2:
        raise TemplateError("random needs n >= 1 and width >= 2")
    rng = b.rng

    def split_count(total: int, parts: int) -> list[int]:
        cuts = sorted(rng.sample(range(1, total), parts - 1))
        return [hi - lo for lo, hi in zip([0] + cuts, cuts + [total])]

    def build(n: int) -> Tree:
        if n == 1:
            return b.block("loop", [b.op()]) if rng.random() < 0.15 else b.op()
        r = rng.random()
        if r < 0.4:
            return b.seq([build(c) for c in split_count(n, rng.randint(2, min(3, n)))])
        fam = rng.choice(["and", "xor", "or"] if width >= 2 else ["and"])
        k = 2 if fam == "or" else rng.randint(2, min(width, n))
        return b.block(fam, [build(c) for c in split_count(n, k)])

    return build(n)


def template(name: str, params: Sequence = (), rng: random.Random | None = None) -> OperationGraph:
    """Build a named template graph.

    Built-ins: ``seq(k)``, ``fig5``, ``nested(d, b)``, ``mixed(k)`` (k = operation
    count), ``loopy(k, m)``, ``random(n, b)`` and the process stand-ins listed in
    :data:`PROCESSES`.
    """
    params = tuple(params)
    try:
        if name == "fig5":
            if params:
                raise TemplateError("fig5 takes no parameters")
            return fig5_graph()
        if name in PROCESSES:
            if params:
                raise TemplateError(f"{name} takes no parameters")
            b = _Builder(random.Random(zlib.crc32(name.encode())))
            return graph_of(_mixed(b, PROCESSES[name]))
        b = _Builder(rng)
        if name == "seq":
            (k,) = params
            return graph_of(_seq(b, int(k)))
        if name == "nested":
            d, w = params
            return graph_of(_nested(b, int(d), int(w)))
        if name == "mixed":
            (k,) = params
            return graph_of(_mixed(b, int(k)))
        if name == "loopy":
            k, m = params
            return graph_of(_loopy(b, int(k), float(m)))
        if name == "random":
            n, w = params if len(params) == 2 else (params[0], 2)
            return graph_of(_random(b, int(n), int(w)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, TemplateError):
            raise
        raise TemplateError(f"invalid parameters {params!r} for template {name!r}") from None
    raise TemplateError(f"unknown template {name!r}")


def parse_template(text: str) -> tuple[str, tuple]:
    """``'nested:2,2'`` -> ``('nested', (2, 2))``."""
    name, _, rest = text.partition(":")
    params = tuple(_number(p) for p in rest.split(",") if p.strip()) if rest else ()
    return name.strip(), params


def _number(p: str):
    p = p.strip()
    try:
        return int(p)
    except ValueError:
        try:
            return float(p)
        except ValueError:
            raise TemplateError(f"template parameter {p!r} is not a number") from None


def format_template(name: str, params: Sequence) -> str:
    return name + (":" + ",".join(str(p) for p in params) if params else "")


@dataclass(frozen=True)
class GenSpec:
    template: str = "fig5"
    params: tuple = ()
    domain_size: int | tuple[int, int] = 4
    sla_class: str = "simple"
    lam: float = 0.5
    seed: int = 0
    max_s: float | None = None  # custom class only
    max_e: float | None = None

    def __post_init__(self):
        ds = self.domain_size
        lo, hi = ds if isinstance(ds, tuple) else (ds, ds)
        if lo < 1 or hi < lo:
            raise TemplateError(f"invalid domain size {ds!r}")
        if self.sla_class not in SLA_CLASSES and self.sla_class != "custom":
            raise TemplateError(f"unknown SLA class {self.sla_class!r}")
        if self.sla_class == "custom" and (self.max_s is None or self.max_e is None):
            raise TemplateError("custom SLA class needs max_s and max_e")

    def sla(self) -> Sla:
        if self.sla_class == "custom":
            return Sla(float(self.max_s), float(self.max_e), float(self.lam))
        s, e = SLA_CLASSES[self.sla_class]
        return Sla(s, e, float(self.lam))


def draw_candidate(rng: random.Random) -> tuple[int, int]:
    """(response time, power) pair; energy is their product."""
    return rng.randint(*S_RANGE), rng.randint(*POWER_RANGE)


def generate_instance(spec: GenSpec) -> Instance:
    rng = random.Random(spec.seed)
    graph = template(spec.template, spec.params, rng)
    ds = spec.domain_size
    domains = {}
    for op in graph.operations:
        size = rng.randint(*ds) if isinstance(ds, tuple) else ds
        cands = []
        for v in range(size):
            s, p = draw_candidate(rng)
            cands.append(Candidate(f"{op}_{v + 1}", QosVector(float(s), float(p * s))))
        domains[op] = Domain(op, tuple(cands))
    return Instance(graph, domains, spec.sla())
