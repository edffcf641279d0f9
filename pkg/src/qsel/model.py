"""Instance data types, the on-disk instance format and structural validation.

An operations graph is a flat directed graph of abstract operations and
connectors.  Connectors come in split/join pairs of four families (and, xor,
or, loop).  Graphs are only accepted when they are *decomposable*: repeated
reduction of elementary subgraphs (a split whose branches are single units
meeting at one matching join, or two adjacent units in sequence) collapses
the graph to a single node.  The reductions performed along the way yield
the block tree (:class:`Op`, :class:`Seq`, :class:`Block`) that the rest of
the package works on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Mapping, Union

PROB_TOL = 1e-9

OPERATION = "operation"
CONNECTOR_KINDS = (
    "and_split", "and_join",
    "xor_split", "xor_join",
    "or_split", "or_join",
    "loop_split", "loop_join",
)
NODE_KINDS = (OPERATION,) + CONNECTOR_KINDS


class InstanceError(ValueError):
    """Base class for malformed instances.  ``node`` names the culprit if known."""

    def __init__(self, message: str, node: str | None = None, where: str | None = None):
        self.node = node
        self.where = where
        parts = []
        if where:
            parts.append(where)
        if node is not None:
            parts.append(f"node {node!r}")
        prefix = ": ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class InstanceSyntaxError(InstanceError):
    pass


class InstanceSemanticError(InstanceError):
    pass


class NonDecomposableError(InstanceSemanticError):
    def __init__(self, message: str, residual: Iterable[str] = ()):
        self.residual = tuple(residual)
        super().__init__(message)
        self.node = self.residual[0] if self.residual else None


def family(kind: str) -> str | None:
    """``'and_split'`` -> ``'and'``; operations have no family."""
    if kind == OPERATION:
        return None
    return kind.rsplit("_", 1)[0]


def is_split(kind: str) -> bool:
    return kind.endswith("_split")


def is_join(kind: str) -> bool:
    return kind.endswith("_join")


# ---------------------------------------------------------------------------
# QoS, domains, SLA


@dataclass(frozen=True)
class QosVector:
    s: float
    e: float

    def __post_init__(self):
        for name in ("s", "e"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise InstanceSemanticError(f"QoS component {name}={v!r} must be finite and >= 0")

    def __iter__(self):
        yield self.s
        yield self.e


def penalty(q: QosVector | tuple[float, float], lam: float) -> float:
    """Weighted penalty ``lam * s + (1 - lam) * e``."""
    s, e = q
    return lam * s + (1.0 - lam) * e


@dataclass(frozen=True)
class Candidate:
    id: str
    qos: QosVector


@dataclass(frozen=True)
class Domain:
    abstract_op: str
    candidates: tuple[Candidate, ...]

    def __post_init__(self):
        if not self.candidates:
            raise InstanceSemanticError("domain has no candidates", node=self.abstract_op)
        seen = set()
        for c in self.candidates:
            if c.id in seen:
                raise InstanceSemanticError(f"duplicate concrete id {c.id!r}", node=self.abstract_op)
            seen.add(c.id)

    def __len__(self):
        return len(self.candidates)


@dataclass(frozen=True)
class Sla:
    max_s: float
    max_e: float
    lam: float

    def __post_init__(self):
        if not self.max_s > 0:
            raise InstanceSemanticError(f"sla.max_s must be > 0, got {self.max_s!r}")
        if not self.max_e > 0:
            raise InstanceSemanticError(f"sla.max_e must be > 0, got {self.max_e!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise InstanceSemanticError(f"sla.lambda must lie in [0, 1], got {self.lam!r}")

    def satisfied_by(self, q) -> bool:
        s, e = q
        return s <= self.max_s and e <= self.max_e


# ---------------------------------------------------------------------------
# Block tree


@dataclass(frozen=True)
class Op:
    id: str

    @property
    def rep(self) -> str:
        return self.id


@dataclass(frozen=True)
class Seq:
    items: tuple  # of Op | Block, at least two

    @property
    def rep(self) -> str:
        return self.items[0].rep


@dataclass(frozen=True)
class Block:
    family: str  # and | xor | or | loop
    split: str
    join: str
    branches: tuple  # of Op | Seq | Block
    params: tuple = ()  # xor: probs; or: (p1, p2, ppar); loop: (m,)

    @property
    def rep(self) -> str:
        return self.split


Tree = Union[Op, Seq, Block]


def tree_operations(node: Tree) -> list[str]:
    """Operation ids of a subtree, left to right."""
    out: list[str] = []
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Op):
            out.append(n.id)
        elif isinstance(n, Seq):
            stack.extend(reversed(n.items))
        else:
            stack.extend(reversed(n.branches))
    return out


def iter_blocks(node: Tree):
    """All blocks of a subtree in pre-order."""
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Seq):
            stack.extend(reversed(n.items))
        elif isinstance(n, Block):
            yield n
            stack.extend(reversed(n.branches))


# ---------------------------------------------------------------------------
# Operations graph


@dataclass(frozen=True, eq=False)
class OperationGraph:
    """Flat graph.  Branch order of a split is the order of its outgoing edges."""

    nodes: tuple[tuple[str, str], ...]
    edges: tuple[tuple[str, str], ...]
    xor_probs: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    or_probs: Mapping[str, tuple[float, float, float]] = field(default_factory=dict)
    loop_counts: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple((str(i), str(k)) for i, k in self.nodes))
        object.__setattr__(self, "edges", tuple((str(a), str(b)) for a, b in self.edges))
        object.__setattr__(self, "xor_probs", {k: tuple(float(p) for p in v) for k, v in self.xor_probs.items()})
        object.__setattr__(self, "or_probs", {k: tuple(float(p) for p in v) for k, v in self.or_probs.items()})
        object.__setattr__(self, "loop_counts", {k: float(v) for k, v in self.loop_counts.items()})
        check_graph(self)

    @cached_property
    def kind(self) -> dict[str, str]:
        return dict(self.nodes)

    @cached_property
    def operations(self) -> tuple[str, ...]:
        return tuple(i for i, k in self.nodes if k == OPERATION)

    @cached_property
    def successors(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {i: [] for i, _ in self.nodes}
        for a, b in self.edges:
            out[a].append(b)
        return out

    @cached_property
    def predecessors(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {i: [] for i, _ in self.nodes}
        for a, b in self.edges:
            out[b].append(a)
        return out

    @cached_property
    def root(self) -> str:
        return next(i for i, _ in self.nodes if not self.predecessors[i])

    @cached_property
    def leaf(self) -> str:
        return next(i for i, _ in self.nodes if not self.successors[i])

    @cached_property
    def tree(self) -> Tree:
        """Block tree of the graph; raises :class:`NonDecomposableError`."""
        return decompose(self)

    def params(self, split: str) -> tuple:
        fam = family(self.kind[split])
        if fam == "xor":
            return self.xor_probs[split]
        if fam == "or":
            return self.or_probs[split]
        if fam == "loop":
            return (self.loop_counts[split],)
        return ()

    def to_dict(self) -> dict:
        ann: dict[str, Any] = {}
        if self.xor_probs:
            ann["xor"] = {k: list(v) for k, v in self.xor_probs.items()}
        if self.or_probs:
            ann["or"] = {k: list(v) for k, v in self.or_probs.items()}
        if self.loop_counts:
            ann["loop"] = dict(self.loop_counts)
        return {
            "nodes": [{"id": i, "kind": k} for i, k in self.nodes],
            "edges": [[a, b] for a, b in self.edges],
            "annotations": ann,
        }


def check_graph(g: OperationGraph) -> None:
    """Local invariants: ids, kinds, degrees, single root and leaf, annotations."""
    ids = [i for i, _ in g.nodes]
    if not ids:
        raise InstanceSemanticError("graph has no nodes")
    seen: set[str] = set()
    for i, k in g.nodes:
        if not i:
            raise InstanceSemanticError("empty node id")
        if i in seen:
            raise InstanceSemanticError("duplicate node id", node=i)
        if k not in NODE_KINDS:
            raise InstanceSemanticError(f"unknown kind {k!r}", node=i)
        seen.add(i)
    edge_set = set()
    for a, b in g.edges:
        for end in (a, b):
            if end not in seen:
                raise InstanceSemanticError(f"edge ({a}, {b}) references unknown node", node=end)
        if a == b:
            raise InstanceSemanticError("self loop", node=a)
        if (a, b) in edge_set:
            raise InstanceSemanticError(f"duplicate edge ({a}, {b})", node=a)
        edge_set.add((a, b))

    succ, pred = g.successors, g.predecessors
    roots = [i for i in ids if not pred[i]]
    leaves = [i for i in ids if not succ[i]]
    if len(roots) != 1:
        raise InstanceSemanticError(f"expected a single root, found {roots}", node=roots[0] if roots else None)
    if len(leaves) != 1:
        raise InstanceSemanticError(f"expected a single leaf, found {leaves}", node=leaves[0] if leaves else None)

    for i, k in g.nodes:
        nin, nout = len(pred[i]), len(succ[i])
        if k == OPERATION or is_join(k):
            if nout > 1:
                raise InstanceSemanticError(f"{k} has {nout} outgoing edges", node=i)
        if k == OPERATION or is_split(k):
            if nin > 1:
                raise InstanceSemanticError(f"{k} has {nin} incoming edges", node=i)
        fam = family(k)
        if is_split(k):
            lo, hi = {"and": (2, None), "xor": (2, None), "or": (2, 2), "loop": (1, 1)}[fam]
            if nout < lo or (hi is not None and nout > hi):
                raise InstanceSemanticError(f"{k} has {nout} branches", node=i)
        if is_join(k):
            lo, hi = {"and": (2, None), "xor": (2, None), "or": (2, 2), "loop": (1, 1)}[fam]
            if nin < lo or (hi is not None and nin > hi):
                raise InstanceSemanticError(f"{k} has {nin} incoming branches", node=i)

    kind = dict(g.nodes)
    for table, fam in ((g.xor_probs, "xor"), (g.or_probs, "or"), (g.loop_counts, "loop")):
        for i in table:
            if kind.get(i) != f"{fam}_split":
                raise InstanceSemanticError(f"{fam} annotation on a node that is not a {fam}_split", node=i)
    for i, k in g.nodes:
        if k == "xor_split":
            ps = g.xor_probs.get(i)
            if ps is None:
                raise InstanceSemanticError("missing xor probabilities", node=i)
            if len(ps) != len(succ[i]):
                raise InstanceSemanticError(f"{len(ps)} probabilities for {len(succ[i])} branches", node=i)
            if any(not 0.0 <= p <= 1.0 for p in ps):
                raise InstanceSemanticError("xor probability outside [0, 1]", node=i)
            if abs(sum(ps) - 1.0) > PROB_TOL:
                raise InstanceSemanticError(f"xor probabilities sum to {sum(ps)!r}, not 1", node=i)
        elif k == "or_split":
            ps = g.or_probs.get(i)
            if ps is None:
                raise InstanceSemanticError("missing or probabilities", node=i)
            if len(ps) != 3:
                raise InstanceSemanticError("or annotation needs (p_or1, p_or2, p_par)", node=i)
            if any(not 0.0 <= p <= 1.0 for p in ps):
                raise InstanceSemanticError("or probability outside [0, 1]", node=i)
            if abs(sum(ps) - 1.0) > PROB_TOL:
                raise InstanceSemanticError(f"or probabilities sum to {sum(ps)!r}, not 1", node=i)
        elif k == "loop_split":
            m = g.loop_counts.get(i)
            if m is None:
                raise InstanceSemanticError("missing loop count", node=i)
            if not (math.isfinite(m) and m >= 0):
                raise InstanceSemanticError(f"loop count {m!r} must be finite and >= 0", node=i)


# ---------------------------------------------------------------------------
# Elementary-subgraph reduction


class ReducibleGraph:
    """Mutable copy of a graph on which elementary reductions are performed.

    A *unit* is an operation or an already reduced subgraph; it is named by
    its representative id (an operation id or the id of the split that
    opened the reduced block).
    """

    def __init__(self, graph: OperationGraph):
        self.graph = graph
        self.kind = dict(graph.kind)
        self.succ = {k: list(v) for k, v in graph.successors.items()}
        self.pred = {k: list(v) for k, v in graph.predecessors.items()}
        self.tree: dict[str, Tree] = {i: Op(i) for i in graph.operations}

    def __len__(self):
        return len(self.succ)

    def is_unit(self, n: str) -> bool:
        return n in self.tree

    def elementary_join(self, s: str) -> str | None:
        """Join closing ``s`` if the split/join subgraph at ``s`` is elementary."""
        if s in self.tree or not is_split(self.kind[s]):
            return None
        branches = self.succ[s]
        j = None
        for b in branches:
            if b not in self.tree or len(self.pred[b]) != 1 or len(self.succ[b]) != 1:
                return None
            t = self.succ[b][0]
            if j is None:
                j = t
            elif t != j:
                return None
        if j is None or j in self.tree or self.kind[j] != family(self.kind[s]) + "_join":
            return None
        if sorted(self.pred[j]) != sorted(branches):
            return None
        return j

    def reduce_block(self, s: str, j: str) -> Block:
        branches = self.succ[s]
        blk = Block(family(self.kind[s]), s, j, tuple(self.tree.pop(b) for b in branches),
                    self.graph.params(s))
        for b in branches:
            del self.succ[b], self.pred[b]
        after = self.succ.pop(j)
        del self.pred[j]
        self.succ[s] = after
        for a in after:
            self.pred[a] = [s if p == j else p for p in self.pred[a]]
        self.tree[s] = blk
        return blk

    def can_merge(self, x: str, y: str) -> bool:
        return (x in self.tree and y in self.tree and self.succ[x] == [y]
                and self.pred[y] == [x])

    def merge(self, x: str, y: str) -> Seq:
        a, b = self.tree[x], self.tree.pop(y)
        items = (a.items if isinstance(a, Seq) else (a,)) + (b.items if isinstance(b, Seq) else (b,))
        seq = Seq(items)
        after = self.succ.pop(y)
        del self.pred[y]
        self.succ[x] = after
        for n in after:
            self.pred[n] = [x if p == y else p for p in self.pred[n]]
        self.tree[x] = seq
        return seq

    def apply(self, pair: tuple[str, str]) -> None:
        """Perform one reduction named by a (root, leaf) frontier pair."""
        x, y = pair
        if x not in self.succ or y not in self.succ:
            raise NonDecomposableError(f"reduction {pair} refers to a node already reduced away", (x, y))
        if is_join(self.kind[y]) and y not in self.tree:
            j = self.elementary_join(x)
            if j != y:
                raise NonDecomposableError(f"subgraph {pair} is not elementary", (x, y))
            self.reduce_block(x, y)
        else:
            if not self.can_merge(x, y):
                raise NonDecomposableError(f"{pair} is not an elementary sequence", (x, y))
            self.merge(x, y)

    def result(self) -> Tree | None:
        if len(self.succ) == 1:
            (n,) = self.succ
            return self.tree.get(n)
        return None


def decompose(graph: OperationGraph) -> Tree:
    """Reduce ``graph`` greedily to a single unit and return its block tree."""
    rg = ReducibleGraph(graph)
    changed = True
    while changed and len(rg) > 1:
        changed = False
        for n in list(rg.succ):
            if n not in rg.succ:
                continue
            if n in rg.tree:
                while len(rg.succ[n]) == 1 and rg.can_merge(n, rg.succ[n][0]):
                    rg.merge(n, rg.succ[n][0])
                    changed = True
            elif is_split(rg.kind[n]):
                j = rg.elementary_join(n)
                if j is not None:
                    rg.reduce_block(n, j)
                    changed = True
    t = rg.result()
    if t is None:
        residual = sorted(n for n in rg.succ if n not in rg.tree) or sorted(rg.succ)
        raise NonDecomposableError(
            f"reduction stalls with {len(rg)} nodes left; stuck connectors: {', '.join(residual)}",
            residual)
    return t


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...] = ()
    residual: tuple[str, ...] = ()

    def __bool__(self):
        return self.ok


def validate_decomposable(graph: OperationGraph) -> ValidationReport:
    try:
        decompose(graph)
    except NonDecomposableError as exc:
        return ValidationReport(False, (str(exc),), exc.residual)
    return ValidationReport(True)


# ---------------------------------------------------------------------------
# Instances


@dataclass(frozen=True, eq=False)
class Instance:
    graph: OperationGraph
    domains: Mapping[str, Domain]
    sla: Sla

    def __post_init__(self):
        ops = set(self.graph.operations)
        for op in self.graph.operations:
            if op not in self.domains:
                raise InstanceSemanticError("operation has no domain", node=op)
        for k, d in self.domains.items():
            if k not in ops:
                raise InstanceSemanticError("domain given for a node that is not an operation", node=k)
            if d.abstract_op != k:
                raise InstanceSemanticError(f"domain keyed {k!r} belongs to {d.abstract_op!r}", node=k)

    @property
    def operations(self) -> tuple[str, ...]:
        return self.graph.operations

    def domain_sizes(self) -> dict[str, int]:
        return {op: len(self.domains[op]) for op in self.graph.operations}

    def search_space(self) -> int:
        return math.prod(self.domain_sizes().values())

    def with_graph(self, graph: OperationGraph) -> "Instance":
        return Instance(graph, self.domains, self.sla)

    def with_sla(self, sla: Sla) -> "Instance":
        return Instance(self.graph, self.domains, sla)

    def to_dict(self) -> dict:
        return {
            "graph": self.graph.to_dict(),
            "domains": {
                op: [{"id": c.id, "s": c.qos.s, "e": c.qos.e} for c in self.domains[op].candidates]
                for op in self.graph.operations
            },
            "sla": {"max_s": self.sla.max_s, "max_e": self.sla.max_e, "lambda": self.sla.lam},
        }


def serialize_instance(instance: Instance) -> str:
    return json.dumps(instance.to_dict(), indent=2) + "\n"


def write_instance(instance: Instance, path: str | Path) -> None:
    Path(path).write_text(serialize_instance(instance), encoding="utf-8")


def _num(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InstanceSyntaxError(f"expected a number, got {v!r}", where=where)
    return float(v)


def _get(d, key: str, where: str, typ=None):
    if not isinstance(d, dict):
        raise InstanceSyntaxError("expected an object", where=where)
    if key not in d:
        raise InstanceSyntaxError(f"missing key {key!r}", where=where)
    v = d[key]
    if typ is not None and not isinstance(v, typ):
        raise InstanceSyntaxError(f"expected {typ.__name__}", where=f"{where}.{key}")
    return v


def instance_from_dict(doc: Any, check_decomposable: bool = True) -> Instance:
    """Build an :class:`Instance` from the decoded document, checking every field."""
    graph_doc = _get(doc, "graph", "$", dict)
    nodes_doc = _get(graph_doc, "nodes", "graph", list)
    edges_doc = _get(graph_doc, "edges", "graph", list)
    ann = graph_doc.get("annotations", {}) or {}
    if not isinstance(ann, dict):
        raise InstanceSyntaxError("expected an object", where="graph.annotations")

    nodes = []
    for n, nd in enumerate(nodes_doc):
        where = f"graph.nodes[{n}]"
        nid = _get(nd, "id", where, str)
        kind = _get(nd, "kind", where, str)
        nodes.append((nid, kind))
    edges = []
    for n, ed in enumerate(edges_doc):
        if not (isinstance(ed, list) and len(ed) == 2 and all(isinstance(x, str) for x in ed)):
            raise InstanceSyntaxError("edge must be a [from, to] pair of ids", where=f"graph.edges[{n}]")
        edges.append((ed[0], ed[1]))

    def table(key):
        t = ann.get(key, {}) or {}
        if not isinstance(t, dict):
            raise InstanceSyntaxError("expected an object", where=f"graph.annotations.{key}")
        return t

    xor = {}
    for k, v in table("xor").items():
        if not isinstance(v, list):
            raise InstanceSyntaxError("expected a list of probabilities", where=f"graph.annotations.xor.{k}")
        xor[k] = tuple(_num(p, f"graph.annotations.xor.{k}") for p in v)
    orp = {}
    for k, v in table("or").items():
        if not isinstance(v, list):
            raise InstanceSyntaxError("expected [p1, p2, ppar]", where=f"graph.annotations.or.{k}")
        orp[k] = tuple(_num(p, f"graph.annotations.or.{k}") for p in v)
    loops = {k: _num(v, f"graph.annotations.loop.{k}") for k, v in table("loop").items()}

    graph = OperationGraph(tuple(nodes), tuple(edges), xor, orp, loops)
    if check_decomposable:
        graph.tree  # raises NonDecomposableError

    dom_doc = _get(doc, "domains", "$", dict)
    domains = {}
    for op, cands in dom_doc.items():
        where = f"domains.{op}"
        if not isinstance(cands, list):
            raise InstanceSyntaxError("expected a list of candidates", where=where)
        cs = []
        for n, c in enumerate(cands):
            w = f"{where}[{n}]"
            cid = _get(c, "id", w, str)
            try:
                qos = QosVector(_num(_get(c, "s", w), f"{w}.s"), _num(_get(c, "e", w), f"{w}.e"))
            except InstanceSemanticError as exc:
                raise InstanceSemanticError(str(exc), node=op, where=w) from None
            cs.append(Candidate(cid, qos))
        domains[op] = Domain(op, tuple(cs))

    sla_doc = _get(doc, "sla", "$", dict)
    sla = Sla(_num(_get(sla_doc, "max_s", "sla"), "sla.max_s"),
              _num(_get(sla_doc, "max_e", "sla"), "sla.max_e"),
              _num(_get(sla_doc, "lambda", "sla"), "sla.lambda"))
    return Instance(graph, domains, sla)


def loads_instance(text: str, check_decomposable: bool = True) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceSyntaxError(exc.msg, where=f"line {exc.lineno}, column {exc.colno}") from None
    return instance_from_dict(doc, check_decomposable)


def parse_instance(path: str | Path, check_decomposable: bool = True) -> Instance:
    return loads_instance(Path(path).read_text(encoding="utf-8"), check_decomposable)
