"""Variable orderings for the backtracking solvers.

The NeLO (nested list for operations' ordering) is the static assignment
order.  It is generated from the reduction order so that partial QoS
evaluations become available as early as possible; the NeLS (nested list of
subgraph nodes) supplies the operations that never appear in a frontier
pair.  ``mdf_sort`` permutes sequences and branches (which leaves the
composition's QoS unchanged) so that small domains are reduced first.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .model import Block, Op, OperationGraph, Seq, Tree, tree_operations
from .reduce import ReductionOrder, deepness as compute_deepness, pair_case

VIRTUAL_ROOT = ("g0", "g0'")


def _blocks_post_order(node: Tree, out: list) -> list:
    """Blocks innermost-first, in the same order the reduction order closes them."""
    if isinstance(node, Block):
        for br in node.branches:
            _blocks_post_order(br, out)
        out.append(node)
    elif isinstance(node, Seq):
        for item in reversed(node.items):
            _blocks_post_order(item, out)
    return out


# ---------------------------------------------------------------------------
# NeLS / NeLS+


@dataclass(frozen=True)
class Nels:
    entries: tuple[tuple[tuple[str, str], tuple[str, ...]], ...]

    def __getitem__(self, key: tuple[str, str]) -> tuple[str, ...]:
        for k, v in self.entries:
            if k == key:
                return v
        raise KeyError(key)

    def __len__(self):
        return len(self.entries)

    def keys(self):
        return [k for k, _ in self.entries]


def build_nels(graph: OperationGraph, deep: Mapping[str, int] | None = None) -> Nels:
    """One entry per split/join subgraph listing its operations one level deeper."""
    deep = compute_deepness(graph) if deep is None else deep
    entries = []
    for blk in _blocks_post_order(graph.tree, []):
        level = deep[blk.split] + 1
        ops = tuple(op for op in tree_operations(blk) if deep[op] == level)
        entries.append(((blk.split, blk.join), ops))
    return Nels(tuple(entries))


@dataclass(frozen=True)
class NelsPlusEntry:
    split: str
    join: str
    depth: int
    branches: tuple[tuple[str, ...], ...]  # items per branch: op ids or nested split ids


@dataclass(frozen=True)
class NelsPlus:
    """Entries sorted by decreasing deepness, virtual outer entry last."""

    entries: tuple[NelsPlusEntry, ...]

    def entry(self, split: str) -> NelsPlusEntry:
        for e in self.entries:
            if e.split == split:
                return e
        raise KeyError(split)

    def domain_sizes(self, sizes: Mapping[str, int]) -> dict[str, int]:
        """dom-size of every entry, keyed by split id (virtual entry under 'g0')."""
        out: dict[str, int] = {}
        for e in self.entries:
            out[e.split] = sum(sizes[i] if i in sizes else out[i] for br in e.branches for i in br)
        return out


def _items(node: Tree) -> tuple[str, ...]:
    if isinstance(node, Seq):
        return tuple(i.rep for i in node.items)
    return (node.rep,)


def build_nels_plus(graph: OperationGraph, deep: Mapping[str, int] | None = None) -> NelsPlus:
    deep = compute_deepness(graph) if deep is None else deep
    entries = [
        NelsPlusEntry(b.split, b.join, deep[b.split], tuple(_items(br) for br in b.branches))
        for b in _blocks_post_order(graph.tree, [])
    ]
    entries.sort(key=lambda e: -e.depth)
    entries.append(NelsPlusEntry(VIRTUAL_ROOT[0], VIRTUAL_ROOT[1], -1, (_items(graph.tree),)))
    return NelsPlus(tuple(entries))


# ---------------------------------------------------------------------------
# NeLO


@dataclass(frozen=True)
class NeloEntry:
    op: str
    reductions: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class Nelo:
    entries: tuple[NeloEntry, ...]

    @property
    def operations(self) -> list[str]:
        return [e.op for e in self.entries]

    @property
    def order(self) -> ReductionOrder:
        return ReductionOrder(tuple(r for e in self.entries for r in e.reductions))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def generate_nelo(graph: OperationGraph, order: ReductionOrder, nels: Nels) -> Nelo:
    """Walk the reduction order top-down, creating entries per pair case.

    Operations already placed are never duplicated; each reduction is chained
    to the last entry present when its pair is processed.
    """
    lists = {key: dict.fromkeys(ops) for key, ops in nels.entries}
    home = {op: key for key, ops in nels.entries for op in ops}
    ops: list[str] = []
    reds: list[list] = []
    placed: set[str] = set()

    def place(op: str):
        if op in placed:
            return
        placed.add(op)
        ops.append(op)
        reds.append([])
        key = home.get(op)
        if key is not None and key in lists:
            lists[key].pop(op, None)

    for x, y in order:
        case = pair_case(graph, (x, y))
        if case == "split-join":
            for op in lists.pop((x, y), {}):
                place(op)
        elif case == "op-op":
            # y first: in a sequence y is the operation placed by the previous pair
            place(y)
            place(x)
        elif case == "op-split":
            place(x)
        elif case == "split-op":
            place(y)
        if not reds:
            raise ValueError(f"reduction {(x, y)} reached before any operation was placed")
        reds[-1].append((x, y))

    for op in graph.operations:
        place(op)
    return Nelo(tuple(NeloEntry(o, tuple(r)) for o, r in zip(ops, reds)))


def nelo_for(graph: OperationGraph, order: ReductionOrder | None = None) -> Nelo:
    from .reduce import compute_reduction_order

    order = compute_reduction_order(graph) if order is None else order
    return generate_nelo(graph, order, build_nels(graph))


# ---------------------------------------------------------------------------
# Precision metrics


def _evaluable(tree: Tree, assigned: set[str]) -> set[str]:
    """Assigned operations that take part in some correct partial evaluation."""
    full_memo: dict[int, bool] = {}

    def full(node: Tree) -> bool:
        k = id(node)
        if k not in full_memo:
            full_memo[k] = all(op in assigned for op in tree_operations(node))
        return full_memo[k]

    out: set[str] = set()
    if full(tree):
        return set(tree_operations(tree))

    def mark(node: Tree):
        if isinstance(node, Op):
            return
        if isinstance(node, Block):
            if full(node):
                out.update(tree_operations(node))
            else:
                for br in node.branches:
                    mark(br)
            return
        items = node.items
        for i, item in enumerate(items):
            near = (i > 0 and full(items[i - 1])) or (i + 1 < len(items) and full(items[i + 1]))
            if full(item) and near:
                out.update(tree_operations(item))
            else:
                mark(item)

    mark(tree)
    return out


def neo(graph: OperationGraph, prefix: Iterable[str]) -> int:
    assigned = set(prefix)
    unknown = assigned - set(graph.operations)
    if unknown:
        raise ValueError(f"not operations of the graph: {sorted(unknown)}")
    return len(_evaluable(graph.tree, assigned))


def pep(graph: OperationGraph, prefix: Sequence[str]) -> int:
    """Assigned operations not covered by any correct partial evaluation."""
    if len(set(prefix)) != len(prefix):
        raise ValueError("prefix repeats an operation")
    return len(prefix) - neo(graph, prefix)


def sigma(graph: OperationGraph, ordering: Sequence[str] | Nelo) -> int:
    """Sum of pep over the prefixes of length 2 .. len-1."""
    ops = ordering.operations if isinstance(ordering, Nelo) else list(ordering)
    return sum(pep(graph, ops[:i]) for i in range(2, len(ops)))


# ---------------------------------------------------------------------------
# Min-domain-first topological sort


def _permute_params(blk: Block, perm: list[int]) -> tuple:
    if blk.family == "xor":
        return tuple(blk.params[i] for i in perm)
    if blk.family == "or":
        p1, p2, pp = blk.params
        return (p1, p2, pp) if perm == [0, 1] else (p2, p1, pp)
    return blk.params


def _stable_sort(idx: list[int], key, reverse: bool, rng: random.Random | None) -> list[int]:
    if rng is not None:
        idx = list(idx)
        rng.shuffle(idx)
    return sorted(idx, key=key, reverse=reverse)


def sort_tree(tree: Tree, dom: Mapping[str, int], rng: random.Random | None = None) -> Tree:
    """Branch sorting then sequence sorting, bottom-up.

    Branches go smallest domain first (they are reduced in branch order).
    In a sequence the reduction order pairs items right to left, so operation
    slots and block slots are each sorted by decreasing domain size.
    """

    def size(node: Tree) -> int:
        if isinstance(node, Seq):
            return sum(size(i) for i in node.items)
        return dom[node.rep]

    def walk(node: Tree) -> Tree:
        if isinstance(node, Op):
            return node
        if isinstance(node, Block):
            kids = [walk(b) for b in node.branches]
            perm = _stable_sort(list(range(len(kids))), lambda i: size(kids[i]), False, rng)
            return Block(node.family, node.split, node.join, tuple(kids[i] for i in perm),
                         _permute_params(node, perm))
        items = [walk(i) for i in node.items]
        out = list(items)
        for is_op in (True, False):
            slots = [i for i, it in enumerate(items) if isinstance(it, Op) == is_op]
            ranked = _stable_sort(slots, lambda i: size(items[i]), True, rng)
            for dst, src in zip(slots, ranked):
                out[dst] = items[src]
        return Seq(tuple(out))

    return walk(tree)


def graph_from_tree(template: OperationGraph, tree: Tree) -> OperationGraph:
    """Rewire ``template``'s nodes along ``tree``; node listing order is kept."""
    edges: list[tuple[str, str]] = []
    xor, orp, loops = {}, {}, {}

    def wire(node: Tree) -> tuple[str, str]:
        if isinstance(node, Op):
            return node.id, node.id
        if isinstance(node, Seq):
            ends = [wire(i) for i in node.items]
            for (_, a), (b, _) in zip(ends, ends[1:]):
                edges.append((a, b))
            return ends[0][0], ends[-1][1]
        for br in node.branches:
            a, b = wire(br)
            edges.append((node.split, a))
            edges.append((b, node.join))
        if node.family == "xor":
            xor[node.split] = node.params
        elif node.family == "or":
            orp[node.split] = node.params
        elif node.family == "loop":
            loops[node.split] = node.params[0]
        return node.split, node.join

    wire(tree)
    return OperationGraph(template.nodes, tuple(edges), xor, orp, loops)


def mdf_sort(graph: OperationGraph, nels_plus: NelsPlus, domains: Mapping,
             rng: random.Random | None = None) -> OperationGraph:
    """QoS-equivalent graph whose reduction order meets small domains first.

    ``domains`` maps operations to Domain objects or to plain sizes.  Ties keep
    input order unless ``rng`` is given.
    """
    sizes = {op: d if isinstance(d, int) else len(d) for op, d in domains.items()}
    dom = dict(sizes)
    dom.update(nels_plus.domain_sizes(sizes))
    return graph_from_tree(graph, sort_tree(graph.tree, dom, rng))


# ---------------------------------------------------------------------------
# Debug dumps


def _pair(p) -> str:
    return f"({p[0]}, {p[1]})"


def dump_nels(nels: Nels) -> str:
    return "".join(f"{_pair(k)}: {' '.join(v)}\n" for k, v in nels.entries)


def dump_nels_plus(nels_plus: NelsPlus) -> str:
    lines = []
    for e in nels_plus.entries:
        branches = " | ".join(" ".join(br) for br in e.branches)
        lines.append(f"{_pair((e.split, e.join))} depth={e.depth}: {branches}\n")
    return "".join(lines)


def dump_nelo(nelo: Nelo) -> str:
    lines = []
    for e in nelo.entries:
        lines.append(" ".join([e.op] + [_pair(r) for r in e.reductions]) + "\n")
    return "".join(lines)
