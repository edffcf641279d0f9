"""Independent reference implementations used to check the package.

Nothing here goes through the block tree, the reduction order or the
compiled evaluator: graphs are walked directly from their edge lists.
"""

import itertools
import math


def _family(kind):
    return kind.rsplit("_", 1)[0]


def recursive_eval(graph, qos):
    """Recursive-descent QoS of a flat graph; ``qos`` maps op -> (s, e)."""
    kind, succ = graph.kind, graph.successors

    def run(node):
        # returns (s, e, join that closed this run or None)
        s = e = 0.0
        n = node
        while n is not None:
            k = kind[n]
            if k == "operation":
                s += qos[n][0]
                e += qos[n][1]
                n = succ[n][0] if succ[n] else None
            elif k.endswith("_join"):
                return s, e, n
            else:
                parts = [run(b) for b in succ[n]]
                joins = {j for _, _, j in parts}
                assert len(joins) == 1, "branches close at different joins"
                ss = [p[0] for p in parts]
                es = [p[1] for p in parts]
                fam = _family(k)
                if fam == "and":
                    bs, be = max(ss), sum(es)
                elif fam == "xor":
                    ps = graph.xor_probs[n]
                    bs = sum(p * x for p, x in zip(ps, ss))
                    be = sum(p * x for p, x in zip(ps, es))
                elif fam == "or":
                    p1, p2, pp = graph.or_probs[n]
                    bs = p1 * ss[0] + p2 * ss[1] + pp * max(ss[0], ss[1])
                    be = p1 * es[0] + p2 * es[1] + pp * (es[0] + es[1])
                else:
                    m = graph.loop_counts[n]
                    bs, be = m * ss[0], m * es[0]
                s += bs
                e += be
                (j,) = joins
                n = succ[j][0] if succ[j] else None
        return s, e, None

    s, e, _ = run(graph.root)
    return s, e


def xor_routing_expectation(graph, qos):
    """Expected (s, e) of an XOR-only graph by enumerating every routing outcome."""
    kind, succ = graph.kind, graph.successors
    xors = [n for n, k in graph.nodes if k == "xor_split"]
    assert all(k in ("operation", "xor_split", "xor_join") for _, k in graph.nodes)
    total_s = total_e = 0.0
    for choice in itertools.product(*(range(len(succ[x])) for x in xors)):
        pick = dict(zip(xors, choice))
        prob = math.prod(graph.xor_probs[x][pick[x]] for x in xors)
        s = e = 0.0
        n = graph.root
        while n is not None:
            if kind[n] == "operation":
                s += qos[n][0]
                e += qos[n][1]
            nxt = succ[n]
            n = nxt[pick[n]] if kind[n] == "xor_split" else (nxt[0] if nxt else None)
        total_s += prob * s
        total_e += prob * e
    return total_s, total_e


def qos_of(instance, f):
    return {op: tuple(instance.domains[op].candidates[i].qos) for op, i in f.items()}


def completions(instance, partial):
    """Every complete assignment extending ``partial``."""
    ops = instance.operations
    free = [op for op in ops if op not in partial]
    for choice in itertools.product(*(range(len(instance.domains[op])) for op in free)):
        f = dict(partial)
        f.update(zip(free, choice))
        yield f


def brute_force_optimum(instance):
    """(min penalty, feasible?) by direct enumeration with the recursive oracle."""
    sla = instance.sla
    best = math.inf
    for f in completions(instance, {}):
        s, e = recursive_eval(instance.graph, qos_of(instance, f))
        if s <= sla.max_s and e <= sla.max_e:
            best = min(best, sla.lam * s + (1 - sla.lam) * e)
    return best
