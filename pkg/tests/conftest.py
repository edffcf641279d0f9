import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qsel.gen import GenSpec, generate_instance, graph_of, template  # noqa: E402
from qsel.model import Block, Candidate, Domain, Instance, Op, QosVector, Seq, Sla  # noqa: E402

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def fig5():
    return template("fig5")


def fig3_graph():
    """A -> AND{D, E} -> B: the relationships the worked pep/sigma examples rely on."""
    return graph_of(Seq((Op("A"), Block("and", "g1", "g2", (Op("D"), Op("E"))), Op("B"))))


@pytest.fixture
def fig3():
    return fig3_graph()


def make_instance(graph, qos, sla=(1e9, 1e9, 0.5)):
    """``qos`` maps op -> list of (s, e)."""
    domains = {
        op: Domain(op, tuple(Candidate(f"{op}{i + 1}", QosVector(*q)) for i, q in enumerate(qos[op])))
        for op in graph.operations
    }
    return Instance(graph, domains, Sla(*sla))


def uniform_instance(graph, value=(1.0, 1.0), sla=(1e9, 1e9, 0.5)):
    return make_instance(graph, {op: [value] for op in graph.operations}, sla)


def binding_sla(instance, rng, lam):
    """SLA bounds drawn around the spread of random assignments so they bind."""
    from qsel.reduce import evaluate

    samples = []
    for _ in range(12):
        f = {op: rng.randrange(len(instance.domains[op])) for op in instance.operations}
        samples.append(tuple(evaluate(instance, f)))
    s_sorted = sorted(s for s, _ in samples)
    e_sorted = sorted(e for _, e in samples)
    return Sla(s_sorted[rng.randrange(len(s_sorted))] or 1.0, e_sorted[rng.randrange(len(e_sorted))] or 1.0, lam)


SMALL_TEMPLATES = [("seq", (3,)), ("seq", (5,)), ("fig5", ()), ("nested", (1, 2)), ("nested", (2, 2)),
                   ("mixed", (4,)), ("mixed", (6,)), ("random", (5, 2)), ("random", (6, 3))]


def small_random_instance(seed, max_product=4000, sla_class=None, lam=None):
    """Seeded instance with <= 6 operations and domains <= 6."""
    rng = random.Random(seed)
    name, params = SMALL_TEMPLATES[rng.randrange(len(SMALL_TEMPLATES))]
    if name == "random":
        params = (rng.randint(1, params[0] + 1), params[1])
    lam = rng.choice([0.0, 0.5, 1.0]) if lam is None else lam
    graph = template(name, params, random.Random(seed))
    n = len(graph.operations)
    dmax = 6
    while dmax > 1 and dmax ** n > max_product:
        dmax -= 1
    cls = sla_class or rng.choice(["simple", "medium", "hard"])
    spec = GenSpec(name, params, (1, dmax), cls, lam, seed)
    return generate_instance(spec)
