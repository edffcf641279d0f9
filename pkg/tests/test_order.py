import random

import pytest

from conftest import GOLDEN, make_instance
from qsel.gen import GenSpec, generate_instance, graph_of, template
from qsel.model import Block, Op, Seq
from qsel.order import (VIRTUAL_ROOT, build_nels, build_nels_plus, dump_nelo, dump_nels, dump_nels_plus,
                        generate_nelo, mdf_sort, nelo_for, neo, pep, sigma)
from qsel.reduce import compute_reduction_order, deepness, evaluate, replay


def test_nels_examples(fig5):
    assert build_nels(template("seq", (4,))).entries == ()
    assert dict(build_nels(fig5).entries) == {("g3", "g4"): ("C", "D"), ("g1", "g2"): ("B", "E")}
    twin = graph_of(Seq((Block("and", "a1", "a2", (Op("P"), Op("Q"))), Block("and", "b1", "b2", (Op("R"), Op("S"))))))
    assert dict(build_nels(twin).entries) == {("a1", "a2"): ("P", "Q"), ("b1", "b2"): ("R", "S")}


@pytest.mark.parametrize("seed", range(20))
def test_nels_depth_rule(seed):
    rng = random.Random(seed)
    g = template("random", (rng.randint(2, 15), 3), rng)
    deep = deepness(g)
    for (x, _), ops in build_nels(g, deep).entries:
        assert all(deep[op] == deep[x] + 1 for op in ops)


def test_nelo_examples(fig5):
    seq = template("seq", (3,))
    nelo = nelo_for(seq)
    assert [(e.op, e.reductions) for e in nelo.entries] == [
        ("u3", ()), ("u2", (("u2", "u3"),)), ("u1", (("u1", "u2"),))]
    assert sigma(seq, nelo) == 0
    head = [(e.op, e.reductions) for e in nelo_for(fig5).entries][:4]
    assert head == [("C", ()), ("D", (("g3", "g4"),)), ("B", (("B", "g3"),)), ("E", (("g1", "g2"),))]
    single = nelo_for(template("seq", (1,)))
    assert [(e.op, e.reductions) for e in single.entries] == [("u1", ())]


def test_golden_dumps(fig5):
    assert dump_nelo(nelo_for(fig5)) == (GOLDEN / "fig5.nelo").read_text()
    assert dump_nels(build_nels(fig5)) == (GOLDEN / "fig5.nels").read_text()
    assert dump_nels_plus(build_nels_plus(fig5)) == (GOLDEN / "fig5.nelsplus").read_text()


@pytest.mark.parametrize("seed", range(40))
def test_nelo_covers_and_replays(seed):
    rng = random.Random(seed)
    g = template("random", (rng.randint(1, 20), 3), rng)
    nelo = nelo_for(g)
    assert sorted(nelo.operations) == sorted(g.operations)
    assert len(replay(g, nelo.order)) == 1


def test_pep_and_sigma_points(fig3):
    assert pep(fig3, ["D", "A"]) == 2
    assert pep(fig3, ["D", "E"]) == 0
    assert pep(fig3, ["A", "D", "E", "B"]) == 0
    assert sigma(fig3, ["B", "A", "E", "D"]) == 5
    assert sigma(fig3, ["E", "D", "A", "B"]) == 0
    assert pep(template("seq", (3,)), ["u2"]) == 1
    assert neo(fig3, ["D", "E"]) == 2


def test_pep_of_full_ordering_is_zero():
    for seed in range(20):
        rng = random.Random(seed)
        g = template("random", (rng.randint(1, 12), 3), rng)
        ops = list(g.operations)
        rng.shuffle(ops)
        assert pep(g, ops) == 0
        assert sigma(g, ops) >= 0


def test_nels_plus_structure(fig5):
    np = build_nels_plus(fig5)
    assert np.entry("g3").branches == (("C",), ("D",))
    assert np.entry("g1").branches == (("B", "g3"), ("E",))
    assert np.entries[-1].split == VIRTUAL_ROOT[0]
    assert np.entries[-1].branches == (("A", "g1", "F"),)
    depths = [e.depth for e in np.entries]
    assert depths == sorted(depths, reverse=True)


def test_dom_size_accumulates(fig5):
    sizes = {"A": 2, "B": 3, "C": 4, "D": 5, "E": 6, "F": 7}
    dom = build_nels_plus(fig5).domain_sizes(sizes)
    assert dom["g3"] == sizes["C"] + sizes["D"]
    assert dom["g1"] == sizes["B"] + sizes["C"] + sizes["D"] + sizes["E"]
    assert dom["g0"] == sum(sizes.values())


def test_mdf_sort_swaps_a_and_f(fig5):
    sizes = {op: 3 for op in fig5.operations}
    sizes.update(A=2, F=5)
    sorted_graph = mdf_sort(fig5, build_nels_plus(fig5), sizes)
    assert str(compute_reduction_order(sorted_graph)) == "(g3, g4); (B, g3); (g1, g2); (g1, A); (F, g1)"


def test_mdf_sort_branch_order(fig5):
    sizes = {op: 2 for op in fig5.operations}
    sizes.update(C=9, E=1)
    sorted_graph = mdf_sort(fig5, build_nels_plus(fig5), sizes)
    assert sorted_graph.successors["g1"] == ["E", "B"]
    assert sorted_graph.successors["g3"] == ["D", "C"]
    assert sorted_graph.xor_probs["g3"] == (0.5, 0.5)


def test_mdf_sort_equal_domains_preserves_evaluate(fig5):
    inst = make_instance(fig5, {op: [(i + 1, 2 * i + 3), (5, 1)] for i, op in enumerate(fig5.operations)})
    out = mdf_sort(fig5, build_nels_plus(fig5), inst.domains, random.Random(1))
    for bits in range(64):
        f = {op: (bits >> i) & 1 for i, op in enumerate(fig5.operations)}
        assert evaluate(inst, f) == pytest.approx(evaluate(inst.with_graph(out), f), rel=1e-12)


@pytest.mark.parametrize("seed", range(40))
def test_sigma_bound_after_mdf(seed):
    rng = random.Random(seed)
    inst = generate_instance(GenSpec("random", (rng.randint(2, 25), 2), (1, 8), "simple", 0.5, seed))
    g = mdf_sort(inst.graph, build_nels_plus(inst.graph), inst.domains)
    nelo = generate_nelo(g, compute_reduction_order(g), build_nels(g))
    assert sigma(g, nelo) <= len(g.operations) / 2
