import math
import random

import pytest

from conftest import binding_sla, make_instance, small_random_instance
from oracles import brute_force_optimum
from qsel.gen import GenSpec, generate_instance, template
from qsel.model import Sla, parse_instance
from qsel.reduce import evaluate
from qsel.solve import (Algorithm, EnumerationCapExceeded, Objective, SolverConfig, Status, solve,
                        solve_all_solutions, solve_backtrack, solve_exhaustive, solve_feasibility)

ALGS = [Algorithm.EXHAUSTIVE, Algorithm.BACKTRACK_P, Algorithm.BACKTRACK_PM]
ONE = template("seq", (1,))


def test_single_op_argmin():
    inst = make_instance(ONE, {"u1": [(5, 5), (1, 9)]}, sla=(10, 10, 1))
    for alg in ALGS:
        rep = solve(inst, SolverConfig(alg))
        assert rep.status is Status.OPTIMAL
        assert rep.best == {"u1": 1}
        assert rep.opt_penalty == 1


def test_single_op_infeasible():
    inst = make_instance(ONE, {"u1": [(11, 1), (12, 1)]}, sla=(10, 10, 1))
    for alg in ALGS:
        rep = solve(inst, SolverConfig(alg))
        assert rep.status is Status.INFEASIBLE
        assert rep.best is None and rep.opt_penalty is None


def test_fig5_exhaustive_matches_all_solutions():
    inst = generate_instance(GenSpec("fig5", (), 4, "custom", 0.5, 11, max_s=2500, max_e=250_000))
    ex = solve_exhaustive(inst, SolverConfig(Algorithm.EXHAUSTIVE))
    al = solve_all_solutions(inst, SolverConfig(objective=Objective.ALL_SOLUTIONS))
    assert ex.status is Status.OPTIMAL
    assert ex.opt_penalty == pytest.approx(al.opt_penalty, rel=1e-12)
    assert ex.stats.complete_evaluations == 4 ** 6


def test_singleton_domains():
    inst = make_instance(template("fig5"), {op: [(1, 1)] for op in template("fig5").operations})
    for alg in ALGS:
        rep = solve(inst, SolverConfig(alg))
        assert rep.status is Status.OPTIMAL
        assert set(rep.best.values()) == {0}


def test_infeasible_fixture_prunes_inside_block(data_dir):
    inst = parse_instance(data_dir / "infeasible.json")
    for alg in (Algorithm.BACKTRACK_P, Algorithm.BACKTRACK_PM):
        opt = solve_backtrack(inst, SolverConfig(alg))
        feas = solve_feasibility(inst, SolverConfig(alg))
        assert opt.status is feas.status is Status.INFEASIBLE
        assert opt.stats.nodes_expanded <= 16
        assert feas.stats.nodes_expanded == opt.stats.nodes_expanded
        assert opt.stats.complete_evaluations == 0
    assert solve_all_solutions(inst).all_solutions == []


def test_feasibility_stops_at_first():
    g = template("fig5")
    inst = make_instance(g, {op: [(1, 1), (2, 2), (3, 3)] for op in g.operations})
    for alg in ALGS:
        rep = solve_feasibility(inst, SolverConfig(alg))
        assert rep.status is Status.FEASIBLE
        assert rep.stats.complete_evaluations == 1


@pytest.mark.parametrize("seed", range(15))
def test_feasibility_result_satisfies_bounds(seed):
    inst = small_random_instance(seed)
    inst = inst.with_sla(binding_sla(inst, random.Random(seed), 0.5))
    for alg in ALGS:
        rep = solve_feasibility(inst, SolverConfig(alg))
        if rep.status is Status.FEASIBLE:
            assert inst.sla.satisfied_by(evaluate(inst, rep.best))
        else:
            assert rep.status is Status.INFEASIBLE
            assert solve_exhaustive(inst).status is Status.INFEASIBLE


def test_all_solutions_unbounded_counts_everything():
    inst = generate_instance(GenSpec("seq", (3,), 3, "custom", 0.5, 1, max_s=1e12, max_e=1e12))
    rep = solve_all_solutions(inst)
    assert len(rep.all_solutions) == 27


def test_all_solutions_cap():
    inst = generate_instance(GenSpec("seq", (4,), 5, "simple", 0.5, 1))
    with pytest.raises(EnumerationCapExceeded):
        solve_all_solutions(inst, SolverConfig(objective=Objective.ALL_SOLUTIONS, enumeration_cap=100))


@pytest.mark.parametrize("seed", range(40))
def test_solvers_agree_with_brute_force(seed):
    inst = small_random_instance(seed)
    inst = inst.with_sla(binding_sla(inst, random.Random(seed), [0.0, 0.5, 1.0][seed % 3]))
    truth = brute_force_optimum(inst)
    for alg in ALGS:
        rep = solve(inst, SolverConfig(alg))
        if math.isinf(truth):
            assert rep.status is Status.INFEASIBLE
        else:
            assert rep.status is Status.OPTIMAL
            assert rep.opt_penalty == pytest.approx(truth, rel=1e-9)
    al = solve(inst, SolverConfig(objective=Objective.ALL_SOLUTIONS))
    if al.all_solutions:
        best = min(inst.sla.lam * q.s + (1 - inst.sla.lam) * q.e
                   for q in (evaluate(inst, f) for f in al.all_solutions))
        assert best == pytest.approx(truth, rel=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_report_invariants(seed):
    inst = small_random_instance(seed)
    inst = inst.with_sla(binding_sla(inst, random.Random(seed), 0.5))
    for alg in ALGS:
        rep = solve(inst, SolverConfig(alg))
        st = rep.stats
        assert 0 <= st.useless_work <= st.complete_evaluations
        if rep.status is Status.OPTIMAL:
            assert inst.sla.satisfied_by(rep.best_qos)
            assert rep.best_qos == evaluate(inst, rep.best)


def test_determinism_with_seed():
    inst = small_random_instance(5)
    inst = inst.with_sla(binding_sla(inst, random.Random(5), 0.5))
    for alg in ALGS:
        a = solve(inst, SolverConfig(alg, seed=3))
        b = solve(inst, SolverConfig(alg, seed=3))
        assert (a.status, a.best, a.opt_penalty) == (b.status, b.best, b.opt_penalty)
        assert (a.stats.complete_evaluations, a.stats.useless_work, a.stats.nodes_expanded) == \
               (b.stats.complete_evaluations, b.stats.useless_work, b.stats.nodes_expanded)


def test_seeded_shuffle_keeps_optimum():
    inst = small_random_instance(8)
    inst = inst.with_sla(binding_sla(inst, random.Random(8), 0.5))
    base = solve(inst, SolverConfig(Algorithm.EXHAUSTIVE))
    for seed in range(5):
        rep = solve(inst, SolverConfig(Algorithm.BACKTRACK_PM, seed=seed))
        assert rep.status is base.status
        if base.opt_penalty is not None:
            assert rep.opt_penalty == pytest.approx(base.opt_penalty, rel=1e-12)


def test_cutoff_returns_best_so_far():
    inst = generate_instance(GenSpec("seq", (9,), 6, "custom", 0.5, 3, max_s=1e9, max_e=1e12))
    rep = solve(inst, SolverConfig(Algorithm.EXHAUSTIVE, cutoff_ms=5))
    assert rep.status is Status.CUTOFF
    assert rep.best is not None and inst.sla.satisfied_by(rep.best_qos)
    rep = solve(inst.with_sla(Sla(1, 1, 0.5)), SolverConfig(Algorithm.EXHAUSTIVE, cutoff_ms=5))
    assert rep.status is Status.CUTOFF and rep.best is None


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(cutoff_ms=0)
    with pytest.raises(ValueError):
        SolverConfig(algorithm="greedy")


def test_ties_keep_one_optimum():
    inst = make_instance(ONE, {"u1": [(3, 3), (3, 3), (3, 3)]}, sla=(10, 10, 0.5))
    for alg in ALGS:
        rep = solve(inst, SolverConfig(alg))
        assert rep.best == {"u1": 0}
        assert rep.stats.useless_work == rep.stats.complete_evaluations - 1
