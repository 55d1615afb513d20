"""Exact-solver soundness and representation-equivalence checks."""

from __future__ import annotations

import numpy as np
import pytest

from birdcast import (
    EnumerationCapExceeded,
    McsTable,
    ProblemInstance,
    Selection,
    accelerated_greedy,
    broadcast_solve,
    brute_force_assignments,
    dp_solve,
    exact_solve,
    kmeanspp_solve,
    marginal_util_solve,
    refined_greedy,
    unicast_solve,
    unrestricted_opt,
    utility,
    verify_equivalence,
)

from conftest import random_instance


def test_trivial_single_item():
    table = McsTable(rates=(1.0,), thresholds_db=(0.0,))
    inst = ProblemInstance(moi=np.array([[0.7]]), snr_db=(3.0,), mcs=table,
                           grid_bytes=1000.0, bandwidth_hz=1e6, budget_s=1.0)
    res = exact_solve(inst)
    assert res.opt_utility == 0.7
    assert res.opt_selection.items == frozenset({(0, 0)})


def test_nothing_fits_gives_zero():
    table = McsTable(rates=(1.0,), thresholds_db=(0.0,))
    inst = ProblemInstance(moi=np.array([[0.7]]), snr_db=(3.0,), mcs=table,
                           grid_bytes=1000.0, bandwidth_hz=1e6, budget_s=1e-9)
    res = exact_solve(inst)
    assert res.opt_utility == 0.0
    assert len(res.opt_selection) == 0


def test_cap_rejection():
    rng = np.random.default_rng(50)
    inst = random_instance(rng, max_users=3, max_grids=8, max_rates=3)
    with pytest.raises(EnumerationCapExceeded):
        exact_solve(inst, cap=1)


def test_pruned_equals_unpruned():
    rng = np.random.default_rng(51)
    for _ in range(60):
        inst = random_instance(rng, max_users=4, max_grids=5, max_rates=2)
        if (inst.n_rates + 1) ** inst.n_grids > 2 ** 12:
            continue
        pruned = exact_solve(inst)
        full = brute_force_assignments(inst)
        assert pruned.opt_utility == full.opt_utility
        assert utility(inst, pruned.opt_selection) == pruned.opt_utility


def test_single_rate_restriction_loses_nothing():
    rng = np.random.default_rng(52)
    for _ in range(30):
        inst = random_instance(rng, max_users=4, max_grids=4, max_rates=3)
        if inst.n_grids * inst.n_rates > 16:
            continue
        assert exact_solve(inst).opt_utility == unrestricted_opt(inst)


def test_opt_dominates_every_solver():
    rng = np.random.default_rng(53)
    solvers = (refined_greedy, accelerated_greedy, broadcast_solve,
               unicast_solve, marginal_util_solve, kmeanspp_solve, dp_solve)
    for _ in range(30):
        inst = random_instance(rng)
        opt = exact_solve(inst).opt_utility
        for solver in solvers:
            assert solver(inst).utility <= opt + 1e-9


def test_opt_selection_is_feasible():
    rng = np.random.default_rng(54)
    for _ in range(40):
        inst = random_instance(rng)
        res = exact_solve(inst)
        cost = float(sum(inst.item_cost_s[m] for _, m in res.opt_selection.items))
        assert cost <= inst.budget_s + 1e-15
        assert utility(inst, res.opt_selection) == res.opt_utility


def test_verify_equivalence_clean():
    rng = np.random.default_rng(55)
    for _ in range(5):
        inst = random_instance(rng)
        report = verify_equivalence(inst, trials=200, seed=99)
        assert report.ok, report.violations
        assert report.trials == 200


def test_empty_selection_round_trip():
    rng = np.random.default_rng(56)
    inst = random_instance(rng)
    from birdcast import evaluate_plan, plan_from_selection

    plan = plan_from_selection(inst, Selection(frozenset()))
    ev = evaluate_plan(inst, plan)
    assert (ev.utility, ev.latency_s) == (0.0, 0.0)
