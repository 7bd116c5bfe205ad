import math

import pytest

from maneuver_planner import ff
from maneuver_planner.pddl import Atom, State
from maneuver_planner.pddl.grounding import GroundAction, GroundTask


def chain_task(n, extra=()):
    """p0 -> p1 -> ... -> pn with optional shortcut actions."""
    atoms = tuple(Atom(f"p{i}") for i in range(n + 1))
    idx = {a: i for i, a in enumerate(atoms)}
    acts = [GroundAction(f"step{i}", (), frozenset({i}), frozenset(), frozenset({i + 1}), frozenset({i}))
            for i in range(n)]
    acts += list(extra)
    return GroundTask(atoms, idx, tuple(acts), State(frozenset({0})), frozenset({n}), frozenset())


def test_hff_on_chain():
    t = chain_task(5)
    assert ff.hff(t, t.init) == 5
    assert ff.hff(t, State(frozenset({5}))) == 0
    rpg = ff.build_rpg(t, t.init)
    assert rpg.depth == 5


def test_unreachable_goal():
    t = chain_task(3)
    t2 = GroundTask(t.atoms, t.atom_index, t.actions[:1], t.init, t.goal_pos, frozenset())
    assert ff.hff(t2, t2.init) == math.inf
    assert isinstance(ff.search(t2), ff.Unsolvable)
    assert not ff.search(t2)


def test_weighted_and_optimal_search():
    shortcut = GroundAction("jump", (), frozenset({0}), frozenset(), frozenset({6}), frozenset({0}), cost=10.0)
    t = chain_task(6, [shortcut])
    best = ff.search(t, weight=1.0)
    assert best.cost == 6 and len(best) == 6
    greedy = ff.search(t, weight=5.0)
    assert greedy.cost in (6.0, 10.0)


def test_budget_exhaustion():
    t = chain_task(30)
    res = ff.search(t, node_budget=3)
    assert isinstance(res, ff.BudgetExhausted)


def test_weight_below_one_rejected():
    with pytest.raises(ValueError):
        ff.search(chain_task(2), weight=0.5)


def test_negative_precondition_respected():
    # a blocker atom forbids the direct action; the detour clears it
    atoms = tuple(Atom(n) for n in ("start", "goal", "blocker"))
    idx = {a: i for i, a in enumerate(atoms)}
    direct = GroundAction("direct", (), frozenset({0}), frozenset({2}), frozenset({1}), frozenset())
    clear = GroundAction("clear", (), frozenset({2}), frozenset(), frozenset(), frozenset({2}))
    t = GroundTask(atoms, idx, (direct, clear), State(frozenset({0, 2})), frozenset({1}), frozenset())
    plan = ff.search(t, weight=1.0)
    assert [a.name for a in plan.actions] == ["clear", "direct"]
