"""Relaxed planning graph, the FF heuristic and weighted A* over ground tasks.

The relaxation ignores delete effects and negative preconditions. Numeric
fluents never gate applicability, so they play no part in the relaxation or
in duplicate detection; action costs are accumulated exactly.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Optional

from .errors import GoalNotInGraph
from .pddl.grounding import GroundTask, Plan, State, applicable, apply, validate_plan

INF = math.inf
# keeps h strictly positive off the goal when every extracted action is free
_EPS = 1e-9
DEFAULT_WEIGHT = 1.5
DEFAULT_BUDGET = 200_000


@dataclass(frozen=True)
class RelaxedPlanningGraph:
    fact_layers: tuple  # cumulative frozensets of atom ids
    action_layers: tuple  # tuples of action indices first applicable at each layer
    atom_layer: dict  # atom id -> first layer
    action_layer: dict  # action index -> first layer
    goal_reached: bool

    @property
    def depth(self) -> int:
        return len(self.fact_layers) - 1


def _pre_index(task: GroundTask):
    idx = getattr(task, "_pre_index", None)
    if idx is None:
        idx = {}
        for i, a in enumerate(task.actions):
            for p in a.pre_pos:
                idx.setdefault(p, []).append(i)
        object.__setattr__(task, "_pre_index", idx)
    return idx


def build_rpg(task: GroundTask, state: State, goal: Optional[frozenset] = None) -> RelaxedPlanningGraph:
    """Apply everything applicable, ignoring deletes, until the goal or a fixpoint."""
    goal = task.goal_pos if goal is None else goal
    actions = task.actions
    pre_index = _pre_index(task)
    remaining = [len(a.pre_pos) for a in actions]
    atom_layer = {p: 0 for p in state.atoms}
    for p in state.atoms:
        for i in pre_index.get(p, ()):
            remaining[i] -= 1
    action_layer = {}
    fact_layers = [frozenset(state.atoms)]
    action_layers = []
    ready = [i for i, r in enumerate(remaining) if r == 0]
    layer = 0
    current = set(state.atoms)
    while True:
        if goal <= current:
            return RelaxedPlanningGraph(tuple(fact_layers), tuple(action_layers), atom_layer, action_layer, True)
        new_actions = [i for i in ready if i not in action_layer]
        for i in new_actions:
            action_layer[i] = layer
        new_atoms = set()
        for i in new_actions:
            new_atoms |= actions[i].add
        new_atoms -= current
        if not new_atoms:
            return RelaxedPlanningGraph(tuple(fact_layers), tuple(action_layers) + (tuple(new_actions),),
                                        atom_layer, action_layer, False)
        action_layers.append(tuple(new_actions))
        layer += 1
        ready = []
        for p in sorted(new_atoms):
            atom_layer[p] = layer
            for i in pre_index.get(p, ()):
                remaining[i] -= 1
                if remaining[i] == 0:
                    ready.append(i)
        # actions made applicable earlier but not yet layered are carried by new_actions only once
        current |= new_atoms
        fact_layers.append(frozenset(current))
        ready.sort()


def extract_relaxed_plan(task: GroundTask, rpg: RelaxedPlanningGraph, goal: Optional[frozenset] = None) -> list:
    """Backward extraction of ``(action index, layer)`` pairs from the goal.

    Each subgoal takes the cheapest achiever from the layer below its first
    appearance (grounding order breaks ties). Add effects of chosen actions
    count as achieved, so shared achievers are extracted once.
    """
    goal = task.goal_pos if goal is None else goal
    missing = [g for g in goal if g not in rpg.atom_layer]
    if missing:
        raise GoalNotInGraph(f"{len(missing)} goal atoms never appear in the graph")
    depth = rpg.depth
    if depth == 0:
        return []
    pending = [set() for _ in range(depth + 1)]
    for g in goal:
        pending[rpg.atom_layer[g]].add(g)
    true_at = [set() for _ in range(depth + 1)]
    achievers = {}
    for i, layer in rpg.action_layer.items():
        for p in task.actions[i].add:
            achievers.setdefault(p, []).append(i)
    chosen = []
    picked = set()
    for layer in range(depth, 0, -1):
        for g in sorted(pending[layer]):
            if g in true_at[layer]:
                continue
            cands = [i for i in achievers.get(g, ()) if rpg.action_layer[i] <= layer - 1]
            best = min(cands, key=lambda i: (task.actions[i].cost, rpg.action_layer[i], i))
            if (best, layer - 1) not in picked:
                picked.add((best, layer - 1))
                chosen.append((best, layer - 1))
            act = task.actions[best]
            for p in act.pre_pos:
                lp = rpg.atom_layer[p]
                if lp != 0 and p not in true_at[layer - 1]:
                    pending[lp].add(p)
            for p in act.add:
                true_at[layer].add(p)
                true_at[layer - 1].add(p)
    return chosen


def hff(task: GroundTask, state: State) -> float:
    """Cost of an extracted relaxed plan; infinity when the relaxation is unsolvable."""
    if task.goal_satisfied(state):
        return 0.0
    rpg = build_rpg(task, state)
    if not rpg.goal_reached:
        return INF
    h = sum(task.actions[i].cost for i, _ in extract_relaxed_plan(task, rpg))
    return max(h, _EPS)


@dataclass(frozen=True)
class SearchNode:
    state: State
    g: float
    h: float
    parent: Optional["SearchNode"] = None
    action: Optional[int] = None


@dataclass(frozen=True)
class Unsolvable:
    expanded: int = 0

    def __bool__(self):
        return False


@dataclass(frozen=True)
class BudgetExhausted:
    expanded: int = 0

    def __bool__(self):
        return False


def _extract(task, node) -> Plan:
    acts = []
    while node.parent is not None:
        acts.append(task.actions[node.action])
        node = node.parent
    acts.reverse()
    return Plan(tuple(acts), sum(a.cost for a in acts))


def search(task: GroundTask, weight: float = DEFAULT_WEIGHT, node_budget: int = DEFAULT_BUDGET,
           optimal: Optional[bool] = None):
    """Best-first search on ``f = g + weight * h``.

    Returns a :class:`Plan`, :class:`Unsolvable` or :class:`BudgetExhausted`.
    States are identified by their atom sets; a cheaper path reopens a
    state. Equal ``f`` values pop in insertion order. With ``optimal``
    (default: ``weight == 1``) the search keeps going after the first plan and
    only stops once no open node is cheaper than the incumbent, which makes
    the result cost-optimal even though h^FF may overestimate.
    """
    if weight < 1:
        raise ValueError("weight must be >= 1")
    if optimal is None:
        optimal = weight == 1.0
    h0 = hff(task, task.init)
    if h0 == INF:
        return Unsolvable(0)
    counter = itertools.count()
    root = SearchNode(task.init, 0.0, h0)
    open_ = [(weight * h0, next(counter), root)]
    best_g = {task.init.atoms: 0.0}
    expanded = 0
    incumbent = None
    while open_:
        _, _, node = heapq.heappop(open_)
        if node.g > best_g.get(node.state.atoms, INF):
            continue
        if incumbent is not None and node.g >= incumbent.g:
            continue
        if task.goal_satisfied(node.state):
            incumbent = node
            if not optimal:
                break
            continue
        expanded += 1
        if expanded > node_budget:
            if incumbent is not None:
                break
            return BudgetExhausted(expanded - 1)
        for i, act in enumerate(task.actions):
            if not applicable(node.state, act):
                continue
            child_state = apply(node.state, act, check=False)
            g = node.g + act.cost
            key = child_state.atoms
            if g >= best_g.get(key, INF):
                continue
            if incumbent is not None and g >= incumbent.g:
                continue
            h = hff(task, child_state)
            if h == INF:
                best_g[key] = g
                continue
            best_g[key] = g
            heapq.heappush(open_, (g + weight * h, next(counter), SearchNode(child_state, g, h, node, i)))
    if incumbent is None:
        return Unsolvable(expanded)
    plan = _extract(task, incumbent)
    check = validate_plan(task, plan)
    if not check.ok:
        raise RuntimeError(f"search produced an invalid plan: {check.reason}")
    return plan
