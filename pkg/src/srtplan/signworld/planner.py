"""MAP planning over a sign network: M-, A- and P-steps from the goal back to the start.

Situations are frozensets of ground literals ``(predicate, *objects)``.  The
search is a best-first regression: each node is a situation still to be
achieved, successors come from the actions selected by the M-step and grounded
by the A-step, and the P-step computes the preceding situation.  A node is a
solution once it is included in the start situation.

Node ordering uses g plus the pairwise reachability bound h2 computed forward
from the start.  h2 never overestimates, so with reopening the returned plans
are shortest.  It also prunes regressed situations containing a pair of
literals that can never hold together.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import Inapplicable, ResourceExhausted, Unsolvable
from .network import ProceduralSign, SignNetwork

INF = float("inf")


@dataclass(frozen=True, order=True)
class GroundAction:
    name: str
    args: tuple[str, ...]
    pre: frozenset = field(compare=False, default=frozenset())
    add: frozenset = field(compare=False, default=frozenset())
    delete: frozenset = field(compare=False, default=frozenset())

    @classmethod
    def from_sign(cls, sign: ProceduralSign, binding: dict) -> "GroundAction":
        return cls(
            sign.name,
            tuple(binding[r] for r in sign.role_names),
            frozenset(a.ground(binding) for a in sign.condition),
            frozenset(a.ground(binding) for a in sign.add),
            frozenset(a.ground(binding) for a in sign.delete),
        )

    def applicable(self, state) -> bool:
        return self.pre <= state

    def apply(self, state) -> frozenset:
        return (frozenset(state) - self.delete) | self.add

    def __str__(self):
        return "(" + " ".join((self.name, *self.args)) + ")"


@dataclass(frozen=True)
class PlanLimits:
    max_iterations: int = 500_000
    max_frontier: int = 2_000_000


@dataclass
class Plan:
    steps: list[GroundAction]
    situations: list[frozenset]  # situations[i] holds before steps[i]; the last one after the plan

    def __len__(self):
        return len(self.steps)

    def to_text(self) -> str:
        return "".join(f"{s}\n" for s in self.steps)

    def to_dict(self) -> dict:
        return {
            "steps": [{"name": s.name, "args": list(s.args)} for s in self.steps],
            "situations": [sorted(list(l) for l in sit) for sit in self.situations],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def validate(self, start, goal) -> bool:
        return validate_plan(self.steps, start, goal)


def validate_plan(steps, start, goal) -> bool:
    state = frozenset(start)
    for a in steps:
        if not a.applicable(state):
            return False
        state = a.apply(state)
    return frozenset(goal) <= state


def simulate(steps, start) -> list[frozenset]:
    states = [frozenset(start)]
    for a in steps:
        states.append(states[-1] - a.delete | a.add)
    return states


# --- the three steps ---------------------------------------------------------


def _unify(schema_args, literal_args, binding: dict) -> dict | None:
    out = dict(binding)
    for v, o in zip(schema_args, literal_args):
        if v.startswith("?"):
            if out.setdefault(v, o) != o:
                return None
        elif v != o:
            return None
    return out


def m_step(network: SignNetwork, situation) -> list[tuple[ProceduralSign, tuple]]:
    """Procedural signs with an added effect unifiable against a situation literal.

    Returns ``(sign, binding)`` pairs, where ``binding`` is a sorted tuple of
    (role, object) pairs covering only the roles of the unified literal.
    """
    found = set()
    for sign in network.procedural_signs():
        types = {r.name: r.type for r in sign.roles}
        for eff in sign.add:
            for lit in situation:
                if lit[0] != eff.predicate or len(lit) - 1 != len(eff.args):
                    continue
                b = _unify(eff.args, lit[1:], {})
                if b is None or not all(network.is_a(o, types[v]) for v, o in b.items()):
                    continue
                found.add((sign.name, tuple(sorted(b.items()))))
    return [(network.signs[name], b) for name, b in sorted(found)]


def action_score(network: SignNetwork, action: GroundAction, situation) -> float:
    """Preference of one ground action for regressing ``situation``.

    Meaning score from previous plans plus the literal-count bonus: effects
    already wanted by the situation minus conditions it does not contain.
    """
    bonus = len(action.add & situation) - len(action.pre - situation)
    return network.meaning_score(action.name, action.args) + bonus


def a_step(network: SignNetwork, candidates, situation) -> list[GroundAction]:
    situation = frozenset(situation)
    out = set()
    for sign, binding in candidates:
        b = dict(binding)
        free = [r for r in sign.roles if r.name not in b]
        pools = [network.objects_of_type(r.type) for r in free]

        def rec(i):
            if i == len(free):
                out.add(GroundAction.from_sign(sign, b))
                return
            for o in pools[i]:
                b[free[i].name] = o
                rec(i + 1)
            b.pop(free[i].name, None)

        rec(0)
    return sorted(out, key=lambda a: (-action_score(network, a, situation), a.name, a.args))


def p_step(action: GroundAction, situation) -> frozenset:
    situation = frozenset(situation)
    if not action.add & situation:
        raise Inapplicable(f"{action} adds nothing the situation needs")
    if (action.delete - action.add) & situation:
        raise Inapplicable(f"{action} removes a literal the situation needs")
    return (situation - action.add) | action.pre


# --- compiled form used by the search --------------------------------------------


class _Compiled:
    """Literal <-> bit index plus per-action bitmasks, shared by all queries on a network."""

    def __init__(self, network: SignNetwork):
        self.facts: list[tuple] = []
        self.index: dict[tuple, int] = {}
        self.actions = network.ground_actions()
        for a in self.actions:
            for lit in sorted(a.pre | a.add | a.delete):
                self.bit(lit)
        self.pre = [self.mask(a.pre) for a in self.actions]
        self.add = [self.mask(a.add) for a in self.actions]
        self.dele = [self.mask(a.delete - a.add) for a in self.actions]
        self.achievers: dict[int, list[int]] = {}
        for i, a in enumerate(self.actions):
            for lit in a.add:
                self.achievers.setdefault(self.index[lit], []).append(i)

    def bit(self, lit) -> int:
        i = self.index.get(lit)
        if i is None:
            i = self.index[lit] = len(self.facts)
            self.facts.append(lit)
        return i

    def mask(self, lits) -> int:
        m = 0
        for lit in lits:
            m |= 1 << self.bit(lit)
        return m

    def bits_of(self, mask: int) -> list[int]:
        out = []
        while mask:
            low = mask & -mask
            out.append(low.bit_length() - 1)
            mask ^= low
        return out

    def literals(self, mask: int) -> frozenset:
        return frozenset(self.facts[i] for i in self.bits_of(mask))


def _compiled(network: SignNetwork) -> _Compiled:
    c = getattr(network, "_compiled", None)
    if c is None or c.actions is not network.ground_actions():
        c = network._compiled = _Compiled(network)
    return c


def h2_table(network: SignNetwork, start) -> np.ndarray:
    """Pairwise cost table H[p, q]: lower bound on steps to make p and q true together."""
    comp = _compiled(network)
    start_mask = comp.mask(start)
    key = (start_mask, len(comp.facts))
    cached = network._h2_cache.get(key)
    if cached is not None:
        return cached
    n = len(comp.facts)
    H = np.full((n, n), INF)
    init = comp.bits_of(start_mask)
    H[np.ix_(init, init)] = 0.0
    acts = []
    for p, a, d in zip(comp.pre, comp.add, comp.dele):
        touched = d | a
        keep = np.array([not (touched >> q) & 1 for q in range(n)], dtype=bool)
        acts.append((np.array(comp.bits_of(p), dtype=int), np.array(comp.bits_of(a), dtype=int), keep))
    changed = True
    while changed:
        changed = False
        for pre, add, keep in acts:
            c_pre = H[np.ix_(pre, pre)].max() if len(pre) else 0.0
            if c_pre == INF:
                continue
            c = c_pre + 1.0
            block = H[np.ix_(add, add)]
            if (block > c).any():
                H[np.ix_(add, add)] = np.minimum(block, c)
                changed = True
            with_q = np.maximum(c_pre, H[pre].max(axis=0)) + 1.0 if len(pre) else np.ones(n)
            with_q = np.where(keep, with_q, INF)
            cur = H[add]
            better = with_q[None, :] < cur
            if better.any():
                new = np.minimum(cur, with_q[None, :])
                H[add] = new
                H[:, add] = np.minimum(H[:, add], new.T)
                changed = True
    network._h2_cache[key] = H
    return H


def _h2_of(H: np.ndarray, bits: list[int]) -> float:
    if not bits:
        return 0.0
    return float(H[np.ix_(bits, bits)].max())


# --- search -------------------------------------------------------------------


def map_plan(network: SignNetwork, start, goal, limits: PlanLimits | None = None) -> Plan:
    """Shortest plan from ``start`` to ``goal`` by regression from the goal."""
    limits = limits or PlanLimits()
    start = frozenset(start)
    goal = frozenset(goal)
    comp = _compiled(network)
    start_mask = comp.mask(start)
    goal_mask = comp.mask(goal)
    H = h2_table(network, start)
    hcache: dict[int, float] = {}

    def h(mask: int) -> float:
        v = hcache.get(mask)
        if v is None:
            v = hcache[mask] = _h2_of(H, comp.bits_of(mask))
        return v

    if goal_mask & ~start_mask == 0:
        return Plan([], [start])
    h0 = h(goal_mask)
    if h0 == INF:
        raise Unsolvable("goal has a literal no sequence of actions can produce")

    best_g = {goal_mask: 0}
    parent: dict[int, tuple[int, int]] = {}
    heap = [(h0, 0, 0, goal_mask)]
    counter = 1
    iterations = 0
    while heap:
        f, neg_g, _, s = heapq.heappop(heap)
        g = -neg_g
        if g > best_g.get(s, INF):
            continue
        if s & ~start_mask == 0:
            return _extract(comp, parent, s, start, goal)
        iterations += 1
        if iterations > limits.max_iterations:
            raise ResourceExhausted(f"iteration limit {limits.max_iterations} reached")
        relevant = set()
        for b in comp.bits_of(s):
            relevant.update(comp.achievers.get(b, ()))
        situation = None
        order = sorted(relevant)
        if network.meanings:
            situation = comp.literals(s)
            acts = [comp.actions[i] for i in order]
            scored = sorted(
                zip(order, acts),
                key=lambda t: (-action_score(network, t[1], situation), t[1].name, t[1].args),
            )
            order = [i for i, _ in scored]
        for i in order:
            if comp.dele[i] & s:
                continue
            ns = (s & ~comp.add[i]) | comp.pre[i]
            ng = g + 1
            if ng >= best_g.get(ns, INF):
                continue
            hv = h(ns)
            if hv == INF:
                continue
            best_g[ns] = ng
            parent[ns] = (s, i)
            heapq.heappush(heap, (ng + hv, -ng, counter, ns))
            counter += 1
            if len(heap) > limits.max_frontier:
                raise ResourceExhausted(f"frontier limit {limits.max_frontier} reached")
    raise Unsolvable("regression frontier exhausted")


def _extract(comp: _Compiled, parent, s: int, start, goal) -> Plan:
    steps = []
    while s in parent:
        s, i = parent[s]
        steps.append(comp.actions[i])
    plan = Plan(steps, simulate(steps, start))
    if not plan.validate(start, goal):
        raise AssertionError("regression produced a plan that fails forward simulation")
    return plan
