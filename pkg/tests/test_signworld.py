import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import block_towers, bw_bfs_length, bw_problem_text, tower_facts
from srtplan.errors import Inapplicable, ResourceExhausted, Unsolvable
from srtplan.signworld import (
    GroundAction,
    PlanLimits,
    SignNetwork,
    a_step,
    build_sign_network,
    fixture_text,
    m_step,
    map_plan,
    p_step,
    parse_pddl,
)
from srtplan.signworld.planner import simulate, validate_plan

BW = fixture_text("blocksworld-domain.pddl")


def sussman():
    return build_sign_network(parse_pddl(BW, fixture_text("sussman.pddl")))


def bw_network(blocks, init_towers, goal_facts):
    text = bw_problem_text("t", blocks, tower_facts(init_towers), goal_facts)
    return build_sign_network(parse_pddl(BW, text))


def ground(net, name, *args):
    return next(a for a in net.ground_actions() if a.name == name and a.args == args)


def test_network_structure():
    net = sussman()
    assert [s.name for s in net.procedural_signs()] == ["pick-up", "put-down", "stack", "unstack"]
    kinds = {}
    for s in net.signs.values():
        kinds.setdefault(s.kind, set()).add(s.name)
    assert kinds["type"] == {"object", "block"}
    assert kinds["object"] == {"a", "b", "c"}
    assert kinds["predicate"] == {"on", "ontable", "clear", "handempty", "holding"}
    assert net.start == {("on", "c", "a"), ("ontable", "a"), ("ontable", "b"),
                         ("clear", "c"), ("clear", "b"), ("handempty",)}


def test_relation_views_reference_existing_signs():
    net = sussman()
    for edges in (net.wp, net.wm, net.wa):
        for a, b in edges:
            assert a in net.signs and b in net.signs
    assert ("stack", "holding") in net.wp and ("holding", "stack") in net.wm
    assert ("on", "c") in net.wa


def test_prediction_matrices_well_formed_and_ordered():
    net = sussman()
    for sign in net.signs.values():
        for m in sign.images:
            assert m.is_well_formed()
    stack = net.signs["stack"].images[0]
    assert stack.n_condition == 1 and stack.n_columns == 2
    assert [str(f) for f in stack.condition_features()] == ["(holding ?x)", "(clear ?y)"]
    effects = {str(f) for f in stack.effect_features()}
    assert effects == {"(on ?x ?y)", "(clear ?x)", "(handempty)", "(not (holding ?x))", "(not (clear ?y))"}


def test_srt_domain_gives_three_procedural_signs():
    problem = """(define (problem p) (:domain srt)
      (:objects here there - region o1 - obstacle)
      (:init (at here) (blocking o1) (destroyable o1) (adjacent_region o1))
      (:goal (and (at there))))"""
    net = build_sign_network(parse_pddl(fixture_text("srt-domain.pddl"), problem))
    signs = {s.name: s for s in net.procedural_signs()}
    assert set(signs) == {"move-to-region", "approach-obstacle", "destroy-obstacle"}
    assert [r.type for r in signs["destroy-obstacle"].roles] == ["obstacle", "region"]
    plan = map_plan(net, net.start, net.goal)
    assert [str(s) for s in plan.steps] == [
        "(approach-obstacle o1)", "(destroy-obstacle o1 there)", "(move-to-region here there)",
    ]


def test_m_step_on_goal():
    net = sussman()
    got = {(s.name, b) for s, b in m_step(net, net.goal)}
    assert ("stack", (("?x", "a"), ("?y", "b"))) in got
    assert ("stack", (("?x", "b"), ("?y", "c"))) in got
    assert all(name == "stack" for name, _ in got)
    names = [(s.name, b) for s, b in m_step(net, net.goal)]
    assert names == sorted(names)


def test_m_step_empty_cases():
    net = sussman()
    assert m_step(net, frozenset()) == []
    assert m_step(net, {("on", "a", "zz")}) == []


def test_a_step_literal_heuristic_and_ties():
    net = sussman()
    goal = net.goal
    ranked = a_step(net, m_step(net, goal), goal)
    assert {str(a) for a in ranked} == {"(stack a b)", "(stack b c)"}
    # symmetric candidates: same score, lexicographic order
    assert [str(a) for a in ranked] == ["(stack a b)", "(stack b c)"]
    situation = {("clear", "a")}
    ranked = a_step(net, m_step(net, situation), situation)
    top = ranked[0]
    # put-down a has one wanted effect and one missing condition; nothing scores higher
    assert str(top) == "(put-down a)"


def test_reinforcement_reorders_candidates():
    net = sussman()
    goal = net.goal
    plan = map_plan(net, net.start, goal)
    net.reinforce(plan)
    net.reinforce(plan)
    ranked = a_step(net, m_step(net, goal), goal)
    assert str(ranked[0]) == str(plan.steps[-1])
    assert net.meaning_score(plan.steps[0].name, plan.steps[0].args) == 2
    again = map_plan(net, net.start, goal)
    assert len(again) == len(plan) and again.validate(net.start, goal)
    assert net.personal_meanings("stack")[0].score >= 1


def test_p_step_examples():
    net = sussman()
    stack_ab = ground(net, "stack", "a", "b")
    assert p_step(stack_ab, {("on", "a", "b")}) == {("holding", "a"), ("clear", "b")}
    with pytest.raises(Inapplicable):
        p_step(stack_ab, {("ontable", "c")})
    # keeping (clear b) in the situation would be undone by stack
    with pytest.raises(Inapplicable):
        p_step(stack_ab, {("on", "a", "b"), ("clear", "b")})
    # a condition already in the situation is not duplicated
    destroy = GroundAction(
        "destroy-obstacle", ("o1", "r"),
        pre=frozenset({("near", "o1"), ("blocking", "o1")}),
        add=frozenset({("reachable", "r")}),
        delete=frozenset({("blocking", "o1")}),
    )
    got = p_step(destroy, {("reachable", "r"), ("near", "o1")})
    assert got == {("near", "o1"), ("blocking", "o1")}


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_regression_progression_duality(data):
    net = sussman()
    acts = net.ground_actions()
    facts = sorted({l for a in acts for l in a.pre | a.add | a.delete})
    action = data.draw(st.sampled_from(acts))
    extra = data.draw(st.sets(st.sampled_from(facts), max_size=4))
    situation = frozenset(extra) | {data.draw(st.sampled_from(sorted(action.add)))}
    try:
        before = p_step(action, situation)
    except Inapplicable:
        return
    more = data.draw(st.sets(st.sampled_from(facts), max_size=3))
    after = action.apply(before | more)
    assert situation <= after


def test_sussman_gives_six_steps():
    net = sussman()
    plan = map_plan(net, net.start, net.goal)
    assert len(plan) == 6 == bw_bfs_length(net.start, net.goal)
    assert plan.validate(net.start, net.goal)
    assert plan.situations == simulate(plan.steps, net.start)
    for step, before in zip(plan.steps, plan.situations):
        assert step.pre <= before
    assert plan.to_text().splitlines()[0].startswith("(unstack c a")


def test_plan_json_has_situations():
    net = sussman()
    plan = map_plan(net, net.start, net.goal)
    data = json.loads(plan.to_json())
    assert len(data["steps"]) == 6 and len(data["situations"]) == 7
    assert data["steps"][0] == {"name": "unstack", "args": ["c", "a"]}


def test_goal_subset_of_start_gives_empty_plan():
    net = sussman()
    assert len(map_plan(net, net.start, {("ontable", "a")})) == 0


def test_unreachable_goal_is_unsolvable():
    net = sussman()
    with pytest.raises(Unsolvable):
        map_plan(net, net.start, {("on", "a", "a")})
    # (on a b) with a holding b can never hold together
    with pytest.raises(Unsolvable):
        map_plan(net, net.start, {("on", "a", "b"), ("holding", "b"), ("handempty",)})


def test_zero_action_network():
    text = "(define (domain d) (:requirements :strips) (:predicates (p) (q)))"
    net = build_sign_network(parse_pddl(text, "(define (problem x) (:domain d) (:init (p)) (:goal (and (p))))"))
    assert net.procedural_signs() == []
    assert len(map_plan(net, net.start, net.goal)) == 0
    with pytest.raises(Unsolvable):
        map_plan(net, net.start, {("q",)})


def test_limits_raise_resource_exhausted():
    net = bw_network("abcd", (("a", "b", "c", "d"),), tower_facts((("d", "c", "b", "a"),), with_hand=False))
    with pytest.raises(ResourceExhausted):
        map_plan(net, net.start, net.goal, PlanLimits(max_iterations=3))


def test_planning_is_deterministic():
    a = map_plan(sussman(), sussman().start, sussman().goal)
    b = map_plan(sussman(), sussman().start, sussman().goal)
    assert [str(s) for s in a.steps] == [str(s) for s in b.steps]


def test_three_block_parity_with_bfs():
    blocks = "abc"
    arrangements = list(block_towers(blocks))
    assert len(arrangements) == 13
    for init, goal in itertools.product(arrangements, repeat=2):
        goal_facts = tower_facts(goal, with_hand=False)
        net = bw_network(blocks, init, goal_facts)
        plan = map_plan(net, net.start, net.goal)
        assert validate_plan(plan.steps, net.start, net.goal)
        assert len(plan) == bw_bfs_length(net.start, net.goal)


def test_snapshot_round_trip(tmp_path):
    net = sussman()
    net.reinforce(map_plan(net, net.start, net.goal))
    net.save(tmp_path / "net.json")
    back = SignNetwork.load(tmp_path / "net.json")
    assert back.to_dict() == net.to_dict()
    assert back.meanings == net.meanings
    assert back.wm == net.wm and back.wp == net.wp
    assert np.array_equal(back.signs["stack"].images[0].bits, net.signs["stack"].images[0].bits)
    plan = map_plan(back, back.start, back.goal)
    assert len(plan) == 6


def test_ground_action_text():
    act = GroundAction("stack", ("a", "b"))
    assert str(act) == "(stack a b)"
