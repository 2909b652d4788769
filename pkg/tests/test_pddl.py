import pytest

from srtplan.errors import ParseError, UnsupportedFeature
from srtplan.signworld import fixture_text
from srtplan.signworld.pddl import (
    format_domain,
    format_problem,
    parse_domain,
    parse_pddl,
    parse_problem,
    tokenize,
)

BW = fixture_text("blocksworld-domain.pddl")
SUSSMAN = fixture_text("sussman.pddl")
SRT = fixture_text("srt-domain.pddl")


def position(text, needle):
    """1-based (line, column) of the first occurrence of ``needle``."""
    i = text.index(needle)
    return text.count("\n", 0, i) + 1, i - text.rfind("\n", 0, i)


# (fixture, original fragment, mutated fragment, where the error must point)
MUTATIONS = {
    "unknown predicate in precondition": ("D", "(clear ?x) (ontable ?x)", "(clear ?x) (ontabel ?x)", "ontabel"),
    "undeclared parameter": ("D", ":precondition (and (holding ?x))", ":precondition (and (holding ?z))", "?z"),
    "arity mismatch": ("D", "(and (holding ?x) (clear ?y))", "(and (holding ?x ?x) (clear ?y))", "(holding ?x ?x)"),
    "unknown parameter type": (
        "D",
        "(?x - block)\n    :precondition (and (holding",
        "(?x - blok)\n    :precondition (and (holding",
        "blok",
    ),
    "misspelt action keyword": ("D", ":effect (and (ontable ?x)", ":efect (and (ontable ?x)", ":efect"),
    "negative precondition": ("D", ":precondition (and (on ?x ?y)", ":precondition (and (not (on ?x ?y))", "(not (on ?x ?y))"),
    "unsupported requirement": ("D", ":strips :typing", ":strips :adl", ":adl"),
    "number as predicate name": ("D", "(handempty)\n    (holding", "(42)\n    (holding", "42"),
    "stray character": ("D", "(clear ?x - block)", "(clear ?x - block) %", "%"),
    "extra close paren": ("P", "(clear b) (handempty))", "(clear b) (handempty)))", "(:goal"),
    "undeclared object in init": ("P", "(on c a)", "(on c d)", "d) (ontable"),
    "undeclared object in goal": ("P", "(on b c)", "(on b e)", "e)"),
    "variable in init": ("P", "(on c a)", "(on ?c a)", "?c"),
    "wrong domain name": ("P", "(:domain blocksworld)", "(:domain blockworld)", "blockworld"),
    "unknown predicate in goal": ("P", "(on a b)", "(above a b)", "above"),
    "object of unknown type": ("P", "a b c - block", "a b c - brick", "brick"),
    "disjunctive goal": ("P", "(:goal (and", "(:goal (or", "or (on"),
    "misspelt problem keyword": ("P", "(:init", "(:inits", ":inits"),
    "parameters not a list": ("S", ":parameters (?o - obstacle)", ":parameters ?o", "?o\n"),
    "universal effect": ("S", "(and (near ?o))", "(and (forall (?r - region) (near ?o)))", "forall"),
    "conditional effect": ("S", "(and (near ?o))", "(and (when (blocking ?o) (near ?o)))", "when"),
    "numeric fluents": ("S", "(:predicates", "(:functions (cost))\n  (:predicates", ":functions"),
}


def _parse(which, text):
    if which == "P":
        return parse_problem(text, parse_domain(BW))
    return parse_domain(text)


@pytest.mark.parametrize("label", sorted(MUTATIONS))
def test_mutation_error_points_at_the_change(label):
    which, old, new, anchor = MUTATIONS[label]
    base = {"D": BW, "P": SUSSMAN, "S": SRT}[which]
    assert base.count(old) == 1
    text = base.replace(old, new)
    with pytest.raises((ParseError, UnsupportedFeature)) as info:
        _parse(which, text)
    assert (info.value.line, info.value.column) == position(text, anchor)


def test_missing_close_paren_points_at_end_of_input():
    text = SUSSMAN.replace("(handempty))", "(handempty)")
    with pytest.raises(ParseError) as info:
        parse_problem(text, parse_domain(BW))
    assert (info.value.line, info.value.column) == (text.count("\n") + 1, 1)
    assert "end of input" in str(info.value)


def test_error_message_names_expectation_and_token():
    with pytest.raises(ParseError, match=r"line 5, column 14: expected a ground object name, found '\?c'"):
        parse_problem(SUSSMAN.replace("(on c a)", "(on ?c a)"), parse_domain(BW))


def test_blocks_world_fixture_counts():
    task = parse_pddl(BW, SUSSMAN)
    assert [a.name for a in task.domain.actions] == ["pick-up", "put-down", "stack", "unstack"]
    assert len(task.domain.predicates) == 5
    assert task.init == {
        ("on", "c", "a"), ("ontable", "a"), ("ontable", "b"),
        ("clear", "c"), ("clear", "b"), ("handempty",),
    }
    assert task.goal == {("on", "a", "b"), ("on", "b", "c")}
    assert task.objects == {"a": "block", "b": "block", "c": "block"}


@pytest.mark.parametrize("name", ["blocksworld-domain.pddl", "srt-domain.pddl"])
def test_domain_round_trip(name):
    dom = parse_domain(fixture_text(name))
    again = parse_domain(format_domain(dom))
    assert again == dom
    assert format_domain(again) == format_domain(dom)


def test_problem_round_trip():
    dom = parse_domain(BW)
    prob = parse_problem(SUSSMAN, dom)
    assert parse_problem(format_problem(prob), dom) == prob


def test_srt_domain_structure():
    dom = parse_domain(SRT)
    assert dict(dom.types) == {"region": "object", "obstacle": "object"}
    acts = {a.name: a for a in dom.actions}
    assert set(acts) == {"move-to-region", "approach-obstacle", "destroy-obstacle"}
    assert [p.type for p in acts["destroy-obstacle"].params] == ["obstacle", "region"]
    assert [str(a) for a in acts["destroy-obstacle"].delete] == ["(blocking ?o)"]


def test_empty_goal_is_satisfied_by_init():
    text = SUSSMAN.replace("(:goal (and (on a b) (on b c)))", "(:goal (and))")
    task = parse_pddl(BW, text)
    assert task.goal == frozenset() and task.goal <= task.init


def test_forall_in_precondition_unsupported():
    text = BW.replace(
        ":precondition (and (holding ?x))",
        ":precondition (forall (?y - block) (clear ?y))",
    )
    with pytest.raises(UnsupportedFeature) as info:
        parse_domain(text)
    assert info.value.name == "forall"


def test_comments_and_whitespace_are_skipped():
    toks = tokenize("; header\n(DEFINE  ; trailing\n\t(domain x))")
    # names are case-insensitive; the empty token marks end of input
    assert [t.text for t in toks] == ["(", "define", "(", "domain", "x", ")", ")", ""]
    assert (toks[1].line, toks[1].column) == (2, 2)


def test_problem_without_domain_skips_name_checks():
    prob = parse_problem("(define (problem p) (:domain d) (:objects q) (:init (foo q)) (:goal (bar q)))")
    assert prob.domain_name == "d"
    assert [str(a) for a in prob.goal] == ["(bar q)"]
