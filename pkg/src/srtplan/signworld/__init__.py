"""Symbolic level: PDDL-subset parsing, the sign network and the MAP planner."""

from importlib import resources

from .network import (
    FeatureLink,
    PersonalMeaning,
    PredictionMatrix,
    ProceduralSign,
    Sign,
    SignNetwork,
    build_sign_network,
)
from .pddl import (
    Atom,
    Domain,
    Problem,
    TaskDescription,
    format_domain,
    format_problem,
    parse_domain,
    parse_pddl,
    parse_problem,
)
from .planner import (
    GroundAction,
    Plan,
    PlanLimits,
    a_step,
    h2_table,
    m_step,
    map_plan,
    p_step,
    validate_plan,
)

__all__ = [
    "FeatureLink",
    "PersonalMeaning",
    "PredictionMatrix",
    "ProceduralSign",
    "Sign",
    "SignNetwork",
    "build_sign_network",
    "Atom",
    "Domain",
    "Problem",
    "TaskDescription",
    "format_domain",
    "format_problem",
    "parse_domain",
    "parse_pddl",
    "parse_problem",
    "GroundAction",
    "Plan",
    "PlanLimits",
    "a_step",
    "h2_table",
    "m_step",
    "map_plan",
    "p_step",
    "validate_plan",
    "fixture_text",
]


def fixture_text(name: str) -> str:
    """Text of a PDDL file shipped in ``srtplan/data``."""
    return resources.files("srtplan").joinpath("data").joinpath(name).read_text()
