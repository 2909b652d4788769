"""Reader and writer for the STRIPS + typing subset of PDDL.

Supported: ``:strips`` and ``:typing`` requirements, a type hierarchy, typed
constants/objects, predicates, and actions whose precondition is a
conjunction of positive atoms and whose effect is a conjunction of positive
and negated atoms.  Everything else is rejected with
:class:`UnsupportedFeature`; malformed text raises :class:`ParseError`
carrying the 1-based line and column of the offending token.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import ParseError, UnsupportedFeature

SUPPORTED_REQUIREMENTS = (":strips", ":typing")

_UNSUPPORTED_HEADS = {
    "or", "forall", "exists", "imply", "when", "increase", "decrease",
    "assign", "scale-up", "scale-down", "=", "<", ">", "<=", ">=", "*", "+", "/",
}
_UNSUPPORTED_SECTIONS = {
    ":functions", ":durative-action", ":derived", ":constraints", ":metric",
    ":timed-initial-literals", ":process", ":event",
}

_TOKEN_RE = re.compile(r"\s+|;[^\n]*|\(|\)|[A-Za-z?:][A-Za-z0-9_\-?:]*|-|[0-9]+(?:\.[0-9]+)?|[<>=*+/]=?")


@dataclass(frozen=True)
class Token:
    text: str
    line: int
    column: int


@dataclass
class _Node:
    """Parenthesised list or atom with the position of its first character."""

    line: int
    column: int
    atom: str | None = None
    children: list["_Node"] = field(default_factory=list)
    end: tuple[int, int] = (0, 0)

    @property
    def is_list(self) -> bool:
        return self.atom is None

    def head(self) -> str | None:
        if self.is_list and self.children and not self.children[0].is_list:
            return self.children[0].atom
        return None

    def describe(self) -> str:
        return self.atom if self.atom is not None else "("


@dataclass(frozen=True)
class TypedName:
    name: str
    type: str = "object"


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple[str, ...] = ()

    def ground(self, binding: dict) -> tuple:
        return (self.predicate, *(binding.get(a, a) for a in self.args))

    def __str__(self):
        return "(" + " ".join((self.predicate, *self.args)) + ")"


@dataclass(frozen=True)
class PredicateSchema:
    name: str
    params: tuple[TypedName, ...] = ()


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[TypedName, ...] = ()
    precondition: tuple[Atom, ...] = ()
    add: tuple[Atom, ...] = ()
    delete: tuple[Atom, ...] = ()


@dataclass(frozen=True)
class Domain:
    name: str
    requirements: tuple[str, ...] = ()
    types: tuple[tuple[str, str], ...] = ()  # (type, parent)
    constants: tuple[TypedName, ...] = ()
    predicates: tuple[PredicateSchema, ...] = ()
    actions: tuple[ActionSchema, ...] = ()

    def type_parent(self) -> dict[str, str]:
        return dict(self.types)


@dataclass(frozen=True)
class Problem:
    name: str
    domain_name: str
    objects: tuple[TypedName, ...] = ()
    init: tuple[Atom, ...] = ()
    goal: tuple[Atom, ...] = ()


@dataclass(frozen=True)
class TaskDescription:
    domain: Domain
    problem: Problem

    @property
    def objects(self) -> dict[str, str]:
        out = {c.name: c.type for c in self.domain.constants}
        out.update({o.name: o.type for o in self.problem.objects})
        return out

    @property
    def init(self) -> frozenset:
        return frozenset((a.predicate, *a.args) for a in self.problem.init)

    @property
    def goal(self) -> frozenset:
        return frozenset((a.predicate, *a.args) for a in self.problem.goal)


# --- lexing and s-expressions ----------------------------------------------


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(line, pos - line_start + 1, "a PDDL token", text[pos])
        tok = m.group()
        if not tok[0].isspace() and tok[0] != ";":
            tokens.append(Token(tok.lower(), line, pos - line_start + 1))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rindex("\n") + 1
        pos = m.end()
    eof = Token("", line, pos - line_start + 1)
    tokens.append(eof)
    return tokens


def _read(tokens: list[Token]) -> _Node:
    first = tokens[0]
    if first.text != "(":
        raise ParseError(first.line, first.column, "'('", first.text or "end of input")
    stack: list[_Node] = []
    root = None
    for tok in tokens:
        if tok.text == "":
            if stack:
                raise ParseError(tok.line, tok.column, "')'", "end of input")
            break
        if root is not None and not stack:
            raise ParseError(tok.line, tok.column, "end of input", tok.text)
        if tok.text == "(":
            node = _Node(tok.line, tok.column)
            if stack:
                stack[-1].children.append(node)
            else:
                root = node
            stack.append(node)
        elif tok.text == ")":
            if not stack:
                raise ParseError(tok.line, tok.column, "'('", ")")
            stack.pop().end = (tok.line, tok.column)
        else:
            stack[-1].children.append(_Node(tok.line, tok.column, atom=tok.text))
    return root


def _fail(node: _Node, expected: str):
    raise ParseError(node.line, node.column, expected, node.describe())


def _expect_atom(node: _Node, expected: str, pred=None) -> str:
    if node.is_list or (pred is not None and not pred(node.atom)):
        _fail(node, expected)
    return node.atom


def _is_name(s: str) -> bool:
    return bool(s) and s[0].isalpha()


def _is_var(s: str) -> bool:
    return s.startswith("?") and len(s) > 1 and s[1].isalpha()


def _typed_list(nodes: list[_Node], item_pred, item_what: str, types=None) -> list[TypedName]:
    out: list[TypedName] = []
    pending: list[str] = []
    i = 0
    while i < len(nodes):
        node = nodes[i]
        if not node.is_list and node.atom == "-":
            if not pending:
                _fail(node, item_what)
            if i + 1 >= len(nodes):
                raise ParseError(node.line, node.column + 1, "a type name", "end of list")
            tnode = nodes[i + 1]
            if tnode.is_list and tnode.head() == "either":
                raise UnsupportedFeature("either", tnode.line, tnode.column)
            tname = _expect_atom(tnode, "a type name", _is_name)
            if types is not None and tname not in types:
                _fail(tnode, "a declared type")
            out.extend(TypedName(p, tname) for p in pending)
            pending = []
            i += 2
            continue
        pending.append(_expect_atom(node, item_what, item_pred))
        i += 1
    out.extend(TypedName(p, "object") for p in pending)
    return out


def _check_supported_head(node: _Node):
    head = node.head()
    if head in _UNSUPPORTED_HEADS:
        raise UnsupportedFeature(head, node.children[0].line, node.children[0].column)


def _atom(node: _Node, predicates: dict | None, variables: set | None, consts: set | None) -> Atom:
    if not node.is_list:
        _fail(node, "'('")
    if not node.children:
        raise ParseError(node.end[0], node.end[1], "a predicate name", ")")
    _check_supported_head(node)
    name = _expect_atom(node.children[0], "a predicate name", _is_name)
    args = []
    for a in node.children[1:]:
        if a.is_list:
            _check_supported_head(a)
            _fail(a, "a term")
        term = a.atom
        if _is_var(term):
            if variables is None:
                _fail(a, "a ground object name")
            if term not in variables:
                _fail(a, "a declared parameter")
        elif _is_name(term):
            if consts is not None and term not in consts:
                _fail(a, "a declared object")
        else:
            _fail(a, "a term")
        args.append(term)
    if predicates is not None:
        if name not in predicates:
            _fail(node.children[0], "a declared predicate")
        if len(predicates[name]) != len(args):
            _fail(node, f"{len(predicates[name])} argument(s) for {name}")
    return Atom(name, tuple(args))


def _conjunction(node: _Node) -> list[_Node]:
    """Members of ``(and ...)``, a single literal, or the empty list ``()``."""
    if not node.is_list:
        _fail(node, "'('")
    if not node.children:
        return []
    _check_supported_head(node)
    if node.head() == "and":
        return node.children[1:]
    return [node]


def _sections(root: _Node, kind: str) -> tuple[str, list[_Node]]:
    if root.head() != "define":
        _fail(root.children[0] if root.children else root, "'define'")
    if len(root.children) < 2:
        raise ParseError(root.end[0], root.end[1], f"({kind} <name>)", ")")
    hdr = root.children[1]
    if not hdr.is_list or hdr.head() != kind:
        _fail(hdr.children[0] if hdr.is_list and hdr.children else hdr, f"'{kind}'")
    if len(hdr.children) != 2:
        raise ParseError(hdr.end[0], hdr.end[1], f"one {kind} name", ")")
    name = _expect_atom(hdr.children[1], f"a {kind} name", _is_name)
    for sec in root.children[2:]:
        if not sec.is_list or not sec.children:
            _fail(sec, "a section")
    return name, root.children[2:]


def parse_domain(text: str) -> Domain:
    root = _read(tokenize(text))
    name, sections = _sections(root, "domain")
    requirements: list[str] = []
    types: dict[str, str] = {}
    constants: list[TypedName] = []
    predicates: list[PredicateSchema] = []
    pred_params: dict[str, tuple] = {}
    actions: list[ActionSchema] = []
    known_types = {"object"}

    for sec in sections:
        key_node = sec.children[0]
        key = key_node.atom
        if key in _UNSUPPORTED_SECTIONS:
            raise UnsupportedFeature(key, key_node.line, key_node.column)
        if key == ":requirements":
            for r in sec.children[1:]:
                req = _expect_atom(r, "a requirement flag", lambda s: s.startswith(":"))
                if req not in SUPPORTED_REQUIREMENTS:
                    raise UnsupportedFeature(req, r.line, r.column)
                requirements.append(req)
        elif key == ":types":
            for tn in _typed_list(sec.children[1:], _is_name, "a type name"):
                types[tn.name] = tn.type
                known_types.add(tn.name)
            known_types.update(types.values())
            for parent in [p for p in types.values() if p != "object" and p not in types]:
                types[parent] = "object"
        elif key == ":constants":
            constants.extend(_typed_list(sec.children[1:], _is_name, "a constant name", known_types))
        elif key == ":predicates":
            for p in sec.children[1:]:
                if not p.is_list or not p.children:
                    _fail(p, "a predicate declaration")
                pname = _expect_atom(p.children[0], "a predicate name", _is_name)
                params = _typed_list(p.children[1:], _is_var, "a variable", known_types)
                predicates.append(PredicateSchema(pname, tuple(params)))
                pred_params[pname] = tuple(params)
        elif key == ":action":
            actions.append(_action(sec, pred_params, known_types, {c.name for c in constants}))
        else:
            _fail(key_node, "a domain section keyword")
    return Domain(
        name,
        tuple(requirements),
        tuple(types.items()),
        tuple(constants),
        tuple(predicates),
        tuple(actions),
    )


def _action(sec: _Node, pred_params, known_types, consts) -> ActionSchema:
    items = sec.children[1:]
    if not items:
        raise ParseError(sec.end[0], sec.end[1], "an action name", ")")
    name = _expect_atom(items[0], "an action name", _is_name)
    params: list[TypedName] = []
    pre: list[Atom] = []
    add: list[Atom] = []
    dele: list[Atom] = []
    i = 1
    while i < len(items):
        kw = items[i]
        key = _expect_atom(kw, "':parameters', ':precondition' or ':effect'",
                           lambda s: s in (":parameters", ":precondition", ":effect"))
        if i + 1 >= len(items):
            raise ParseError(sec.end[0], sec.end[1], f"a value for {key}", ")")
        val = items[i + 1]
        if key == ":parameters":
            if not val.is_list:
                _fail(val, "'('")
            params = _typed_list(val.children, _is_var, "a variable", known_types)
        elif key == ":precondition":
            variables = {p.name for p in params}
            for lit in _conjunction(val):
                if lit.head() == "not":
                    raise UnsupportedFeature("negative precondition", lit.line, lit.column)
                pre.append(_atom(lit, pred_params, variables, consts))
        else:
            variables = {p.name for p in params}
            for lit in _conjunction(val):
                if lit.head() == "not":
                    if len(lit.children) != 2:
                        _fail(lit, "(not <atom>)")
                    dele.append(_atom(lit.children[1], pred_params, variables, consts))
                else:
                    add.append(_atom(lit, pred_params, variables, consts))
        i += 2
    return ActionSchema(name, tuple(params), tuple(pre), tuple(add), tuple(dele))


def parse_problem(text: str, domain: Domain | None = None) -> Problem:
    root = _read(tokenize(text))
    name, sections = _sections(root, "problem")
    domain_name = ""
    objects: list[TypedName] = []
    init: list[Atom] = []
    goal: list[Atom] = []
    known_types = None
    preds = None
    consts = None
    if domain is not None:
        known_types = {"object", *dict(domain.types), *dict(domain.types).values()}
        preds = {p.name: p.params for p in domain.predicates}
    for sec in sections:
        key_node = sec.children[0]
        key = key_node.atom
        if key in _UNSUPPORTED_SECTIONS:
            raise UnsupportedFeature(key, key_node.line, key_node.column)
        if key == ":domain":
            if len(sec.children) != 2:
                _fail(sec, "(:domain <name>)")
            domain_name = _expect_atom(sec.children[1], "a domain name", _is_name)
            if domain is not None and domain_name != domain.name:
                _fail(sec.children[1], f"domain name {domain.name!r}")
        elif key == ":objects":
            objects.extend(_typed_list(sec.children[1:], _is_name, "an object name", known_types))
        elif key == ":init":
            if domain is not None:
                consts = {o.name for o in objects} | {c.name for c in domain.constants}
            for lit in sec.children[1:]:
                if lit.is_list and lit.head() == "not":
                    raise UnsupportedFeature("negative initial literal", lit.line, lit.column)
                a = _atom(lit, preds, None, consts)
                if any(_is_var(t) for t in a.args):
                    _fail(lit, "a ground atom")
                init.append(a)
        elif key == ":goal":
            if len(sec.children) != 2:
                _fail(sec, "(:goal <condition>)")
            if domain is not None:
                consts = {o.name for o in objects} | {c.name for c in domain.constants}
            for lit in _conjunction(sec.children[1]):
                if lit.head() == "not":
                    raise UnsupportedFeature("negative goal", lit.line, lit.column)
                a = _atom(lit, preds, None, consts)
                goal.append(a)
        else:
            _fail(key_node, "a problem section keyword")
    return Problem(name, domain_name, tuple(objects), tuple(init), tuple(goal))


def parse_pddl(domain_text: str, problem_text: str) -> TaskDescription:
    domain = parse_domain(domain_text)
    return TaskDescription(domain, parse_problem(problem_text, domain))


# --- writing ---------------------------------------------------------------


def _fmt_typed(items) -> str:
    parts = []
    group: list[str] = []
    gtype = None
    for it in items:
        if gtype is not None and it.type != gtype:
            parts.append(" ".join(group) + f" - {gtype}")
            group = []
        group.append(it.name)
        gtype = it.type
    if group:
        parts.append(" ".join(group) + f" - {gtype}")
    return " ".join(parts)


def _fmt_conj(atoms, negated=()) -> str:
    lits = [str(a) for a in atoms] + [f"(not {a})" for a in negated]
    return "(and " + " ".join(lits) + ")" if lits else "(and)"


def format_domain(domain: Domain) -> str:
    lines = [f"(define (domain {domain.name})"]
    if domain.requirements:
        lines.append("  (:requirements " + " ".join(domain.requirements) + ")")
    if domain.types:
        lines.append("  (:types " + _fmt_typed(TypedName(t, p) for t, p in domain.types) + ")")
    if domain.constants:
        lines.append("  (:constants " + _fmt_typed(domain.constants) + ")")
    lines.append("  (:predicates")
    for p in domain.predicates:
        inner = " ".join(filter(None, [p.name, _fmt_typed(p.params)]))
        lines.append(f"    ({inner})")
    lines.append("  )")
    for a in domain.actions:
        lines.append(f"  (:action {a.name}")
        lines.append(f"    :parameters ({_fmt_typed(a.params)})")
        lines.append(f"    :precondition {_fmt_conj(a.precondition)}")
        lines.append(f"    :effect {_fmt_conj(a.add, a.delete)})")
    lines.append(")")
    return "\n".join(lines) + "\n"


def format_problem(problem: Problem) -> str:
    lines = [f"(define (problem {problem.name})", f"  (:domain {problem.domain_name})"]
    if problem.objects:
        lines.append("  (:objects " + _fmt_typed(problem.objects) + ")")
    lines.append("  (:init " + " ".join(str(a) for a in problem.init) + ")")
    lines.append(f"  (:goal {_fmt_conj(problem.goal)})")
    lines.append(")")
    return "\n".join(lines) + "\n"
