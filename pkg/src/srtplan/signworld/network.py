"""Sign network built from a PDDL task.

Every type, object and predicate becomes a sign; every action schema becomes
a procedural sign whose single prediction matrix has a block of condition
columns followed by a block of effect columns.  The three relation networks
``wp`` (image links), ``wm`` (significance links) and ``wa`` (personal-meaning
links) are derived views over the signs and are never edited directly.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .pddl import Atom, TaskDescription, TypedName

Literal = tuple  # (predicate, *objects)
Situation = frozenset  # of Literal


@dataclass(frozen=True)
class FeatureLink:
    """Link from a matrix row to another sign; ``roles`` name its argument slots."""

    target: str
    roles: tuple[str, ...] = ()
    negated: bool = False

    def __str__(self):
        body = " ".join((self.target, *self.roles))
        return f"(not ({body}))" if self.negated else f"({body})"


@dataclass
class PredictionMatrix:
    rows: tuple[FeatureLink, ...]
    bits: np.ndarray
    n_condition: int = 0  # leading condition columns; the rest are effect columns

    def __post_init__(self):
        self.rows = tuple(self.rows)
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.shape[0] != len(self.rows):
            raise ValueError("one bit row per feature link")

    @property
    def n_columns(self) -> int:
        return self.bits.shape[1]

    def is_well_formed(self) -> bool:
        if self.bits.size == 0:
            return False
        return bool(self.bits.any(axis=1).all() and self.bits.any(axis=0).all())

    def condition_features(self) -> list[FeatureLink]:
        mask = self.bits[:, : self.n_condition].any(axis=1)
        return [r for r, m in zip(self.rows, mask) if m]

    def effect_features(self) -> list[FeatureLink]:
        mask = self.bits[:, self.n_condition :].any(axis=1)
        return [r for r, m in zip(self.rows, mask) if m]

    def to_dict(self) -> dict:
        return {
            "rows": [[r.target, list(r.roles), r.negated] for r in self.rows],
            "bits": self.bits.astype(int).tolist(),
            "n_condition": self.n_condition,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PredictionMatrix":
        rows = tuple(FeatureLink(t, tuple(roles), bool(neg)) for t, roles, neg in data["rows"])
        bits = np.array(data["bits"], dtype=bool).reshape(len(rows), -1)
        return cls(rows, bits, data.get("n_condition", 0))


@dataclass(frozen=True)
class PersonalMeaning:
    sign: str
    binding: tuple[tuple[str, str], ...]
    score: float = 0.0


@dataclass
class Sign:
    name: str
    kind: str  # "type" | "object" | "predicate" | "action"
    images: list[PredictionMatrix] = field(default_factory=list)
    significance: set[FeatureLink] = field(default_factory=set)


@dataclass
class ProceduralSign(Sign):
    roles: tuple[TypedName, ...] = ()
    condition: tuple[Atom, ...] = ()
    add: tuple[Atom, ...] = ()
    delete: tuple[Atom, ...] = ()
    deviation: tuple[float, float] | None = None

    @property
    def role_names(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.roles)


def procedural_matrix(condition, add, delete) -> PredictionMatrix:
    """Two-block matrix: one condition column, one effect column (each only if non-empty)."""
    rows: list[FeatureLink] = []
    cond_bits: list[bool] = []
    eff_bits: list[bool] = []
    for a in condition:
        rows.append(FeatureLink(a.predicate, a.args))
        cond_bits.append(True)
        eff_bits.append(False)
    for a in add:
        link = FeatureLink(a.predicate, a.args)
        if link in rows:
            eff_bits[rows.index(link)] = True
            continue
        rows.append(link)
        cond_bits.append(False)
        eff_bits.append(True)
    for a in delete:
        rows.append(FeatureLink(a.predicate, a.args, negated=True))
        cond_bits.append(False)
        eff_bits.append(True)
    cols = []
    if any(cond_bits):
        cols.append(cond_bits)
    if any(eff_bits):
        cols.append(eff_bits)
    bits = np.array(cols, dtype=bool).T if cols else np.zeros((len(rows), 0), dtype=bool)
    return PredictionMatrix(tuple(rows), bits, 1 if any(cond_bits) else 0)


class SignNetwork:
    def __init__(self):
        self.signs: dict[str, Sign] = {}
        self.objects: dict[str, str] = {}
        self.types: dict[str, str] = {}
        self.meanings: dict[tuple[str, tuple[str, ...]], float] = {}
        self.start: Situation = frozenset()
        self.goal: Situation = frozenset()
        self._ground_cache: list | None = None
        self._h2_cache: dict = {}
        self._compiled = None

    # --- structure ----------------------------------------------------------

    def add_sign(self, sign: Sign) -> Sign:
        if sign.name in self.signs:
            raise ValueError(f"duplicate sign name {sign.name!r}")
        self.signs[sign.name] = sign
        self._ground_cache = None
        self._compiled = None
        self._h2_cache.clear()
        return sign

    def procedural_signs(self) -> list[ProceduralSign]:
        return sorted(
            (s for s in self.signs.values() if isinstance(s, ProceduralSign)), key=lambda s: s.name
        )

    def subtypes(self, t: str) -> set[str]:
        out = {t}
        changed = True
        while changed:
            changed = False
            for child, parent in self.types.items():
                if parent in out and child not in out:
                    out.add(child)
                    changed = True
        return out

    def objects_of_type(self, t: str) -> list[str]:
        if t == "object":
            return sorted(self.objects)
        sub = self.subtypes(t)
        return sorted(o for o, ot in self.objects.items() if ot in sub)

    def is_a(self, obj: str, t: str) -> bool:
        return obj in self.objects and (t == "object" or self.objects[obj] in self.subtypes(t))

    def _refresh_significance(self):
        for s in self.signs.values():
            s.significance = set()
        for s in self.signs.values():
            for m in s.images:
                for row in m.rows:
                    if row.target in self.signs:
                        self.signs[row.target].significance.add(FeatureLink(s.name, row.roles, row.negated))

    # --- the three relation networks ------------------------------------------

    @property
    def wp(self) -> set[tuple[str, str]]:
        """Image network: sign -> feature sign it needs for recognition."""
        return {(s.name, r.target) for s in self.signs.values() for m in s.images for r in m.rows}

    @property
    def wm(self) -> set[tuple[str, str]]:
        """Significance network: sign -> sign whose image uses it."""
        return {(s.name, l.target) for s in self.signs.values() for l in s.significance}

    @property
    def wa(self) -> set[tuple[str, str]]:
        """Personal-meaning network: procedural sign -> object bound in one of its meanings,
        plus the predicate -> object links of the start and goal situations."""
        edges = set()
        for (name, args), _ in self.meanings.items():
            for a in args:
                edges.add((name, a))
        for lit in self.start | self.goal:
            for a in lit[1:]:
                edges.add((lit[0], a))
        return edges

    # --- personal meanings ----------------------------------------------------

    def meaning_score(self, action: str, args: tuple[str, ...]) -> float:
        return self.meanings.get((action, tuple(args)), 0.0)

    def personal_meanings(self, action: str) -> list[PersonalMeaning]:
        sign = self.signs[action]
        out = []
        for (name, args), score in sorted(self.meanings.items()):
            if name == action:
                out.append(PersonalMeaning(name, tuple(zip(sign.role_names, args)), score))
        return out

    def reinforce(self, plan) -> None:
        """Count one use for every action instance of an executed plan."""
        for step in plan.steps:
            key = (step.name, tuple(step.args))
            self.meanings[key] = self.meanings.get(key, 0.0) + 1.0

    # --- grounding helpers used by the planner ----------------------------------

    def ground_actions(self):
        from .planner import GroundAction

        if self._ground_cache is None:
            out = []
            for sign in self.procedural_signs():
                domains = [self.objects_of_type(r.type) for r in sign.roles]
                for combo in itertools.product(*domains):
                    out.append(GroundAction.from_sign(sign, dict(zip(sign.role_names, combo))))
            self._ground_cache = sorted(out)
        return self._ground_cache

    # --- persistence ----------------------------------------------------------

    def to_dict(self) -> dict:
        signs = []
        for s in sorted(self.signs.values(), key=lambda s: s.name):
            d = {"name": s.name, "kind": s.kind, "images": [m.to_dict() for m in s.images]}
            if isinstance(s, ProceduralSign):
                d["roles"] = [[r.name, r.type] for r in s.roles]
                d["condition"] = [[a.predicate, list(a.args)] for a in s.condition]
                d["add"] = [[a.predicate, list(a.args)] for a in s.add]
                d["delete"] = [[a.predicate, list(a.args)] for a in s.delete]
                if s.deviation is not None:
                    d["deviation"] = list(s.deviation)
            signs.append(d)
        return {
            "signs": signs,
            "objects": dict(sorted(self.objects.items())),
            "types": dict(sorted(self.types.items())),
            "meanings": [[n, list(a), v] for (n, a), v in sorted(self.meanings.items())],
            "start": sorted(list(l) for l in self.start),
            "goal": sorted(list(l) for l in self.goal),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SignNetwork":
        net = cls()
        for d in data["signs"]:
            images = [PredictionMatrix.from_dict(m) for m in d["images"]]
            if d["kind"] == "action":
                atoms = lambda key: tuple(Atom(p, tuple(a)) for p, a in d.get(key, []))
                sign = ProceduralSign(
                    d["name"], "action", images,
                    roles=tuple(TypedName(n, t) for n, t in d["roles"]),
                    condition=atoms("condition"), add=atoms("add"), delete=atoms("delete"),
                    deviation=tuple(d["deviation"]) if "deviation" in d else None,
                )
            else:
                sign = Sign(d["name"], d["kind"], images)
            net.add_sign(sign)
        net.objects = dict(data["objects"])
        net.types = dict(data["types"])
        net.meanings = {(n, tuple(a)): float(v) for n, a, v in data["meanings"]}
        net.start = frozenset(tuple(l) for l in data.get("start", []))
        net.goal = frozenset(tuple(l) for l in data.get("goal", []))
        net._refresh_significance()
        return net

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "SignNetwork":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def build_sign_network(task: TaskDescription) -> SignNetwork:
    net = SignNetwork()
    domain = task.domain
    net.types = {t: p for t, p in domain.types}
    net.objects = task.objects

    type_names = {"object", *net.types, *net.types.values()}
    for t in sorted(type_names):
        parent = net.types.get(t)
        images = []
        if parent is not None and t != "object":
            images.append(PredictionMatrix((FeatureLink(parent),), np.ones((1, 1), bool)))
        net.add_sign(Sign(t, "type", images))

    for p in domain.predicates:
        images = []
        if p.params:
            rows = tuple(FeatureLink(a.type, (a.name,)) for a in p.params)
            images.append(PredictionMatrix(rows, np.ones((len(rows), 1), bool)))
        net.add_sign(Sign(p.name, "predicate", images))

    for obj, t in sorted(net.objects.items()):
        if obj in net.signs:
            raise ValueError(f"object {obj!r} clashes with another sign name")
        net.add_sign(Sign(obj, "object", [PredictionMatrix((FeatureLink(t),), np.ones((1, 1), bool))]))

    for a in domain.actions:
        m = procedural_matrix(a.precondition, a.add, a.delete)
        images = [m] if m.n_columns else []
        net.add_sign(
            ProceduralSign(
                a.name, "action", images,
                roles=a.params, condition=a.precondition, add=a.add, delete=a.delete,
            )
        )
    net._refresh_significance()
    net.start = task.init
    net.goal = task.goal
    return net
