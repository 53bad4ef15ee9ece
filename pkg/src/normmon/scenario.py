"""Scenario container plus the JSON file format and its schema.

Atoms and literals are written in a compact textual form: ``in(r1,a)`` for a
positive literal, ``-in(r1,a)`` for a negative one, ``p3`` for a nullary
atom. Variables start with an upper-case letter. Constraints are written as
``X!=Y`` or ``X=Y``.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import jsonschema

from .actions import ActionDescription, ActionInstance, SchemaRef, ground_instance
from .logic import (
    ArityError,
    Atom,
    Constraint,
    IntegrityRule,
    Literal,
    StaticFacts,
    eval_constraint,
    is_variable,
)

_ATOM_RE = re.compile(r"^\s*(-?)\s*([A-Za-z_][\w]*)\s*(?:\(\s*([^()]*)\s*\))?\s*$")
_CONSTRAINT_RE = re.compile(r"^\s*([\w]+)\s*(!=|=)\s*([\w]+)\s*$")


class ScenarioError(ValueError):
    pass


def parse_atom(text: str) -> Tuple[Atom, bool]:
    m = _ATOM_RE.match(text)
    if not m:
        raise ScenarioError(f"cannot parse atom {text!r}")
    neg, name, argstr = m.groups()
    args = tuple(a.strip() for a in argstr.split(",")) if argstr else ()
    if argstr is not None and any(not a for a in args):
        raise ScenarioError(f"empty argument in {text!r}")
    return (name,) + args, not neg


def parse_literal(text: str) -> Literal:
    atom, sign = parse_atom(text)
    return (atom, sign)


def parse_constraint(text: str) -> Constraint:
    m = _CONSTRAINT_RE.match(text)
    if not m:
        raise ScenarioError(f"cannot parse constraint {text!r}")
    left, rel, right = m.groups()
    return (left, rel, right)


def atom_text(atom: Atom) -> str:
    return atom[0] if len(atom) == 1 else f"{atom[0]}({','.join(atom[1:])})"


def literal_text(literal: Literal) -> str:
    atom, sign = literal
    return atom_text(atom) if sign else "-" + atom_text(atom)


def constraint_text(c: Constraint) -> str:
    return f"{c[0]}{c[1]}{c[2]}"


SCENARIO_SCHEMA = {
    "type": "object",
    "required": [
        "name",
        "agents",
        "statics",
        "initial_state",
        "rules",
        "action_descriptions",
        "norms",
        "observability",
    ],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "agents": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "constants": {"type": "array", "items": {"type": "string"}},
        "statics": {"type": "array", "items": {"type": "string"}},
        "initial_state": {"type": "array", "items": {"type": "string"}},
        "dynamic_atoms": {"type": "array", "items": {"type": "string"}},
        "decomposable": {"type": "boolean"},
        "rules": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["body"],
                "additionalProperties": False,
                "properties": {
                    "body": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                    "constraints": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
        "action_descriptions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "params", "actor", "pre", "post"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "params": {"type": "array", "items": {"type": "string"}},
                    "actor": {"type": "string"},
                    "pre": {"type": "array", "items": {"type": "string"}},
                    "constraints": {"type": "array", "items": {"type": "string"}},
                    "con": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["schema"],
                            "additionalProperties": False,
                            "properties": {
                                "schema": {"type": "string"},
                                "positive": {"type": "boolean"},
                            },
                        },
                    },
                    "post": {"type": "array", "items": {"type": "string"}},
                    "nop": {"type": "boolean"},
                },
            },
        },
        "norms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "deontic", "condition", "action"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string"},
                    "deontic": {"type": "string", "enum": ["O", "P"]},
                    "condition": {"type": "array", "items": {"type": "string"}},
                    "constraints": {"type": "array", "items": {"type": "string"}},
                    "action": {"type": "string"},
                    "priority": {"type": "integer"},
                },
            },
        },
        "observability": {
            "type": "object",
            "required": ["mode"],
            "additionalProperties": False,
            "properties": {
                "mode": {"type": "string", "enum": ["cameras", "probability"]},
                "cameras": {"type": "array", "items": {"type": "string"}},
                "probability": {"type": "number", "minimum": 0, "maximum": 1},
            },
        },
    },
}


@dataclass
class Scenario:
    name: str
    agents: Tuple[str, ...]
    statics: StaticFacts
    initial_state: FrozenSet[Atom]
    rules: Tuple[IntegrityRule, ...]
    descriptions: Tuple[ActionDescription, ...]
    norms: Tuple[object, ...]
    observability: Dict
    dynamic_atoms: Tuple[Atom, ...] = ()
    decomposable: bool = False

    _by_name: Dict[str, ActionDescription] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._by_name = {d.name: d for d in self.descriptions}
        self._check_arities()

    @property
    def dynamic_predicates(self) -> FrozenSet[str]:
        preds = set()
        for d in self.descriptions:
            for atom, _ in d.post:
                preds.add(atom[0])
        for atom in self.dynamic_atoms:
            preds.add(atom[0])
        return frozenset(preds)

    def description(self, name: str) -> ActionDescription:
        try:
            return self._by_name[name]
        except KeyError:
            raise ScenarioError(f"unknown action description {name!r}") from None

    def instance_from_schema(self, schema: Atom) -> ActionInstance:
        d = self.description(schema[0])
        if len(schema) - 1 != len(d.params):
            raise ArityError(f"schema {schema} does not fit params of {d.name}")
        sigma = dict(zip(d.params, schema[1:]))
        return ground_instance(d, sigma, self.dynamic_predicates)

    def constants(self) -> Tuple[str, ...]:
        if not hasattr(self, "_constants"):
            consts = set(self.agents)
            for atom in self.statics.atoms:
                consts.update(atom[1:])
            for atom in self.initial_state:
                consts.update(atom[1:])
            for atom in self.dynamic_atoms:
                consts.update(atom[1:])
            self._constants = tuple(sorted(consts))
        return self._constants

    def ground_actions(self, agent: str) -> Tuple[ActionInstance, ...]:
        """All ground non-NOP instances for one agent whose static
        preconditions and constraints hold. Dynamic preconditions are not
        checked here; callers filter them against a full or partial state.
        Cached per scenario (the statics are immutable)."""
        if not hasattr(self, "_ground_cache"):
            self._ground_cache: Dict[str, Tuple[ActionInstance, ...]] = {}
        cached = self._ground_cache.get(agent)
        if cached is not None:
            return cached
        from itertools import product

        from .logic import satisfies_closed

        dynamic_preds = self.dynamic_predicates
        out: List[ActionInstance] = []
        seen = set()
        for d in self.non_nop_descriptions():
            _, static_pre = d.split_pre(dynamic_preds)
            seed = {d.actor_param: agent}
            for sigma in satisfies_closed(static_pre, d.constraints, set(), self.statics, seed=seed):
                free = [p for p in d.params if is_variable(p) and p not in sigma]
                for lit in d.pre:
                    free.extend(
                        v for v in lit[0][1:] if is_variable(v) and v not in sigma and v not in free
                    )
                if len(free) > 4:
                    raise ScenarioError(
                        f"action {d.name} leaves too many parameters unconstrained by statics"
                    )
                for combo in product(self.constants(), repeat=len(free)):
                    full = dict(sigma)
                    full.update(zip(free, combo))
                    if free and any(
                        eval_constraint(c, full) is False for c in d.constraints
                    ):
                        continue
                    inst = ground_instance(d, full, dynamic_preds)
                    key = (inst.schema, inst.actor)
                    if key not in seen:
                        seen.add(key)
                        out.append(inst)
        result = tuple(sorted(out, key=lambda a: a.schema))
        self._ground_cache[agent] = result
        return result

    def non_nop_descriptions(self) -> List[ActionDescription]:
        return [d for d in self.descriptions if not d.is_nop]

    def nop_description(self) -> Optional[ActionDescription]:
        for d in self.descriptions:
            if d.is_nop:
                return d
        return None

    def _check_arities(self) -> None:
        arity: Dict[str, int] = {}

        def visit(atom: Atom, where: str) -> None:
            seen = arity.setdefault(atom[0], len(atom) - 1)
            if seen != len(atom) - 1:
                raise ArityError(f"predicate {atom[0]} used with arity {len(atom) - 1} in {where}, expected {seen}")

        for a in self.statics.atoms:
            visit(a, "statics")
        for a in self.initial_state:
            visit(a, "initial state")
        for a in self.dynamic_atoms:
            visit(a, "dynamic atoms")
        for r in self.rules:
            for atom, _ in r.literals:
                visit(atom, "rule body")
        for d in self.descriptions:
            for atom, _ in d.pre + d.post:
                visit(atom, f"action {d.name}")
        for n in self.norms:
            for atom, _ in n.condition:
                visit(atom, f"norm {n.id}")


def scenario_from_dict(data: Dict) -> Scenario:
    from .norms import Norm  # local import to avoid a cycle

    jsonschema.validate(data, SCENARIO_SCHEMA)
    statics = StaticFacts(parse_atom(t)[0] for t in data["statics"])
    rules = tuple(
        IntegrityRule(
            literals=tuple(parse_literal(t) for t in r["body"]),
            constraints=tuple(parse_constraint(t) for t in r.get("constraints", ())),
        )
        for r in data["rules"]
    )
    descriptions = []
    for d in data["action_descriptions"]:
        con = tuple(
            SchemaRef(
                name=parse_atom(c["schema"])[0][0],
                params=parse_atom(c["schema"])[0][1:],
                positive=c.get("positive", True),
            )
            for c in d.get("con", ())
        )
        descriptions.append(
            ActionDescription(
                name=d["name"],
                params=tuple(d["params"]),
                pre=tuple(parse_literal(t) for t in d["pre"]),
                constraints=tuple(parse_constraint(t) for t in d.get("constraints", ())),
                con=con,
                post=tuple(parse_literal(t) for t in d["post"]),
                actor_param=d["actor"],
                is_nop=d.get("nop", False),
            )
        )
    norms = []
    for idx, n in enumerate(data["norms"]):
        action_atom, sign = parse_atom(n["action"])
        if not sign:
            raise ScenarioError(f"norm {n['id']}: controlled action must be a positive schema")
        norms.append(
            Norm(
                id=n["id"],
                deontic=n["deontic"],
                condition=tuple(parse_literal(t) for t in n["condition"]),
                constraints=tuple(parse_constraint(t) for t in n.get("constraints", ())),
                action=SchemaRef(action_atom[0], action_atom[1:]),
                priority=n.get("priority", idx),
            )
        )
    scenario = Scenario(
        name=data["name"],
        agents=tuple(data["agents"]),
        statics=statics,
        initial_state=frozenset(parse_atom(t)[0] for t in data["initial_state"]),
        rules=rules,
        descriptions=tuple(descriptions),
        norms=tuple(norms),
        observability=dict(data["observability"]),
        dynamic_atoms=tuple(parse_atom(t)[0] for t in data.get("dynamic_atoms", ())),
        decomposable=data.get("decomposable", False),
    )
    for n in scenario.norms:
        if n.action.name not in scenario._by_name:
            raise ScenarioError(f"norm {n.id} controls unknown action {n.action.name!r}")
    return scenario


def scenario_to_dict(s: Scenario) -> Dict:
    return {
        "name": s.name,
        "agents": sorted(s.agents),
        "statics": sorted(atom_text(a) for a in s.statics.atoms),
        "initial_state": sorted(atom_text(a) for a in s.initial_state),
        "dynamic_atoms": sorted(atom_text(a) for a in s.dynamic_atoms),
        "decomposable": s.decomposable,
        "rules": [
            {
                "body": [literal_text(l) for l in r.literals],
                "constraints": [constraint_text(c) for c in r.constraints],
            }
            for r in s.rules
        ],
        "action_descriptions": [
            {
                "name": d.name,
                "params": list(d.params),
                "actor": d.actor_param,
                "pre": [literal_text(l) for l in d.pre],
                "constraints": [constraint_text(c) for c in d.constraints],
                "con": [
                    {"schema": atom_text((r.name,) + r.params), "positive": r.positive}
                    for r in d.con
                ],
                "post": [literal_text(l) for l in d.post],
                "nop": d.is_nop,
            }
            for d in s.descriptions
        ],
        "norms": [
            {
                "id": n.id,
                "deontic": n.deontic,
                "condition": [literal_text(l) for l in n.condition],
                "constraints": [constraint_text(c) for c in n.constraints],
                "action": atom_text((n.action.name,) + n.action.params),
                "priority": n.priority,
            }
            for n in s.norms
        ],
        "observability": s.observability,
    }


def dump_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2, sort_keys=True) + "\n"


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


def save_scenario(s: Scenario, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(dump_scenario(s))


def scenario_hash(s: Scenario) -> str:
    return hashlib.sha256(dump_scenario(s).encode()).hexdigest()
