"""Action descriptions, grounding, concurrency checks and effects."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .logic import (
    Atom,
    Constraint,
    IntegrityRule,
    Literal,
    LiteralSet,
    StaticFacts,
    Substitution,
    consistent_with,
    eval_constraint,
    is_consistent,
    is_ground_atom,
    is_variable,
    satisfies,
    satisfies_closed,
    subst_atom,
    subst_literal,
    subst_term,
    unify,
)


class InapplicableActionError(RuntimeError):
    """A concurrent action was applied in a state where it does not hold."""


@dataclass(frozen=True)
class SchemaRef:
    """Reference to an action schema inside concurrent conditions and norms.

    Positive references are existential requirements (some concurrent action
    must instantiate the schema); negative references are universal
    exclusions.
    """

    name: str
    params: Tuple[str, ...]
    positive: bool = True

    def pattern(self) -> Atom:
        return (self.name,) + self.params

    def substitute(self, sigma: Substitution) -> "SchemaRef":
        return SchemaRef(
            self.name, tuple(subst_term(sigma, p) for p in self.params), self.positive
        )


@dataclass(frozen=True)
class ActionDescription:
    name: str
    params: Tuple[str, ...]
    pre: Tuple[Literal, ...]
    constraints: Tuple[Constraint, ...]
    con: Tuple[SchemaRef, ...]
    post: Tuple[Literal, ...]
    actor_param: str
    is_nop: bool = False

    def __post_init__(self):
        if self.actor_param not in self.params:
            raise ValueError(f"actor param {self.actor_param} not in params of {self.name}")

    def split_pre(self, dynamic_preds: FrozenSet[str]) -> Tuple[Tuple[Literal, ...], Tuple[Literal, ...]]:
        dynamic = tuple(l for l in self.pre if l[0][0] in dynamic_preds)
        static = tuple(l for l in self.pre if l[0][0] not in dynamic_preds)
        return dynamic, static


@dataclass(frozen=True)
class ActionInstance:
    """A ground action. Identity is the ground schema plus the actor; the
    precondition carries dynamic properties only."""

    name: str
    args: Tuple[str, ...]
    actor: str
    pre: FrozenSet[Literal] = field(compare=False)
    con: Tuple[SchemaRef, ...] = field(compare=False)
    post: FrozenSet[Literal] = field(compare=False)

    @property
    def schema(self) -> Atom:
        return (self.name,) + self.args

    def __repr__(self) -> str:
        return f"{self.name}({','.join(self.args)})"


def ground_instance(
    d: ActionDescription, sigma: Substitution, dynamic_preds: FrozenSet[str]
) -> ActionInstance:
    args = tuple(subst_term(sigma, p) for p in d.params)
    if any(is_variable(a) for a in args):
        raise ValueError(f"binding does not cover all params of {d.name}: {sigma}")
    dyn_pre, _ = d.split_pre(dynamic_preds)
    pre = frozenset(subst_literal(sigma, l) for l in dyn_pre)
    post = frozenset(subst_literal(sigma, l) for l in d.post)
    con = tuple(ref.substitute(sigma) for ref in d.con)
    return ActionInstance(d.name, args, subst_term(sigma, d.actor_param), pre, con, post)


def instantiate_full(
    d: ActionDescription,
    state: Set[Atom],
    statics: StaticFacts,
    dynamic_preds: FrozenSet[str],
    actor: Optional[str] = None,
) -> List[ActionInstance]:
    """All instances whose precondition holds in a closed-world full state."""
    seed = {d.actor_param: actor} if actor else None
    sigmas = satisfies_closed(d.pre, d.constraints, state, statics, seed=seed)
    out = []
    seen = set()
    for sigma in sigmas:
        inst = ground_instance(d, sigma, dynamic_preds)
        key = (inst.schema, inst.actor)
        if key not in seen:
            seen.add(key)
            out.append(inst)
    return sorted(out, key=lambda a: a.schema)


def instantiate_partial(
    d: ActionDescription,
    state: LiteralSet,
    statics: StaticFacts,
    dynamic_preds: FrozenSet[str],
    actor: Optional[str] = None,
) -> List[ActionInstance]:
    """Instances matchable against an open-world partial state.

    Positive preconditions must be asserted (or static); negative
    preconditions block only when their positive counterpart is asserted.
    Unknown atoms neither match nor block.
    """
    positives = [l for l in d.pre if l[1]]
    negatives = [l for l in d.pre if not l[1]]
    seed = {d.actor_param: actor} if actor else None
    sigmas = satisfies(positives, d.constraints, state, statics, seed=seed)
    out = []
    seen = set()
    for sigma in sigmas:
        blocked = False
        for pattern, _ in negatives:
            atom = subst_atom(sigma, pattern)
            if is_ground_atom(atom):
                if atom[0] in dynamic_preds:
                    if state.sign(atom) is True:
                        blocked = True
                        break
                elif atom in statics:
                    blocked = True
                    break
        if blocked:
            continue
        inst = ground_instance(d, sigma, dynamic_preds)
        key = (inst.schema, inst.actor)
        if key not in seen:
            seen.add(key)
            out.append(inst)
    return sorted(out, key=lambda a: a.schema)


def joint_pre(actions: Iterable[ActionInstance]) -> Set[Literal]:
    out: Set[Literal] = set()
    for a in actions:
        out.update(a.pre)
    return out


def joint_post(actions: Iterable[ActionInstance]) -> Set[Literal]:
    out: Set[Literal] = set()
    for a in actions:
        out.update(a.post)
    return out


def concurrent_condition_satisfied(a: ActionInstance, actions: Sequence[ActionInstance]) -> bool:
    """Positive schema refs need a witness among the *other* actions;
    negative refs exclude matches among the others (an action does not
    clash with its own negative schemata)."""
    for ref in a.con:
        matched = any(
            other is not a and unify(ref.pattern(), other.schema) is not None
            for other in actions
        )
        if ref.positive and not matched:
            return False
        if not ref.positive and matched:
            return False
    return True


def is_concurrent_consistent(
    actions: Sequence[ActionInstance],
    agents: Iterable[str],
    statics: StaticFacts,
    rules: Sequence[IntegrityRule],
) -> bool:
    actors = [a.actor for a in actions]
    if sorted(actors) != sorted(set(actors)):
        return False
    if set(actors) != set(agents):
        return False
    if not is_consistent(joint_pre(actions), statics, rules):
        return False
    if not is_consistent(joint_post(actions), statics, rules):
        return False
    return all(concurrent_condition_satisfied(a, actions) for a in actions)


def effects(
    actions: Sequence[ActionInstance],
    statics: StaticFacts,
    rules: Sequence[IntegrityRule],
) -> Set[Literal]:
    """Postconditions plus the preconditions they do not invalidate."""
    posts = joint_post(actions)
    post_set = LiteralSet(posts)
    out = set(posts)
    for lit in joint_pre(actions):
        if lit in out:
            continue
        if consistent_with(post_set, [lit], statics, rules):
            out.add(lit)
    return out


def apply_concurrent(
    actions: Sequence[ActionInstance],
    state: Set[Atom],
    statics: StaticFacts,
    rules: Sequence[IntegrityRule],
    agents: Iterable[str],
) -> Set[Atom]:
    """Closed-world state transition; faults on inapplicable input since the
    ground-truth simulator must only produce applicable joint actions."""
    for a in actions:
        for atom, sign in a.pre:
            holds = atom in state
            if holds != sign:
                raise InapplicableActionError(f"precondition {atom} of {a} does not hold")
    if not is_concurrent_consistent(actions, agents, statics, rules):
        raise InapplicableActionError(f"inconsistent concurrent action {sorted(a.schema for a in actions)}")
    new = set(state)
    for atom, sign in joint_post(actions):
        if not sign:
            new.discard(atom)
    for atom, sign in joint_post(actions):
        if sign:
            new.add(atom)
    return new
