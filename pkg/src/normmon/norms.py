"""Conditional deontic norms, instances and verdict semantics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .actions import ActionInstance, SchemaRef
from .logic import (
    Atom,
    Constraint,
    Literal,
    LiteralSet,
    StaticFacts,
    eval_constraint,
    format_atom,
    satisfies,
    satisfies_closed,
    subst_term,
    unify,
)

OBLIGATION = "O"
PROHIBITION = "P"

FULFILLED = "fulfilled"
VIOLATED = "violated"
UNKNOWN = "unknown"

IDENTIFIED = "identified"
DISCOVERED = "discovered"


@dataclass(frozen=True)
class Norm:
    id: str
    deontic: str  # OBLIGATION or PROHIBITION
    condition: Tuple[Literal, ...]
    constraints: Tuple[Constraint, ...]
    action: SchemaRef
    priority: int = 0  # declaration order by default; lower = more important

    def __post_init__(self):
        if self.deontic not in (OBLIGATION, PROHIBITION):
            raise ValueError(f"bad deontic modality {self.deontic!r}")


@dataclass(frozen=True)
class NormInstance:
    """A norm whose condition matched; carries the (partially) instantiated
    controlled action. Variables not bound by the condition stay free and
    are re-unified against concrete actions when judging."""

    norm: Norm = field(compare=False)
    norm_id: str
    action: Atom  # (name, *args), possibly with free variables
    constraints: Tuple[Constraint, ...] = ()  # residual, over free variables
    born_at: int = field(default=-1, compare=False)


def _instances_from_sigmas(norm: Norm, sigmas, born_at: int) -> List[NormInstance]:
    out = []
    seen = set()
    for sigma in sigmas:
        action = (norm.action.name,) + tuple(subst_term(sigma, p) for p in norm.action.params)
        residual = []
        skip = False
        for left, rel, right in norm.constraints:
            c = (subst_term(sigma, left), rel, subst_term(sigma, right))
            value = eval_constraint(c, {})
            if value is False:
                skip = True
                break
            if value is None:
                residual.append(c)
        if skip:
            continue
        key = (action, tuple(residual))
        if key not in seen:
            seen.add(key)
            out.append(
                NormInstance(
                    norm=norm,
                    norm_id=norm.id,
                    action=action,
                    constraints=tuple(residual),
                    born_at=born_at,
                )
            )
    return out


def relevant_instances(
    norms: Sequence[Norm],
    state: LiteralSet,
    statics: StaticFacts,
    born_at: int = -1,
) -> List[NormInstance]:
    """Instances whose condition is satisfied by an open-world partial state.

    Distinct substitutions mapping to the same ground action are merged.
    """
    out: List[NormInstance] = []
    for norm in norms:
        sigmas = satisfies(norm.condition, norm.constraints, state, statics)
        out.extend(_instances_from_sigmas(norm, sigmas, born_at))
    return out


def relevant_instances_closed(
    norms: Sequence[Norm],
    state: Set[Atom],
    statics: StaticFacts,
    born_at: int = -1,
) -> List[NormInstance]:
    """Closed-world counterpart, used by the omniscient judge."""
    out: List[NormInstance] = []
    for norm in norms:
        sigmas = satisfies_closed(norm.condition, norm.constraints, state, statics)
        out.extend(_instances_from_sigmas(norm, sigmas, born_at))
    return out


def instance_matches(inst: NormInstance, schema: Atom) -> bool:
    sigma = unify(inst.action, schema)
    if sigma is None:
        return False
    return all(eval_constraint(c, sigma) is not False for c in inst.constraints)


def matching_actions(inst: NormInstance, acts: Iterable[ActionInstance]) -> List[ActionInstance]:
    return sorted(
        (a for a in acts if instance_matches(inst, a.schema)),
        key=lambda a: a.schema,
    )


def judge_obligation(inst: NormInstance, acts: Sequence[ActionInstance], agent_count: int) -> str:
    matches = matching_actions(inst, acts)
    if matches:
        return FULFILLED
    if len(acts) == agent_count:
        return VIOLATED
    return UNKNOWN


def judge_prohibition(inst: NormInstance, acts: Sequence[ActionInstance], agent_count: int) -> str:
    matches = matching_actions(inst, acts)
    if matches:
        return VIOLATED
    if len(acts) == agent_count:
        return FULFILLED
    return UNKNOWN


def judge(inst: NormInstance, acts: Sequence[ActionInstance], agent_count: int) -> str:
    if inst.norm.deontic == OBLIGATION:
        return judge_obligation(inst, acts, agent_count)
    return judge_prohibition(inst, acts, agent_count)


def forbidden(prohibitions: Iterable[NormInstance], a: ActionInstance) -> bool:
    return any(instance_matches(p, a.schema) for p in prohibitions)


def mandatory(obligations: Iterable[NormInstance], a: ActionInstance) -> bool:
    return any(instance_matches(o, a.schema) for o in obligations)


@dataclass(frozen=True)
class Verdict:
    instance: NormInstance
    status: str  # FULFILLED or VIOLATED (unknown instances yield no verdict)
    mode: str  # IDENTIFIED or DISCOVERED
    culprit: Optional[str] = None
    witness: Optional[ActionInstance] = None

    def key(self) -> Tuple:
        return (self.instance.norm_id, self.instance.action, self.status, self.mode, self.culprit)

    def __repr__(self) -> str:
        w = f" by {self.witness}" if self.witness else ""
        return f"<{self.mode} {self.status} {self.instance.norm_id}:{format_atom(self.instance.action)}{w}>"
