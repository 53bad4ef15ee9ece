"""Reconstruction of unobserved actions.

Two routes: an exhaustive search over the joint actions of unobserved
agents (exponential in the worst case) and a per-agent fixpoint
approximation (polynomial). Both consume a partial initial state ``i`` and
a partial final state ``f``, mutate them in place with the knowledge gained
and return the set of actions the monitor can be certain about.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .actions import (
    ActionInstance,
    concurrent_condition_satisfied,
    effects,
    joint_post,
    joint_pre,
)
from .logic import Literal, LiteralSet, consistent_with
from .norms import (
    FULFILLED,
    NormInstance,
    OBLIGATION,
    PROHIBITION,
    VIOLATED,
    forbidden,
    instance_matches,
    mandatory,
    relevant_instances,
)
from .scenario import Scenario

DEFAULT_SOLUTION_CAP = 1_000_000


class KnowledgeFault(RuntimeError):
    """Sound knowledge turned out inconsistent; the world model is broken."""


@dataclass
class ReconstructionOutcome:
    reconstructed: Tuple[ActionInstance, ...]
    discovered: Tuple[ActionInstance, ...]
    # Aligned with `discovered`: the status each representative was
    # discovered under. A representative may also match instances of the
    # opposite modality, which must not yield verdicts.
    discovered_statuses: Tuple[str, ...] = ()
    solution_count: Optional[int] = None
    candidate_counts: Dict[str, int] = field(default_factory=dict)
    cap_hit: bool = False
    no_completion: bool = False  # empty solution set / empty candidate row


def action_fits(
    a: ActionInstance, i: LiteralSet, f: LiteralSet, scenario: Scenario
) -> bool:
    """Per-action consistency: preconditions against the initial partial
    state, postconditions against the final one."""
    return consistent_with(i, a.pre, scenario.statics, scenario.rules) and consistent_with(
        f, a.post, scenario.statics, scenario.rules
    )


def candidate_actions(
    scenario: Scenario, agent: str, i: LiteralSet, f: LiteralSet
) -> List[ActionInstance]:
    """All ground non-NOP actions of one agent consistent with (i, f)."""
    return [a for a in scenario.ground_actions(agent) if action_fits(a, i, f, scenario)]


def check_solution_consistency(
    scenario: Scenario,
    observed: Sequence[ActionInstance],
    solution: Sequence[ActionInstance],
    i: LiteralSet,
    f: LiteralSet,
) -> bool:
    """The joint action must be a consistent concurrent action over all
    agents and induce consistent initial and final states."""
    joint = list(observed) + list(solution)
    actors = [a.actor for a in joint]
    if sorted(actors) != sorted(set(actors)) or set(actors) != set(scenario.agents):
        return False
    pre = joint_pre(joint)
    post = joint_post(joint)
    if not consistent_with(i, pre, scenario.statics, scenario.rules):
        return False
    if not consistent_with(f, post, scenario.statics, scenario.rules):
        return False
    return all(concurrent_condition_satisfied(a, joint) for a in joint)


def _fold_observed(
    scenario: Scenario, i: LiteralSet, f: LiteralSet, observed: Sequence[ActionInstance]
) -> None:
    """Preconditions of observed actions hold in i, postconditions in f.

    The monitor's state update already guarantees this; standalone callers
    get the same guarantee here.
    """
    for a in observed:
        if not consistent_with(i, a.pre, scenario.statics, scenario.rules):
            raise KnowledgeFault(f"observed action {a} contradicts the initial state")
        i.assume(a.pre)
        if not consistent_with(f, a.post, scenario.statics, scenario.rules):
            raise KnowledgeFault(f"observed action {a} contradicts the final state")
        f.assume(a.post)


def search(
    scenario: Scenario,
    i: LiteralSet,
    f: LiteralSet,
    observed: Sequence[ActionInstance],
    targets: Iterable[str],
    cap: int = DEFAULT_SOLUTION_CAP,
) -> Tuple[List[Tuple[ActionInstance, ...]], bool]:
    """Enumerate all joint completions of the target agents' actions.

    Every branch extends i with the chosen action's preconditions and f
    with its postconditions before recursing, so deeper candidates are
    checked against everything already assumed. Branches over *every*
    consistent instantiation, not only the first, so the union of leaves is
    the complete solution set. Returns (solutions, cap_hit); i and f are
    restored before returning.
    """
    targets = sorted(targets)
    if not targets:
        return [], False
    i = i.copy()
    f = f.copy()
    _fold_observed(scenario, i, f, observed)
    base = {t: candidate_actions(scenario, t, i, f) for t in targets}
    solutions: List[Tuple[ActionInstance, ...]] = []
    stack: List[ActionInstance] = []
    cap_hit = False

    def rec(idx: int) -> None:
        nonlocal cap_hit
        if cap_hit:
            return
        if idx == len(targets):
            solutions.append(tuple(stack))
            if len(solutions) >= cap:
                cap_hit = True
            return
        for a in base[targets[idx]]:
            # base lists were filtered against the un-extended states; the
            # states only grow along a path, so re-checking is sound.
            if not action_fits(a, i, f, scenario):
                continue
            added_i = i.assume(a.pre)
            added_f = f.assume(a.post)
            stack.append(a)
            rec(idx + 1)
            stack.pop()
            i.retract(added_i)
            f.retract(added_f)

    rec(0)
    return solutions, cap_hit


def _surviving(
    literals: Iterable[Literal],
    against: LiteralSet,
    scenario: Scenario,
) -> List[Literal]:
    return [
        l
        for l in literals
        if consistent_with(against, [l], scenario.statics, scenario.rules)
    ]


def _assume_checked(
    scenario: Scenario, state: LiteralSet, literals: Iterable[Literal], what: str
) -> None:
    literals = list(literals)
    if not consistent_with(state, literals, scenario.statics, scenario.rules):
        raise KnowledgeFault(f"{what} contradict the known state")
    state.assume(literals)


def _finalize_incomplete(
    scenario: Scenario,
    f: LiteralSet,
    reconstructed: Sequence[ActionInstance],
    extended_invariants: Iterable[Literal],
) -> None:
    """Some agents are still unaccounted for: the final state gains the
    reconstructed postconditions and the provably unchanged literals."""
    _assume_checked(scenario, f, joint_post(reconstructed), "reconstructed postconditions")
    f.assume(extended_invariants)


def _finalize_complete(
    scenario: Scenario, i: LiteralSet, f: LiteralSet, acts: Sequence[ActionInstance]
) -> None:
    """The whole concurrent action is now known: the final state is the
    invariant part of the initial state plus the joint effects."""
    eff = effects(acts, scenario.statics, scenario.rules)
    eff_set = LiteralSet(eff)
    i_star = _surviving(list(i.literals()), eff_set, scenario)
    f.assume(i_star)
    _assume_checked(scenario, f, eff, "joint effects")


def full_reconstruct(
    scenario: Scenario,
    i: LiteralSet,
    f: LiteralSet,
    observed: Sequence[ActionInstance],
    targets: Iterable[str],
    cap: int = DEFAULT_SOLUTION_CAP,
) -> Tuple[ReconstructionOutcome, List[ActionInstance]]:
    """Exhaustive reconstruction. Returns the outcome and the updated
    observed-action list (observed plus committed reconstructions)."""
    targets = sorted(targets)
    acts = sorted(observed, key=lambda a: a.schema)
    _fold_observed(scenario, i, f, acts)
    if scenario.decomposable:
        return _full_reconstruct_decomposable(scenario, i, f, acts, targets, cap)

    solutions, cap_hit = search(scenario, i, f, acts, targets, cap=cap)
    if cap_hit:
        # Too many candidate completions; proceed as if nothing was certain.
        return (
            ReconstructionOutcome((), (), solution_count=len(solutions), cap_hit=True),
            acts,
        )
    consistent = [
        s for s in solutions if check_solution_consistency(scenario, acts, s, i, f)
    ]
    if not consistent:
        return (
            ReconstructionOutcome((), (), solution_count=0, no_completion=True),
            acts,
        )
    r_set = set(consistent[0])
    for s in consistent[1:]:
        r_set &= set(s)
        if not r_set:
            break
    reconstructed = tuple(sorted(r_set, key=lambda a: a.schema))
    outcome = ReconstructionOutcome(
        reconstructed, (), solution_count=len(consistent)
    )
    if reconstructed:
        acts = sorted(set(acts) | r_set, key=lambda a: a.schema)
        _assume_checked(scenario, i, joint_pre(reconstructed), "reconstructed preconditions")
    # The extended-invariant update of the final state is sound whenever the
    # solution set is nonempty, R or no R: the executed completion is one of
    # the solutions, so a literal no solution can change did not change.
    if len(acts) < len(scenario.agents):
        extended = _extended_invariants_full(scenario, i, acts, consistent)
        _finalize_incomplete(scenario, f, reconstructed, extended)
    else:
        _finalize_complete(scenario, i, f, acts)
    return outcome, acts


def _extended_invariants_full(
    scenario: Scenario,
    i: LiteralSet,
    acts: Sequence[ActionInstance],
    solutions: Sequence[Tuple[ActionInstance, ...]],
) -> List[Literal]:
    """Literals of i no solution's joint postconditions can have changed."""
    survivors = list(i.literals())
    base = LiteralSet(joint_post(acts))
    for sol in solutions:
        extra = base.assume(joint_post(sol))
        survivors = _surviving(survivors, base, scenario)
        base.retract(extra)
        if not survivors:
            break
    return survivors


def _full_reconstruct_decomposable(
    scenario: Scenario,
    i: LiteralSet,
    f: LiteralSet,
    acts: List[ActionInstance],
    targets: List[str],
    cap: int,
) -> Tuple[ReconstructionOutcome, List[ActionInstance]]:
    """Product-form shortcut for scenarios whose candidate actions cannot
    interact across agents (disjoint dynamic atoms per agent, no concurrent
    conditions, integrity rules confined to a single agent's atoms).

    Every tuple of per-agent consistent candidates is then a solution, so
    the solution set never needs materialising: the intersection is the
    union of singleton candidate rows and the extended invariants can be
    computed per candidate. Results are identical to the generic route
    (covered by tests); only the cost differs.
    """
    table = {t: candidate_actions(scenario, t, i, f) for t in targets}
    counts = {t: len(row) for t, row in table.items()}
    if any(not row for row in table.values()):
        return (
            ReconstructionOutcome(
                (), (), solution_count=0, candidate_counts=counts, no_completion=True
            ),
            acts,
        )
    solution_count = math.prod(counts.values())
    reconstructed = tuple(
        sorted(
            (row[0] for row in table.values() if len(row) == 1),
            key=lambda a: a.schema,
        )
    )
    outcome = ReconstructionOutcome(
        reconstructed,
        (),
        solution_count=min(solution_count, cap),
        candidate_counts=counts,
        cap_hit=False,
    )
    if reconstructed:
        acts = sorted(set(acts) | set(reconstructed), key=lambda a: a.schema)
        _assume_checked(scenario, i, joint_pre(reconstructed), "reconstructed preconditions")
    if len(acts) < len(scenario.agents):
        # Under decomposability a literal clashes with some solution's joint
        # postconditions iff it clashes with a single candidate's, so the
        # extended invariants reduce to a per-candidate filter.
        survivors = list(i.literals())
        base = LiteralSet(joint_post(acts))
        survivors = _surviving(survivors, base, scenario)
        for row in table.values():
            for a in row:
                extra = base.assume(a.post)
                survivors = _surviving(survivors, base, scenario)
                base.retract(extra)
        _finalize_incomplete(scenario, f, reconstructed, survivors)
    else:
        _finalize_complete(scenario, i, f, acts)
    return outcome, acts


def approximate_search(
    scenario: Scenario,
    i: LiteralSet,
    f: LiteralSet,
    targets: Iterable[str],
) -> Tuple[Dict[str, List[ActionInstance]], List[str]]:
    """Per-agent candidate tables, iterated to a fixpoint.

    A singleton candidate row commits immediately: its pre/post extend i
    and f, the agent leaves the target set, and every remaining row is
    recomputed, possibly cascading further commitments. Mutates i and f.
    Returns (table, committed agents in commit order).
    """
    remaining = sorted(targets)
    table: Dict[str, List[ActionInstance]] = {t: [] for t in remaining}
    committed: List[str] = []
    progress = True
    while progress and remaining:
        progress = False
        rows = {t: candidate_actions(scenario, t, i, f) for t in remaining}
        for t in list(remaining):
            if len(rows[t]) == 1:
                a = rows[t][0]
                table[t] = [a]
                if not consistent_with(i, a.pre, scenario.statics, scenario.rules):
                    raise KnowledgeFault(f"committed action {a} contradicts the initial state")
                i.assume(a.pre)
                if not consistent_with(f, a.post, scenario.statics, scenario.rules):
                    raise KnowledgeFault(f"committed action {a} contradicts the final state")
                f.assume(a.post)
                remaining.remove(t)
                committed.append(t)
                progress = True
        if not progress:
            for t in remaining:
                table[t] = rows[t]
    return table, committed


def approximate_reconstruct(
    scenario: Scenario,
    i: LiteralSet,
    f: LiteralSet,
    observed: Sequence[ActionInstance],
    targets: Iterable[str],
) -> Tuple[ReconstructionOutcome, List[ActionInstance]]:
    """Polynomial reconstruction plus the discovered-verdict set.

    Agents left with several candidates, all of which are forbidden (resp.
    mandatory), yield one representative action in the discovered set: the
    monitor knows some instance was violated (fulfilled) without knowing
    which action was executed.
    """
    targets = sorted(targets)
    acts = sorted(observed, key=lambda a: a.schema)
    _fold_observed(scenario, i, f, acts)
    table, committed = approximate_search(scenario, i, f, targets)
    counts = {t: len(row) for t, row in table.items()}
    reconstructed = tuple(
        sorted((table[t][0] for t in committed), key=lambda a: a.schema)
    )
    no_completion = any(not row for row in table.values())
    if reconstructed:
        # pre/post of committed actions were already folded into i and f
        # during the fixpoint; the remaining updates are idempotent unions.
        acts = sorted(set(acts) | set(reconstructed), key=lambda a: a.schema)
    if not no_completion:
        if len(acts) < len(scenario.agents):
            extended = _extended_invariants_approx(scenario, i, acts, table)
            _finalize_incomplete(scenario, f, reconstructed, extended)
        else:
            _finalize_complete(scenario, i, f, acts)

    instances = relevant_instances(scenario.norms, i, scenario.statics)
    prohibitions = [n for n in instances if n.norm.deontic == PROHIBITION]
    obligations = [n for n in instances if n.norm.deontic == OBLIGATION]
    discovered: List[ActionInstance] = []
    statuses: List[str] = []
    for t in targets:
        row = table[t]
        if len(row) <= 1:
            continue
        if all(forbidden(prohibitions, a) for a in row):
            discovered.append(_violation_representative(row, prohibitions))
            statuses.append(VIOLATED)
        elif all(mandatory(obligations, a) for a in row):
            discovered.append(_fulfilment_representative(row, obligations))
            statuses.append(FULFILLED)
    outcome = ReconstructionOutcome(
        reconstructed,
        tuple(discovered),
        discovered_statuses=tuple(statuses),
        candidate_counts=counts,
        no_completion=no_completion,
    )
    return outcome, acts


def _extended_invariants_approx(
    scenario: Scenario,
    i: LiteralSet,
    acts: Sequence[ActionInstance],
    table: Dict[str, List[ActionInstance]],
) -> List[Literal]:
    """Literals of i unchanged both by the (extended) observed actions and
    by every individual candidate action."""
    base = LiteralSet(joint_post(acts))
    survivors = _surviving(list(i.literals()), base, scenario)
    for row in table.values():
        for a in row:
            post_set = LiteralSet(a.post)
            survivors = _surviving(survivors, post_set, scenario)
            if not survivors:
                return survivors
    return survivors


def _matching_keys(a: ActionInstance, instances: Sequence[NormInstance]):
    return [
        (inst.norm.priority, inst.action)
        for inst in instances
        if instance_matches(inst, a.schema)
    ]


def _violation_representative(
    row: Sequence[ActionInstance], prohibitions: Sequence[NormInstance]
) -> ActionInstance:
    """Presumption of innocence: assume the least important instance (the
    highest priority number, latest declared) was the one violated, and
    report the candidate matching it. Ties break on the ground schema."""
    return max(row, key=lambda a: (max(_matching_keys(a, prohibitions)), a.schema))


def _fulfilment_representative(
    row: Sequence[ActionInstance], obligations: Sequence[NormInstance]
) -> ActionInstance:
    """Dually, assume the most important obligation was fulfilled."""
    return min(row, key=lambda a: (min(_matching_keys(a, obligations)), a.schema))
