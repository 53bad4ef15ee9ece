"""Ground first-order substrate.

Atoms are tuples ``(predicate, arg1, ..., argn)``. Constants and predicates
start with a lower-case letter, variables with an upper-case letter. A
literal is a pair ``(atom, sign)`` with ``sign`` True for positive literals.
Substitutions are plain dicts mapping variable names to constants.

Knowledge is membership based: a literal is entailed by a state iff it is
asserted in the state (positives may also come from the static facts).
Integrity rules are used only to reject inconsistent literal sets; no
forward chaining is performed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

Atom = Tuple[str, ...]
Literal = Tuple[Atom, bool]
Constraint = Tuple[str, str, str]  # (left, "=" or "!=", right)
Substitution = Dict[str, str]


class ArityError(ValueError):
    """A predicate is used with inconsistent arities in one scenario."""


def is_variable(term: str) -> bool:
    return term[:1].isupper()


def is_ground_atom(atom: Atom) -> bool:
    return not any(is_variable(t) for t in atom[1:])


def subst_term(sigma: Substitution, term: str) -> str:
    if is_variable(term):
        return sigma.get(term, term)
    return term


def subst_atom(sigma: Substitution, atom: Atom) -> Atom:
    return (atom[0],) + tuple(subst_term(sigma, t) for t in atom[1:])


def subst_literal(sigma: Substitution, literal: Literal) -> Literal:
    return (subst_atom(sigma, literal[0]), literal[1])


def complement(literal: Literal) -> Literal:
    return (literal[0], not literal[1])


def unify(pattern: Atom, ground: Atom, seed: Optional[Substitution] = None) -> Optional[Substitution]:
    """Match a (possibly variable-carrying) atom against a ground atom.

    Returns an extension of ``seed`` binding the pattern's variables, or
    None when no extension exists. Arity or predicate mismatch is failure,
    not an error.
    """
    if pattern[0] != ground[0] or len(pattern) != len(ground):
        return None
    sigma = dict(seed) if seed else {}
    for p, g in zip(pattern[1:], ground[1:]):
        if is_variable(p):
            bound = sigma.get(p)
            if bound is None:
                sigma[p] = g
            elif bound != g:
                return None
        elif p != g:
            return None
    return sigma


def eval_constraint(constraint: Constraint, sigma: Substitution) -> Optional[bool]:
    """Evaluate a constraint under sigma; None when a side is still unbound."""
    left, rel, right = constraint
    lv = subst_term(sigma, left)
    rv = subst_term(sigma, right)
    if is_variable(lv) or is_variable(rv):
        return None
    return (lv == rv) if rel == "=" else (lv != rv)


@dataclass(frozen=True)
class IntegrityRule:
    """A rule body whose satisfaction entails falsum.

    Body literals match asserted literals (positives also match static
    facts); constraints must evaluate true under the matching substitution.
    """

    literals: Tuple[Literal, ...]
    constraints: Tuple[Constraint, ...] = ()

    def __post_init__(self):
        if not self.literals:
            raise ValueError("integrity rule body must be nonempty")


class StaticFacts:
    """Immutable set of ground atoms describing static properties."""

    __slots__ = ("atoms", "_by_pred")

    def __init__(self, atoms: Iterable[Atom]):
        self.atoms: frozenset = frozenset(atoms)
        by_pred: Dict[str, List[Atom]] = {}
        for a in self.atoms:
            by_pred.setdefault(a[0], []).append(a)
        self._by_pred = {p: tuple(sorted(v)) for p, v in by_pred.items()}

    def __contains__(self, atom: Atom) -> bool:
        return atom in self.atoms

    def with_pred(self, pred: str) -> Tuple[Atom, ...]:
        return self._by_pred.get(pred, ())

    def predicates(self) -> Set[str]:
        return set(self._by_pred)


class LiteralSet:
    """Mutable signed set of ground atoms with per-predicate indexes.

    Used for partial states and for the scratch sets built during search.
    Raises no errors on inconsistent content by itself; consistency is
    checked by the functions below.
    """

    __slots__ = ("signs", "_by_pred")

    def __init__(self, literals: Iterable[Literal] = ()):
        self.signs: Dict[Atom, bool] = {}
        self._by_pred: Dict[Tuple[str, bool], Set[Atom]] = {}
        for lit in literals:
            self.add(lit)

    def add(self, literal: Literal) -> bool:
        """Insert a literal; returns True if it was not present before."""
        atom, sign = literal
        if self.signs.get(atom) == sign and atom in self.signs:
            return False
        # A complementary assertion is recorded as well; consistency checks
        # will catch the clash before the set is ever used this way.
        if atom in self.signs and self.signs[atom] != sign:
            self._by_pred[(atom[0], self.signs[atom])].discard(atom)
        self.signs[atom] = sign
        self._by_pred.setdefault((atom[0], sign), set()).add(atom)
        return True

    def discard(self, atom: Atom) -> None:
        if atom in self.signs:
            self._by_pred[(atom[0], self.signs[atom])].discard(atom)
            del self.signs[atom]

    def sign(self, atom: Atom) -> Optional[bool]:
        return self.signs.get(atom)

    def with_pred(self, pred: str, sign: bool) -> Iterable[Atom]:
        return self._by_pred.get((pred, sign), ())

    def literals(self) -> Iterator[Literal]:
        return iter(self.signs.items())

    def snapshot(self) -> frozenset:
        return frozenset(self.signs.items())

    def copy(self) -> "LiteralSet":
        new = LiteralSet()
        new.signs = dict(self.signs)
        new._by_pred = {k: set(v) for k, v in self._by_pred.items()}
        return new

    def __contains__(self, literal: Literal) -> bool:
        return self.signs.get(literal[0]) == literal[1] and literal[0] in self.signs

    def __len__(self) -> int:
        return len(self.signs)

    def assume(self, literals: Iterable[Literal]) -> List[Literal]:
        """Add literals, returning the ones actually added (for retraction)."""
        added = []
        for lit in literals:
            atom, sign = lit
            prev = self.signs.get(atom)
            if atom in self.signs and prev == sign:
                continue
            if atom in self.signs and prev != sign:
                # Caller must have checked consistency first; keep both is
                # impossible in a dict, so this is a hard error.
                raise ValueError(f"assume would flip asserted literal {atom}")
            self.add(lit)
            added.append(lit)
        return added

    def retract(self, added: List[Literal]) -> None:
        for atom, _sign in added:
            self.discard(atom)


def _match_body(
    rule: IntegrityRule,
    idx: int,
    sigma: Substitution,
    state: LiteralSet,
    statics: StaticFacts,
    extra: Optional[Dict[Atom, bool]] = None,
) -> bool:
    """Backtracking check: can the remaining body literals all be matched?"""
    if idx == len(rule.literals):
        for c in rule.constraints:
            if eval_constraint(c, sigma) is not True:
                return False
        return True
    pattern, sign = rule.literals[idx]
    pred = pattern[0]
    candidates: List[Atom] = list(state.with_pred(pred, sign))
    if sign:
        candidates.extend(statics.with_pred(pred))
    if extra:
        candidates.extend(a for a, s in extra.items() if s == sign and a[0] == pred)
    seen = set()
    for ground in candidates:
        if ground in seen:
            continue
        seen.add(ground)
        ext = unify(pattern, ground, sigma)
        if ext is not None and _match_body(rule, idx + 1, ext, state, statics, extra):
            return True
    return False


def rule_fires(rule: IntegrityRule, state: LiteralSet, statics: StaticFacts) -> bool:
    return _match_body(rule, 0, {}, state, statics)


def is_consistent(
    literals: Iterable[Literal],
    statics: StaticFacts,
    rules: Sequence[IntegrityRule],
) -> bool:
    """False iff the set has a complementary pair or some rule body fires."""
    state = LiteralSet()
    for lit in literals:
        atom, sign = lit
        prev = state.sign(atom)
        if prev is not None and prev != sign:
            return False
        state.add(lit)
    return not any(rule_fires(r, state, statics) for r in rules)


def consistent_with(
    base: LiteralSet,
    additions: Iterable[Literal],
    statics: StaticFacts,
    rules: Sequence[IntegrityRule],
) -> bool:
    """Incremental variant: is ``base`` (assumed consistent) still consistent
    once ``additions`` are asserted? Only interactions involving the added
    literals are checked."""
    added: Dict[Atom, bool] = {}
    for atom, sign in additions:
        prev = base.sign(atom)
        if prev is not None and prev != sign:
            return False
        if atom in added and added[atom] != sign:
            return False
        if prev is None:
            added[atom] = sign
    if not added:
        return True
    for rule in rules:
        # Seed the match with each added literal in each body position;
        # bodies entirely inside the consistent base cannot fire.
        for i, (pattern, sign) in enumerate(rule.literals):
            for atom, asign in added.items():
                if asign != sign or atom[0] != pattern[0]:
                    continue
                sigma = unify(pattern, atom)
                if sigma is None:
                    continue
                rest = IntegrityRule(
                    rule.literals[:i] + rule.literals[i + 1 :], rule.constraints
                )
                if _match_body(rest, 0, sigma, base, statics, extra=added):
                    return False
    return True


def satisfies(
    condition: Sequence[Literal],
    constraints: Sequence[Constraint],
    state: LiteralSet,
    statics: StaticFacts,
    seed: Optional[Substitution] = None,
) -> List[Substitution]:
    """All substitutions making the condition hold in an open-world state.

    Positive literals must be asserted in the state or present in the static
    facts; negative literals must be asserted as explicit negatives (absence
    of knowledge is not falsity). Constraints that evaluate false reject the
    match; constraints over variables the literals leave unbound are
    deferred to the caller (they end up as residuals on norm instances).
    """
    positives = [l for l in condition if l[1]]
    negatives = [l for l in condition if not l[1]]
    results: List[Substitution] = []
    seen: Set[Tuple[Tuple[str, str], ...]] = set()

    def match(idx: int, sigma: Substitution, lits: List[Literal]) -> None:
        if idx == len(lits):
            if lits is positives and negatives:
                match(0, sigma, negatives)
                return
            for c in constraints:
                if eval_constraint(c, sigma) is False:
                    return
            key = tuple(sorted(sigma.items()))
            if key not in seen:
                seen.add(key)
                results.append(sigma)
            return
        pattern, sign = lits[idx]
        candidates: List[Atom] = list(state.with_pred(pattern[0], sign))
        if sign:
            candidates.extend(statics.with_pred(pattern[0]))
        for ground in candidates:
            ext = unify(pattern, ground, sigma)
            if ext is not None:
                match(idx + 1, ext, lits)

    start = dict(seed) if seed else {}
    if positives:
        match(0, start, positives)
    elif negatives:
        match(0, start, negatives)
    else:
        ok = all(eval_constraint(c, start) is not False for c in constraints)
        if ok:
            results.append(start)
    return results


def satisfies_closed(
    condition: Sequence[Literal],
    constraints: Sequence[Constraint],
    state: Set[Atom],
    statics: StaticFacts,
    seed: Optional[Substitution] = None,
) -> List[Substitution]:
    """Closed-world counterpart of :func:`satisfies` for full states.

    ``state`` is the set of true dynamic atoms; anything absent from
    ``state`` and the statics is false. Negative literals must be ground
    once the positive literals have been matched.
    """
    positives = [l for l in condition if l[1]]
    negatives = [l for l in condition if not l[1]]
    by_pred: Dict[str, List[Atom]] = {}
    for a in state:
        by_pred.setdefault(a[0], []).append(a)
    results: List[Substitution] = []
    seen: Set[Tuple[Tuple[str, str], ...]] = set()

    def finish(sigma: Substitution) -> None:
        for pattern, _ in negatives:
            atom = subst_atom(sigma, pattern)
            if not is_ground_atom(atom):
                raise ValueError(
                    f"negative literal {atom} not ground under closed-world match"
                )
            if atom in state or atom in statics:
                return
        for c in constraints:
            if eval_constraint(c, sigma) is False:
                return
        key = tuple(sorted(sigma.items()))
        if key not in seen:
            seen.add(key)
            results.append(sigma)

    def match(idx: int, sigma: Substitution) -> None:
        if idx == len(positives):
            finish(sigma)
            return
        pattern, _ = positives[idx]
        candidates = list(by_pred.get(pattern[0], ()))
        candidates.extend(statics.with_pred(pattern[0]))
        for ground in candidates:
            ext = unify(pattern, ground, sigma)
            if ext is not None:
                match(idx + 1, ext)

    match(0, dict(seed) if seed else {})
    return results


def format_atom(atom: Atom) -> str:
    if len(atom) == 1:
        return atom[0]
    return f"{atom[0]}({','.join(atom[1:])})"


def format_literal(literal: Literal) -> str:
    atom, sign = literal
    return format_atom(atom) if sign else "-" + format_atom(atom)
