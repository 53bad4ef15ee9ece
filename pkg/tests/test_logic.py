from hypothesis import given, settings
from hypothesis import strategies as st

from normmon.logic import (
    IntegrityRule,
    LiteralSet,
    StaticFacts,
    consistent_with,
    eval_constraint,
    is_consistent,
    subst_atom,
    unify,
)

NO_STATICS = StaticFacts(())

constants = st.sampled_from(["a", "b", "c", "d"])
variables = st.sampled_from(["X", "Y", "Z"])
predicates = st.sampled_from(["p", "q", "r"])


@st.composite
def ground_atoms(draw, max_arity=3):
    pred = draw(predicates)
    args = draw(st.lists(constants, max_size=max_arity))
    return (pred,) + tuple(args)


@st.composite
def patterns(draw, max_arity=3):
    pred = draw(predicates)
    args = draw(st.lists(st.one_of(constants, variables), max_size=max_arity))
    return (pred,) + tuple(args)


class TestUnify:
    def test_binds_variables(self):
        assert unify(("in", "R", "O"), ("in", "r1", "a")) == {"R": "r1", "O": "a"}

    def test_repeated_variable_must_agree(self):
        assert unify(("c", "X", "X"), ("c", "a", "a")) == {"X": "a"}
        assert unify(("c", "X", "X"), ("c", "a", "b")) is None

    def test_constant_mismatch(self):
        assert unify(("in", "r1", "O"), ("in", "r2", "a")) is None

    def test_predicate_and_arity_mismatch(self):
        assert unify(("in", "X"), ("at", "a")) is None
        assert unify(("in", "X"), ("in", "a", "b")) is None

    def test_seed_is_respected(self):
        assert unify(("in", "R", "O"), ("in", "r1", "a"), seed={"R": "r2"}) is None
        sigma = unify(("in", "R", "O"), ("in", "r1", "a"), seed={"R": "r1"})
        assert sigma == {"R": "r1", "O": "a"}

    @given(patterns(), ground_atoms())
    @settings(max_examples=200)
    def test_substituting_the_unifier_reproduces_the_ground_atom(self, pat, ground):
        sigma = unify(pat, ground)
        if sigma is not None:
            assert subst_atom(sigma, pat) == ground

    @given(ground_atoms())
    def test_ground_atom_unifies_with_itself(self, ground):
        assert unify(ground, ground) == {}


class TestEvalConstraint:
    def test_bound_sides(self):
        assert eval_constraint(("X", "!=", "Y"), {"X": "a", "Y": "b"}) is True
        assert eval_constraint(("X", "!=", "Y"), {"X": "a", "Y": "a"}) is False
        assert eval_constraint(("X", "=", "a"), {"X": "a"}) is True

    def test_unbound_side_is_undecided(self):
        assert eval_constraint(("X", "!=", "Y"), {"X": "a"}) is None

    def test_two_constants_need_no_binding(self):
        assert eval_constraint(("a", "!=", "b"), {}) is True


RULE = IntegrityRule(
    literals=((("in", "R", "O1"), True), (("in", "R", "O2"), True)),
    constraints=(("O1", "!=", "O2"),),
)


class TestConsistency:
    def test_rule_rejects_two_positions(self):
        lits = [(("in", "r1", "a"), True), (("in", "r1", "b"), True)]
        assert not is_consistent(lits, NO_STATICS, [RULE])

    def test_negative_does_not_fire_the_rule(self):
        lits = [(("in", "r1", "a"), True), (("in", "r1", "b"), False)]
        assert is_consistent(lits, NO_STATICS, [RULE])

    def test_direct_sign_contradiction(self):
        state = LiteralSet([(("in", "r1", "a"), True)])
        assert not consistent_with(state, [(("in", "r1", "a"), False)], NO_STATICS, [])

    def test_consistent_with_rejects_rule_completion(self):
        state = LiteralSet([(("in", "r1", "a"), True)])
        assert not consistent_with(state, [(("in", "r1", "b"), True)], NO_STATICS, [RULE])
        assert consistent_with(state, [(("in", "r2", "b"), True)], NO_STATICS, [RULE])

    @given(st.lists(ground_atoms(), max_size=6), st.lists(ground_atoms(), max_size=3))
    @settings(max_examples=200)
    def test_incremental_check_agrees_with_from_scratch_check(self, base, extra):
        rules = [RULE]
        state = LiteralSet([(a, True) for a in base])
        added = [(a, True) for a in extra]
        if not is_consistent(list(state.literals()), NO_STATICS, rules):
            return
        merged = list(state.literals()) + added
        assert consistent_with(state, added, NO_STATICS, rules) == is_consistent(
            merged, NO_STATICS, rules
        )


class TestLiteralSet:
    def test_assume_returns_only_new_literals_and_retract_undoes(self):
        s = LiteralSet([(("p", "a"), True)])
        added = s.assume([(("p", "a"), True), (("q", "b"), False)])
        assert added == [(("q", "b"), False)]
        s.retract(added)
        assert s.snapshot() == frozenset({(("p", "a"), True)})

    def test_sign_lookup(self):
        s = LiteralSet([(("p", "a"), True), (("q", "b"), False)])
        assert s.sign(("p", "a")) is True
        assert s.sign(("q", "b")) is False
        assert s.sign(("r", "c")) is None

    def test_copy_is_independent(self):
        s = LiteralSet([(("p", "a"), True)])
        t = s.copy()
        t.add((("q", "b"), True))
        assert s.sign(("q", "b")) is None
