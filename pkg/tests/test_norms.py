from hypothesis import given, settings
from hypothesis import strategies as st

from normmon.logic import LiteralSet
from normmon.norms import (
    FULFILLED,
    OBLIGATION,
    PROHIBITION,
    UNKNOWN,
    VIOLATED,
    Norm,
    judge,
    judge_obligation,
    judge_prohibition,
    instance_matches,
    relevant_instances,
    relevant_instances_closed,
)


def collision_instances(fig1, state_lits):
    p = LiteralSet(state_lits)
    return relevant_instances(fig1.norms, p, fig1.statics)


class TestInstantiation:
    def test_three_instances_in_the_initial_state(self, fig1):
        # One occupied office per robot: three forbidden destinations.
        insts = relevant_instances_closed(
            fig1.norms, set(fig1.initial_state), fig1.statics
        )
        assert sorted(i.action for i in insts) == [
            ("move", "R2", "L1", "a"),
            ("move", "R2", "L1", "d"),
            ("move", "R2", "L1", "e"),
        ]
        # The occupant itself is exempt through the residual R1 != R2
        # constraint; everyone else matches.
        by_dest = {i.action[3]: i for i in insts}
        assert not instance_matches(by_dest["a"], ("move", "r1", "d", "a"))
        assert instance_matches(by_dest["a"], ("move", "r2", "d", "a"))

    def test_unknown_positions_yield_no_instances(self, fig1):
        assert collision_instances(fig1, []) == []

    def test_negative_literal_does_not_instantiate(self, fig1):
        assert collision_instances(fig1, [(("in", "r1", "a"), False)]) == []


class TestJudging:
    def test_prohibition_violated_by_matching_action(self, fig1, inst):
        insts = collision_instances(fig1, [(("in", "r1", "a"), True)])
        (instance,) = insts
        acts = [inst("move(r3,e,a)")]
        assert judge(instance, acts, agent_count=3) == VIOLATED

    def test_prohibition_unknown_under_partial_joint_action(self, fig1, inst):
        insts = collision_instances(fig1, [(("in", "r1", "a"), True)])
        (instance,) = insts
        acts = [inst("move(r2,d,e)")]
        assert judge(instance, acts, agent_count=3) == UNKNOWN

    def test_prohibition_fulfilled_when_joint_action_complete(self, fig1, inst):
        insts = collision_instances(fig1, [(("in", "r1", "a"), True)])
        (instance,) = insts
        acts = [
            inst("move(r1,a,b)"),
            inst("move(r2,d,e)"),
            inst("move(r3,e,f)"),
        ]
        assert judge(instance, acts, agent_count=3) == FULFILLED

    @given(st.integers(0, 3), st.integers(1, 3))
    @settings(max_examples=50)
    def test_obligation_and_prohibition_are_mirror_images(
        self, fig1, n_observed, agent_count
    ):
        # For every instance and action set, swapping the deontic modality
        # swaps fulfilled and violated and preserves unknown.
        swap = {FULFILLED: VIOLATED, VIOLATED: FULFILLED, UNKNOWN: UNKNOWN}
        schemas = [
            ("move", "r1", "a", "b"),
            ("move", "r2", "d", "a"),
            ("move", "r3", "e", "a"),
        ]

        class Fake:
            def __init__(self, schema):
                self.schema = schema
                self.actor = schema[1]

        acts = [Fake(s) for s in schemas[:n_observed]]
        insts = collision_instances(fig1, [(("in", "r1", "a"), True)])
        for instance in insts:
            p_verdict = judge_prohibition(instance, acts, agent_count)
            o_verdict = judge_obligation(instance, acts, agent_count)
            assert o_verdict == swap[p_verdict]


class TestNormValidation:
    def test_bad_deontic_rejected(self):
        try:
            Norm("n", "X", (), (), ("move", "W"))
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")


def test_instances_deduplicate_on_action_and_residuals(fig1):
    # Two robots in one office create one instance for that destination,
    # per distinct residual constraint set.
    insts = collision_instances(
        fig1, [(("in", "r1", "a"), True), (("in", "r2", "a"), True)]
    )
    assert len({(i.action, i.constraints) for i in insts}) == len(insts)
