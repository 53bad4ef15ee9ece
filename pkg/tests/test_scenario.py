import itertools
import json

import pytest

from normmon.actions import ground_instance
from normmon.logic import eval_constraint, subst_atom
from normmon.scenario import (
    ScenarioError,
    dump_scenario,
    parse_atom,
    parse_constraint,
    parse_literal,
    scenario_from_dict,
    scenario_hash,
    scenario_to_dict,
)

from conftest import FIG1


class TestParsing:
    def test_atom_with_args(self):
        assert parse_atom("in(r1,a)") == (("in", "r1", "a"), True)

    def test_negated_atom(self):
        assert parse_atom("-in(r1, a)") == (("in", "r1", "a"), False)

    def test_nullary_atom(self):
        assert parse_atom("p7") == (("p7",), True)

    def test_literal(self):
        assert parse_literal("-corridor(a,b)") == (("corridor", "a", "b"), False)

    def test_constraint(self):
        assert parse_constraint("O1 != O2") == ("O1", "!=", "O2")
        assert parse_constraint("X=a") == ("X", "=", "a")

    def test_garbage_rejected(self):
        with pytest.raises(ScenarioError):
            parse_atom("in(r1")
        with pytest.raises(ScenarioError):
            parse_constraint("X < Y")


class TestRoundTrip:
    def test_load_dump_load_is_identity(self, fig1):
        again = scenario_from_dict(json.loads(dump_scenario(fig1)))
        assert scenario_to_dict(again) == scenario_to_dict(fig1)
        assert scenario_hash(again) == scenario_hash(fig1)

    def test_hash_tracks_content(self, fig1):
        data = scenario_to_dict(fig1)
        data["initial_state"] = sorted(data["initial_state"] + ["in(r2,f)"])
        assert scenario_hash(scenario_from_dict(data)) != scenario_hash(fig1)

    def test_bad_arity_rejected(self, fig1):
        data = scenario_to_dict(fig1)
        data["initial_state"][0] = "in(r1)"
        with pytest.raises(ValueError):
            scenario_from_dict(data)

    def test_unknown_agent_actor_rejected(self, fig1):
        data = scenario_to_dict(fig1)
        data["norms"][0]["deontic"] = "Q"
        with pytest.raises(Exception):
            scenario_from_dict(data)


class TestGroundActions:
    def test_matches_brute_force_instantiation(self, fig1):
        # Oracle: ground each non-NOP description over every combination of
        # constants and keep those whose static preconditions and
        # constraints hold.
        constants = fig1.constants()
        dynamic = fig1.dynamic_predicates
        for agent in fig1.agents:
            expected = set()
            for d in fig1.non_nop_descriptions():
                free = [p for p in d.params if p != d.actor_param]
                for combo in itertools.product(constants, repeat=len(free)):
                    sigma = dict(zip(free, combo))
                    sigma[d.actor_param] = agent
                    _, static_pre = d.split_pre(dynamic)
                    ok = all(
                        (subst_atom(sigma, atom) in fig1.statics) == sign
                        for atom, sign in static_pre
                    ) and all(
                        eval_constraint(c, sigma) is not False for c in d.constraints
                    )
                    if ok:
                        expected.add(ground_instance(d, sigma, dynamic))
            got = set(fig1.ground_actions(agent))
            assert got == expected

    def test_seven_moves_apply_in_the_initial_state(self, fig1):
        # r1 at a: a->b, a->e; r2 at d: d->a, d->e; r3 at e: e->a, e->d, e->f
        state = set(fig1.initial_state)
        applicable = [
            a
            for agent in fig1.agents
            for a in fig1.ground_actions(agent)
            if all(
                (atom in state) == sign
                for atom, sign in a.pre
            )
        ]
        assert len(applicable) == 7
