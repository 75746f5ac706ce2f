from __future__ import annotations

import json

import pytest

from enactive.agents import (
    BUILTIN_SCENARIOS,
    Organism,
    Stage,
    affects_organism,
    affects_statement,
    classify_stage,
    interpret,
    load_scenario,
    protosymbol_system,
    run,
    run_scenario,
    step,
)
from enactive.agents.organism import stage_table
from enactive.agents.scenarios import ScenarioSpec, build_world, builtin_text
from enactive.causality import SelfModel
from enactive.documents import parse_document
from enactive.errors import DocumentError, PreconditionError, ScenarioError, UnknownScenarioError
from enactive.formalism import Environment, Statement, Vocabulary, derive_language
from enactive.tasks import Policy, VTask, is_correct
from enactive.agents.world import SimulationWorld
from helpers import golden


def load_doc(text: str) -> ScenarioSpec:
    doc = parse_document(text, "<test>")
    world, max_steps = build_world(doc)
    return ScenarioSpec("test", doc, world, max_steps)


@pytest.fixture(scope="module")
def lang():
    return derive_language(Vocabulary.from_states(Environment(4), [[0, 1], [1, 2], [2, 3]]))


def S(lang, *names):
    return lang.vocabulary.statement(*names)


def T(lang, inputs, outputs):
    return VTask(lang, tuple(S(lang, *i) for i in inputs), tuple(S(lang, *o) for o in outputs))


@pytest.fixture(scope="module")
def tasks(lang):
    return {
        "narrow": T(lang, [["f1"]], [["f1", "f2"]]),
        "wide": T(lang, [["f1"], ["f3"]], [["f1", "f2"], ["f2", "f3"]]),
        "pair": T(lang, [["f1"], ["f2", "f3"]], [["f1", "f2"], ["f2", "f3"]]),
        "other": T(lang, [["f1"], ["f2"]], [["f1"], ["f2"]]),
    }


def organism(lang, *policies, **kw) -> Organism:
    return Organism(id=kw.pop("id", "o"), vocabulary=lang.vocabulary, language=lang,
                    reflex_policies=tuple(Policy(S(lang, *p)) for p in policies), **kw)


class TestProtosymbols:
    def test_one_policy(self, lang, tasks):
        o = organism(lang, ["f2"])
        got = protosymbol_system(o, tasks.values())
        assert set(got) == {t for t in tasks.values() if is_correct(Policy(S(lang, "f2")), t)}
        assert tasks["other"] not in got

    def test_no_policy(self, lang, tasks):
        assert protosymbol_system(organism(lang), tasks.values()) == ()

    def test_overlapping_policies_union_once(self, lang, tasks):
        o = organism(lang, ["f2"], ["f1", "f2"])
        got = protosymbol_system(o, list(tasks.values()) * 2)
        assert len(got) == len(set(got))
        assert tasks["narrow"] in got and tasks["wide"] in got

    def test_default_universe_is_policy_tasks(self, lang):
        o = organism(lang, ["f2"])
        assert all(is_correct(Policy(S(lang, "f2")), t) for t in protosymbol_system(o))


class TestInterpret:
    def test_meaningless(self, lang, tasks):
        o = organism(lang, ["f2"])
        assert interpret(o, S(lang, "f2"), [tasks["narrow"]]) == (None, False, None)
        assert interpret(o, Statement(0), [tasks["narrow"]]) == (None, False, None)

    def test_single_task(self, lang, tasks):
        for pref in ("indifferent", "specific", "general"):
            o = organism(lang, ["f2"], preference=pref)
            out, meant, chosen = interpret(o, S(lang, "f3"), tasks.values())
            assert meant and chosen == tasks["wide"] and out == S(lang, "f2", "f3")

    def test_preference_picks_the_task(self, lang, tasks):
        universe = [tasks["narrow"], tasks["wide"]]
        specific = interpret(organism(lang, ["f2"], preference="specific"), S(lang, "f1"), universe)
        general = interpret(organism(lang, ["f2"], preference="general"), S(lang, "f1"), universe)
        assert specific[2] == tasks["narrow"]
        assert general[2] == tasks["wide"]
        assert specific[0] == general[0] == S(lang, "f1", "f2")

    def test_deterministic(self, lang, tasks):
        o = organism(lang, ["f2"], ["f1", "f2"])
        runs = {interpret(o, S(lang, "f1"), tasks.values()) for _ in range(5)}
        assert len(runs) == 1

    def test_unknown_preference(self, lang):
        with pytest.raises(PreconditionError):
            organism(lang, preference="random")


class TestAffect:
    def test_irrelevant_removal(self, lang, tasks):
        o = organism(lang, ["f2"])
        assert not affects_statement(S(lang, "f2"), S(lang, "f2", "f3"), o, [tasks["pair"], tasks["wide"]])

    def test_removal_that_unsignifies(self, lang, tasks):
        o = organism(lang, ["f2"])
        assert affects_statement(S(lang, "f2"), S(lang, "f2", "f3"), o, [tasks["pair"]])

    def test_v_must_be_a_proper_part(self, lang):
        o = organism(lang, ["f2"])
        with pytest.raises(PreconditionError):
            affects_statement(S(lang, "f1"), S(lang, "f2", "f3"), o)
        with pytest.raises(PreconditionError):
            affects_statement(S(lang, "f2"), S(lang, "f2"), o)

    def test_coercion_affects_alice(self):
        spec = load_scenario("raincoat")
        run(spec.world, 3)
        world = spec.world
        assert world.last_actors == ("bob",)
        assert affects_organism(world.organisms["bob"], world.organisms["alice"], world)

    def test_no_change_no_affect(self):
        spec = load_scenario("raincoat")
        run(spec.world, 5)
        world = spec.world
        assert world.last_actors == ("larry",)
        assert not affects_organism(world.organisms["larry"], world.organisms["alice"], world)

    def test_actor_must_have_acted(self):
        spec = load_scenario("raincoat")
        run(spec.world, 1)
        with pytest.raises(PreconditionError):
            affects_organism(spec.world.organisms["bob"], spec.world.organisms["alice"], spec.world)

    def test_nothing_to_flip(self):
        spec = load_scenario("gricean")
        run(spec.world, 1)
        w = spec.world
        assert protosymbol_system(w.organisms["bob"]) == ()
        assert not affects_organism(w.organisms["alice"], w.organisms["bob"], w)


class TestStep:
    def _world(self, lang, organisms, schedule):
        return SimulationWorld(environment=lang.vocabulary.environment, programs=lang.vocabulary,
                               state_names=("s0", "s1", "s2", "s3"),
                               organisms={o.id: o for o in organisms}, schedule=schedule, state=1)

    def test_empty_world_only_ticks(self, lang):
        w = self._world(lang, [], ())
        before = list(w.trace)
        step(w)
        assert w.clock == 1 and w.trace == before and w.state == 1

    def test_reflex_output_every_step(self, lang):
        o = organism(lang, ["f2"], id="r", declared_tasks=(T(lang, [["f1", "f2"], ["f3"]], [["f1", "f2"], ["f2", "f3"]]),))
        w = self._world(lang, [o], ("r",))
        run(w, 4)
        turns = [r for r in w.trace if r["kind"] == "turn"]
        assert len(turns) == 4
        assert all(t["meant"] and t["output"] == ["f1", "f2"] for t in turns)

    def test_unknown_schedule_entry(self, lang):
        with pytest.raises(ScenarioError):
            self._world(lang, [], ("ghost",))

    def test_negative_steps(self, lang):
        with pytest.raises(PreconditionError):
            run(self._world(lang, [], ()), -1)

    @pytest.mark.parametrize("name", BUILTIN_SCENARIOS)
    def test_history_grows_one_pair_per_step(self, name):
        spec = load_scenario(name)
        for k in range(1, spec.max_steps + 1):
            step(spec.world)
            assert all(len(o.history) == k for o in spec.world.organisms.values())

    def test_selective_memory_drops_oldest_and_logs(self):
        text = builtin_text("prop4").replace("learning: true", "learning: true\n    selective_memory: true\n    memory_limit: 2")
        spec = load_doc(text)
        run(spec.world, 5)
        learner = spec.world.organisms["learner"]
        drops = [r for r in spec.world.trace if r["kind"] == "memory_drop"]
        assert len(learner.history) == 2
        assert len(drops) == 3

    @pytest.mark.parametrize("name", BUILTIN_SCENARIOS)
    def test_stage_never_decreases(self, name):
        spec = load_scenario(name)
        last = {k: classify_stage(o) for k, o in spec.world.organisms.items()}
        for _ in range(spec.max_steps):
            step(spec.world)
            for k, o in spec.world.organisms.items():
                assert classify_stage(o) >= last[k]
                last[k] = classify_stage(o)


class TestScenarios:
    @pytest.mark.parametrize("name", BUILTIN_SCENARIOS)
    def test_golden_trace(self, name):
        lines, summary = run_scenario(name, seed=0)
        text = "".join(line + "\n" for line in lines)
        assert text == golden(f"{name}_seed0.jsonl", text)
        summary_text = json.dumps(summary, sort_keys=True, indent=1) + "\n"
        assert summary_text == golden(f"{name}_seed0_summary.json", summary_text)

    @pytest.mark.parametrize("name", BUILTIN_SCENARIOS)
    def test_replay_is_byte_identical(self, name):
        assert run_scenario(name, seed=3) == run_scenario(name, seed=3)

    def test_raincoat_inventory(self):
        _, summary = run_scenario("raincoat")
        bob = summary["inventory"]["bob"]
        assert bob["selves"][0]["identity"] == ["b_mark"]
        assert bob["models"][0]["identity"] == ["l_mark"]

    def test_raincoat_asymmetry(self):
        lines, _ = run_scenario("raincoat")
        records = [json.loads(x) for x in lines if '"asymmetry"' in x]
        assert records and all(r["differs"] for r in records)
        assert records[0]["intervention_output"] != records[0]["observation_output"]

    def test_predator_prey_second_order_self(self):
        lines, summary = run_scenario("predator_prey")
        assert summary["stages"]["a"] == Stage.SECOND_ORDER_SELVES
        first = next(json.loads(x) for x in lines if '"self_registered"' in x)
        chase = next(json.loads(x) for x in lines if '"chase"' in x)
        assert first["chain"] == ["b", "a"] and first["step"] >= chase["step"]

    def test_unknown_scenario(self):
        with pytest.raises(UnknownScenarioError):
            run_scenario("teleport")
        with pytest.raises(UnknownScenarioError):
            run_scenario("raincoat", parameters={"scale": False})
        with pytest.raises(UnknownScenarioError):
            run_scenario("prop4", parameters={"speed": True})

    def test_bad_organism_field_has_a_location(self):
        text = builtin_text("prop4").replace("report_preconditions: true", "report_preconditions: maybe")
        with pytest.raises(DocumentError) as info:
            load_doc(text)
        assert info.value.line is not None


class TestStages:
    def _org(self, lang, **kw):
        return organism(lang, ["f2"], id="a", **kw)

    def test_table(self, lang):
        reflex = self._org(lang)
        learner = self._org(lang, learning=True)
        first, second, third = (self._org(lang, learning=True) for _ in range(3))
        ident = S(lang, "f2")
        for o, chains in ((first, [("a",)]), (second, [("a",), ("b", "a")]),
                          (third, [("a",), ("b", "a"), ("b", "a", "b", "a")])):
            for chain in chains:
                o.register_self(SelfModel("a", chain, ident))
        assert [classify_stage(o) for o in (reflex, learner, first, second, third)] == [
            Stage.HARD_CODED, Stage.LEARNING, Stage.FIRST_ORDER_SELF,
            Stage.SECOND_ORDER_SELVES, Stage.THIRD_ORDER_SELVES]

    def test_inert(self, lang):
        assert classify_stage(organism(lang)) == Stage.INERT

    def test_registry_is_append_only(self, lang):
        o = self._org(lang, learning=True)
        assert o.register_self(SelfModel("a", ("a",), S(lang, "f2")))
        assert not o.register_self(SelfModel("a", ("a",), S(lang, "f1")))
        assert o.selves[("a",)].identity == S(lang, "f2")
        with pytest.raises(PreconditionError):
            o.register_self(SelfModel("b", ("b",), S(lang, "f2")))

    def test_stage_table_names(self, lang):
        assert stage_table([self._org(lang)]) == {"a": "HARD_CODED"}
