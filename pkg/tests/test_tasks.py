from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from enactive.errors import (
    EmptyExtensionError,
    InvalidTaskError,
    LanguageMismatchError,
    NoOutputError,
    PreconditionError,
)
from enactive.formalism import Environment, Statement, Vocabulary, derive_language, explicit_language
from enactive.learning import random_derived_language
from enactive.tasks import (
    Policy,
    VTask,
    infer,
    is_child,
    is_correct,
    policies,
    policy_task,
    seeded_selector,
    task_level,
    task_violations,
)
from helpers import as_set
import oracles


def S(lang, *names):
    return lang.vocabulary.statement(*names)


def task(lang, inputs, outputs, strict=True):
    return VTask(lang, tuple(S(lang, *i) for i in inputs), tuple(S(lang, *o) for o in outputs), strict)


def shown(lang, pols):
    return [lang.format(p.statement) for p in pols]


@st.composite
def language_and_task(draw):
    seed = draw(st.integers(0, 2**32))
    n = draw(st.integers(2, 4))
    lang = random_derived_language(n, random.Random(seed), max_universe=8, min_universe=3)
    u = lang.universe
    picks = draw(st.lists(st.sampled_from(u), min_size=1, max_size=len(u) - 1, unique=True))
    e_i = lang.statements(lang.set_extension_mask(picks))
    if len(e_i) < 2:
        picks = list(u[:1]) + [s for s in u if s not in u[:1]][:1]
        e_i = lang.statements(lang.set_extension_mask(picks))
    outs = draw(st.lists(st.sampled_from(e_i), min_size=1, max_size=len(e_i) - 1, unique=True))
    return lang, VTask(lang, tuple(picks), tuple(outs))


class TestPolicies:
    def test_prop3(self, prop3, alpha):
        assert shown(prop3, policies(alpha)) == ["{j,k}", "{z}"]

    def test_five_statements(self, five):
        t = task(five, [["f1"]], [["f1", "f2"]])
        assert shown(five, policies(t)) == ["{f1,f2}", "{f2}"]

    def test_non_extension_closed_outputs_have_no_policy(self, five):
        t = task(five, [["f1"], ["f2"]], [["f1"], ["f2"]])
        assert policies(t) == ()

    @settings(max_examples=150, deadline=None)
    @given(language_and_task())
    def test_matches_oracle(self, data):
        lang, t = data
        universe = [as_set(s) for s in lang.universe]
        expected = oracles.correct_policies([as_set(s) for s in t.inputs],
                                            [as_set(s) for s in t.correct_outputs], universe)
        assert [as_set(p.statement) for p in policies(t)] == expected

    @settings(max_examples=150, deadline=None)
    @given(language_and_task(), st.integers(0, 2**16))
    def test_soundness(self, data, seed):
        lang, t = data
        select = seeded_selector(random.Random(seed))
        for p in policies(t):
            for i in t.inputs:
                if lang.extension_mask(i) & lang.extension_mask(p.statement):
                    _, ok = infer(p, i, t, select)
                    assert ok


class TestValidity:
    def test_outputs_outside_completions(self, five):
        problems = task_violations(five, [S(five, "f1")], [S(five, "f3")])
        assert problems == ["correct output {f3} is not a completion of any input"]

    def test_outputs_equal_to_completions(self, five):
        with pytest.raises(InvalidTaskError, match="strict subset"):
            task(five, [["f1"]], [["f1"], ["f1", "f2"]])
        task(five, [["f1"]], [["f1"], ["f1", "f2"]], strict=False)

    def test_inputs_cover_derived_universe(self, five):
        every = [list(five.vocabulary.names[i] for i in s) for s in five.universe]
        with pytest.raises(InvalidTaskError, match="whole language"):
            task(five, every, [["f1"]])

    def test_empty_sides(self, five):
        assert "inputs are empty" in task_violations(five, [], [S(five, "f1")])
        assert "correct outputs are empty" in task_violations(five, [S(five, "f1")], [])

    def test_explicit_inputs_may_leave_the_universe(self, alpha):
        assert all(i not in alpha.language for i in alpha.inputs)


class TestHierarchy:
    def test_child(self, five):
        a = task(five, [["f1"]], [["f1", "f2"]])
        w = task(five, [["f1"], ["f2"]], [["f1", "f2"]])
        assert is_child(a, w)
        assert not is_child(a, a)
        assert not is_child(w, a)

    def test_language_mismatch(self, five, alpha):
        with pytest.raises(LanguageMismatchError):
            is_child(task(five, [["f1"]], [["f1", "f2"]]), alpha)

    def test_levels(self, five):
        a = task(five, [["f1"]], [["f1", "f2"]])
        b = task(five, [["f1"], ["f3"]], [["f1", "f2"]])
        c = task(five, [["f1"], ["f3"], ["f2", "f3"]], [["f1", "f2"]])
        assert task_level(c, [a, b, c]) == 0
        assert task_level(a, [a, b, c]) == 2

    def test_diamond(self, five):
        bottom = task(five, [["f1"]], [["f1", "f2"]])
        left = task(five, [["f1"], ["f3"]], [["f1", "f2"]])
        right = task(five, [["f1"], ["f2", "f3"]], [["f1", "f2"]])
        top = task(five, [["f1"], ["f3"], ["f2", "f3"]], [["f1", "f2"]])
        assert task_level(bottom, [left, right, top]) == 2
        assert task_level(left, [bottom, right, top]) == 1

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32))
    def test_strict_partial_order(self, seed):
        rng = random.Random(seed)
        lang = random_derived_language(3, rng, max_universe=6, min_universe=3)
        u = list(lang.universe)
        tasks = []
        for _ in range(12):
            ins = rng.sample(u, rng.randint(1, len(u) - 1))
            e_i = lang.statements(lang.set_extension_mask(ins))
            if len(e_i) < 2:
                continue
            outs = rng.sample(list(e_i), rng.randint(1, len(e_i) - 1))
            tasks.append(VTask(lang, tuple(ins), tuple(outs)))
        for a in tasks:
            assert not is_child(a, a)
            for b in tasks:
                for c in tasks:
                    if is_child(a, b) and is_child(b, c):
                        assert is_child(a, c)

    @settings(max_examples=100, deadline=None)
    @given(language_and_task(), st.data())
    def test_inheritance(self, data, draw):
        """A parent's correct policy only completes the child's inputs inside O_omega."""
        lang, omega = data
        if len(omega.inputs) < 2:
            return
        sub = draw.draw(st.lists(st.sampled_from(omega.inputs), min_size=1,
                                 max_size=len(omega.inputs) - 1, unique=True))
        for p in policies(omega):
            for i in sub:
                meet = lang.extension_mask(i) & lang.extension_mask(p.statement)
                assert meet & ~omega.output_mask == 0


class TestPolicyTask:
    def test_f2(self, five):
        t = policy_task(Policy(S(five, "f2")), five)
        assert [five.format(s) for s in t.correct_outputs] == ["{f1,f2}", "{f2}", "{f2,f3}"]
        universe = [as_set(s) for s in five.universe]
        e_h = oracles.ext(frozenset({1}), universe)
        expected = [s for s in universe if oracles.ext(s, universe) & e_h]
        assert [as_set(s) for s in t.inputs] == expected
        assert not t.strict  # inputs are the whole universe, so strictness is waived

    def test_maximal_statement(self, five):
        m = S(five, "f2", "f3")
        assert policy_task(Policy(m), five).correct_outputs == (m,)

    def test_prop3(self, prop3):
        t = policy_task(Policy(S(prop3, "j", "k")), prop3)
        assert len(t.correct_outputs) == 4

    def test_empty_extension(self, prop3):
        with pytest.raises(EmptyExtensionError):
            policy_task(Policy(S(prop3, "a", "e")), prop3)

    @settings(max_examples=100, deadline=None)
    @given(language_and_task())
    def test_inputs_are_every_meeting_statement(self, data):
        lang, _ = data
        for h in lang.universe:
            t = policy_task(Policy(h), lang)
            e_h = lang.extension_mask(h)
            assert is_correct(Policy(h), t)
            for s in lang.universe:
                assert (s in t.input_set) == bool(lang.extension_mask(s) & e_h)


class TestInfer:
    def test_prop3(self, prop3, alpha):
        out, ok = infer(Policy(S(prop3, "j", "k")), S(prop3, "a", "b"), alpha)
        assert prop3.format(out) == "{a,b,c,d,j,k,z}"
        assert ok

    def test_five(self, five):
        t = task(five, [["f1"]], [["f1", "f2"]])
        out, ok = infer(Policy(S(five, "f2")), S(five, "f1"), t)
        assert out == S(five, "f1", "f2") and ok

    def test_incorrect_policy_can_be_right_by_chance(self, five):
        t = task(five, [["f1"], ["f3"]], [["f1", "f2"], ["f3"]])
        p = Policy(S(five, "f2"))
        assert not is_correct(p, t)
        assert infer(p, S(five, "f1"), t) == (S(five, "f1", "f2"), True)
        assert infer(p, S(five, "f3"), t) == (S(five, "f2", "f3"), False)

    def test_no_output(self, five):
        t = task(five, [["f1"], ["f3"]], [["f1", "f2"], ["f3"]])
        with pytest.raises(NoOutputError):
            infer(Policy(S(five, "f3")), S(five, "f1"), t)

    def test_input_must_belong_to_task(self, five):
        t = task(five, [["f1"]], [["f1", "f2"]])
        with pytest.raises(PreconditionError):
            infer(Policy(S(five, "f2")), S(five, "f3"), t)


def test_empty_policy_rejected():
    with pytest.raises(PreconditionError):
        Policy(Statement(0))


def test_explicit_policy_space_limits_candidates():
    vocab = Vocabulary.from_states(Environment(3), [[0, 1], [1, 2], [0, 1, 2]])
    universe = [Statement.of([0]), Statement.of([0, 2]), Statement.of([1, 2]), Statement.of([0, 1, 2])]
    wide = explicit_language(vocab, universe)
    narrow = explicit_language(vocab, universe, policy_space=[Statement.of([2])])
    for lang in (wide, narrow):
        t = VTask(lang, (Statement.of([0]),), (Statement.of([0, 2]), Statement.of([0, 1, 2])))
        found = [p.statement for p in policies(t)]
        assert all(s in lang.policy_space for s in found)
    assert derive_language(vocab).policy_space == derive_language(vocab).universe
