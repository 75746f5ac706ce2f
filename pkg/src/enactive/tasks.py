"""v-tasks, correct policies, the generational hierarchy and inference."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .bits import popcount
from .errors import (
    EmptyExtensionError,
    InvalidTaskError,
    LanguageMismatchError,
    NoOutputError,
    PreconditionError,
)
from .formalism import Language, Statement, canonical

# A selector picks one output from a nonempty, canonically ordered tuple.
Selector = Callable[[Sequence[Statement]], Statement]


def canonical_first(candidates: Sequence[Statement]) -> Statement:
    return candidates[0]


def seeded_selector(rng) -> Selector:
    """Uniform choice driven by a caller-owned ``random.Random``."""

    def select(candidates: Sequence[Statement]) -> Statement:
        return candidates[rng.randrange(len(candidates))]

    return select


@dataclass(frozen=True)
class Policy:
    statement: Statement

    def __post_init__(self) -> None:
        if self.statement.mask == 0:
            raise PreconditionError("a policy statement must be nonempty")

    def __lt__(self, other: "Policy") -> bool:
        return self.statement < other.statement


def task_violations(
    language: Language,
    inputs: Iterable[Statement],
    correct_outputs: Iterable[Statement],
    strict: bool = True,
) -> list[str]:
    """Every reason (I, O) fails to be a v-task over ``language``.

    With ``strict`` false, the two strictness conditions (I a proper subset of
    a derived universe, O a proper subset of E_I) are waived.
    """
    fmt = language.format
    problems: list[str] = []
    inputs = list(inputs)
    outputs = list(correct_outputs)
    if not inputs:
        problems.append("inputs are empty")
    if not outputs:
        problems.append("correct outputs are empty")
    for s in inputs:
        try:
            language.check(s)
        except ValueError as exc:
            problems.append(f"input {list(s.members)}: {exc}")
    if language.kind == "derived":
        for s in inputs:
            if s not in language:
                problems.append(f"input {fmt(s)} is not in the language")
        if strict and inputs and set(inputs) >= set(language.universe):
            problems.append("inputs equal the whole language (must be a strict subset)")
    if problems:
        return problems
    e_inputs = language.set_extension_mask(inputs)
    out_mask = 0
    for o in outputs:
        pos = language.position(o)
        if pos is None:
            problems.append(f"correct output {fmt(o)} is not in the language")
        elif not e_inputs >> pos & 1:
            problems.append(f"correct output {fmt(o)} is not a completion of any input")
        else:
            out_mask |= 1 << pos
    if not problems and strict and out_mask == e_inputs:
        problems.append("correct outputs equal every available output (must be a strict subset)")
    return problems


@dataclass(frozen=True)
class VTask:
    """A pair of input statements and correct-output statements."""

    language: Language = field(repr=False, compare=False)
    inputs: tuple[Statement, ...]
    correct_outputs: tuple[Statement, ...]
    strict: bool = field(default=True, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", canonical(self.inputs))
        object.__setattr__(self, "correct_outputs", canonical(self.correct_outputs))
        problems = task_violations(self.language, self.inputs, self.correct_outputs, self.strict)
        if problems:
            raise InvalidTaskError(problems)

    def __hash__(self) -> int:
        return hash((self.inputs, self.correct_outputs))

    def __deepcopy__(self, memo) -> "VTask":
        return self

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VTask):
            return NotImplemented
        return (
            self.language is other.language
            and self.inputs == other.inputs
            and self.correct_outputs == other.correct_outputs
        )

    @functools.cached_property
    def input_set(self) -> frozenset[Statement]:
        return frozenset(self.inputs)

    @functools.cached_property
    def output_set(self) -> frozenset[Statement]:
        return frozenset(self.correct_outputs)

    @functools.cached_property
    def input_extension(self) -> int:
        """E_I as a universe-position mask."""
        return self.language.set_extension_mask(self.inputs)

    @functools.cached_property
    def output_mask(self) -> int:
        return self.language.mask_of(self.correct_outputs)

    def sort_key(self) -> tuple:
        return (
            tuple(s.members for s in self.inputs),
            tuple(s.members for s in self.correct_outputs),
        )

    def describe(self) -> str:
        fmt = self.language.format
        ins = ", ".join(fmt(s) for s in self.inputs)
        outs = ", ".join(fmt(s) for s in self.correct_outputs)
        return f"<I={{{ins}}}, O={{{outs}}}>"


def is_correct(policy: Policy | Statement, task: VTask) -> bool:
    stmt = policy.statement if isinstance(policy, Policy) else policy
    return task.input_extension & task.language.extension_mask(stmt) == task.output_mask


def policies(task: VTask) -> tuple[Policy, ...]:
    """Every statement of the policy space whose completions meet E_I in exactly O."""
    lang = task.language
    e_inputs = task.input_extension
    target = task.output_mask
    return tuple(
        Policy(pi)
        for pi in lang.policy_space
        if e_inputs & lang.extension_mask(pi) == target
    )


def is_child(alpha: VTask, omega: VTask) -> bool:
    if alpha.language is not omega.language:
        raise LanguageMismatchError("tasks belong to different languages")
    return alpha.input_set < omega.input_set and alpha.output_set <= omega.output_set


def task_level(alpha: VTask, universe_tasks: Iterable[VTask]) -> int:
    """Length of the longest ascending chain from ``alpha`` within the task set."""
    tasks = list(dict.fromkeys([alpha, *universe_tasks]))
    parents = {
        t: [u for u in tasks if u is not t and is_child(t, u)]
        for t in tasks
    }

    @functools.lru_cache(maxsize=None)
    def height(i: int) -> int:
        t = tasks[i]
        return max((1 + height(tasks.index(p)) for p in parents[t]), default=0)

    return height(tasks.index(alpha))


def policy_task(h: Policy, language: Language) -> VTask:
    """The highest-level task whose correct outputs are exactly E_h.

    Inputs are every universe statement whose extension meets E_h.  When that
    input set makes the task improper (inputs cover the whole derived universe,
    or E_I = E_h) the task is returned with strictness waived.
    """
    e_h = language.extension_mask(h.statement)
    if e_h == 0:
        raise EmptyExtensionError(f"{language.format(h.statement)} has no completions")
    inputs = [
        i for i in language.universe if language.extension_mask(i) & e_h
    ]
    outputs = language.statements(e_h)
    strict = not task_violations(language, inputs, outputs, strict=True)
    return VTask(language, tuple(inputs), outputs, strict=strict)


def infer(
    policy: Policy,
    input: Statement,
    task: VTask,
    selector: Selector = canonical_first,
) -> tuple[Statement, bool]:
    """Complete ``input`` under ``policy``; report whether the output is correct."""
    if input not in task.input_set:
        raise PreconditionError(f"{task.language.format(input)} is not an input of the task")
    lang = task.language
    options = lang.extension_mask(input) & lang.extension_mask(policy.statement)
    if not options:
        raise NoOutputError(
            f"no completion of {lang.format(input)} is admitted by {lang.format(policy.statement)}"
        )
    output = selector(lang.statements(options))
    return output, output in task.output_set


def extension_size(statement: Statement, language: Language) -> int:
    return popcount(language.extension_mask(statement))

