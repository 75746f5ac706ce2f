"""Organisms, protosymbol systems, interpretation, affect and stages."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from ..bits import popcount
from ..causality import SelfModel
from ..errors import EmptyExtensionError, InvalidTaskError, NoCorrectPolicyError, PreconditionError
from ..formalism import Language, Statement, Vocabulary
from ..learning import WEAKNESS, learn
from ..tasks import Policy, Selector, VTask, canonical_first, policies, policy_task

# A preference assigns each task a rank; higher is preferred.  Ties are
# broken canonical-first on the task's serialisation.
Preference = Callable[[VTask], int]

PREFERENCES: dict[str, Preference] = {
    "indifferent": lambda task: 0,
    "specific": lambda task: -popcount(task.input_extension),
    "general": lambda task: popcount(task.input_extension),
}


class Stage(enum.IntEnum):
    INERT = 0
    HARD_CODED = 1
    LEARNING = 2
    FIRST_ORDER_SELF = 3
    SECOND_ORDER_SELVES = 4
    THIRD_ORDER_SELVES = 5


@dataclass
class Organism:
    """A body (vocabulary), what it knows (policies) and what it has lived (history).

    ``history`` holds one (input, output) pair per turn; either side is None
    when nothing was perceived or nothing was output.  ``fit_mask`` is the
    running O of the history task: completions of past inputs that the
    fitness task counts as fit.
    """

    id: str
    vocabulary: Vocabulary
    language: Language
    reflex_policies: tuple[Policy, ...] = ()
    learned_policies: list[Policy] = field(default_factory=list)
    fitness_task: VTask | None = None
    declared_tasks: tuple[VTask, ...] = ()
    preference: str = "indifferent"
    learning: bool = False
    selective_memory: bool = False
    memory_limit: int | None = None
    incentives: dict[int, bool] = field(default_factory=dict)
    history: list[tuple[Statement | None, Statement | None]] = field(default_factory=list)
    fit_mask: int = 0
    selves: dict[tuple[str, ...], SelfModel] = field(default_factory=dict)
    models: dict[tuple[str, ...], Statement] = field(default_factory=dict)
    _universe_cache: tuple = field(default=((), ()), repr=False)

    def __post_init__(self) -> None:
        if self.preference not in PREFERENCES:
            raise PreconditionError(
                f"unknown preference {self.preference!r}; expected one of {sorted(PREFERENCES)}"
            )
        if self.selective_memory and (self.memory_limit is None or self.memory_limit < 1):
            raise PreconditionError("selective memory needs a positive memory_limit")
        for p in self.reflex_policies:
            self.language.vocabulary.check(p.statement)

    @property
    def known_policies(self) -> tuple[Policy, ...]:
        return tuple(dict.fromkeys((*self.reflex_policies, *self.learned_policies)))

    def incentive_for(self, order: int) -> bool:
        return bool(self.incentives.get(order, False))

    def perceive(self, state: int) -> Statement:
        """The aspect of ``state`` this organism's programs can register (possibly empty)."""
        return Statement(
            sum(1 << i for i, p in enumerate(self.vocabulary.programs) if p.mask >> state & 1)
        )

    def task_universe(self) -> tuple[VTask, ...]:
        """The finite slice of tasks interpretation ranges over.

        It holds the highest-level task of every known policy together with
        any tasks the scenario declares for this organism.
        """
        known = self.known_policies
        if self._universe_cache[0] == known:
            return self._universe_cache[1]
        tasks: dict[VTask, None] = {}
        for p in known:
            try:
                tasks[policy_task(p, self.language)] = None
            except EmptyExtensionError:
                continue
        for t in self.declared_tasks:
            tasks[t] = None
        universe = tuple(sorted(tasks, key=VTask.sort_key))
        self._universe_cache = (known, universe)
        return universe

    def history_task(self) -> VTask | None:
        """The lived history as a task, or None while it is not yet a valid one."""
        inputs = tuple(dict.fromkeys(i for i, _ in self.history if i is not None and i.mask))
        if not inputs or not self.fit_mask:
            return None
        try:
            return VTask(self.language, inputs, self.language.statements(self.fit_mask), strict=False)
        except InvalidTaskError:
            return None

    def remember(self, pair: tuple[Statement | None, Statement | None]) -> list[tuple]:
        """Append a turn to history; return the pairs dropped by selective memory."""
        self.history.append(pair)
        i = pair[0]
        if i is not None and i.mask and self.fitness_task is not None:
            self.fit_mask |= self.language.extension_mask(i) & self.fitness_task.output_mask
        dropped: list[tuple] = []
        if self.selective_memory:
            while len(self.history) > self.memory_limit:
                dropped.append(self.history.pop(0))
            if dropped:
                self._recompute_fit_mask()
        return dropped

    def _recompute_fit_mask(self) -> None:
        self.fit_mask = 0
        if self.fitness_task is None:
            return
        for i, _ in self.history:
            if i is not None and i.mask:
                self.fit_mask |= self.language.extension_mask(i) & self.fitness_task.output_mask

    def learn_from_history(self) -> Policy | None:
        """One weakness-maximising step over the history task; returns a new policy, if any."""
        if not self.learning:
            return None
        task = self.history_task()
        if task is None:
            return None
        try:
            chosen, _ = learn(task, WEAKNESS)
        except NoCorrectPolicyError:
            return None
        if chosen in self.known_policies:
            return None
        self.learned_policies.append(chosen)
        return chosen

    def register_self(self, model: SelfModel) -> bool:
        """Append a self to the registry; the registry never forgets or rewrites."""
        if model.owner != self.id:
            raise PreconditionError(f"self of {model.owner!r} registered on {self.id!r}")
        if model.chain in self.selves:
            return False
        self.selves[model.chain] = model
        return True


def protosymbol_system(organism: Organism, task_universe: Iterable[VTask] | None = None) -> tuple[VTask, ...]:
    """Tasks of the universe for which the organism knows a correct policy."""
    universe = organism.task_universe() if task_universe is None else tuple(task_universe)
    known = [p.statement for p in organism.known_policies]
    if not known:
        return ()
    out = []
    for task in dict.fromkeys(universe):
        lang = task.language
        if any(task.input_extension & lang.extension_mask(s) == task.output_mask for s in known):
            out.append(task)
    return tuple(out)


def interpret(
    organism: Organism,
    input: Statement,
    task_universe: Iterable[VTask] | None = None,
    selector: Selector = canonical_first,
) -> tuple[Statement | None, bool, VTask | None]:
    """(output, meant_something, chosen_task) for one input.

    The input means something when it is an input of some protosymbol.  The
    preferred such task is chosen and the output is drawn from the
    completions of the input admitted by any of that task's correct
    policies.
    """
    if input.mask == 0:
        return None, False, None
    signified = [t for t in protosymbol_system(organism, task_universe) if input in t.input_set]
    if not signified:
        return None, False, None
    rank = PREFERENCES[organism.preference]
    signified.sort(key=VTask.sort_key)
    chosen = max(signified, key=rank)  # max keeps the first of equal ranks
    lang = chosen.language
    admitted = 0
    for p in policies(chosen):
        admitted |= lang.extension_mask(p.statement)
    options = lang.extension_mask(input) & admitted
    if not options:
        return None, True, chosen
    return selector(lang.statements(options)), True, chosen


def affects_statement(
    v: Statement,
    i: Statement,
    organism: Organism,
    task_universe: Iterable[VTask] | None = None,
) -> bool:
    """Would removing ``v`` from ``i`` change the organism's output?"""
    if v.mask == 0 or not v.issubset(i) or v == i:
        raise PreconditionError("v must be a nonempty proper part of i")
    universe = None if task_universe is None else tuple(task_universe)
    o, _, _ = interpret(organism, i, universe)
    g, _, _ = interpret(organism, i.difference(v), universe)
    return g != o


def classify_stage(organism: Organism, world=None) -> Stage:
    orders = {m.order for m in organism.selves.values()}
    top = max(orders, default=0)
    if top >= 3:
        return Stage.THIRD_ORDER_SELVES
    if top == 2:
        return Stage.SECOND_ORDER_SELVES
    if top == 1:
        return Stage.FIRST_ORDER_SELF
    if organism.learning:
        return Stage.LEARNING
    if organism.reflex_policies:
        return Stage.HARD_CODED
    return Stage.INERT


def format_statement(vocabulary: Vocabulary, statement: Statement | None) -> list[str] | None:
    if statement is None:
        return None
    return [vocabulary.names[i] for i in statement]


def stage_table(organisms: Sequence[Organism]) -> dict[str, str]:
    return {o.id: classify_stage(o).name for o in organisms}
