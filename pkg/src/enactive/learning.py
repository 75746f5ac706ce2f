"""Proxies, weak-policy learning, generalisation probability and experiments.

The exhaustive and Monte-Carlo machinery works on universe-position masks
(see :mod:`enactive.formalism`).  A :class:`TaskSpace` enumerates every input
set of a small language once, so both the ``<_g`` oracle and the task sampler
reuse the same table of input extensions.
"""

from __future__ import annotations

import bisect
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

from .bits import iter_bits, popcount, submasks
from .errors import (
    BudgetError,
    NoCorrectPolicyError,
    PreconditionError,
    SamplingExhaustedError,
)
from .formalism import Environment, Language, Statement, Vocabulary, derive_language
from .tasks import Policy, VTask, is_correct, policies

MASK64 = (1 << 64) - 1
DEFAULT_ENUMERATION_BITS = 16


@dataclass(frozen=True)
class Proxy:
    """A preference over statements; higher scores are preferred."""

    name: str
    score: Callable[[Statement, Language], int] = field(compare=False)
    kind: str = "custom"

    def prefers(self, l1: Statement, l2: Statement, language: Language) -> bool:
        """The 0/1 relation ``l1 < l2`` used in the sample-efficiency sum."""
        return self.score(l1, language) < self.score(l2, language)


def _weakness(statement: Statement, language: Language) -> int:
    return popcount(language.extension_mask(statement))


def _description_length(statement: Statement, language: Language) -> int:
    return -len(statement)


WEAKNESS = Proxy("weakness", _weakness, "weakness")
DESCRIPTION_LENGTH = Proxy("description_length", _description_length, "description_length")


def learn(task: VTask, proxy: Proxy) -> tuple[Policy, tuple[Policy, ...]]:
    """Pick the proxy-maximal correct policy; ties go to the canonical first."""
    candidates = policies(task)
    if not candidates:
        raise NoCorrectPolicyError(f"task {task.describe()} has no correct policy")
    scores = [proxy.score(p.statement, task.language) for p in candidates]
    best = max(scores)
    maximal = tuple(p for p, s in zip(candidates, scores) if s == best)
    return maximal[0], maximal


def generalization_probability(h: Policy, alpha: VTask) -> Fraction:
    """Closed form 2^|~E_I & E_h| / 2^|~E_I| for h correct on alpha."""
    if not is_correct(h, alpha):
        raise PreconditionError(
            f"{alpha.language.format(h.statement)} is not a correct policy for {alpha.describe()}"
        )
    lang = alpha.language
    outside = lang.full_mask & ~alpha.input_extension
    overlap = popcount(outside & lang.extension_mask(h.statement))
    return Fraction(2**overlap, 2 ** popcount(outside))


def necessity_check(h: Policy, omega: VTask) -> bool:
    """False whenever h is too specific to cover O_omega; else whether h is correct."""
    if popcount(omega.language.extension_mask(h.statement)) < len(omega.correct_outputs):
        return False
    return is_correct(h, omega)


class TaskSpace:
    """Exhaustive table of input sets over a small language.

    Input sets are masks over universe positions; ``input_ext[I]`` is E_I.
    For derived languages the full universe is excluded as an input set.
    The policy candidates are the language's policy space.
    """

    def __init__(self, language: Language, max_bits: int = DEFAULT_ENUMERATION_BITS):
        n = len(language.universe)
        if n > max_bits:
            raise BudgetError(
                f"task enumeration over {n} statements exceeds the limit of {max_bits}"
            )
        self.language = language
        self.size = n
        self.full = (1 << n) - 1
        self.statement_ext = [language.extension_mask(s) for s in language.universe]
        self.policy_statements = language.policy_space
        self.policy_ext = [language.extension_mask(s) for s in self.policy_statements]
        table = np.zeros(1, dtype=np.uint64)
        for e in self.statement_ext:
            table = np.concatenate([table, table | np.uint64(e)])
        self.input_ext = table
        valid = np.ones(1 << n, dtype=bool)
        valid[0] = False
        if language.kind == "derived":
            valid[self.full] = False
        self.valid_inputs = valid
        self._outputs_cache: dict[int, tuple[int, ...]] = {}

    def iter_inputs(self) -> Iterator[int]:
        return (int(i) for i in np.flatnonzero(self.valid_inputs))

    def learnable_outputs(self, inputs: int) -> tuple[int, ...]:
        """Distinct valid O = E_I & E_pi over the policy candidates, sorted."""
        cached = self._outputs_cache.get(inputs)
        if cached is None:
            e_i = int(self.input_ext[inputs])
            found = {e_i & e for e in self.policy_ext}
            found.discard(0)
            found.discard(e_i)
            cached = tuple(sorted(found))
            self._outputs_cache[inputs] = cached
        return cached

    def generalization_counts(self) -> list[int]:
        """For each policy candidate, how many tasks it is correct for."""
        e_i = self.input_ext[self.valid_inputs]
        counts = []
        for e in self.policy_ext:
            o = e_i & np.uint64(e)
            counts.append(int(np.count_nonzero((o != 0) & (o != e_i))))
        return counts

    def learnable_weights(self) -> np.ndarray:
        """Number of learnable (nonempty-Pi) tasks per input set."""
        e_i = self.input_ext
        outs = e_i[:, None] & np.asarray(self.policy_ext, dtype=np.uint64)[None, :]
        outs[(outs == e_i[:, None])] = 0
        outs.sort(axis=1)
        distinct = (outs[:, 1:] != outs[:, :-1]).sum(axis=1) + (outs[:, 0] != 0)
        distinct[~self.valid_inputs] = 0
        return distinct.astype(np.int64)

    def uniform_weights(self) -> list[int]:
        """Number of valid tasks per input set: 2^|E_I| - 2 nonempty strict subsets."""
        sizes = np.bitwise_count(self.input_ext)
        return [
            (1 << int(k)) - 2 if ok and k >= 2 else 0
            for k, ok in zip(sizes, self.valid_inputs)
        ]


def iter_tasks(space: TaskSpace) -> Iterator[tuple[int, int]]:
    """Every valid (I, O) mask pair with O a nonempty strict subset of E_I."""
    for i in space.iter_inputs():
        e_i = int(space.input_ext[i])
        for o in submasks(e_i):
            if o and o != e_i:
                yield i, o


def sample_efficiency(
    proxy_a: Proxy,
    proxy_b: Proxy,
    language: Language,
    policy_universe: Sequence[Policy] | None = None,
    max_bits: int = DEFAULT_ENUMERATION_BITS,
) -> int:
    """The signed sample-efficiency sum; negative means ``proxy_a`` is better.

    ``l1 <_g l2`` is decided exactly: under the uniform distribution over all
    tasks, l1 generalises less often iff it is correct for fewer tasks.
    """
    space = TaskSpace(language, max_bits)
    counts = dict(zip(space.policy_statements, space.generalization_counts()))
    pols = list(policy_universe) if policy_universe is not None else [
        Policy(s) for s in language.policy_space
    ]
    missing = [p for p in pols if p.statement not in counts]
    if missing:
        # Statements outside the policy space: count them directly.
        e_i = space.input_ext[space.valid_inputs]
        for p in missing:
            o = e_i & np.uint64(language.extension_mask(p.statement))
            counts[p.statement] = int(np.count_nonzero((o != 0) & (o != e_i)))
    sa = {p: proxy_a.score(p.statement, language) for p in pols}
    sb = {p: proxy_b.score(p.statement, language) for p in pols}
    total = 0
    for p1 in pols:
        for p2 in pols:
            if p1 == p2:
                continue
            g = counts[p1.statement] < counts[p2.statement]
            a = sa[p1] < sa[p2]
            b = sb[p1] < sb[p2]
            total += abs(g - a) - abs(g - b)
    return total


@dataclass(frozen=True)
class GeneralizationReport:
    proxy_name: str
    trials: int
    successes: int
    seed: int
    parameters: dict = field(compare=False)
    ties: int = 0
    necessity_violations: int = 0
    outcomes: tuple[bool, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self) -> None:
        if not 0 <= self.successes <= self.trials:
            raise PreconditionError("successes must lie in 0..trials")

    @property
    def rate(self) -> Fraction:
        return Fraction(self.successes, self.trials)

    @property
    def standard_error(self) -> float:
        p = self.successes / self.trials
        return math.sqrt(p * (1 - p) / self.trials)

    def to_dict(self) -> dict:
        return {
            "proxy": self.proxy_name,
            "trials": self.trials,
            "successes": self.successes,
            "rate": f"{self.rate.numerator}/{self.rate.denominator}",
            "rate_decimal": round(float(self.rate), 6),
            "seed": self.seed,
            "ties": self.ties,
            "necessity_violations": self.necessity_violations,
            "parameters": self.parameters,
        }


def trial_rng(seed: int, trial: int) -> random.Random:
    """Independent stream per (seed, trial) so results ignore scheduling."""
    return random.Random((seed & MASK64) << 64 | trial)


class TaskSampler:
    """Draws parent tasks and their learnable children over a TaskSpace.

    ``parent_mode="learnable"`` draws a parent uniformly among tasks that have
    at least one correct policy; ``"uniform"`` draws uniformly over all tasks.
    Children are always uniform among valid children with a correct policy;
    parents without any such child are redrawn.
    """

    def __init__(self, space: TaskSpace, parent_mode: str = "uniform"):
        if parent_mode not in ("learnable", "uniform"):
            raise PreconditionError(f"unknown parent mode {parent_mode!r}")
        self.space = space
        self.parent_mode = parent_mode
        if parent_mode == "learnable":
            weights = [int(w) for w in space.learnable_weights()]
        else:
            weights = space.uniform_weights()
        cum = []
        acc = 0
        for w in weights:
            acc += w
            cum.append(acc)
        if acc == 0:
            raise SamplingExhaustedError("the language admits no valid parent task")
        self._cum = cum
        self._total = acc
        self._max_outputs = max(1, len(space.policy_ext))

    def sample_parent(self, rng: random.Random) -> tuple[int, int]:
        i = bisect.bisect_right(self._cum, rng.randrange(self._total))
        e_i = int(self.space.input_ext[i])
        if self.parent_mode == "learnable":
            outs = self.space.learnable_outputs(i)
            return i, outs[rng.randrange(len(outs))]
        while True:
            o = rng.getrandbits(self.space.size) & e_i
            if o and o != e_i:
                return i, o

    def _child_options(self, i_child: int, o_parent: int) -> list[int]:
        return [o for o in self.space.learnable_outputs(i_child) if o & ~o_parent == 0]

    def sample_child(self, rng: random.Random, parent: tuple[int, int]) -> tuple[int, int] | None:
        i_w, o_w = parent
        if popcount(i_w) < 2:
            return None
        members = list(iter_bits(i_w))
        k = len(members)
        cap = self._max_outputs
        for _ in range(64 * cap):
            pick = rng.getrandbits(k)
            if pick == 0 or pick == (1 << k) - 1:
                continue
            i_a = 0
            for j in range(k):
                if pick >> j & 1:
                    i_a |= 1 << members[j]
            options = self._child_options(i_a, o_w)
            if options and rng.randrange(cap) < len(options):
                return i_a, options[rng.randrange(len(options))]
        # Rejection stalled: enumerate the children exactly.
        pairs = [
            (i_a, o)
            for i_a in submasks(i_w)
            if i_a and i_a != i_w
            for o in self._child_options(i_a, o_w)
        ]
        if not pairs:
            return None
        return pairs[rng.randrange(len(pairs))]

    def sample_pair(self, rng: random.Random, max_redraws: int = 10_000) -> tuple[tuple[int, int], tuple[int, int]]:
        for _ in range(max_redraws):
            parent = self.sample_parent(rng)
            child = self.sample_child(rng, parent)
            if child is not None:
                return parent, child
        raise SamplingExhaustedError("no parent task with a learnable child was found")


def monte_carlo_generalization(
    language: Language,
    proxies: Sequence[Proxy],
    trials: int,
    seed: int,
    parent_mode: str = "uniform",
    max_bits: int = DEFAULT_ENUMERATION_BITS,
) -> list[GeneralizationReport]:
    """Learn a sampled child task with each proxy and test it on the parent."""
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    space = TaskSpace(language, max_bits)
    sampler = TaskSampler(space, parent_mode)
    pol_ext = space.policy_ext
    pol_weak = [popcount(e) for e in pol_ext]
    scores = [[p.score(s, language) for s in space.policy_statements] for p in proxies]
    outcomes = [[] for _ in proxies]
    ties = [0] * len(proxies)
    violations = [0] * len(proxies)
    for t in range(trials):
        rng = trial_rng(seed, t)
        (i_w, o_w), (i_a, o_a) = sampler.sample_pair(rng)
        e_a = int(space.input_ext[i_a])
        e_w = int(space.input_ext[i_w])
        correct = [k for k, e in enumerate(pol_ext) if e_a & e == o_a]
        o_w_size = popcount(o_w)
        for j, sc in enumerate(scores):
            best = max(sc[k] for k in correct)
            maximal = [k for k in correct if sc[k] == best]
            chosen = maximal[0]
            ties[j] += len(maximal) > 1
            ok = e_w & pol_ext[chosen] == o_w
            if ok and pol_weak[chosen] < o_w_size:
                violations[j] += 1
            outcomes[j].append(ok)
    params = {
        "language_hash": language.content_hash(),
        "universe_size": len(language.universe),
        "parent_mode": parent_mode,
        "child_rule": "uniform over children with a correct policy",
    }
    return [
        GeneralizationReport(
            proxy_name=p.name,
            trials=trials,
            successes=sum(outcomes[j]),
            seed=seed,
            parameters=params,
            ties=ties[j],
            necessity_violations=violations[j],
            outcomes=tuple(outcomes[j]),
        )
        for j, p in enumerate(proxies)
    ]


def paired_difference(a: GeneralizationReport, b: GeneralizationReport) -> tuple[float, float]:
    """Mean and standard error of per-trial success differences (a minus b)."""
    if a.trials != b.trials or len(a.outcomes) != a.trials or len(b.outcomes) != b.trials:
        raise PreconditionError("reports must come from the same run")
    d = np.asarray(a.outcomes, dtype=float) - np.asarray(b.outcomes, dtype=float)
    mean = float(d.mean())
    se = float(d.std(ddof=1) / math.sqrt(len(d))) if len(d) > 1 else 0.0
    return mean, se


def random_derived_language(
    n_programs: int,
    rng: random.Random,
    state_count: int | None = None,
    density: float = 0.3,
    max_universe: int = DEFAULT_ENUMERATION_BITS,
    min_universe: int | None = None,
    max_tries: int = 10_000,
) -> Language:
    """A derived language over random distinct programs, small enough to enumerate."""
    states = state_count if state_count is not None else n_programs + 1
    low = n_programs + 1 if min_universe is None else min_universe
    env = Environment(states)
    for _ in range(max_tries):
        progs = set()
        while len(progs) < n_programs:
            m = 0
            for s in range(states):
                if rng.random() < density:
                    m |= 1 << s
            if m:
                progs.add(m)
        masks = sorted(progs)
        vocab = Vocabulary.from_states(env, [list(iter_bits(m)) for m in masks])
        lang = derive_language(vocab)
        if low <= len(lang.universe) <= max_universe:
            return lang
    raise SamplingExhaustedError(
        f"no vocabulary of {n_programs} programs gave a universe of {low}..{max_universe} statements"
    )
