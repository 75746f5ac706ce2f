"""Finite environments, programs, vocabularies, statements and languages.

Everything here is immutable once built.  Programs and statements are stored
as int bit sets: a program is a mask over state indices and a statement is a
mask over vocabulary (program) indices.  Extensions are masks over positions
in a language's universe, so set algebra on them is a single int operation.
"""

from __future__ import annotations

import functools
import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .bits import bits, is_subset, iter_bits, mask_of, popcount
from .errors import CapExceededError, IndexOutOfRangeError, InvalidStatementError

DEFAULT_MAX_STATES = 64
DEFAULT_MAX_PROGRAMS = 24
DEFAULT_STATEMENT_BUDGET = 1 << 20


@dataclass(frozen=True)
class Caps:
    """Hard limits guarding the exponential enumerations."""

    max_states: int = DEFAULT_MAX_STATES
    max_programs: int = DEFAULT_MAX_PROGRAMS
    statement_budget: int = DEFAULT_STATEMENT_BUDGET


DEFAULT_CAPS = Caps()


@dataclass(frozen=True)
class Environment:
    state_count: int
    caps: Caps = field(default=DEFAULT_CAPS, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.state_count < 1:
            raise InvalidStatementError(f"state_count must be >= 1, got {self.state_count}")
        if self.state_count > self.caps.max_states:
            raise CapExceededError(
                f"state_count {self.state_count} exceeds cap of {self.caps.max_states} states"
            )

    @property
    def all_states(self) -> int:
        return (1 << self.state_count) - 1

    def check_state(self, state: int) -> None:
        if not 0 <= state < self.state_count:
            raise IndexOutOfRangeError(
                f"state {state} outside 0..{self.state_count - 1}"
            )


@dataclass(frozen=True)
class Program:
    """A declarative program: the set of states at which it is true."""

    mask: int

    @classmethod
    def of(cls, states: Iterable[int]) -> "Program":
        return cls(mask_of(states))

    @property
    def states(self) -> frozenset[int]:
        return frozenset(iter_bits(self.mask))

    def __contains__(self, state: int) -> bool:
        return bool(self.mask >> state & 1)


@functools.total_ordering
@dataclass(frozen=True, eq=True)
class Statement:
    """A set of program indices into some vocabulary.

    Ordering is lexicographic on the sorted index tuple, which is the
    canonical order used for every set-valued result.
    """

    mask: int

    @classmethod
    def of(cls, indices: Iterable[int]) -> "Statement":
        return cls(mask_of(indices))

    @property
    def members(self) -> tuple[int, ...]:
        return bits(self.mask)

    def __len__(self) -> int:
        return popcount(self.mask)

    def __iter__(self) -> Iterator[int]:
        return iter_bits(self.mask)

    def __contains__(self, index: int) -> bool:
        return bool(self.mask >> index & 1)

    def __lt__(self, other: "Statement") -> bool:
        if not isinstance(other, Statement):
            return NotImplemented
        return self.members < other.members

    def issubset(self, other: "Statement") -> bool:
        return is_subset(self.mask, other.mask)

    def union(self, other: "Statement") -> "Statement":
        return Statement(self.mask | other.mask)

    def intersection(self, other: "Statement") -> "Statement":
        return Statement(self.mask & other.mask)

    def difference(self, other: "Statement") -> "Statement":
        return Statement(self.mask & ~other.mask)

    def __repr__(self) -> str:
        return f"Statement({list(self.members)})"


def canonical(statements: Iterable[Statement]) -> tuple[Statement, ...]:
    """Deduplicate and sort statements into canonical order."""
    return tuple(sorted(set(statements)))


@dataclass(frozen=True)
class Vocabulary:
    environment: Environment
    programs: tuple[Program, ...]
    names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        caps = self.environment.caps
        if not self.programs:
            raise InvalidStatementError("a vocabulary needs at least one program")
        if len(self.programs) > caps.max_programs:
            raise CapExceededError(
                f"vocabulary of {len(self.programs)} programs exceeds cap of {caps.max_programs}"
            )
        if len(set(self.programs)) != len(self.programs):
            raise InvalidStatementError("vocabulary programs must be distinct")
        for p in self.programs:
            if not is_subset(p.mask, self.environment.all_states):
                raise IndexOutOfRangeError(
                    f"program {sorted(p.states)} uses states outside 0..{self.environment.state_count - 1}"
                )
        if not self.names:
            object.__setattr__(self, "names", tuple(f"f{i + 1}" for i in range(len(self.programs))))
        if len(self.names) != len(self.programs) or len(set(self.names)) != len(self.names):
            raise InvalidStatementError("program names must be unique, one per program")

    @classmethod
    def from_states(
        cls,
        environment: Environment,
        programs: Sequence[Iterable[int]],
        names: Sequence[str] = (),
    ) -> "Vocabulary":
        return cls(environment, tuple(Program.of(p) for p in programs), tuple(names))

    def __len__(self) -> int:
        return len(self.programs)

    @functools.cached_property
    def _name_index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.names)}

    def index(self, name: str) -> int:
        try:
            return self._name_index[name]
        except KeyError:
            raise InvalidStatementError(f"unknown program {name!r}") from None

    def statement(self, *names: str) -> Statement:
        return Statement.of(self.index(n) for n in names)

    def intersection(self, statement: Statement) -> int:
        """States (as a mask) at which every program of ``statement`` is true."""
        states = self.environment.all_states
        for i in statement:
            states &= self.programs[i].mask
        return states

    def check(self, statement: Statement) -> None:
        if statement.mask == 0:
            raise InvalidStatementError("the empty statement is not admitted")
        if statement.mask >> len(self.programs):
            raise IndexOutOfRangeError(
                f"statement {list(statement.members)} uses program indices >= {len(self.programs)}"
            )

    def format(self, statement: Statement) -> str:
        return "{" + ",".join(self.names[i] for i in statement) + "}"


class Language:
    """A universe of admissible statements over a vocabulary.

    ``kind`` is ``"derived"`` when the universe is every nonempty subset of the
    vocabulary with a nonempty intersection, or ``"explicit"`` when the universe
    was supplied literally.  Explicit languages may also carry a separate
    policy space: the statements scanned as candidate policies.  A derived
    language's policy space is its universe.
    """

    __slots__ = ("vocabulary", "universe", "kind", "_policy_space", "_index", "_ext_cache", "_hash")

    def __init__(
        self,
        vocabulary: Vocabulary,
        universe: Iterable[Statement],
        kind: str,
        policy_space: Iterable[Statement] | None = None,
    ):
        if kind not in ("derived", "explicit"):
            raise InvalidStatementError(f"unknown language kind {kind!r}")
        stmts = list(universe)
        if len(set(stmts)) != len(stmts):
            raise InvalidStatementError("language universe contains duplicate statements")
        for s in stmts:
            vocabulary.check(s)
            if vocabulary.intersection(s) == 0:
                raise InvalidStatementError(
                    f"statement {vocabulary.format(s)} has an empty intersection"
                )
        self.vocabulary = vocabulary
        self.universe: tuple[Statement, ...] = tuple(sorted(stmts))
        self.kind = kind
        if policy_space is not None:
            space = canonical(policy_space)
            for s in space:
                vocabulary.check(s)
            self._policy_space: tuple[Statement, ...] | None = space
        else:
            self._policy_space = None
        self._index = {s: i for i, s in enumerate(self.universe)}
        self._ext_cache: dict[Statement, int] = {}
        self._hash: str | None = None

    @classmethod
    def _trusted(cls, vocabulary: Vocabulary, universe: tuple[Statement, ...], kind: str) -> "Language":
        # For universes already known to be unique, sorted and admissible.
        lang = cls.__new__(cls)
        lang.vocabulary = vocabulary
        lang.universe = universe
        lang.kind = kind
        lang._policy_space = None
        lang._index = {s: i for i, s in enumerate(universe)}
        lang._ext_cache = {}
        lang._hash = None
        return lang

    def __deepcopy__(self, memo) -> "Language":
        # Immutable: world snapshots share languages so tasks keep comparing equal.
        return self

    def __repr__(self) -> str:
        return f"Language(kind={self.kind!r}, size={len(self.universe)})"

    def __len__(self) -> int:
        return len(self.universe)

    @property
    def policy_space(self) -> tuple[Statement, ...]:
        return self.universe if self._policy_space is None else self._policy_space

    @property
    def full_mask(self) -> int:
        return (1 << len(self.universe)) - 1

    def __contains__(self, statement: Statement) -> bool:
        return statement in self._index

    def position(self, statement: Statement) -> int | None:
        return self._index.get(statement)

    def check(self, statement: Statement) -> None:
        self.vocabulary.check(statement)

    def extension_mask(self, statement: Statement) -> int:
        """Positions of every universe statement that completes ``statement``."""
        cached = self._ext_cache.get(statement)
        if cached is not None:
            return cached
        self.check(statement)
        x = statement.mask
        mask = 0
        for pos, y in enumerate(self.universe):
            if x & ~y.mask == 0:
                mask |= 1 << pos
        self._ext_cache[statement] = mask
        return mask

    def set_extension_mask(self, statements: Iterable[Statement]) -> int:
        mask = 0
        for s in statements:
            mask |= self.extension_mask(s)
        return mask

    def statements(self, mask: int) -> tuple[Statement, ...]:
        """Universe statements at the set positions of ``mask`` (canonical order)."""
        u = self.universe
        return tuple(u[i] for i in iter_bits(mask))

    def mask_of(self, statements: Iterable[Statement]) -> int:
        """Universe-position mask of statements; all must be universe members."""
        mask = 0
        for s in statements:
            pos = self._index.get(s)
            if pos is None:
                raise InvalidStatementError(
                    f"{self.vocabulary.format(s)} is not in the language universe"
                )
            mask |= 1 << pos
        return mask

    def format(self, statement: Statement) -> str:
        return self.vocabulary.format(statement)

    def content_hash(self) -> str:
        """Hex digest identifying the language by content across runs."""
        if self._hash is None:
            doc = {
                "state_count": self.vocabulary.environment.state_count,
                "programs": [sorted(p.states) for p in self.vocabulary.programs],
                "names": list(self.vocabulary.names),
                "kind": self.kind,
                "universe": [list(s.members) for s in self.universe],
                "policy_space": None
                if self._policy_space is None
                else [list(s.members) for s in self._policy_space],
            }
            blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
            self._hash = hashlib.sha256(blob).hexdigest()
        return self._hash


def derive_language(vocabulary: Vocabulary) -> Language:
    """Every nonempty subset of the vocabulary whose programs share a state.

    Enumerated by depth-first search over increasing program indices, which
    emits statements already in canonical (lexicographic) order and prunes
    every branch whose running intersection is empty.
    """
    programs = [p.mask for p in vocabulary.programs]
    n = len(programs)
    budget = vocabulary.environment.caps.statement_budget
    out: list[Statement] = []

    def visit(start: int, stmt: int, states: int) -> None:
        for i in range(start, n):
            meet = states & programs[i]
            if meet:
                s = stmt | (1 << i)
                out.append(Statement(s))
                if len(out) > budget:
                    raise CapExceededError(
                        f"language exceeds the statement budget of {budget}"
                    )
                visit(i + 1, s, meet)

    visit(0, 0, vocabulary.environment.all_states)
    return Language._trusted(vocabulary, tuple(out), "derived")


def explicit_language(
    vocabulary: Vocabulary,
    universe: Iterable[Statement],
    policy_space: Iterable[Statement] | None = None,
) -> Language:
    return Language(vocabulary, universe, "explicit", policy_space)


def is_true(statement: Statement, state: int, language: Language) -> bool:
    language.check(statement)
    language.vocabulary.environment.check_state(state)
    return bool(language.vocabulary.intersection(statement) >> state & 1)


def extension(statement: Statement, language: Language) -> tuple[Statement, ...]:
    return language.statements(language.extension_mask(statement))


def extension_of_set(statements: Iterable[Statement], language: Language) -> tuple[Statement, ...]:
    return language.statements(language.set_extension_mask(statements))


def equivalent(x: Statement, y: Statement, language: Language) -> bool:
    return language.extension_mask(x) == language.extension_mask(y)
