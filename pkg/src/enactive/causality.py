"""Interventions, causal identities, ascribed intent and orders of self.

Statements here are program masks in some organism's vocabulary.  An
intervention record may contain empty statements: an event the constructing
organism cannot perceive at all still counts, and forces the intersection
over interventions to be empty.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

from .bits import popcount, submasks
from .errors import (
    CapExceededError,
    DepthExceededError,
    DuplicateSelfError,
    InvalidStatementError,
    PreconditionError,
)
from .formalism import Language, Statement, canonical

DEFAULT_MAX_DEPTH = 4


def is_cause(intervention: Statement, observation: Statement) -> bool:
    """An intervention can only have caused an observation it strictly contains."""
    return observation.mask & ~intervention.mask == 0 and observation != intervention


@dataclass(frozen=True)
class InterventionRecord:
    language: Language = field(repr=False, compare=False)
    interventions: tuple[Statement, ...]
    observations: tuple[Statement, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "interventions", canonical(self.interventions))
        object.__setattr__(self, "observations", canonical(self.observations))
        width = len(self.language.vocabulary)
        for s in (*self.interventions, *self.observations):
            if s.mask >> width:
                raise InvalidStatementError(
                    f"event {list(s.members)} uses programs outside the vocabulary"
                )
        shared = set(self.interventions) & set(self.observations)
        if shared:
            raise InvalidStatementError(
                "events recorded as both intervention and observation: "
                + ", ".join(self.language.format(s) for s in sorted(shared))
            )

    def distinguishing_programs(self) -> int:
        """Programs common to every intervention and absent from every observation."""
        common = (1 << len(self.language.vocabulary)) - 1
        for s in self.interventions:
            common &= s.mask
        for s in self.observations:
            common &= ~s.mask
        return common


def _is_identity(c: int, record: InterventionRecord) -> bool:
    return bool(c) and all(c & ~i.mask == 0 and c != i.mask for i in record.interventions) and all(
        c & o.mask == 0 for o in record.observations
    )


def causal_identities(record: InterventionRecord) -> tuple[Statement, ...]:
    """Every causal identity for the record; empty when the agency is unknowable."""
    if not record.interventions:
        raise PreconditionError("a causal identity needs at least one intervention")
    pool = record.distinguishing_programs()
    budget = record.language.vocabulary.environment.caps.statement_budget
    if (1 << popcount(pool)) > budget:
        raise CapExceededError(
            f"{popcount(pool)} distinguishing programs exceed the statement budget"
        )
    found = [Statement(c) for c in submasks(pool) if _is_identity(c, record)]
    return tuple(sorted(found))


def canonical_causal_identity(record: InterventionRecord) -> Statement | None:
    """The largest candidate: every distinguishing program, if that is admissible.

    The largest statement has the smallest extension, so it classifies the
    most specific task of all the candidates.
    """
    if not record.interventions:
        return None
    pool = record.distinguishing_programs()
    return Statement(pool) if _is_identity(pool, record) else None


def ascribe_intent(record: InterventionRecord) -> Statement | None:
    """The intent behind a set of interventions is their causal identity."""
    return canonical_causal_identity(record)


@dataclass(frozen=True)
class CausalIdentity:
    statement: Statement
    source: InterventionRecord = field(repr=False)

    def __post_init__(self) -> None:
        if not _is_identity(self.statement.mask, self.source):
            raise PreconditionError(
                f"{self.source.language.format(self.statement)} is not a causal identity for the record"
            )


def chain_order(chain: Sequence[str]) -> int:
    """Number of reflections encoded by a chain: [a] -> 1, [b,a] -> 2, [b,a,b,a] -> 3."""
    return len(chain) // 2 + 1


def check_chain(owner: str, chain: Sequence[str]) -> None:
    if not chain:
        raise PreconditionError("a chain needs at least one organism")
    if chain[-1] != owner:
        raise PreconditionError(f"a self chain must end with its owner {owner!r}")
    if len(chain) != 1 and len(chain) % 2:
        raise PreconditionError(f"chain {list(chain)} has odd length")
    for pos, who in enumerate(reversed(chain)):
        if (pos % 2 == 0) != (who == owner):
            raise PreconditionError(
                f"chain {list(chain)} must alternate between {owner!r} and another organism"
            )


@dataclass(frozen=True)
class SelfModel:
    owner: str
    chain: tuple[str, ...]
    identity: Statement
    carrier: Statement | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "chain", tuple(self.chain))
        check_chain(self.owner, self.chain)
        if self.identity.mask == 0:
            raise PreconditionError("a self needs a nonempty identity")
        if self.carrier is not None and not self.identity.issubset(self.carrier):
            raise PreconditionError("a nested self must lie within the model it refines")

    @property
    def order(self) -> int:
        return chain_order(self.chain)

    def notation(self) -> str:
        return f"c^{''.join(self.chain)}_{self.owner}"


def check_preconditions(
    candidate: Statement | Iterable[str],
    organism,
    fitness_requires: bool,
) -> tuple[bool, bool]:
    """(scale, incentive) for constructing ``candidate``.

    ``candidate`` is a statement in the organism's vocabulary or a collection
    of program names; a name outside the vocabulary fails the scale test.
    Incentive is whatever the caller's scenario declares.
    """
    lang: Language = organism.language
    if isinstance(candidate, Statement):
        stmt = candidate
    else:
        names = list(candidate)
        known = lang.vocabulary.names
        if not names or any(n not in known for n in names):
            return False, bool(fitness_requires)
        stmt = lang.vocabulary.statement(*names)
    if stmt.mask == 0 or stmt.mask >> len(lang.vocabulary):
        scale = False
    elif lang.kind == "derived":
        scale = lang.vocabulary.intersection(stmt) != 0
    else:
        scale = stmt in lang
    return scale, bool(fitness_requires)


def first_order_self(
    organism,
    all_interventions: Iterable[Statement],
    all_observations: Iterable[Statement],
) -> SelfModel | None:
    """The organism's 1ST order self over every intervention it could make."""
    record = InterventionRecord(organism.language, tuple(all_interventions), tuple(all_observations))
    c = canonical_causal_identity(record)
    if c is None:
        return None
    model = SelfModel(organism.id, (organism.id,), c)
    existing = organism.selves.get((organism.id,))
    if existing is not None and existing.identity != c:
        raise DuplicateSelfError(
            f"{organism.id!r} already has the 1ST order self "
            f"{organism.language.format(existing.identity)}"
        )
    return model


class World(Protocol):
    """What self construction needs from a simulation world."""

    def organism(self, organism_id: str): ...

    def perceived_events(self, organism_id: str) -> list[tuple[str, Statement]]: ...


def _level_record(
    events: Sequence[tuple[str, Statement]],
    target: str,
    perceiver: str,
    language: Language,
) -> InterventionRecord | None:
    """Record for one level, or None when the target is unknowable there.

    An aspect seen both when the target acted and when someone else did
    cannot separate the two, so no identity exists at this level.
    """
    ints = [s for actor, s in events if actor == target]
    obs = [s for actor, s in events if actor not in (target, perceiver)]
    if not ints or set(ints) & set(obs):
        return None
    return InterventionRecord(language, tuple(ints), tuple(obs))


def nested_identity(
    modeler,
    chain: Sequence[str],
    world: World,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> tuple[Statement, Statement | None] | None:
    """Identity of c^{chain}_{modeler} and the carrier it refines, by nested simulation.

    Level j models ``chain[j]`` as seen by the organism simulated at level
    j-1 (the modeler itself at the first level).  A simulated organism is
    known to the modeler only through the identity built at the previous
    level, so each level refines its carrier:

        level_j = carrier & (AND of target events) & ~(OR of other events)

    where "other events" excludes those of the simulated perceiver.  Every
    level must stay a proper part of each of its interventions and be
    expressible in the modeler's language; levels that close a self (the
    prefix ends with the modeler) must also be incentivised.
    """
    chain = tuple(chain)
    if not chain:
        raise PreconditionError("a chain needs at least one organism")
    if len(chain) > max_depth:
        raise DepthExceededError(f"chain of depth {len(chain)} exceeds the limit of {max_depth}")
    for who in chain:
        world.organism(who)  # raises UnknownOrganismError
    lang: Language = modeler.language
    events = world.perceived_events(modeler.id)
    carrier = (1 << len(lang.vocabulary)) - 1
    previous: Statement | None = None
    for j, target in enumerate(chain):
        perceiver = modeler.id if j == 0 else chain[j - 1]
        record = _level_record(events, target, perceiver, lang)
        if record is None:
            return None
        refined = carrier & record.distinguishing_programs()
        if not _is_identity(refined, record):
            return None
        scale, _ = check_preconditions(Statement(refined), modeler, True)
        if not scale:
            return None
        prefix = chain[: j + 1]
        if prefix[-1] == modeler.id and (len(prefix) == 1 or len(prefix) % 2 == 0):
            if not modeler.incentive_for(chain_order(prefix)):
                return None
        previous = Statement(carrier) if j else None
        carrier = refined
    return Statement(carrier), previous


def nth_order_self(
    modeler,
    chain: Sequence[str],
    world: World,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> SelfModel | None:
    """The modeler's self for a chain ending with itself, or None."""
    chain = tuple(chain)
    if len(chain) > max_depth:
        raise DepthExceededError(f"chain of depth {len(chain)} exceeds the limit of {max_depth}")
    for who in chain:
        world.organism(who)
    check_chain(modeler.id, chain)
    built = nested_identity(modeler, chain, world, max_depth)
    if built is None:
        return None
    identity, carrier = built
    return SelfModel(modeler.id, chain, identity, carrier)


def union_of_selves(a: SelfModel, b: SelfModel, interventions: Iterable[Statement]) -> Statement:
    """Union of two same-order selves, admitted only if it stays inside every intervention."""
    if a.owner != b.owner or a.order != b.order:
        raise PreconditionError("only selves of the same owner and order can be united")
    u = a.identity.union(b.identity)
    for i in interventions:
        if not (u.issubset(i) and u != i):
            raise PreconditionError("the united self is not a proper part of every intervention")
    return u

