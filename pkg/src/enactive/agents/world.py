"""Deterministic multi-organism simulation.

One step runs as follows:

1. Scripted nature events for the step set the environment state.
2. Each organism, in schedule order, perceives the current state,
   interprets it and emits an output.  Its scripted actions for the step
   fire, or else the first transition rule matching its output does.
   Either way the new state is logged as an event by that organism.
3. Organisms that can learn take one weakness step over their history.
4. Declared selves and models of others are constructed from the event
   history and registered once found.

Every step appends JSON-ready records to ``trace``.
"""

from __future__ import annotations

import copy
import json
import random
from dataclasses import dataclass, field
from typing import Iterable

from ..bits import submasks
from ..causality import check_preconditions, nested_identity, nth_order_self
from ..errors import EnactiveError, PreconditionError, ScenarioError, UnknownOrganismError
from ..formalism import Environment, Statement, Vocabulary
from ..learning import trial_rng
from ..tasks import Selector, canonical_first, seeded_selector
from .organism import Organism, affects_statement, classify_stage, format_statement, interpret

NATURE = "nature"


@dataclass(frozen=True)
class Rule:
    """Move to ``next_state`` when ``actor`` outputs a statement containing ``output_has``."""

    actor: str
    next_state: int
    output_has: frozenset[str] | None = None
    when_state: frozenset[int] | None = None
    at_steps: frozenset[int] | None = None

    def matches(self, actor: str, output_names: frozenset[str] | None, state: int, step: int) -> bool:
        if actor != self.actor:
            return False
        if self.at_steps is not None and step not in self.at_steps:
            return False
        if self.when_state is not None and state not in self.when_state:
            return False
        if self.output_has is not None:
            return output_names is not None and self.output_has <= output_names
        return True


@dataclass(frozen=True)
class ScriptedEvent:
    step: int
    actor: str
    state: int
    intent: tuple[str, ...] | None = None
    receiver: str | None = None


@dataclass(frozen=True)
class SelfDeclaration:
    chain: tuple[str, ...]
    expect: tuple[str, ...] | None = None


@dataclass
class SimulationWorld:
    environment: Environment
    programs: Vocabulary
    state_names: tuple[str, ...]
    organisms: dict[str, Organism]
    schedule: tuple[str, ...]
    state: int
    rng_seed: int = 0
    script: tuple[ScriptedEvent, ...] = ()
    rules: tuple[Rule, ...] = ()
    declared_selves: dict[str, tuple[SelfDeclaration, ...]] = field(default_factory=dict)
    declared_models: dict[str, tuple[tuple[str, ...], ...]] = field(default_factory=dict)
    selectors: dict[str, str] = field(default_factory=dict)
    report_asymmetry: frozenset[str] = frozenset()
    report_preconditions: frozenset[str] = frozenset()
    max_depth: int = 4
    clock: int = 0
    events: list[tuple[int, str, int]] = field(default_factory=list)
    trace: list[dict] = field(default_factory=list)
    last_inputs: dict[str, Statement | None] = field(default_factory=dict)
    last_actors: tuple[str, ...] = ()
    snapshot: "SimulationWorld | None" = field(default=None, repr=False)
    _rngs: dict[str, random.Random] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        for who in self.schedule:
            if who not in self.organisms:
                raise ScenarioError(f"schedule names unknown organism {who!r}")
        if not self.events:
            self.events.append((0, NATURE, self.state))
            self._log({"step": 0, "kind": "event", "actor": NATURE, "state": self.state_names[self.state]})
        for n, who in enumerate(self.schedule):
            if self.selectors.get(who, "canonical") == "seeded":
                self._rngs[who] = trial_rng(self.rng_seed, n)

    # -- queries used by self construction -------------------------------------------------

    def organism(self, organism_id: str) -> Organism:
        try:
            return self.organisms[organism_id]
        except KeyError:
            raise UnknownOrganismError(f"unknown organism {organism_id!r}") from None

    def perceived_events(self, organism_id: str) -> list[tuple[str, Statement]]:
        org = self.organism(organism_id)
        return [(actor, org.perceive(state)) for _, actor, state in self.events]

    def names(self, organism: Organism, statement: Statement | None) -> list[str] | None:
        return format_statement(organism.vocabulary, statement)

    def _selector(self, organism_id: str) -> Selector:
        rng = self._rngs.get(organism_id)
        return canonical_first if rng is None else seeded_selector(rng)

    def _log(self, record: dict) -> None:
        self.trace.append(record)

    def _snapshot(self) -> "SimulationWorld":
        trace, snap = self.trace, self.snapshot
        self.trace, self.snapshot = [], None
        try:
            return copy.deepcopy(self)
        finally:
            self.trace, self.snapshot = trace, snap

    def trace_lines(self) -> list[str]:
        return [json.dumps(r, sort_keys=True, separators=(",", ":")) for r in self.trace]


def _set_state(world: SimulationWorld, step: int, actor: str, state: int, extra: dict | None = None) -> None:
    world.state = state
    world.events.append((step, actor, state))
    record = {"step": step, "kind": "event", "actor": actor, "state": world.state_names[state]}
    if extra:
        record.update(extra)
    world._log(record)


def step(world: SimulationWorld, suppress: Iterable[str] = (), record: bool = True) -> SimulationWorld:
    """Advance the world by one step in place and return it.

    Actions of organisms in ``suppress`` are withheld; with ``record`` false
    no selves are registered and no affect is computed (used for replays).
    """
    suppress = frozenset(suppress)
    if record:
        world.snapshot = world._snapshot()
    t = world.clock + 1
    for ev in world.script:
        if ev.step == t and ev.actor == NATURE:
            _set_state(world, t, NATURE, ev.state)
    acted: list[str] = []
    utterances: list[tuple[ScriptedEvent, int]] = []
    world.last_inputs = {}
    for who in world.schedule:
        org = world.organisms[who]
        perceived = org.perceive(world.state)
        inp = perceived if perceived.mask else None
        try:
            if inp is None:
                output, meant, chosen = None, False, None
            else:
                output, meant, chosen = interpret(org, inp, None, world._selector(who))
        except EnactiveError as exc:
            raise ScenarioError(str(exc), t, who) from exc
        world.last_inputs[who] = inp
        dropped = org.remember((inp, output))
        new_state = None
        if who not in suppress:
            for ev in world.script:
                if ev.step == t and ev.actor == who:
                    new_state = ev.state
                    if ev.intent is not None:
                        utterances.append((ev, len(world.events)))
            if new_state is None:
                out_names = None if output is None else frozenset(world.names(org, output))
                for rule in world.rules:
                    if rule.matches(who, out_names, world.state, t):
                        new_state = rule.next_state
                        break
        world._log({
            "step": t, "kind": "turn", "organism": who,
            "input": world.names(org, inp), "meant": meant,
            "chosen_task": None if chosen is None else chosen.describe(),
            "output": world.names(org, output), "acted": new_state is not None,
        })
        for pair in dropped:
            world._log({"step": t, "kind": "memory_drop", "organism": who,
                        "input": world.names(org, pair[0]), "output": world.names(org, pair[1])})
        if new_state is not None:
            acted.append(who)
            _set_state(world, t, who, new_state)
    for who in world.schedule:
        org = world.organisms[who]
        learned = org.learn_from_history()
        if learned is not None:
            world._log({"step": t, "kind": "learned", "organism": who,
                        "policy": world.names(org, learned.statement)})
    world.clock = t
    world.last_actors = tuple(acted)
    if record:
        _register(world, t)
        _report_asymmetry(world, t, acted)
        for ev, index in utterances:
            _report_utterance(world, t, ev, index)
        for actor in acted:
            subjects = [s for s in world.schedule if s != actor and affects_organism(
                world.organisms[actor], world.organisms[s], world)]
            world._log({"step": t, "kind": "affect", "actor": actor, "subjects": subjects})
    return world


def _register(world: SimulationWorld, t: int) -> None:
    for who in world.schedule:
        org = world.organisms[who]
        for decl in world.declared_selves.get(who, ()):
            if decl.expect is not None:
                scale, incentive = check_preconditions(
                    decl.expect, org, org.incentive_for(len(decl.chain) // 2 + 1))
                if who in world.report_preconditions:
                    world._log({"step": t, "kind": "preconditions", "organism": who,
                                "chain": list(decl.chain), "scale": scale, "incentive": incentive})
                if not scale:
                    continue
            if decl.chain in org.selves or not org.learning:
                continue
            model = nth_order_self(org, decl.chain, world, world.max_depth)
            if model is not None and org.register_self(model):
                world._log({"step": t, "kind": "self_registered", "organism": who,
                            "chain": list(model.chain), "order": model.order,
                            "identity": world.names(org, model.identity),
                            "carrier": world.names(org, model.carrier),
                            "stage": classify_stage(org).name})
        for chain in world.declared_models.get(who, ()):
            if chain in org.models:
                continue
            built = nested_identity(org, chain, world, world.max_depth)
            if built is not None:
                org.models[chain] = built[0]
                world._log({"step": t, "kind": "model_registered", "organism": who,
                            "chain": list(chain), "identity": world.names(org, built[0])})


def _report_asymmetry(world: SimulationWorld, t: int, acted: list[str]) -> None:
    """Contrast interpreting one's own intervention with the bare observation under it."""
    for who in acted:
        if who not in world.report_asymmetry:
            continue
        org = world.organisms[who]
        own = org.selves.get((who,))
        if own is None:
            continue
        state = next(state for _, actor, state in reversed(world.events) if actor == who)
        intervention = org.perceive(state)
        observation = intervention.difference(own.identity)
        int_out, int_meant, _ = interpret(org, intervention)
        obs_out, obs_meant, _ = interpret(org, observation) if observation.mask else (None, False, None)
        world._log({"step": t, "kind": "asymmetry", "organism": who,
                    "intervention": world.names(org, intervention),
                    "observation": world.names(org, observation),
                    "intervention_output": world.names(org, int_out),
                    "observation_output": world.names(org, obs_out),
                    "differs": int_out != obs_out})


def _tautologies(org: Organism) -> int:
    full = org.vocabulary.environment.all_states
    return sum(1 << i for i, p in enumerate(org.vocabulary.programs) if p.mask == full)


def _report_utterance(world: SimulationWorld, t: int, ev: ScriptedEvent, index: int) -> None:
    """Decode a scripted utterance at its receiver and log whether the intent got across.

    The receiver strips from what it perceived the sender's identity as it
    models it (the carrier of its 2nd order self) and every program true
    everywhere.  Transfer needs both 2nd order selves and an exact match.
    """
    sender, receiver = world.organism(ev.actor), world.organism(ev.receiver)
    recv_self = receiver.selves.get((sender.id, receiver.id))
    send_self = sender.selves.get((receiver.id, sender.id))
    gated = recv_self is not None and send_self is not None
    perceived = receiver.perceive(world.events[index][2])
    decoded = None
    if recv_self is not None:
        strip = recv_self.identity.mask | (recv_self.carrier.mask if recv_self.carrier else 0)
        decoded = Statement(perceived.mask & ~strip & ~_tautologies(receiver))
    declared = sorted(ev.intent)
    decoded_names = world.names(receiver, decoded)
    transferred = gated and decoded_names is not None and sorted(decoded_names) == declared
    world._log({"step": t, "kind": "utterance", "sender": sender.id, "receiver": receiver.id,
                "declared": list(ev.intent), "perceived": world.names(receiver, perceived),
                "decoded": decoded_names, "selves_ready": gated, "transferred": transferred})
    if transferred:
        world._log({"step": t, "kind": "meaning_transferred", "sender": sender.id,
                    "receiver": receiver.id, "meaning": decoded_names})


def affects_organism(actor: Organism, subject: Organism, world: SimulationWorld) -> bool:
    """Did the actor's last output change the subject's input in a way that matters to it?

    The step is replayed from its snapshot with the actor's output withheld;
    programs the subject perceived only in the actual run are the ones the
    actor is responsible for.
    """
    if world.snapshot is None or actor.id not in world.last_actors:
        raise PreconditionError(f"{actor.id!r} did not act in the last step")
    actual = world.last_inputs.get(subject.id)
    if actual is None:
        return False
    replay = copy.deepcopy(world.snapshot)
    step(replay, suppress={actor.id}, record=False)
    counter = replay.last_inputs.get(subject.id)
    caused = actual.mask & ~(counter.mask if counter is not None else 0)
    before = world.snapshot.organisms[subject.id]  # the subject as it interpreted
    for v in submasks(caused):
        if v and v != actual.mask and affects_statement(Statement(v), actual, before):
            return True
    return False


def run(world: SimulationWorld, max_steps: int) -> SimulationWorld:
    if max_steps < 0:
        raise PreconditionError("max_steps must be >= 0")
    for _ in range(max_steps):
        step(world)
    return world
