"""Scenario documents, built-in scenarios and the run driver.

Scenario documents extend the common document grammar with two sections::

    organisms:
      - id: bob
        vocabulary: [rain, coat, b_mark]   # default: every program
        reflex_policies: [[rain]]
        tasks: [{inputs: [[...]], outputs: [[...]], strict: false}]
        fitness: {inputs: [[...]], outputs: [[...]]}
        preference: indifferent            # or specific, general
        selector: canonical                # or seeded
        learning: true
        selective_memory: false
        memory_limit: 8
        incentives: {1: true, 2: false}    # per order of self
        selves: [[bob], {chain: [alice, bob], expect: [b_mark]}]
        models: [[larry]]                  # identities of others to build
        report_asymmetry: false
        report_preconditions: false
    scenario:
      schedule: [bob, alice]
      initial_state: dry
      max_steps: 8
      max_depth: 4
      script: [{step: 3, actor: bob, state: coerced, intent: [m1], receiver: alice}]
      rules: [{actor: bob, output_has: [coat], when_state: [dry], at_steps: [2], next: wet}]
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

from ..documents import (
    Document,
    DocumentError,
    expect,
    fail,
    parse_document,
    reject_unknown,
    sub_vocabulary,
)
from ..errors import EnactiveError, InvalidTaskError, UnknownScenarioError
from ..formalism import DEFAULT_CAPS, Caps, Statement, Vocabulary, derive_language
from ..tasks import Policy, VTask
from .organism import Organism, classify_stage
from .world import NATURE, Rule, ScriptedEvent, SelfDeclaration, SimulationWorld, run

BUILTIN_SCENARIOS = ("raincoat", "gricean", "predator_prey", "prop4")

ORGANISM_FIELDS = ("id", "vocabulary", "reflex_policies", "tasks", "fitness", "preference",
                   "selector", "learning", "selective_memory", "memory_limit", "incentives",
                   "selves", "models", "report_asymmetry", "report_preconditions")
SCENARIO_FIELDS = ("schedule", "initial_state", "max_steps", "max_depth", "script", "rules")


def builtin_text(name: str) -> str:
    if name not in BUILTIN_SCENARIOS:
        raise UnknownScenarioError(
            f"unknown scenario {name!r}; built-ins are {', '.join(BUILTIN_SCENARIOS)}")
    return resources.files("enactive.agents").joinpath("data", f"{name}.yaml").read_text("utf-8")


def _statement(vocab: Vocabulary, names, context, what: str) -> Statement:
    expect(names, list, what, context)
    if not names:
        raise fail(f"{what} is empty", context)
    for n in names:
        if n not in vocab.names:
            raise fail(f"{what} uses program {n!r} outside the organism's vocabulary", names)
    return vocab.statement(*names)


def _task(org_vocab, language, entry, what: str) -> VTask:
    expect(entry, dict, what)
    reject_unknown(entry, ("inputs", "outputs", "strict"), what)
    ins = [_statement(org_vocab, s, entry, f"{what} input") for s in expect(entry.get("inputs"), list, f"{what} inputs", entry)]
    outs = [_statement(org_vocab, s, entry, f"{what} output") for s in expect(entry.get("outputs"), list, f"{what} outputs", entry)]
    try:
        return VTask(language, tuple(ins), tuple(outs), bool(entry.get("strict", True)))
    except InvalidTaskError as exc:
        raise fail(f"{what}: {exc}", entry) from None


def _bool(entry: dict, key: str, default: bool = False) -> bool:
    value = entry.get(key, default)
    if not isinstance(value, bool):
        raise fail(f"{key} must be true or false", entry)
    return value


@dataclass
class ScenarioSpec:
    name: str
    document: Document
    world: SimulationWorld
    max_steps: int
    parameters: dict = field(default_factory=dict)


def _organism(doc: Document, entry) -> tuple[Organism, tuple[SelfDeclaration, ...], tuple, str, dict]:
    expect(entry, dict, "organism")
    reject_unknown(entry, ORGANISM_FIELDS, "organism")
    oid = entry.get("id")
    if not isinstance(oid, str) or not oid or oid == NATURE:
        raise fail("organism id must be a nonempty string other than 'nature'", entry)
    names = entry.get("vocabulary", list(doc.world.names))
    expect(names, list, f"vocabulary of {oid!r}", entry)
    try:
        vocab = sub_vocabulary(doc.world, names)
    except EnactiveError as exc:
        raise fail(f"organism {oid!r}: {exc}", names) from None
    language = derive_language(vocab)
    reflex = tuple(Policy(_statement(vocab, s, entry, f"reflex policy of {oid!r}"))
                   for s in expect(entry.get("reflex_policies", []), list, "reflex_policies", entry))
    declared = tuple(_task(vocab, language, t, f"task of {oid!r}")
                     for t in expect(entry.get("tasks", []), list, "tasks", entry))
    fitness = None
    if "fitness" in entry:
        fitness = _task(vocab, language, entry["fitness"], f"fitness of {oid!r}")
    incentives = {}
    for k, v in expect(entry.get("incentives", {}), dict, "incentives", entry).items():
        if not isinstance(k, int) or not isinstance(v, bool):
            raise fail("incentives map an order (integer) to true or false", entry["incentives"])
        incentives[k] = v
    selves = []
    for item in expect(entry.get("selves", []), list, "selves", entry):
        if isinstance(item, dict):
            reject_unknown(item, ("chain", "expect"), "self declaration")
            chain = tuple(expect(item.get("chain"), list, "chain", item))
            want = item.get("expect")
            selves.append(SelfDeclaration(chain, None if want is None else tuple(expect(want, list, "expect", item))))
        else:
            selves.append(SelfDeclaration(tuple(expect(item, list, "self chain", entry))))
    models = tuple(tuple(expect(m, list, "model chain", entry)) for m in expect(entry.get("models", []), list, "models", entry))
    flags = {k: _bool(entry, k) for k in ("report_asymmetry", "report_preconditions")}
    selector = entry.get("selector", "canonical")
    if selector not in ("canonical", "seeded"):
        raise fail("selector must be canonical or seeded", entry)
    try:
        org = Organism(
            id=oid, vocabulary=vocab, language=language, reflex_policies=reflex,
            fitness_task=fitness, declared_tasks=declared,
            preference=entry.get("preference", "indifferent"),
            learning=_bool(entry, "learning"), selective_memory=_bool(entry, "selective_memory"),
            memory_limit=entry.get("memory_limit"), incentives=incentives,
        )
    except EnactiveError as exc:
        raise fail(f"organism {oid!r}: {exc}", entry) from None
    return org, tuple(selves), models, selector, flags


def build_world(doc: Document, seed: int = 0) -> tuple[SimulationWorld, int]:
    """World and default step count from a parsed scenario document."""
    data = doc.data
    if doc.world is None:
        raise DocumentError("a scenario needs environment and programs sections")
    entries = expect(data.get("organisms", []), list, "organisms section", data)
    scen = expect(data.get("scenario", {}), dict, "scenario section", data)
    reject_unknown(scen, SCENARIO_FIELDS, "scenario")
    organisms: dict[str, Organism] = {}
    selves, models, selectors = {}, {}, {}
    asym, pre = set(), set()
    for entry in entries:
        org, decl, mods, selector, flags = _organism(doc, entry)
        if org.id in organisms:
            raise fail(f"duplicate organism id {org.id!r}", entry)
        organisms[org.id] = org
        selves[org.id], models[org.id], selectors[org.id] = decl, mods, selector
        if flags["report_asymmetry"]:
            asym.add(org.id)
        if flags["report_preconditions"]:
            pre.add(org.id)
    for oid, decls in selves.items():
        for d in decls:
            for who in d.chain:
                if who not in organisms:
                    raise fail(f"self chain of {oid!r} names unknown organism {who!r}", entries)
    schedule = tuple(expect(scen.get("schedule", list(organisms)), list, "schedule", scen))
    for who in schedule:
        if who not in organisms:
            raise fail(f"schedule names unknown organism {who!r}", scen.get("schedule", scen))
    initial = doc.state_index(scen.get("initial_state", 0), scen)
    script = []
    for ev in expect(scen.get("script", []), list, "script", scen):
        expect(ev, dict, "script event", scen)
        reject_unknown(ev, ("step", "actor", "state", "intent", "receiver"), "script event")
        actor = ev.get("actor", NATURE)
        if actor != NATURE and actor not in organisms:
            raise fail(f"script names unknown actor {actor!r}", ev)
        step_no = ev.get("step")
        if not isinstance(step_no, int) or step_no < 1:
            raise fail("script step must be a positive integer", ev)
        intent = ev.get("intent")
        receiver = ev.get("receiver")
        if (intent is None) != (receiver is None):
            raise fail("an utterance needs both intent and receiver", ev)
        if receiver is not None and receiver not in organisms:
            raise fail(f"unknown receiver {receiver!r}", ev)
        script.append(ScriptedEvent(step_no, actor, doc.state_index(ev.get("state"), ev),
                                    None if intent is None else tuple(intent), receiver))
    rules = []
    for r in expect(scen.get("rules", []), list, "rules", scen):
        expect(r, dict, "rule", scen)
        reject_unknown(r, ("actor", "output_has", "when_state", "at_steps", "next"), "rule")
        if r.get("actor") not in organisms:
            raise fail(f"rule names unknown actor {r.get('actor')!r}", r)
        rules.append(Rule(
            actor=r["actor"],
            next_state=doc.state_index(r.get("next"), r),
            output_has=None if "output_has" not in r else frozenset(expect(r["output_has"], list, "output_has", r)),
            when_state=None if "when_state" not in r else frozenset(doc.state_index(s, r) for s in r["when_state"]),
            at_steps=None if "at_steps" not in r else frozenset(r["at_steps"]),
        ))
    max_steps = scen.get("max_steps", 10)
    max_depth = scen.get("max_depth", 4)
    for key, value in (("max_steps", max_steps), ("max_depth", max_depth)):
        if not isinstance(value, int) or value < 0:
            raise fail(f"{key} must be a nonnegative integer", scen)
    world = SimulationWorld(
        environment=doc.environment, programs=doc.world, state_names=doc.state_names,
        organisms=organisms, schedule=schedule, state=initial, rng_seed=seed,
        script=tuple(script), rules=tuple(rules), declared_selves=selves,
        declared_models=models, selectors=selectors, report_asymmetry=frozenset(asym),
        report_preconditions=frozenset(pre), max_depth=max_depth,
    )
    return world, max_steps


def _apply_prop4(doc_text: str, parameters: dict) -> str:
    """prop4 grid variants: drop the learner's marker (scale) or its incentive."""
    unknown = set(parameters) - {"scale", "incentive"}
    if unknown:
        raise UnknownScenarioError(f"unknown prop4 parameter(s): {', '.join(sorted(unknown))}")
    scale = parameters.get("scale", True)
    incentive = parameters.get("incentive", True)
    if not scale:
        doc_text = doc_text.replace("vocabulary: [ground, push, l_mark]", "vocabulary: [ground, push]")
    if not incentive:
        doc_text = doc_text.replace("incentives: {1: true}", "incentives: {1: false}")
    return doc_text


def load_scenario(name_or_path: str, seed: int = 0, parameters: dict | None = None,
                  caps: Caps = DEFAULT_CAPS) -> ScenarioSpec:
    parameters = dict(parameters or {})
    if name_or_path in BUILTIN_SCENARIOS:
        text = builtin_text(name_or_path)
        if name_or_path == "prop4":
            text = _apply_prop4(text, parameters)
        elif parameters:
            raise UnknownScenarioError(f"scenario {name_or_path!r} takes no parameters")
        source = f"<builtin {name_or_path}>"
    elif name_or_path.endswith((".yaml", ".yml")):
        if parameters:
            raise UnknownScenarioError("parameters apply to built-in scenarios only")
        try:
            with open(name_or_path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise DocumentError(f"cannot read {name_or_path}: {exc.strerror}") from None
        source = name_or_path
    else:
        raise UnknownScenarioError(
            f"unknown scenario {name_or_path!r}; built-ins are {', '.join(BUILTIN_SCENARIOS)}")
    doc = parse_document(text, source, caps)
    world, max_steps = build_world(doc, seed)
    name = str(doc.data.get("name", name_or_path))
    return ScenarioSpec(name, doc, world, max_steps, parameters)


def _inventory(org: Organism) -> dict:
    def names(s: Statement | None):
        return None if s is None else [org.vocabulary.names[i] for i in s]

    selves = [{"chain": list(m.chain), "order": m.order, "identity": names(m.identity),
               "carrier": names(m.carrier)} for m in org.selves.values()]
    others = [{"chain": list(c), "identity": names(s)} for c, s in org.models.items()]
    return {"selves": selves, "models": others,
            "learned_policies": [names(p.statement) for p in org.learned_policies]}


def summarize(spec: ScenarioSpec) -> dict:
    world = spec.world
    summary = {
        "scenario": spec.name,
        "steps": world.clock,
        "final_state": world.state_names[world.state],
        "stages": {o.id: int(classify_stage(o)) for o in world.organisms.values()},
        "stage_names": {o.id: classify_stage(o).name for o in world.organisms.values()},
        "inventory": {o.id: _inventory(o) for o in world.organisms.values()},
        "history_lengths": {o.id: len(o.history) for o in world.organisms.values()},
        "meaning_transfers": sum(1 for r in world.trace if r["kind"] == "meaning_transferred"),
    }
    if spec.parameters or spec.name == "prop4":
        summary["parameters"] = {"scale": spec.parameters.get("scale", True),
                                 "incentive": spec.parameters.get("incentive", True)}
        checks = [r for r in world.trace if r["kind"] == "preconditions"]
        held = bool(checks) and all(r["scale"] and r["incentive"] for r in checks)
        learner = world.organisms["learner"]
        summary["preconditions_held_throughout"] = held
        summary["target_acquired"] = ("learner",) in learner.selves
    return summary


def run_scenario(name: str, seed: int = 0, max_steps: int | None = None,
                 parameters: dict | None = None, caps: Caps = DEFAULT_CAPS) -> tuple[list[str], dict]:
    """Run a scenario; return its trace lines and a summary with stages and identities."""
    spec = load_scenario(name, seed, parameters, caps)
    run(spec.world, spec.max_steps if max_steps is None else max_steps)
    return spec.world.trace_lines(), summarize(spec)

