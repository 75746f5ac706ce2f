"""YAML input documents: parsing with source locations and entity building.

A document has up to seven top-level sections::

    environment:  {states: [s0, s1, ...]}       # or {states: 4}
    programs:     {name: [state, ...], ...}     # state names or indices
    language:     {vocabulary: [...], universe: [[...], ...], policies: [[...], ...]}
    tasks:        [{name, inputs: [[...]], outputs: [[...]], strict: true}]
    organisms:    [...]                         # read by the agents package
    scenario:     {...}                         # read by the agents package
    experiment:   {...}                         # read by the command line

Mappings and sequences keep their 1-based line and column so that problems
can be reported against the place they were written.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import yaml

from .errors import BudgetError, DocumentError, EnactiveError, InvalidTaskError
from .formalism import (
    DEFAULT_CAPS,
    Caps,
    Environment,
    Language,
    Statement,
    Vocabulary,
    derive_language,
    explicit_language,
)
from .tasks import VTask

SECTIONS = ("name", "description", "environment", "programs", "language", "tasks",
            "organisms", "scenario", "experiment", "fixture")


class LocDict(dict):
    line: int | None = None
    column: int | None = None


class LocList(list):
    line: int | None = None
    column: int | None = None


class _Loader(yaml.SafeLoader):
    pass


def _mark(obj, node) -> Any:
    obj.line = node.start_mark.line + 1
    obj.column = node.start_mark.column + 1
    return obj


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    out = _mark(LocDict(), node)
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        if key in out:
            raise DocumentError(f"duplicate key {key!r}", key_node.start_mark.line + 1,
                                key_node.start_mark.column + 1)
        out[key] = loader.construct_object(value_node, deep=True)
    return out


def _construct_sequence(loader, node):
    return _mark(LocList(loader.construct_object(n, deep=True) for n in node.value), node)


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _construct_sequence)


def load_yaml(text: str) -> Any:
    try:
        return yaml.load(text, Loader=_Loader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark else None
        col = mark.column + 1 if mark else None
        raise DocumentError(f"cannot parse document: {exc.problem or exc}", line, col) from None
    except yaml.YAMLError as exc:
        raise DocumentError(f"cannot parse document: {exc}") from None


def where(obj) -> tuple[int | None, int | None]:
    return getattr(obj, "line", None), getattr(obj, "column", None)


def fail(message: str, obj=None) -> DocumentError:
    return DocumentError(message, *where(obj))


def expect(obj, kind: type, what: str, parent=None):
    if not isinstance(obj, kind):
        label = {dict: "a mapping", list: "a list", str: "a string", int: "an integer",
                 bool: "true or false"}.get(kind, kind.__name__)
        raise fail(f"{what} must be {label}", obj if hasattr(obj, "line") else parent)
    return obj


def reject_unknown(mapping: dict, allowed: tuple[str, ...], what: str) -> None:
    for key in mapping:
        if key not in allowed:
            raise fail(f"unknown field {key!r} in {what}", mapping)


@dataclass
class Violation:
    entity: str
    message: str
    line: int | None = None
    column: int | None = None
    kind: str = "invariant"

    def to_dict(self) -> dict:
        return {"entity": self.entity, "kind": self.kind, "message": self.message,
                "line": self.line, "column": self.column}


@dataclass
class Document:
    data: dict
    source: str
    caps: Caps
    environment: Environment | None = None
    state_names: tuple[str, ...] = ()
    world: Vocabulary | None = None
    language: Language | None = None
    tasks: dict[str, VTask] = field(default_factory=dict)
    violations: list[Violation] = field(default_factory=list)

    def state_index(self, ref, context=None) -> int:
        if isinstance(ref, bool):
            raise fail(f"state reference {ref!r} must be a name or index", context)
        if isinstance(ref, int):
            if not 0 <= ref < len(self.state_names):
                raise fail(f"state {ref} outside 0..{len(self.state_names) - 1}", context)
            return ref
        try:
            return self.state_names.index(str(ref))
        except ValueError:
            raise fail(f"unknown state {ref!r}", context) from None


def _names_statement(vocab: Vocabulary, names, context, what: str) -> Statement:
    expect(names, list, what, context)
    if not names:
        raise fail(f"{what} is empty", names if hasattr(names, "line") else context)
    for n in names:
        if n not in vocab.names:
            raise fail(f"{what} uses unknown program {n!r}", names)
    return vocab.statement(*names)


def sub_vocabulary(world: Vocabulary, names) -> Vocabulary:
    """The vocabulary made of the named world programs, in world order."""
    names = list(names)
    missing = [n for n in names if n not in world.names]
    if missing:
        raise DocumentError(f"unknown program(s) {', '.join(map(repr, missing))}")
    keep = [i for i, n in enumerate(world.names) if n in set(names)]
    return Vocabulary(world.environment, tuple(world.programs[i] for i in keep),
                      tuple(world.names[i] for i in keep))


def _build_environment(doc: Document) -> None:
    env = expect(doc.data.get("environment"), dict, "environment section", doc.data)
    reject_unknown(env, ("states",), "environment")
    states = env.get("states")
    if isinstance(states, int) and not isinstance(states, bool):
        names = tuple(f"s{i}" for i in range(states))
    else:
        expect(states, list, "environment.states", env)
        names = tuple(str(s) for s in states)
        if len(set(names)) != len(names):
            raise fail("state names must be unique", states)
    doc.state_names = names
    doc.environment = Environment(len(names), doc.caps)


def _build_programs(doc: Document) -> None:
    progs = expect(doc.data.get("programs"), dict, "programs section", doc.data)
    names, members = [], []
    for name, states in progs.items():
        expect(states, list, f"program {name!r}", progs)
        names.append(str(name))
        members.append(sorted({doc.state_index(s, states) for s in states}))
    try:
        doc.world = Vocabulary.from_states(doc.environment, members, names)
    except BudgetError as exc:
        exc.line, exc.column = where(progs)
        raise


def _build_language(doc: Document) -> None:
    spec = doc.data.get("language")
    if spec is None:
        return
    expect(spec, dict, "language section", doc.data)
    reject_unknown(spec, ("vocabulary", "universe", "policies"), "language")
    vocab = doc.world
    if "vocabulary" in spec:
        expect(spec["vocabulary"], list, "language.vocabulary", spec)
        try:
            vocab = sub_vocabulary(doc.world, spec["vocabulary"])
        except DocumentError as exc:
            raise fail(str(exc), spec["vocabulary"]) from None
    if "universe" not in spec:
        if "policies" in spec:
            raise fail("a policy space is only meaningful with a listed universe", spec)
        doc.language = derive_language(vocab)
        return
    universe = [_names_statement(vocab, s, spec["universe"], "universe statement")
                for s in expect(spec["universe"], list, "language.universe", spec)]
    policies = None
    if "policies" in spec:
        policies = [_names_statement(vocab, s, spec["policies"], "policy statement")
                    for s in expect(spec["policies"], list, "language.policies", spec)]
    try:
        doc.language = explicit_language(vocab, universe, policies)
    except EnactiveError as exc:
        raise fail(str(exc), spec["universe"]) from None


def _build_tasks(doc: Document) -> None:
    tasks = doc.data.get("tasks")
    if tasks is None:
        return
    expect(tasks, list, "tasks section", doc.data)
    if doc.language is None:
        raise fail("tasks need a language section", tasks)
    vocab = doc.language.vocabulary
    for n, entry in enumerate(tasks):
        expect(entry, dict, "task", tasks)
        reject_unknown(entry, ("name", "inputs", "outputs", "strict"), "task")
        name = str(entry.get("name", f"task{n + 1}"))
        if name in doc.tasks:
            raise fail(f"duplicate task name {name!r}", entry)
        inputs = [_names_statement(vocab, s, entry, f"task {name!r} input")
                  for s in expect(entry.get("inputs"), list, f"task {name!r} inputs", entry)]
        outputs = [_names_statement(vocab, s, entry, f"task {name!r} output")
                   for s in expect(entry.get("outputs"), list, f"task {name!r} outputs", entry)]
        strict = entry.get("strict", True)
        try:
            doc.tasks[name] = VTask(doc.language, tuple(inputs), tuple(outputs), bool(strict))
        except InvalidTaskError as exc:
            for v in exc.violations:
                doc.violations.append(Violation(f"task {name}", v, *where(entry)))


def parse_document(text: str, source: str = "<string>", caps: Caps = DEFAULT_CAPS) -> Document:
    """Parse and build a document.

    Structural problems raise :class:`DocumentError`; cap overruns raise
    :class:`BudgetError`; invalid tasks are collected as violations.
    """
    data = load_yaml(text)
    if not isinstance(data, dict):
        raise DocumentError("a document must be a mapping of sections", 1, 1)
    for key in data:
        if key not in SECTIONS:
            raise fail(f"unknown section {key!r}", data)
    doc = Document(data, source, caps)
    if "environment" in data or "programs" in data:
        _build_environment(doc)
        _build_programs(doc)
        _build_language(doc)
        _build_tasks(doc)
    return doc


def read_document(path: str, caps: Caps = DEFAULT_CAPS) -> Document:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc.strerror}") from None
    return parse_document(text, path, caps)


def budget_violation(exc: BudgetError, entity: str = "document") -> Violation:
    return Violation(entity, str(exc), *where(exc), kind="cap_exceeded")
