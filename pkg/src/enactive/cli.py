"""Command-line front door: validate, enumerate, learn, experiment, scenario, fixture.

Every command builds a report.  The report's hashed region (everything but
the wall-clock time) depends only on the configuration and input files, so
two runs with the same arguments produce the same ``payload_sha256``.

Exit codes: 0 success, 1 validation or assertion failure, 2 usage error,
3 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import random
import sys
import time
from fractions import Fraction
from importlib import resources
from typing import Callable, Sequence

from . import __version__
from .agents.scenarios import BUILTIN_SCENARIOS, build_world, run_scenario
from .documents import Document, Violation, budget_violation, fail, parse_document, read_document, where
from .errors import (
    BudgetError,
    DocumentError,
    EnactiveError,
    InvalidTaskError,
    PreconditionError,
    UnknownScenarioError,
)
from .formalism import Caps, Language, Statement
from .learning import (
    DESCRIPTION_LENGTH,
    WEAKNESS,
    generalization_probability,
    learn,
    monte_carlo_generalization,
    paired_difference,
    random_derived_language,
    sample_efficiency,
)
from .tasks import extension_size, policies

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3
PROXIES = {"weakness": WEAKNESS, "description_length": DESCRIPTION_LENGTH}
BUILTIN_DOCUMENTS = ("prop3", "five_statements", "random6")
FIXTURES = ("prop3",)


class Failure(Exception):
    """A command finished but its checks did not hold; carries the report."""

    def __init__(self, result: dict, code: int = EXIT_FAIL):
        self.result = result
        self.code = code


def builtin_document(name: str) -> str:
    return resources.files("enactive").joinpath("data", f"{name}.yaml").read_text("utf-8")


def load_input(path: str, caps: Caps) -> Document:
    if path in BUILTIN_DOCUMENTS:
        return parse_document(builtin_document(path), f"<builtin {path}>", caps)
    return read_document(path, caps)


def fmt(language: Language, statement: Statement) -> list[str]:
    return [language.vocabulary.names[i] for i in statement]


def fraction(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


# -- commands ----------------------------------------------------------------------------------


def cmd_validate(args, caps: Caps) -> tuple[dict, str | None]:
    violations: list[Violation] = []
    summary: dict = {}
    lang_hash = None
    try:
        doc = load_input(args.input, caps)
    except DocumentError as exc:
        violations.append(Violation("document", str(exc), exc.line, exc.column, kind="parse"))
        doc = None
    except BudgetError as exc:
        violations.append(budget_violation(exc))
        doc = None
    if doc is not None:
        violations.extend(doc.violations)
        if doc.environment is not None:
            summary["states"] = doc.environment.state_count
            summary["programs"] = len(doc.world)
        if doc.language is not None:
            summary["language_size"] = len(doc.language.universe)
            summary["language_kind"] = doc.language.kind
            lang_hash = doc.language.content_hash()
        summary["tasks"] = sorted(doc.tasks)
        if "organisms" in doc.data or "scenario" in doc.data:
            try:
                world, _ = build_world(doc)
                summary["organisms"] = list(world.organisms)
            except DocumentError as exc:
                violations.append(Violation("organisms", str(exc), exc.line, exc.column))
            except BudgetError as exc:
                violations.append(budget_violation(exc, "organisms"))
            except EnactiveError as exc:
                violations.append(Violation("organisms", str(exc), *where(doc.data.get("organisms"))))
    result = {"summary": summary, "violations": [v.to_dict() for v in violations],
              "violation_count": len(violations)}
    if violations:
        code = EXIT_BUDGET if any(v.kind == "cap_exceeded" for v in violations) else EXIT_FAIL
        raise Failure(result, code)
    return result, lang_hash


def _require_language(doc: Document) -> Language:
    if doc.language is None:
        raise fail("this command needs a language section", doc.data)
    if doc.violations:
        raise DocumentError("; ".join(f"{v.entity}: {v.message}" for v in doc.violations),
                            doc.violations[0].line, doc.violations[0].column)
    return doc.language


def cmd_enumerate(args, caps: Caps) -> tuple[dict, str | None]:
    doc = load_input(args.input, caps)
    lang = _require_language(doc)
    universe = [{"statement": fmt(lang, s), "extension_size": extension_size(s, lang)}
                for s in lang.universe]
    tasks = {}
    for name, task in doc.tasks.items():
        tasks[name] = {"correct_policies": [fmt(lang, p.statement) for p in policies(task)]}
    result = {"kind": lang.kind, "size": len(lang.universe), "universe": universe,
              "policy_space_size": len(lang.policy_space), "tasks": tasks}
    return result, lang.content_hash()


def cmd_learn(args, caps: Caps) -> tuple[dict, str | None]:
    doc = load_input(args.input, caps)
    lang = _require_language(doc)
    out = {}
    for name, task in doc.tasks.items():
        pis = policies(task)
        entry = {"correct_policies": [
            {"policy": fmt(lang, p.statement), "weakness": extension_size(p.statement, lang),
             "generalization_probability": fraction(generalization_probability(p, task))}
            for p in pis]}
        for pname, proxy in PROXIES.items():
            if not pis:
                entry[pname] = None
                continue
            chosen, maximal = learn(task, proxy)
            entry[pname] = {"chosen": fmt(lang, chosen.statement),
                            "maximal": [fmt(lang, p.statement) for p in maximal]}
        out[name] = entry
    return {"tasks": out}, lang.content_hash()


def _experiment_settings(doc: Document | None, args) -> dict:
    spec = {} if doc is None else dict(doc.data.get("experiment") or {})
    allowed = ("mode", "proxies", "trials", "parent_mode", "random_language")
    for key in spec:
        if key not in allowed:
            raise fail(f"unknown field {key!r} in experiment", doc.data.get("experiment"))
    settings = {
        "mode": args.mode or spec.get("mode", "monte_carlo"),
        "proxies": list(spec.get("proxies", ["weakness", "description_length"])),
        "trials": args.trials if args.trials is not None else spec.get("trials", 10_000),
        "parent_mode": args.parent_mode or spec.get("parent_mode", "uniform"),
        "random_language": spec.get("random_language"),
    }
    if args.programs is not None:
        settings["random_language"] = {"programs": args.programs}
    if settings["mode"] not in ("monte_carlo", "exhaustive", "both"):
        raise PreconditionError(f"unknown experiment mode {settings['mode']!r}")
    for p in settings["proxies"]:
        if p not in PROXIES:
            raise PreconditionError(f"unknown proxy {p!r}; expected one of {sorted(PROXIES)}")
    if not isinstance(settings["trials"], int) or settings["trials"] < 1:
        raise PreconditionError("trials must be a positive integer")
    return settings


def cmd_experiment(args, caps: Caps) -> tuple[dict, str | None]:
    doc = load_input(args.input, caps) if args.input else None
    settings = _experiment_settings(doc, args)
    if settings["random_language"] is not None:
        n = int(settings["random_language"].get("programs", 6))
        lang = random_derived_language(n, random.Random(f"language/{args.seed}"))
    elif doc is not None:
        lang = _require_language(doc)
    else:
        raise PreconditionError("give an input document or --programs for a random language")
    proxies = [PROXIES[p] for p in settings["proxies"]]
    result: dict = {"settings": settings, "universe_size": len(lang.universe),
                    "universe": [fmt(lang, s) for s in lang.universe], "checks": {}}
    compare = "weakness" in settings["proxies"] and "description_length" in settings["proxies"]
    if settings["mode"] in ("monte_carlo", "both"):
        reports = monte_carlo_generalization(lang, proxies, settings["trials"], args.seed,
                                             settings["parent_mode"])
        result["monte_carlo"] = [r.to_dict() | {"standard_error": round(r.standard_error, 6)}
                                 for r in reports]
        if compare:
            by = {r.proxy_name: r for r in reports}
            mean, se = paired_difference(by["weakness"], by["description_length"])
            result["monte_carlo_difference"] = {"mean": round(mean, 6), "standard_error": round(se, 6)}
            result["checks"]["weakness_rate_not_below_description_length"] = (
                by["weakness"].successes >= by["description_length"].successes)
            result["checks"]["weakness_within_two_standard_errors"] = not (mean < -2 * se)
    if settings["mode"] in ("exhaustive", "both"):
        value = sample_efficiency(proxies[0], proxies[1], lang) if len(proxies) > 1 else 0
        result["sample_efficiency"] = {"proxy_a": proxies[0].name,
                                       "proxy_b": proxies[1].name if len(proxies) > 1 else None,
                                       "value": value}
        if compare and proxies[0] is WEAKNESS:
            result["checks"]["weakness_sample_efficiency_nonpositive"] = value <= 0
    csv_rows = [
        {"proxy": r["proxy"], "trials": r["trials"], "successes": r["successes"],
         "rate": r["rate_decimal"], "seed": r["seed"], "language_hash": lang.content_hash()}
        for r in result.get("monte_carlo", [])
    ]
    result["_csv"] = csv_rows
    if not all(result["checks"].values()):
        raise Failure(result | {"language_hash": lang.content_hash()})
    return result, lang.content_hash()


def _scenario_checks(trace: list[dict], summary: dict) -> dict:
    checks = {}
    transfers = [r for r in trace if r["kind"] == "meaning_transferred"]
    if transfers or any(r["kind"] == "utterance" for r in trace):
        ok = True
        for r in transfers:
            seen = {(x["organism"], tuple(x["chain"])) for x in trace
                    if x["kind"] == "self_registered" and x["step"] <= r["step"]
                    and x["order"] == 2}
            ok &= (r["receiver"], (r["sender"], r["receiver"])) in seen
            ok &= (r["sender"], (r["receiver"], r["sender"])) in seen
        checks["meaning_transfer_gated_on_second_order_selves"] = ok
    if "target_acquired" in summary:
        checks["acquired_iff_preconditions_held"] = (
            summary["target_acquired"] == summary["preconditions_held_throughout"])
    return checks


def _parse_params(items: Sequence[str]) -> dict:
    params = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise UnknownScenarioError(f"parameter {item!r} must look like key=value")
        low = value.strip().lower()
        if low not in ("true", "false"):
            raise UnknownScenarioError(f"parameter {key!r} must be true or false")
        params[key.strip()] = low == "true"
    return params


def cmd_scenario(args, caps: Caps) -> tuple[dict, str | None]:
    params = _parse_params(args.param)
    lines, summary = run_scenario(args.input, args.seed, args.max_steps, params, caps)
    text = "".join(line + "\n" for line in lines)
    trace = [json.loads(line) for line in lines]
    result = {"summary": summary, "checks": _scenario_checks(trace, summary),
              "trace_sha256": hashlib.sha256(text.encode()).hexdigest(),
              "trace_events": len(lines), "_trace": text}
    digest = hashlib.sha256(summary["scenario"].encode() + text.encode()).hexdigest()
    if not all(result["checks"].values()):
        raise Failure(result)
    return result, digest


def cmd_fixture(args, caps: Caps) -> tuple[dict, str | None]:
    if args.name not in FIXTURES:
        raise UnknownScenarioError(f"unknown fixture {args.name!r}; expected one of {', '.join(FIXTURES)}")
    doc = load_input(args.input or args.name, caps)
    lang = _require_language(doc)
    spec = doc.data.get("fixture")
    if not isinstance(spec, dict):
        raise fail("the fixture document needs a fixture section", doc.data)
    task = doc.tasks.get(spec.get("task"))
    if task is None:
        raise fail(f"fixture names unknown task {spec.get('task')!r}", spec)
    vocab = lang.vocabulary

    def stmt(names) -> Statement:
        return vocab.statement(*names)

    def show(s: Statement) -> str:
        return vocab.format(s)

    checks = []

    def check(name: str, expected, actual) -> None:
        checks.append({"check": name, "expected": expected, "actual": actual,
                       "pass": expected == actual})

    found = sorted(p.statement for p in policies(task))
    check("correct policies", [show(stmt(p)) for p in sorted(spec["correct_policies"], key=lambda n: stmt(n))],
          [show(s) for s in found])
    for pname in ("weakness", "description_length"):
        if pname in spec:
            try:
                chosen = show(learn(task, PROXIES[pname])[0].statement)
            except EnactiveError as exc:
                chosen = f"error: {exc}"
            check(f"{pname} selects", show(stmt(spec[pname])), chosen)
    for item in spec.get("extension_sizes", []):
        s = stmt(item["policy"])
        check(f"|E_{show(s)}|", item["size"], extension_size(s, lang))
    failed = [c["check"] for c in checks if not c["pass"]]
    result = {"fixture": args.name, "checks": checks, "failed": failed,
              "verdict": "FAIL" if failed else "PASS"}
    if failed:
        raise Failure(result | {"language_hash": lang.content_hash()})
    return result, lang.content_hash()


# -- plumbing ------------------------------------------------------------------------------------


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def build_report(command: str, config: dict, result: dict, language_hash: str | None,
                 status: str, elapsed: float) -> dict:
    hashed = {"tool": "enactive", "version": __version__, "command": command,
              "config": config, "status": status, "language_hash": language_hash,
              "result": result}
    report = dict(hashed)
    report["payload_sha256"] = hashlib.sha256(_canonical(hashed).encode()).hexdigest()
    report["wall_clock_seconds"] = round(elapsed, 3)
    return report


def _csv_text(report: dict, rows: list[dict] | None) -> str:
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    else:
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["key", "value"])
        writer.writerow(["command", report["command"]])
        writer.writerow(["status", report["status"]])
        writer.writerow(["seed", report["config"]["seed"]])
        writer.writerow(["language_hash", report["language_hash"]])
        writer.writerow(["payload_sha256", report["payload_sha256"]])
        for key, value in sorted(report["result"].items()):
            writer.writerow([key, _canonical(value)])
    return buf.getvalue()


def _emit(report: dict, args, extras: dict) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(text)
        return
    os.makedirs(args.out, exist_ok=True)
    if args.format in ("json", "both"):
        with open(os.path.join(args.out, "report.json"), "w", encoding="utf-8") as fh:
            fh.write(text)
    if args.format in ("csv", "both"):
        with open(os.path.join(args.out, "report.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write(_csv_text(report, extras.get("_csv")))
    if extras.get("_trace") is not None:
        with open(os.path.join(args.out, "trace.jsonl"), "w", encoding="utf-8") as fh:
            fh.write(extras["_trace"])
    sys.stdout.write(f"{report['command']}: {report['status']} "
                     f"(payload {report['payload_sha256'][:16]}) -> {args.out}\n")


COMMANDS: dict[str, Callable] = {
    "validate": cmd_validate,
    "enumerate": cmd_enumerate,
    "learn": cmd_learn,
    "experiment": cmd_experiment,
    "scenario": cmd_scenario,
    "fixture": cmd_fixture,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="64-bit seed for every random choice")
    common.add_argument("--trials", type=int, default=None, help="Monte Carlo trials")
    common.add_argument("--out", default=None, help="directory for report.json/report.csv/trace.jsonl")
    common.add_argument("--format", choices=("csv", "json", "both"), default="json")
    common.add_argument("--max-states", type=int, default=None)
    common.add_argument("--max-programs", type=int, default=None)
    common.add_argument("--max-steps", type=int, default=None)

    parser = argparse.ArgumentParser(prog="enactive", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("validate", "enumerate", "learn"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("input", help="document path or built-in name")
    p = sub.add_parser("experiment", parents=[common])
    p.add_argument("input", nargs="?", help="document path or built-in name")
    p.add_argument("--mode", choices=("monte_carlo", "exhaustive", "both"))
    p.add_argument("--programs", type=int, help="use a random derived language of this many programs")
    p.add_argument("--parent-mode", choices=("uniform", "learnable"))
    p = sub.add_parser("scenario", parents=[common])
    p.add_argument("input", help=f"scenario file or one of {', '.join(BUILTIN_SCENARIOS)}")
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="built-in scenario parameter, e.g. scale=false")
    p = sub.add_parser("fixture", parents=[common])
    p.add_argument("name", help=f"one of {', '.join(FIXTURES)}")
    p.add_argument("--input", help="fixture document overriding the built-in one")
    return parser


def _config(args) -> dict:
    skip = {"command", "out", "format"}
    config = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    config["format"] = args.format
    return config


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    caps_kwargs = {}
    if args.max_states is not None:
        caps_kwargs["max_states"] = args.max_states
    if args.max_programs is not None:
        caps_kwargs["max_programs"] = args.max_programs
    caps = Caps(**caps_kwargs)
    if args.seed < 0 or args.seed >= 1 << 64:
        parser.error("--seed must fit in 64 unsigned bits")
    start = time.perf_counter()
    status, code, lang_hash = "pass", EXIT_OK, None
    try:
        result, lang_hash = COMMANDS[args.command](args, caps)
    except Failure as failure:
        result = dict(failure.result)
        lang_hash = result.pop("language_hash", None)
        status, code = "fail", failure.code
    except UnknownScenarioError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except BudgetError as exc:
        result, status, code = {"error": str(exc), "kind": "budget"}, "fail", EXIT_BUDGET
    except DocumentError as exc:
        result = {"error": str(exc), "line": exc.line, "column": exc.column, "kind": "document"}
        status, code = "fail", EXIT_FAIL
    except (EnactiveError, InvalidTaskError, PreconditionError) as exc:
        result, status, code = {"error": str(exc), "kind": type(exc).__name__}, "fail", EXIT_FAIL
    extras = {k: result.pop(k) for k in ("_csv", "_trace") if k in result}
    report = build_report(args.command, _config(args), result, lang_hash, status,
                          time.perf_counter() - start)
    _emit(report, args, extras)
    if status == "fail" and "error" in result:
        sys.stderr.write(f"error: {result['error']}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
