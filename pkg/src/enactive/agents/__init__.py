"""Organisms living in a shared, deterministic simulation."""

from .organism import (
    Organism,
    Stage,
    affects_statement,
    classify_stage,
    interpret,
    protosymbol_system,
)
from .scenarios import BUILTIN_SCENARIOS, build_world, load_scenario, run_scenario
from .world import NATURE, Rule, ScriptedEvent, SelfDeclaration, SimulationWorld, affects_organism, run, step

__all__ = [
    "BUILTIN_SCENARIOS",
    "NATURE",
    "Organism",
    "Rule",
    "ScriptedEvent",
    "SelfDeclaration",
    "SimulationWorld",
    "Stage",
    "affects_organism",
    "affects_statement",
    "build_world",
    "classify_stage",
    "interpret",
    "load_scenario",
    "protosymbol_system",
    "run",
    "run_scenario",
    "step",
]
