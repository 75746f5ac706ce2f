"""Brute-force reference implementations over plain frozensets.

Nothing here touches the package's bit-set machinery.  Statements are
frozensets of program indices, programs are frozensets of states, and every
quantity is recomputed from its set-builder definition.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Callable, Iterable, Sequence

Stmt = frozenset


def nonempty_subsets(items: Sequence, min_size: int = 1) -> Iterable[frozenset]:
    items = list(items)
    for r in range(min_size, len(items) + 1):
        for combo in itertools.combinations(items, r):
            yield frozenset(combo)


def canonical_key(s: frozenset) -> tuple:
    return tuple(sorted(s))


def derived_universe(programs: Sequence[frozenset], states: Iterable[int]) -> list[frozenset]:
    """Every nonempty program subset whose programs share at least one state."""
    everything = frozenset(states)
    out = []
    for s in nonempty_subsets(range(len(programs))):
        meet = set(everything)
        for i in s:
            meet &= programs[i]
        if meet:
            out.append(s)
    return sorted(out, key=canonical_key)


def ext(x: frozenset, universe: Sequence[frozenset]) -> frozenset:
    return frozenset(y for y in universe if x <= y)


def ext_set(xs: Iterable[frozenset], universe: Sequence[frozenset]) -> frozenset:
    out: set = set()
    for x in xs:
        out |= ext(x, universe)
    return frozenset(out)


def correct_policies(inputs, outputs, universe, policy_space=None) -> list[frozenset]:
    space = universe if policy_space is None else policy_space
    e_i = ext_set(inputs, universe)
    return sorted((p for p in space if e_i & ext(p, universe) == frozenset(outputs)), key=canonical_key)


def all_tasks(universe: Sequence[frozenset], derived: bool = True):
    """Every (I, O): I a nonempty (proper, if derived) subset, O a nonempty proper subset of E_I."""
    full = frozenset(universe)
    for inputs in nonempty_subsets(universe):
        if derived and inputs == full:
            continue
        e_i = sorted(ext_set(inputs, universe), key=canonical_key)
        for outputs in nonempty_subsets(e_i):
            if len(outputs) < len(e_i):
                yield inputs, outputs


def sample_efficiency(universe, score_a: Callable, score_b: Callable, policy_space=None) -> int:
    """Signed pairwise sum with l1 <_g l2 meaning l1 is correct for strictly fewer tasks."""
    space = list(universe if policy_space is None else policy_space)
    wins = {p: 0 for p in space}
    for inputs, outputs in all_tasks(universe):
        e_i = ext_set(inputs, universe)
        for p in space:
            if e_i & ext(p, universe) == outputs:
                wins[p] += 1
    total = 0
    for l1 in space:
        for l2 in space:
            if l1 == l2:
                continue
            g = int(wins[l1] < wins[l2])
            a = int(score_a(l1) < score_a(l2))
            b = int(score_b(l1) < score_b(l2))
            total += abs(g - a) - abs(g - b)
    return total


def parent_classes(universe, inputs, outputs, h, derived=True, restrict_to_child=False):
    """Parents of (I, O) grouped by O_omega; value says whether h is correct for some member.

    With ``restrict_to_child`` a parent must agree with the child on the
    child's completions (O_omega & E_{I_alpha} == O_alpha).
    """
    inputs, outputs = frozenset(inputs), frozenset(outputs)
    e_child = ext_set(inputs, universe)
    e_h = ext(h, universe)
    rest = [u for u in universe if u not in inputs]
    classes: dict[frozenset, bool] = {}
    for extra in nonempty_subsets(rest):
        parent_inputs = inputs | extra
        if derived and len(parent_inputs) == len(universe):
            continue
        e_parent = ext_set(parent_inputs, universe)
        free = sorted(e_parent - outputs, key=canonical_key)
        for k in range(len(free) + 1):
            for added in itertools.combinations(free, k):
                o_parent = outputs | frozenset(added)
                if o_parent == e_parent:
                    continue
                if restrict_to_child and o_parent & e_child != outputs:
                    continue
                ok = e_parent & e_h == o_parent
                classes[o_parent] = classes.get(o_parent, False) or ok
    return classes


def parent_rate(classes: dict) -> Fraction | None:
    if not classes:
        return None
    return Fraction(sum(classes.values()), len(classes))


def causal_candidates(interventions, observations, n_programs: int) -> list[frozenset]:
    """Powerset filter: nonempty c strictly inside every intervention, disjoint from every observation."""
    out = []
    for c in nonempty_subsets(range(n_programs)):
        if all(c < i for i in interventions) and all(not (c & o) for o in observations):
            out.append(c)
    return sorted(out, key=canonical_key)
