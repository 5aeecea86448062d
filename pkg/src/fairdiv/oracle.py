"""Deliberately naive reference computations used to audit the solvers.

Nothing here prunes: every assignment (or every way of distributing identical
cake slices) is visited.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .fairness import HOLDS, NotionResult, Verdict
from .measure import piece_value, utility
from .model import (
    ZERO,
    Allocation,
    IndivisibleGood,
    Instance,
    InstanceTooLargeError,
    Piece,
    normalize_allocation,
)
from .solvers import Objective, mnw_key

GUARD_BITS = 24


def _guard(count: int, bits: int = GUARD_BITS) -> None:
    if count > 2**bits:
        raise InstanceTooLargeError(f"{count} candidates exceed the 2^{bits} enumeration guard")


def _indivisible_only(inst: Instance) -> None:
    if inst.divisible:
        raise ValueError("this oracle handles indivisible-only instances")


@dataclass(frozen=True)
class OracleResult:
    utilities: dict[str, Fraction]
    assignments: tuple[tuple[str, ...], ...]


def _utilities(inst: Instance, combo: Sequence[str]) -> list[Fraction]:
    z = {a: ZERO for a in inst.agents}
    for g, a in zip(inst.indivisible, combo):
        z[a] += g.values[a]
    return [z[a] for a in inst.agents]


def brute_force_mnw_indivisible(inst: Instance) -> OracleResult:
    """All MNW-optimal assignments of an indivisible-only instance."""
    _indivisible_only(inst)
    _guard(inst.n ** len(inst.indivisible))
    best_key, best = None, []
    for combo in itertools.product(inst.agents, repeat=len(inst.indivisible)):
        key = mnw_key(_utilities(inst, combo))
        if best_key is None or key > best_key:
            best_key, best = key, [combo]
        elif key == best_key:
            best.append(combo)
    z = _utilities(inst, best[0])
    return OracleResult(dict(zip(inst.agents, z)), tuple(best))


def brute_force_pareto_check(inst: Instance, alloc: Allocation) -> NotionResult:
    """Exhaustive Pareto-dominance search over all assignments."""
    _indivisible_only(inst)
    _guard(inst.n ** len(inst.indivisible))
    alloc = normalize_allocation(inst, alloc)
    z = [utility(inst, a, alloc[a]) for a in inst.agents]
    for combo in itertools.product(inst.agents, repeat=len(inst.indivisible)):
        w = _utilities(inst, combo)
        if all(x >= y for x, y in zip(w, z)) and any(x > y for x, y in zip(w, z)):
            return NotionResult(Verdict.FAILS)
    return HOLDS


@dataclass(frozen=True)
class DiscretizedInstance:
    """A divisible good cut into ``slices`` equal slices, each treated as indivisible.

    ``instance`` is indivisible-only. Slices worth nothing to every agent are
    dropped, so slice values still add up to each agent's value of the good.
    """

    source: Instance
    slices: int
    instance: Instance


def discretize(inst: Instance, slices: int) -> DiscretizedInstance:
    if slices < 1:
        raise ValueError("slices must be positive")
    goods = list(inst.indivisible)
    for c in inst.divisible:
        for k in range(slices):
            piece = Piece.of(c.id, [(Fraction(k, slices), Fraction(k + 1, slices))])
            values = {a: piece_value(inst, a, piece) for a in inst.agents}
            if any(values.values()):
                goods.append(IndivisibleGood(f"{c.id}#{k}", values))
    return DiscretizedInstance(inst, slices, Instance(inst.agents, tuple(goods), ()))


def _compositions(total: int, slots: int):
    if slots == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, slots - 1):
            yield (first,) + rest


def discretized_solve(inst: Instance, objective: Objective | str, slices: int, guard_bits: int = GUARD_BITS):
    """Best utility vector of the discretized instance under ``objective``.

    Slices with identical values are interchangeable, so each group of them is
    enumerated by how many copies every agent gets, and groups are combined
    through the set of reachable utility vectors. A slice handed to an agent
    who values it at zero changes no utility, so only valuers are considered.
    ``phi`` objectives range over utilitarian optimal assignments only, like
    Φ-fairness itself.
    """
    if isinstance(objective, str):
        objective = Objective.parse(objective)
    reachable = discretized_utilities(inst, slices, uo=objective.kind == "phi", guard_bits=guard_bits)
    best_key, best = None, None
    for z in sorted(reachable):
        key = objective.key(z)
        if best_key is None or key > best_key:
            best_key, best = key, z
    return dict(zip(inst.agents, best))


def discretized_utilities(inst: Instance, slices: int, uo: bool = False, guard_bits: int = GUARD_BITS) -> set[tuple]:
    """Every utility vector reachable by assigning whole slices (and goods)."""
    disc = discretize(inst, slices).instance
    groups: dict[tuple, int] = {}
    for g in disc.indivisible:
        vec = tuple(g.values[a] for a in inst.agents)
        groups[vec] = groups.get(vec, 0) + 1
    reachable = {tuple([ZERO] * inst.n)}
    for vec, size in groups.items():
        top = max(vec)
        allowed = [i for i in range(inst.n) if vec[i] > 0 and (not uo or vec[i] == top)]
        contribs = []
        for comp in _compositions(size, len(allowed)):
            z = [ZERO] * inst.n
            for i, cnt in zip(allowed, comp):
                z[i] = vec[i] * cnt
            contribs.append(z)
        _guard(len(reachable) * len(contribs), guard_bits)
        reachable = {tuple(x + y for x, y in zip(z, c)) for z in reachable for c in contribs}
    return reachable
