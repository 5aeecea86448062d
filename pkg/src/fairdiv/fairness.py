"""Envy-based fairness and efficiency checks for mixed-goods allocations.

Every checker takes a ``slack`` that is added to the left-hand side of each
inequality, so ``slack=0`` gives the exact notion. Failures carry a
:class:`Witness` naming the first violating pair ``(i, j)`` in agent order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .measure import cell_rates, piece_value
from .model import (
    FORMAT,
    ZERO,
    Allocation,
    Instance,
    classify_instance,
    format_rational,
    normalize_allocation,
)


class Verdict(str, Enum):
    HOLDS = "holds"
    FAILS = "fails"
    NOT_APPLICABLE = "not-applicable"


@dataclass(frozen=True)
class Witness:
    """Agent ``i`` with utility ``own`` (plus slack) falls short of ``required``.

    ``required`` is ``u_i(A_j)``, or ``u_i(A_j \\ {good})`` when ``good`` is set.
    For "remove some good" notions ``good`` is the removal that helps ``i``
    most, so every other choice fails too.
    """

    i: str
    j: str
    own: Fraction
    required: Fraction
    good: str | None = None

    def to_dict(self) -> dict:
        d = {"i": self.i, "j": self.j, "own": format_rational(self.own), "required": format_rational(self.required)}
        if self.good is not None:
            d["good"] = self.good
        return d


@dataclass(frozen=True)
class NotionResult:
    verdict: Verdict
    witness: Witness | None = None

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS

    @property
    def fails(self) -> bool:
        return self.verdict is Verdict.FAILS

    def to_dict(self) -> dict:
        d: dict = {"verdict": self.verdict.value}
        if self.witness is not None:
            d["witness"] = self.witness.to_dict()
        return d


HOLDS = NotionResult(Verdict.HOLDS)
NOT_APPLICABLE = NotionResult(Verdict.NOT_APPLICABLE)


class _Table:
    """Cached ``u_i`` of every bundle, bundle part and good."""

    def __init__(self, inst: Instance, alloc: Allocation, normalize: bool = True):
        self.inst = inst
        self.alloc = normalize_allocation(inst, alloc) if normalize else alloc
        self.agents = inst.agents
        self.M = {j: sorted(self.alloc[j].indivisible) for j in self.agents}
        self.has_cake = {j: self.alloc[j].has_cake for j in self.agents}
        self.uM: dict[tuple[str, str], Fraction] = {}
        self.uC: dict[tuple[str, str], Fraction] = {}
        for i in self.agents:
            for j in self.agents:
                self.uM[i, j] = sum((inst.goods[g].values[i] for g in self.M[j]), ZERO)
                self.uC[i, j] = sum((piece_value(inst, i, p) for p in self.alloc[j].pieces.values()), ZERO)

    def u(self, i: str, j: str) -> Fraction:
        return self.uM[i, j] + self.uC[i, j]

    def val(self, i: str, g: str) -> Fraction:
        return self.inst.goods[g].values[i]

    def pairs(self):
        for i in self.agents:
            for j in self.agents:
                if i != j:
                    yield i, j

    # -- the three building-block tests, each returning a witness or None

    def ef(self, i, j, slack, part=None):
        own, other = self._sides(i, j, part)
        if own + slack < other:
            return Witness(i, j, own, other)
        return None

    def up_to_some(self, i, j, slack, part=None):
        """Envy removed by dropping the best single indivisible good (or no envy)."""
        own, other = self._sides(i, j, part)
        if own + slack >= other:
            return None
        if not self.M[j]:
            return Witness(i, j, own, other)
        best = min(self.M[j], key=lambda g: (-self.val(i, g), g))
        if own + slack >= other - self.val(i, best):
            return None
        return Witness(i, j, own, other - self.val(i, best), best)

    def up_to_any(self, i, j, slack, part=None):
        """Envy removed by dropping any single indivisible good (or no envy)."""
        own, other = self._sides(i, j, part)
        if own + slack >= other:
            return None
        for g in self.M[j]:
            if own + slack < other - self.val(i, g):
                return Witness(i, j, own, other - self.val(i, g), g)
        return None

    def _sides(self, i, j, part):
        if part == "indivisible":
            return self.uM[i, i], self.uM[i, j]
        return self.u(i, i), self.u(i, j)


def _first(table: _Table, test) -> NotionResult:
    for i, j in table.pairs():
        w = test(i, j)
        if w is not None:
            return NotionResult(Verdict.FAILS, w)
    return HOLDS


def _table(inst, alloc):
    return alloc if isinstance(alloc, _Table) else _Table(inst, alloc)


def is_EF(inst: Instance, alloc: Allocation, slack=0) -> NotionResult:
    t, s = _table(inst, alloc), Fraction(slack)
    return _first(t, lambda i, j: t.ef(i, j, s))


def is_EF1_indivisible(inst: Instance, alloc: Allocation, slack=0) -> NotionResult:
    """EF1 of the indivisible part; not applicable when divisible goods exist."""
    if inst.divisible:
        return NOT_APPLICABLE
    t, s = _table(inst, alloc), Fraction(slack)
    return _first(t, lambda i, j: t.up_to_some(i, j, s, "indivisible"))


def is_EFX_indivisible(inst: Instance, alloc: Allocation, slack=0) -> NotionResult:
    if inst.divisible:
        return NOT_APPLICABLE
    t, s = _table(inst, alloc), Fraction(slack)
    return _first(t, lambda i, j: t.up_to_any(i, j, s, "indivisible"))


def is_EFM(inst: Instance, alloc: Allocation, slack=0) -> NotionResult:
    t, s = _table(inst, alloc), Fraction(slack)

    def test(i, j):
        if not t.has_cake[j]:
            return t.up_to_some(i, j, s)
        return t.ef(i, j, s)

    return _first(t, test)


def is_weak_EFM(inst: Instance, alloc: Allocation, slack=0) -> NotionResult:
    t, s = _table(inst, alloc), Fraction(slack)

    def test(i, j):
        if t.M[j] and (not t.has_cake[j] or t.uC[i, j] == 0):
            return t.up_to_some(i, j, s)
        return t.ef(i, j, s)

    return _first(t, test)


def is_EF1M(inst: Instance, alloc: Allocation, slack=0) -> NotionResult:
    t, s = _table(inst, alloc), Fraction(slack)

    def test(i, j):
        if not t.M[j]:
            return t.ef(i, j, s)
        return t.up_to_some(i, j, s)

    return _first(t, test)


def is_EFXM(inst: Instance, alloc: Allocation, slack=0) -> NotionResult:
    t, s = _table(inst, alloc), Fraction(slack)

    def test(i, j):
        if not t.has_cake[j]:
            return t.up_to_any(i, j, s)
        return t.ef(i, j, s)

    return _first(t, test)


def utilitarian_optimum(inst: Instance) -> Fraction:
    """Largest achievable utility sum: each good or cell to whoever values it most."""
    total = sum((max(g.values.values()) for g in inst.indivisible), ZERO)
    for c in inst.divisible:
        for cell, rates in cell_rates(inst, c.id):
            total += cell.length * max(rates.values())
    return total


def welfare(inst: Instance, alloc: Allocation) -> Fraction:
    t = _table(inst, alloc)
    return sum((t.u(i, i) for i in t.agents), ZERO)


def is_utilitarian_optimal(inst: Instance, alloc: Allocation, slack=0) -> NotionResult:
    if welfare(inst, alloc) + Fraction(slack) >= utilitarian_optimum(inst):
        return HOLDS
    return NotionResult(Verdict.FAILS)


def is_PO_binary(inst: Instance, alloc: Allocation) -> NotionResult:
    """Pareto optimality for binary valuations, decided through utilitarian optimality.

    Utilitarian optimal allocations are always PO. For binary *linear*
    valuations the converse holds as well, so a shortfall proves domination.
    With binary but non-linear densities the converse breaks down and a
    non-optimal allocation is reported as not applicable.
    """
    cls = classify_instance(inst)
    if not cls.is_binary:
        return NOT_APPLICABLE
    if is_utilitarian_optimal(inst, alloc).holds:
        return HOLDS
    if cls.is_linear:
        return NotionResult(Verdict.FAILS)
    return NOT_APPLICABLE


NOTIONS = ("EF", "EF1", "EFX", "EFM", "weakEFM", "EF1M", "EFXM", "UO", "PO")

CLI_NAMES = {
    "ef": "EF",
    "ef1": "EF1",
    "efx": "EFX",
    "efm": "EFM",
    "weak-efm": "weakEFM",
    "ef1m": "EF1M",
    "efxm": "EFXM",
    "uo": "UO",
    "po": "PO",
}


@dataclass(frozen=True)
class FairnessReport:
    results: dict[str, NotionResult]
    slack: Fraction = ZERO
    utilities: dict[str, Fraction] = field(default_factory=dict)

    def __getitem__(self, notion: str) -> NotionResult:
        return self.results[notion]

    def verdicts(self) -> dict[str, str]:
        return {k: v.verdict.value for k, v in self.results.items()}

    @property
    def all_hold(self) -> bool:
        return not any(r.fails for r in self.results.values())

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "slack": format_rational(self.slack),
            "utilities": {a: format_rational(u) for a, u in self.utilities.items()},
            "notions": {k: v.to_dict() for k, v in self.results.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def full_report(inst: Instance, alloc: Allocation, slack=0, notions=NOTIONS) -> FairnessReport:
    """Run every requested checker on a single shared utility table."""
    t = _Table(inst, alloc)
    s = Fraction(slack)
    runners = {
        "EF": lambda: is_EF(inst, t, s),
        "EF1": lambda: is_EF1_indivisible(inst, t, s),
        "EFX": lambda: is_EFX_indivisible(inst, t, s),
        "EFM": lambda: is_EFM(inst, t, s),
        "weakEFM": lambda: is_weak_EFM(inst, t, s),
        "EF1M": lambda: is_EF1M(inst, t, s),
        "EFXM": lambda: is_EFXM(inst, t, s),
        "UO": lambda: is_utilitarian_optimal(inst, t, s),
        "PO": lambda: is_PO_binary(inst, t),
    }
    results = {}
    for name in notions:
        if name not in runners:
            raise KeyError(f"unknown notion {name!r}")
        results[name] = runners[name]()
    return FairnessReport(results, s, {a: t.u(a, a) for a in inst.agents})
