"""Instances, pieces and allocations for mixed divisible/indivisible goods.

All numbers are :class:`fractions.Fraction`. Divisible goods live in their own
local coordinates ``[0, 1)`` and every agent's valuation of a divisible good is
a piecewise-constant density on that interval.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable, Mapping

FORMAT = "fairdiv/1"
RESERVED_KEYS = frozenset({"format", "metadata"})

ZERO = Fraction(0)
ONE = Fraction(1)

_RATIONAL_RE = re.compile(r"-?[0-9]+(/[1-9][0-9]*)?")
_DECIMAL_RE = re.compile(r"-?([0-9]+\.[0-9]*|\.[0-9]+)")


class FairdivError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(FairdivError, ValueError):
    """A document or object violates the instance/allocation schema."""


class AllocationError(FairdivError, ValueError):
    """An allocation does not partition the goods of its instance."""


class NotApplicableError(FairdivError):
    """The requested computation does not apply to this instance class."""


class InstanceTooLargeError(FairdivError):
    """Enumeration would exceed the configured size guard."""


def parse_rational(text: str) -> Fraction:
    """Parse ``"p/q"``, an integer string or a finite decimal exactly.

    >>> parse_rational("0.37")
    Fraction(37, 100)
    >>> parse_rational("2/6")
    Fraction(1, 3)
    """
    if not isinstance(text, str):
        raise SchemaError(f"expected a rational string, got {text!r}")
    s = text.strip()
    if _RATIONAL_RE.fullmatch(s) or _DECIMAL_RE.fullmatch(s):
        return Fraction(s)
    raise SchemaError(f"malformed rational {text!r}")


def parse_tolerance(text: str) -> Fraction:
    """Like :func:`parse_rational` but also accepts scientific notation."""
    try:
        return parse_rational(text)
    except SchemaError:
        pass
    try:
        d = Decimal(text.strip())
    except InvalidOperation:
        raise SchemaError(f"malformed number {text!r}") from None
    if not d.is_finite():
        raise SchemaError(f"malformed number {text!r}")
    return Fraction(d)


def as_rational(x: Any) -> Fraction:
    """Coerce ints, Fractions and rational strings; floats are refused."""
    if isinstance(x, bool):
        raise SchemaError(f"not a number: {x!r}")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rational(x)
    raise SchemaError(f"inexact or unsupported number {x!r}")


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True, order=True)
class Interval:
    """Half-open interval ``[lo, hi)`` inside ``[0, 1)``."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if not (ZERO <= self.lo < self.hi <= ONE):
            raise SchemaError(f"bad interval [{self.lo}, {self.hi})")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def __repr__(self):
        return f"[{format_rational(self.lo)},{format_rational(self.hi)})"


def _normalize_intervals(pairs: Iterable[tuple[Fraction, Fraction]]) -> tuple[Interval, ...]:
    raw = sorted((Fraction(lo), Fraction(hi)) for lo, hi in pairs if lo != hi)
    out: list[list[Fraction]] = []
    for lo, hi in raw:
        if lo > hi or lo < 0 or hi > 1:
            raise SchemaError(f"bad interval [{lo}, {hi})")
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return tuple(Interval(lo, hi) for lo, hi in out)


@dataclass(frozen=True)
class Piece:
    """A finite union of half-open intervals of one divisible good.

    Construct with :meth:`Piece.of`, which sorts and merges. The direct
    constructor assumes the intervals are already normalized.
    """

    good: str
    intervals: tuple[Interval, ...] = ()

    @classmethod
    def of(cls, good: str, pairs: Iterable[tuple[Any, Any]] = ()) -> "Piece":
        return cls(good, _normalize_intervals((as_rational(lo), as_rational(hi)) for lo, hi in pairs))

    @classmethod
    def full(cls, good: str) -> "Piece":
        return cls(good, (Interval(ZERO, ONE),))

    @property
    def measure(self) -> Fraction:
        return sum((iv.length for iv in self.intervals), ZERO)

    def __bool__(self):
        return bool(self.intervals)

    def __repr__(self):
        body = "∪".join(map(repr, self.intervals)) or "∅"
        return f"Piece({self.good}: {body})"


@dataclass(frozen=True)
class IndivisibleGood:
    id: str
    values: Mapping[str, Fraction]


@dataclass(frozen=True)
class DivisibleGood:
    """A divisible good; ``density[agent]`` is a tiling of [0,1) with rates."""

    id: str
    density: Mapping[str, tuple[tuple[Interval, Fraction], ...]]

    def total(self, agent: str) -> Fraction:
        return sum((iv.length * rate for iv, rate in self.density[agent]), ZERO)

    def is_constant(self, agent: str) -> bool:
        return len(self.density[agent]) == 1


def _normalize_density(good_id, agent, cells) -> tuple[tuple[Interval, Fraction], ...]:
    cells = sorted(cells, key=lambda c: c[0].lo)
    pos = ZERO
    out: list[tuple[Interval, Fraction]] = []
    for iv, rate in cells:
        if rate < 0:
            raise SchemaError(f"negative density for agent {agent} on good {good_id}")
        if iv.lo > pos:
            raise SchemaError(f"density gap for agent {agent} on good {good_id} at {pos}")
        if iv.lo < pos:
            raise SchemaError(f"density overlap for agent {agent} on good {good_id} at {iv.lo}")
        pos = iv.hi
        if out and out[-1][1] == rate:
            out[-1] = (Interval(out[-1][0].lo, iv.hi), rate)
        else:
            out.append((iv, rate))
    if pos != ONE:
        raise SchemaError(f"density gap for agent {agent} on good {good_id} at {pos}")
    return tuple(out)


@dataclass(frozen=True)
class Instance:
    """Agents, indivisible goods with additive values, divisible goods with densities."""

    agents: tuple[str, ...]
    indivisible: tuple[IndivisibleGood, ...] = ()
    divisible: tuple[DivisibleGood, ...] = ()

    def __post_init__(self):
        if not self.agents:
            raise SchemaError("an instance needs at least one agent")
        if len(set(self.agents)) != len(self.agents):
            raise SchemaError("duplicate agent id")
        for a in self.agents:
            if not isinstance(a, str) or a in RESERVED_KEYS:
                raise SchemaError(f"invalid agent id {a!r}")
        ids = [g.id for g in self.indivisible] + [c.id for c in self.divisible]
        if len(set(ids)) != len(ids):
            raise SchemaError("duplicate good id")
        agents = set(self.agents)
        for g in self.indivisible:
            if set(g.values) != agents:
                raise SchemaError(f"good {g.id} must list a value for every agent")
            if any(v < 0 for v in g.values.values()):
                raise SchemaError(f"negative value on good {g.id}")
        for c in self.divisible:
            if set(c.density) != agents:
                raise SchemaError(f"good {c.id} must list a density for every agent")
        for g in self.indivisible:
            if all(v == 0 for v in g.values.values()):
                raise SchemaError(f"good {g.id} is valued zero by every agent")
        for c in self.divisible:
            if all(c.total(a) == 0 for a in self.agents):
                raise SchemaError(f"good {c.id} is valued zero by every agent")
        for a in self.agents:
            if all(g.values[a] == 0 for g in self.indivisible) and all(
                c.total(a) == 0 for c in self.divisible
            ):
                raise SchemaError(f"agent {a} values every good at zero")

    @property
    def n(self) -> int:
        return len(self.agents)

    @cached_property
    def goods(self) -> dict[str, IndivisibleGood]:
        return {g.id: g for g in self.indivisible}

    @cached_property
    def cakes(self) -> dict[str, DivisibleGood]:
        return {c.id: c for c in self.divisible}

    def value(self, agent: str, good: str) -> Fraction:
        """Value of a whole good (indivisible or divisible) to ``agent``."""
        if good in self.goods:
            return self.goods[good].values[agent]
        return self.cakes[good].total(agent)


def make_instance(
    agents: Iterable[Any],
    indivisible: Mapping[Any, Mapping[Any, Any]] | None = None,
    divisible: Mapping[Any, Mapping[Any, Any]] | None = None,
) -> Instance:
    """Build an :class:`Instance` from plain Python values.

    ``divisible[c][agent]`` is either a single rate (constant density) or a
    list of ``(from, to, rate)`` triples tiling [0, 1).

    >>> inst = make_instance(["1", "2"], {"g": {"1": 1, "2": "1/2"}})
    >>> inst.value("2", "g")
    Fraction(1, 2)
    """
    agents = tuple(str(a) for a in agents)
    ind = []
    for gid, vals in (indivisible or {}).items():
        ind.append(IndivisibleGood(str(gid), {str(a): as_rational(v) for a, v in vals.items()}))
    div = []
    for cid, dens in (divisible or {}).items():
        density = {}
        for a, given in dens.items():
            if isinstance(given, (list, tuple)):
                cells = [(Interval(as_rational(lo), as_rational(hi)), as_rational(r)) for lo, hi, r in given]
            else:
                cells = [(Interval(ZERO, ONE), as_rational(given))]
            density[str(a)] = _normalize_density(cid, a, cells)
        div.append(DivisibleGood(str(cid), density))
    return Instance(agents, tuple(ind), tuple(div))


@dataclass(frozen=True)
class InstanceClass:
    is_binary: bool
    is_linear: bool


def classify_instance(inst: Instance) -> InstanceClass:
    binary = all(v in (0, 1) for g in inst.indivisible for v in g.values.values()) and all(
        c.total(a) in (0, 1) for c in inst.divisible for a in inst.agents
    )
    linear = all(c.is_constant(a) for c in inst.divisible for a in inst.agents)
    return InstanceClass(binary, linear)


@dataclass(frozen=True)
class Bundle:
    """What one agent receives: indivisible good ids and one piece per divisible good."""

    indivisible: frozenset = frozenset()
    pieces: Mapping[str, Piece] = field(default_factory=dict)

    def piece(self, good: str) -> Piece:
        return self.pieces.get(good) or Piece(good)

    @property
    def has_cake(self) -> bool:
        """True when the bundle holds positive measure of some divisible good."""
        return any(p.measure > 0 for p in self.pieces.values())


@dataclass(frozen=True)
class Allocation:
    bundles: Mapping[str, Bundle]

    def __getitem__(self, agent: str) -> Bundle:
        return self.bundles[agent]

    def __iter__(self):
        return iter(self.bundles)

    def __len__(self):
        return len(self.bundles)


def make_allocation(inst: Instance, layout: Mapping[Any, Any]) -> Allocation:
    """Build an allocation from ``{agent: (goods, {good: [(from, to), ...]})}``.

    Agents missing from ``layout`` receive nothing. The result is validated and
    normalized.
    """
    bundles = {}
    for a in inst.agents:
        goods, pieces = layout.get(a, ((), {}))
        bundles[a] = Bundle(
            frozenset(str(g) for g in goods),
            {str(c): Piece.of(str(c), ivs) for c, ivs in pieces.items()},
        )
    for a in layout:
        if str(a) not in bundles:
            raise AllocationError(f"unknown agent {a!r}")
    return normalize_allocation(inst, Allocation(bundles))


def validate_allocation(inst: Instance, alloc: Allocation) -> None:
    """Raise :class:`AllocationError` unless ``alloc`` partitions all goods."""
    if set(alloc.bundles) != set(inst.agents):
        raise AllocationError("allocation agents differ from instance agents")
    seen: dict[str, str] = {}
    for a in inst.agents:
        for g in alloc[a].indivisible:
            if g not in inst.goods:
                raise AllocationError(f"unknown indivisible good {g!r}")
            if g in seen:
                raise AllocationError(f"good {g} given to both {seen[g]} and {a}")
            seen[g] = a
        for c, p in alloc[a].pieces.items():
            if c not in inst.cakes or p.good != c:
                raise AllocationError(f"unknown divisible good {c!r}")
    missing = set(inst.goods) - set(seen)
    if missing:
        raise AllocationError(f"unallocated goods {sorted(missing)}")
    for c in inst.cakes:
        ivs = sorted(iv for a in inst.agents for iv in alloc[a].piece(c).intervals)
        pos = ZERO
        for iv in ivs:
            if iv.lo < pos:
                raise AllocationError(f"pieces of {c} overlap at {iv.lo}")
            if iv.lo > pos:
                raise AllocationError(f"pieces of {c} leave [{pos}, {iv.lo}) unallocated")
            pos = iv.hi
        if pos != ONE:
            raise AllocationError(f"pieces of {c} leave [{pos}, 1) unallocated")


def normalize_allocation(inst: Instance, alloc: Allocation) -> Allocation:
    """Validate and drop zero-measure pieces so every held piece has positive measure.

    Degenerate intervals are already discarded by :meth:`Piece.of`; a piece of
    measure zero therefore carries no points and can simply be removed.
    """
    validate_allocation(inst, alloc)
    bundles = {}
    for a in inst.agents:
        b = alloc[a]
        pieces = {c: b.pieces[c] for c in inst.cakes if c in b.pieces and b.pieces[c].measure > 0}
        bundles[a] = Bundle(frozenset(b.indivisible), pieces)
    return Allocation(bundles)


# ---------------------------------------------------------------- documents


def _load_json(text: str | bytes) -> Any:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON: {e}") from None


def _check_format(doc: Any) -> None:
    if not isinstance(doc, dict):
        raise SchemaError("document must be a JSON object")
    if doc.get("format") != FORMAT:
        raise SchemaError(f'missing or unsupported "format" (expected "{FORMAT}")')


def _ident(x: Any, what: str) -> str:
    if isinstance(x, bool) or not isinstance(x, (str, int)):
        raise SchemaError(f"invalid {what} id {x!r}")
    return str(x)


def instance_from_dict(doc: Mapping[str, Any]) -> Instance:
    _check_format(doc)
    try:
        agents = tuple(_ident(a, "agent") for a in doc["agents"])
        ind = []
        for g in doc.get("indivisible", []):
            vals = {_ident(a, "agent"): parse_rational(v) for a, v in g["values"].items()}
            ind.append(IndivisibleGood(_ident(g["id"], "good"), vals))
        div = []
        for c in doc.get("divisible", []):
            cid = _ident(c["id"], "good")
            density = {}
            for a, cells in c["density"].items():
                parsed = [
                    (Interval(parse_rational(x["from"]), parse_rational(x["to"])), parse_rational(x["rate"]))
                    for x in cells
                ]
                density[_ident(a, "agent")] = _normalize_density(cid, a, parsed)
            div.append(DivisibleGood(cid, density))
    except (KeyError, TypeError, AttributeError) as e:
        raise SchemaError(f"instance schema violation: {e!r}") from None
    return Instance(agents, tuple(ind), tuple(div))


def parse_instance(text: str | bytes) -> Instance:
    """Parse and validate an instance document."""
    return instance_from_dict(_load_json(text))


def instance_to_dict(inst: Instance) -> dict:
    return {
        "format": FORMAT,
        "agents": list(inst.agents),
        "indivisible": [
            {"id": g.id, "values": {a: format_rational(g.values[a]) for a in inst.agents}}
            for g in inst.indivisible
        ],
        "divisible": [
            {
                "id": c.id,
                "density": {
                    a: [
                        {"from": format_rational(iv.lo), "to": format_rational(iv.hi), "rate": format_rational(r)}
                        for iv, r in c.density[a]
                    ]
                    for a in inst.agents
                },
            }
            for c in inst.divisible
        ],
    }


def serialize_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


def allocation_from_dict(inst: Instance, doc: Mapping[str, Any]) -> Allocation:
    _check_format(doc)
    bundles = {a: Bundle() for a in inst.agents}
    try:
        for key, body in doc.items():
            if key in RESERVED_KEYS:
                continue
            if key not in bundles:
                raise AllocationError(f"unknown agent {key!r}")
            goods = frozenset(_ident(g, "good") for g in body.get("indivisible", []))
            raw: dict[str, list] = {}
            for p in body.get("pieces", []):
                lo, hi = parse_rational(p["from"]), parse_rational(p["to"])
                if not (0 <= lo <= hi <= 1):
                    raise SchemaError(f"bad piece [{p['from']}, {p['to']})")
                raw.setdefault(_ident(p["good"], "good"), []).append((lo, hi))
            pieces = {}
            for c, pairs in raw.items():
                total = sum(hi - lo for lo, hi in pairs)
                piece = Piece.of(c, pairs)
                if piece.measure != total:
                    raise AllocationError(f"pieces of {c} for agent {key} overlap")
                pieces[c] = piece
            bundles[key] = Bundle(goods, pieces)
    except (KeyError, TypeError, AttributeError) as e:
        raise SchemaError(f"allocation schema violation: {e!r}") from None
    return normalize_allocation(inst, Allocation(bundles))


def parse_allocation(inst: Instance, text: str | bytes) -> Allocation:
    """Parse an allocation document against ``inst``; the result is normalized."""
    return allocation_from_dict(inst, _load_json(text))


def allocation_metadata(text: str | bytes) -> dict:
    doc = _load_json(text)
    _check_format(doc)
    return doc.get("metadata", {})


def allocation_to_dict(alloc: Allocation, metadata: Mapping[str, Any] | None = None) -> dict:
    doc: dict[str, Any] = {"format": FORMAT}
    for a, b in alloc.bundles.items():
        doc[a] = {
            "indivisible": sorted(b.indivisible),
            "pieces": [
                {"good": c, "from": format_rational(iv.lo), "to": format_rational(iv.hi)}
                for c, p in b.pieces.items()
                for iv in p.intervals
            ],
        }
    if metadata is not None:
        doc["metadata"] = dict(metadata)
    return doc


def serialize_allocation(alloc: Allocation, metadata: Mapping[str, Any] | None = None) -> str:
    return json.dumps(allocation_to_dict(alloc, metadata), indent=2) + "\n"
