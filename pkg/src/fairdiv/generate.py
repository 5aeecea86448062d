"""Seeded random instances of the three valuation classes, and random allocations."""
from __future__ import annotations

import random
from fractions import Fraction

from .model import (
    ONE,
    ZERO,
    Allocation,
    Bundle,
    DivisibleGood,
    IndivisibleGood,
    Instance,
    Interval,
    Piece,
    SchemaError,
    normalize_allocation,
)

CLASSES = ("binary-linear", "binary", "additive")


def _breakpoints(rng: random.Random, cells: int) -> list[Fraction]:
    grid = max(12, 2 * cells)
    inner = sorted(rng.sample(range(1, grid), cells - 1))
    return [ZERO] + [Fraction(p, grid) for p in inner] + [ONE]


def _density(rng: random.Random, kind: str, cuts: list[Fraction]):
    ivs = [Interval(lo, hi) for lo, hi in zip(cuts, cuts[1:])]
    if kind == "binary-linear":
        return ((Interval(ZERO, ONE), Fraction(rng.randint(0, 1))),)
    if kind == "binary":
        if rng.random() < 0.4:
            return ((Interval(ZERO, ONE), ZERO),)
        weights = [rng.randint(0, 3) for _ in ivs]
        if not any(weights):
            weights[rng.randrange(len(weights))] = 1
        total = sum(weights)
        rates = [Fraction(w, total) / iv.length for w, iv in zip(weights, ivs)]
    else:
        rates = [Fraction(rng.randint(0, 10), rng.choice((1, 2, 5, 10))) for _ in ivs]
    return _merge(ivs, rates)


def _merge(ivs, rates):
    out: list[tuple[Interval, Fraction]] = []
    for iv, r in zip(ivs, rates):
        if out and out[-1][1] == r:
            out[-1] = (Interval(out[-1][0].lo, iv.hi), r)
        else:
            out.append((iv, r))
    return tuple(out)


def _value(rng: random.Random, kind: str) -> Fraction:
    if kind == "additive":
        return Fraction(rng.randint(0, 10), rng.choice((1, 2, 4, 5, 10)))
    return Fraction(rng.randint(0, 1))


def random_instance(
    seed: int | random.Random,
    agents: int,
    indivisible: int,
    divisible: int,
    kind: str = "additive",
    cells: int = 2,
    max_tries: int = 10_000,
) -> Instance:
    """Draw an instance, resampling until every agent and good is valued by someone.

    ``cells`` bounds the number of density pieces per divisible good; all
    agents share the good's breakpoints. It is ignored for binary-linear.
    """
    if kind not in CLASSES:
        raise ValueError(f"unknown class {kind!r}")
    if agents < 1:
        raise ValueError("need at least one agent")
    if indivisible < 0 or divisible < 0 or indivisible + divisible < 1:
        raise ValueError("need at least one good")
    if cells < 1:
        raise ValueError("cells must be positive")
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    names = tuple(str(i + 1) for i in range(agents))
    for _ in range(max_tries):
        ind = tuple(
            IndivisibleGood(f"g{k + 1}", {a: _value(rng, kind) for a in names}) for k in range(indivisible)
        )
        div = []
        for k in range(divisible):
            cuts = _breakpoints(rng, cells if kind != "binary-linear" else 1)
            div.append(DivisibleGood(f"c{k + 1}", {a: _density(rng, kind, cuts) for a in names}))
        try:
            return Instance(names, ind, tuple(div))
        except SchemaError:
            continue
    raise ValueError("could not draw a valid instance; try other sizes")


def random_allocation(rng: random.Random, inst: Instance, max_cuts: int = 4):
    """Random complete allocation: goods to uniform agents, each cake cut at grid points."""
    goods = {a: set() for a in inst.agents}
    for g in inst.indivisible:
        goods[rng.choice(inst.agents)].add(g.id)
    pieces: dict[str, dict[str, list]] = {a: {} for a in inst.agents}
    for c in inst.divisible:
        grid = rng.choice((2, 3, 4, 6, 12, 24))
        cuts = sorted(rng.sample(range(1, grid), min(grid - 1, rng.randint(0, max_cuts))))
        points = [ZERO] + [Fraction(p, grid) for p in cuts] + [ONE]
        for lo, hi in zip(points, points[1:]):
            pieces[rng.choice(inst.agents)].setdefault(c.id, []).append((lo, hi))
    bundles = {
        a: Bundle(frozenset(goods[a]), {c: Piece.of(c, ivs) for c, ivs in pieces[a].items()}) for a in inst.agents
    }
    return normalize_allocation(inst, Allocation(bundles))
