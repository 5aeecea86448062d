"""Piece algebra, exact utilities and proportional splitting of pieces."""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable

from .model import (
    ONE,
    ZERO,
    Bundle,
    Instance,
    Interval,
    Piece,
)


def _check_same(p: Piece, q: Piece) -> None:
    if p.good != q.good:
        raise ValueError(f"pieces belong to different goods ({p.good} vs {q.good})")


def measure(p: Piece) -> Fraction:
    return p.measure


def union(p: Piece, q: Piece) -> Piece:
    _check_same(p, q)
    return Piece.of(p.good, [(iv.lo, iv.hi) for iv in p.intervals + q.intervals])


def intersect(p: Piece, q: Piece) -> Piece:
    _check_same(p, q)
    out = []
    a, b = p.intervals, q.intervals
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i].lo, b[j].lo)
        hi = min(a[i].hi, b[j].hi)
        if lo < hi:
            out.append((lo, hi))
        if a[i].hi < b[j].hi:
            i += 1
        else:
            j += 1
    return Piece.of(p.good, out)


def complement(p: Piece) -> Piece:
    out = []
    pos = ZERO
    for iv in p.intervals:
        if iv.lo > pos:
            out.append((pos, iv.lo))
        pos = iv.hi
    if pos < ONE:
        out.append((pos, ONE))
    return Piece.of(p.good, out)


def subtract(p: Piece, q: Piece) -> Piece:
    _check_same(p, q)
    return intersect(p, complement(q))


def clip(p: Piece, iv: Interval) -> Piece:
    return intersect(p, Piece(p.good, (iv,)))


# ------------------------------------------------------------------ cells


def cell_decomposition(inst: Instance) -> dict[str, tuple[Interval, ...]]:
    """Coarsest tiling of each divisible good on which every density is constant."""
    return {c.id: tuple(iv for iv, _ in cell_rates(inst, c.id)) for c in inst.divisible}


def cell_rates(inst: Instance, good: str) -> list[tuple[Interval, dict[str, Fraction]]]:
    """Cells of ``good`` paired with every agent's rate on them."""
    cake = inst.cakes[good]
    points = {ZERO, ONE}
    for a in inst.agents:
        for iv, _ in cake.density[a]:
            points.add(iv.lo)
            points.add(iv.hi)
    cuts = sorted(points)
    cells: list[tuple[Interval, dict[str, Fraction]]] = []
    for lo, hi in zip(cuts, cuts[1:]):
        rates = {a: rate_at(inst, a, good, lo) for a in inst.agents}
        if cells and cells[-1][1] == rates:
            cells[-1] = (Interval(cells[-1][0].lo, hi), rates)
        else:
            cells.append((Interval(lo, hi), rates))
    return cells


def rate_at(inst: Instance, agent: str, good: str, x: Fraction) -> Fraction:
    """Density of ``agent`` on ``good`` at the point ``x`` (right-continuous)."""
    for iv, rate in inst.cakes[good].density[agent]:
        if iv.lo <= x < iv.hi:
            return rate
    raise ValueError(f"point {x} outside [0,1)")


# ---------------------------------------------------------------- utility


def piece_value(inst: Instance, agent: str, piece: Piece) -> Fraction:
    if agent not in inst.agents:
        raise ValueError(f"unknown agent {agent!r}")
    if piece.good not in inst.cakes:
        raise ValueError(f"unknown divisible good {piece.good!r}")
    total = ZERO
    dens = inst.cakes[piece.good].density[agent]
    for iv in piece.intervals:
        for cell, rate in dens:
            if rate == 0:
                continue
            lo = max(iv.lo, cell.lo)
            hi = min(iv.hi, cell.hi)
            if lo < hi:
                total += rate * (hi - lo)
    return total


def utility(inst: Instance, agent: str, bundle: Bundle | tuple[Iterable[str], Iterable[Piece]]) -> Fraction:
    """``u_agent(bundle)``: indivisible values plus integrated densities, exactly.

    ``bundle`` is a :class:`Bundle` or a pair ``(indivisible ids, pieces)``.
    """
    if isinstance(bundle, Bundle):
        goods, pieces = bundle.indivisible, bundle.pieces.values()
    else:
        goods, pieces = bundle
    if agent not in inst.agents:
        raise ValueError(f"unknown agent {agent!r}")
    total = ZERO
    for g in goods:
        if g not in inst.goods:
            raise ValueError(f"unknown indivisible good {g!r}")
        total += inst.goods[g].values[agent]
    for p in pieces:
        total += piece_value(inst, agent, p)
    return total


# -------------------------------------------------------------- splitting


def _left_fraction(parts: list[Interval], amount: Fraction) -> list[tuple[Fraction, Fraction]]:
    """Leftmost sub-union of ``parts`` with total length ``amount``."""
    out = []
    for iv in parts:
        if amount <= 0:
            break
        take = min(iv.length, amount)
        out.append((iv.lo, iv.lo + take))
        amount -= take
    return out


def _cell_parts(inst: Instance, h: Piece) -> list[list[Interval]]:
    cells = cell_rates(inst, h.good)
    return [list(clip(h, cell).intervals) for cell, _ in cells]


def split_fraction(inst: Instance, h: Piece, alpha) -> Piece:
    """Sub-piece of ``h`` worth exactly ``alpha * u_i(h)`` to every agent ``i``.

    Takes the left ``alpha``-fraction (by measure) of ``h`` inside each cell,
    so the result is also monotone in ``alpha``.
    """
    alpha = Fraction(alpha)
    if not (0 <= alpha <= 1):
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    out = []
    for parts in _cell_parts(inst, h):
        m = sum((iv.length for iv in parts), ZERO)
        out.extend(_left_fraction(parts, alpha * m))
    return Piece.of(h.good, out)


def perfect_partition(inst: Instance, h: Piece, k: int) -> list[Piece]:
    """Split ``h`` into ``k`` disjoint pieces each worth ``u_i(h)/k`` to every agent."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    chunks: list[list[tuple[Fraction, Fraction]]] = [[] for _ in range(k)]
    for parts in _cell_parts(inst, h):
        m = sum((iv.length for iv in parts), ZERO)
        # t-th part = the slice between the t/k and (t+1)/k left fractions
        prev = Piece(h.good)
        for t in range(k):
            cur = Piece.of(h.good, _left_fraction(parts, m * (t + 1) / k))
            chunks[t].extend((iv.lo, iv.hi) for iv in subtract(cur, prev).intervals)
            prev = cur
    return [Piece.of(h.good, ch) for ch in chunks]
