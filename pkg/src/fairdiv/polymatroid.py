"""Coverage base polytopes, their decomposition point, and the canonical partition.

A :class:`CoverageSystem` describes every utility vector reachable by splitting
capacitated resources among eligible agents on top of fixed baselines. For
binary linear valuations this is exactly the set of utility vectors of
allocations extending a fixed assignment of indivisible goods. The point of
that polytope minimizing every symmetric strictly convex function is computed
by peeling off its lowest level sets with exact max-flow computations.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping

from .model import ZERO, Instance, NotApplicableError, classify_instance

# --------------------------------------------------------------- max-flow


class FlowNetwork:
    """Edmonds-Karp max-flow over exact rational capacities."""

    def __init__(self):
        self.cap: dict[Hashable, dict[Hashable, Fraction]] = {}

    def add_edge(self, u, v, c) -> None:
        self.cap.setdefault(u, {})
        self.cap.setdefault(v, {})
        self.cap[u][v] = self.cap[u].get(v, ZERO) + Fraction(c)
        self.cap[v].setdefault(u, ZERO)

    def max_flow(self, s, t) -> Fraction:
        self.cap.setdefault(s, {})
        self.cap.setdefault(t, {})
        self.flow = {u: {v: ZERO for v in nbrs} for u, nbrs in self.cap.items()}
        total = ZERO
        while True:
            parent = {s: None}
            queue = deque([s])
            while queue and t not in parent:
                u = queue.popleft()
                for v in self.cap[u]:
                    if v not in parent and self.residual(u, v) > 0:
                        parent[v] = u
                        queue.append(v)
            if t not in parent:
                return total
            path = []
            v = t
            while parent[v] is not None:
                path.append((parent[v], v))
                v = parent[v]
            push = min(self.residual(u, v) for u, v in path)
            for u, v in path:
                self.flow[u][v] += push
                self.flow[v][u] -= push
            total += push

    def residual(self, u, v) -> Fraction:
        return self.cap[u][v] - self.flow[u][v]

    def cannot_reach(self, t) -> set:
        """Nodes with no residual path to ``t``: the source side of the maximal min cut."""
        reach = {t}
        queue = deque([t])
        while queue:
            v = queue.popleft()
            for u in self.cap[v]:
                if u not in reach and self.residual(u, v) > 0:
                    reach.add(u)
                    queue.append(u)
        return set(self.cap) - reach


# -------------------------------------------------------- coverage systems


@dataclass(frozen=True)
class Resource:
    id: str
    capacity: Fraction
    eligible: frozenset

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError(f"resource {self.id} needs positive capacity")
        if not self.eligible:
            raise ValueError(f"resource {self.id} has no eligible agent")


@dataclass(frozen=True)
class CoverageSystem:
    agents: tuple[str, ...]
    resources: tuple[Resource, ...]
    baselines: Mapping[str, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        for r in self.resources:
            if not r.eligible <= set(self.agents):
                raise ValueError(f"resource {r.id} lists unknown agents")
        if any(self.base(a) < 0 for a in self.agents):
            raise ValueError("baselines must be nonnegative")

    def base(self, agent: str) -> Fraction:
        return Fraction(self.baselines.get(agent, ZERO))

    def rank(self, subset: Iterable[str]) -> Fraction:
        """Baselines of ``subset`` plus the capacity of every resource it can use."""
        s = set(subset)
        return sum((self.base(a) for a in s), ZERO) + sum(
            (r.capacity for r in self.resources if r.eligible & s), ZERO
        )


def coverage_system(agents, resources, baselines=None) -> CoverageSystem:
    """Shorthand: ``resources`` is an iterable of ``(id, capacity, eligible agents)``."""
    res = tuple(Resource(str(rid), Fraction(cap), frozenset(map(str, elig))) for rid, cap, elig in resources)
    base = {str(a): Fraction(v) for a, v in (baselines or {}).items()}
    return CoverageSystem(tuple(map(str, agents)), res, base)


@dataclass(frozen=True)
class BasePoint:
    z: dict[str, Fraction]
    shares: dict[tuple[str, str], Fraction]

    def share(self, agent: str, resource: str) -> Fraction:
        return self.shares.get((agent, resource), ZERO)


def _big(sys: CoverageSystem) -> Fraction:
    return sum((r.capacity for r in sys.resources), ZERO) + sum((sys.base(a) for a in sys.agents), ZERO) + 1


def _lowest_level(sys: CoverageSystem, agents: list[str], resources: list[Resource]):
    """Smallest value of the remaining polytope and the maximal set attaining it.

    Minimizes rank(S)/|S| by Dinkelbach iteration; each step minimizes
    rank(S) - lam*|S| with one min cut.
    """
    inf = _big(sys)
    lam = (sum((sys.base(a) for a in agents), ZERO) + sum((r.capacity for r in resources), ZERO)) / len(agents)
    while True:
        net = FlowNetwork()
        weights = {a: lam - sys.base(a) for a in agents if sys.base(a) <= lam}
        for a, w in weights.items():
            net.add_edge("s", ("a", a), w)
        for r in resources:
            elig = [a for a in agents if a in r.eligible and a in weights]
            if not elig:
                continue
            for a in elig:
                net.add_edge(("a", a), ("r", r.id), inf)
            net.add_edge(("r", r.id), "t", r.capacity)
        flow = net.max_flow("s", "t")
        gap = flow - sum(weights.values(), ZERO)
        side = net.cannot_reach("t")
        level = [a for a in agents if ("a", a) in side]
        if gap < 0:
            rank = sum((sys.base(a) for a in level), ZERO) + sum(
                (r.capacity for r in resources if r.eligible & set(level)), ZERO
            )
            lam = rank / len(level)
            continue
        return lam, level


def _realize(sys: CoverageSystem, z: Mapping[str, Fraction]) -> dict[tuple[str, str], Fraction]:
    """Resource shares giving each agent exactly ``z - baseline``."""
    net = FlowNetwork()
    inf = _big(sys)
    for a in sys.agents:
        net.add_edge("s", ("a", a), z[a] - sys.base(a))
    for r in sys.resources:
        for a in sys.agents:
            if a in r.eligible:
                net.add_edge(("a", a), ("r", r.id), inf)
        net.add_edge(("r", r.id), "t", r.capacity)
    total = net.max_flow("s", "t")
    need = sum((r.capacity for r in sys.resources), ZERO)
    if total != need:
        raise ArithmeticError("utility vector is not a base of the coverage system")
    shares = {}
    for r in sys.resources:
        for a in sys.agents:
            if a in r.eligible:
                f = net.flow[("a", a)][("r", r.id)]
                if f > 0:
                    shares[a, r.id] = f
    return shares


def decomposition_point(sys: CoverageSystem) -> BasePoint:
    """The base point minimizing every symmetric strictly convex function.

    Level sets are found from the bottom up: the lowest value is the minimum
    of rank(S)/|S|, its maximal minimizer is fixed at that value, the
    resources it can use are spent on it, and the rest is solved recursively.

    >>> sys = coverage_system(["1", "2"], [("r", 1, ["1", "2"])], {"2": 1})
    >>> decomposition_point(sys).z
    {'1': Fraction(1, 1), '2': Fraction(1, 1)}
    """
    agents = list(sys.agents)
    resources = list(sys.resources)
    z: dict[str, Fraction] = {}
    while agents:
        lam, level = _lowest_level(sys, agents, resources)
        chosen = set(level)
        for a in level:
            z[a] = lam
        resources = [r for r in resources if not (r.eligible & chosen)]
        agents = [a for a in agents if a not in chosen]
    z = {a: z[a] for a in sys.agents}
    return BasePoint(z, _realize(sys, z))


@dataclass(frozen=True)
class Certificate:
    """Outcome of :func:`exchange_certificate`.

    When ``ok`` is false, ``path`` alternates agents and resources, starting at
    a richer agent and ending at a poorer one; moving a small amount along it
    keeps feasibility and lowers every symmetric strictly convex objective.
    """

    ok: bool
    path: tuple[str, ...] = ()


def check_feasible(sys: CoverageSystem, pt: BasePoint) -> None:
    for (a, rid), s in pt.shares.items():
        if s < 0:
            raise ValueError(f"negative share for {a} on {rid}")
    for r in sys.resources:
        if sum((pt.share(a, r.id) for a in sys.agents), ZERO) != r.capacity:
            raise ValueError(f"resource {r.id} not fully distributed")
        for a in sys.agents:
            if a not in r.eligible and pt.share(a, r.id) != 0:
                raise ValueError(f"agent {a} is not eligible for {r.id}")
    for a in sys.agents:
        got = sys.base(a) + sum((pt.share(a, r.id) for r in sys.resources), ZERO)
        if got != pt.z[a]:
            raise ValueError(f"utility of {a} does not match its shares")


def exchange_certificate(sys: CoverageSystem, pt: BasePoint) -> Certificate:
    """Certify ``pt`` is the decomposition point or return an improving exchange path."""
    check_feasible(sys, pt)
    # agent j -> agent i when j holds part of a resource i may also use
    out: dict[str, list[tuple[str, str]]] = {a: [] for a in sys.agents}
    for r in sys.resources:
        for j in sys.agents:
            if pt.share(j, r.id) > 0:
                out[j].extend((r.id, i) for i in sys.agents if i != j and i in r.eligible)
    for j in sys.agents:
        prev: dict[str, tuple[str, str] | None] = {j: None}
        queue = deque([j])
        while queue:
            u = queue.popleft()
            for rid, v in out[u]:
                if v not in prev:
                    prev[v] = (u, rid)
                    queue.append(v)
        for i in sys.agents:
            if i in prev and pt.z[j] > pt.z[i]:
                path = [i]
                v = i
                while prev[v] is not None:
                    u, rid = prev[v]
                    path.extend([rid, u])
                    v = u
                return Certificate(False, tuple(reversed(path)))
    return Certificate(True)


# ------------------------------------------------------ canonical partition


@dataclass(frozen=True)
class CanonicalPartition:
    """Agent groups with integer levels and the goods each group controls.

    ``groups[k]`` pairs with ``levels[k]`` (strictly decreasing) and with the
    good groups ``indivisible_groups[k]`` and ``divisible_groups[k]``.
    """

    groups: tuple[tuple[str, ...], ...]
    levels: tuple[int, ...]
    indivisible_groups: tuple[tuple[str, ...], ...]
    divisible_groups: tuple[tuple[str, ...], ...]

    @property
    def q(self) -> int:
        return len(self.groups)

    def group_of(self, agent: str) -> int:
        for k, g in enumerate(self.groups):
            if agent in g:
                return k
        raise KeyError(agent)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "groups": [list(g) for g in self.groups],
            "levels": list(self.levels),
            "indivisible_groups": [list(g) for g in self.indivisible_groups],
            "divisible_groups": [list(g) for g in self.divisible_groups],
        }


def relaxation_system(inst: Instance) -> CoverageSystem:
    """Every good (indivisible ones included) as a unit resource for the agents valuing it."""
    res = [Resource(g.id, Fraction(1), frozenset(a for a in inst.agents if g.values[a] == 1)) for g in inst.indivisible]
    res += [Resource(c.id, Fraction(1), frozenset(a for a in inst.agents if c.total(a) == 1)) for c in inst.divisible]
    return CoverageSystem(inst.agents, tuple(res))


def good_groups(inst: Instance, groups) -> tuple[tuple[tuple[str, ...], ...], tuple[tuple[str, ...], ...]]:
    """Assign each good to the first group prefix containing every agent that values it."""
    def split(goods, value):
        left = list(goods)
        out = []
        covered: set[str] = set()
        for g in groups:
            covered |= set(g)
            here = tuple(x for x in left if all(value(a, x) == 0 for a in inst.agents if a not in covered))
            out.append(here)
            left = [x for x in left if x not in here]
        return tuple(out)

    ind = split([g.id for g in inst.indivisible], lambda a, x: inst.goods[x].values[a])
    div = split([c.id for c in inst.divisible], lambda a, x: inst.cakes[x].total(a))
    return ind, div


def canonical_partition(inst: Instance) -> CanonicalPartition:
    """Group agents by their value at the decomposition point of the full relaxation.

    Levels are rounded up to integers and neighbouring groups whose rounded
    levels coincide are merged, so levels strictly decrease.
    """
    cls = classify_instance(inst)
    if not (cls.is_binary and cls.is_linear):
        raise NotApplicableError("canonical partition needs binary linear valuations")
    z = decomposition_point(relaxation_system(inst)).z
    groups: list[list[str]] = []
    levels: list[int] = []
    for value in sorted(set(z.values()), reverse=True):
        members = [a for a in inst.agents if z[a] == value]
        beta = math.ceil(value)
        if levels and levels[-1] == beta:
            groups[-1].extend(members)
        else:
            groups.append(members)
            levels.append(beta)
    order = {a: k for k, a in enumerate(inst.agents)}
    groups_t = tuple(tuple(sorted(g, key=order.__getitem__)) for g in groups)
    ind, div = good_groups(inst, groups_t)
    return CanonicalPartition(groups_t, tuple(levels), ind, div)
