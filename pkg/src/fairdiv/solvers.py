"""Allocation solvers: exact Φ-fair/MNW/leximin, approximate MNW/leximin, EF1M.

Exact solvers handle binary linear instances. They enumerate utilitarian
optimal assignments of the indivisible goods and split the divisible goods at
the decomposition point of the resulting coverage system. Approximate solvers
enumerate every assignment and optimize the cell shares numerically; the
shares are then rounded to rationals so the returned allocation and its
utilities are exact.
"""
from __future__ import annotations

import itertools
import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from .measure import cell_rates, perfect_partition, utility
from .model import (
    ZERO,
    Allocation,
    Bundle,
    Instance,
    Interval,
    NotApplicableError,
    Piece,
    classify_instance,
    format_rational,
    normalize_allocation,
)
from .polymatroid import Certificate, CoverageSystem, FlowNetwork, Resource, decomposition_point, exchange_certificate

PHI_EXPONENTS = {"sq": 2, "pow4": 4}


@dataclass(frozen=True)
class Objective:
    """What to optimize: ``mnw``, ``leximin`` or ``phi`` with ``phi`` in {sq, pow4}."""

    kind: str
    phi: str | None = None

    def __post_init__(self):
        if self.kind not in ("mnw", "leximin", "phi"):
            raise ValueError(f"unknown objective {self.kind!r}")
        if (self.kind == "phi") != (self.phi is not None):
            raise ValueError("phi objectives need a phi name, others must not have one")
        if self.phi is not None and self.phi not in PHI_EXPONENTS:
            raise ValueError(f"unknown phi {self.phi!r}")

    @classmethod
    def parse(cls, text: str) -> "Objective":
        """``"mnw"``, ``"leximin"``, ``"phi:sq"`` or ``"phi:pow4"``."""
        if text.startswith("phi:"):
            return cls("phi", text[4:])
        return cls(text)

    def __str__(self):
        return f"phi:{self.phi}" if self.kind == "phi" else self.kind

    def phi_value(self, z: Sequence) -> Any:
        p = PHI_EXPONENTS[self.phi]
        return sum(v**p for v in z)

    def key(self, z: Sequence):
        """Sort key over utility vectors; larger is better."""
        if self.kind == "mnw":
            return mnw_key(z)
        if self.kind == "leximin":
            return tuple(sorted(z))
        return -self.phi_value(z)

    def value(self, z: Sequence):
        if self.kind == "mnw":
            return mnw_key(z)[1]
        if self.kind == "leximin":
            return min(z)
        return self.phi_value(z)


def mnw_key(z: Sequence) -> tuple[int, Any]:
    """(number of positive utilities, product of the positive ones)."""
    pos = [v for v in z if v > 0]
    return len(pos), math.prod(pos) if pos else 0


@dataclass(frozen=True)
class SolveResult:
    allocation: Allocation
    utilities: dict[str, Fraction]
    objective: str
    mode: str
    value: Any
    certificate: Certificate | None = None
    assignment: tuple[str, ...] = ()

    def metadata(self) -> dict:
        if self.mode == "approx":
            utils = {a: _decimal(u) for a, u in self.utilities.items()}
        else:
            utils = {a: format_rational(u) for a, u in self.utilities.items()}
        meta = {"objective": self.objective, "mode": self.mode, "utilities": utils, "tie_break": "lex"}
        if isinstance(self.value, Fraction):
            meta["value"] = format_rational(self.value)
        if self.certificate is not None:
            meta["certificate"] = "ok" if self.certificate.ok else list(self.certificate.path)
        return meta


def _decimal(x: Fraction, digits: int = 20) -> str:
    sign = "-" if x < 0 else ""
    x = abs(x)
    whole, frac = divmod(x.numerator, x.denominator)
    scaled = round(Fraction(frac, x.denominator) * 10**digits)
    if scaled == 10**digits:
        whole, scaled = whole + 1, 0
    return f"{sign}{whole}.{scaled:0{digits}d}"


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("FAIRDIV_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn: Callable, items: Iterable) -> list:
    items = list(items)
    n = _threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _require_binary_linear(inst: Instance) -> None:
    cls = classify_instance(inst)
    if not (cls.is_binary and cls.is_linear):
        raise NotApplicableError("exact mode needs binary linear valuations")


def _build(inst: Instance, assignment: Sequence[str], pieces: dict[str, dict[str, list]]) -> Allocation:
    goods = {a: set() for a in inst.agents}
    for g, a in zip(inst.indivisible, assignment):
        goods[a].add(g.id)
    bundles = {
        a: Bundle(frozenset(goods[a]), {c: Piece.of(c, ivs) for c, ivs in pieces.get(a, {}).items()})
        for a in inst.agents
    }
    return normalize_allocation(inst, Allocation(bundles))


def _result(inst, alloc, objective: "Objective", mode, certificate=None, assignment=()):
    utils = {a: utility(inst, a, alloc[a]) for a in inst.agents}
    z = [utils[a] for a in inst.agents]
    return SolveResult(alloc, utils, str(objective), mode, objective.value(z), certificate, tuple(assignment))


# -------------------------------------------------------------- exact mode


def solve_phi_fair(inst: Instance, objective: Objective | str = "phi:sq") -> SolveResult:
    """Exact Φ-fair (or MNW / leximin over utilitarian optimal) allocation.

    Assignments are visited in lexicographic order of the receiving agents and
    only a strictly better one replaces the incumbent, which fixes ties.
    """
    if isinstance(objective, str):
        objective = Objective.parse(objective)
    _require_binary_linear(inst)
    agents = inst.agents
    candidates = [[a for a in agents if g.values[a] == 1] for g in inst.indivisible]
    resources = tuple(
        Resource(c.id, Fraction(1), frozenset(a for a in agents if c.total(a) == 1)) for c in inst.divisible
    )
    seen: set[tuple] = set()
    best = None
    for combo in itertools.product(*candidates):
        counts = Counter(combo)
        b = tuple(counts[a] for a in agents)
        if b in seen:
            continue
        seen.add(b)
        sys = CoverageSystem(agents, resources, {a: Fraction(counts[a]) for a in agents})
        pt = decomposition_point(sys)
        key = objective.key([pt.z[a] for a in agents])
        if best is None or key > best[0]:
            best = (key, combo, sys, pt)
    _, combo, sys, pt = best
    pieces: dict[str, dict[str, list]] = {}
    for r in resources:
        pos = ZERO
        for a in agents:
            s = pt.share(a, r.id)
            if s > 0:
                pieces.setdefault(a, {})[r.id] = [(pos, pos + s)]
                pos += s
    alloc = _build(inst, combo, pieces)
    return _result(inst, alloc, objective, "exact", exchange_certificate(sys, pt), combo)


# -------------------------------------------------------- approximate mode


@dataclass
class _Cells:
    """Flattened cells of all divisible goods with float and exact rates."""

    cells: list[tuple[str, Interval]]
    rates: list[dict[str, Fraction]]
    R: np.ndarray = field(repr=False)
    L: np.ndarray = field(repr=False)


def _cells(inst: Instance) -> _Cells:
    cells, rates = [], []
    for c in inst.divisible:
        for iv, r in cell_rates(inst, c.id):
            cells.append((c.id, iv))
            rates.append(r)
    R = np.array([[float(r[a]) for r in rates] for a in inst.agents]).reshape(inst.n, len(cells))
    L = np.array([float(iv.length) for _, iv in cells])
    return _Cells(cells, rates, R, L)


def _snap(v: float) -> Fraction:
    if v <= 0:
        return ZERO
    f = Fraction(v).limit_denominator(10**6)
    if abs(float(f) - v) < 1e-11:
        return f
    return Fraction(v).limit_denominator(10**12)


def _shares_to_pieces(inst: Instance, cells: _Cells, x: np.ndarray) -> dict[str, dict[str, list]]:
    """Lay each cell's rounded shares out left to right in agent order."""
    pieces: dict[str, dict[str, list]] = {}
    for k, (good, iv) in enumerate(cells.cells):
        col = np.clip(x[:, k], 0.0, None)
        total = col.sum()
        if total <= 0:
            col = np.zeros(inst.n)
            col[int(np.argmax(cells.R[:, k]))] = 1.0
            total = 1.0
        shares = [_snap(v / total) * iv.length for v in col]
        shares = [s if s > iv.length * Fraction(1, 10**10) else ZERO for s in shares]
        top = max(range(inst.n), key=lambda i: shares[i])
        shares[top] += iv.length - sum(shares, ZERO)
        pos = iv.lo
        for a, s in zip(inst.agents, shares):
            if s > 0:
                pieces.setdefault(a, {}).setdefault(good, []).append((pos, pos + s))
                pos += s
    return pieces


def _max_log_utility(b: np.ndarray, R: np.ndarray, L: np.ndarray, active: Sequence[int]) -> np.ndarray:
    """Maximize sum of log(b_i + sum_k R_ik x_ik) over active agents by a barrier method.

    ``x[:, k]`` sums to ``L[k]`` on cells some active agent values; the other
    cells are left at zero for the caller to place.
    """
    n, K = R.shape
    pairs = [(i, k) for i in active for k in range(K) if R[i, k] > 0 and L[k] > 0]
    x = np.zeros((n, K))
    if not pairs:
        return x
    I = np.array([p[0] for p in pairs])
    C = np.array([p[1] for p in pairs])
    r = R[I, C]
    used = sorted(set(C.tolist()))
    row = {k: t for t, k in enumerate(used)}
    P, E = len(pairs), len(used)
    A = np.zeros((E, P))
    for p, k in enumerate(C):
        A[row[k], p] = 1.0
    counts = A.sum(axis=1)
    v = L[C] / counts[[row[k] for k in C]]
    B = np.zeros((n, P))
    B[I, np.arange(P)] = r
    fixed = np.array([b[i] for i in range(n)])
    obj_agents = np.array(sorted(set(I.tolist())))

    def utilities(v):
        return fixed + B @ v

    def barrier(v, t):
        U = utilities(v)[obj_agents]
        return -t * np.sum(np.log(U)) - np.sum(np.log(v))

    t = 1.0
    kkt = np.zeros((P + E, P + E))
    kkt[P:, :P] = A
    kkt[:P, P:] = A.T
    while True:
        for _ in range(200):
            U = utilities(v)
            w = np.zeros(n)
            w[obj_agents] = 1.0 / U[obj_agents]
            grad = -t * (B.T @ w) - 1.0 / v
            H = t * (B.T * (w**2)) @ B + np.diag(1.0 / v**2)
            kkt[:P, :P] = H
            rhs = np.concatenate([-grad, np.zeros(E)])
            try:
                step = np.linalg.solve(kkt, rhs)[:P]
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:P]
            dec = float(-grad @ step)
            if dec / 2 < 1e-12:
                break
            s = 1.0
            neg = step < 0
            if neg.any():
                s = min(1.0, 0.99 * float(np.min(-v[neg] / step[neg])))
            f0 = barrier(v, t)
            while s > 1e-14:
                cand = v + s * step
                if np.all(cand > 0) and np.all(utilities(cand)[obj_agents] > 0):
                    if barrier(cand, t) <= f0 - 0.25 * s * dec:
                        break
                s *= 0.5
            v = v + s * step
            if s <= 1e-14:
                break
        if P / t < 1e-13:
            break
        t *= 20.0
    x[I, C] = v
    return x


def _polish(b: Sequence[Fraction], cells: _Cells, agents: Sequence[str], active: Sequence[int], x: np.ndarray):
    """Try :func:`_polish_at` with looser tightness thresholds until one verifies."""
    for threshold in (1e-6, 1e-4, 1e-2):
        exact = _polish_at(b, cells, agents, active, x, threshold)
        if exact is not None:
            return exact
    return None


def _polish_at(b, cells: _Cells, agents, active, x: np.ndarray, threshold: float):
    """Exact optimum of the log-utility program guided by a float solution, or None.

    At the optimum each cell k has a price 1/q_k with u_i = r_ik·q_k on the
    pairs that receive cake and r_ik·q_k <= u_i elsewhere. Fixing the tight
    pairs pins u and q up to one scale per connected component; the scale
    follows from the budget balance and the cake itself from a rational
    transportation flow. The candidate is returned only if it passes an
    exact optimality check.
    """
    n, K = cells.R.shape
    R, L = cells.R, cells.L
    act = set(active)
    live = [k for k in range(K) if L[k] > 0 and any(R[i, k] > 0 for i in act)]
    if not live:
        return None
    u = np.array([float(b[i]) for i in range(n)]) + (R * x).sum(axis=1)
    if any(u[i] <= 0 for i in act):
        return None
    r = lambda i, k: cells.rates[k][agents[i]]
    length = [c[1].length for c in cells.cells]
    # pairs ordered by how close they are to tight
    edges = []
    for k in live:
        top = max(R[i, k] / u[i] for i in act)
        for i in act:
            if R[i, k] > 0:
                gap = 1 - (R[i, k] / u[i]) / top
                if gap < threshold:
                    edges.append((gap, i, k))
    edges.sort()
    parent: dict = {}

    def find(v):
        while parent.setdefault(v, v) != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    adj: dict = {}
    forest, rest = [], []
    for _, i, k in edges:
        a, c = find(("a", i)), find(("c", k))
        if a == c:
            rest.append((i, k))
            continue
        parent[a] = c
        forest.append((i, k))
        adj.setdefault(("a", i), []).append(("c", k))
        adj.setdefault(("c", k), []).append(("a", i))
    # relative values: u_i = alpha[i]·s, q_k = gamma[k]·s within a component
    rel: dict = {}
    comps = []
    for node in adj:
        if node in rel:
            continue
        rel[node] = Fraction(1)
        comp, stack = [node], [node]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w in rel:
                    continue
                i, k = (v[1], w[1]) if v[0] == "a" else (w[1], v[1])
                rel[w] = rel[v] / r(i, k) if w[0] == "c" else rel[v] * r(i, k)
                comp.append(w)
                stack.append(w)
        comps.append(comp)
    tight = forest + [(i, k) for i, k in rest if rel[("a", i)] == r(i, k) * rel[("c", k)]]
    scale = {}
    for comp in comps:
        ag = [v[1] for v in comp if v[0] == "a"]
        total = sum((length[v[1]] / rel[v] for v in comp if v[0] == "c"), ZERO) + sum((b[i] / rel[("a", i)] for i in ag), ZERO)
        s = total / len(ag)
        for v in comp:
            scale[v] = s
    U = {i: b[i] for i in act}
    Q = {}
    for v, s in scale.items():
        if v[0] == "a":
            U[v[1]] = rel[v] * s
        else:
            Q[v[1]] = rel[v] * s
    if any(k not in Q for k in live) or any(U[i] <= 0 for i in act):
        return None
    for i in act:
        for k in live:
            if r(i, k) * Q[k] > U[i]:
                return None
    net = FlowNetwork()
    for i in act:
        if ("a", i) in scale:
            supply = scale[("a", i)] - b[i] / rel[("a", i)]
            if supply < 0:
                return None
            net.add_edge("s", ("a", i), supply)
    demand = ZERO
    for k in live:
        d = length[k] / rel[("c", k)]
        net.add_edge(("c", k), "t", d)
        demand += d
    for i, k in tight:
        net.add_edge(("a", i), ("c", k), demand)
    if net.max_flow("s", "t") != demand:
        return None
    X = {}
    for i, k in tight:
        y = net.flow[("a", i)][("c", k)]
        if y > 0:
            X[i, k] = X.get((i, k), ZERO) + y * rel[("c", k)]
    return X


def _exact_pieces(inst: Instance, cells: _Cells, X: dict) -> dict[str, dict[str, list]]:
    """Lay exact cell shares out left to right in agent order."""
    pieces: dict[str, dict[str, list]] = {}
    for k, (good, iv) in enumerate(cells.cells):
        shares = [X.get((i, k), ZERO) for i in range(inst.n)]
        if not any(shares):
            top = max(range(inst.n), key=lambda i: (cells.rates[k][inst.agents[i]], -i))
            shares[top] = iv.length
        pos = iv.lo
        for a, s in zip(inst.agents, shares):
            if s > 0:
                pieces.setdefault(a, {}).setdefault(good, []).append((pos, pos + s))
                pos += s
    return pieces


def _assignments(inst: Instance, uo_only: bool) -> list[tuple[int, ...]]:
    idx = []
    for g in inst.indivisible:
        top = max(g.values.values())
        idx.append([i for i, a in enumerate(inst.agents) if not uo_only or g.values[a] == top])
    return list(itertools.product(*idx))


def _baselines(inst: Instance, combo: Sequence[int]) -> list[Fraction]:
    b = [ZERO] * inst.n
    for g, i in zip(inst.indivisible, combo):
        b[i] += g.values[inst.agents[i]]
    return b


def _approx_mnw(inst: Instance, tol: float) -> SolveResult:
    cells = _cells(inst)
    R, L = cells.R, cells.L
    can_cake = [bool(np.any((R[i] > 0) & (L > 0))) for i in range(inst.n)]
    combos = _assignments(inst, uo_only=False)
    base = [_baselines(inst, c) for c in combos]
    counts = [sum(1 for i in range(inst.n) if b[i] > 0 or can_cake[i]) for b in base]
    top = max(counts)

    def evaluate(t):
        combo, b = t
        bf = np.array([float(v) for v in b])
        active = [i for i in range(inst.n) if b[i] > 0 or can_cake[i]]
        x = _max_log_utility(bf, R, L, active)
        exact = _polish(b, cells, inst.agents, active, x)
        if exact is None:
            U = bf + (R * x).sum(axis=1)
        else:
            U = np.array([float(b[i] + sum((cells.rates[k][inst.agents[i]] * v for (j, k), v in exact.items() if j == i), ZERO)) for i in range(inst.n)])
        return float(np.sum(np.log(U[active]))), (x, exact)

    work = [(c, b) for c, b, n in zip(combos, base, counts) if n == top]
    # optimistic bound: every active agent receives all the cake it likes
    bounds = []
    for combo, b in work:
        bf = np.array([float(v) for v in b])
        ub = bf + (R * L).sum(axis=1)
        bounds.append(float(np.sum(np.log([ub[i] for i in range(inst.n) if b[i] > 0 or can_cake[i]]))))
    best_val, best = -math.inf, None
    chunk = max(1, _threads() * 4)
    for start in range(0, len(work), chunk):
        batch = [(w, ub) for w, ub in zip(work[start:start + chunk], bounds[start:start + chunk]) if ub > best_val + tol]
        results = _map(evaluate, [w for w, _ in batch])
        for (w, _), (val, x) in zip(batch, results):
            if val > best_val + tol:
                best_val, best = val, (w[0], x)
    combo, (x, exact) = best
    names = tuple(inst.agents[i] for i in combo)
    pieces = _exact_pieces(inst, cells, exact) if exact is not None else _shares_to_pieces(inst, cells, x)
    alloc = _build(inst, names, pieces)
    return _result(inst, alloc, Objective("mnw"), "approx", assignment=names)


def _leximin_shares(b: np.ndarray, R: np.ndarray, L: np.ndarray, allowed: np.ndarray, tol: float):
    """Lexicographic maximin over cell shares by successive linear programs."""
    n, K = R.shape
    nv = n * K + 1
    A_eq = np.zeros((K, nv))
    for k in range(K):
        A_eq[k, [i * K + k for i in range(n)]] = 1.0
    bounds = [(0, None) if allowed[i, k] else (0, 0) for i in range(n) for k in range(K)] + [(None, None)]

    def util_row(i):
        row = np.zeros(nv)
        row[i * K:(i + 1) * K] = R[i]
        return row

    level: dict[int, float] = {}
    free = list(range(n))
    x = None
    while free:
        rows, rhs = [], []
        for i in free:
            row = -util_row(i)
            row[-1] = 1.0
            rows.append(row)
            rhs.append(b[i])
        for i, lv in level.items():
            rows.append(-util_row(i))
            rhs.append(b[i] - lv + tol)
        c = np.zeros(nv)
        c[-1] = -1.0
        res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), A_eq=A_eq, b_eq=L, bounds=bounds, method="highs")
        t_star = res.x[-1]
        x = res.x
        blocked = []
        for i in free:
            rows2, rhs2 = [], []
            for j in free:
                rows2.append(-util_row(j))
                rhs2.append(b[j] - t_star + tol)
            for j, lv in level.items():
                rows2.append(-util_row(j))
                rhs2.append(b[j] - lv + tol)
            res2 = linprog(-util_row(i), A_ub=np.array(rows2), b_ub=np.array(rhs2), A_eq=A_eq, b_eq=L,
                           bounds=bounds, method="highs")
            if b[i] - res2.fun <= t_star + 10 * tol:
                blocked.append(i)
        if not blocked:
            blocked = [min(free, key=lambda i: b[i] + util_row(i) @ x)]
        for i in blocked:
            level[i] = t_star
        free = [i for i in free if i not in blocked]
    # final point respecting every level
    rows, rhs = [], []
    for i, lv in level.items():
        rows.append(-util_row(i))
        rhs.append(b[i] - lv + tol)
    res = linprog(np.zeros(nv), A_ub=np.array(rows), b_ub=np.array(rhs), A_eq=A_eq, b_eq=L,
                  bounds=bounds, method="highs")
    x = res.x if res.status == 0 else x
    return x[:-1].reshape(n, K)


def _lex_better(a: Sequence[float], b: Sequence[float] | None, tol: float) -> bool:
    if b is None:
        return True
    for x, y in zip(a, b):
        if x > y + tol:
            return True
        if x < y - tol:
            return False
    return False


def _approx_leximin(inst: Instance, scope: str, tol: float) -> SolveResult:
    cells = _cells(inst)
    R, L = cells.R, cells.L
    uo = scope == "uo"
    if uo and R.size:
        allowed = R == R.max(axis=0, keepdims=True)
    else:
        allowed = np.ones_like(R, dtype=bool)
    combos = _assignments(inst, uo_only=uo)

    def evaluate(combo):
        bf = np.array([float(v) for v in _baselines(inst, combo)])
        if R.shape[1] == 0:
            x = np.zeros_like(R)
        else:
            x = _leximin_shares(bf, R, L, allowed, tol)
        U = bf + (R * x).sum(axis=1)
        return tuple(sorted(U.tolist())), x

    best_key, best = None, None
    for combo, (key, x) in zip(combos, _map(evaluate, combos)):
        if _lex_better(key, best_key, tol):
            best_key, best = key, (combo, x)
    combo, x = best
    names = tuple(inst.agents[i] for i in combo)
    alloc = _build(inst, names, _shares_to_pieces(inst, cells, x))
    return _result(inst, alloc, Objective("leximin"), "approx", assignment=names)


def _check_tol(tol) -> float:
    tol = float(tol)
    if not tol > 0:
        raise ValueError("tol must be positive in approx mode")
    return tol


def solve_mnw(inst: Instance, mode: str = "exact", tol=1e-9) -> SolveResult:
    """Maximum Nash welfare: most positive utilities first, then largest product."""
    if mode == "exact":
        return solve_phi_fair(inst, Objective("mnw"))
    if mode == "approx":
        return _approx_mnw(inst, _check_tol(tol))
    raise ValueError(f"unknown mode {mode!r}")


def solve_leximin(inst: Instance, mode: str = "exact", scope: str = "uo", tol=1e-9) -> SolveResult:
    """Leximin allocation over all allocations (``scope="all"``) or utilitarian optimal ones."""
    if scope not in ("all", "uo"):
        raise ValueError(f"unknown scope {scope!r}")
    if mode == "exact":
        if scope != "uo":
            raise ValueError("exact leximin is only defined over utilitarian optimal allocations")
        return solve_phi_fair(inst, Objective("leximin"))
    if mode == "approx":
        return _approx_leximin(inst, scope, _check_tol(tol))
    raise ValueError(f"unknown mode {mode!r}")


# ----------------------------------------------------------- EF1M and MNW


def envy_cycle_elimination(inst: Instance) -> dict[str, list[str]]:
    """EF1 assignment of the indivisible goods (Lipton et al. envy-cycle procedure)."""
    agents = inst.agents
    bundles: dict[str, list[str]] = {a: [] for a in agents}

    def u(i, j):
        return sum((inst.goods[g].values[i] for g in bundles[j]), ZERO)

    for g in inst.indivisible:
        while True:
            envied = {j for i in agents for j in agents if i != j and u(i, i) < u(i, j)}
            free = [a for a in agents if a not in envied]
            if free:
                break
            # every agent is envied: walk back along envy edges until a repeat
            walk = [agents[0]]
            while True:
                cur = walk[-1]
                prev = next(i for i in agents if i != cur and u(i, i) < u(i, cur))
                if prev in walk:
                    cycle = walk[walk.index(prev):]
                    break
                walk.append(prev)
            # walk goes from envied to envier, so cycle[k+1] envies cycle[k]
            old = {a: bundles[a] for a in cycle}
            for k, a in enumerate(cycle):
                envier = cycle[(k + 1) % len(cycle)]
                bundles[envier] = old[a]
        bundles[free[0]].append(g.id)
    return bundles


def construct_ef1m(inst: Instance) -> SolveResult:
    """EF1 assignment of indivisible goods plus a perfect partition of every cake."""
    bundles = envy_cycle_elimination(inst)
    owner = {g: a for a, gs in bundles.items() for g in gs}
    assignment = tuple(owner[g.id] for g in inst.indivisible)
    pieces: dict[str, dict[str, list]] = {}
    for c in inst.divisible:
        parts = perfect_partition(inst, Piece.full(c.id), inst.n)
        for a, p in zip(inst.agents, parts):
            pieces.setdefault(a, {})[c.id] = [(iv.lo, iv.hi) for iv in p.intervals]
    alloc = _build(inst, assignment, pieces)
    utils = {a: utility(inst, a, alloc[a]) for a in inst.agents}
    return SolveResult(alloc, utils, "ef1m", "exact", None, None, assignment)


@dataclass(frozen=True)
class ImprovementWitness:
    """Moving ``good`` (or a sliver of ``cell``) from ``giver`` to ``receiver`` improves Nash welfare."""

    kind: str
    receiver: str
    giver: str
    good: str
    cell: Interval | None = None


def nash_improvement_witness(inst: Instance, alloc: Allocation, tol=0) -> ImprovementWitness | None:
    """Search single-good and infinitesimal piece transfers that improve the MNW order.

    A piece transfer of a cell held by ``j`` towards ``i`` helps when
    ``d_i * u_j > d_j * u_i`` for the two rates ``d`` on that cell, or when it
    raises the number of agents with positive utility.
    """
    tol = Fraction(tol)
    alloc = normalize_allocation(inst, alloc)
    agents = inst.agents
    u = {a: utility(inst, a, alloc[a]) for a in agents}
    base = mnw_key([u[a] for a in agents])
    cells = {c.id: cell_rates(inst, c.id) for c in inst.divisible}
    for i in agents:
        for j in agents:
            if i == j:
                continue
            for g in sorted(alloc[j].indivisible):
                vi, vj = inst.goods[g].values[i], inst.goods[g].values[j]
                new = dict(u)
                new[i] += vi
                new[j] -= vj
                key = mnw_key([new[a] for a in agents])
                if key[0] > base[0] or (key[0] == base[0] and key[1] > base[1] * (1 + tol)):
                    return ImprovementWitness("good", i, j, g)
            for c, p in alloc[j].pieces.items():
                for cell, rates in cells[c]:
                    held = sum((min(iv.hi, cell.hi) - max(iv.lo, cell.lo)
                                for iv in p.intervals if iv.lo < cell.hi and cell.lo < iv.hi), ZERO)
                    if held <= 0:
                        continue
                    di, dj = rates[i], rates[j]
                    if di <= tol:
                        continue
                    if u[i] == 0 or u[j] == 0 or di * u[j] > dj * u[i] + tol:
                        return ImprovementWitness("piece", i, j, c, cell)
    return None


def is_mnw_better(inst: Instance, a: Allocation, b: Allocation) -> bool:
    """True when allocation ``a`` is strictly better than ``b`` in the MNW order."""
    ka = mnw_key([utility(inst, x, a[x]) for x in inst.agents])
    kb = mnw_key([utility(inst, x, b[x]) for x in inst.agents])
    return ka > kb


__all__ = [
    "Objective",
    "SolveResult",
    "ImprovementWitness",
    "solve_phi_fair",
    "solve_mnw",
    "solve_leximin",
    "construct_ef1m",
    "envy_cycle_elimination",
    "nash_improvement_witness",
    "mnw_key",
]
