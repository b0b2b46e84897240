"""Dense two-phase simplex and the no-signaling value of a game.

The tableau is a numpy array of floats, or of ``Fraction`` objects when
exact arithmetic is requested. Bland's rule guarantees termination on the
highly degenerate no-signaling polytope; a Dantzig (largest reduced cost)
rule is available as an independent second method and falls back to Bland
after a run of degenerate pivots.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import BudgetExceeded, InfeasibleDetected, MagicRectError
from ..games import GameSpec, alice_alphabet, bob_alphabet

FLOAT_EPS = 1e-11
DEFAULT_NS_BUDGET = 8  # m + n
RULES = ("bland", "dantzig")


class Unbounded(MagicRectError):
    """The objective is unbounded above on the feasible set."""


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``maximize c . x + c0`` subject to ``A x = b`` and ``x >= 0``."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    c0: object = 0

    def __post_init__(self):
        if self.A.ndim != 2 or self.A.shape != (len(self.b), len(self.c)):
            raise ValueError(
                f"inconsistent shapes: A {self.A.shape}, b {len(self.b)}, c {len(self.c)}"
            )

    @property
    def n_variables(self) -> int:
        return len(self.c)


@dataclass(frozen=True, eq=False)
class LpResult:
    value: object
    x: np.ndarray
    pivots: int
    rule: str
    exact: bool


def _as_array(values, exact: bool) -> np.ndarray:
    arr = np.asarray(values)
    if exact:
        out = np.empty(arr.shape, dtype=object)
        out.flat[:] = [Fraction(v) for v in arr.flat]
        return out
    return arr.astype(float)


class _Tableau:
    """Constraint rows ``T[:-1]`` and reduced-cost row ``T[-1]``; last column is the rhs."""

    def __init__(self, T: np.ndarray, basis: list[int], exact: bool, rule: str):
        self.T = T
        self.basis = basis
        self.exact = exact
        self.rule = rule
        self.pivots = 0
        self._degenerate_run = 0

    def _positive(self, v) -> bool:
        return v > 0 if self.exact else v > FLOAT_EPS

    def pivot(self, r: int, col: int) -> None:
        T = self.T
        T[r] = T[r] / T[r, col]
        f = T[:, col].copy()
        f[r] = 0
        if self.exact:
            # Fraction arithmetic is costly; the tableau is sparse, so touch nonzeros only
            nz = np.flatnonzero(T[r] != 0)
            prow = T[r, nz]
            for i in np.flatnonzero(f != 0):
                T[i, nz] = T[i, nz] - f[i] * prow
        else:
            T -= np.outer(f, T[r])
        if not self.exact:
            T[:, col] = 0.0
            T[r, col] = 1.0
        self.basis[r] = col
        self.pivots += 1

    def _entering(self, allowed: int):
        red = self.T[-1, :allowed]
        candidates = [j for j in range(allowed) if self._positive(red[j])]
        if not candidates:
            return None
        if self.rule == "bland" or self._degenerate_run > 50:
            return candidates[0]
        return max(candidates, key=lambda j: (red[j], -j))

    def _leaving(self, col: int):
        T = self.T
        best, best_ratio = None, None
        for i in range(len(T) - 1):
            a = T[i, col]
            if not self._positive(a):
                continue
            ratio = T[i, -1] / a
            if (
                best is None
                or ratio < best_ratio - (0 if self.exact else FLOAT_EPS)
                or (
                    (ratio == best_ratio if self.exact else abs(ratio - best_ratio) <= FLOAT_EPS)
                    and self.basis[i] < self.basis[best]
                )
            ):
                best, best_ratio = i, ratio
        return best, best_ratio

    def run(self, allowed: int, max_pivots: int) -> None:
        while True:
            col = self._entering(allowed)
            if col is None:
                return
            r, ratio = self._leaving(col)
            if r is None:
                raise Unbounded("objective is unbounded above")
            degenerate = ratio == 0 if self.exact else abs(ratio) <= FLOAT_EPS
            self._degenerate_run = self._degenerate_run + 1 if degenerate else 0
            self.pivot(r, col)
            if self.pivots > max_pivots:
                raise MagicRectError(f"simplex exceeded {max_pivots} pivots")


def simplex(
    lp: LinearProgram,
    exact: bool = False,
    rule: str = "bland",
    max_pivots: int = 100_000,
) -> LpResult:
    """Solve ``lp`` by the two-phase tableau method."""
    if rule not in RULES:
        raise ValueError(f"unknown pivot rule {rule!r}; choose from {RULES}")
    A = _as_array(lp.A, exact)
    b = _as_array(lp.b, exact)
    c = _as_array(lp.c, exact)
    m, n = A.shape
    neg = b < 0
    A[neg] = -A[neg]
    b[neg] = -b[neg]

    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    T = np.empty((m + 1, n + m + 1), dtype=object if exact else float)
    T.fill(zero)
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m, dtype=int) * one if exact else np.eye(m)
    if exact:  # np.eye * Fraction gives Fraction entries on the diagonal only
        for i in range(m):
            for j in range(m):
                T[i, n + j] = one if i == j else zero
    T[:m, -1] = b
    # phase one: maximize -sum(artificials), priced out against the basis
    T[-1] = T[:m].sum(axis=0)
    T[-1, n : n + m] = zero
    tab = _Tableau(T, list(range(n, n + m)), exact, rule)
    tab.run(n, max_pivots)
    infeas = tab.T[-1, -1]
    if (infeas != 0) if exact else (abs(infeas) > 1e-9):
        raise InfeasibleDetected("linear program has no feasible point")

    # drive remaining artificials out of the basis; drop redundant rows
    keep = []
    for i in range(m):
        if tab.basis[i] < n:
            keep.append(i)
            continue
        row = tab.T[i, :n]
        nz = [j for j in range(n) if (row[j] != 0 if exact else abs(row[j]) > 1e-9)]
        if nz:
            tab.pivot(i, nz[0])
            keep.append(i)
    T2 = np.concatenate([tab.T[keep][:, :n], tab.T[keep][:, -1:]], axis=1)
    basis = [tab.basis[i] for i in keep]
    obj = np.empty(n + 1, dtype=T2.dtype)
    obj[:n] = c
    obj[n] = zero
    for i, j in enumerate(basis):
        obj = obj - c[j] * T2[i]
    T2 = np.vstack([T2, obj])
    tab2 = _Tableau(T2, basis, exact, rule)
    tab2.pivots = tab.pivots
    tab2.run(n, max_pivots)

    x = np.empty(n, dtype=object if exact else float)
    x.fill(zero)
    for i, j in enumerate(tab2.basis):
        x[j] = tab2.T[i, -1]
    value = sum((c[j] * x[j] for j in range(n)), zero) + (Fraction(lp.c0) if exact else float(lp.c0))
    return LpResult(value, x, tab2.pivots, rule, exact)


def ns_budget() -> int:
    env = os.environ.get("MAGICRECT_BUDGET")
    return int(env) if env else DEFAULT_NS_BUDGET


def ns_program(spec: GameSpec) -> tuple[LinearProgram, list]:
    """LP over full behavior tables ``P(a, b | x, y)``.

    Constraints are per-input normalization plus marginal equalities of every
    input pair against the pair with ``y = 1`` (Alice) or ``x = 1`` (Bob).
    Returns the program and the variable index ``(x, y, i, j)`` of each column.
    """
    m, n = spec.m, spec.n
    alice = {x: alice_alphabet(spec, x) for x in range(1, m + 1)}
    bob = {y: bob_alphabet(spec, y) for y in range(1, n + 1)}
    index = {}
    labels = []
    for x in range(1, m + 1):
        for y in range(1, n + 1):
            for i in range(len(alice[x])):
                for j in range(len(bob[y])):
                    index[x, y, i, j] = len(labels)
                    labels.append((x, y, i, j))
    nv = len(labels)
    rows = []
    rhs = []

    def row():
        r = np.zeros(nv, dtype=int)
        rows.append(r)
        return r

    for x in range(1, m + 1):
        for y in range(1, n + 1):
            r = row()
            for i in range(len(alice[x])):
                for j in range(len(bob[y])):
                    r[index[x, y, i, j]] = 1
            rhs.append(1)
    for x in range(1, m + 1):
        for y in range(2, n + 1):
            for i in range(len(alice[x])):
                r = row()
                for j in range(len(bob[y])):
                    r[index[x, y, i, j]] += 1
                for j in range(len(bob[1])):
                    r[index[x, 1, i, j]] -= 1
                rhs.append(0)
    for y in range(1, n + 1):
        for x in range(2, m + 1):
            for j in range(len(bob[y])):
                r = row()
                for i in range(len(alice[x])):
                    r[index[x, y, i, j]] += 1
                for i in range(len(alice[1])):
                    r[index[1, y, i, j]] -= 1
                rhs.append(0)

    c = np.empty(nv, dtype=object)
    w = Fraction(1, m * n)
    for k, (x, y, i, j) in enumerate(labels):
        c[k] = w if alice[x][i].row[y - 1] == bob[y][j].col[x - 1] else Fraction(0)
    return LinearProgram(c, np.array(rows), np.array(rhs)), labels


def ns_optimum(
    spec: GameSpec, exact: bool = False, rule: str = "bland", budget: int | None = None
):
    """Optimal no-signaling value together with an optimal behavior."""
    from ..behaviors import Behavior

    budget = ns_budget() if budget is None else budget
    if spec.m + spec.n > budget:
        raise BudgetExceeded(
            f"no-signaling LP for {spec.m}x{spec.n} exceeds the budget m+n <= {budget}"
        )
    lp, labels = ns_program(spec)
    res = simplex(lp, exact=exact, rule=rule)
    table = {}
    for (x, y, i, j), v in zip(labels, res.x):
        table.setdefault((x, y), {})[i, j] = v
    arrays = {}
    for key, entries in table.items():
        na = 1 + max(i for i, _ in entries)
        nb = 1 + max(j for _, j in entries)
        arr = np.empty((na, nb), dtype=object if exact else float)
        for (i, j), v in entries.items():
            arr[i, j] = max(v, 0.0) if not exact else v
        if not exact:
            arr /= arr.sum()
        arrays[key] = arr
    return res.value, Behavior(spec, arrays, exact=exact)


def ns_value(spec: GameSpec, exact: bool = False, rule: str = "bland", budget: int | None = None):
    """Maximum win probability over nonsignaling behaviors (``Fraction`` when exact)."""
    return ns_optimum(spec, exact=exact, rule=rule, budget=budget)[0]
