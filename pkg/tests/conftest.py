"""Shared helpers: expensive solves are cached for the whole session so the
property suite and the acceptance checks do not repeat them."""

from __future__ import annotations

import random
from fractions import Fraction
from functools import lru_cache

import pytest

from magicrect.behaviors import Behavior
from magicrect.games import GameSpec, alice_alphabet, all_games, bob_alphabet

SOLVER_TOL = 1e-6


def shapes_up_to(total: int):
    """Every ``(m, n)`` with ``m + n <= total``, both orientations."""
    return [(m, n) for m in range(1, total) for n in range(1, total) if m + n <= total]


def games_up_to(total: int) -> list[GameSpec]:
    return [g for m, n in shapes_up_to(total) for g in all_games(m, n)]


def random_behavior(spec: GameSpec, seed: int) -> Behavior:
    """Arbitrary exact behavior (no-signaling not required)."""
    rng = random.Random(seed)
    tables = {}
    for x in range(1, spec.m + 1):
        for y in range(1, spec.n + 1):
            na, nb = len(alice_alphabet(spec, x)), len(bob_alphabet(spec, y))
            w = [[rng.randint(0, 5) for _ in range(nb)] for _ in range(na)]
            w[0][0] += 1
            total = sum(map(sum, w))
            tables[(x, y)] = [[Fraction(v, total) for v in row] for row in w]
    return Behavior(spec, tables, exact=True)


@lru_cache(maxsize=None)
def npa(spec: GameSpec, level: str) -> float:
    from magicrect.optim import npa_value

    sol = npa_value(spec, level)
    assert sol.status in ("optimal", "trivial"), (spec, level, sol.status)
    return sol.value


@lru_cache(maxsize=None)
def ns(spec: GameSpec) -> float:
    from magicrect.optim import ns_value

    return float(ns_value(spec))


@lru_cache(maxsize=None)
def classical(spec: GameSpec):
    from magicrect.classical import brute_force_classical_value

    return brute_force_classical_value(spec)[0]


@lru_cache(maxsize=None)
def builtin_quantum(spec: GameSpec) -> float:
    from magicrect.quantum import best_builtin_strategy

    return best_builtin_strategy(spec)[1]


def ordering_chain(spec: GameSpec, tol: float = SOLVER_TOL) -> list[str]:
    """Violations of ns >= npa1 >= npa1ab >= quantum >= classical, as messages."""
    chain = [
        ("ns", ns(spec)),
        ("npa1", npa(spec, "1")),
        ("npa1ab", npa(spec, "1+AB")),
        ("quantum", builtin_quantum(spec)),
        ("classical", float(classical(spec))),
    ]
    bad = []
    for (hi_name, hi), (lo_name, lo) in zip(chain, chain[1:]):
        if hi < lo - tol:
            bad.append(f"{spec}: {hi_name}={hi} < {lo_name}={lo}")
    return bad


@pytest.fixture
def budget_env(monkeypatch):
    """Set MAGICRECT_BUDGET for one test."""

    def setter(value):
        if value is None:
            monkeypatch.delenv("MAGICRECT_BUDGET", raising=False)
        else:
            monkeypatch.setenv("MAGICRECT_BUDGET", str(value))

    return setter


# acceptance lines, echoed once more in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
