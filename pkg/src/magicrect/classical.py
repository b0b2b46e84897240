"""Exact classical values by exhaustive search over deterministic strategies.

Shared randomness never helps: the local polytope is the convex hull of
deterministic behaviors, so its maximum over a linear objective sits at one
of them. For a fixed choice of Alice's tables the score separates over the
columns, so each column's best Bob answer is found independently.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from fractions import Fraction

from .errors import BudgetExceeded, InvalidOutcome
from .games import (
    AliceOutcome,
    BobOutcome,
    GameSpec,
    alice_alphabet,
    bob_alphabet,
    check_alice,
    check_bob,
    format_signs,
    is_win,
)

DEFAULT_CLASSICAL_BUDGET = 7  # m + n


def classical_budget() -> int:
    env = os.environ.get("MAGICRECT_BUDGET")
    return int(env) if env else DEFAULT_CLASSICAL_BUDGET


@dataclass(frozen=True)
class DeterministicStrategy:
    alice_tables: dict[int, AliceOutcome]
    bob_tables: dict[int, BobOutcome]

    def validate(self, spec: GameSpec) -> None:
        if set(self.alice_tables) != set(range(1, spec.m + 1)):
            raise InvalidOutcome("Alice needs one table per row")
        if set(self.bob_tables) != set(range(1, spec.n + 1)):
            raise InvalidOutcome("Bob needs one table per column")
        for x, a in self.alice_tables.items():
            if a.x != x:
                raise InvalidOutcome(f"table for row {x} is labeled row {a.x}")
            check_alice(spec, a)
        for y, b in self.bob_tables.items():
            if b.y != y:
                raise InvalidOutcome(f"table for column {y} is labeled column {b.y}")
            check_bob(spec, b)

    def to_dict(self) -> dict:
        return {
            "alice": {str(x): format_signs(a.row) for x, a in sorted(self.alice_tables.items())},
            "bob": {str(y): format_signs(b.col) for y, b in sorted(self.bob_tables.items())},
        }

    def grids(self) -> tuple[list[str], list[str]]:
        """Alice's and Bob's filled tables, one string per grid row."""
        m = len(self.alice_tables)
        alice = [format_signs(self.alice_tables[x].row) for x in range(1, m + 1)]
        n = len(self.bob_tables)
        bob = [
            format_signs(self.bob_tables[y].col[x - 1] for y in range(1, n + 1))
            for x in range(1, m + 1)
        ]
        return alice, bob


def deterministic_win_probability(spec: GameSpec, strategy: DeterministicStrategy) -> Fraction:
    strategy.validate(spec)
    wins = sum(
        is_win(spec, x, y, strategy.alice_tables[x], strategy.bob_tables[y])
        for x in range(1, spec.m + 1)
        for y in range(1, spec.n + 1)
    )
    return Fraction(wins, spec.m * spec.n)


def brute_force_classical_value(
    spec: GameSpec, budget: int | None = None
) -> tuple[Fraction, DeterministicStrategy]:
    """Maximum win probability over deterministic strategies, with a witness.

    Ties go to the lexicographically first pair (Alice's tables first, then
    Bob's), each table in natural alphabet order.
    """
    budget = classical_budget() if budget is None else budget
    if spec.m + spec.n > budget:
        raise BudgetExceeded(
            f"classical search for {spec.m}x{spec.n} exceeds the budget m+n <= {budget}"
        )
    m, n = spec.m, spec.n
    alice_opts = [alice_alphabet(spec, x) for x in range(1, m + 1)]
    bob_opts = [bob_alphabet(spec, y) for y in range(1, n + 1)]

    best_score, best = -1, None
    for choice in itertools.product(*alice_opts):
        score = 0
        responses = []
        for y in range(1, n + 1):
            wanted = tuple(a.row[y - 1] for a in choice)
            top, top_b = -1, None
            for b in bob_opts[y - 1]:
                s = sum(u == v for u, v in zip(wanted, b.col))
                if s > top:
                    top, top_b = s, b
            score += top
            responses.append(top_b)
        if score > best_score:
            best_score, best = score, (choice, responses)
            if score == m * n:
                break
    choice, responses = best
    strategy = DeterministicStrategy(
        {a.x: a for a in choice}, {b.y: b for b in responses}
    )
    return Fraction(best_score, m * n), strategy


def deterministic_behavior(spec: GameSpec, strategy: DeterministicStrategy):
    """The 0/1 behavior produced by a deterministic strategy."""
    from .behaviors import Behavior

    strategy.validate(spec)

    def point(a, b):
        hit = strategy.alice_tables[a.x] == a and strategy.bob_tables[b.y] == b
        return Fraction(int(hit))

    return Behavior.from_function(spec, point, exact=True)
