"""Finite-dimensional quantum strategies built from commuting +/-1 observables.

Alice holds one observable per cell of her row and Bob one per cell of his
column. Within an input the observables commute, so their joint spectral
projectors ``prod_j (I + s_j O_j) / 2`` give the outcome probabilities; an
outcome violating the parity rule has a zero projector because the product
of the observables is fixed.

The shared state is stored as a vector on ``C^{d_A} (x) C^{d_B}`` with Alice's
factor first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import DimensionError, ValidationError
from .games import (
    AliceOutcome,
    BobOutcome,
    GameSpec,
    alice_alphabet,
    apply_flip,
    bob_alphabet,
    canonicalize,
    transpose_game,
)

PROB_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def kron(*mats) -> np.ndarray:
    return reduce(np.kron, mats)


@dataclass(frozen=True, eq=False)
class QuantumStrategy:
    """``alice_obs[x-1][j-1]`` is Alice's observable for cell ``(x, j)``;
    ``bob_obs[y-1][i-1]`` is Bob's for cell ``(i, y)``."""

    state: np.ndarray
    dims: tuple[int, int]
    alice_obs: tuple[tuple[np.ndarray, ...], ...]
    bob_obs: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self):
        state = np.asarray(self.state, dtype=complex).reshape(-1)
        d_a, d_b = self.dims
        if state.size != d_a * d_b:
            raise DimensionError(f"state has {state.size} amplitudes, need {d_a}x{d_b}")
        object.__setattr__(self, "state", state)
        object.__setattr__(
            self, "alice_obs", tuple(tuple(np.asarray(o, dtype=complex) for o in r) for r in self.alice_obs)
        )
        object.__setattr__(
            self, "bob_obs", tuple(tuple(np.asarray(o, dtype=complex) for o in c) for c in self.bob_obs)
        )

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.alice_obs), len(self.bob_obs)

    def state_matrix(self) -> np.ndarray:
        """Amplitudes as a ``d_A x d_B`` matrix."""
        return self.state.reshape(self.dims)

    def correlation(self, x: int, y: int) -> float:
        """``<psi| A_{x,y} (x) B_{x,y} |psi>`` for the shared cell ``(x, y)``."""
        return _expectation(self.state_matrix(), self.alice_obs[x - 1][y - 1], self.bob_obs[y - 1][x - 1])


def _expectation(psi: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return float(np.real(np.sum(psi.conj() * (a @ psi @ b.T))))


def _opnorm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2)) if m.size else 0.0


def _check_dims(strategy: QuantumStrategy, spec: GameSpec) -> None:
    if strategy.shape[0] != spec.m or strategy.shape[1] != spec.n:
        raise DimensionError(f"strategy has {strategy.shape[0]} rows and {strategy.shape[1]} columns")
    d_a, d_b = strategy.dims
    for x, row in enumerate(strategy.alice_obs, 1):
        if len(row) != spec.n or any(o.shape != (d_a, d_a) for o in row):
            raise DimensionError(f"Alice's observables for row {x} do not fit")
    for y, col in enumerate(strategy.bob_obs, 1):
        if len(col) != spec.m or any(o.shape != (d_b, d_b) for o in col):
            raise DimensionError(f"Bob's observables for column {y} do not fit")


def strategy_residuals(strategy: QuantumStrategy, spec: GameSpec) -> dict[str, float]:
    """Largest operator-norm deviation of each algebraic invariant."""
    _check_dims(strategy, spec)
    out = {"hermitian": 0.0, "square": 0.0, "commute": 0.0, "product": 0.0}

    def family(obs: Sequence[np.ndarray], sign: int):
        eye = np.eye(obs[0].shape[0])
        for o in obs:
            out["hermitian"] = max(out["hermitian"], _opnorm(o - o.conj().T))
            out["square"] = max(out["square"], _opnorm(o @ o - eye))
        for i in range(len(obs)):
            for j in range(i + 1, len(obs)):
                out["commute"] = max(out["commute"], _opnorm(obs[i] @ obs[j] - obs[j] @ obs[i]))
        out["product"] = max(out["product"], _opnorm(reduce(np.matmul, obs) - sign * eye))

    for x, row in enumerate(strategy.alice_obs):
        family(row, spec.alphas[x])
    for y, col in enumerate(strategy.bob_obs):
        family(col, spec.betas[y])
    out["norm"] = abs(float(np.linalg.norm(strategy.state)) - 1.0)
    return out


def validate_strategy(strategy: QuantumStrategy, spec: GameSpec, tolerance: float = PROB_TOL) -> bool:
    return max(strategy_residuals(strategy, spec).values()) <= tolerance


def _projector(obs: Sequence[np.ndarray], signs: Sequence[int]) -> np.ndarray:
    eye = np.eye(obs[0].shape[0])
    return reduce(np.matmul, [(eye + s * o) / 2 for o, s in zip(obs, signs)])


def strategy_to_behavior(
    strategy: QuantumStrategy, spec: GameSpec, tolerance: float = 1e-10, clip: float = PROB_TOL
):
    """Outcome statistics ``<psi| P_A(a|x) (x) P_B(b|y) |psi>`` as a float behavior.

    Raises ``ValidationError`` when the strategy breaks its invariants by more
    than ``tolerance``, or when a probability leaves ``[0, 1]`` by more than
    ``clip`` before clipping.
    """
    from .behaviors import Behavior

    res = strategy_residuals(strategy, spec)
    bad = {k: v for k, v in res.items() if v > tolerance}
    if bad:
        raise ValidationError(f"strategy violates invariants: {bad}")
    psi = strategy.state_matrix()
    pa = {
        x: [_projector(strategy.alice_obs[x - 1], a.row) for a in alice_alphabet(spec, x)]
        for x in range(1, spec.m + 1)
    }
    pb = {
        y: [_projector(strategy.bob_obs[y - 1], b.col) for b in bob_alphabet(spec, y)]
        for y in range(1, spec.n + 1)
    }
    tables = {}
    for x in range(1, spec.m + 1):
        for y in range(1, spec.n + 1):
            mat = np.array([[_expectation(psi, a, b) for b in pb[y]] for a in pa[x]])
            if mat.min() < -clip or mat.max() > 1 + clip:
                raise ValidationError(f"probabilities for input ({x},{y}) leave [0, 1]")
            tables[(x, y)] = np.clip(mat, 0.0, 1.0)
    return Behavior(spec, tables)


def strategy_win_probability(strategy: QuantumStrategy, spec: GameSpec) -> float:
    """Average over cells of ``(1 + correlation) / 2``."""
    _check_dims(strategy, spec)
    total = sum(
        (1 + strategy.correlation(x, y)) / 2
        for x in range(1, spec.m + 1)
        for y in range(1, spec.n + 1)
    )
    return total / (spec.m * spec.n)


# -- built-in strategies ---------------------------------------------------------


def mermin_peres_game() -> GameSpec:
    """The 3x3 game won with certainty by :func:`mermin_peres_strategy`."""
    return GameSpec(3, 3, (1, 1, 1), (-1, -1, -1))


def mermin_peres_grid() -> list[list[np.ndarray]]:
    """Two-qubit observables; rows multiply to +I and columns to -I."""
    return [
        [kron(I2, Z), kron(Z, I2), kron(Z, Z)],
        [kron(X, I2), kron(I2, X), kron(X, X)],
        [-kron(X, Z), -kron(Z, X), kron(Y, Y)],
    ]


def mermin_peres_strategy() -> QuantumStrategy:
    """Two Bell pairs; Alice holds qubits 1 and 3, Bob holds 2 and 4.

    Regrouped as ``A(1,3) (x) B(2,4)`` the state is ``sum_ij |ij>|ij> / 2``,
    so ``<A (x) B> = tr(A B^T) / 4`` and every cell correlation is 1.
    """
    grid = mermin_peres_grid()
    state = np.eye(4, dtype=complex).reshape(-1) / 2
    alice = tuple(tuple(row) for row in grid)
    bob = tuple(tuple(grid[i][j] for i in range(3)) for j in range(3))
    return QuantumStrategy(state, (4, 4), alice, bob)


def chsh_base_game() -> GameSpec:
    return GameSpec(2, 2, (1, 1), (1, -1))


def chsh_bijections() -> tuple[dict, dict]:
    """Maps from CHSH ``(input, output bit)`` pairs to 2x2 outcomes.

    Alice's bit ``a`` on input ``x`` becomes row ``x + 1`` filled with
    ``(-1)^a`` twice. Bob's bit on input 0 fills column 1 the same way; on
    input 1 the second cell is negated to meet the column rule. A CHSH win
    ``a XOR b = x AND y`` corresponds exactly to agreement in the shared cell.
    """
    p, m = 1, -1
    alice = {
        (0, 0): AliceOutcome(1, (p, p)),
        (0, 1): AliceOutcome(1, (m, m)),
        (1, 0): AliceOutcome(2, (p, p)),
        (1, 1): AliceOutcome(2, (m, m)),
    }
    bob = {
        (0, 0): BobOutcome(1, (p, p)),
        (0, 1): BobOutcome(1, (m, m)),
        (1, 0): BobOutcome(2, (p, m)),
        (1, 1): BobOutcome(2, (m, p)),
    }
    return alice, bob


def chsh_strategy_2x2() -> QuantumStrategy:
    """Optimal CHSH measurements carried onto :func:`chsh_base_game`.

    Alice measures ``Z`` or ``X`` and writes the result in both cells.
    Bob measures ``(Z + X)/sqrt2`` or ``(Z - X)/sqrt2``; each last cell is the
    parity sign times the other cell, which is how the bijections read.
    """
    spec = chsh_base_game()
    a_ops = [Z, X]
    r = 1 / math.sqrt(2)
    b_ops = [r * (Z + X), r * (Z - X)]
    alice = tuple((a, spec.alphas[x] * a) for x, a in enumerate(a_ops))
    bob = tuple((b, spec.betas[y] * b) for y, b in enumerate(b_ops))
    state = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
    return QuantumStrategy(state, (2, 2), alice, bob)


def embed_strategy(strategy: QuantumStrategy, spec: GameSpec, m2: int, n2: int):
    """Pad with identity observables so every new cell reads +1 for both players.

    Returns the padded game (extra parameters +1) and the padded strategy.
    """
    _check_dims(strategy, spec)
    if m2 < spec.m or n2 < spec.n:
        raise DimensionError(f"cannot embed {spec.m}x{spec.n} into {m2}x{n2}")
    d_a, d_b = strategy.dims
    ia, ib = np.eye(d_a, dtype=complex), np.eye(d_b, dtype=complex)
    dm, dn = m2 - spec.m, n2 - spec.n
    alice = [tuple(row) + (ia,) * dn for row in strategy.alice_obs] + [(ia,) * n2] * dm
    bob = [tuple(col) + (ib,) * dm for col in strategy.bob_obs] + [(ib,) * m2] * dn
    image = GameSpec(m2, n2, spec.alphas + (1,) * dm, spec.betas + (1,) * dn)
    return image, QuantumStrategy(strategy.state, strategy.dims, tuple(alice), tuple(bob))


def lower_bound_2xn_game(n: int) -> GameSpec:
    if n < 2:
        raise DimensionError("need n >= 2")
    return embed_strategy(chsh_strategy_2x2(), chsh_base_game(), 2, n)[0]


def lower_bound_2xn_strategy(n: int) -> QuantumStrategy:
    """CHSH strategy padded to 2 x n; wins with ``1 - (2 - sqrt2) / (2n)``."""
    if n < 2:
        raise DimensionError("need n >= 2")
    return embed_strategy(chsh_strategy_2x2(), chsh_base_game(), 2, n)[1]


def lower_bound_2xn_value(n: int) -> float:
    return 1 - (2 - math.sqrt(2)) / (2 * n)


# -- equivalences ---------------------------------------------------------------


def flip_strategy(strategy: QuantumStrategy, spec: GameSpec, i: int, j: int):
    """Negate both players' observables for cell ``(i, j)``; follows ``apply_flip``."""
    _check_dims(strategy, spec)
    image = apply_flip(spec, i, j)[0]
    alice = [list(r) for r in strategy.alice_obs]
    bob = [list(c) for c in strategy.bob_obs]
    alice[i - 1][j - 1] = -alice[i - 1][j - 1]
    bob[j - 1][i - 1] = -bob[j - 1][i - 1]
    return image, QuantumStrategy(
        strategy.state, strategy.dims, tuple(map(tuple, alice)), tuple(map(tuple, bob))
    )


def transport_strategy(strategy: QuantumStrategy, spec: GameSpec, target: GameSpec) -> QuantumStrategy:
    """Carry a strategy for ``spec`` onto any game of the same shape."""
    if spec.shape != target.shape:
        raise DimensionError("games must share their dimensions")
    flips = list(canonicalize(spec)) + list(canonicalize(target))
    cur = spec
    for i, j in flips:
        cur, strategy = flip_strategy(strategy, cur, i, j)
    assert cur == target
    return strategy


def transpose_strategy(strategy: QuantumStrategy, spec: GameSpec):
    """Swap the players' roles; the state's tensor factors are swapped too."""
    _check_dims(strategy, spec)
    d_a, d_b = strategy.dims
    state = strategy.state_matrix().T.reshape(-1)
    return transpose_game(spec), QuantumStrategy(state, (d_b, d_a), strategy.bob_obs, strategy.alice_obs)


def builtin_strategies() -> dict[str, tuple[GameSpec, QuantumStrategy]]:
    """Named strategies with the game each one is built for."""
    out = {
        "mermin-peres": (mermin_peres_game(), mermin_peres_strategy()),
        "chsh": (chsh_base_game(), chsh_strategy_2x2()),
    }
    for n in range(3, 7):
        out[f"lower-bound-2x{n}"] = (lower_bound_2xn_game(n), lower_bound_2xn_strategy(n))
    return out


def deterministic_as_quantum(strategy, spec: GameSpec) -> QuantumStrategy:
    """A deterministic strategy as scalar (1 x 1) observables on a product state."""
    strategy.validate(spec)
    alice = tuple(
        tuple(np.array([[s]], dtype=complex) for s in strategy.alice_tables[x].row)
        for x in range(1, spec.m + 1)
    )
    bob = tuple(
        tuple(np.array([[s]], dtype=complex) for s in strategy.bob_tables[y].col)
        for y in range(1, spec.n + 1)
    )
    return QuantumStrategy(np.ones(1, dtype=complex), (1, 1), alice, bob)


def best_builtin_strategy(spec: GameSpec) -> tuple[QuantumStrategy, float]:
    """Strongest built-in strategy for ``spec`` and its win probability.

    Mermin-Peres padded to size when both dimensions are at least 3, else the
    padded CHSH strategy, else (a single row or column) the classical optimum.
    """
    m, n = spec.shape
    if m >= 3 and n >= 3:
        base_spec, base = mermin_peres_game(), mermin_peres_strategy()
    elif m >= 2 and n >= 2:
        base_spec, base = chsh_base_game(), chsh_strategy_2x2()
    else:
        from .classical import brute_force_classical_value

        strat = deterministic_as_quantum(brute_force_classical_value(spec)[1], spec)
        return strat, strategy_win_probability(strat, spec)
    big_spec, big = embed_strategy(base, base_spec, m, n)
    strat = transport_strategy(big, big_spec, spec)
    return strat, strategy_win_probability(strat, spec)
