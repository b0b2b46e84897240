"""Magic rectangle games: parameters, natural alphabets, win predicate and
the structural maps between games (sign flips, transposition, padding).

Row and column indices are 1-based throughout, matching the usual way the
cells of an ``m x n`` table are addressed. Signs are the integers +1 and -1.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import DimensionError, InvalidOutcome, ParityError

Signs = tuple[int, ...]
FlipSequence = tuple[tuple[int, int], ...]


def parse_signs(value: str | Iterable[int]) -> Signs:
    """Parse ``"+-+"`` or an iterable of +/-1 integers into a sign tuple."""
    if isinstance(value, str):
        table = {"+": 1, "-": -1}
        try:
            return tuple(table[ch] for ch in value.strip())
        except KeyError as exc:
            raise ValueError(f"sign strings may only contain '+' and '-': {value!r}") from exc
    out = tuple(int(v) for v in value)
    if any(v not in (1, -1) for v in out):
        raise ValueError(f"signs must be +1 or -1, got {out}")
    return out


def format_signs(signs: Sequence[int]) -> str:
    return "".join("+" if s > 0 else "-" for s in signs)


def _prod(signs: Iterable[int]) -> int:
    return math.prod(signs)


@dataclass(frozen=True)
class GameSpec:
    """One ``m x n`` magic rectangle game.

    Alice must fill row ``x`` with signs multiplying to ``alphas[x-1]``, Bob
    must fill column ``y`` with signs multiplying to ``betas[y-1]``, and the
    product of every parameter is -1.
    """

    m: int
    n: int
    alphas: Signs
    betas: Signs

    def __post_init__(self):
        object.__setattr__(self, "alphas", parse_signs(self.alphas))
        object.__setattr__(self, "betas", parse_signs(self.betas))
        if self.m < 1 or self.n < 1:
            raise DimensionError(f"dimensions must be positive, got {self.m}x{self.n}")
        if len(self.alphas) != self.m or len(self.betas) != self.n:
            raise DimensionError(
                f"{self.m}x{self.n} game needs {self.m} alphas and {self.n} betas, "
                f"got {len(self.alphas)} and {len(self.betas)}"
            )
        if _prod(self.alphas) * _prod(self.betas) != -1:
            raise ParityError(
                f"parameter product must be -1: alphas={format_signs(self.alphas)} "
                f"betas={format_signs(self.betas)}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.m, self.n

    def to_dict(self) -> dict:
        return {"m": self.m, "n": self.n, "alphas": list(self.alphas), "betas": list(self.betas)}

    @classmethod
    def from_dict(cls, data: dict) -> "GameSpec":
        try:
            return cls(int(data["m"]), int(data["n"]), data["alphas"], data["betas"])
        except KeyError as exc:
            raise DimensionError(f"game spec is missing field {exc}") from None

    def __str__(self) -> str:
        return f"{self.m}x{self.n}[{format_signs(self.alphas)}|{format_signs(self.betas)}]"


def validate_game(m: int, n: int, alphas, betas) -> GameSpec:
    return GameSpec(m, n, parse_signs(alphas), parse_signs(betas))


def canonical_game(m: int, n: int) -> GameSpec:
    """All parameters +1 except the last column parameter."""
    return GameSpec(m, n, (1,) * m, (1,) * (n - 1) + (-1,))


def all_games(m: int, n: int) -> list[GameSpec]:
    """Every valid ``m x n`` game, in lexicographic parameter order."""
    games = []
    for params in itertools.product((1, -1), repeat=m + n):
        if _prod(params) == -1:
            games.append(GameSpec(m, n, params[:m], params[m:]))
    return games


def load_game(path: str | Path) -> GameSpec:
    with open(path) as fh:
        return GameSpec.from_dict(json.load(fh))


def dump_game(spec: GameSpec, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(spec.to_dict(), fh)


def classical_value_formula(m: int, n: int) -> Fraction:
    if m < 1 or n < 1:
        raise DimensionError("dimensions must be positive")
    return 1 - Fraction(1, m * n)


# -- natural alphabets -------------------------------------------------------


@dataclass(frozen=True, order=True)
class AliceOutcome:
    x: int
    row: Signs


@dataclass(frozen=True, order=True)
class BobOutcome:
    y: int
    col: Signs


@lru_cache(maxsize=None)
def sign_strings(length: int, parity: int) -> tuple[Signs, ...]:
    """All sign strings of a given length and product, '+' sorting before '-'."""
    return tuple(s for s in itertools.product((1, -1), repeat=length) if _prod(s) == parity)


def alice_alphabet(spec: GameSpec, x: int) -> list[AliceOutcome]:
    return [AliceOutcome(x, row) for row in sign_strings(spec.n, spec.alphas[x - 1])]


def bob_alphabet(spec: GameSpec, y: int) -> list[BobOutcome]:
    return [BobOutcome(y, col) for col in sign_strings(spec.m, spec.betas[y - 1])]


def natural_alphabets(spec: GameSpec) -> tuple[list[AliceOutcome], list[BobOutcome]]:
    alice = [a for x in range(1, spec.m + 1) for a in alice_alphabet(spec, x)]
    bob = [b for y in range(1, spec.n + 1) for b in bob_alphabet(spec, y)]
    return alice, bob


def check_alice(spec: GameSpec, alice: AliceOutcome) -> None:
    if not 1 <= alice.x <= spec.m or len(alice.row) != spec.n:
        raise InvalidOutcome(f"{alice} does not fit a {spec.m}x{spec.n} game")
    if _prod(alice.row) != spec.alphas[alice.x - 1]:
        raise InvalidOutcome(f"row {format_signs(alice.row)} violates alpha_{alice.x}")


def check_bob(spec: GameSpec, bob: BobOutcome) -> None:
    if not 1 <= bob.y <= spec.n or len(bob.col) != spec.m:
        raise InvalidOutcome(f"{bob} does not fit a {spec.m}x{spec.n} game")
    if _prod(bob.col) != spec.betas[bob.y - 1]:
        raise InvalidOutcome(f"column {format_signs(bob.col)} violates beta_{bob.y}")


def is_win(spec: GameSpec, x: int, y: int, alice: AliceOutcome, bob: BobOutcome) -> bool:
    """Both players wrote the same sign in the shared cell ``(x, y)``."""
    if alice.x != x or bob.y != y:
        raise InvalidOutcome(f"outcomes answer inputs ({alice.x},{bob.y}), not ({x},{y})")
    check_alice(spec, alice)
    check_bob(spec, bob)
    return alice.row[y - 1] == bob.col[x - 1]


# -- sign-flip equivalences ----------------------------------------------------

AliceMap = Callable[[AliceOutcome], AliceOutcome]
BobMap = Callable[[BobOutcome], BobOutcome]


def _negate(signs: Signs, k: int) -> Signs:
    return signs[:k] + (-signs[k],) + signs[k + 1 :]


def apply_flip(spec: GameSpec, i: int, j: int) -> tuple[GameSpec, AliceMap, BobMap]:
    """Flip the signs of ``alphas[i]`` and ``betas[j]``.

    Returns the image game with the two outcome relabelings that carry the
    natural alphabets across: Alice negates cell ``j`` of row ``i``, Bob
    negates cell ``i`` of column ``j``.
    """
    if not (1 <= i <= spec.m and 1 <= j <= spec.n):
        raise IndexError(f"flip ({i},{j}) outside a {spec.m}x{spec.n} game")
    image = GameSpec(spec.m, spec.n, _negate(spec.alphas, i - 1), _negate(spec.betas, j - 1))

    def relabel_alice(a: AliceOutcome) -> AliceOutcome:
        return AliceOutcome(a.x, _negate(a.row, j - 1)) if a.x == i else a

    def relabel_bob(b: BobOutcome) -> BobOutcome:
        return BobOutcome(b.y, _negate(b.col, i - 1)) if b.y == j else b

    return image, relabel_alice, relabel_bob


def normalize_flips(flips: Iterable[tuple[int, int]]) -> FlipSequence:
    """Flips commute and square to the identity, so only parity per pair matters."""
    counts: dict[tuple[int, int], int] = {}
    for pair in flips:
        pair = (int(pair[0]), int(pair[1]))
        counts[pair] = counts.get(pair, 0) ^ 1
    return tuple(sorted(p for p, odd in counts.items() if odd))


def apply_flips(spec: GameSpec, flips: Iterable[tuple[int, int]]) -> GameSpec:
    for i, j in flips:
        spec = apply_flip(spec, i, j)[0]
    return spec


def canonicalize(spec: GameSpec) -> FlipSequence:
    """Flip sequence taking ``spec`` to :func:`canonical_game`.

    Negative alphas are pushed onto the last beta one at a time; afterwards
    every negative beta other than the last is cleared together with the
    last one by a pair of flips sharing row 1.
    """
    flips: list[tuple[int, int]] = []
    betas = list(spec.betas)
    for i, a in enumerate(spec.alphas, start=1):
        if a == -1:
            flips.append((i, spec.n))
            betas[-1] *= -1
    for j in range(1, spec.n):
        if betas[j - 1] == -1:
            flips += [(1, j), (1, spec.n)]
    return normalize_flips(flips)


def transpose_game(spec: GameSpec) -> GameSpec:
    return GameSpec(spec.n, spec.m, spec.betas, spec.alphas)


# -- behavior transformations --------------------------------------------------
# These act on behaviors.Behavior; imported lazily since that module builds on this one.


def relabel_behavior(behavior, image: GameSpec, f: AliceMap, g: BobMap):
    """Push a behavior through alphabet bijections onto the game ``image``."""
    from .behaviors import Behavior

    spec = behavior.spec
    tables = {}
    for (x, y), mat in behavior.table.items():
        src_a, src_b = alice_alphabet(spec, x), bob_alphabet(spec, y)
        dst_a = {a: k for k, a in enumerate(alice_alphabet(image, f(src_a[0]).x))}
        dst_b = {b: k for k, b in enumerate(bob_alphabet(image, g(src_b[0]).y))}
        rows = [dst_a[f(a)] for a in src_a]
        cols = [dst_b[g(b)] for b in src_b]
        new = behavior.zeros(len(dst_a), len(dst_b))
        for r, rr in enumerate(rows):
            for c, cc in enumerate(cols):
                new[rr, cc] = mat[r, c]
        tables[(f(src_a[0]).x, g(src_b[0]).y)] = new
    return Behavior(image, tables, exact=behavior.exact)


def flip_behavior(behavior, i: int, j: int):
    image, f, g = apply_flip(behavior.spec, i, j)
    return relabel_behavior(behavior, image, f, g)


def transport_behavior(behavior, flips: Iterable[tuple[int, int]]):
    for i, j in flips:
        behavior = flip_behavior(behavior, i, j)
    return behavior


def transport_to(behavior, target: GameSpec):
    """Carry a behavior onto any other game of the same dimension."""
    if behavior.spec.shape != target.shape:
        raise DimensionError(f"cannot transport {behavior.spec} onto {target}")
    flips = normalize_flips(canonicalize(behavior.spec) + canonicalize(target))
    return transport_behavior(behavior, flips)


def transpose_behavior(behavior):
    """Swap the players: ``P'(b, a | y, x) = P(a, b | x, y)``."""
    from .behaviors import Behavior

    tables = {(y, x): mat.T.copy() for (x, y), mat in behavior.table.items()}
    return Behavior(transpose_game(behavior.spec), tables, exact=behavior.exact)


def _pad_behavior(spec: GameSpec, behavior, m2: int, n2: int, front: bool):
    from .behaviors import Behavior, alice_marginal, bob_marginal

    m, n = spec.m, spec.n
    dm, dn = m2 - m, n2 - n
    if front:
        image = GameSpec(m2, n2, (1,) * dm + spec.alphas, (1,) * dn + spec.betas)

        def pad(signs, k):
            return (1,) * k + signs

        old_x, old_y = (lambda x: x - dm), (lambda y: y - dn)
    else:
        image = GameSpec(m2, n2, spec.alphas + (1,) * dm, spec.betas + (1,) * dn)

        def pad(signs, k):
            return signs + (1,) * k

        old_x, old_y = (lambda x: x), (lambda y: y)

    def alice_part(x):
        """(index in padded alphabet, probability) pairs for Alice on padded input x."""
        idx = {a.row: k for k, a in enumerate(alice_alphabet(image, x))}
        xs = old_x(x)
        if 1 <= xs <= m:
            return [idx[pad(a.row, dn)] for a in alice_alphabet(spec, xs)], xs
        return [idx[(1,) * n2]], None

    def bob_part(y):
        idx = {b.col: k for k, b in enumerate(bob_alphabet(image, y))}
        ys = old_y(y)
        if 1 <= ys <= n:
            return [idx[pad(b.col, dm)] for b in bob_alphabet(spec, ys)], ys
        return [idx[(1,) * m2]], None

    one = Fraction(1) if behavior.exact else 1.0
    tables = {}
    for x in range(1, m2 + 1):
        rows, xs = alice_part(x)
        for y in range(1, n2 + 1):
            cols, ys = bob_part(y)
            new = behavior.zeros(len(alice_alphabet(image, x)), len(bob_alphabet(image, y)))
            if xs is not None and ys is not None:
                block = behavior.table[(xs, ys)]
            elif xs is not None:
                block = alice_marginal(behavior, xs, 1).reshape(-1, 1)
            elif ys is not None:
                block = bob_marginal(behavior, 1, ys).reshape(1, -1)
            else:
                block = None
            if block is None:
                new[rows[0], cols[0]] = one
            else:
                for r, rr in enumerate(rows):
                    for c, cc in enumerate(cols):
                        new[rr, cc] = block[r, c]
            tables[(x, y)] = new
    return image, Behavior(image, tables, exact=behavior.exact)


def embed_behavior(spec_small: GameSpec, behavior_small, m2: int, n2: int):
    """Pad a behavior to a larger game whose extra parameters are all +1.

    Players append +1 entries to their answers and answer all +1 on the new
    inputs, so every new input pair is won with certainty.
    """
    if behavior_small.spec != spec_small:
        raise DimensionError("behavior does not belong to the given game")
    if m2 < spec_small.m or n2 < spec_small.n:
        raise DimensionError(f"cannot embed {spec_small.m}x{spec_small.n} into {m2}x{n2}")
    return _pad_behavior(spec_small, behavior_small, m2, n2, front=False)


def distinguished_extension(spec_small: GameSpec, behavior_small):
    """Grow an ``(m-1) x (n-1)`` behavior into an ``m x n`` one answering
    deterministically (all +1) on row 1 and column 1."""
    if behavior_small.spec != spec_small:
        raise DimensionError("behavior does not belong to the given game")
    return _pad_behavior(spec_small, behavior_small, spec_small.m + 1, spec_small.n + 1, front=True)


def embedded_value(m: int, n: int, m2: int, n2: int, value):
    """Win probability of a padded behavior given the small one's value."""
    if isinstance(value, (int, Fraction)):
        return 1 - Fraction(m * n, m2 * n2) * (1 - value)
    return 1 - (m * n) / (m2 * n2) * (1 - value)
