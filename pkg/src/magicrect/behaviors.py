"""Behaviors ``P(a, b | x, y)`` over the natural alphabets of a game.

A behavior stores one probability matrix per input pair ``(x, y)``; rows are
Alice's outcomes for ``x`` and columns Bob's outcomes for ``y``, both in the
order produced by :func:`magicrect.games.alice_alphabet` and
:func:`magicrect.games.bob_alphabet`. Matrices hold either ``Fraction``
objects (exact mode) or floats.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .errors import DimensionError, LabelMismatch
from .games import (
    AliceOutcome,
    BobOutcome,
    GameSpec,
    alice_alphabet,
    bob_alphabet,
    format_signs,
    parse_signs,
    transport_to,
)

FLOAT_TOL = 1e-9


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    raise TypeError(f"exact behaviors need rational entries, got {v!r}")


@dataclass(frozen=True, eq=False)
class Behavior:
    spec: GameSpec
    table: Mapping[tuple[int, int], np.ndarray]
    exact: bool = False
    nonsignaling_checked: bool = field(default=False, compare=False)

    def __post_init__(self):
        spec = self.spec
        fixed = {}
        for x in range(1, spec.m + 1):
            for y in range(1, spec.n + 1):
                if (x, y) not in self.table:
                    raise DimensionError(f"behavior has no table for input ({x},{y})")
                shape = (len(alice_alphabet(spec, x)), len(bob_alphabet(spec, y)))
                raw = self.table[(x, y)]
                if self.exact:
                    mat = np.empty(shape, dtype=object)
                    src = np.asarray(raw, dtype=object)
                    if src.shape != shape:
                        raise DimensionError(f"table ({x},{y}) has shape {src.shape}, need {shape}")
                    for idx in np.ndindex(shape):
                        mat[idx] = _as_fraction(src[idx])
                    if any(v < 0 for v in mat.flat) or sum(mat.flat) != 1:
                        raise ValueError(f"table ({x},{y}) is not a probability distribution")
                else:
                    mat = np.array(raw, dtype=float)
                    if mat.shape != shape:
                        raise DimensionError(f"table ({x},{y}) has shape {mat.shape}, need {shape}")
                    if mat.min() < -FLOAT_TOL or abs(mat.sum() - 1.0) > FLOAT_TOL:
                        raise ValueError(f"table ({x},{y}) is not a probability distribution")
                mat.setflags(write=False)
                fixed[(x, y)] = mat
        object.__setattr__(self, "table", fixed)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Behavior):
            return NotImplemented
        return (
            self.spec == other.spec
            and self.exact == other.exact
            and self.table.keys() == other.table.keys()
            and all(np.array_equal(v, other.table[k]) for k, v in self.table.items())
        )

    __hash__ = None

    def __getitem__(self, xy: tuple[int, int]) -> np.ndarray:
        return self.table[xy]

    def zeros(self, rows: int, cols: int) -> np.ndarray:
        if self.exact:
            out = np.empty((rows, cols), dtype=object)
            out.fill(Fraction(0))
            return out
        return np.zeros((rows, cols))

    def prob(self, alice: AliceOutcome, bob: BobOutcome):
        r = alice_alphabet(self.spec, alice.x).index(alice)
        c = bob_alphabet(self.spec, bob.y).index(bob)
        return self.table[(alice.x, bob.y)][r, c]

    def to_float(self) -> "Behavior":
        if not self.exact:
            return self
        return Behavior(self.spec, {k: v.astype(float) for k, v in self.table.items()})

    @classmethod
    def from_function(cls, spec: GameSpec, fn: Callable, exact: bool = False) -> "Behavior":
        """Build from ``fn(alice_outcome, bob_outcome) -> probability``."""
        tables = {}
        for x in range(1, spec.m + 1):
            for y in range(1, spec.n + 1):
                tables[(x, y)] = [
                    [fn(a, b) for b in bob_alphabet(spec, y)] for a in alice_alphabet(spec, x)
                ]
        return cls(spec, tables, exact=exact)

    # -- JSON ----------------------------------------------------------------

    def to_dict(self) -> dict:
        def enc(v):
            return str(v) if self.exact else float(v)

        return {
            "spec": self.spec.to_dict(),
            "mode": "rational" if self.exact else "float",
            "alphabets": {
                "alice": {
                    str(x): [format_signs(a.row) for a in alice_alphabet(self.spec, x)]
                    for x in range(1, self.spec.m + 1)
                },
                "bob": {
                    str(y): [format_signs(b.col) for b in bob_alphabet(self.spec, y)]
                    for y in range(1, self.spec.n + 1)
                },
            },
            "table": {
                f"{x},{y}": [[enc(v) for v in row] for row in mat]
                for (x, y), mat in sorted(self.table.items())
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Behavior":
        spec = GameSpec.from_dict(data["spec"])
        exact = data.get("mode", "float") == "rational"
        tables = {}
        for key, rows in data["table"].items():
            x, y = (int(t) for t in key.split(","))
            tables[(x, y)] = rows
        return cls(spec, tables, exact=exact)


def load_behavior(path: str | Path) -> Behavior:
    with open(path) as fh:
        return Behavior.from_dict(json.load(fh))


def dump_behavior(behavior: Behavior, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(behavior.to_dict(), fh, indent=1, sort_keys=True)


def alice_marginal(behavior: Behavior, x: int, y: int) -> np.ndarray:
    return behavior.table[(x, y)].sum(axis=1)


def bob_marginal(behavior: Behavior, x: int, y: int) -> np.ndarray:
    return behavior.table[(x, y)].sum(axis=0)


@lru_cache(maxsize=None)
def win_mask(spec: GameSpec, x: int, y: int) -> np.ndarray:
    """Boolean matrix of winning outcome pairs for input ``(x, y)``."""
    rows = np.array([a.row[y - 1] for a in alice_alphabet(spec, x)])
    cols = np.array([b.col[x - 1] for b in bob_alphabet(spec, y)])
    mask = rows[:, None] == cols[None, :]
    mask.setflags(write=False)
    return mask


def behavior_win_probability(behavior: Behavior):
    spec = behavior.spec
    total = Fraction(0) if behavior.exact else 0.0
    for (x, y), mat in behavior.table.items():
        total += mat[win_mask(spec, x, y)].sum()
    return total / (spec.m * spec.n)


# -- no-signaling ------------------------------------------------------------


@dataclass(frozen=True)
class NonsignalingReport:
    ok: bool
    worst_violation: float | Fraction
    where: str = ""

    def __bool__(self) -> bool:
        return self.ok


def check_nonsignaling(behavior: Behavior, tolerance: float = FLOAT_TOL) -> NonsignalingReport:
    """Check that each player's marginals ignore the other player's input.

    Exact behaviors are compared with exact equality; ``tolerance`` is then
    ignored. The report carries the largest marginal spread found.
    """
    spec = behavior.spec
    worst, where = Fraction(0) if behavior.exact else 0.0, ""
    for x in range(1, spec.m + 1):
        margs = np.array([alice_marginal(behavior, x, y) for y in range(1, spec.n + 1)])
        spread = margs.max(axis=0) - margs.min(axis=0)
        k = int(np.argmax(spread))
        if spread[k] > worst:
            worst, where = spread[k], f"alice x={x} outcome {k + 1}"
    for y in range(1, spec.n + 1):
        margs = np.array([bob_marginal(behavior, x, y) for x in range(1, spec.m + 1)])
        spread = margs.max(axis=0) - margs.min(axis=0)
        k = int(np.argmax(spread))
        if spread[k] > worst:
            worst, where = spread[k], f"bob y={y} outcome {k + 1}"
    ok = worst == 0 if behavior.exact else worst <= tolerance
    return NonsignalingReport(bool(ok), worst, where)


def mark_nonsignaling(behavior: Behavior, tolerance: float = FLOAT_TOL) -> Behavior:
    """Return a copy flagged as checked, or raise if the check fails."""
    report = check_nonsignaling(behavior, tolerance)
    if not report:
        raise ValueError(f"behavior signals: {report.worst_violation} at {report.where}")
    return Behavior(behavior.spec, behavior.table, behavior.exact, nonsignaling_checked=True)


# -- the 2x3 level-1 example ---------------------------------------------------


def builtin_2x3_spec() -> GameSpec:
    return GameSpec(2, 3, (1, 1), (-1, 1, 1))


_Q = Fraction(1, 4)
_M_11 = [[1, 0], [1, 0], [0, 1], [0, 1]]
_M_21 = [[0, 1], [0, 1], [1, 0], [1, 0]]
_M_2 = [[1, 0], [0, 1], [1, 0], [0, 1]]
_M_3 = [[1, 0], [0, 1], [0, 1], [1, 0]]


def builtin_2x3_behavior() -> Behavior:
    """Exact behavior winning the 2x3 game with certainty at NPA level 1.

    Rows follow Alice's alphabet ``+++, +--, -+-, --+`` and columns Bob's
    (``+-, -+`` for column 1, ``++, --`` for columns 2 and 3).
    """
    mats = {(1, 1): _M_11, (2, 1): _M_21, (1, 2): _M_2, (2, 2): _M_2, (1, 3): _M_3, (2, 3): _M_3}
    tables = {k: [[_Q * v for v in row] for row in rows] for k, rows in mats.items()}
    return Behavior(builtin_2x3_spec(), tables, exact=True)


# -- moment-matrix certificates -------------------------------------------------

# A projector label is (party, input, outcome signs); a monomial is a tuple of
# projector labels, the empty tuple being the identity.
Projector = tuple[str, int, tuple[int, ...]]
Monomial = tuple[Projector, ...]


def label_str(mono: Monomial) -> str:
    if not mono:
        return "1"
    return "*".join(f"{p}{i}:{format_signs(s)}" for p, i, s in mono)


def parse_label(text: str) -> Monomial:
    text = text.strip()
    if text in ("1", "I", ""):
        return ()
    out = []
    for part in text.split("*"):
        head, signs = part.split(":")
        party, inp = head[0].upper(), int(head[1:])
        if party not in "AB":
            raise LabelMismatch(f"unknown party in label {part!r}")
        out.append((party, inp, parse_signs(signs)))
    return tuple(out)


@dataclass(frozen=True)
class Certificate:
    monomials: tuple[Monomial, ...]
    gram: np.ndarray

    def __post_init__(self):
        gram = np.asarray(self.gram)
        if gram.ndim != 2 or gram.shape[0] != gram.shape[1] or gram.shape[0] != len(self.monomials):
            raise DimensionError("gram matrix must be square and match the monomial list")
        if not all(gram[i, j] == gram[j, i] for i in range(len(gram)) for j in range(i)):
            raise ValueError("gram matrix must be symmetric")
        object.__setattr__(self, "gram", gram)

    @property
    def exact(self) -> bool:
        return self.gram.dtype == object

    def to_dict(self) -> dict:
        enc = str if self.exact else float
        return {
            "monomials": [label_str(m) for m in self.monomials],
            "mode": "rational" if self.exact else "float",
            "gram": [[enc(v) for v in row] for row in self.gram],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Certificate":
        monos = tuple(parse_label(t) for t in data["monomials"])
        if data.get("mode", "float") == "rational":
            gram = np.array([[Fraction(v) for v in row] for row in data["gram"]], dtype=object)
        else:
            gram = np.array(data["gram"], dtype=float)
        return cls(monos, gram)


def load_certificate(path: str | Path) -> Certificate:
    with open(path) as fh:
        return Certificate.from_dict(json.load(fh))


def level1_labels(spec: GameSpec) -> tuple[Monomial, ...]:
    """Identity, then Alice's projectors input by input, then Bob's, each
    input dropping its last outcome."""
    labels: list[Monomial] = [()]
    for x in range(1, spec.m + 1):
        labels += [(("A", x, a.row),) for a in alice_alphabet(spec, x)[:-1]]
    for y in range(1, spec.n + 1):
        labels += [(("B", y, b.col),) for b in bob_alphabet(spec, y)[:-1]]
    return tuple(labels)


_GAMMA_EIGHTHS = [
    [8, 2, 2, 2, 2, 2, 2, 4, 4, 4],
    [2, 2, 0, 0, 1, -1, 1, 2, 2, 2],
    [2, 0, 2, 0, -1, 1, 1, 2, 0, 0],
    [2, 0, 0, 2, 1, 1, 1, 0, 2, 0],
    [2, 1, -1, 1, 2, 0, 0, 0, 2, 2],
    [2, -1, 1, 1, 0, 2, 0, 0, 0, 0],
    [2, 1, 1, 1, 0, 0, 2, 2, 2, 0],
    [4, 2, 2, 0, 0, 0, 2, 4, 2, 2],
    [4, 2, 0, 2, 2, 0, 2, 2, 4, 2],
    [4, 2, 0, 0, 2, 0, 0, 2, 2, 4],
]


def builtin_gamma_certificate() -> Certificate:
    """Level-1 moment matrix for :func:`builtin_2x3_behavior`, labeled by
    :func:`level1_labels` of the 2x3 game."""
    gram = np.array([[Fraction(v, 8) for v in row] for row in _GAMMA_EIGHTHS], dtype=object)
    return Certificate(level1_labels(builtin_2x3_spec()), gram)


def is_psd_exact(matrix) -> bool:
    """Exact positive-semidefiniteness test by symmetric elimination."""
    a = [[Fraction(v) for v in row] for row in matrix]
    n = len(a)
    for k in range(n):
        piv = a[k][k]
        if piv < 0:
            return False
        if piv == 0:
            if any(a[k][j] != 0 for j in range(k + 1, n)):
                return False
            continue
        for i in range(k + 1, n):
            f = a[i][k] / piv
            if f:
                for j in range(k + 1, n):
                    a[i][j] -= f * a[k][j]
    return True


@dataclass(frozen=True)
class CertificateReport:
    psd_ok: bool
    min_eigenvalue: float
    consistent: bool
    worst_violation: float
    worst_entry: str
    labeling: dict
    exact_psd: bool | None = None

    def __bool__(self) -> bool:
        return self.psd_ok and self.consistent


def _expected_moments(behavior: Behavior) -> dict:
    """Moments fixed by the behavior: identity, single projectors, A*B pairs."""
    from .optim.npa import canonical_word

    spec = behavior.spec
    one = Fraction(1) if behavior.exact else 1.0
    known = {canonical_word((), ()): one}
    for x in range(1, spec.m + 1):
        marg = alice_marginal(behavior, x, 1)
        for k, a in enumerate(alice_alphabet(spec, x)):
            known[canonical_word((("A", x, a.row),), ())] = marg[k]
    for y in range(1, spec.n + 1):
        marg = bob_marginal(behavior, 1, y)
        for k, b in enumerate(bob_alphabet(spec, y)):
            known[canonical_word((), (("B", y, b.col),))] = marg[k]
    for (x, y), mat in behavior.table.items():
        for r, a in enumerate(alice_alphabet(spec, x)):
            for c, b in enumerate(bob_alphabet(spec, y)):
                known[canonical_word((("A", x, a.row),), (("B", y, b.col),))] = mat[r, c]
    return known


def _check_coverage(monomials, spec: GameSpec) -> None:
    present: dict[tuple[str, int], set] = {}
    for mono in monomials:
        for party, inp, signs in mono:
            if party == "A":
                ok = 1 <= inp <= spec.m and AliceOutcome(inp, signs) in alice_alphabet(spec, inp)
            else:
                ok = 1 <= inp <= spec.n and BobOutcome(inp, signs) in bob_alphabet(spec, inp)
            if not ok:
                raise LabelMismatch(f"label {party}{inp}:{format_signs(signs)} is not in the alphabet")
            if len(mono) == 1:
                present.setdefault((party, inp), set()).add(signs)
    for x in range(1, spec.m + 1):
        need = len(alice_alphabet(spec, x)) - 1
        if len(present.get(("A", x), ())) < need:
            raise LabelMismatch(f"labels cover too few outcomes of Alice's input {x}")
    for y in range(1, spec.n + 1):
        need = len(bob_alphabet(spec, y)) - 1
        if len(present.get(("B", y), ())) < need:
            raise LabelMismatch(f"labels cover too few outcomes of Bob's input {y}")


def _consistency(monomials, gram, known, exact: bool):
    from .optim.npa import entry_word

    worst, where = 0.0, ""
    groups: dict = {}
    size = len(monomials)
    for p in range(size):
        for q in range(p, size):
            word = entry_word(monomials[p], monomials[q])
            v = gram[p, q]
            if word is None:
                dev = abs(v)
            elif word in known:
                dev = abs(v - known[word])
            else:
                first = groups.setdefault(word, (v, p, q))
                dev = abs(v - first[0])
            if dev > worst:
                worst = dev
                where = f"({label_str(monomials[p])}, {label_str(monomials[q])})"
    return worst, where


def _permuted(monomials, alice_perm, bob_perm):
    def move(proj):
        party, inp, signs = proj
        return (party, (alice_perm if party == "A" else bob_perm)[inp - 1], signs)

    return tuple(tuple(move(p) for p in mono) for mono in monomials)


def verify_certificate(
    certificate: Certificate, behavior: Behavior, tolerance: float = FLOAT_TOL
) -> CertificateReport:
    """Check that ``certificate`` is a moment matrix certifying ``behavior``.

    The Gram matrix must be positive semidefinite, its identity row and
    cross entries must reproduce the behavior's marginals and joint
    probabilities, and entries representing the same operator word must
    agree (zero for orthogonal projector products). When the stated labeling
    fails, every reordering of the input blocks is tried and the first
    consistent one is reported.
    """
    spec = behavior.spec
    _check_coverage(certificate.monomials, spec)
    exact = certificate.exact and behavior.exact
    gram = certificate.gram
    min_eig = float(np.linalg.eigvalsh(gram.astype(float)).min())
    exact_psd = is_psd_exact(gram) if certificate.exact else None
    psd_ok = exact_psd if exact else min_eig >= -tolerance

    known = _expected_moments(behavior)
    identity = (tuple(range(1, spec.m + 1)), tuple(range(1, spec.n + 1)))
    worst, where = _consistency(certificate.monomials, gram, known, exact)
    labeling = {"alice_inputs": list(identity[0]), "bob_inputs": list(identity[1])}
    ok = worst == 0 if exact else worst <= tolerance
    if not ok:
        for ap in itertools.permutations(identity[0]):
            for bp in itertools.permutations(identity[1]):
                if (ap, bp) == identity:
                    continue
                monos = _permuted(certificate.monomials, ap, bp)
                try:
                    _check_coverage(monos, spec)
                except LabelMismatch:
                    continue
                w, loc = _consistency(monos, gram, known, exact)
                if (w == 0) if exact else (w <= tolerance):
                    ok, worst, where = True, w, loc
                    labeling = {"alice_inputs": list(ap), "bob_inputs": list(bp)}
                    break
            if ok:
                break
    return CertificateReport(
        psd_ok=bool(psd_ok),
        min_eigenvalue=min_eig,
        consistent=bool(ok),
        worst_violation=float(worst),
        worst_entry=where,
        labeling=labeling,
        exact_psd=exact_psd,
    )


# -- nonsignaling constructions ---------------------------------------------------


def pr_winning_behavior_2x2(spec: GameSpec) -> Behavior:
    """PR-box behavior winning any 2x2 game with certainty.

    The PR box ``P(a, b | x, y) = 1/2 [a XOR b = x AND y]`` is relabeled onto
    the 2x2 game with ``alphas = (+, +)``, ``betas = (+, -)`` and then
    transported by sign flips onto ``spec``.
    """
    from .quantum import chsh_base_game, chsh_bijections

    if spec.shape != (2, 2):
        raise DimensionError(f"PR transport needs a 2x2 game, got {spec.m}x{spec.n}")
    f, g = chsh_bijections()
    inv_f = {v: k for k, v in f.items()}
    inv_g = {v: k for k, v in g.items()}

    def pr(alice: AliceOutcome, bob: BobOutcome) -> Fraction:
        xc, ac = inv_f[alice]
        yc, bc = inv_g[bob]
        return Fraction(1, 2) if (ac ^ bc) == (xc & yc) else Fraction(0)

    base = Behavior.from_function(chsh_base_game(), pr, exact=True)
    return transport_to(base, spec)
