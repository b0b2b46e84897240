"""Moment matrices for the NPA relaxations at level 1 and level 1+AB.

Each player's measurement for one input is a family of orthogonal
projectors summing to the identity. The last outcome of every input is
dropped from the monomial list since completeness expresses it through the
others. Entries of the moment matrix ``Gamma[u, v] = <u^dag v>`` are grouped
into classes of equal operator words after reduction by idempotence,
orthogonality and commutation of the two players' operators. Working over
real symmetric matrices loses nothing: the real part of a feasible complex
moment matrix is again feasible with the same objective.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from fractions import Fraction
from typing import TextIO

import numpy as np

from ..behaviors import Monomial, label_str, level1_labels
from ..errors import BudgetExceeded
from ..games import GameSpec, alice_alphabet, bob_alphabet

LEVEL_1 = "1"
LEVEL_1AB = "1+AB"
_LEVEL_ALIASES = {
    "1": LEVEL_1, "npa1": LEVEL_1, "level1": LEVEL_1,
    "1+ab": LEVEL_1AB, "1ab": LEVEL_1AB, "npa1ab": LEVEL_1AB, "almost": LEVEL_1AB,
}

DEFAULT_MAX_VARIABLES = 8000

Word = tuple


def normalize_level(level) -> str:
    key = str(level).strip().lower().replace(" ", "")
    if key not in _LEVEL_ALIASES:
        raise ValueError(f"unsupported NPA level {level!r}; use '1' or '1+AB'")
    return _LEVEL_ALIASES[key]


def reduce_party_word(word: tuple):
    """Reduce one player's projector word; ``None`` means the zero operator."""
    out: list = []
    for proj in word:
        if out and out[-1][1] == proj[1]:
            if out[-1][2] == proj[2]:
                continue
            return None
        out.append(proj)
    return tuple(out)


def canonical_word(alice: tuple, bob: tuple):
    """Canonical class of the word ``alice * bob`` up to adjoints."""
    a, b = reduce_party_word(alice), reduce_party_word(bob)
    if a is None or b is None:
        return None
    return min((a, b), (a[::-1], b[::-1]))


def _split(mono: Monomial) -> tuple[tuple, tuple]:
    return (
        tuple(p for p in mono if p[0] == "A"),
        tuple(p for p in mono if p[0] == "B"),
    )


def entry_word(u: Monomial, v: Monomial):
    """Word class of the moment ``<u^dag v>``."""
    ua, ub = _split(u)
    va, vb = _split(v)
    return canonical_word(ua[::-1] + va, ub[::-1] + vb)


def monomials_for(spec: GameSpec, level) -> tuple[Monomial, ...]:
    level = normalize_level(level)
    base = level1_labels(spec)
    if level == LEVEL_1:
        return base
    alice = [m for m in base if m and m[0][0] == "A"]
    bob = [m for m in base if m and m[0][0] == "B"]
    return base + tuple(a + b for a in alice for b in bob)


@dataclass(frozen=True, eq=False)
class MomentProblem:
    """One NPA relaxation: maximize ``<objective, Gamma>`` over PSD ``Gamma``.

    ``classes[p, q]`` is -1 for entries forced to zero, 0 for the identity
    entry (fixed to 1) and ``k >= 1`` for the k-th free moment; entries of
    equal class must be equal. ``objective`` is a symmetric matrix of exact
    rationals.
    """

    spec: GameSpec
    level: str
    monomials: tuple[Monomial, ...]
    classes: np.ndarray
    words: tuple
    objective: np.ndarray

    @property
    def size(self) -> int:
        return len(self.monomials)

    @property
    def n_variables(self) -> int:
        return len(self.words) - 1

    def evaluate(self, gamma):
        """Objective at a given moment matrix (exact for rational input)."""
        gamma = np.asarray(gamma)
        if gamma.dtype == object:
            return sum(
                (w * g for w, g in zip(self.objective.flat, gamma.flat) if w), Fraction(0)
            )
        return float(np.sum(self.objective.astype(float) * gamma))

    def affine_residual(self, gamma) -> float:
        """Largest violation of the linear constraints by ``gamma``."""
        g = np.asarray(gamma, dtype=float)
        worst = max(float(np.abs(g[self.classes == -1]).max(initial=0.0)), abs(g[0, 0] - 1.0))
        worst = max(worst, float(np.abs(g - g.T).max()))
        flat_cls = self.classes.ravel()
        vals = g.ravel()
        mask = flat_cls > 0
        if mask.any():
            cls = flat_cls[mask]
            v = vals[mask]
            hi = np.full(len(self.words), -np.inf)
            lo = np.full(len(self.words), np.inf)
            np.maximum.at(hi, cls, v)
            np.minimum.at(lo, cls, v)
            used = np.isfinite(hi)
            worst = max(worst, float((hi[used] - lo[used]).max()))
        return worst

    def linear_data(self):
        """Objective as ``c . y + c0`` over the free moments ``y``."""
        k = len(self.words)
        c = np.zeros(k)
        obj = self.objective
        c0 = Fraction(0)
        for (p, q), w in np.ndenumerate(obj):
            if w:
                cls = self.classes[p, q]
                if cls == 0:
                    c0 += w
                elif cls > 0:
                    c[cls] += float(w)
        return c[1:], float(c0)

    def dump(self, stream: TextIO) -> None:
        """Write the sparse text format.

        ::

            magicrect-moment-problem 1
            game <m> <n> <alphas> <betas>
            level <level>
            size <N>
            variables <K>
            monomial <index> <label>        (N lines)
            class <p> <q> <k>               (upper triangle; k=-1 zero, 0 identity)
            objective <p> <q> <numerator/denominator>   (upper triangle, nonzero)
        """
        spec = self.spec
        fmt = lambda s: "".join("+" if v > 0 else "-" for v in s)  # noqa: E731
        print("magicrect-moment-problem 1", file=stream)
        print(f"game {spec.m} {spec.n} {fmt(spec.alphas)} {fmt(spec.betas)}", file=stream)
        print(f"level {self.level}", file=stream)
        print(f"size {self.size}", file=stream)
        print(f"variables {self.n_variables}", file=stream)
        for i, mono in enumerate(self.monomials):
            print(f"monomial {i} {label_str(mono)}", file=stream)
        n = self.size
        for p in range(n):
            for q in range(p, n):
                print(f"class {p} {q} {self.classes[p, q]}", file=stream)
        for p in range(n):
            for q in range(p, n):
                w = self.objective[p, q] + (self.objective[q, p] if q != p else 0)
                if w:
                    print(f"objective {p} {q} {w}", file=stream)

    def dumps(self) -> str:
        buf = io.StringIO()
        self.dump(buf)
        return buf.getvalue()


def _projector_expansion(party: str, inp: int, signs, alphabet) -> dict:
    """Write one projector over retained monomials, expanding the dropped one."""
    last = alphabet[-1]
    if signs != last:
        return {((party, inp, signs),): Fraction(1)}
    out = {(): Fraction(1)}
    for other in alphabet[:-1]:
        out[((party, inp, other),)] = Fraction(-1)
    return out


def build_moment_problem(
    spec: GameSpec, level, max_variables: int = DEFAULT_MAX_VARIABLES
) -> MomentProblem:
    level = normalize_level(level)
    monos = monomials_for(spec, level)
    n = len(monos)
    index = {m: i for i, m in enumerate(monos)}

    word_ids: dict = {canonical_word((), ()): 0}
    words: list = [canonical_word((), ())]
    classes = np.empty((n, n), dtype=np.int64)
    for p in range(n):
        for q in range(p, n):
            w = entry_word(monos[p], monos[q])
            if w is None:
                k = -1
            else:
                k = word_ids.get(w)
                if k is None:
                    k = word_ids[w] = len(words)
                    words.append(w)
                    if len(words) - 1 > max_variables:
                        raise BudgetExceeded(
                            f"{spec.m}x{spec.n} level {level} needs more than "
                            f"{max_variables} moment variables"
                        )
            classes[p, q] = classes[q, p] = k

    objective = np.empty((n, n), dtype=object)
    objective.fill(Fraction(0))
    weight = Fraction(1, spec.m * spec.n)
    for x in range(1, spec.m + 1):
        a_alpha = [a.row for a in alice_alphabet(spec, x)]
        for y in range(1, spec.n + 1):
            b_alpha = [b.col for b in bob_alphabet(spec, y)]
            for a in a_alpha:
                ea = _projector_expansion("A", x, a, a_alpha)
                for b in b_alpha:
                    if a[y - 1] != b[x - 1]:
                        continue
                    fb = _projector_expansion("B", y, b, b_alpha)
                    for ma, ca in ea.items():
                        for mb, cb in fb.items():
                            p, q = index[ma], index[mb]
                            w = weight * ca * cb
                            if p == q:
                                objective[p, p] += w
                            else:
                                objective[p, q] += w / 2
                                objective[q, p] += w / 2
    return MomentProblem(spec, level, monos, classes, tuple(words), objective)


def to_lmi(problem: MomentProblem):
    """Restate a moment problem as a linear matrix inequality in the free moments."""
    from .sdp import LmiProblem

    cls = problem.classes
    rows, cols = np.nonzero(cls > 0)
    const = (cls == 0).astype(float)
    c, c0 = problem.linear_data()
    return LmiProblem(
        size=problem.size,
        rows=rows.astype(np.int64),
        cols=cols.astype(np.int64),
        var=(cls[rows, cols] - 1).astype(np.int64),
        n_vars=problem.n_variables,
        const=const,
        c=c,
        c0=c0,
    )


def solve_sdp(
    problem: MomentProblem,
    tolerance: float = 1e-7,
    max_iterations: int = 100,
    backend: str = "auto",
):
    """Maximize the objective of ``problem`` over its PSD moment matrices.

    The returned ``gamma`` satisfies every linear constraint by construction
    (it is assembled from the free moments); ``affine_violation`` is measured
    on it anyway. ``upper_bound`` is the primal objective of the paired
    problem. ``NotConverged`` carries the best iterate.
    """
    from dataclasses import replace

    from ..errors import NotConverged
    from .sdp import solve_lmi

    lmi = to_lmi(problem)
    try:
        sol = solve_lmi(lmi, tolerance=tolerance, max_iterations=max_iterations, backend=backend)
    except NotConverged as exc:
        if exc.solution is not None:
            exc.solution = replace(
                exc.solution, affine_violation=problem.affine_residual(exc.solution.gamma)
            )
        raise
    return replace(sol, affine_violation=problem.affine_residual(sol.gamma))


def npa_value(
    spec: GameSpec,
    level=LEVEL_1,
    tolerance: float = 1e-7,
    max_iterations: int = 100,
    max_variables: int = DEFAULT_MAX_VARIABLES,
    backend: str = "auto",
):
    """Upper bound on the quantum winning probability from one NPA level.

    Returns the full ``SdpSolution``; its ``value`` field is the bound.
    """
    problem = build_moment_problem(spec, level, max_variables=max_variables)
    return solve_sdp(problem, tolerance, max_iterations, backend)


def count_variables(spec: GameSpec, level) -> int:
    """Number of free moments without building the objective."""
    return build_moment_problem(spec, level, max_variables=10**9).n_variables


def conjectured_1ab_value(n: int) -> float:
    """Closed form matching the level 1+AB bound for 2 x n games with n <= 6."""
    if n < 1:
        raise ValueError("n must be positive")
    return (1 + (1 - 1 / n) ** 0.5) / 2
