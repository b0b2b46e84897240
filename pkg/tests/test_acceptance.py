"""The ten acceptance criteria, one test each.

Every test prints a single ``criterion k: PASS|FAIL`` line; the same lines
are repeated in the terminal summary.
"""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from magicrect.behaviors import (
    behavior_win_probability,
    builtin_2x3_behavior,
    builtin_gamma_certificate,
    check_nonsignaling,
    verify_certificate,
)
from magicrect.classical import brute_force_classical_value, deterministic_behavior
from magicrect.games import (
    AliceOutcome,
    BobOutcome,
    all_games,
    canonical_game,
    classical_value_formula,
    distinguished_extension,
    embed_behavior,
    embedded_value,
    is_win,
)
from magicrect.optim import conjectured_1ab_value, npa_value, ns_value
from magicrect.quantum import (
    chsh_base_game,
    chsh_bijections,
    chsh_strategy_2x2,
    mermin_peres_game,
    mermin_peres_grid,
    mermin_peres_strategy,
    strategy_residuals,
    strategy_to_behavior,
)
from magicrect.randomness import distinguished_value, performance_table

import conftest
from conftest import SOLVER_TOL, builtin_quantum, classical, npa, ns, ordering_chain, random_behavior, shapes_up_to

PUBLISHED_2XN = {
    (2, 2): (0.8535533906, 0.8535533906),
    (2, 3): (1.0, 0.9082482905),
    (2, 4): (1.0, 0.9330127019),
    (2, 5): (1.0, 0.9472135955),
}

# exact noise tolerances and printed rates (upper, lower) of the six example rows
RATE_ROWS = {
    (2, 2): ((sp.sqrt(2) - 1) / 4, (sp.sqrt(2) - 1) / 4, "0.01031", "0.01031"),
    (3, 3): ((2 - sp.sqrt(2)) / 9, (2 - sp.sqrt(2)) / 9, "0.00081", "0.00081"),
    (2, 3): ((sp.sqrt(6) - 2) / 6, (sp.sqrt(2) - 1) / 6, "0.00231", "0.00196"),
    (2, 4): ((2 * sp.sqrt(3) - 3) / 8, (sp.sqrt(2) - 1) / 8, "0.00065", "0.00052"),
    (3, 4): ((2 - sp.sqrt(2)) / 12, (3 - sp.sqrt(6)) / 12, "0.00022", "0.00020"),
    (3, 5): ((2 - sp.sqrt(2)) / 15, 2 * (2 - sp.sqrt(3)) / 15, "0.00007", "0.00006"),
}


def report(k: int, failures: list[str], detail: str = "") -> None:
    status = "PASS" if not failures else "FAIL"
    line = f"criterion {k}: {status}" + (f" ({detail})" if detail else "")
    if failures:
        line += " :: " + "; ".join(failures[:5])
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    assert not failures, line


def sig4(x: float) -> str:
    return f"{x:.4g}"


@pytest.fixture(scope="module")
def two_row_solves():
    """Fresh (uncached) solves of the published 2 x n rows, timed together."""
    start = time.perf_counter()
    values = {}
    for shape in PUBLISHED_2XN:
        spec = canonical_game(*shape)
        values[shape] = tuple(npa_value(spec, level) for level in ("1", "1+AB"))
    return values, time.perf_counter() - start


def test_criterion_1_two_row_npa_values(two_row_solves):
    values, elapsed = two_row_solves
    bad = []
    for shape, expected in PUBLISHED_2XN.items():
        for sol, ref in zip(values[shape], expected):
            if sol.status != "optimal" or abs(sol.value - ref) > 1e-6:
                bad.append(f"{shape} {sol.level}: {sol.value} vs {ref}")
    if elapsed > 600:
        bad.append(f"took {elapsed:.0f}s")
    report(1, bad, f"8 solves in {elapsed:.1f}s")


def test_criterion_2_conjecture_cross_check(two_row_solves):
    values, _ = two_row_solves
    bad = []
    for n in range(2, 6):
        got = values[2, n][1].value
        if abs(got - conjectured_1ab_value(n)) > 1e-6:
            bad.append(f"n={n}: {got} vs {conjectured_1ab_value(n)}")
    report(2, bad, "n = 2..5")


def test_criterion_3_classical_oracle():
    bad, count, slowest = [], 0, 0.0
    for m, n in shapes_up_to(6):
        formula = classical_value_formula(m, n)
        for spec in all_games(m, n):
            start = time.perf_counter()
            value, _ = brute_force_classical_value(spec)
            took = time.perf_counter() - start
            slowest = max(slowest, took)
            count += 1
            if value != formula or value != 1 - Fraction(1, m * n):
                bad.append(f"{spec}: {value}")
            if took >= 1:
                bad.append(f"{spec}: {took:.2f}s")
    report(3, bad, f"{count} games, slowest {slowest * 1000:.1f} ms")


def test_criterion_4_quantum_certainty():
    spec, strat = mermin_peres_game(), mermin_peres_strategy()
    bad = []
    p = float(behavior_win_probability(strategy_to_behavior(strat, spec)))
    if abs(p - 1) > 1e-12:
        bad.append(f"win probability {p}")
    residuals = strategy_residuals(strat, spec)
    bad += [f"{k} residual {v}" for k, v in residuals.items() if v > 1e-12]
    grid, eye = mermin_peres_grid(), np.eye(4)
    for i in range(3):
        row = np.linalg.multi_dot(grid[i])
        col = np.linalg.multi_dot([grid[k][i] for k in range(3)])
        if np.linalg.norm(row - eye, 2) > 1e-12 or np.linalg.norm(col + eye, 2) > 1e-12:
            bad.append(f"line products at index {i}")
    for x, y in itertools.product(range(1, 4), repeat=2):
        if abs(strat.correlation(x, y) - 1) > 1e-12:
            bad.append(f"correlation ({x},{y})")
    report(4, bad, f"win probability {p:.15f}")


def test_criterion_5_chsh_equivalence():
    spec = chsh_base_game()
    bad = []
    p = float(behavior_win_probability(strategy_to_behavior(chsh_strategy_2x2(), spec)))
    if abs(p - (2 + math.sqrt(2)) / 4) > 1e-9:
        bad.append(f"win probability {p}")
    f, g = chsh_bijections()
    inv_f = {v: k for k, v in f.items()}
    inv_g = {v: k for k, v in g.items()}
    if len(inv_f) != 4 or len(inv_g) != 4:
        bad.append("bijections are not one-to-one")
    if any(inv_f[f[k]] != k for k in f) or any(inv_g[g[k]] != k for k in g):
        bad.append("round trip")
    for (xc, ac), (yc, bc) in itertools.product(f, g):
        a, b = f[xc, ac], g[yc, bc]
        if ((ac ^ bc) == (xc & yc)) != is_win(spec, a.x, b.y, a, b):
            bad.append(f"win condition at {(xc, ac, yc, bc)}")
    # Alice answers ++ on row 2, Bob answers -+ on column 2
    alice, bob = AliceOutcome(2, (1, 1)), BobOutcome(2, (-1, 1))
    (xc, ac), (yc, bc) = inv_f[alice], inv_g[bob]
    if ((xc, ac), (yc, bc)) != ((1, 0), (1, 1)) or not is_win(spec, 2, 2, alice, bob):
        bad.append("figure configuration")
    report(5, bad, f"win probability {p:.10f}")


def test_criterion_6_nonsignaling_values():
    bad = []
    for n in range(1, 6):
        v = ns_value(canonical_game(1, n), exact=True)
        if not isinstance(v, Fraction) or v != 1 - Fraction(1, n):
            bad.append(f"1x{n}: {v}")
    for shape in [(2, 2), (2, 3)]:
        v = ns_value(canonical_game(*shape), exact=True)
        if v != 1:
            bad.append(f"{shape}: {v}")
    report(6, bad, "rational mode")


def test_criterion_7_appendix_certificate():
    beh = builtin_2x3_behavior()
    rep = verify_certificate(builtin_gamma_certificate(), beh)
    bad = []
    if rep.min_eigenvalue < -1e-12 or not rep.psd_ok:
        bad.append(f"min eigenvalue {rep.min_eigenvalue}")
    if not rep.consistent or rep.worst_violation != 0:
        bad.append(f"consistency {rep.worst_entry} {rep.worst_violation}")
    p = behavior_win_probability(beh)
    if not beh.exact or p != 1:
        bad.append(f"win probability {p}")
    if check_nonsignaling(beh).worst_violation != 0:
        bad.append("signaling")
    report(7, bad, f"min eigenvalue {float(rep.min_eigenvalue):.2e}, exact PSD {rep.exact_psd}")


def test_criterion_8_rate_table_rows():
    reps = {(r.m, r.n): r for r in performance_table(5)}
    bad = []
    for shape, (rho_up, rho_lo, rate_up, rate_lo) in RATE_ROWS.items():
        rep = reps[shape]
        pairs = [
            ("rho upper", rep.noise_tolerance.upper, float(rho_up)),
            ("rho lower", rep.noise_tolerance.lower, float(rho_lo)),
        ]
        for name, got, want in pairs:
            if sig4(got) != sig4(want):
                bad.append(f"{shape} {name}: {got} vs {want}")
        for name, got, printed in [("rate upper", rep.max_rate.upper, rate_up), ("rate lower", rep.max_rate.lower, rate_lo)]:
            if f"{got:.5f}" != printed:
                bad.append(f"{shape} {name}: {got} vs {printed}")
        if sp.simplify(rep.noise_tolerance.upper_expr - rho_up) != 0:
            bad.append(f"{shape} closed form upper")
        if sp.simplify(rep.noise_tolerance.lower_expr - rho_lo) != 0:
            bad.append(f"{shape} closed form lower")
        if rep.conjecture_flag:
            bad.append(f"{shape} flagged conjectural")
    report(8, bad, "six rows")


def test_criterion_9_property_suites():
    bad = []
    shapes = shapes_up_to(6)
    games = [g for m, n in shapes for g in all_games(m, n)]
    for g in games:
        bad += ordering_chain(g)
    values = {
        "ns": ns,
        "npa1": lambda g: npa(g, "1"),
        "npa1ab": lambda g: npa(g, "1+AB"),
        "quantum": builtin_quantum,
        "classical": lambda g: float(classical(g)),
    }
    for m, n in shapes:
        if m > n:
            continue
        same_shape, flipped = all_games(m, n), all_games(n, m)
        for name, fn in values.items():
            vals = [fn(g) for g in same_shape + flipped]
            if max(vals) - min(vals) > SOLVER_TOL:
                bad.append(f"{name} {m}x{n} spread {max(vals) - min(vals):.2e}")
    for m, n in [(1, 1), (1, 2), (2, 2), (2, 3)]:
        for k, spec in enumerate(all_games(m, n)):
            beh = random_behavior(spec, seed=k)
            for dm, dn in [(0, 1), (1, 0), (1, 1), (2, 1)]:
                _, big = embed_behavior(spec, beh, m + dm, n + dn)
                want = embedded_value(m, n, m + dm, n + dn, behavior_win_probability(beh))
                if not big.exact or behavior_win_probability(big) != want:
                    bad.append(f"embedding {spec} -> {m + dm}x{n + dn}")
    report(9, bad, f"{len(games)} games")


def _extension_value(small, beh):
    return behavior_win_probability(distinguished_extension(small, beh)[1])


def test_criterion_10_distinguished_input_oracle():
    bad = []

    # 2 x 3: optimal 1 x 2 behavior is deterministic and rational
    small = canonical_game(1, 2)
    value, witness = brute_force_classical_value(small)
    got = _extension_value(small, deterministic_behavior(small, witness))
    target = distinguished_value(2, 3).lower_expr
    if not isinstance(got, Fraction) or sp.Rational(got.numerator, got.denominator) != target:
        bad.append(f"2x3: {got} vs {target}")

    # 3 x 3: the optimal 2 x 2 behavior is irrational, so the extension is
    # pinned down by its exact rational affine law, then evaluated symbolically
    small = chsh_base_game()
    probes = [random_behavior(small, seed=s) for s in range(4)]
    pts = [(behavior_win_probability(b), _extension_value(small, b)) for b in probes]
    (p0, e0), (p1, e1) = pts[0], next(pt for pt in pts[1:] if pt[0] != pts[0][0])
    slope = (e1 - e0) / (p1 - p0)
    offset = e0 - slope * p0
    if any(e != offset + slope * p for p, e in pts):
        bad.append("3x3 extension is not affine on rational behaviors")
    chsh = (2 + sp.sqrt(2)) / 4
    exact = sp.Rational(offset.numerator, offset.denominator) + sp.Rational(slope.numerator, slope.denominator) * chsh
    target = distinguished_value(3, 3).lower_expr
    if sp.simplify(exact - target) != 0:
        bad.append(f"3x3: {exact} vs {target}")
    numeric = float(_extension_value(small, strategy_to_behavior(chsh_strategy_2x2(), small)))
    if abs(numeric - float(target)) > 1e-12:
        bad.append(f"3x3 float extension {numeric}")
    report(10, bad, f"2x3 -> {got}, 3x3 -> {sp.nsimplify(exact)}")
