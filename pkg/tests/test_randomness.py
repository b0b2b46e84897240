import csv
import io
import json
import math

import pytest
import sympy as sp

from magicrect.errors import DimensionError, NotUsable
from magicrect.games import classical_value_formula
from magicrect.randomness import (
    CSV_COLUMNS,
    ValueBounds,
    bounds_curve,
    bounds_curve_csv,
    distinguished_value,
    noise_tolerance,
    output_alphabet_size,
    performance_table,
    quantum_value_bounds,
    rate_curve,
    rate_report,
    table_csv,
    table_json,
    usable_in_rgen,
    weak_2xn_bounds,
)

S2, S3, S6 = sp.sqrt(2), sp.sqrt(3), sp.sqrt(6)
LN2 = sp.log(2)
n_ = sp.Symbol("n", positive=True)

# printed closed forms of the general rows: rho upper, rho lower, rate upper, rate lower
ROW_2N = (
    sp.Rational(1, 2) * (sp.sqrt(1 - 1 / n_) - (1 - 1 / n_)),
    (S2 - 1) / (2 * n_),
    (sp.sqrt(n_ * (n_ - 1)) + 1 - n_) ** 2 / (2 * (2**n_ - 1) * n_**2 * LN2),
    (3 - 2 * S2) / (2 * (2**n_ - 1) * n_**2 * LN2),
)
ROW_3N = (
    (2 - S2) / (3 * n_),
    sp.Rational(1, 3) * (1 - 1 / n_) * (1 - sp.sqrt(1 - 1 / (n_ - 1))),
    4 * (3 - 2 * S2) / (9 * (2 ** (n_ + 1) - 1) * n_**2 * LN2),
    2 * (n_ - 1) * (sp.sqrt(n_ - 2) - sp.sqrt(n_ - 1)) ** 2 / (9 * (2 ** (n_ + 1) - 1) * n_**2 * LN2),
)

# example rows: exact noise tolerances and the printed rounded figures
# (rho upper %, rho lower %, rate upper, rate lower)
EXAMPLES = {
    (2, 2): ((S2 - 1) / 4, (S2 - 1) / 4, "10.4", "10.4", "0.01031", "0.01031"),
    (3, 3): ((2 - S2) / 9, (2 - S2) / 9, "6.5", "6.5", "0.00081", "0.00081"),
    (2, 3): ((S6 - 2) / 6, (S2 - 1) / 6, "7.5", "6.9", "0.00231", "0.00196"),
    (2, 4): ((2 * S3 - 3) / 8, (S2 - 1) / 8, "5.8", "5.2", "0.00065", "0.00052"),
    (3, 4): ((2 - S2) / 12, (3 - S6) / 12, "4.9", "4.6", "0.00022", "0.00020"),
    (3, 5): ((2 - S2) / 15, 2 * (2 - S3) / 15, "3.9", "3.6", "0.00007", "0.00006"),
}


def rounds_to(value: float, printed: str) -> bool:
    decimals = len(printed.split(".")[1])
    return f"{value:.{decimals}f}" == printed


def same(a, b) -> bool:
    return sp.simplify(sp.sympify(a) - sp.sympify(b)) == 0


# -- quantum value bounds -------------------------------------------------------------


def test_value_bounds_examples():
    b = quantum_value_bounds(3, 3)
    assert b.lower == b.upper == 1 and b.is_exact
    b = quantum_value_bounds(2, 3)
    assert same(b.lower_expr, 1 - (2 - S2) / 6)
    assert same(b.upper_expr, (1 + sp.sqrt(sp.Rational(2, 3))) / 2)
    assert (b.lower_tag, b.upper_tag) == ("formula", "formula")
    b = quantum_value_bounds(1, 4)
    assert b.lower == b.upper == 0.75
    assert same(quantum_value_bounds(2, 2).lower_expr, (2 + S2) / 4)


def test_value_bounds_are_symmetric():
    for m in range(1, 6):
        for n in range(1, 9):
            assert quantum_value_bounds(m, n).to_dict() == quantum_value_bounds(n, m).to_dict()


def test_conjecture_tags_beyond_six_columns():
    b = quantum_value_bounds(2, 7)
    assert b.upper_tag == "conjecture" and b.conjectural
    weak = quantum_value_bounds(2, 9, conjecture=False)
    assert weak.upper == 1 and weak.upper_tag == "weak"
    assert quantum_value_bounds(2, 6).upper_tag == "formula"


def test_value_bounds_reject_bad_dims():
    with pytest.raises(DimensionError):
        quantum_value_bounds(0, 3)


def test_interval_arithmetic():
    a = ValueBounds(sp.Rational(1, 2), sp.Rational(3, 4), "exact", "formula")
    b = ValueBounds(sp.Rational(1, 8), sp.Rational(1, 4), "exact", "conjecture")
    d = a - b
    assert d.lower == 0.25 and d.upper == 0.625
    assert d.lower_tag == "conjecture" and d.upper_tag == "formula"
    assert 0.3 in d and 0.7 not in d
    with pytest.raises(ValueError):
        ValueBounds(sp.Integer(1), sp.Integer(0))
    with pytest.raises(ValueError):
        ValueBounds(sp.Integer(0), sp.Integer(1), "guess", "exact")


# -- distinguished input ---------------------------------------------------------------


@pytest.mark.parametrize("n", range(2, 10))
def test_distinguished_value_of_2xn(n):
    bar = distinguished_value(2, n)
    assert bar.is_exact
    assert same(bar.lower_expr, 1 - sp.Rational(1, 2 * n))


def test_distinguished_value_examples():
    assert same(distinguished_value(3, 3).lower_expr, 1 - (2 - S2) / 9)
    assert distinguished_value(3, 3).is_exact
    assert distinguished_value(4, 4).lower == distinguished_value(4, 4).upper == 1
    with pytest.raises(DimensionError):
        distinguished_value(1, 3)


def test_distinguished_value_beats_classical():
    for m in range(2, 8):
        for n in range(2, 8):
            assert distinguished_value(m, n).lower >= float(classical_value_formula(m, n)) - 1e-15


def test_distinguished_value_matches_extension_of_optimal_1x2_behavior():
    from magicrect.behaviors import behavior_win_probability
    from magicrect.classical import brute_force_classical_value, deterministic_behavior
    from magicrect.games import canonical_game, distinguished_extension

    small = canonical_game(1, 2)
    _, witness = brute_force_classical_value(small)
    _, ext = distinguished_extension(small, deterministic_behavior(small, witness))
    assert same(distinguished_value(2, 3).lower_expr, behavior_win_probability(ext))


# -- usability and noise tolerance --------------------------------------------------------


@pytest.mark.parametrize("m,n", [(2, 5), (5, 2), (3, 9), (2, 2)])
def test_usable_shapes(m, n):
    assert usable_in_rgen(m, n)


@pytest.mark.parametrize("m,n", [(4, 4), (1, 9), (9, 1), (4, 7), (1, 1)])
def test_unusable_shapes(m, n):
    assert not usable_in_rgen(m, n)
    with pytest.raises(NotUsable):
        noise_tolerance(m, n)
    with pytest.raises(NotUsable):
        rate_curve(m, n, 0.9)


@pytest.mark.parametrize("shape", [(2, 2), (3, 3)])
def test_tolerance_bounds_coincide_for_square_games(shape):
    rho = noise_tolerance(*shape)
    assert same(rho.lower_expr, rho.upper_expr)


def test_tolerance_uses_opposite_endpoints():
    # upper tolerance pairs the upper quantum bound with the lower distinguished bound
    for m, n in [(2, 3), (3, 4), (3, 5)]:
        rho, om, bar = noise_tolerance(m, n), quantum_value_bounds(m, n), distinguished_value(m, n)
        assert same(rho.upper_expr, om.upper_expr - bar.lower_expr)
        assert same(rho.lower_expr, om.lower_expr - bar.upper_expr)


def test_output_alphabet_size():
    assert output_alphabet_size(2, 2) == 4
    assert output_alphabet_size(3, 5) == 64


# -- rate table ---------------------------------------------------------------------------


@pytest.mark.parametrize("shape", sorted(EXAMPLES))
def test_rate_table_example_rows(shape):
    rho_up, rho_lo, pct_up, pct_lo, rate_up, rate_lo = EXAMPLES[shape]
    rep = {(r.m, r.n): r for r in performance_table(5)}[shape]
    assert same(rep.noise_tolerance.upper_expr, rho_up)
    assert same(rep.noise_tolerance.lower_expr, rho_lo)
    assert rounds_to(100 * rep.noise_tolerance.upper, pct_up)
    assert rounds_to(100 * rep.noise_tolerance.lower, pct_lo)
    assert rounds_to(rep.max_rate.upper, rate_up)
    assert rounds_to(rep.max_rate.lower, rate_lo)
    # four significant figures against the printed closed forms
    assert rep.noise_tolerance.upper == pytest.approx(float(rho_up), rel=5e-5)
    assert rep.noise_tolerance.lower == pytest.approx(float(rho_lo), rel=5e-5)
    assert not rep.conjecture_flag


@pytest.mark.parametrize("n", range(2, 21))
def test_general_2xn_row(n):
    rep = rate_report(2, n)
    values = (rep.noise_tolerance.upper, rep.noise_tolerance.lower, rep.max_rate.upper, rep.max_rate.lower)
    for got, form in zip(values, ROW_2N):
        assert got == pytest.approx(float(form.subs(n_, n)), rel=1e-12)
    assert rep.conjecture_flag == (n > 6)


@pytest.mark.parametrize("n", range(3, 21))
def test_general_3xn_row(n):
    rep = rate_report(3, n)
    values = (rep.noise_tolerance.upper, rep.noise_tolerance.lower, rep.max_rate.upper, rep.max_rate.lower)
    for got, form in zip(values, ROW_3N):
        assert got == pytest.approx(float(form.subs(n_, n)), rel=1e-12)
    assert rep.conjecture_flag == (n - 1 > 6)


@pytest.mark.parametrize("row,start", [(ROW_2N, 2), (ROW_3N, 3)])
def test_closed_forms_strictly_decrease(row, start):
    for form in row:
        vals = [float(form.subs(n_, n)) for n in range(start, 21)]
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_rate_is_consistent_with_tolerance():
    for rep in performance_table(6):
        r = rep.r
        expect = 2 * rep.noise_tolerance.upper**2 / ((r - 1) * math.log(2))
        assert rep.max_rate.upper == pytest.approx(expect, rel=1e-12)
        assert rep.r == 2 ** (rep.m + rep.n - 2)


def test_table_order_and_exports():
    reps = performance_table(5)
    assert [(r.m, r.n) for r in reps] == [(2, 2), (2, 3), (2, 4), (2, 5), (3, 3), (3, 4), (3, 5)]
    rows = list(csv.DictReader(io.StringIO(table_csv(reps))))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert float(rows[0]["rho_upper"]) == pytest.approx((math.sqrt(2) - 1) / 4, rel=1e-9)
    data = json.loads(table_json(reps))
    assert data[0]["noise_tolerance"]["upper_expr"] in ("-1/4 + sqrt(2)/4", "sqrt(2)/4 - 1/4")
    assert table_csv(reps) == table_csv(performance_table(5))
    with pytest.raises(DimensionError):
        performance_table(1)


def test_conjecture_off_changes_only_the_tail():
    on, off = performance_table(8), performance_table(8, conjecture=False)
    for a, b in zip(on, off):
        if max(a.m, a.n) <= 6 or (a.m == 3 and a.n <= 7):
            assert a.to_dict() == b.to_dict()
    tail = {(r.m, r.n): r for r in off}[(2, 8)]
    assert tail.omega.upper == 1 and tail.omega.upper_tag == "weak"


# -- rate curve --------------------------------------------------------------------------


def test_rate_curve_examples():
    chi = (2 + S2) / 4
    assert float(rate_curve(2, 2, chi).upper_expr) == pytest.approx(0.01031, abs=5e-6)
    assert rate_curve(3, 3, 1).upper == pytest.approx(0.00081, abs=5e-6)
    for m, n in [(2, 2), (2, 3), (3, 3), (3, 5)]:
        bar = distinguished_value(m, n)
        assert rate_curve(m, n, bar.upper_expr).lower == 0
    with pytest.raises(ValueError):
        rate_curve(2, 2, 1.5)


@pytest.mark.parametrize("shape", [(2, 2), (2, 3), (3, 3), (3, 4)])
def test_rate_curve_is_monotone_and_continuous(shape):
    grid = [k / 400 for k in range(401)]
    lows = [rate_curve(*shape, chi).lower for chi in grid]
    ups = [rate_curve(*shape, chi).upper for chi in grid]
    bar = distinguished_value(*shape)
    # the rate is quadratic in a gap below 1, so its slope is capped
    lipschitz = 4 * math.log2(math.e) / (output_alphabet_size(*shape) - 1)
    for seq in (lows, ups):
        assert all(b >= a for a, b in zip(seq, seq[1:]))
        assert max(abs(b - a) for a, b in zip(seq, seq[1:])) <= lipschitz / 400 + 1e-15
    for chi, lo in zip(grid, lows):
        if chi <= bar.lower:
            assert lo == 0
    assert all(lo <= up for lo, up in zip(lows, ups))


# -- weak bounds -------------------------------------------------------------------------


def test_weak_bounds():
    assert weak_2xn_bounds(2)[0] == 0.25
    rho7, _ = weak_2xn_bounds(7)
    assert rho7 == pytest.approx(1 / 14)
    assert rho7 < noise_tolerance(2, 3).upper
    assert weak_2xn_bounds(3)[1] == pytest.approx(1 / (126 * math.log(2)))
    assert weak_2xn_bounds(3)[1] == pytest.approx(0.01145, abs=5e-6)
    with pytest.raises(DimensionError):
        weak_2xn_bounds(1)


def test_weak_bounds_dominate_the_conjectured_row():
    for n in range(2, 15):
        rho, rate = weak_2xn_bounds(n)
        rep = rate_report(2, n)
        assert rep.noise_tolerance.upper <= rho
        assert rep.max_rate.upper <= rate


# -- 2 x n curve export --------------------------------------------------------------------


def test_bounds_curve():
    rows = bounds_curve(8)
    assert rows[0]["n"] == 1 and rows[0]["classical"] == 0.5
    for r in rows[1:]:
        assert r["classical"] <= r["quantum_lower"] <= r["almost_quantum_upper"] + 1e-15
        assert r["conjectured"] == (r["n"] > 6)
    text = bounds_curve_csv(3)
    assert text.splitlines()[0] == "n,classical,quantum_lower,almost_quantum_upper,conjectured"
    assert len(text.splitlines()) == 4
