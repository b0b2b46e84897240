"""Closed-form randomness-expansion figures for magic rectangle games.

Quantities are tracked as intervals because the quantum value of a 2 x n game
is only bracketed for n >= 3. Every endpoint carries a provenance tag:

``exact``       a proven exact value
``formula``     a proven bound given by a closed form (for the 2 x n upper
                bound with n <= 6 this is the level-1+AB value, checked
                numerically)
``conjecture``  relies on the closed form for the level-1+AB value holding
                beyond n = 6
``weak``        the trivial bound used when conjectures are switched off

Values are computed symbolically with sympy and converted to floats last.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import sympy as sp

from .errors import DimensionError, NotUsable

TAGS = ("exact", "formula", "weak", "conjecture")
LOG2E = 1 / math.log(2)
CONJECTURE_VERIFIED_UP_TO = 6


def _worst(*tags: str) -> str:
    if all(t == "exact" for t in tags):
        return "exact"
    return max(tags, key=TAGS.index)


def _expr_str(e: sp.Expr) -> str:
    return str(sp.nsimplify(sp.radsimp(sp.simplify(e))))


@dataclass(frozen=True)
class ValueBounds:
    """Closed interval ``[lower, upper]`` with exact symbolic endpoints."""

    lower_expr: sp.Expr = field(repr=False)
    upper_expr: sp.Expr = field(repr=False)
    lower_tag: str = "exact"
    upper_tag: str = "exact"

    def __post_init__(self):
        for t in (self.lower_tag, self.upper_tag):
            if t not in TAGS:
                raise ValueError(f"unknown provenance tag {t!r}")
        lo, hi = self.lower, self.upper
        if lo > hi + 1e-15:
            raise ValueError(f"empty interval [{lo}, {hi}]")

    @classmethod
    def point(cls, expr, tag: str = "exact") -> "ValueBounds":
        e = sp.sympify(expr)
        return cls(e, e, tag, tag)

    @property
    def lower(self) -> float:
        return float(self.lower_expr)

    @property
    def upper(self) -> float:
        return float(self.upper_expr)

    @property
    def is_exact(self) -> bool:
        return self.lower_tag == self.upper_tag == "exact" and sp.simplify(
            self.lower_expr - self.upper_expr
        ) == 0

    @property
    def conjectural(self) -> bool:
        return "conjecture" in (self.lower_tag, self.upper_tag)

    def __contains__(self, value: float) -> bool:
        return self.lower - 1e-12 <= value <= self.upper + 1e-12

    def __sub__(self, other: "ValueBounds") -> "ValueBounds":
        return ValueBounds(
            self.lower_expr - other.upper_expr,
            self.upper_expr - other.lower_expr,
            _worst(self.lower_tag, other.upper_tag),
            _worst(self.upper_tag, other.lower_tag),
        )

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "lower_tag": self.lower_tag,
            "upper_tag": self.upper_tag,
            "lower_expr": _expr_str(self.lower_expr),
            "upper_expr": _expr_str(self.upper_expr),
        }


def _check_dims(m: int, n: int) -> None:
    if m < 1 or n < 1:
        raise DimensionError("dimensions must be positive")


def quantum_value_bounds(m: int, n: int, conjecture: bool = True) -> ValueBounds:
    """Best known bracket on the quantum value of an ``m x n`` game."""
    _check_dims(m, n)
    m, n = sorted((m, n))
    if m == 1:
        return ValueBounds.point(1 - sp.Rational(1, n))
    if m >= 3:
        return ValueBounds.point(sp.Integer(1))
    if n == 2:
        return ValueBounds.point((2 + sp.sqrt(2)) / 4)
    lower = 1 - (2 - sp.sqrt(2)) / (2 * n)
    if n <= CONJECTURE_VERIFIED_UP_TO:
        return ValueBounds(lower, (1 + sp.sqrt(1 - sp.Rational(1, n))) / 2, "formula", "formula")
    if conjecture:
        return ValueBounds(lower, (1 + sp.sqrt(1 - sp.Rational(1, n))) / 2, "formula", "conjecture")
    return ValueBounds(lower, sp.Integer(1), "formula", "weak")


def _shrink(small: ValueBounds, m: int, n: int) -> ValueBounds:
    """``1 - ((m-1)(n-1)/(mn)) (1 - w)`` applied to both endpoints."""
    k = sp.Rational((m - 1) * (n - 1), m * n)
    return ValueBounds(
        1 - k * (1 - small.lower_expr),
        1 - k * (1 - small.upper_expr),
        small.lower_tag,
        small.upper_tag,
    )


def distinguished_value(m: int, n: int, conjecture: bool = True) -> ValueBounds:
    """Quantum value when input pair (1, 1) must be answered deterministically."""
    if m < 2 or n < 2:
        raise DimensionError("a distinguished input needs m, n >= 2")
    return _shrink(quantum_value_bounds(m - 1, n - 1, conjecture), m, n)


def usable_in_rgen(m: int, n: int) -> bool:
    """True when the quantum value strictly beats the distinguished-input value."""
    _check_dims(m, n)
    m, n = sorted((m, n))
    return m in (2, 3) and n >= 2


def _require_usable(m: int, n: int) -> None:
    if not usable_in_rgen(m, n):
        raise NotUsable(f"{m}x{n} games certify no randomness in the spot-checking protocol")


def noise_tolerance(m: int, n: int, conjecture: bool = True) -> ValueBounds:
    """Largest score deficit ``omega - bar omega`` still certifying randomness."""
    _require_usable(m, n)
    return quantum_value_bounds(m, n, conjecture) - distinguished_value(m, n, conjecture)


def output_alphabet_size(m: int, n: int) -> int:
    """Joint outcomes per round: ``2^(n-1) * 2^(m-1)``."""
    return 2 ** (m + n - 2)


def _rate_expr(gap: sp.Expr, r: int) -> sp.Expr:
    return 2 * gap**2 / ((r - 1) * sp.log(2))


def rate_value(chi: float, bar: float, r: int) -> float:
    if chi <= bar:
        return 0.0
    return 2 * LOG2E * (chi - bar) ** 2 / (r - 1)


def rate_curve(m: int, n: int, chi, conjecture: bool = True) -> ValueBounds:
    """Extractable bits per round at expected score ``chi``.

    An interval because the distinguished-input value is itself bracketed;
    the lower rate uses the upper end of that bracket.
    """
    _require_usable(m, n)
    chi_e = sp.nsimplify(chi) if isinstance(chi, (int, float)) else sp.sympify(chi)
    if not 0 <= float(chi_e) <= 1:
        raise ValueError("chi must lie in [0, 1]")
    bar = distinguished_value(m, n, conjecture)
    r = output_alphabet_size(m, n)

    def branch(b: sp.Expr) -> sp.Expr:
        gap = chi_e - b
        return _rate_expr(gap, r) if float(gap) > 0 else sp.Integer(0)

    return ValueBounds(branch(bar.upper_expr), branch(bar.lower_expr), bar.upper_tag, bar.lower_tag)


def weak_2xn_bounds(n: int) -> tuple[float, float]:
    """Conjecture-free ceilings on noise tolerance and rate for 2 x n games."""
    if n < 2:
        raise DimensionError("need n >= 2")
    return 1 / (2 * n), LOG2E / (2 * n * n * (2**n - 1))


@dataclass(frozen=True)
class RateReport:
    m: int
    n: int
    omega: ValueBounds
    bar_omega: ValueBounds
    noise_tolerance: ValueBounds
    max_rate: ValueBounds
    r: int
    conjecture_flag: bool

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "r": self.r,
            "conjecture_flag": self.conjecture_flag,
            "omega": self.omega.to_dict(),
            "bar_omega": self.bar_omega.to_dict(),
            "noise_tolerance": self.noise_tolerance.to_dict(),
            "max_rate": self.max_rate.to_dict(),
        }

    def csv_row(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "rho_lower": self.noise_tolerance.lower,
            "rho_upper": self.noise_tolerance.upper,
            "rate_lower": self.max_rate.lower,
            "rate_upper": self.max_rate.upper,
            "conjecture_flag": self.conjecture_flag,
        }


def rate_report(m: int, n: int, conjecture: bool = True) -> RateReport:
    _require_usable(m, n)
    omega = quantum_value_bounds(m, n, conjecture)
    bar = distinguished_value(m, n, conjecture)
    rho = omega - bar
    r = output_alphabet_size(m, n)
    rate = ValueBounds(
        _rate_expr(rho.lower_expr, r),
        _rate_expr(rho.upper_expr, r),
        rho.lower_tag,
        rho.upper_tag,
    )
    flag = any(v.conjectural for v in (omega, bar, rho))
    return RateReport(m, n, omega, bar, rho, rate, r, flag)


def performance_table(max_n: int, conjecture: bool = True) -> list[RateReport]:
    """One report per usable shape up to transposition, ``2 x k`` then ``3 x k``."""
    if max_n < 2:
        raise DimensionError("max_n must be at least 2")
    shapes = [(2, k) for k in range(2, max_n + 1)] + [(3, k) for k in range(3, max_n + 1)]
    return [rate_report(m, n, conjecture) for m, n in shapes]


CSV_COLUMNS = ("m", "n", "rho_lower", "rho_upper", "rate_lower", "rate_upper", "conjecture_flag")


def table_csv(reports: list[RateReport]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for rep in reports:
        row = rep.csv_row()
        writer.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def table_json(reports: list[RateReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=1, sort_keys=True)


# -- 2 x n value curves ------------------------------------------------------------

CURVE_COLUMNS = ("n", "classical", "quantum_lower", "almost_quantum_upper", "conjectured")


def bounds_curve(max_n: int) -> list[dict]:
    """Classical value, quantum lower bound and level-1+AB upper bound for
    2 x n games, n = 1..max_n; ``conjectured`` marks the unverified tail."""
    if max_n < 1:
        raise DimensionError("max_n must be positive")
    rows = []
    for n in range(1, max_n + 1):
        rows.append(
            {
                "n": n,
                "classical": 1 - 1 / (2 * n),
                "quantum_lower": 1 - (2 - math.sqrt(2)) / (2 * n) if n >= 2 else 0.5,
                "almost_quantum_upper": (1 + math.sqrt(1 - 1 / n)) / 2,
                "conjectured": n > CONJECTURE_VERIFIED_UP_TO,
            }
        )
    return rows


def bounds_curve_csv(max_n: int) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CURVE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in bounds_curve(max_n):
        writer.writerow({k: (f"{v:.10f}" if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()
