"""Numeric mode selection and rational/float conversion helpers.

All model data is stored as exact rationals (`fractions.Fraction`); the
numeric mode only decides how computations run: ``exact`` keeps rational
arithmetic end to end, ``float`` converts to binary64 at the solver
boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

# Probability rows must sum to 1 within this bound in float mode.
ROW_SUM_TOL = 1e-12

DEFAULT_TOLERANCE = 1e-9
DEFAULT_TIE_TOLERANCE = 1e-9
DEFAULT_FLOAT_SLACK = 1e-12


@dataclass(frozen=True)
class NumericMode:
    """Arithmetic regime for a run: exact rationals or binary64."""

    kind: str  # "exact" | "float"
    tolerance: float = 0.0

    def __post_init__(self):
        if self.kind not in ("exact", "float"):
            raise ValueError(f"unknown numeric mode {self.kind!r}")
        if self.tolerance < 0:
            raise ValueError("tolerance must be nonnegative")
        if self.kind == "exact" and self.tolerance != 0:
            raise ValueError("exact mode requires tolerance 0")

    @property
    def is_exact(self):
        return self.kind == "exact"

    @property
    def default_slack(self):
        return Fraction(0) if self.is_exact else DEFAULT_FLOAT_SLACK


EXACT = NumericMode("exact", 0.0)
FLOAT = NumericMode("float", DEFAULT_TOLERANCE)


def as_fraction(value) -> Fraction:
    """Coerce a number-like value to an exact Fraction.

    Strings accept decimal literals ("0.54") and ratios ("27/50"); floats
    convert to their exact binary value.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers")
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a rational")


def format_fraction(q: Fraction) -> str:
    """Canonical text form: plain integer or 'p/q'."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def number_for_json(value, mode: NumericMode):
    """Render a computed number for JSON output in the given mode."""
    if isinstance(value, Fraction):
        if mode.is_exact:
            return format_fraction(value)
        return float(value)
    return float(value)
