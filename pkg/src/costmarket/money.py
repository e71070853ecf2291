"""Exact monetary arithmetic: rational amounts plus an infinite sentinel.

Every price, cost, value, and welfare figure in this package is a
``fractions.Fraction``, so sums, comparisons, and argmax tie-breaking are
exact and platform independent. A single ``INF`` sentinel stands for
"unobtainable": it compares above every finite amount and deliberately
supports no arithmetic, so an accidental ``INF + x`` fails loudly instead
of silently contaminating a ledger.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union


class Infinite:
    """Singleton ordered above every finite amount; comparisons only."""

    _instance: "Infinite | None" = None

    def __new__(cls) -> "Infinite":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __eq__(self, other: object) -> bool:
        return other is self

    def __hash__(self) -> int:
        return hash(("costmarket", "INF"))

    def __lt__(self, other: object) -> bool:
        return False

    def __le__(self, other: object) -> bool:
        return other is self

    def __gt__(self, other: object) -> bool:
        return other is not self

    def __ge__(self, other: object) -> bool:
        return True


INF = Infinite()

#: A finite amount or the INF sentinel ("Money-or-infinite" in contracts).
Amount = Union[Fraction, Infinite]


def is_finite(x: Amount) -> bool:
    return x is not INF


def as_fraction(x: "int | str | Fraction", name: str = "amount") -> Fraction:
    """Coerce an int, string, or Fraction to Fraction; floats are rejected.

    Floats are refused on purpose: one float in a ledger would silently
    break exactness everywhere downstream.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"{name} must be an int, str, or Fraction, got {type(x).__name__}")


def nonnegative(x: "int | str | Fraction", name: str = "amount") -> Fraction:
    value = as_fraction(x, name)
    if value < 0:
        raise ValueError(f"{name} must be non-negative, got {value}")
    return value


def format_amount(x: Amount) -> str:
    """Serialize to the wire form: 'inf', or the exact fraction string."""
    if x is INF:
        return "inf"
    return str(x)


def parse_amount(s: str) -> Amount:
    if s == "inf":
        return INF
    return Fraction(s)


def ceil_log2(q: Fraction) -> int:
    """Smallest integer e >= 0 with 2**e >= q, computed exactly."""
    if q <= 1:
        return 0
    e = 0
    num, den = q.numerator, q.denominator
    while (den << e) < num:
        e += 1
    return e
