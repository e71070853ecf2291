"""Per-item production-cost curves with exact marginal/cumulative/inverse queries.

A curve describes what it costs the seller to obtain the k-th copy of one
item (k counted from 1), with marginal costs that never decrease. Each kind
answers four queries exactly:

* ``marginal(k)``       -- cost of the k-th copy (INF once the copy is
  unobtainable, e.g. past ``copy_limit`` or past a supply cap),
* ``cumulative(k)``     -- total cost of the first k copies,
* ``copies_below(p)``   -- how many copies have marginal cost <= p,
* ``area_under(p)``     -- sum of (p - marginal cost) over those copies,
  i.e. the area enclosed between the curve and the horizontal line at p.

Curves are immutable after construction and safe to share between any
number of readers. Items are indexed elsewhere; a curve knows nothing about
the item it belongs to.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .money import INF, Amount, as_fraction, is_finite, nonnegative


class UnboundedInverseError(ValueError):
    """copies_below(p) would be infinite (the curve never exceeds p)."""


def _check_copy_index(k: int) -> None:
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise ValueError(f"copy index must be a positive integer, got {k!r}")


def _check_count(k: int) -> None:
    if not isinstance(k, int) or isinstance(k, bool) or k < 0:
        raise ValueError(f"copy count must be a non-negative integer, got {k!r}")


def _iroot(n: int, d: int) -> int:
    """Largest r >= 0 with r**d <= n, exact integer arithmetic."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return 0
    hi = 1
    while hi**d <= n:
        hi <<= 1
    lo = hi >> 1
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if mid**d <= n:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class CostCurve:
    """Base class; subclasses fill in the kind-specific closed forms.

    ``copy_limit`` caps the obtainable copies: every query past it sees an
    infinite marginal cost. ``None`` means the kind's own structure decides
    (closed forms extend forever, tables end where they end).
    """

    copy_limit: Optional[int] = field(default=None, kw_only=True)

    def __post_init__(self) -> None:
        if self.copy_limit is not None:
            if not isinstance(self.copy_limit, int) or self.copy_limit < 1:
                raise ValueError(f"copy_limit must be a positive integer, got {self.copy_limit!r}")

    # -- kind hooks --------------------------------------------------------

    def _marginal(self, k: int) -> Amount:
        raise NotImplementedError

    def _cumulative(self, k: int) -> Amount:
        raise NotImplementedError

    def _copies_below(self, p: Fraction) -> Optional[int]:
        """Largest k with marginal(k) <= p, ignoring copy_limit.

        Returns None when every copy qualifies (the curve never rises
        above p), which is only legal if a copy_limit bounds it.
        """
        raise NotImplementedError

    def is_convex(self) -> bool:
        """True when marginal-cost increments never decrease (finite part)."""
        raise NotImplementedError

    def _params(self) -> dict:
        raise NotImplementedError

    # -- shared operations -------------------------------------------------

    def marginal(self, k: int) -> Amount:
        """Cost of the k-th copy; INF once the copy is unobtainable."""
        _check_copy_index(k)
        if self.copy_limit is not None and k > self.copy_limit:
            return INF
        return self._marginal(k)

    def cumulative(self, k: int) -> Amount:
        """Total cost of the first k copies; cumulative(0) == 0."""
        _check_count(k)
        if k == 0:
            return Fraction(0)
        if self.copy_limit is not None and k > self.copy_limit:
            return INF
        return self._cumulative(k)

    def copies_below(self, p: "Fraction | int | str") -> int:
        """Largest k with marginal(k) <= p (0 when even the first copy costs more)."""
        price = nonnegative(p, "price")
        k = self._copies_below(price)
        if k is None:
            if self.copy_limit is None:
                raise UnboundedInverseError(
                    f"{type(self).__name__} never exceeds {price}; set copy_limit to bound it"
                )
            return self.copy_limit
        if self.copy_limit is not None:
            return min(k, self.copy_limit)
        return k

    def area_under(self, p: "Fraction | int | str") -> Fraction:
        """Sum of (p - marginal(k)) over all copies with marginal(k) <= p."""
        price = nonnegative(p, "price")
        k = self.copies_below(price)
        total = self.cumulative(k)
        assert is_finite(total)
        return k * price - total

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        out = {"kind": _KIND_BY_CLASS[type(self)]}
        out.update(self._params())
        out["copy_limit"] = self.copy_limit
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), separators=(",", ":"))


@dataclass(frozen=True)
class LinearCurve(CostCurve):
    """marginal(k) = a * k for a positive rational slope a."""

    a: Fraction

    def __post_init__(self) -> None:
        super().__post_init__()
        object.__setattr__(self, "a", nonnegative(self.a, "a"))
        if self.a == 0:
            raise ValueError("linear curve needs a positive slope")

    def _marginal(self, k: int) -> Amount:
        return self.a * k

    def _cumulative(self, k: int) -> Amount:
        return self.a * k * (k + 1) / 2

    def _copies_below(self, p: Fraction) -> Optional[int]:
        q = p / self.a
        return q.numerator // q.denominator

    def is_convex(self) -> bool:
        return True

    def _params(self) -> dict:
        return {"a": str(self.a)}


@dataclass(frozen=True)
class PolynomialCurve(CostCurve):
    """marginal(k) = a * k**d for a positive rational a and integer d >= 1."""

    a: Fraction
    d: int

    def __post_init__(self) -> None:
        super().__post_init__()
        object.__setattr__(self, "a", nonnegative(self.a, "a"))
        if self.a == 0:
            raise ValueError("polynomial curve needs a positive coefficient")
        if not isinstance(self.d, int) or self.d < 1:
            raise ValueError(f"degree must be an integer >= 1, got {self.d!r}")

    def _marginal(self, k: int) -> Amount:
        return self.a * k**self.d

    def _cumulative(self, k: int) -> Amount:
        d = self.d
        if d == 1:
            s: "int | Fraction" = Fraction(k * (k + 1), 2)
        elif d == 2:
            s = Fraction(k * (k + 1) * (2 * k + 1), 6)
        elif d == 3:
            s = Fraction(k * (k + 1), 2) ** 2
        else:
            s = sum(i**d for i in range(1, k + 1))
        return self.a * s

    def _copies_below(self, p: Fraction) -> Optional[int]:
        q = p / self.a
        return _iroot(q.numerator // q.denominator, self.d)

    def is_convex(self) -> bool:
        return True

    def _params(self) -> dict:
        return {"a": str(self.a), "d": self.d}


@dataclass(frozen=True)
class LogCurve(CostCurve):
    """marginal(k) = a * ceil(log2(k + 1)), kept rational via bit lengths.

    ceil(log2(k + 1)) equals k.bit_length() for k >= 1, so the curve steps
    up by a at every power of two: a, 2a, 2a, 3a, 3a, 3a, 3a, 4a, ...
    """

    a: Fraction

    def __post_init__(self) -> None:
        super().__post_init__()
        object.__setattr__(self, "a", nonnegative(self.a, "a"))
        if self.a == 0:
            raise ValueError("log curve needs a positive coefficient")

    def _marginal(self, k: int) -> Amount:
        return self.a * k.bit_length()

    def _cumulative(self, k: int) -> Amount:
        # sum of bit lengths 1..k: full levels t < T contribute t * 2**(t-1),
        # the top level T covers k - 2**(T-1) + 1 copies.
        t = k.bit_length()
        full = (t - 2) * (1 << (t - 1)) + 1  # sum over levels 1..t-1
        return self.a * (full + t * (k - (1 << (t - 1)) + 1))

    def _copies_below(self, p: Fraction) -> Optional[int]:
        q = p / self.a
        t = q.numerator // q.denominator
        if t <= 0:
            return 0
        return (1 << t) - 1

    def is_convex(self) -> bool:
        return False

    def _params(self) -> dict:
        return {"a": str(self.a)}


@dataclass(frozen=True)
class LimitedSupplyCurve(CostCurve):
    """free_copies at zero cost, then every further copy costs cap_cost.

    cap_cost may be INF, modeling a hard supply limit: some copies free,
    all further copies unobtainable.
    """

    free_copies: int
    cap_cost: Amount

    def __post_init__(self) -> None:
        super().__post_init__()
        if not isinstance(self.free_copies, int) or self.free_copies < 0:
            raise ValueError(f"free_copies must be a non-negative integer, got {self.free_copies!r}")
        if self.cap_cost is not INF:
            object.__setattr__(self, "cap_cost", nonnegative(self.cap_cost, "cap_cost"))

    def _marginal(self, k: int) -> Amount:
        if k <= self.free_copies:
            return Fraction(0)
        return self.cap_cost

    def _cumulative(self, k: int) -> Amount:
        if k <= self.free_copies:
            return Fraction(0)
        if self.cap_cost is INF:
            return INF
        return (k - self.free_copies) * self.cap_cost

    def _copies_below(self, p: Fraction) -> Optional[int]:
        if self.cap_cost is INF or self.cap_cost > p:
            return self.free_copies
        return None  # flat cap below p: every copy qualifies

    def is_convex(self) -> bool:
        # increments are 0,...,0,cap,0,0,... -- convex only when the jump
        # is degenerate (no free region, or a zero cap).
        if self.cap_cost is INF:
            return False
        return self.free_copies == 0 or self.cap_cost == 0

    def _params(self) -> dict:
        from .money import format_amount

        return {"free_copies": self.free_copies, "cap_cost": format_amount(self.cap_cost)}


@dataclass(frozen=True)
class TableCurve(CostCurve):
    """Explicit marginal costs per copy; copies past the table are unobtainable."""

    values: tuple

    def __post_init__(self) -> None:
        super().__post_init__()
        vals = tuple(nonnegative(v, f"values[{i}]") for i, v in enumerate(self.values))
        if not vals:
            raise ValueError("table curve needs at least one entry")
        for i in range(1, len(vals)):
            if vals[i] < vals[i - 1]:
                raise ValueError(
                    f"marginal costs must be non-decreasing; values[{i}]={vals[i]} < values[{i - 1}]={vals[i - 1]}"
                )
        object.__setattr__(self, "values", vals)
        prefix = [Fraction(0)]
        for v in vals:
            prefix.append(prefix[-1] + v)
        object.__setattr__(self, "_prefix", tuple(prefix))

    def _marginal(self, k: int) -> Amount:
        if k > len(self.values):
            return INF
        return self.values[k - 1]

    def _cumulative(self, k: int) -> Amount:
        if k > len(self.values):
            return INF
        return self._prefix[k]  # type: ignore[attr-defined]

    def _copies_below(self, p: Fraction) -> Optional[int]:
        lo, hi = 0, len(self.values)
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.values[mid - 1] <= p:
                lo = mid
            else:
                hi = mid - 1
        return lo

    def is_convex(self) -> bool:
        n = len(self.values)
        if n < 3:
            return True
        prev = self.values[1] - self.values[0]
        for i in range(2, n):
            step = self.values[i] - self.values[i - 1]
            if step < prev:
                return False
            prev = step
        return True

    def _params(self) -> dict:
        return {"values": [str(v) for v in self.values]}


_KIND_BY_CLASS = {
    LinearCurve: "linear",
    PolynomialCurve: "poly",
    LogCurve: "log",
    LimitedSupplyCurve: "limited",
    TableCurve: "table",
}


def curve_from_json_dict(d: dict) -> CostCurve:
    kind = d.get("kind")
    limit = d.get("copy_limit")
    if kind == "linear":
        return LinearCurve(a=Fraction(d["a"]), copy_limit=limit)
    if kind == "poly":
        return PolynomialCurve(a=Fraction(d["a"]), d=int(d["d"]), copy_limit=limit)
    if kind == "log":
        return LogCurve(a=Fraction(d["a"]), copy_limit=limit)
    if kind == "limited":
        cap = d["cap_cost"]
        cap_amount: Amount = INF if cap == "inf" else Fraction(cap)
        return LimitedSupplyCurve(free_copies=int(d["free_copies"]), cap_cost=cap_amount, copy_limit=limit)
    if kind == "table":
        return TableCurve(values=tuple(Fraction(v) for v in d["values"]), copy_limit=limit)
    raise ValueError(f"unknown curve kind {kind!r}")


def curve_from_json(s: str) -> CostCurve:
    return curve_from_json_dict(json.loads(s))
