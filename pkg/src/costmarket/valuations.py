"""Buyer valuation functions and exact utility-maximizing demand.

A valuation maps bundles (subsets of the item universe 0..n-1) to
non-negative exact values, with the empty bundle worth 0. Given a vector
of posted prices (one per item, possibly INF), ``demand`` returns the
bundle maximizing value minus price. Ties are resolved deterministically:
highest utility, then fewest items, then lexicographically smallest item
tuple. Items priced INF never appear in a demanded bundle.

Valuations and price vectors are immutable values; concurrent read-only
use is safe.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Tuple

from .money import INF, Amount, is_finite, nonnegative

#: One posted price per item, in item-index order. INF means "not for sale".
PriceVector = Tuple[Amount, ...]

#: Hard cap on exhaustive demand enumeration for table valuations.
MAX_ENUMERATION_ITEMS = 20


def _as_bundle(items: Iterable[int], n: int) -> frozenset:
    bundle = frozenset(items)
    for i in bundle:
        if not isinstance(i, int) or isinstance(i, bool) or not 0 <= i < n:
            raise ValueError(f"item index {i!r} outside universe 0..{n - 1}")
    return bundle


def _check_prices(prices: Sequence[Amount], n: int) -> None:
    if len(prices) != n:
        raise ValueError(f"price vector has {len(prices)} entries, expected {n}")
    for i, p in enumerate(prices):
        if p is INF:
            continue
        if not isinstance(p, Fraction) or p < 0:
            raise ValueError(f"price for item {i} must be a non-negative Fraction or INF, got {p!r}")


def _better(utility: Fraction, items: tuple, best_utility: Fraction, best_items: tuple) -> bool:
    """Tie-breaking order: utility desc, cardinality asc, item tuple asc."""
    if utility != best_utility:
        return utility > best_utility
    if len(items) != len(best_items):
        return len(items) < len(best_items)
    return items < best_items


class Valuation:
    """Base class. Subclasses implement ``value`` and may fast-path ``demand``."""

    n: int

    def value(self, items: Iterable[int]) -> Fraction:
        raise NotImplementedError

    def demand(self, prices: Sequence[Amount]) -> frozenset:
        """Utility-maximizing bundle at the given prices (ties per module doc)."""
        raise NotImplementedError

    def to_json_dict(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), separators=(",", ":"))


@dataclass(frozen=True)
class AdditiveValuation(Valuation):
    """value(S) = sum of per-item values over S."""

    item_values: tuple

    def __post_init__(self) -> None:
        vals = tuple(nonnegative(v, f"item_values[{i}]") for i, v in enumerate(self.item_values))
        object.__setattr__(self, "item_values", vals)

    @property
    def n(self) -> int:
        return len(self.item_values)

    def value(self, items: Iterable[int]) -> Fraction:
        bundle = _as_bundle(items, self.n)
        return sum((self.item_values[i] for i in bundle), Fraction(0))

    def demand(self, prices: Sequence[Amount]) -> frozenset:
        # Item i belongs to the argmax exactly when v_i > p_i: a zero-margin
        # item ties with dropping it, and fewer items wins the tie.
        _check_prices(prices, self.n)
        return frozenset(
            i for i, p in enumerate(prices) if is_finite(p) and self.item_values[i] > p
        )

    def to_json_dict(self) -> dict:
        return {"kind": "additive", "values": [str(v) for v in self.item_values]}


@dataclass(frozen=True)
class UnitDemandValuation(Valuation):
    """value(S) = max per-item value over S (0 on the empty bundle)."""

    item_values: tuple

    def __post_init__(self) -> None:
        vals = tuple(nonnegative(v, f"item_values[{i}]") for i, v in enumerate(self.item_values))
        object.__setattr__(self, "item_values", vals)

    @property
    def n(self) -> int:
        return len(self.item_values)

    def value(self, items: Iterable[int]) -> Fraction:
        bundle = _as_bundle(items, self.n)
        if not bundle:
            return Fraction(0)
        return max(self.item_values[i] for i in bundle)

    def demand(self, prices: Sequence[Amount]) -> frozenset:
        # Only singletons can win: extra items add price but never value.
        _check_prices(prices, self.n)
        best_i = -1
        best_u = Fraction(0)
        for i, p in enumerate(prices):
            if not is_finite(p):
                continue
            u = self.item_values[i] - p
            if u > best_u:
                best_u, best_i = u, i
        if best_i < 0:
            return frozenset()
        return frozenset((best_i,))

    def to_json_dict(self) -> dict:
        return {"kind": "unit_demand", "values": [str(v) for v in self.item_values]}


@dataclass(frozen=True)
class SingleMindedValuation(Valuation):
    """Worth ``bundle_value`` for any superset of ``bundle``, 0 otherwise."""

    universe_size: int
    bundle: frozenset
    bundle_value: Fraction

    def __post_init__(self) -> None:
        if self.universe_size < 1:
            raise ValueError("universe must have at least one item")
        object.__setattr__(self, "bundle", _as_bundle(self.bundle, self.universe_size))
        if not self.bundle:
            raise ValueError("single-minded bundle must be non-empty (value on empty bundle is 0)")
        object.__setattr__(self, "bundle_value", nonnegative(self.bundle_value, "bundle_value"))

    @property
    def n(self) -> int:
        return self.universe_size

    def value(self, items: Iterable[int]) -> Fraction:
        bundle = _as_bundle(items, self.n)
        return self.bundle_value if self.bundle <= bundle else Fraction(0)

    def demand(self, prices: Sequence[Amount]) -> frozenset:
        # Candidates reduce to the wanted bundle or nothing: supersets cost
        # at least as much, strict subsets are worthless.
        _check_prices(prices, self.n)
        total = Fraction(0)
        for i in self.bundle:
            if not is_finite(prices[i]):
                return frozenset()
            total += prices[i]
        if self.bundle_value - total > 0:
            return self.bundle
        return frozenset()

    def to_json_dict(self) -> dict:
        return {
            "kind": "single_minded",
            "n": self.universe_size,
            "bundle": sorted(self.bundle),
            "value": str(self.bundle_value),
        }


@dataclass(frozen=True)
class TableValuation(Valuation):
    """Explicit bundle-to-value table.

    ``closure`` decides what unlisted bundles are worth:
      * "exact":    0,
      * "monotone": the best listed subset's value (free disposal).

    The empty bundle is always worth 0.
    """

    universe_size: int
    entries: tuple  # ((frozenset, Fraction), ...)
    closure: str = "exact"

    def __post_init__(self) -> None:
        if self.universe_size < 1:
            raise ValueError("universe must have at least one item")
        if self.closure not in ("exact", "monotone"):
            raise ValueError(f"closure must be 'exact' or 'monotone', got {self.closure!r}")
        table = {}
        for bundle, v in self.entries:
            b = _as_bundle(bundle, self.universe_size)
            table[b] = nonnegative(v, f"value of bundle {sorted(b)}")
        if table.get(frozenset(), Fraction(0)) != 0:
            raise ValueError("the empty bundle must be worth 0")
        table[frozenset()] = Fraction(0)
        normalized = tuple(sorted(table.items(), key=lambda kv: _mask(kv[0])))
        object.__setattr__(self, "entries", normalized)
        object.__setattr__(self, "_table", dict(normalized))

    @property
    def n(self) -> int:
        return self.universe_size

    def value(self, items: Iterable[int]) -> Fraction:
        bundle = _as_bundle(items, self.n)
        table = self._table  # type: ignore[attr-defined]
        if self.closure == "exact":
            return table.get(bundle, Fraction(0))
        best = Fraction(0)
        for listed, v in table.items():
            if listed <= bundle and v > best:
                best = v
        return best

    def demand(self, prices: Sequence[Amount]) -> frozenset:
        _check_prices(prices, self.n)
        if self.n > MAX_ENUMERATION_ITEMS:
            raise ValueError(
                f"table demand enumerates 2**n bundles; n={self.n} exceeds the cap of {MAX_ENUMERATION_ITEMS}"
            )
        finite = [i for i, p in enumerate(prices) if is_finite(p)]
        best_items: tuple = ()
        best_u = Fraction(0)
        for mask in range(1 << len(finite)):
            items = tuple(finite[j] for j in range(len(finite)) if mask >> j & 1)
            u = self.value(items) - sum((prices[i] for i in items), Fraction(0))
            if _better(u, items, best_u, best_items):
                best_u, best_items = u, items
        return frozenset(best_items)

    def to_json_dict(self) -> dict:
        return {
            "kind": "table",
            "n": self.universe_size,
            "closure": self.closure,
            "entries": [[sorted(b), str(v)] for b, v in self.entries if b],
        }


def _mask(bundle: frozenset) -> int:
    m = 0
    for i in bundle:
        m |= 1 << i
    return m


def valuation_from_json_dict(d: dict) -> Valuation:
    kind = d.get("kind")
    if kind == "additive":
        return AdditiveValuation(item_values=tuple(Fraction(v) for v in d["values"]))
    if kind == "unit_demand":
        return UnitDemandValuation(item_values=tuple(Fraction(v) for v in d["values"]))
    if kind == "single_minded":
        return SingleMindedValuation(
            universe_size=int(d["n"]),
            bundle=frozenset(d["bundle"]),
            bundle_value=Fraction(d["value"]),
        )
    if kind == "table":
        return TableValuation(
            universe_size=int(d["n"]),
            closure=d.get("closure", "exact"),
            entries=tuple((frozenset(b), Fraction(v)) for b, v in d["entries"]),
        )
    raise ValueError(f"unknown valuation kind {kind!r}")


def valuation_from_json(s: str) -> Valuation:
    return valuation_from_json_dict(json.loads(s))
