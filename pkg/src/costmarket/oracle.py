"""Exact offline benchmarks and the per-item profit-vs-area report.

Everything here is desk-scale on purpose: the welfare optimum is found by
exhaustive search over all bundle assignments (memoized over per-item copy
counts, which preserves exactness), guarded by a hard budget that refuses
oversized instances instead of silently truncating. Additive buyers get a
separable fast path that is exact for any size.

The structural report pairs each item's realized profit with the area
between its cost curve and the horizontal line at the first unsold copy's
price; welfare guarantees of mark-up schemes hinge on that per-item
comparison, so the report makes it observable on every transcript.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import List, Optional, Sequence, Tuple

from .cost_model import CostCurve
from .money import INF, Amount, is_finite
from .market import Transcript
from .valuations import AdditiveValuation, Valuation

#: Refuse exhaustive search once the raw space (2**n)**m passes 2**budget_bits.
DEFAULT_BUDGET_BITS = 24


class OptBudgetExceededError(RuntimeError):
    """The instance is too large for exhaustive search under the given budget."""


@dataclass(frozen=True)
class Allocation:
    """An offline assignment of one bundle per buyer."""

    bundles: Tuple[Tuple[int, ...], ...]
    copies: Tuple[int, ...]
    value_total: Fraction
    cost_total: Fraction
    welfare: Fraction


def _check_budget(n: int, m: int, budget_bits: int) -> None:
    if n * m > budget_bits:
        raise OptBudgetExceededError(
            f"(2**{n})**{m} assignments exceed the 2**{budget_bits} budget; "
            "shrink the instance, raise the budget, or use the additive fast path"
        )


def _bundle_items(mask: int, n: int) -> Tuple[int, ...]:
    return tuple(i for i in range(n) if mask >> i & 1)


def opt_welfare_bruteforce(
    curves: Sequence[CostCurve], buyers: Sequence[Valuation], budget_bits: int = DEFAULT_BUDGET_BITS
) -> Allocation:
    """Exact welfare-maximizing allocation by exhaustive search.

    Ties go to the lexicographically smallest tuple of bundle bitmasks in
    buyer order. Buyers take at most one copy of an item each; the search
    walks per-item copy counts so marginal costs (including INF cut-offs)
    are priced exactly.
    """
    n, m = len(curves), len(buyers)
    _check_budget(n, m, budget_bits)
    masks = list(range(1 << n))
    bundle_cache = [_bundle_items(mask, n) for mask in masks]
    values = [[buyer.value(bundle_cache[mask]) for mask in masks] for buyer in buyers]

    @lru_cache(maxsize=None)
    def best_rest(b: int, counts: Tuple[int, ...]) -> Optional[Fraction]:
        """Max welfare addable by buyers b.. given copies already granted."""
        if b == m:
            return Fraction(0)
        best = None
        for mask in masks:
            marginal = Fraction(0)
            feasible = True
            for i in bundle_cache[mask]:
                c = curves[i].marginal(counts[i] + 1)
                if c is INF:
                    feasible = False
                    break
                marginal += c
            if not feasible:
                continue
            nxt = tuple(counts[i] + 1 if mask >> i & 1 else counts[i] for i in range(n))
            rest = best_rest(b + 1, nxt)
            if rest is None:
                continue
            total = values[b][mask] - marginal + rest
            if best is None or total > best:
                best = total
        return best

    counts = tuple([0] * n)
    chosen: List[Tuple[int, ...]] = []
    value_total = Fraction(0)
    cost_total = Fraction(0)
    for b in range(m):
        target = best_rest(b, counts)
        assert target is not None  # the empty bundle is always feasible
        for mask in masks:
            marginal = Fraction(0)
            feasible = True
            for i in bundle_cache[mask]:
                c = curves[i].marginal(counts[i] + 1)
                if c is INF:
                    feasible = False
                    break
                marginal += c
            if not feasible:
                continue
            nxt = tuple(counts[i] + 1 if mask >> i & 1 else counts[i] for i in range(n))
            rest = best_rest(b + 1, nxt)
            if rest is not None and values[b][mask] - marginal + rest == target:
                chosen.append(bundle_cache[mask])
                value_total += values[b][mask]
                cost_total += marginal
                counts = nxt
                break
    best_rest.cache_clear()
    return Allocation(
        bundles=tuple(chosen),
        copies=counts,
        value_total=value_total,
        cost_total=cost_total,
        welfare=value_total - cost_total,
    )


def opt_welfare_additive(curves: Sequence[CostCurve], buyers: Sequence[Valuation]) -> Allocation:
    """Exact welfare optimum when every buyer is additive.

    Welfare separates per item: sort the item's buyer values descending and
    grant the k-th highest value exactly while it covers the k-th marginal
    cost, stopping at the first failure (costs never decrease, so nothing
    past the first failure could help). Equal values go to the earlier
    buyer.
    """
    for b, buyer in enumerate(buyers):
        if not isinstance(buyer, AdditiveValuation):
            raise ValueError(f"buyer {b} is not additive; use opt_welfare_bruteforce")
    n, m = len(curves), len(buyers)
    granted: List[set] = [set() for _ in range(m)]
    copies = [0] * n
    value_total = Fraction(0)
    cost_total = Fraction(0)
    for i in range(n):
        ranked = sorted(range(m), key=lambda b: (-buyers[b].item_values[i], b))
        for k, b in enumerate(ranked, start=1):
            v = buyers[b].item_values[i]
            c = curves[i].marginal(k)
            if c is INF or v < c:
                break
            granted[b].add(i)
            copies[i] = k
            value_total += v
            cost_total += c
    return Allocation(
        bundles=tuple(tuple(sorted(granted[b])) for b in range(m)),
        copies=tuple(copies),
        value_total=value_total,
        cost_total=cost_total,
        welfare=value_total - cost_total,
    )


# -- profit benchmarks -------------------------------------------------------


@dataclass(frozen=True)
class ProfitBenchmark:
    """Offline profit yardsticks for one instance.

    ``welfare_bound`` is the optimal social welfare, an upper bound on any
    scheme's profit. ``fixed_price_profit`` is the best profit a static
    per-item price vector achieves against the buyer sequence, searched
    over every combination of candidate prices (all buyers' marginal
    values), with buyers breaking utility ties in the seller's favor so
    the supremum is attained.
    """

    welfare_bound: Fraction
    fixed_price_profit: Fraction
    fixed_prices: Tuple[Amount, ...]


def _demand_seller_favoring(buyer: Valuation, prices: Sequence[Amount]) -> Tuple[int, ...]:
    """Argmax-utility bundle, ties toward higher revenue (then fewer items)."""
    n = buyer.n
    finite = [i for i in range(n) if is_finite(prices[i])]
    best: Tuple[int, ...] = ()
    best_u = Fraction(0)
    best_rev = Fraction(0)
    for mask in range(1 << len(finite)):
        items = tuple(finite[j] for j in range(len(finite)) if mask >> j & 1)
        rev = sum((prices[i] for i in items), Fraction(0))
        u = buyer.value(items) - rev
        if (u, rev, -len(items)) > (best_u, best_rev, -len(best)) or (
            (u, rev, len(items)) == (best_u, best_rev, len(best)) and items < best
        ):
            best, best_u, best_rev = items, u, rev
    return best


def _simulate_fixed_prices(
    curves: Sequence[CostCurve], buyers: Sequence[Valuation], prices: Tuple[Amount, ...]
) -> Fraction:
    """Profit of a static price vector; items whose next copy is unobtainable
    drop out of sale for the remaining buyers."""
    n = len(curves)
    counts = [0] * n
    profit = Fraction(0)
    for buyer in buyers:
        current = tuple(
            prices[i] if is_finite(curves[i].marginal(counts[i] + 1)) else INF for i in range(n)
        )
        for i in _demand_seller_favoring(buyer, current):
            cost = curves[i].marginal(counts[i] + 1)
            assert is_finite(cost)
            profit += current[i] - cost
            counts[i] += 1
    return profit


def _candidate_prices(buyers: Sequence[Valuation], item: int, n: int) -> List[Fraction]:
    """All buyers' marginal values for the item, over every sub-bundle."""
    rest = [j for j in range(n) if j != item]
    seen = set()
    for buyer in buyers:
        for mask in range(1 << len(rest)):
            base = tuple(rest[j] for j in range(len(rest)) if mask >> j & 1)
            gain = buyer.value(base + (item,)) - buyer.value(base)
            if gain > 0:
                seen.add(gain)
    return sorted(seen)


def opt_profit_bruteforce(
    curves: Sequence[CostCurve],
    buyers: Sequence[Valuation],
    budget_bits: int = DEFAULT_BUDGET_BITS,
    max_grid: int = 200_000,
) -> ProfitBenchmark:
    """Profit yardsticks: the welfare upper bound plus the best fixed prices."""
    n, m = len(curves), len(buyers)
    _check_budget(n, m, budget_bits)
    welfare_bound = opt_welfare_bruteforce(curves, buyers, budget_bits).welfare
    candidate_sets = [_candidate_prices(buyers, i, n) + [INF] for i in range(n)]
    grid_size = 1
    for cands in candidate_sets:
        grid_size *= len(cands)
    if grid_size > max_grid:
        raise OptBudgetExceededError(
            f"fixed-price grid has {grid_size} combinations, above the cap of {max_grid}"
        )
    best_profit = Fraction(0)
    best_prices: Tuple[Amount, ...] = tuple([INF] * n)
    for prices in product(*candidate_sets):
        profit = _simulate_fixed_prices(curves, buyers, prices)
        if profit > best_profit:
            best_profit, best_prices = profit, prices
    return ProfitBenchmark(
        welfare_bound=welfare_bound, fixed_price_profit=best_profit, fixed_prices=best_prices
    )


# -- structural report -------------------------------------------------------


@dataclass(frozen=True)
class StructuralRow:
    """Profit-vs-area comparison for one item after a run.

    ``area`` is the area between the item's cost curve and the horizontal
    line at the first unsold copy's price; ``ratio`` is profit/area, the
    quantity whose lower bound drives welfare guarantees. Conventions:
    ratio is INF when the area is 0, and 0 when the first unsold copy is
    unobtainable (infinite price line, infinite area).
    """

    item: int
    sold: int
    profit: Fraction
    first_unsold_price: Amount
    area: Amount
    ratio: Amount


def structural_report(transcript: Transcript, curves: Sequence[CostCurve]) -> List[StructuralRow]:
    if len(curves) != transcript.n_items:
        raise ValueError("curve count does not match transcript")
    rows = []
    for i, curve in enumerate(curves):
        pf = transcript.first_unsold_price[i]
        profit = transcript.profit[i]
        if pf is INF:
            area: Amount = INF
            ratio: Amount = Fraction(0)
        else:
            area = curve.area_under(pf)
            ratio = INF if area == 0 else profit / area
        rows.append(
            StructuralRow(
                item=i,
                sold=transcript.sold[i],
                profit=profit,
                first_unsold_price=pf,
                area=area,
                ratio=ratio,
            )
        )
    return rows
