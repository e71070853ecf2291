"""The online protocol: quote, serve the next buyer, record, repeat.

``run_auction`` walks an ordered buyer sequence against a pricing scheme.
For each buyer it freezes the current per-item quotes, asks the buyer's
demand oracle for the utility-maximizing bundle at those prices, records
one sale per demanded item at the frozen price, and only then lets the
scheme's ladder advance. The result is a ``Transcript``: the per-buyer
event log (source of truth) plus cached aggregates and per-item closing
state.

A run is strictly sequential; transcripts are immutable once returned and
serialize to line-delimited JSON records with a fixed field order, so
byte-for-byte comparison doubles as a determinism check.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence, Tuple

from .cost_model import CostCurve
from .money import INF, Amount, format_amount, is_finite, parse_amount
from .pricing_schemes import PricingScheme
from .valuations import Valuation

TRANSCRIPT_FORMAT_VERSION = 1


class ReplayMismatchError(ValueError):
    """A transcript failed audit; the message names the first offending record."""


@dataclass(frozen=True)
class BuyerEvent:
    """One buyer's visit: the bundle bought with per-item price and cost."""

    buyer: int
    bundle: Tuple[int, ...]
    prices: Tuple[Fraction, ...]
    costs: Tuple[Fraction, ...]


@dataclass(frozen=True)
class Transcript:
    """Complete, auditable history of one run."""

    n_items: int
    scheme_label: str
    events: Tuple[BuyerEvent, ...]
    revenue: Fraction
    production_cost: Fraction
    buyer_value: Fraction
    welfare: Fraction
    sold: Tuple[int, ...]
    profit: Tuple[Fraction, ...]
    first_unsold_price: Tuple[Amount, ...]

    def total_profit(self) -> Fraction:
        return self.revenue - self.production_cost

    def to_json_lines(self) -> str:
        """Line-delimited records: meta, one line per event, summary."""
        lines = [
            json.dumps(
                {
                    "record": "meta",
                    "version": TRANSCRIPT_FORMAT_VERSION,
                    "n_items": self.n_items,
                    "scheme": self.scheme_label,
                },
                separators=(",", ":"),
            )
        ]
        for e in self.events:
            lines.append(
                json.dumps(
                    {
                        "record": "event",
                        "buyer": e.buyer,
                        "bundle": list(e.bundle),
                        "prices": [format_amount(p) for p in e.prices],
                        "costs": [format_amount(c) for c in e.costs],
                    },
                    separators=(",", ":"),
                )
            )
        lines.append(
            json.dumps(
                {
                    "record": "summary",
                    "revenue": format_amount(self.revenue),
                    "production_cost": format_amount(self.production_cost),
                    "buyer_value": format_amount(self.buyer_value),
                    "welfare": format_amount(self.welfare),
                    "sold": list(self.sold),
                    "profit": [format_amount(p) for p in self.profit],
                    "first_unsold_price": [format_amount(p) for p in self.first_unsold_price],
                },
                separators=(",", ":"),
            )
        )
        return "\n".join(lines) + "\n"


def transcript_from_json_lines(text: str) -> Transcript:
    meta = None
    summary = None
    events = []
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec["record"] == "meta":
            meta = rec
        elif rec["record"] == "event":
            events.append(
                BuyerEvent(
                    buyer=rec["buyer"],
                    bundle=tuple(rec["bundle"]),
                    prices=tuple(parse_amount(p) for p in rec["prices"]),
                    costs=tuple(parse_amount(c) for c in rec["costs"]),
                )
            )
        elif rec["record"] == "summary":
            summary = rec
        else:
            raise ValueError(f"unknown transcript record {rec['record']!r}")
    if meta is None or summary is None:
        raise ValueError("transcript missing meta or summary record")
    return Transcript(
        n_items=meta["n_items"],
        scheme_label=meta["scheme"],
        events=tuple(events),
        revenue=parse_amount(summary["revenue"]),
        production_cost=parse_amount(summary["production_cost"]),
        buyer_value=parse_amount(summary["buyer_value"]),
        welfare=parse_amount(summary["welfare"]),
        sold=tuple(summary["sold"]),
        profit=tuple(parse_amount(p) for p in summary["profit"]),
        first_unsold_price=tuple(parse_amount(p) for p in summary["first_unsold_price"]),
    )


def run_auction(
    curves: Sequence[CostCurve], scheme: PricingScheme, buyers: Sequence[Valuation]
) -> Transcript:
    """Serve each buyer in order at frozen quotes and return the full history."""
    if tuple(curves) != scheme.curves:
        raise ValueError("scheme was built over different curves")
    n = len(curves)
    events = []
    revenue = Fraction(0)
    production = Fraction(0)
    value_total = Fraction(0)
    for b, buyer in enumerate(buyers):
        if buyer.n != n:
            raise ValueError(f"buyer {b} is over {buyer.n} items, market has {n}")
        frozen = scheme.price_vector()
        bundle = buyer.demand(frozen)
        prices = []
        costs = []
        ordered = tuple(sorted(bundle))
        for i in ordered:
            if frozen[i] is INF:
                raise AssertionError(f"demand oracle bought item {i} at an infinite price")
            price, cost = scheme.record_sale(i)
            assert price == frozen[i], "price moved within a single buyer's visit"
            prices.append(price)
            costs.append(cost)
            revenue += price
            production += cost
        value_total += buyer.value(bundle)
        events.append(BuyerEvent(buyer=b, bundle=ordered, prices=tuple(prices), costs=tuple(costs)))
    return Transcript(
        n_items=n,
        scheme_label=type(scheme).__name__,
        events=tuple(events),
        revenue=revenue,
        production_cost=production,
        buyer_value=value_total,
        welfare=value_total - production,
        sold=tuple(s.sold for s in scheme.states),
        profit=tuple(s.profit for s in scheme.states),
        first_unsold_price=scheme.price_vector(),
    )


def _audit(transcript: Transcript, curves: Sequence[CostCurve], buyers: Sequence[Valuation]) -> Iterator[str]:
    """Yield a message for every inconsistency; exhausts silently when clean."""
    n = transcript.n_items
    if len(curves) != n:
        yield f"transcript covers {n} items but {len(curves)} curves given"
        return
    counts = [0] * n
    profits = [Fraction(0)] * n
    revenue = Fraction(0)
    production = Fraction(0)
    value_total = Fraction(0)
    for idx, e in enumerate(transcript.events):
        if e.buyer >= len(buyers):
            yield f"event {idx}: buyer index {e.buyer} out of range"
            return
        if len(e.prices) != len(e.bundle) or len(e.costs) != len(e.bundle):
            yield f"event {idx}: bundle/price/cost lengths disagree"
            return
        if tuple(sorted(e.bundle)) != e.bundle or len(set(e.bundle)) != len(e.bundle):
            yield f"event {idx}: bundle is not a sorted item set"
        for i, price, cost in zip(e.bundle, e.prices, e.costs):
            true_cost = curves[i].marginal(counts[i] + 1)
            if true_cost is INF or cost != true_cost:
                yield f"event {idx}: item {i} cost {cost} != curve marginal {true_cost}"
            if price < cost:
                yield f"event {idx}: item {i} sold at {price}, below cost {cost}"
            counts[i] += 1
            profits[i] += price - cost
            revenue += price
            production += cost
        paid = sum(e.prices, Fraction(0))
        got = buyers[e.buyer].value(e.bundle)
        if got - paid < 0:
            yield f"event {idx}: buyer {e.buyer} paid {paid} for value {got} (negative utility)"
        value_total += got
    checks = [
        ("revenue", transcript.revenue, revenue),
        ("production_cost", transcript.production_cost, production),
        ("buyer_value", transcript.buyer_value, value_total),
        ("welfare", transcript.welfare, value_total - production),
    ]
    for name, cached, recomputed in checks:
        if cached != recomputed:
            yield f"summary: {name} cached {cached} != recomputed {recomputed}"
    if transcript.sold != tuple(counts):
        yield f"summary: sold counts {transcript.sold} != recomputed {tuple(counts)}"
    if transcript.profit != tuple(profits):
        yield f"summary: per-item profit {transcript.profit} != recomputed {tuple(profits)}"
    if sum(profits, Fraction(0)) != revenue - production:
        yield "summary: profit ledger does not equal revenue minus cost"


def replay_verify(
    transcript: Transcript,
    curves: Sequence[CostCurve],
    buyers: Sequence[Valuation],
    strict: bool = False,
) -> bool:
    """Recompute every aggregate and invariant from the raw events.

    Returns True when everything matches exactly. With ``strict`` the first
    mismatch raises ``ReplayMismatchError`` naming the offending record.
    """
    problem: Optional[str] = next(_audit(transcript, curves, buyers), None)
    if problem is None:
        return True
    if strict:
        raise ReplayMismatchError(problem)
    return False
