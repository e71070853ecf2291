"""Posted-pricing schemes: stateful per-item price ladders for an online run.

A scheme owns one ``ItemSaleState`` per item (sold count and running
profit) and quotes the price of each item's next unsold copy. Quotes are a
pure function of (scheme kind, curve, sold count, parameters, and the
profit wrapper's one-per-run coin); state advances only through
``record_sale``. Every scheme in this module quotes at or above the copy's
marginal cost, so running profit never goes negative.

Scheme objects are single-owner mutable state: one run, one instance, one
logical thread. Distinct runs with distinct seeds are independent.

Pricing rules
-------------
* at_cost:      copy k sells at marginal(k). Zero profit by construction;
                exists as the baseline that misallocates scarce cheap copies.
* twice_index:  copy k sells at marginal(2k).
* chunked:      copies are grouped into chunks of ``chunk_size``; inside a
                chunk prices double step by step up to the marginal cost
                just past the chunk (anchored at ``vmax_bound`` when that
                cost is infinite). Quotes are floored at the copy's own
                marginal cost so the scheme never sells at a loss.
* smoothing:    copy k sells at the average marginal cost of the next
                ``chunk_size`` copies; requires a convex curve.
* next_index /
  double_cost:  naive one-step-lookahead and doubled-cost baselines, kept
                for side-by-side comparisons where they misbehave.
* profit_wrap:  randomized wrapper around any of the above; see
                ``ProfitWrapperScheme``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .cost_model import CostCurve
from .money import INF, Amount, as_fraction, ceil_log2, is_finite
from .valuations import PriceVector


class NonConvexCurveError(ValueError):
    """The smoothing scheme only prices convex curves."""


class MissingVmaxBoundError(ValueError):
    """A chunk with infinite post-chunk cost needs vmax_bound to anchor prices."""


class SaleContractError(RuntimeError):
    """A sale was recorded for a copy quoted at INF or past the supply."""


# -- pure per-copy pricing functions ----------------------------------------


def price_at_cost(curve: CostCurve, k: int) -> Amount:
    """Copy k at its own marginal cost."""
    return curve.marginal(k)


def price_twice_index(curve: CostCurve, k: int) -> Amount:
    """Copy k at the marginal cost of copy 2k."""
    return curve.marginal(2 * k)


def price_next_index(curve: CostCurve, k: int) -> Amount:
    """Naive variant: copy k at the marginal cost of copy k+1."""
    return curve.marginal(k + 1)


def price_double_cost(curve: CostCurve, k: int) -> Amount:
    """Naive variant: copy k at twice its own marginal cost."""
    c = curve.marginal(k)
    if c is INF:
        return INF
    return 2 * c


def price_chunked(
    curve: CostCurve, k: int, chunk_size: int, vmax_bound: Optional[Fraction] = None
) -> Amount:
    """Raw doubling-ladder price of copy k under the chunked rule.

    Chunk t covers copies (t-1)*chunk_size+1 .. t*chunk_size. With q_hi the
    marginal cost just past the chunk, position j (1-based) in the chunk is
    priced q_hi / 2**(chunk_size - j): a ladder doubling up to q_hi. A zero
    q_hi prices the whole chunk at zero; an infinite q_hi anchors the
    ladder at vmax_bound instead, which on a some-copies-free curve is the
    classic limited-supply ladder.

    This is the bare ladder; the stateful scheme floors it at the copy's
    own marginal cost (see ChunkedScheme).
    """
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    t = (k + chunk_size - 1) // chunk_size
    j = k - (t - 1) * chunk_size
    q_hi = curve.marginal(t * chunk_size + 1)
    if q_hi is INF:
        if vmax_bound is None:
            raise MissingVmaxBoundError(
                f"chunk {t} ends against an infinite marginal cost; configure vmax_bound"
            )
        anchor = vmax_bound
    elif q_hi == 0:
        return Fraction(0)
    else:
        anchor = q_hi
    return anchor / 2 ** (chunk_size - j)


def price_smoothing(curve: CostCurve, k: int, chunk_size: int) -> Amount:
    """Average marginal cost of the chunk_size copies after copy k.

    Equals (cumulative(k + chunk_size) - cumulative(k)) / chunk_size, which
    for a convex curve is bracketed by marginal(k+1) and marginal(k+chunk_size).
    """
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    hi = curve.cumulative(k + chunk_size)
    if hi is INF:
        return INF
    lo = curve.cumulative(k)
    assert is_finite(lo)
    return (hi - lo) / chunk_size


# -- scheme parameters -------------------------------------------------------


@dataclass(frozen=True)
class SchemeParams:
    """Configuration for building a scheme over a set of item curves.

    ``kind`` is one of at_cost, twice_index, chunked, smoothing, next_index,
    double_cost, or profit_wrap:<inner-kind>. ``chunk_size`` defaults to
    ceil(log2(n * vmax_bound + 2)) when a chunked/smoothing scheme needs it.
    """

    kind: str
    chunk_size: Optional[int] = None
    vmax_bound: Optional[Fraction] = None
    rho: Fraction = Fraction(1)
    mu: Fraction = Fraction(1)
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.chunk_size is not None and (not isinstance(self.chunk_size, int) or self.chunk_size < 1):
            raise ValueError(f"chunk_size must be a positive integer, got {self.chunk_size!r}")
        if self.vmax_bound is not None:
            v = as_fraction(self.vmax_bound, "vmax_bound")
            if v < 1:
                raise ValueError(f"vmax_bound must be >= 1, got {v}")
            object.__setattr__(self, "vmax_bound", v)
        object.__setattr__(self, "rho", as_fraction(self.rho, "rho"))
        object.__setattr__(self, "mu", as_fraction(self.mu, "mu"))
        if self.rho <= 0 or self.mu <= 0:
            raise ValueError("rho and mu must be positive")

    def resolved_chunk_size(self, n_items: int) -> int:
        if self.chunk_size is not None:
            return self.chunk_size
        if self.vmax_bound is None:
            raise ValueError("chunk_size defaulting needs vmax_bound")
        return max(1, ceil_log2(n_items * self.vmax_bound + 2))

    def label(self) -> str:
        parts = [self.kind]
        if self.chunk_size is not None:
            parts.append(f"l={self.chunk_size}")
        if self.vmax_bound is not None:
            parts.append(f"vmax={self.vmax_bound}")
        if self.kind.startswith("profit_wrap"):
            parts.append(f"rho={self.rho}")
            parts.append(f"mu={self.mu}")
        return "{}({})".format(parts[0], ",".join(parts[1:]))


# -- stateful schemes --------------------------------------------------------


@dataclass
class ItemSaleState:
    """Sold count and running profit ledger for one item."""

    curve: CostCurve
    sold: int = 0
    profit: Fraction = field(default_factory=lambda: Fraction(0))


class PricingScheme:
    """Base: per-item states plus quote/record plumbing shared by all kinds."""

    def __init__(self, curves: Sequence[CostCurve]):
        if not curves:
            raise ValueError("a scheme needs at least one item curve")
        self.states = [ItemSaleState(curve=c) for c in curves]

    @property
    def curves(self) -> tuple:
        return tuple(s.curve for s in self.states)

    @property
    def n_items(self) -> int:
        return len(self.states)

    def _price_copy(self, curve: CostCurve, k: int) -> Amount:
        raise NotImplementedError

    def quote(self, item: int) -> Amount:
        """Price of the item's next unsold copy (INF when unobtainable)."""
        state = self.states[item]
        k = state.sold + 1
        if state.curve.marginal(k) is INF:
            return INF
        return self._price_copy(state.curve, k)

    def price_vector(self) -> PriceVector:
        return tuple(self.quote(i) for i in range(self.n_items))

    def record_sale(self, item: int) -> "tuple[Fraction, Fraction]":
        """Sell the item's next copy at its current quote.

        Returns (price, marginal cost) and advances the ladder. Selling a
        copy quoted at INF is a contract violation.
        """
        price = self.quote(item)
        return self._record_at(item, price)

    def _record_at(self, item: int, price: Amount) -> "tuple[Fraction, Fraction]":
        state = self.states[item]
        cost = state.curve.marginal(state.sold + 1)
        if price is INF or cost is INF:
            raise SaleContractError(
                f"item {item} copy {state.sold + 1} is not sellable (price={price}, cost={cost})"
            )
        state.sold += 1
        state.profit += price - cost
        return price, cost


class AtCostScheme(PricingScheme):
    def _price_copy(self, curve: CostCurve, k: int) -> Amount:
        return price_at_cost(curve, k)


class TwiceIndexScheme(PricingScheme):
    def _price_copy(self, curve: CostCurve, k: int) -> Amount:
        return price_twice_index(curve, k)


class NextIndexScheme(PricingScheme):
    def _price_copy(self, curve: CostCurve, k: int) -> Amount:
        return price_next_index(curve, k)


class DoubleCostScheme(PricingScheme):
    def _price_copy(self, curve: CostCurve, k: int) -> Amount:
        return price_double_cost(curve, k)


class ChunkedScheme(PricingScheme):
    """Doubling ladder per chunk, floored at each copy's marginal cost.

    The floor keeps the mark-up guarantee (quote >= cost, profit never
    negative) on curves whose costs rise inside a chunk; on zero-cost
    chunks the bare ladder is unchanged.
    """

    def __init__(self, curves: Sequence[CostCurve], chunk_size: int, vmax_bound: Optional[Fraction] = None):
        super().__init__(curves)
        if chunk_size < 1:
            raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
        self.chunk_size = chunk_size
        self.vmax_bound = vmax_bound

    def _price_copy(self, curve: CostCurve, k: int) -> Amount:
        ladder = price_chunked(curve, k, self.chunk_size, self.vmax_bound)
        cost = curve.marginal(k)
        assert is_finite(cost)  # quote() already screened INF
        return max(cost, ladder)


class SmoothingScheme(PricingScheme):
    """Averaged-lookahead pricing; rejects non-convex curves up front."""

    def __init__(self, curves: Sequence[CostCurve], chunk_size: int):
        super().__init__(curves)
        if chunk_size < 1:
            raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
        for i, c in enumerate(curves):
            if not c.is_convex():
                raise NonConvexCurveError(f"curve for item {i} is not convex: {c!r}")
        self.chunk_size = chunk_size

    def _price_copy(self, curve: CostCurve, k: int) -> Amount:
        return price_smoothing(curve, k, self.chunk_size)


class ProfitWrapperScheme(PricingScheme):
    """Randomized profit wrapper around a welfare-oriented scheme.

    One coin per run: with probability rho/(rho+mu) quote exactly the
    wrapped scheme's prices; otherwise quote them multiplied by a surcharge
    2**j, with j drawn once, uniformly from 0..ceil(log2(vmax_bound)).
    Sales land in the wrapped scheme's state either way, so its ladder
    advances identically in both branches; the profit ledger uses the
    price actually charged.
    """

    def __init__(self, inner: PricingScheme, rho: Fraction, mu: Fraction, vmax_bound: Fraction, rng_seed: int):
        if rho <= 0 or mu <= 0:
            raise ValueError("rho and mu must be positive")
        if vmax_bound < 1:
            raise ValueError(f"vmax_bound must be >= 1, got {vmax_bound}")
        self.inner = inner
        self.rho = rho
        self.mu = mu
        self.vmax_bound = vmax_bound
        rng = random.Random(rng_seed)
        p_welfare = rho / (rho + mu)
        self.welfare_branch = rng.randrange(p_welfare.denominator) < p_welfare.numerator
        self.surcharge_exponent = rng.randrange(ceil_log2(vmax_bound) + 1)
        self.factor = Fraction(1) if self.welfare_branch else Fraction(2) ** self.surcharge_exponent

    @property
    def states(self):  # type: ignore[override]
        return self.inner.states

    @states.setter
    def states(self, value):  # pragma: no cover - states live in inner
        raise AttributeError("wrapper state lives in the wrapped scheme")

    def quote(self, item: int) -> Amount:
        q = self.inner.quote(item)
        if q is INF:
            return INF
        return q * self.factor

    def record_sale(self, item: int) -> "tuple[Fraction, Fraction]":
        return self.inner._record_at(item, self.quote(item))


def build_scheme(params: SchemeParams, curves: Sequence[CostCurve]) -> PricingScheme:
    """Instantiate the scheme named by ``params.kind`` over ``curves``."""
    kind = params.kind
    if kind.startswith("profit_wrap:"):
        inner_kind = kind.split(":", 1)[1]
        if params.vmax_bound is None:
            raise ValueError("profit_wrap needs vmax_bound")
        inner = build_scheme(
            SchemeParams(
                kind=inner_kind,
                chunk_size=params.chunk_size,
                vmax_bound=params.vmax_bound,
                rng_seed=params.rng_seed,
            ),
            curves,
        )
        return ProfitWrapperScheme(
            inner, rho=params.rho, mu=params.mu, vmax_bound=params.vmax_bound, rng_seed=params.rng_seed
        )
    if kind == "at_cost":
        return AtCostScheme(curves)
    if kind == "twice_index":
        return TwiceIndexScheme(curves)
    if kind == "next_index":
        return NextIndexScheme(curves)
    if kind == "double_cost":
        return DoubleCostScheme(curves)
    if kind == "chunked":
        return ChunkedScheme(curves, params.resolved_chunk_size(len(curves)), params.vmax_bound)
    if kind == "smoothing":
        return SmoothingScheme(curves, params.resolved_chunk_size(len(curves)))
    raise ValueError(f"unknown scheme kind {kind!r}")
