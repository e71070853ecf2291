"""Market instances: random generators and hand-built counterexample families.

An instance bundles the item curves with an ordered buyer sequence plus
metadata describing where it came from. Random instances are fully
deterministic in the seed. The fixture families are parameterized
counterexamples, each demonstrating a documented way a pricing rule can
go wrong (or, for the wrapper fixture, why the profit surcharge helps):

* at_cost_fails          -- selling at cost lets early low-value buyers
                            burn the cheap copies; the welfare gap to the
                            optimum grows without bound in the size.
* twice_index_fails_zero_inf -- on a some-copies-free/rest-unobtainable
                            curve, doubling the copy index gives away half
                            the supply at price zero and blocks the rest;
                            the chunked ladder keeps the ratio bounded.
* related_algos_fail     -- a cost cliff separating the twice-the-index
                            rule from one-step-lookahead and doubled-cost
                            lookalikes.
* wrapper_beats_welfare  -- high-value buyers against gentle costs, where
                            welfare pricing leaves almost all surplus on
                            the table and the surcharge coin collects it.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from ..cost_model import (
    CostCurve,
    LimitedSupplyCurve,
    LinearCurve,
    LogCurve,
    PolynomialCurve,
    TableCurve,
    curve_from_json_dict,
)
from ..money import INF
from ..valuations import (
    AdditiveValuation,
    SingleMindedValuation,
    TableValuation,
    UnitDemandValuation,
    Valuation,
    valuation_from_json_dict,
)

INSTANCE_FORMAT_VERSION = 1

CURVE_FAMILIES = ("linear", "poly", "log", "limited", "table", "mixed")
VALUATION_FAMILIES = ("additive", "unit_demand", "single_minded", "table", "mixed")
FIXTURE_NAMES = (
    "at_cost_fails",
    "twice_index_fails_zero_inf",
    "related_algos_fail",
    "wrapper_beats_welfare",
)


@dataclass(frozen=True)
class Instance:
    """Items, their cost curves, an ordered buyer sequence, and provenance."""

    curves: Tuple[CostCurve, ...]
    buyers: Tuple[Valuation, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.curves)
        if n == 0:
            raise ValueError("an instance needs at least one item")
        for b, buyer in enumerate(self.buyers):
            if buyer.n != n:
                raise ValueError(f"buyer {b} covers {buyer.n} items, instance has {n}")

    @property
    def n_items(self) -> int:
        return len(self.curves)

    @property
    def n_buyers(self) -> int:
        return len(self.buyers)

    def to_json_dict(self) -> dict:
        return {
            "version": INSTANCE_FORMAT_VERSION,
            "n": self.n_items,
            "curves": [c.to_json_dict() for c in self.curves],
            "buyers": [b.to_json_dict() for b in self.buyers],
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), separators=(",", ":"))


def instance_from_json_dict(d: dict) -> Instance:
    return Instance(
        curves=tuple(curve_from_json_dict(c) for c in d["curves"]),
        buyers=tuple(valuation_from_json_dict(b) for b in d["buyers"]),
        meta=dict(d.get("meta", {})),
    )


def instance_from_json(s: str) -> Instance:
    return instance_from_json_dict(json.loads(s))


def write_instances(path, instances: Sequence[Instance]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(inst.to_json() + "\n")


def read_instances(path) -> list:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(instance_from_json(line))
    return out


# -- random generation -------------------------------------------------------


def _rand_fraction(rng: random.Random, lo: int, hi: int, dens=(1, 1, 2, 4)) -> Fraction:
    den = rng.choice(dens)
    return Fraction(rng.randint(lo * den, hi * den), den)


def _rand_curve(rng: random.Random, family: str, m: int) -> CostCurve:
    """One random curve; tables are sized so 2*(m+1) copies stay quotable."""
    if family == "mixed":
        family = rng.choice(("linear", "poly", "log", "limited", "table"))
    if family == "linear":
        return LinearCurve(a=_rand_fraction(rng, 1, 6))
    if family == "poly":
        return PolynomialCurve(a=_rand_fraction(rng, 1, 4), d=rng.choice((2, 3)))
    if family == "log":
        return LogCurve(a=_rand_fraction(rng, 1, 6))
    if family == "limited":
        free = rng.randint(1, max(1, 2 * m))
        if rng.random() < 0.5:
            return LimitedSupplyCurve(free_copies=free, cap_cost=INF)
        return LimitedSupplyCurve(
            free_copies=free, cap_cost=_rand_fraction(rng, 1, 8), copy_limit=2 * (m + 1) + free
        )
    if family == "table":
        length = 2 * (m + 1)
        level = _rand_fraction(rng, 0, 2)
        values = []
        for _ in range(length):
            values.append(level)
            level = level + _rand_fraction(rng, 0, 3)
        return TableCurve(values=tuple(values))
    raise ValueError(f"unknown curve family {family!r}")


def _rand_valuation(rng: random.Random, family: str, n: int, vmax: int) -> Valuation:
    if family == "mixed":
        family = rng.choice(("additive", "unit_demand", "single_minded", "table"))
    if family == "additive":
        return AdditiveValuation(tuple(_rand_fraction(rng, 0, vmax) for _ in range(n)))
    if family == "unit_demand":
        return UnitDemandValuation(tuple(_rand_fraction(rng, 0, vmax) for _ in range(n)))
    if family == "single_minded":
        size = rng.randint(1, n)
        bundle = frozenset(rng.sample(range(n), size))
        return SingleMindedValuation(
            universe_size=n, bundle=bundle, bundle_value=_rand_fraction(rng, 0, vmax)
        )
    if family == "table":
        closure = rng.choice(("exact", "monotone"))
        entries = []
        for mask in range(1, 1 << n):
            if rng.random() < 0.7:
                bundle = frozenset(i for i in range(n) if mask >> i & 1)
                entries.append((bundle, _rand_fraction(rng, 0, vmax)))
        return TableValuation(universe_size=n, closure=closure, entries=tuple(entries))
    raise ValueError(f"unknown valuation family {family!r}")


def gen_random(
    n: int, m: int, curve_family: str, valuation_family: str, seed: int, vmax: int = 64
) -> Instance:
    """Deterministic random instance; same arguments, same instance."""
    if curve_family not in CURVE_FAMILIES:
        raise ValueError(f"unknown curve family {curve_family!r}; choose from {CURVE_FAMILIES}")
    if valuation_family not in VALUATION_FAMILIES:
        raise ValueError(
            f"unknown valuation family {valuation_family!r}; choose from {VALUATION_FAMILIES}"
        )
    if n < 1 or m < 0:
        raise ValueError("need n >= 1 items and m >= 0 buyers")
    rng = random.Random(seed)
    curves = tuple(_rand_curve(rng, curve_family, m) for _ in range(n))
    buyers = tuple(_rand_valuation(rng, valuation_family, n, vmax) for _ in range(m))
    meta = {
        "generator": "random",
        "curve_family": curve_family,
        "valuation_family": valuation_family,
        "n": n,
        "m": m,
        "seed": seed,
        "vmax": vmax,
    }
    return Instance(curves=curves, buyers=buyers, meta=meta)


def max_buyer_valuation(buyers: Sequence[Valuation]) -> Fraction:
    """Exact max over buyers of their best bundle's value (full-set for the
    structured kinds, best listed entry for tables)."""
    best = Fraction(0)
    for b in buyers:
        if isinstance(b, AdditiveValuation):
            v = sum(b.item_values, Fraction(0))
        elif isinstance(b, UnitDemandValuation):
            v = max(b.item_values) if b.item_values else Fraction(0)
        elif isinstance(b, SingleMindedValuation):
            v = b.bundle_value
        elif isinstance(b, TableValuation):
            v = max((val for _, val in b.entries), default=Fraction(0))
        else:  # pragma: no cover - future kinds
            v = b.value(range(b.n))
        best = max(best, v)
    return best


# -- fixture families --------------------------------------------------------


def _fixture_at_cost_fails(size: int) -> Instance:
    """Quadratic costs; low buyers worth a hair above each successive cost
    arrive first, then one buyer worth more than all of them combined."""
    lows = [AdditiveValuation((Fraction(j * j + 1),)) for j in range(1, size + 1)]
    big = AdditiveValuation((Fraction((size + 1) ** 2 + 1),))
    return Instance(
        curves=(PolynomialCurve(a=Fraction(1), d=2),),
        buyers=tuple(lows + [big]),
        meta={"generator": "fixture", "fixture": "at_cost_fails", "size": size},
    )


def _fixture_twice_index_fails(size: int) -> Instance:
    """free = 2**(size+1) copies at zero cost, nothing beyond. Low buyers
    (worth 1) arrive first and soak up anything priced at zero; high buyers
    (worth 2**free) only meet the doubling ladder. Suggested scheme params
    ride along in the metadata."""
    free = 2 ** (size + 1)
    high_value = Fraction(2) ** free
    lows = [AdditiveValuation((Fraction(1),)) for _ in range(free)]
    highs = [AdditiveValuation((high_value,)) for _ in range(free)]
    return Instance(
        curves=(LimitedSupplyCurve(free_copies=free, cap_cost=INF),),
        buyers=tuple(lows + highs),
        meta={
            "generator": "fixture",
            "fixture": "twice_index_fails_zero_inf",
            "size": size,
            "chunk_size": free,
            "vmax": str(high_value),
        },
    )


def _fixture_related_algos_fail(size: int) -> Instance:
    """Linear costs 1..f, then a cliff at M = f**3. Low buyers worth 2j+1
    arrive first; f/2 high buyers worth M+1 arrive last. Twice-the-index
    stops selling cheap copies halfway up and saves the rest for the high
    buyers; the one-step-lookahead and doubled-cost variants leak the whole
    cheap region (or price the high buyers out entirely)."""
    f = 4 * size
    cliff = Fraction(f**3)
    values = tuple(Fraction(k) for k in range(1, f + 1)) + tuple([cliff] * (3 * f + 4))
    lows = [AdditiveValuation((Fraction(2 * j + 1),)) for j in range(1, f + 1)]
    highs = [AdditiveValuation((cliff + 1,)) for _ in range(f // 2)]
    return Instance(
        curves=(TableCurve(values=values),),
        buyers=tuple(lows + highs),
        meta={
            "generator": "fixture",
            "fixture": "related_algos_fail",
            "size": size,
            "vmax": str(cliff + 1),
        },
    )


def _fixture_wrapper_beats_welfare(size: int) -> Instance:
    """Two items with unit-slope linear costs and three buyers whose values
    dwarf every welfare-scheme price, so unwrapped profit stays tiny while
    a power-of-two surcharge can collect value-scale revenue."""
    scale = Fraction(1000) * 2 ** (size - 1)
    buyers = (
        AdditiveValuation((scale - 1, scale - 3)),
        AdditiveValuation((scale - 2, scale - 4)),
        AdditiveValuation((scale - 5, scale - 7)),
    )
    vmax = Fraction(2) ** (scale.numerator.bit_length())
    return Instance(
        curves=(LinearCurve(a=Fraction(1)), LinearCurve(a=Fraction(1))),
        buyers=buyers,
        meta={
            "generator": "fixture",
            "fixture": "wrapper_beats_welfare",
            "size": size,
            "vmax": str(vmax),
        },
    )


def gen_fixture(name: str, size: int = 1) -> Instance:
    """Build the named counterexample family member at the given size."""
    if size < 1:
        raise ValueError(f"fixture size must be >= 1, got {size}")
    if name == "at_cost_fails":
        return _fixture_at_cost_fails(size)
    if name == "twice_index_fails_zero_inf":
        return _fixture_twice_index_fails(size)
    if name == "related_algos_fail":
        return _fixture_related_algos_fail(size)
    if name == "wrapper_beats_welfare":
        return _fixture_wrapper_beats_welfare(size)
    raise ValueError(f"unknown fixture {name!r}; choose from {FIXTURE_NAMES}")
