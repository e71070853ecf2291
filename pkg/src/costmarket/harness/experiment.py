"""Batch execution of (instance, scheme, trial) cells with reproducible output.

Every cell gets its own seed derived from the master seed in cell order,
so a rerun with the same configuration produces byte-identical result
files. Result rows embed the instance and the full transcript, making
each row self-contained for later verification.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from ..money import INF, Amount, format_amount, is_finite, parse_amount
from ..market import Transcript, run_auction, replay_verify, transcript_from_json_lines
from ..oracle import (
    OptBudgetExceededError,
    opt_welfare_additive,
    opt_welfare_bruteforce,
    structural_report,
)
from ..pricing_schemes import SchemeParams, build_scheme
from ..valuations import AdditiveValuation
from .instances import Instance, instance_from_json_dict

RESULT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ExperimentConfig:
    instances: Tuple[Instance, ...]
    schemes: Tuple[SchemeParams, ...]
    trials: int = 1
    master_seed: int = 0
    opt_budget_bits: int = 24
    compute_opt: bool = True

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.instances or not self.schemes:
            raise ValueError("need at least one instance and one scheme")


@dataclass(frozen=True)
class ExperimentResult:
    """One cell: a scheme run once on an instance with a derived seed."""

    cell: int
    instance: Instance
    scheme: SchemeParams
    seed: int
    transcript: Transcript
    opt_welfare: Optional[Fraction]
    opt_refusal: Optional[str]

    @property
    def welfare_ratio(self) -> Optional[Amount]:
        """Optimal over achieved welfare; INF when the run achieved zero
        against a positive optimum, None when the optimum is unknown."""
        if self.opt_welfare is None:
            return None
        if self.transcript.welfare == 0:
            return Fraction(1) if self.opt_welfare == 0 else INF
        return self.opt_welfare / self.transcript.welfare

    def to_json_dict(self) -> dict:
        ratio = self.welfare_ratio
        return {
            "version": RESULT_FORMAT_VERSION,
            "cell": self.cell,
            "instance": self.instance.to_json_dict(),
            "scheme": _scheme_to_json(self.scheme),
            "seed": self.seed,
            "welfare": format_amount(self.transcript.welfare),
            "revenue": format_amount(self.transcript.revenue),
            "production_cost": format_amount(self.transcript.production_cost),
            "buyer_value": format_amount(self.transcript.buyer_value),
            "profit": format_amount(self.transcript.total_profit()),
            "opt_welfare": None if self.opt_welfare is None else format_amount(self.opt_welfare),
            "opt_refusal": self.opt_refusal,
            "welfare_ratio": None if ratio is None else format_amount(ratio),
            "transcript": self.transcript.to_json_lines(),
        }


def _scheme_to_json(p: SchemeParams) -> dict:
    return {
        "kind": p.kind,
        "chunk_size": p.chunk_size,
        "vmax_bound": None if p.vmax_bound is None else str(p.vmax_bound),
        "rho": str(p.rho),
        "mu": str(p.mu),
    }


def _scheme_from_json(d: dict) -> SchemeParams:
    return SchemeParams(
        kind=d["kind"],
        chunk_size=d["chunk_size"],
        vmax_bound=None if d["vmax_bound"] is None else Fraction(d["vmax_bound"]),
        rho=Fraction(d["rho"]),
        mu=Fraction(d["mu"]),
    )


def result_from_json_dict(d: dict) -> ExperimentResult:
    return ExperimentResult(
        cell=d["cell"],
        instance=instance_from_json_dict(d["instance"]),
        scheme=_scheme_from_json(d["scheme"]),
        seed=d["seed"],
        transcript=transcript_from_json_lines(d["transcript"]),
        opt_welfare=None if d["opt_welfare"] is None else parse_amount(d["opt_welfare"]),
        opt_refusal=d["opt_refusal"],
    )


def compute_opt_welfare(instance: Instance, budget_bits: int) -> "tuple[Optional[Fraction], Optional[str]]":
    """Exact optimal welfare, preferring the additive fast path; on budget
    refusal returns (None, reason) instead of raising."""
    if all(isinstance(b, AdditiveValuation) for b in instance.buyers):
        return opt_welfare_additive(instance.curves, instance.buyers).welfare, None
    try:
        return opt_welfare_bruteforce(instance.curves, instance.buyers, budget_bits).welfare, None
    except OptBudgetExceededError as exc:
        return None, str(exc)


def run_experiment(config: ExperimentConfig) -> List[ExperimentResult]:
    """Run every (instance, scheme, trial) cell in order. Deterministic in
    the master seed; an OPT budget refusal is recorded per cell, not fatal."""
    seed_source = random.Random(config.master_seed)
    results = []
    cell = 0
    opt_cache: dict = {}
    for inst_idx, instance in enumerate(config.instances):
        if config.compute_opt:
            if inst_idx not in opt_cache:
                opt_cache[inst_idx] = compute_opt_welfare(instance, config.opt_budget_bits)
            opt_welfare, opt_refusal = opt_cache[inst_idx]
        else:
            opt_welfare, opt_refusal = None, "disabled"
        for scheme_params in config.schemes:
            for _ in range(config.trials):
                seed = seed_source.getrandbits(63)
                params = SchemeParams(
                    kind=scheme_params.kind,
                    chunk_size=scheme_params.chunk_size,
                    vmax_bound=scheme_params.vmax_bound,
                    rho=scheme_params.rho,
                    mu=scheme_params.mu,
                    rng_seed=seed,
                )
                scheme = build_scheme(params, instance.curves)
                transcript = run_auction(instance.curves, scheme, instance.buyers)
                results.append(
                    ExperimentResult(
                        cell=cell,
                        instance=instance,
                        scheme=params,
                        seed=seed,
                        transcript=transcript,
                        opt_welfare=opt_welfare,
                        opt_refusal=opt_refusal,
                    )
                )
                cell += 1
    return results


def write_results(path, results: Sequence[ExperimentResult]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r.to_json_dict(), separators=(",", ":")) + "\n")


def read_results(path) -> List[ExperimentResult]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(result_from_json_dict(json.loads(line)))
    return out


def verify_results(results: Sequence[ExperimentResult]) -> List[str]:
    """Replay every stored transcript; returns one message per bad row."""
    problems = []
    for r in results:
        ok = replay_verify(r.transcript, r.instance.curves, r.instance.buyers)
        if not ok:
            problems.append(f"cell {r.cell}: transcript failed replay")
        if r.opt_welfare is not None:
            if r.transcript.welfare > r.opt_welfare:
                problems.append(f"cell {r.cell}: welfare above the optimum")
            if r.transcript.total_profit() > r.opt_welfare:
                problems.append(f"cell {r.cell}: profit above the welfare bound")
    return problems


# -- reporting ---------------------------------------------------------------


def _group_key(r: ExperimentResult) -> "tuple[str, str]":
    meta = r.instance.meta
    if meta.get("generator") == "fixture":
        group = "{}[size={}]".format(meta.get("fixture"), meta.get("size"))
    else:
        group = "{}/{}(n={},m={})".format(
            meta.get("curve_family", "?"),
            meta.get("valuation_family", "?"),
            meta.get("n", r.instance.n_items),
            meta.get("m", r.instance.n_buyers),
        )
    return group, r.scheme.label()


def report_rows(results: Sequence[ExperimentResult]) -> List[dict]:
    """Ratio/profit table grouped by (instance family, scheme), in first-seen
    order. Ratios aggregate only over cells where the optimum was computed."""
    groups: dict = {}
    order = []
    for r in results:
        key = _group_key(r)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(r)
    rows = []
    for key in order:
        cells = groups[key]
        ratios = [c.welfare_ratio for c in cells if c.welfare_ratio is not None]
        finite = [x for x in ratios if is_finite(x)]
        profits = [c.transcript.total_profit() for c in cells]
        row = {
            "group": key[0],
            "scheme": key[1],
            "cells": len(cells),
            "ratio_mean": format_amount(sum(finite, Fraction(0)) / len(finite)) if finite else None,
            "ratio_min": format_amount(min(ratios)) if ratios else None,
            "ratio_max": format_amount(max(ratios)) if ratios else None,
            "profit_mean": format_amount(sum(profits, Fraction(0)) / len(profits)),
            "profit_min": format_amount(min(profits)),
            "profit_max": format_amount(max(profits)),
        }
        rows.append(row)
    return rows


def format_report(rows: Sequence[dict]) -> str:
    header = ["group", "scheme", "cells", "ratio_mean", "ratio_min", "ratio_max", "profit_mean", "profit_min", "profit_max"]
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join("" if row[h] is None else str(row[h]) for h in header))
    return "\n".join(lines) + "\n"
