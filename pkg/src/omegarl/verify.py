"""Self-check battery wiring the independent oracles against each other.

Each check returns a named pass/fail result so the command line can print a
machine-readable summary.  Checks accept an optional automaton override,
which keeps failures attributable when an input is corrupted.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from .augment import augment, merge_unaccepting
from .automata import TGba, accepts_lasso, degeneralize, fixture_gfa_gfb_gnc
from .ltl import LassoWord, eval_lasso, parse_ltl
from .mdp import ROW_SUM_TOL, build_gridworld
from .product import build_product, check_positional_impossibility, evaluate_policy
from .mdp import PositionalPolicy

SPEC_FORMULA = "G F a & G F b & G !c"


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def all_lassos(ap=("a", "b", "c"), max_prefix: int = 2, max_cycle: int = 3):
    """Every lasso word with bounded prefix/cycle lengths over 2^ap."""
    letters = [
        frozenset(s)
        for r in range(len(ap) + 1)
        for s in itertools.combinations(sorted(ap), r)
    ]
    for np_ in range(max_prefix + 1):
        for prefix in itertools.product(letters, repeat=np_):
            for nc in range(1, max_cycle + 1):
                for cycle in itertools.product(letters, repeat=nc):
                    yield LassoWord(prefix, cycle)


def _timed(fn):
    start = time.monotonic()
    passed, detail = fn()
    return passed, detail, time.monotonic() - start


def check_language_preservation(
    automaton: TGba | None = None, max_prefix: int = 2, max_cycle: int = 3
) -> CheckResult:
    """Raw automaton, its augmentation, and the merged augmentation must
    agree on every bounded lasso word."""

    def run():
        base = automaton if automaton is not None else fixture_gfa_gfb_gnc()
        aug = augment(base)
        merged = merge_unaccepting(aug)
        count = 0
        for w in all_lassos(sorted(base.ap), max_prefix, max_cycle):
            expect = accepts_lasso(base, w)
            if accepts_lasso(aug, w) != expect:
                return False, f"augmented automaton disagrees on {w}"
            if accepts_lasso(merged, w) != expect:
                return False, f"merged automaton disagrees on {w}"
            count += 1
        return True, f"{count} lasso words agree"

    passed, detail, secs = _timed(run)
    return CheckResult("language-preservation", passed, detail, secs)


def check_formula_agreement(
    automaton: TGba | None = None, max_prefix: int = 2, max_cycle: int = 3
) -> CheckResult:
    """The automaton fixture must agree with direct formula evaluation."""

    def run():
        base = automaton if automaton is not None else fixture_gfa_gfb_gnc()
        phi = parse_ltl(SPEC_FORMULA)
        count = 0
        for w in all_lassos(sorted(base.ap), max_prefix, max_cycle):
            if accepts_lasso(base, w) != eval_lasso(phi, w):
                return False, f"automaton and formula disagree on {w}"
            count += 1
        return True, f"{count} lasso words agree"

    passed, detail, secs = _timed(run)
    return CheckResult("formula-agreement", passed, detail, secs)


def check_degeneralization(
    automaton: TGba | None = None, max_prefix: int = 2, max_cycle: int = 3
) -> CheckResult:
    """Collapsing to a single accepting set must preserve the language."""

    def run():
        base = automaton if automaton is not None else fixture_gfa_gfb_gnc()
        degen = degeneralize(base)
        count = 0
        for w in all_lassos(sorted(base.ap), max_prefix, max_cycle):
            if accepts_lasso(base, w) != accepts_lasso(degen, w):
                return False, f"degeneralized automaton disagrees on {w}"
            count += 1
        return True, f"{count} lasso words agree"

    passed, detail, secs = _timed(run)
    return CheckResult("degeneralization", passed, detail, secs)


def check_recurrence_dichotomy(
    n_policies: int = 1000, seed: int = 2024, automaton: TGba | None = None
) -> CheckResult:
    """On the augmented product every recurrent class must intersect all
    accepting sets or none of them."""

    def run():
        base = automaton if automaton is not None else fixture_gfa_gfb_gnc()
        product = build_product(build_gridworld(), merge_unaccepting(augment(base)))
        rng = np.random.default_rng(seed)
        enabled = product.mdp.enabled
        n_sets = len(product.acceptance)
        for trial in range(n_policies):
            pi = PositionalPolicy(
                {s: acts[rng.integers(len(acts))] for s, acts in enumerate(enabled)}
            )
            ev = evaluate_policy(product, pi)
            for c in ev.classes:
                hits = sum(c.coverage)
                if hits not in (0, n_sets):
                    return False, (
                        f"policy {trial} has a class covering {hits}/{n_sets} sets"
                    )
        return True, f"{n_policies} random positional policies, no violations"

    passed, detail, secs = _timed(run)
    return CheckResult("recurrence-dichotomy", passed, detail, secs)


def check_stochasticity(automaton: TGba | None = None) -> CheckResult:
    """Row sums of every constructed model must equal one to 1e-12."""

    def run():
        base = automaton if automaton is not None else fixture_gfa_gfb_gnc()
        grid = build_gridworld()
        models = {
            "grid9": grid,
            "augmented-product": build_product(grid, merge_unaccepting(augment(base))).mdp,
            "degeneralized-product": build_product(grid, augment(degeneralize(base))).mdp,
            "raw-product": build_product(grid, base).mdp,
        }
        worst = 0.0
        for name, m in models.items():
            for (s, a), row in m.prob.items():
                err = abs(sum(p for _, p in row) - 1.0)
                worst = max(worst, err)
                if err > ROW_SUM_TOL:
                    return False, f"{name} row ({s}, {a}) off by {err}"
        return True, f"max row-sum error {worst:.2e}"

    passed, detail, secs = _timed(run)
    return CheckResult("stochasticity", passed, detail, secs)


def check_impossibility_certificate(automaton: TGba | None = None) -> CheckResult:
    """The raw product must certify positional impossibility; the augmented
    product must not."""

    def run():
        base = automaton if automaton is not None else fixture_gfa_gfb_gnc()
        grid = build_gridworld()
        raw = build_product(grid, base)
        aug = build_product(grid, merge_unaccepting(augment(base)))
        if not check_positional_impossibility(raw):
            return False, "raw product lacks the impossibility certificate"
        if check_positional_impossibility(aug):
            return False, "augmented product unexpectedly certifies impossibility"
        return True, "raw product impossible, augmented product possible"

    passed, detail, secs = _timed(run)
    return CheckResult("impossibility-certificate", passed, detail, secs)


def run_battery(quick: bool = False, automaton: TGba | None = None) -> list[CheckResult]:
    max_prefix, max_cycle = (1, 2) if quick else (2, 3)
    n_policies = 100 if quick else 1000
    return [
        check_language_preservation(automaton, max_prefix, max_cycle),
        check_formula_agreement(automaton, max_prefix, max_cycle),
        check_degeneralization(automaton, max_prefix, max_cycle),
        check_recurrence_dichotomy(n_policies, automaton=automaton),
        check_stochasticity(automaton),
        check_impossibility_certificate(automaton),
    ]
