#!/usr/bin/env python3

"""Built-in verification suite: reduction identities, oracles, SMC fixtures.

Each check returns a :class:`CheckResult`; nothing here raises on a failed
comparison, so a caller can report every outcome at once.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from maskfk.core.schedule import MaskingSchedule, get_schedule
from maskfk.core.states import Vocabulary
from maskfk.services.correctors import (
    Anneal,
    Base,
    GeoAvg,
    Product,
    Reward,
    anneal_step,
    base_step,
    geo_avg_step,
    product_step,
    reward_step,
)
from maskfk.services.data import (
    TabularDataDistribution,
    from_probs,
    product_data,
    random_data,
)
from maskfk.services.denoiser import TabularDenoiser
from maskfk.services.oracle import (
    JointSpace,
    exact_ratios,
    integrate_weighted_fke,
    tv_distance,
    unmasked_target,
)
from maskfk.services.process import RatioTable, score_from_denoiser
from maskfk.services.rewards import LinearBeta, SeparableReward
from maskfk.services.smc import ResamplingPolicy, ess, run

logger = logging.getLogger(__name__)

IDENTITY_TOLERANCE = 1e-12
SCORE_TOLERANCE = 1e-10
NEGATIVE_CONTROL_FLOOR = 0.05
SMC_TOLERANCE = 0.05


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    limit: float
    passed: bool
    detail: str = ""


def _at_most(name: str, value: float, limit: float, detail: str = "") -> CheckResult:
    return CheckResult(name, float(value), limit, bool(value <= limit), detail)


def _relative_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = np.maximum(np.abs(a), np.abs(b))
    diff = np.abs(a - b)
    ratio = np.divide(diff, scale, out=np.zeros_like(diff), where=scale > 0)
    return float(np.max(ratio))


def random_tables(
    rng: np.random.Generator, n: int, d: int, V: int, count: int = 1
) -> tuple:
    """Random partially masked states with matching random ratio tables."""
    masked = rng.random((n, d)) < 0.6
    tokens = np.where(masked, V, rng.integers(0, V, size=(n, d)))
    tables = [
        RatioTable(
            ratios=np.where(masked[..., None], rng.gamma(1.0, 1.0, (n, d, V)), 0.0),
            masked=masked,
        )
        for _ in range(count)
    ]
    return tokens, tables


def reduction_checks(seed: int = 0, n: int = 10_000) -> List[CheckResult]:
    """Degenerate corrector settings reproduce the simpler ones."""
    rng = np.random.default_rng(seed)
    schedule = get_schedule()
    d, V = 3, 4
    t = 0.37
    tokens, (table,) = random_tables(rng, n, d, V)
    base = base_step(schedule, t, tokens, table)

    def compare(name: str, step, reference) -> CheckResult:
        error = max(
            _relative_error(step.rates.rates, reference.rates.rates),
            _relative_error(step.g, reference.g),
        )
        return _at_most(name, error, IDENTITY_TOLERANCE, "relative error")

    reward = SeparableReward(rng.random((d, V)), Vocabulary(V), d)
    silent = SeparableReward(np.zeros((d, V)), Vocabulary(V), d)
    return [
        compare("anneal(1) = base", anneal_step(schedule, t, tokens, table, 1.0), base),
        compare(
            "product(p, p) = anneal(2)",
            product_step(schedule, t, tokens, table, table),
            anneal_step(schedule, t, tokens, table, 2.0),
        ),
        compare(
            "geo_avg(N=1) = base",
            geo_avg_step(schedule, t, tokens, [table], [1.0]),
            base,
        ),
        compare(
            "reward(beta=0) = base",
            reward_step(schedule, t, tokens, table, reward, 0.0, 0.0),
            base,
        ),
        compare(
            "reward(r=0) = base",
            reward_step(schedule, t, tokens, table, silent, 1.5, 0.7),
            base,
        ),
    ]


def score_check(seed: int = 0) -> CheckResult:
    """Denoiser-reconstructed ratios agree with exact marginal ratios."""
    data = random_data(np.random.default_rng(seed), V=2, d=2)
    schedule = get_schedule()
    denoiser = TabularDenoiser(data)
    space = JointSpace(data.vocab, data.d)
    worst = 0.0
    for t in np.linspace(0.1, 0.9, 9):
        probs = denoiser.posterior(space.states, float(t))
        reconstructed = score_from_denoiser(schedule, float(t), probs)
        exact = exact_ratios(data, schedule, float(t))
        rows = exact.masked
        worst = max(
            worst, float(np.max(np.abs(reconstructed[rows] - exact.ratios[rows])))
        )
    return _at_most("score reconstruction", worst, SCORE_TOLERANCE, "max abs error")


def oracle_fixtures(seed: int = 0) -> List[tuple]:
    """(name, data, target) triples on V = 2, d = 2."""
    rng = np.random.default_rng(seed)
    data = random_data(rng, V=2, d=2)
    other = random_data(rng, V=2, d=2)
    reward = SeparableReward(rng.random(2), data.vocab, data.d)
    factors = [TabularDenoiser(data), TabularDenoiser(other)]
    return [
        ("base", data, Base()),
        ("anneal(0.5)", data, Anneal(0.5)),
        ("anneal(2)", data, Anneal(2.0)),
        ("product", None, Product(denoisers=factors)),
        ("geo_avg(0.3, 0.7)", None, GeoAvg(denoisers=factors, betas=[0.3, 0.7])),
        ("reward", data, Reward(reward=reward, beta_schedule=LinearBeta(1.0))),
    ]


def oracle_checks(
    tolerance: float,
    *,
    seed: int = 0,
    weight_scale: float = 1.0,
    n_grid: int | None = None,
) -> List[CheckResult]:
    """Weighted master-equation integration against exact targets."""
    schedule = get_schedule()
    results = []
    for name, data, target in oracle_fixtures(seed):
        report = integrate_weighted_fke(
            data, target, schedule, n_grid, weight_scale=weight_scale
        )
        results.append(
            _at_most(f"oracle {name}", report.max_tv, tolerance, "max TV")
        )
    return results


def negative_control(*, weight_scale: float = 1.0) -> CheckResult:
    """Dropping the weight term must visibly miss an annealed target.

    ``weight_scale`` is applied to the run that keeps its weights, which must
    itself stay close; a wrong sign there makes the check fail.
    """
    schedule = get_schedule()
    data = product_data([[0.8, 0.2], [0.8, 0.2]])
    dropped = integrate_weighted_fke(data, Anneal(2.0), schedule, include_weights=False)
    kept = integrate_weighted_fke(
        data, Anneal(2.0), schedule, weight_scale=weight_scale
    )
    passed = (
        dropped.max_tv > NEGATIVE_CONTROL_FLOOR
        and kept.max_tv < NEGATIVE_CONTROL_FLOOR
    )
    return CheckResult(
        "negative control (no weights)",
        dropped.max_tv,
        NEGATIVE_CONTROL_FLOOR,
        passed,
        f"must exceed the limit; weighted run {kept.max_tv:.2e}",
    )


def ess_checks(K: int = 128) -> List[CheckResult]:
    uniform = ess(np.zeros(K))
    one_hot = ess(np.where(np.arange(K) == 0, 0.0, -np.inf))
    return [
        _at_most("ESS of equal weights = K", abs(uniform - K), 1e-9, f"K={K}"),
        _at_most("ESS of one-hot weights = 1", abs(one_hot - 1.0), 1e-12),
    ]


def _smc_tv(
    data: TabularDataDistribution,
    target,
    schedule: MaskingSchedule,
    *,
    K: int,
    n_steps: int,
    seed: int,
) -> float:
    # Every-step resampling drifts the token frequencies of a single run.
    policy = ResamplingPolicy(trigger="ess_below", threshold=0.5)
    result = run(
        target, [TabularDenoiser(data)], schedule, K, n_steps, policy, seed=seed
    )
    ensemble = result.ensemble
    estimate = np.bincount(
        ensemble.particles[:, 0],
        weights=ensemble.weights(),
        minlength=data.vocab.size,
    )
    return tv_distance(estimate, unmasked_target(data, target, schedule))


def smc_checks(
    *, seed: int = 0, K: int = 8192, n_steps: int = 100
) -> List[CheckResult]:
    """Weighted SMC on the one-position fixture p = (0.8, 0.2)."""
    schedule = get_schedule()
    data = from_probs([0.8, 0.2], V=2, d=1)
    return [
        _at_most(
            f"smc {target.name}",
            _smc_tv(data, target, schedule, K=K, n_steps=n_steps, seed=seed),
            SMC_TOLERANCE,
            "TV of weighted samples",
        )
        for target in (Base(), Anneal(2.0))
    ]


CheckGroup = Callable[[], List[CheckResult]]


def full_suite(
    tolerance: float, *, seed: int = 0, weight_scale: float = 1.0
) -> List[CheckResult]:
    """Every check, in reporting order.

    ``weight_scale`` multiplies g in the oracle runs; -1 is the sign-flip
    mutation that the suite must catch.
    """
    groups: List[CheckGroup] = [
        lambda: reduction_checks(seed),
        lambda: [score_check(seed)],
        lambda: oracle_checks(tolerance, seed=seed, weight_scale=weight_scale),
        lambda: [negative_control(weight_scale=weight_scale)],
        ess_checks,
        lambda: smc_checks(seed=seed),
    ]
    results = []
    for group in groups:
        results.extend(group())
    failed = [result.name for result in results if not result.passed]
    logger.info(
        "Self-check: %d passed, %d failed", len(results) - len(failed), len(failed)
    )
    return results
