#!/usr/bin/env python3

"""Exact ground truth on enumerable joint state spaces.

Joint distributions are vectors over all (V+1)^d sequences in the order of
:class:`~maskfk.core.states.StateEnumeration`. The weighted forward
Kolmogorov equation

    dq/dtau = A_tau^T q + q * (g_tau - E_q[g_tau])

is built from the corrected rates and weights on that space and integrated
numerically; the result must track the target distribution at every time.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Literal, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.integrate import solve_ivp

from maskfk.core.config import settings
from maskfk.core.schedule import MaskingSchedule, clamp_time, get_schedule
from maskfk.core.states import (
    StateEnumeration,
    Vocabulary,
    enumerate_states,
    neighbours,
)
from maskfk.exceptions import (
    CapacityError,
    ContractError,
    DomainError,
    IntegrationError,
)
from maskfk.services.correctors import (
    Anneal,
    Base,
    GeoAvg,
    Product,
    Reward,
    TargetSpec,
    correct_from_ratios,
)
from maskfk.services.data import NORMALIZATION_TOLERANCE, TabularDataDistribution
from maskfk.services.process import RatioTable
from maskfk.services.rewards import evaluate_reward

logger = logging.getLogger(__name__)

Method = Literal["radau", "rk4"]
MIN_GRID = 100


@dataclass(frozen=True)
class JointDistribution:
    """A probability vector over every (V+1)^d sequence at forward time t."""

    probs: np.ndarray
    vocab: Vocabulary
    d: int
    t: float

    def __post_init__(self):
        if self.probs.shape != (self.vocab.n_symbols**self.d,):
            raise ContractError(
                f"Expected {self.vocab.n_symbols ** self.d} probabilities, "
                f"got {self.probs.shape}"
            )
        if np.any(self.probs < 0) or not np.all(np.isfinite(self.probs)):
            raise ContractError("Joint probabilities must be finite and nonnegative")
        if abs(self.probs.sum() - 1.0) > NORMALIZATION_TOLERANCE:
            raise ContractError(f"Joint probabilities sum to {self.probs.sum()}")

    @property
    def enumeration(self) -> StateEnumeration:
        return enumerate_states(self.vocab, self.d, limit=self.probs.size)

    def prob(self, tokens: ArrayLike) -> float:
        return float(self.probs[self.enumeration.index(tokens)])

    def unmasked(self) -> np.ndarray:
        """Probabilities of the fully unmasked sequences, in V^d order."""
        states = self.enumeration.states
        clean = np.all(states != self.vocab.mask_id, axis=1)
        return self.probs[clean]


def _extend(
    data: TabularDataDistribution, keep: float, drop: float
) -> np.ndarray:
    """Joint (V+1)^d tensor: each axis gets keep * p and a mask slot.

    The mask slot of an axis holds drop times the sum over that axis, so
    entry x equals keep^(#unmasked) drop^(#masked) times the data mass
    consistent with the unmasked coordinates of x.
    """
    tensor = data.tensor
    for axis in range(data.d):
        masked = drop * tensor.sum(axis=axis, keepdims=True)
        tensor = np.concatenate([keep * tensor, masked], axis=axis)
    return tensor


def evidence(data: TabularDataDistribution) -> np.ndarray:
    """Data mass consistent with the unmasked coordinates of every state."""
    enumerate_states(data.vocab, data.d)
    return _extend(data, 1.0, 1.0).ravel()


def exact_marginals(
    data: TabularDataDistribution, schedule: MaskingSchedule, t: float
) -> JointDistribution:
    """The exact joint marginal p_t of the masking process.

    Raises:
        CapacityError: If (V+1)^d exceeds the enumeration limit.
    """
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1], got {t}")
    enumerate_states(data.vocab, data.d)
    alpha = float(schedule.alpha(t))
    probs = _extend(data, alpha, 1.0 - alpha).ravel()
    return JointDistribution(probs=probs, vocab=data.vocab, d=data.d, t=t)


def _factor_data(target: TargetSpec, data: TabularDataDistribution | None):
    if isinstance(target, (Product, GeoAvg)):
        try:
            return [den.data for den in target.denoisers]
        except AttributeError:
            raise ContractError(
                "Exact targets need tabular denoisers exposing their data"
            ) from None
    if data is None:
        raise ContractError(f"{target.name} target needs a data distribution")
    return [data]


def _normalize(weights: np.ndarray, vocab: Vocabulary, d: int, t: float):
    total = weights.sum()
    if not total > 0:
        raise ContractError("Target distribution has a zero normalizer")
    return JointDistribution(probs=weights / total, vocab=vocab, d=d, t=t)


def target_distribution(
    data: TabularDataDistribution | None,
    target: TargetSpec,
    t: float,
    *,
    schedule: MaskingSchedule | None = None,
) -> JointDistribution:
    """The corrected target over the joint space at forward time t.

    Products and geometric averages take their factors from the target's
    tabular denoisers; reward targets use beta at reverse time 1 - t.
    """
    schedule = schedule or get_schedule()
    factors = [exact_marginals(f, schedule, t) for f in _factor_data(target, data)]
    vocab, d = factors[0].vocab, factors[0].d

    if isinstance(target, Base):
        return factors[0]
    if isinstance(target, Anneal):
        return _normalize(factors[0].probs**target.beta, vocab, d, t)
    if isinstance(target, Product):
        weights = factors[0].probs
        for factor in factors[1:]:
            weights = weights * factor.probs
        return _normalize(weights, vocab, d, t)
    if isinstance(target, GeoAvg):
        weights = np.ones_like(factors[0].probs)
        for factor, beta in zip(factors, target.betas):
            weights = weights * factor.probs**beta
        return _normalize(weights, vocab, d, t)
    if isinstance(target, Reward):
        states = factors[0].enumeration.states
        rewards = evaluate_reward(target.reward, states)
        tilt = np.exp(target.beta(1.0 - t) * rewards)
        return _normalize(factors[0].probs * tilt, vocab, d, t)
    raise ContractError(f"Unknown target {target!r}")


def tv_distance(p: ArrayLike, q: ArrayLike) -> float:
    """Total variation 0.5 * sum |p - q|."""
    p = np.asarray(getattr(p, "probs", p), dtype=np.float64)
    q = np.asarray(getattr(q, "probs", q), dtype=np.float64)
    if p.shape != q.shape:
        raise ContractError(f"Support sizes differ: {p.shape} vs {q.shape}")
    return float(0.5 * np.abs(p - q).sum())


def wasserstein2_1d(samples_a: ArrayLike, samples_b: ArrayLike) -> float:
    """2-Wasserstein distance between two empirical 1-D distributions.

    Samples are paired by rank. When the counts differ both quantile
    functions are read off at the midpoints of the larger sample.

    Raises:
        ContractError: If either sample is empty.
    """
    a = np.sort(np.asarray(samples_a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(samples_b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ContractError("wasserstein2_1d needs non-empty samples")

    if a.size != b.size:
        n = max(a.size, b.size)
        levels = (np.arange(n) + 0.5) / n
        a = np.quantile(a, levels, method="inverted_cdf")
        b = np.quantile(b, levels, method="inverted_cdf")
    return float(np.sqrt(np.mean((a - b) ** 2)))


class JointSpace:
    """Neighbour structure and evidence ratios on the enumerated space."""

    def __init__(self, vocab: Vocabulary, d: int, *, limit: int | None = None):
        self.vocab = vocab
        self.d = d
        self.enumeration = enumerate_states(vocab, d, limit=limit)
        self.states = self.enumeration.states
        self.masked = self.states == vocab.mask_id
        self.targets = self.enumeration.index(neighbours(self.states, vocab))

    @property
    def size(self) -> int:
        return self.enumeration.size

    def evidence_ratios(self, data: TabularDataDistribution) -> np.ndarray:
        """E(x with k set to j) / E(x) on masked rows, zero elsewhere."""
        mass = evidence(data)
        reachable = self.masked & (mass[:, None] > 0)
        ratios = np.divide(
            mass[self.targets],
            mass[:, None, None],
            out=np.zeros(self.targets.shape),
            where=reachable[..., None],
        )
        return ratios

    def rate_matrix(self, rates: np.ndarray) -> np.ndarray:
        """Dense generator with rows summing to zero from factorized rates."""
        matrix = np.zeros((self.size, self.size))
        rows = np.broadcast_to(np.arange(self.size)[:, None, None], rates.shape)
        keep = np.broadcast_to(self.masked[..., None], rates.shape)
        matrix[rows[keep], self.targets[keep]] = rates[keep]
        matrix[np.diag_indices(self.size)] = -matrix.sum(axis=1)
        return matrix


def exact_ratios(
    data: TabularDataDistribution, schedule: MaskingSchedule, t: float
) -> RatioTable:
    """Ratios p_t(x with k set to j) / p_t(x) for every enumerated state."""
    space = JointSpace(data.vocab, data.d)
    marginals = exact_marginals(data, schedule, t).probs
    reachable = space.masked & (marginals[:, None] > 0)
    ratios = np.divide(
        marginals[space.targets],
        marginals[:, None, None],
        out=np.zeros(space.targets.shape),
        where=reachable[..., None],
    )
    return RatioTable(ratios=ratios, masked=space.masked)


def forward_generator_matrix(
    vocab: Vocabulary, d: int, schedule: MaskingSchedule, t: float
) -> np.ndarray:
    """Generator of the forward masking process on the joint space."""
    space = JointSpace(vocab, d)
    matrix = np.zeros((space.size, space.size))
    rate = -schedule.log_rate_factor(t)
    clean = ~space.masked
    for k in range(d):
        rows = np.flatnonzero(clean[:, k])
        masked_states = space.states[rows].copy()
        masked_states[:, k] = vocab.mask_id
        matrix[rows, space.enumeration.index(masked_states)] = rate
    matrix[np.diag_indices(space.size)] = -matrix.sum(axis=1)
    return matrix


class WeightedGenerator:
    """Corrected rate matrix and weight vector of a target at reverse time tau.

    Args:
        weight_scale: Multiplies g. 1 is the weighted equation, 0 drops the
            weight term and -1 flips its sign.
    """

    def __init__(
        self,
        data: TabularDataDistribution | None,
        target: TargetSpec,
        schedule: MaskingSchedule,
        *,
        weight_scale: float = 1.0,
        limit: int | None = None,
    ):
        factors = _factor_data(target, data)
        limit = settings.oracle_state_limit if limit is None else limit
        size = factors[0].vocab.n_symbols ** factors[0].d
        if size > limit:
            raise CapacityError(
                f"Joint space of {size} states exceeds the oracle limit {limit}",
                size=size,
                limit=limit,
            )

        self.target = target
        self.schedule = schedule
        self.weight_scale = weight_scale
        self.space = JointSpace(factors[0].vocab, factors[0].d)
        self.evidence_ratios = [self.space.evidence_ratios(f) for f in factors]
        self.at = lru_cache(maxsize=16)(self._build)

    def _build(self, tau: float) -> Tuple[np.ndarray, np.ndarray]:
        t = clamp_time(1.0 - tau, self.schedule.t_min)
        scale = self.schedule.signal_to_mask(t)
        tables = [
            RatioTable(ratios=scale * ratios, masked=self.space.masked)
            for ratios in self.evidence_ratios
        ]
        step = correct_from_ratios(
            self.target, tables, self.schedule, t, tau, self.space.states
        )
        matrix = self.space.rate_matrix(step.rates.rates)
        return matrix, self.weight_scale * step.g

    def __call__(self, tau: float, q: np.ndarray) -> np.ndarray:
        matrix, g = self.at(float(tau))
        mean = np.dot(g, q) / q.sum()
        return matrix.T @ q + q * (g - mean)

    def jacobian(self, tau: float, q: np.ndarray) -> np.ndarray:
        matrix, g = self.at(float(tau))
        total = q.sum()
        mean = np.dot(g, q) / total
        return (
            matrix.T
            + np.diag(g - mean)
            - np.outer(q, g) / total
            + mean * np.outer(q, np.ones_like(q)) / total
        )

    def stiffness(self, tau: float) -> float:
        matrix, g = self.at(float(tau))
        return float(np.max(-np.diag(matrix)) + np.max(np.abs(g)))


def generator_matrix(
    data: TabularDataDistribution | None,
    target: TargetSpec,
    schedule: MaskingSchedule,
    tau: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """The corrected rate matrix and weight vector at reverse time tau."""
    return WeightedGenerator(data, target, schedule).at(float(tau))


@dataclass
class OracleReport:
    """Outcome of one master-equation check."""

    target: str
    grid: int
    method: str
    weight_scale: float
    max_tv: float
    max_drift: float
    taus: List[float] = field(default_factory=list)
    tv_trace: List[float] = field(default_factory=list)

    def passed(self, tolerance: float) -> bool:
        return self.max_tv <= tolerance


def _rk4_interval(
    fn: WeightedGenerator, tau: float, h: float, q: np.ndarray, substeps: int
) -> np.ndarray:
    dt = h / substeps
    for i in range(substeps):
        s = tau + i * dt
        k1 = fn(s, q)
        k2 = fn(s + dt / 2, q + dt / 2 * k1)
        k3 = fn(s + dt / 2, q + dt / 2 * k2)
        k4 = fn(s + dt, q + dt * k3)
        q = q + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return q


def _stable(q: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(q)) and q.min() > -1e-8 and q.sum() > 0)


def _integrate_rk4(
    fn: WeightedGenerator, taus: np.ndarray, q0: np.ndarray
) -> List[np.ndarray]:
    path = [q0]
    q = q0
    for a, b in zip(taus[:-1], taus[1:]):
        h = float(b - a)
        stiffness = max(fn.stiffness(a), fn.stiffness(b))
        substeps = max(1, math.ceil(h * stiffness / settings.stiffness_limit))
        if substeps > settings.max_substeps:
            raise IntegrationError(
                f"RK4 needs {substeps} sub-steps at tau={a:.4f}; use the radau method",
                tau=float(a),
                substeps=substeps,
            )

        moved = _rk4_interval(fn, a, h, q, substeps)
        if not _stable(moved):
            logger.warning("RK4 unstable at tau=%.4f, halving the step", a)
            moved = _rk4_interval(fn, a, h, q, 2 * substeps)
            if not _stable(moved):
                raise IntegrationError(
                    f"RK4 stays unstable at tau={a:.4f}", tau=float(a)
                )
        q = moved
        path.append(q)
    return path


def _integrate_radau(
    fn: WeightedGenerator, taus: np.ndarray, q0: np.ndarray
) -> List[np.ndarray]:
    h = float(taus[1] - taus[0])
    options = dict(
        rtol=settings.oracle_rtol,
        atol=settings.oracle_atol,
        max_step=np.inf,
    )
    for attempt in range(2):
        solution = solve_ivp(
            fn,
            (float(taus[0]), float(taus[-1])),
            q0,
            method="Radau",
            t_eval=taus,
            jac=fn.jacobian,
            **options,
        )
        if solution.success:
            return list(solution.y.T)

        logger.warning(
            "Radau failed (%s), retrying with halved steps", solution.message
        )
        options.update(max_step=h / 2, rtol=options["rtol"] / 10)

    raise IntegrationError(f"Radau failed twice: {solution.message}")


def integrate_weighted_fke(
    data: TabularDataDistribution | None,
    target: TargetSpec,
    schedule: MaskingSchedule,
    n_grid: int | None = None,
    *,
    include_weights: bool = True,
    weight_scale: float = 1.0,
    method: Method | None = None,
) -> OracleReport:
    """Integrates the weighted FKE and compares it with the target.

    Integration runs over tau in [t_min, 1 - t_min] on a uniform grid of
    n_grid intervals. It starts from the exact target at tau = t_min, where
    the reverse process is still (almost) all-mask; annealed rates with
    beta < 1 are singular at tau = 0 itself.

    Args:
        include_weights: False drops the weight term (negative control).
        weight_scale: Multiplies g when weights are included.
        method: ``radau`` (implicit, adaptive, default) or ``rk4``
            (classical, with sub-steps bounded by the stiffness limit).

    Raises:
        DomainError: If n_grid is below 100.
        CapacityError: If the joint space exceeds the oracle limit.
        IntegrationError: If the integrator fails after one retry.
    """
    n_grid = settings.oracle_grid if n_grid is None else n_grid
    method = method or settings.oracle_method
    if n_grid < MIN_GRID:
        raise DomainError(f"n_grid must be at least {MIN_GRID}, got {n_grid}")

    scale = weight_scale if include_weights else 0.0
    fn = WeightedGenerator(data, target, schedule, weight_scale=scale)
    t_min = schedule.t_min
    taus = np.linspace(t_min, 1.0 - t_min, n_grid + 1)
    q0 = target_distribution(data, target, 1.0 - taus[0], schedule=schedule).probs

    if method == "radau":
        path = _integrate_radau(fn, taus, q0)
    elif method == "rk4":
        path = _integrate_rk4(fn, taus, q0)
    else:
        raise ContractError(f"Unknown integration method {method}")

    tv_trace, max_drift = [], 0.0
    for tau, q in zip(taus, path):
        max_drift = max(max_drift, abs(q.sum() - 1.0))
        q = np.clip(q, 0.0, None)
        q = q / q.sum()
        exact = target_distribution(data, target, 1.0 - tau, schedule=schedule)
        tv_trace.append(tv_distance(q, exact.probs))
    logger.debug("Normalization drift of the %s run: %.3e", target.name, max_drift)

    report = OracleReport(
        target=target.name,
        grid=n_grid,
        method=method,
        weight_scale=scale,
        max_tv=float(max(tv_trace)),
        max_drift=float(max_drift),
        taus=[float(tau) for tau in taus],
        tv_trace=tv_trace,
    )
    logger.info(
        "Oracle %s (%s, weight scale %g): max TV %.3e",
        target.name,
        method,
        scale,
        report.max_tv,
    )
    return report


def unmasked_target(
    data: TabularDataDistribution | None, target: TargetSpec, schedule: MaskingSchedule
) -> np.ndarray:
    """The target at t = 0 over the V^d clean sequences."""
    return target_distribution(data, target, 0.0, schedule=schedule).unmasked()

