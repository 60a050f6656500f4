"""Minimum-error discrimination of gray levels from particle counts.

Two protocols are covered. The binomial one looks only at the number of
absorbed particles; the trinomial one keeps the Zeno and orthogonal detector
counts apart and splits the outcome triangle along straight lines.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from zeno_tomo.interferometer import ChannelProbabilities
from zeno_tomo.special import binom_cdf


class DegenerateError(ValueError):
    """Hypotheses cannot be separated by the requested rule."""


_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class GrayLevel:
    tau: float
    alpha: float


@dataclass(frozen=True)
class GrayModel:
    """Gray levels sorted by increasing transmission amplitude, with prior frequencies."""

    levels: tuple[GrayLevel, ...]

    def __post_init__(self):
        levels = tuple(
            lv if isinstance(lv, GrayLevel) else GrayLevel(float(lv[0]), float(lv[1]))
            for lv in self.levels
        )
        object.__setattr__(self, "levels", levels)
        if not levels:
            raise ValueError("a gray model needs at least one level")
        for lv in levels:
            if not 0.0 <= lv.tau <= 1.0:
                raise ValueError(f"tau={lv.tau} outside [0, 1]")
            if not 0.0 <= lv.alpha <= 1.0:
                raise ValueError(f"alpha={lv.alpha} outside [0, 1]")
        taus = [lv.tau for lv in levels]
        if any(t2 <= t1 for t1, t2 in zip(taus, taus[1:])):
            raise ValueError(f"tau values must be strictly increasing, got {taus}")
        total = sum(lv.alpha for lv in levels)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"priors sum to {total!r}, not 1")

    @classmethod
    def from_pairs(
        cls, taus: Sequence[float], alphas: Sequence[float], *, normalize: bool = False
    ) -> GrayModel:
        """Build a model; ``normalize`` rescales frequencies that do not sum to one."""
        if len(taus) != len(alphas):
            raise ValueError("taus and alphas differ in length")
        alphas = [float(a) for a in alphas]
        if normalize:
            total = sum(alphas)
            if total <= 0:
                raise ValueError("frequencies must have a positive sum")
            alphas = [a / total for a in alphas]
        return cls(tuple(GrayLevel(float(t), a) for t, a in zip(taus, alphas)))

    @property
    def taus(self) -> tuple[float, ...]:
        return tuple(lv.tau for lv in self.levels)

    @property
    def alphas(self) -> tuple[float, ...]:
        return tuple(lv.alpha for lv in self.levels)

    def __len__(self) -> int:
        return len(self.levels)


# --------------------------------------------------------------------------
# binomial protocol


@dataclass(frozen=True)
class BinomialRule:
    """Choose H1 when ``n_a <= threshold``, otherwise H2.

    ``threshold == -1`` means always H2 and ``threshold == n_particles`` always H1.
    """

    threshold: int
    threshold_raw: float
    n_particles: int

    def decide(self, n_a: int) -> int:
        """0 for H1, 1 for H2."""
        return 0 if n_a <= self.threshold else 1

    @property
    def constant(self) -> bool:
        return self.threshold < 0 or self.threshold >= self.n_particles

    @classmethod
    def always(cls, hypothesis: int, n_particles: int) -> BinomialRule:
        if hypothesis == 0:
            return cls(n_particles, math.inf, n_particles)
        return cls(-1, -math.inf, n_particles)


def _check_open_prob(name: str, p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ValueError(f"{name}={p!r} must lie strictly inside (0, 1)")


def binomial_threshold(p_a1: float, p_a2: float, alpha: float, n_particles: int) -> BinomialRule:
    """Equal-likelihood decision level on the absorbed count.

    H1 (prior ``alpha``) must be the hypothesis that absorbs less. For the
    standard setup that is the *more* transparent level, so callers swap.
    """
    _check_open_prob("p_a1", p_a1)
    _check_open_prob("p_a2", p_a2)
    _check_open_prob("alpha", alpha)
    if n_particles < 1:
        raise ValueError("n_particles must be positive")
    if p_a1 == p_a2:
        raise DegenerateError("equal absorption probabilities: hypotheses are indistinguishable")
    if p_a1 > p_a2:
        raise ValueError("H1 must absorb less than H2 (p_a1 < p_a2)")
    log_q = math.log1p(-p_a1) - math.log1p(-p_a2)
    raw = (math.log((1 - alpha) / alpha) - n_particles * log_q) / (math.log(p_a1 / p_a2) - log_q)
    threshold = min(max(math.floor(raw), -1), n_particles)
    return BinomialRule(int(threshold), raw, n_particles)


def binomial_log_likelihood_ratio(
    n_a: float, p_a1: float, p_a2: float, alpha: float, n_particles: int
) -> float:
    """``log R``; the binomial coefficient cancels so ``n_a`` may be real."""
    return (
        math.log(alpha / (1 - alpha))
        + n_a * math.log(p_a1 / p_a2)
        + (n_particles - n_a) * (math.log1p(-p_a1) - math.log1p(-p_a2))
    )


def binomial_error(
    p_a1: float, p_a2: float, alpha: float, n_particles: int, rule: BinomialRule
) -> float:
    """Prior-weighted misclassification probability of ``rule``."""
    k = rule.threshold
    miss_h1 = 1.0 - binom_cdf(k, n_particles, p_a1)  # chose H2 while H1 true
    miss_h2 = binom_cdf(k, n_particles, p_a2)  # chose H1 while H2 true
    return alpha * miss_h1 + (1 - alpha) * miss_h2


def optimal_binomial_error(p_a1: float, p_a2: float, alpha: float, n_particles: int) -> float:
    rule = binomial_threshold(p_a1, p_a2, alpha, n_particles)
    return binomial_error(p_a1, p_a2, alpha, n_particles, rule)


def mean_absorbed(model: GrayModel, p_a1: float, p_a2: float, n_particles: int) -> float:
    """Expected absorbed particles per pixel of a two-level sample."""
    if len(model) != 2:
        raise ValueError("mean_absorbed expects a two-level model")
    alpha = model.levels[0].alpha
    return n_particles * (alpha * p_a1 + (1 - alpha) * p_a2)


def threshold_period(p_a1: float, p_a2: float) -> float:
    """Number of particles between consecutive unit steps of the decision level."""
    log_q = math.log1p(-p_a1) - math.log1p(-p_a2)
    return (math.log(p_a2 / p_a1) + log_q) / log_q


def required_particles(
    p_a1: float,
    p_a2: float,
    alpha: float,
    target_pe: float,
    *,
    run: int = 3,
    max_particles: int = 10**9,
) -> int:
    """Smallest ``N`` with the optimal error at or below ``target_pe`` for ``run`` consecutive values.

    ``P_e(N)`` drops with a sawtooth: it jumps up each time the integer
    decision level steps. The search brackets by doubling, bisects to a
    crossing, then scans downward until three whole sawtooth periods fail in
    a row, so an earlier crossing on a lower tooth is not missed.
    """
    _check_open_prob("target_pe", target_pe)
    if p_a1 == p_a2:
        raise DegenerateError("equal absorption probabilities: no N reaches the target")
    if not target_pe < min(alpha, 1 - alpha):
        raise ValueError(
            f"target_pe={target_pe} is already met by guessing the likelier level "
            f"(min prior {min(alpha, 1 - alpha)})"
        )
    cache: dict[int, bool] = {}

    def ok(n: int) -> bool:
        if n not in cache:
            cache[n] = optimal_binomial_error(p_a1, p_a2, alpha, n) <= target_pe
        return cache[n]

    def ok_run(n: int) -> bool:
        return all(ok(n + i) for i in range(run))

    hi = 1
    while not ok_run(hi):
        hi *= 2
        if hi > max_particles:
            raise DegenerateError(f"target_pe={target_pe} not reached below N={max_particles}")
    lo = hi // 2  # ok_run(lo) failed, or lo == 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok_run(mid):
            hi = mid
        else:
            lo = mid

    guard = max(3 * run, math.ceil(3 * threshold_period(p_a1, p_a2)))
    best, fails, n = hi, 0, hi - 1
    while n >= 1 and fails < guard:
        if ok(n):
            fails = 0
            if ok_run(n):
                best = n
        else:
            fails += 1
        n -= 1
    return best


# --------------------------------------------------------------------------
# trinomial protocol


@dataclass(frozen=True)
class TrinomialRule:
    """Decision line ``n_z - slope_a * n_o = intercept_b`` with an orientation witness.

    ``witness`` is an outcome ``(n_z, n_o)`` off the line and
    ``witness_choice`` the hypothesis (0 or 1) it was decided for by direct
    likelihood evaluation. Every outcome on the witness's side gets the same
    decision.
    """

    slope_a: float
    intercept_b: float
    n_particles: int
    witness: tuple[int, int]
    witness_choice: int

    def side(self, n_z: float, n_o: float) -> float:
        return n_z - self.slope_a * n_o - self.intercept_b

    def decide(self, n_z: float, n_o: float) -> int:
        s = self.side(n_z, n_o)
        s_w = self.side(*self.witness)
        same = (s > 0) == (s_w > 0)
        return self.witness_choice if same else 1 - self.witness_choice


def trinomial_log_likelihood_ratio(
    n_z: int,
    n_o: int,
    probs1: ChannelProbabilities,
    probs2: ChannelProbabilities,
    alpha: float,
    n_particles: int,
) -> float:
    n_a = n_particles - n_z - n_o
    return (
        math.log(alpha / (1 - alpha))
        + n_z * math.log(probs1.p_z / probs2.p_z)
        + n_o * math.log(probs1.p_o / probs2.p_o)
        + n_a * math.log(probs1.p_a / probs2.p_a)
    )


def trinomial_line(
    probs1: ChannelProbabilities,
    probs2: ChannelProbabilities,
    alpha: float,
    n_particles: int,
) -> TrinomialRule:
    for tag, pr in (("probs1", probs1), ("probs2", probs2)):
        for name, v in zip(("p_z", "p_o", "p_a"), pr.as_tuple()):
            _check_open_prob(f"{tag}.{name}", v)
    _check_open_prob("alpha", alpha)
    denom = math.log((probs2.p_z * probs1.p_a) / (probs1.p_z * probs2.p_a))
    if denom == 0.0:
        raise DegenerateError("p_z(1) p_a(2) == p_z(2) p_a(1): decision line is undefined")
    slope = math.log((probs1.p_o * probs2.p_a) / (probs2.p_o * probs1.p_a)) / denom
    intercept = (
        n_particles * math.log(probs1.p_a / probs2.p_a) + math.log(alpha / (1 - alpha))
    ) / denom

    corners = [(n_particles, 0), (0, n_particles), (0, 0)]
    witness = max(corners, key=lambda o: abs(o[0] - slope * o[1] - intercept))
    log_r = trinomial_log_likelihood_ratio(*witness, probs1, probs2, alpha, n_particles)
    if log_r == 0.0:
        raise DegenerateError("every corner of the outcome triangle lies on the decision line")
    return TrinomialRule(slope, intercept, n_particles, witness, 0 if log_r > 0 else 1)


# --------------------------------------------------------------------------
# M-level classifier


def _safe_log(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(p)


def _count_term(n: np.ndarray, log_p: np.ndarray) -> np.ndarray:
    # 0 * log(0) contributes nothing: a zero-probability channel only rules
    # out hypotheses when it was actually hit.
    with np.errstate(invalid="ignore"):
        return np.where(n[..., None] == 0, 0.0, n[..., None] * log_p)


def log_posteriors(
    n_z,
    n_o,
    n_particles: int,
    channel_probs: Sequence[ChannelProbabilities],
    priors: Sequence[float],
) -> np.ndarray:
    """Unnormalized ``log[alpha_i p(n | i)]`` without the multinomial coefficient.

    Broadcasts over array-valued counts; the hypothesis axis comes last.
    """
    n_z = np.asarray(n_z, dtype=np.int64)
    n_o = np.asarray(n_o, dtype=np.int64)
    n_a = n_particles - n_z - n_o
    table = np.array([cp.as_tuple() for cp in channel_probs], dtype=float)
    out = _safe_log(np.asarray(priors, dtype=float))
    out = out + _count_term(n_z, _safe_log(table[:, 0]))
    out = out + _count_term(n_o, _safe_log(table[:, 1]))
    out = out + _count_term(n_a, _safe_log(table[:, 2]))
    return out


def classify_many(
    n_z,
    n_o,
    n_particles: int,
    channel_probs: Sequence[ChannelProbabilities],
    priors: Sequence[float],
) -> np.ndarray:
    """Vectorized prior-weighted maximum-likelihood decision.

    Ties go to the larger prior, then to the lower index.
    """
    scores = log_posteriors(n_z, n_o, n_particles, channel_probs, priors)
    best = scores.max(axis=-1, keepdims=True)
    slack = _TIE_RTOL * np.maximum(1.0, np.abs(best))
    tied = scores >= best - slack
    priors_arr = np.asarray(priors, dtype=float)
    m = len(priors_arr)
    # rank: higher prior first, then lower index
    order = np.lexsort((np.arange(m), -priors_arr))
    rank = np.empty(m, dtype=np.int64)
    rank[order] = np.arange(m)
    key = np.where(tied, rank, m)
    return np.argmin(key, axis=-1)


def classify(
    outcome: tuple[int, int],
    model: GrayModel,
    channel_probs: Sequence[ChannelProbabilities],
    n_particles: int,
    *,
    priors: Sequence[float] | None = None,
) -> int:
    """Index of the gray level maximizing ``alpha_i * P(n_z, n_o, n_a | i)``."""
    n_z, n_o = outcome
    if n_z < 0 or n_o < 0 or n_z + n_o > n_particles:
        raise ValueError(f"outcome {outcome} lies outside the triangle for N={n_particles}")
    if len(channel_probs) != len(model):
        raise ValueError("channel_probs must align with the model levels")
    priors = model.alphas if priors is None else priors
    return int(classify_many(n_z, n_o, n_particles, channel_probs, priors))


def trinomial_pmf_grid(probs: ChannelProbabilities, n_particles: int) -> np.ndarray:
    """``P(n_z, n_o)`` on the full ``(N+1) x (N+1)`` grid; zero outside the triangle."""
    n = np.arange(n_particles + 1)
    n_z, n_o = np.meshgrid(n, n, indexing="ij")
    n_a = n_particles - n_z - n_o
    inside = n_a >= 0
    n_a = np.where(inside, n_a, 0)
    logp = (
        gammaln(n_particles + 1) - gammaln(n_z + 1) - gammaln(n_o + 1) - gammaln(n_a + 1)
    )
    for counts, p in zip((n_z, n_o, n_a), probs.as_tuple()):
        with np.errstate(invalid="ignore"):
            logp = logp + np.where(counts == 0, 0.0, counts * _safe_log(np.array(p)))
    return np.where(inside, np.exp(logp), 0.0)
