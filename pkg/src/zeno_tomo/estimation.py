"""Cramer-Rao bounds on estimating ``T = tau^2`` in both setups.

The Zeno side treats the outcome as binomial (absorbed vs. detected) with
the leading-order absorption probability, exactly as the closed-form bound
does; ``(1 - p_a)`` is replaced by one there.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from zeno_tomo.interferometer import (
    RegimeError,
    asymptotic_absorption,
    zeno_threshold_loops,
)


def _check_tau(tau: float) -> None:
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie strictly inside (0, 1), got {tau!r}")


def _check_positive(name: str, v: float) -> None:
    if not v > 0:
        raise ValueError(f"{name} must be positive, got {v!r}")


def _check_zeno_regime(tau: float, loops: int) -> None:
    l_min = zeno_threshold_loops(tau)
    if not loops > l_min:
        raise RegimeError(f"L={loops} is not above the Zeno threshold {l_min:.6g} for tau={tau}")


def fisher_standard(tau: float, n_particles: float) -> float:
    """Fisher information on ``T`` from ``N`` one-pass transmissions."""
    _check_tau(tau)
    _check_positive("n_particles", n_particles)
    t = tau * tau
    return n_particles / (t * (1 - t))


def fisher_zeno(tau: float, n_particles: float, loops: int) -> float:
    """Leading-order Fisher information on ``T`` from the absorbed count in the Zeno setup."""
    _check_tau(tau)
    _check_positive("n_particles", n_particles)
    _check_zeno_regime(tau, loops)
    return math.pi ** 2 * n_particles / (4 * loops * tau ** 2 * (1 - tau) ** 3 * (1 + tau))


def crlb_standard(tau: float, n_particles: float) -> float:
    """Lower bound on ``Var(T_hat)``: ``tau^2 (1 - tau^2) / N``."""
    return 1.0 / fisher_standard(tau, n_particles)


def crlb_zeno(tau: float, n_particles: float, loops: int) -> float:
    """Lower bound on ``Var(T_hat)``: ``4 tau^2 (1-tau)^3 (1+tau) L / (pi^2 N)``."""
    return 1.0 / fisher_zeno(tau, n_particles, loops)


def crlb_per_absorbed(tau: float, n_absorbed: float) -> float:
    """Bound on the standard deviation of ``T_hat`` given the absorbed-particle count.

    Same for both setups: ``tau (1 - tau^2) / sqrt(N_a)``.
    """
    _check_tau(tau)
    _check_positive("n_absorbed", n_absorbed)
    return tau * (1 - tau * tau) / math.sqrt(n_absorbed)


@dataclass(frozen=True)
class CrlbReport:
    tau: float
    loops: int
    n_particles: float
    variance_bound_standard: float
    variance_bound_zeno: float
    bound_per_absorbed: float
    n_absorbed_standard: float
    n_absorbed_zeno: float

    @property
    def residual_standard(self) -> float:
        """``|sqrt(Var_st) - bound_per_absorbed(N_a^st)|``; zero by algebra."""
        return abs(
            math.sqrt(self.variance_bound_standard)
            - crlb_per_absorbed(self.tau, self.n_absorbed_standard)
        )

    @property
    def residual_zeno(self) -> float:
        return abs(
            math.sqrt(self.variance_bound_zeno)
            - crlb_per_absorbed(self.tau, self.n_absorbed_zeno)
        )


def crlb_report(tau: float, n_particles: float, loops: int) -> CrlbReport:
    """Both bounds for the same ``N``, plus the common per-absorbed-particle bound.

    ``bound_per_absorbed`` is evaluated at the standard setup's absorbed count.
    """
    n_a_st = n_particles * (1 - tau * tau)
    n_a_ze = n_particles * asymptotic_absorption(tau, loops)
    return CrlbReport(
        tau=tau,
        loops=loops,
        n_particles=n_particles,
        variance_bound_standard=crlb_standard(tau, n_particles),
        variance_bound_zeno=crlb_zeno(tau, n_particles, loops),
        bound_per_absorbed=crlb_per_absorbed(tau, n_a_st),
        n_absorbed_standard=n_a_st,
        n_absorbed_zeno=n_a_ze,
    )
