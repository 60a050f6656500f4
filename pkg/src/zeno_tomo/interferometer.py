"""Amplitude algebra of the looped Mach-Zehnder interferometer.

A particle enters the Zeno channel ``(1, 0)``, crosses the interferometer
``L`` times and each crossing applies ``V = B A B`` where ``B`` is the mirror
rotation by ``pi / 4L`` and ``A = diag(1, tau)`` the semitransparent sample in
the lower arm. Channel probabilities follow from the first column of
``V**L``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


class RegimeError(ValueError):
    """Parameters lie outside the regime where an asymptotic form holds."""


class ConsistencyError(ArithmeticError):
    """Computed probabilities failed an internal sanity check."""


_SUM_TOL = 1e-12


@dataclass(frozen=True)
class ApparatusConfig:
    loops: int
    tau: float

    def __post_init__(self):
        if isinstance(self.loops, bool) or int(self.loops) != self.loops or self.loops < 1:
            raise ValueError(f"loops must be a positive integer, got {self.loops!r}")
        if not (0.0 <= self.tau <= 1.0):
            raise ValueError(f"tau must lie in [0, 1], got {self.tau!r}")
        object.__setattr__(self, "loops", int(self.loops))
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def theta(self) -> float:
        return math.pi / (4 * self.loops)

    @property
    def c(self) -> float:
        return math.cos(self.theta)

    @property
    def s(self) -> float:
        return math.sin(self.theta)


@dataclass(frozen=True)
class TransferMatrix:
    """Real 2x2 matrix acting on (Zeno, orthogonal) amplitudes."""

    m11: float
    m12: float
    m21: float
    m22: float

    @classmethod
    def identity(cls) -> TransferMatrix:
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def diagonal(cls, d1: float, d2: float) -> TransferMatrix:
        return cls(d1, 0.0, 0.0, d2)

    def __matmul__(self, other: TransferMatrix) -> TransferMatrix:
        return TransferMatrix(
            self.m11 * other.m11 + self.m12 * other.m21,
            self.m11 * other.m12 + self.m12 * other.m22,
            self.m21 * other.m11 + self.m22 * other.m21,
            self.m21 * other.m12 + self.m22 * other.m22,
        )

    def __pow__(self, n: int) -> TransferMatrix:
        return self.power(n)

    def power(self, n: int) -> TransferMatrix:
        """``self**n`` by repeated squaring (``n >= 0``)."""
        if n < 0:
            raise ValueError("only non-negative powers are supported")
        result = TransferMatrix.identity()
        base = self
        while n:
            if n & 1:
                result = result @ base
            n >>= 1
            if n:
                base = base @ base
        return result

    @property
    def det(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m21

    @property
    def trace(self) -> float:
        return self.m11 + self.m22

    @property
    def T(self) -> TransferMatrix:
        return TransferMatrix(self.m11, self.m21, self.m12, self.m22)

    def as_tuple(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return ((self.m11, self.m12), (self.m21, self.m22))

    def apply(self, v1: float, v2: float) -> tuple[float, float]:
        return (self.m11 * v1 + self.m12 * v2, self.m21 * v1 + self.m22 * v2)


@dataclass(frozen=True)
class ChannelProbabilities:
    """Per-particle outcome law: Zeno detector, orthogonal detector, absorbed."""

    p_z: float
    p_o: float
    p_a: float

    def __post_init__(self):
        for name in ("p_z", "p_o", "p_a"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name}={v!r} outside [0, 1]")
        total = self.p_z + self.p_o + self.p_a
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")

    @classmethod
    def standard(cls, tau: float) -> ChannelProbabilities:
        """One-pass transmission experiment: detections land in the ``p_z`` slot."""
        p_d, p_a = standard_probabilities(tau)
        return cls(p_d, 0.0, p_a)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p_z, self.p_o, self.p_a)


def _check_loops(loops: int) -> int:
    if isinstance(loops, bool) or int(loops) != loops or loops < 1:
        raise ValueError(f"loops must be a positive integer, got {loops!r}")
    return int(loops)


def beam_splitter(loops: int) -> TransferMatrix:
    """Mirror matrix ``((c, -s), (s, c))`` with ``c, s = cos, sin(pi / 4L)``."""
    loops = _check_loops(loops)
    theta = math.pi / (4 * loops)
    c, s = math.cos(theta), math.sin(theta)
    return TransferMatrix(c, -s, s, c)


def sample_matrix(tau: float) -> TransferMatrix:
    return TransferMatrix.diagonal(1.0, tau)


def loop_matrix(cfg: ApparatusConfig) -> TransferMatrix:
    """Single round trip ``B A B``, written out entrywise."""
    c, s, t = cfg.c, cfg.s, cfg.tau
    return TransferMatrix(
        (1 + t) * c * c - t,
        -s * c * (1 + t),
        s * c * (1 + t),
        t - (1 + t) * s * s,
    )


def _pin_determinant(m: TransferMatrix, log_det: float) -> TransferMatrix:
    # Rescale m so det(m) equals exp(log_det). Only done when the determinant is
    # well conditioned against the entries; otherwise the computed det is noise.
    if log_det < -700.0:
        return m
    target = math.exp(log_det)
    scale = max(abs(m.m11), abs(m.m12), abs(m.m21), abs(m.m22)) ** 2
    if scale == 0.0 or target < 1e-4 * scale:
        return m
    ratio = target / m.det
    if not 0.5 < ratio < 2.0:
        return m
    f = math.sqrt(ratio)
    return TransferMatrix(m.m11 * f, m.m12 * f, m.m21 * f, m.m22 * f)


def loop_power(cfg: ApparatusConfig, n: int | None = None) -> TransferMatrix:
    """``V**n`` (default ``n = L``) by repeated squaring.

    ``det V = tau`` exactly, so every intermediate power has a known
    determinant; pinning it stops the linear-in-``n`` drift of the norm that
    plain squaring shows near ``tau = 1``.
    """
    n = cfg.loops if n is None else n
    v = loop_matrix(cfg)
    if cfg.tau == 0.0:
        return v.power(n)
    log_tau = math.log(cfg.tau)
    result, result_exp = TransferMatrix.identity(), 0
    base, base_exp = _pin_determinant(v, log_tau), 1
    while n:
        if n & 1:
            result_exp += base_exp
            result = _pin_determinant(result @ base, result_exp * log_tau)
        n >>= 1
        if n:
            base_exp *= 2
            base = _pin_determinant(base @ base, base_exp * log_tau)
    return result


def total_transfer(cfg: ApparatusConfig) -> TransferMatrix:
    return loop_power(cfg)


def evolve(cfg: ApparatusConfig) -> tuple[float, float]:
    """Signed output amplitudes ``(u_z, u_o)`` for a particle injected in the Zeno channel."""
    return total_transfer(cfg).apply(1.0, 0.0)


def zeno_probabilities(cfg: ApparatusConfig) -> ChannelProbabilities:
    u_z, u_o = evolve(cfg)
    p_z, p_o = u_z * u_z, u_o * u_o
    p_a = 1.0 - p_z - p_o
    if p_a < -_SUM_TOL:
        raise ConsistencyError(f"p_z + p_o = {p_z + p_o!r} exceeds 1 for {cfg}")
    if p_a < 0.0:
        # round-off from a (nearly) unitary evolution
        p_a = 0.0
        total = p_z + p_o
        p_z, p_o = p_z / total, p_o / total
    return ChannelProbabilities(p_z, p_o, p_a)


def zeno_threshold(loops: int) -> float:
    """Largest transmission amplitude for which the loop matrix has real eigenvalues."""
    loops = _check_loops(loops)
    x = math.sin(math.pi / (2 * loops))
    return (1 - x) / (1 + x)


def zeno_threshold_loops(tau: float) -> float:
    """Number of loops above which ``tau`` is inside the Zeno regime.

    Returns ``inf`` for ``tau == 1``: a white sample never freezes.
    """
    if not (0.0 <= tau <= 1.0):
        raise ValueError(f"tau must lie in [0, 1], got {tau!r}")
    if tau == 1.0:
        return math.inf
    return math.pi / (2 * math.asin((1 - tau) / (1 + tau)))


def in_zeno_regime(cfg: ApparatusConfig) -> bool:
    return cfg.tau < zeno_threshold(cfg.loops)


def asymptotic_absorption(tau: float, loops: int) -> float:
    """Leading-order absorption probability ``(pi^2 / 4L) (1 + tau) / (1 - tau)``, unclamped."""
    return math.pi ** 2 / (4 * loops) * (1 + tau) / (1 - tau)


def zeno_probabilities_asymptotic(cfg: ApparatusConfig) -> ChannelProbabilities:
    threshold = zeno_threshold(cfg.loops)
    if not cfg.tau < threshold:
        raise RegimeError(
            f"tau={cfg.tau} is not below the Zeno threshold {threshold:.12g} for L={cfg.loops}"
        )
    p_a = min(1.0, max(0.0, asymptotic_absorption(cfg.tau, cfg.loops)))
    return ChannelProbabilities(1.0 - p_a, 0.0, p_a)


def standard_probabilities(tau: float) -> tuple[float, float]:
    """Detection and absorption probabilities ``(tau^2, 1 - tau^2)``."""
    if not (0.0 <= tau <= 1.0):
        raise ValueError(f"tau must lie in [0, 1], got {tau!r}")
    p_d = tau * tau
    return p_d, 1.0 - p_d


def effective_transmission(cfg: ApparatusConfig) -> float:
    return math.sqrt(1.0 - zeno_probabilities(cfg).p_a)
