"""Monte Carlo pixel-by-pixel reconstruction for both setups.

Every pixel owns an independent Philox stream keyed by the master seed and
offset by the pixel index, so results do not depend on evaluation order or
on how pixels are split across workers.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from zeno_tomo.decision import (
    DegenerateError,
    GrayModel,
    classify_many,
    required_particles,
)
from zeno_tomo.interferometer import (
    ApparatusConfig,
    ChannelProbabilities,
    standard_probabilities,
    zeno_probabilities,
)

THREADS_ENV = "ZENO_TOMO_THREADS"


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Gray-level indices on a ``height x width`` grid (row-major)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.size == 0:
            raise ValueError("pixels must be a non-empty 2D array")
        if not np.issubdtype(px.dtype, np.integer):
            raise ValueError("pixels must hold integer level indices")
        if px.min() < 0:
            raise ValueError("negative level index")
        object.__setattr__(self, "pixels", px.astype(np.int64))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def size(self) -> int:
        return self.pixels.size

    def check_levels(self, n_levels: int) -> None:
        if self.pixels.max() >= n_levels:
            raise ValueError(
                f"image uses level {self.pixels.max()} but the model has {n_levels} levels"
            )

    def frequencies(self, n_levels: int) -> np.ndarray:
        return np.bincount(self.pixels.ravel(), minlength=n_levels) / self.size

    def __eq__(self, other):
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)


class PixelOutcome(NamedTuple):
    n_z: int
    n_o: int
    n_a: int


@dataclass(frozen=True)
class Setup:
    """``standard`` one-pass transmission, or ``zeno`` with ``loops`` round trips."""

    kind: str
    loops: int | None = None

    def __post_init__(self):
        if self.kind not in ("standard", "zeno"):
            raise ValueError(f"unknown setup {self.kind!r}")
        if self.kind == "zeno" and (self.loops is None or self.loops < 1):
            raise ValueError("the zeno setup needs loops >= 1")
        if self.kind == "standard" and self.loops is not None:
            raise ValueError("the standard setup takes no loops")

    @classmethod
    def standard(cls) -> Setup:
        return cls("standard")

    @classmethod
    def zeno(cls, loops: int) -> Setup:
        return cls("zeno", int(loops))

    @property
    def label(self) -> str:
        return "standard" if self.kind == "standard" else f"zeno_L{self.loops}"

    def channel_probabilities(self, tau: float) -> ChannelProbabilities:
        if self.kind == "standard":
            return ChannelProbabilities.standard(tau)
        return zeno_probabilities(ApparatusConfig(self.loops, tau))

    def level_probabilities(self, model: GrayModel) -> list[ChannelProbabilities]:
        return [self.channel_probabilities(t) for t in model.taus]


def pixel_stream(master_seed: int, pixel_index: int) -> np.random.Generator:
    if master_seed < 0 or pixel_index < 0:
        raise ValueError("seed and pixel index must be non-negative")
    # the second counter word gives each pixel its own block of 2**64 draws
    return np.random.Generator(np.random.Philox(key=master_seed, counter=[0, pixel_index, 0, 0]))


def simulate_pixel(
    probs: ChannelProbabilities, n_particles: int, rng: np.random.Generator
) -> PixelOutcome:
    """Trinomial counts, drawn as absorbed first, then orthogonal among the survivors."""
    n_a = int(rng.binomial(n_particles, probs.p_a))
    rest = n_particles - n_a
    out = probs.p_z + probs.p_o
    p_o_given_out = min(1.0, probs.p_o / out) if out > 0 else 0.0
    n_o = int(rng.binomial(rest, p_o_given_out))
    return PixelOutcome(rest - n_o, n_o, n_a)


def simulate_standard_pixel(
    tau: float, n_particles: int, rng: np.random.Generator
) -> tuple[int, int]:
    """``(n_transmitted, n_absorbed)`` for one-pass illumination."""
    _, p_a = standard_probabilities(tau)
    n_a = int(rng.binomial(n_particles, p_a))
    return n_particles - n_a, n_a


def thread_count(requested: int | None = None) -> int:
    cap = os.environ.get(THREADS_ENV)
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        n = min(n, int(cap))
    return max(1, n)


@dataclass(frozen=True, eq=False)
class ReconstructionReport:
    setup: Setup
    n_particles: int
    truth: GrayImage
    reconstructed: GrayImage
    misinterpreted: np.ndarray
    counts: np.ndarray = field(repr=False)  # (height, width, 3): n_z, n_o, n_a

    @property
    def error_count(self) -> int:
        return int(self.misinterpreted.sum())

    @property
    def mean_absorbed_per_pixel(self) -> float:
        return float(self.counts[..., 2].mean())

    @property
    def total_particles(self) -> int:
        return self.n_particles * self.truth.size

    def same_as(self, other: ReconstructionReport) -> bool:
        return (
            self.setup == other.setup
            and self.n_particles == other.n_particles
            and self.truth == other.truth
            and self.reconstructed == other.reconstructed
            and np.array_equal(self.misinterpreted, other.misinterpreted)
            and np.array_equal(self.counts, other.counts)
        )


def _simulate_block(
    indices: range,
    flat_truth: np.ndarray,
    probs: Sequence[ChannelProbabilities],
    n_particles: int,
    master_seed: int,
) -> np.ndarray:
    out = np.empty((len(indices), 3), dtype=np.int64)
    for row, idx in enumerate(indices):
        out[row] = simulate_pixel(probs[flat_truth[idx]], n_particles, pixel_stream(master_seed, idx))
    return out


def simulate_counts(
    sample: GrayImage,
    probs: Sequence[ChannelProbabilities],
    n_particles: int,
    master_seed: int,
    threads: int | None = None,
) -> np.ndarray:
    flat = sample.pixels.ravel()
    n = flat.size
    workers = min(thread_count(threads), n)
    bounds = np.linspace(0, n, workers + 1).astype(int)
    blocks = [range(bounds[i], bounds[i + 1]) for i in range(workers)]
    if workers == 1:
        parts = [_simulate_block(blocks[0], flat, probs, n_particles, master_seed)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(lambda b: _simulate_block(b, flat, probs, n_particles, master_seed), blocks)
            )
    return np.concatenate(parts).reshape(sample.height, sample.width, 3)


def reconstruct(
    sample: GrayImage,
    model: GrayModel,
    setup: Setup,
    n_particles: int,
    master_seed: int,
    *,
    threads: int | None = None,
) -> ReconstructionReport:
    """Illuminate every pixel with ``n_particles`` and classify it back.

    The standard setup has no orthogonal channel; its detected count sits in
    the ``n_z`` slot and ``n_o`` is always zero, which makes the shared
    maximum-likelihood classifier reduce to the binomial rule.
    """
    if n_particles < 1:
        raise ValueError("n_particles must be positive")
    sample.check_levels(len(model))
    probs = setup.level_probabilities(model)
    counts = simulate_counts(sample, probs, n_particles, master_seed, threads)
    decided = classify_many(counts[..., 0], counts[..., 1], n_particles, probs, model.alphas)
    recon = GrayImage(decided.astype(np.int64))
    mask = recon.pixels != sample.pixels
    return ReconstructionReport(setup, n_particles, sample, recon, mask, counts)


def mean_absorption(model: GrayModel, setup: Setup) -> float:
    """Prior-weighted absorption probability per particle."""
    probs = setup.level_probabilities(model)
    return sum(a * p.p_a for a, p in zip(model.alphas, probs))


def particles_for_absorbed(model: GrayModel, setup: Setup, n_absorbed: float) -> int:
    """Particles per pixel giving at least ``n_absorbed`` absorbed on average."""
    mean = mean_absorption(model, setup)
    if mean <= 0:
        raise DegenerateError("sample absorbs nothing: no particle budget reaches the target")
    return max(1, math.ceil(n_absorbed / mean - 1e-12))


# --------------------------------------------------------------------------
# irradiation comparison at fixed error rate


@dataclass(frozen=True)
class RatioPoint:
    alpha: float
    ratio: float
    n_zeno: int | None = None
    n_standard: int | None = None
    absorbed_zeno: float | None = None
    absorbed_standard: float | None = None
    error: str | None = None


def irradiation_ratio(
    tau: float, d_tau: float, loops: int, target_pe: float, alpha: float
) -> RatioPoint:
    """Absorbed particles needed by the Zeno setup over those needed by the standard one.

    ``alpha`` is the frequency of the darker level ``tau``; the lighter level
    is ``tau + d_tau``. Both setups use the binomial (absorbed-count) rule.
    """
    t1, t2 = tau, tau + d_tau
    if not (0 <= t1 < t2 < 1):
        raise ValueError(f"need 0 <= tau < tau + d_tau < 1, got tau={tau}, d_tau={d_tau}")
    z1 = zeno_probabilities(ApparatusConfig(loops, t1)).p_a
    z2 = zeno_probabilities(ApparatusConfig(loops, t2)).p_a
    s1 = standard_probabilities(t1)[1]
    s2 = standard_probabilities(t2)[1]
    try:
        if z1 < z2:
            n_ze = required_particles(z1, z2, alpha, target_pe)
        else:
            n_ze = required_particles(z2, z1, 1 - alpha, target_pe)
        # standard: the lighter level absorbs less, so it plays H1
        n_st = required_particles(s2, s1, 1 - alpha, target_pe)
    except (ValueError, ArithmeticError) as exc:
        return RatioPoint(alpha, math.nan, error=str(exc))
    a_ze = n_ze * (alpha * z1 + (1 - alpha) * z2)
    a_st = n_st * (alpha * s1 + (1 - alpha) * s2)
    return RatioPoint(alpha, a_ze / a_st, n_ze, n_st, a_ze, a_st)


def irradiation_ratio_curve(
    tau: float, d_tau: float, loops: int, target_pe: float, alpha_grid: Sequence[float]
) -> list[RatioPoint]:
    return [irradiation_ratio(tau, d_tau, loops, target_pe, a) for a in alpha_grid]


# --------------------------------------------------------------------------
# synthetic sample


def synthetic_cell(
    width: int = 100, height: int = 100, fractions: Sequence[float] = (0.93, 0.07, 0.02)
) -> GrayImage:
    """Deterministic three-level stand-in for a cell image.

    ``fractions`` are ordered like the level indices (darkest first): a dark
    background, a lobed cell body of the middle level, and two bright nuclei.
    Fractions are normalized to their sum; level counts match them up to
    rounding.
    """
    if len(fractions) != 3 or min(fractions) < 0 or sum(fractions) <= 0:
        raise ValueError("fractions must be three non-negative values")
    fractions = [f / sum(fractions) for f in fractions]
    n = width * height
    n_nuc = round(fractions[2] * n)
    n_cell = round(fractions[1] * n) + n_nuc
    y, x = np.mgrid[0:height, 0:width].astype(float)
    cy, cx = (height - 1) / 2, (width - 1) / 2
    u, v = (x - cx) / width, (y - cy) / height
    angle = np.arctan2(v, u)
    # teardrop body: elongated, with a slight angular wobble
    body = np.hypot(u / 1.0, v / 1.6) * (1 + 0.15 * np.cos(angle) + 0.05 * np.cos(3 * angle))
    order = np.lexsort((np.arange(n), body.ravel()))
    levels = np.zeros(n, dtype=np.int64)
    cell = order[:n_cell]
    levels[cell] = 1
    nuclei = np.minimum(np.hypot(u + 0.07, v + 0.08), np.hypot(u - 0.07, v + 0.08)).ravel()
    inner = cell[np.lexsort((cell, nuclei[cell]))][:n_nuc]
    levels[inner] = 2
    return GrayImage(levels.reshape(height, width))
