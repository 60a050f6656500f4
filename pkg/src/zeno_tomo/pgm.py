"""Binary portable graymap (P5) I/O and the sidecar gray-model file.

The model file is JSON::

    {"levels": [
        {"name": "black", "tau": 0.80, "alpha": 0.93, "min": 0,   "max": 84},
        {"name": "gray",  "tau": 0.96, "alpha": 0.07, "min": 85,  "max": 169},
        {"name": "white", "tau": 0.99, "alpha": 0.02, "min": 170, "max": 255}
    ]}

``min``/``max`` are inclusive pixel-value ranges; ``value`` (optional,
default the range midpoint) is the gray written for reconstructed pixels;
``alpha`` may be omitted when priors are measured from the image.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from zeno_tomo.decision import GrayModel
from zeno_tomo.simulator import GrayImage

log = logging.getLogger(__name__)

MASK_OK = 255
MASK_WRONG = 0


class PgmError(ValueError):
    pass


def _tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """First ``count`` header integers and the offset just past the last one's whitespace."""
    out, pos = [], 2
    while len(out) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise PgmError("truncated header")
        if data[pos : pos + 1] == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
            continue
        start = pos
        while pos < len(data) and data[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise PgmError(f"unexpected byte {data[pos:pos + 1]!r} in header")
        out.append(int(data[start:pos]))
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise PgmError("header must end with a single whitespace byte")
    return out, pos + 1


def read_pgm(path) -> np.ndarray:
    """Raw pixel values as a ``(height, width)`` integer array."""
    data = Path(path).read_bytes()
    if data[:2] != b"P5":
        raise PgmError(f"{path}: not a binary graymap (magic {data[:2]!r})")
    (width, height, maxval), offset = _tokens(data, 3)
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise PgmError(f"{path}: bad header {width}x{height} maxval {maxval}")
    dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
    need = width * height * dtype.itemsize
    raster = data[offset : offset + need]
    if len(raster) < need:
        raise PgmError(f"{path}: expected {need} raster bytes, found {len(raster)}")
    img = np.frombuffer(raster, dtype=dtype).reshape(height, width).astype(np.int64)
    if img.max() > maxval:
        raise PgmError(f"{path}: pixel value above maxval {maxval}")
    return img


def write_pgm(path, img: np.ndarray) -> None:
    img = np.asarray(img)
    if img.ndim != 2:
        raise PgmError("graymap must be 2D")
    if img.min() < 0 or img.max() > 255:
        raise PgmError("graymap values must fit in 0..255")
    height, width = img.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.astype(np.uint8).tobytes())


@dataclass(frozen=True)
class LevelSpec:
    name: str
    tau: float
    alpha: float | None
    lo: int
    hi: int
    value: int


@dataclass(frozen=True)
class ModelFile:
    """Gray levels as declared in the sidecar file, sorted by ``tau``."""

    levels: tuple[LevelSpec, ...]

    def index_image(self, raw: np.ndarray) -> GrayImage:
        idx = np.full(raw.shape, -1, dtype=np.int64)
        for i, lv in enumerate(self.levels):
            idx[(raw >= lv.lo) & (raw <= lv.hi)] = i
        if (idx < 0).any():
            bad = np.unique(raw[idx < 0])[:5]
            raise PgmError(f"pixel values {bad.tolist()} match no level range")
        return GrayImage(idx)

    def gray_values(self, image: GrayImage) -> np.ndarray:
        lut = np.array([lv.value for lv in self.levels], dtype=np.int64)
        return lut[image.pixels]

    def gray_model(self, image: GrayImage | None = None, measure: bool = False) -> GrayModel:
        """Priors as declared, or measured as level frequencies in ``image``."""
        taus = [lv.tau for lv in self.levels]
        if measure:
            if image is None:
                raise ValueError("measuring priors needs an image")
            return GrayModel.from_pairs(taus, image.frequencies(len(self.levels)).tolist())
        alphas = [lv.alpha for lv in self.levels]
        if any(a is None for a in alphas):
            raise ValueError("model file lacks alpha values; measure them from the image instead")
        total = sum(alphas)
        if abs(total - 1.0) > 1e-12:
            log.warning("declared priors sum to %.6g; normalizing", total)
        return GrayModel.from_pairs(taus, alphas, normalize=True)

    def to_json(self) -> str:
        return json.dumps(
            {
                "levels": [
                    {
                        "name": lv.name,
                        "tau": lv.tau,
                        **({"alpha": lv.alpha} if lv.alpha is not None else {}),
                        "min": lv.lo,
                        "max": lv.hi,
                        "value": lv.value,
                    }
                    for lv in self.levels
                ]
            },
            indent=2,
        )


def parse_model(text: str) -> ModelFile:
    try:
        raw = json.loads(text)
        entries = raw["levels"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise PgmError(f"malformed model file: {exc}") from None
    levels = []
    for i, e in enumerate(entries):
        try:
            lo, hi = int(e["min"]), int(e["max"])
            levels.append(
                LevelSpec(
                    name=str(e.get("name", f"level{i}")),
                    tau=float(e["tau"]),
                    alpha=None if e.get("alpha") is None else float(e["alpha"]),
                    lo=lo,
                    hi=hi,
                    value=int(e.get("value", (lo + hi) // 2)),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise PgmError(f"level {i}: {exc}") from None
    levels.sort(key=lambda lv: lv.tau)
    spans = sorted((lv.lo, lv.hi) for lv in levels)
    for (a_lo, a_hi), (b_lo, _) in zip(spans, spans[1:]):
        if b_lo <= a_hi:
            raise PgmError("pixel value ranges overlap")
    if any(lv.lo > lv.hi or lv.lo < 0 or lv.hi > 65535 for lv in levels):
        raise PgmError("invalid pixel value range")
    return ModelFile(tuple(levels))


def load_model(path) -> ModelFile:
    return parse_model(Path(path).read_text())


def default_model(
    taus: Sequence[float] = (0.8, 0.96, 0.99),
    alphas: Sequence[float] | None = (0.93, 0.07, 0.02),
    names: Sequence[str] = ("black", "gray", "white"),
) -> ModelFile:
    """Evenly split 0..255 among the levels, darkest first."""
    m = len(taus)
    edges = np.linspace(0, 256, m + 1).round().astype(int)
    values = np.linspace(0, 255, m).round().astype(int) if m > 1 else [128]
    levels = []
    for i in range(m):
        levels.append(
            LevelSpec(
                name=names[i] if i < len(names) else f"level{i}",
                tau=float(taus[i]),
                alpha=None if alphas is None else float(alphas[i]),
                lo=int(edges[i]),
                hi=int(edges[i + 1] - 1),
                value=int(values[i]),
            )
        )
    return ModelFile(tuple(sorted(levels, key=lambda lv: lv.tau)))
