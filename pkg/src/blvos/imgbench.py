"""Sharpening and smoothing through the simulated multiplier, scored with MSSIM."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .timesim import Config, Mode, reset_table, run_trace, timed_netlist

C1 = (0.01 * 255) ** 2
C2 = (0.03 * 255) ** 2
SSIM_WINDOW = 8


class PGMError(ValueError):
    pass


class PGMHeaderError(PGMError):
    pass


class PGMMaxvalError(PGMError):
    pass


class PGMPayloadError(PGMError):
    pass


@dataclass(frozen=True, eq=False)
class GrayImage:
    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.size != self.width * self.height:
            raise ValueError(f"{px.size} pixels for a {self.width}x{self.height} image")
        if px.size and (px.min() < 0 or px.max() > 255):
            raise ValueError("pixel values must lie in [0, 255]")
        object.__setattr__(self, "pixels", px.reshape(self.height, self.width).astype(np.uint8))

    @classmethod
    def from_array(cls, arr) -> GrayImage:
        arr = np.asarray(arr)
        return cls(arr.shape[1], arr.shape[0], arr)

    def __eq__(self, other):
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*")


def _header(data: bytes) -> tuple[bytes, list[int], int]:
    pos = 0
    fields = []
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise PGMHeaderError(f"unsupported magic {magic!r}; expected P2 or P5")
    pos = 2
    for name in ("width", "height", "maxval"):
        pos = _TOKEN.match(data, pos).end()
        m = re.compile(rb"\d+").match(data, pos)
        if m is None:
            raise PGMHeaderError(f"malformed header: missing {name}")
        fields.append(int(m.group()))
        pos = m.end()
    if pos >= len(data) and magic == b"P5":
        raise PGMPayloadError("no payload after header")
    if pos < len(data) and not data[pos:pos + 1].isspace():
        raise PGMHeaderError("malformed header: no whitespace after maxval")
    return magic, fields, pos + 1


def load_pgm(path: str | Path) -> GrayImage:
    data = Path(path).read_bytes()
    magic, (width, height, maxval), pos = _header(data)
    if width <= 0 or height <= 0:
        raise PGMHeaderError(f"invalid dimensions {width}x{height}")
    if maxval != 255:
        raise PGMMaxvalError(f"maxval {maxval} unsupported; only 255 is accepted")
    count = width * height
    if magic == b"P5":
        payload = data[pos:pos + count]
        if len(payload) < count:
            raise PGMPayloadError(f"truncated payload: {len(payload)} of {count} bytes")
        px = np.frombuffer(payload, np.uint8)
    else:
        text = re.sub(rb"#[^\n]*", b"", data[pos:]).split()
        if len(text) < count:
            raise PGMPayloadError(f"truncated payload: {len(text)} of {count} samples")
        try:
            px = np.array([int(t) for t in text[:count]], np.int64)
        except ValueError as exc:
            raise PGMPayloadError(f"non-numeric sample in payload: {exc}") from None
        if px.min() < 0 or px.max() > 255:
            raise PGMPayloadError("sample exceeds maxval")
    return GrayImage(width, height, px)


def save_pgm(image: GrayImage, path: str | Path, binary: bool = True) -> None:
    head = f"{'P5' if binary else 'P2'}\n{image.width} {image.height}\n255\n".encode()
    if binary:
        body = image.pixels.tobytes()
    else:
        body = "\n".join(" ".join(str(v) for v in row) for row in image.pixels.tolist()).encode() + b"\n"
    Path(path).write_bytes(head + body)


MulFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def exact_mul(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.asarray(x, np.int64) * np.asarray(y, np.int64)


def _taps(image: GrayImage, size: int = 3) -> np.ndarray:
    pad = size // 2
    padded = np.pad(image.pixels.astype(np.int64), pad, mode="edge")
    return sliding_window_view(padded, (size, size))


def convolve(image: GrayImage, kernel, divisor: int, mul: MulFn = exact_mul) -> GrayImage:
    """3x3 integer convolution with replicated borders.

    Each product is ``sign(c) * mul(|c|, pixel)``; the accumulator is exact and
    the sum is divided by ``divisor`` with round-half-up, then saturated.
    """
    kernel = np.asarray(kernel, np.int64)
    if kernel.shape != (3, 3):
        raise ValueError(f"kernel must be 3x3, got {kernel.shape}")
    if divisor <= 0:
        raise ValueError("divisor must be positive")
    if np.abs(kernel).max() > 255:
        raise ValueError("kernel magnitudes must fit in 8 bits")
    windows = _taps(image)
    acc = np.zeros((image.height, image.width), np.int64)
    for i in range(3):
        for j in range(3):
            c = int(kernel[i, j])
            if c == 0:
                continue
            prod = np.asarray(mul(np.full(acc.shape, abs(c), np.int64), windows[:, :, i, j]), np.int64)
            acc += prod if c > 0 else -prod
    out = np.floor_divide(2 * acc + divisor, 2 * divisor)
    return GrayImage.from_array(np.clip(out, 0, 255))


def mssim(reference: GrayImage, test: GrayImage, window: int = SSIM_WINDOW) -> float:
    """Mean SSIM over every ``window`` x ``window`` position, uniform weights, stride 1."""
    if (reference.width, reference.height) != (test.width, test.height):
        raise ValueError("images must have equal dimensions")
    if reference.width < window or reference.height < window:
        raise ValueError(f"images must be at least {window}x{window}")
    x = sliding_window_view(reference.pixels.astype(np.float64), (window, window))
    y = sliding_window_view(test.pixels.astype(np.float64), (window, window))
    mx = x.mean(axis=(2, 3))
    my = y.mean(axis=(2, 3))
    vx = x.var(axis=(2, 3))
    vy = y.var(axis=(2, 3))
    cov = ((x - mx[..., None, None]) * (y - my[..., None, None])).mean(axis=(2, 3))
    ssim = ((2 * mx * my + C1) * (2 * cov + C2)) / ((mx ** 2 + my ** 2 + C1) * (vx + vy + C2))
    return float(ssim.mean())


class App(str, enum.Enum):
    SHARPEN = "SHARPEN"
    SMOOTH = "SMOOTH"


@dataclass(frozen=True)
class AppReport:
    app: App
    mssim: float
    mssim_clamped: bool
    energy_reduction_pct: float
    config_hash: str
    config: dict
    mode: Mode
    output: GrayImage | None = field(default=None, repr=False, compare=False)

    def as_dict(self) -> dict:
        return {"app": self.app.value, "mssim": self.mssim, "mssim_clamped": self.mssim_clamped,
                "energy_reduction_pct": self.energy_reduction_pct, "mode": self.mode.value,
                "config_hash": self.config_hash, "config": self.config}


def _operands(image: GrayImage, kernel) -> tuple[np.ndarray, np.ndarray]:
    """Multiplier operand stream in evaluation order: tap-major, then row-major pixels."""
    kernel = np.asarray(kernel, np.int64)
    windows = _taps(image)
    a, b = [], []
    for i in range(3):
        for j in range(3):
            c = int(kernel[i, j])
            if c:
                px = windows[:, :, i, j].ravel()
                a.append(np.full(px.size, abs(c), np.int64))
                b.append(px)
    if not a:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    return np.concatenate(a), np.concatenate(b)


def _stream_mul(products: np.ndarray) -> MulFn:
    """A mul that replays precomputed products in the order convolve requests them."""
    cursor = 0

    def mul(x, y):
        nonlocal cursor
        shape = np.shape(y)
        size = int(np.prod(shape))
        out = products[cursor:cursor + size].reshape(shape)
        cursor += size
        return out

    return mul


def run_app(app: App | str, image: GrayImage, config: Config, mode: Mode | str = Mode.RESET) -> AppReport:
    """Filter ``image`` with the approximate multiplier and compare against the exact pipeline."""
    app = App(str(app).upper() if not isinstance(app, App) else app)
    mode = Mode(mode)
    spec = config.models.kernels[app.value.lower()]
    kernel, divisor = spec["kernel"], int(spec["divisor"])
    if config.spec.n != 8:
        raise ValueError("image applications use the 8-bit multiplier")
    reference = convolve(image, kernel, divisor)
    a, b = _operands(image, kernel)
    baseline = config.baseline()
    if mode is Mode.RESET:
        table = reset_table(config)
        products = table.products[a, b].astype(np.int64)
        energy = float(np.sum(table.energy[a, b]))
        base_energy = float(np.sum(reset_table(baseline).energy[a, b]))
    else:
        res = run_trace(timed_netlist(config), a, b, Mode.PAIRED)
        products = res.sampled
        energy = float(res.energy.sum())
        base_energy = float(run_trace(timed_netlist(baseline), a, b, Mode.PAIRED).energy.sum())
    approx = convolve(image, kernel, divisor, _stream_mul(products))
    value = mssim(reference, approx)
    reduction = 100.0 * (1.0 - energy / base_energy) if base_energy > 0 else 0.0
    return AppReport(app, max(value, 0.0), value < 0.0, reduction, config.hash, config.describe(), mode, approx)
