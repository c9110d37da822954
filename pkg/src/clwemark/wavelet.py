"""Single-level orthonormal Haar transform and block (de)partitioning.

The transform is applied per channel of a (channels, height, width) tensor and
packs the four subbands in quadrants of the same-shaped output: averages
top-left, horizontal detail top-right, vertical detail bottom-left, diagonal
detail bottom-right. Orthonormality matters here: it keeps iid Gaussian noise
iid Gaussian, which is what makes frequency-domain embedding invisible.

For a 2x2 pixel block [[a, b], [c, d]] the coefficients are::

    LL = (a + b + c + d) / 2      LH = (a - b + c - d) / 2
    HL = (a + b - c - d) / 2      HH = (a - b - c + d) / 2
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clwe import SampleMatrix, Units


def check_latent(tensor, dims: tuple[int, int, int] | None = None) -> np.ndarray:
    """Validate a (channels, height, width) float tensor with even spatial dims."""
    t = np.asarray(tensor, dtype=float)
    if t.ndim != 3:
        raise ValueError(f"latent tensor must be 3-D (channels, height, width), got shape {t.shape}")
    c, h, w = t.shape
    if h % 2 or w % 2:
        raise ValueError(f"height and width must be even for the wavelet transform, got {h}x{w}")
    if dims is not None and t.shape != tuple(dims):
        raise ValueError(f"latent tensor has shape {t.shape}, expected {tuple(dims)}")
    return t


@dataclass(frozen=True)
class BlockShape:
    """Extent of one sample block along (channel, height, width)."""

    bc: int
    bh: int
    bw: int

    def __post_init__(self):
        for name, v in (("bc", self.bc), ("bh", self.bh), ("bw", self.bw)):
            if int(v) != v or v < 1:
                raise ValueError(f"block extent {name} must be a positive integer, got {v}")

    @property
    def n(self) -> int:
        return self.bc * self.bh * self.bw

    def check_divides(self, dims: tuple[int, int, int]) -> None:
        c, h, w = dims
        for axis, size, extent in (("channel", c, self.bc), ("height", h, self.bh), ("width", w, self.bw)):
            if size % extent:
                raise ValueError(
                    f"block extent {extent} does not divide the {axis} dimension {size}"
                )


def dwt2(latent) -> np.ndarray:
    """Forward single-level orthonormal Haar transform, per channel."""
    x = check_latent(latent)
    a = x[:, 0::2, 0::2]
    b = x[:, 0::2, 1::2]
    c = x[:, 1::2, 0::2]
    d = x[:, 1::2, 1::2]
    out = np.empty_like(x)
    ch, hh, ww = x.shape
    h2, w2 = hh // 2, ww // 2
    out[:, :h2, :w2] = (a + b + c + d) / 2.0
    out[:, :h2, w2:] = (a - b + c - d) / 2.0
    out[:, h2:, :w2] = (a + b - c - d) / 2.0
    out[:, h2:, w2:] = (a - b - c + d) / 2.0
    return out


def idwt2(coeffs) -> np.ndarray:
    """Inverse of :func:`dwt2`; exact up to rounding."""
    y = check_latent(coeffs)
    ch, hh, ww = y.shape
    h2, w2 = hh // 2, ww // 2
    ll = y[:, :h2, :w2]
    lh = y[:, :h2, w2:]
    hl = y[:, h2:, :w2]
    hd = y[:, h2:, w2:]
    out = np.empty_like(y)
    out[:, 0::2, 0::2] = (ll + lh + hl + hd) / 2.0
    out[:, 0::2, 1::2] = (ll - lh + hl - hd) / 2.0
    out[:, 1::2, 0::2] = (ll + lh - hl - hd) / 2.0
    out[:, 1::2, 1::2] = (ll - lh - hl + hd) / 2.0
    return out


def blocks_of(tensor, shape: BlockShape) -> SampleMatrix:
    """Partition a tensor into non-overlapping blocks, one sample per block.

    Blocks are enumerated channel-group-major, then row-major over spatial
    tiles; within a block entries are flattened channel-major then row-major.
    The ordering is part of the detection contract (extraction must rebuild
    the same rows), so it is fixed here and versioned in the key file.
    """
    t = check_latent(tensor)
    shape.check_divides(t.shape)
    c, h, w = t.shape
    gc, gh, gw = c // shape.bc, h // shape.bh, w // shape.bw
    data = (
        t.reshape(gc, shape.bc, gh, shape.bh, gw, shape.bw)
        .transpose(0, 2, 4, 1, 3, 5)
        .reshape(gc * gh * gw, shape.n)
    )
    return SampleMatrix(np.ascontiguousarray(data), Units.LATENT)


def unblock(samples: SampleMatrix, shape: BlockShape, dims: tuple[int, int, int]) -> np.ndarray:
    """Reassemble a tensor from its block samples; exact inverse of :func:`blocks_of`."""
    samples.require_units(Units.LATENT, "unblock")
    c, h, w = dims
    shape.check_divides((c, h, w))
    if samples.m * samples.n != c * h * w:
        raise ValueError(
            f"sample matrix holds {samples.m * samples.n} entries, tensor needs {c * h * w}"
        )
    if samples.n != shape.n:
        raise ValueError(f"sample dimension {samples.n} != block volume {shape.n}")
    gc, gh, gw = c // shape.bc, h // shape.bh, w // shape.bw
    return (
        samples.data.reshape(gc, gh, gw, shape.bc, shape.bh, shape.bw)
        .transpose(0, 3, 1, 4, 2, 5)
        .reshape(c, h, w)
    )
