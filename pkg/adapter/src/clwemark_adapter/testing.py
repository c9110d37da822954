"""Deterministic pixel-encoding backend for contract tests and offline demos.

Stands in for a real latent diffusion model: "rendering" packs the latent
channels into grayscale tiles (8-bit quantized, nearest-upscaled to the target
image size) plus a small prompt-dependent distortion, and "inversion" undoes
the packing. The round trip recovers the latent up to quantization and prompt
noise, mimicking a model whose inversion is good but imperfect, while image
perturbations corrupt the estimate exactly the way they corrupt real pipelines
(geometry-destroying ones catastrophically, re-encoding mildly).
"""

from __future__ import annotations

import zlib

import numpy as np
from PIL import Image

from .config import PipelineConfig


class EncodingBackend:
    """Invertible-by-construction latent <-> image codec."""

    span = 5.0  # latent values are clipped to [-span, span] before quantization

    def __init__(self, prompt_noise_std: float = 0.02):
        self.prompt_noise_std = prompt_noise_std

    def _grid(self, config: PipelineConfig) -> tuple[int, int]:
        c = config.latent_shape[0]
        cols = int(np.ceil(np.sqrt(c)))
        rows = int(np.ceil(c / cols))
        return rows, cols

    def _canvas_size(self, config: PipelineConfig) -> tuple[int, int]:
        c, h, w = config.latent_shape
        rows, cols = self._grid(config)
        return cols * w, rows * h  # PIL (width, height) order

    def _check_scale(self, config: PipelineConfig) -> int:
        cw, chh = self._canvas_size(config)
        iw, ih = config.image_size
        if iw % cw or ih % chh or iw // cw != ih // chh:
            raise ValueError(
                f"image size {config.image_size} is not an integer multiple of the "
                f"latent canvas {(cw, chh)}"
            )
        return iw // cw

    def latents_to_image(self, latents, prompt, config):
        latents = np.asarray(latents, dtype=np.float64)
        scale = self._check_scale(config)
        rows, cols = self._grid(config)
        c, h, w = config.latent_shape

        # Prompt-conditioned distortion the inverter cannot remove; keyed on a
        # stable digest so renders are reproducible across processes.
        seed = zlib.crc32(prompt.encode("utf-8"))
        noisy = latents + np.random.default_rng(seed).standard_normal(latents.shape) * self.prompt_noise_std

        unit = np.clip((noisy + self.span) / (2 * self.span), 0.0, 1.0)
        pixels = np.round(unit * 255.0).astype(np.uint8)
        canvas = np.zeros((rows * h, cols * w), dtype=np.uint8)
        for ch in range(c):
            r, col = divmod(ch, cols)
            canvas[r * h : (r + 1) * h, col * w : (col + 1) * w] = pixels[ch]
        image = Image.fromarray(canvas, mode="L")
        return image.resize(config.image_size, Image.NEAREST) if scale != 1 else image

    def image_to_latents(self, image, config):
        self._check_scale(config)
        rows, cols = self._grid(config)
        c, h, w = config.latent_shape
        # Box downsampling averages each replicated block, soaking up some of
        # any re-encoding noise along the way.
        canvas = np.asarray(
            image.convert("L").resize(self._canvas_size(config), Image.BOX), dtype=np.float64
        )
        out = np.empty((c, h, w))
        for ch in range(c):
            r, col = divmod(ch, cols)
            tile = canvas[r * h : (r + 1) * h, col * w : (col + 1) * w]
            out[ch] = tile / 255.0 * (2 * self.span) - self.span
        return out
