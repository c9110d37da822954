"""Render latents to images and invert images back to latent estimates.

The adapter deliberately knows nothing about the watermark itself: it moves
NPY latent tensors in and out of a latent-diffusion backend, and the primary
tool does all marking and detection on the files. Backends implement
:class:`LatentImageBackend`; the production one wraps a diffusers Stable
Diffusion pipeline, and a deterministic test double lives in
:mod:`clwemark_adapter.testing`.
"""

from __future__ import annotations

from pathlib import Path
from typing import Protocol

import numpy as np
from PIL import Image

from .config import PipelineConfig


class LatentImageBackend(Protocol):
    def latents_to_image(self, latents: np.ndarray, prompt: str, config: PipelineConfig) -> Image.Image:
        ...

    def image_to_latents(self, image: Image.Image, config: PipelineConfig) -> np.ndarray:
        ...


def load_latent(path, config: PipelineConfig) -> np.ndarray:
    """Read an NPY latent and validate its shape against the pipeline config."""
    latent = np.load(path, allow_pickle=False)
    if latent.shape != tuple(config.latent_shape):
        raise ValueError(
            f"{path}: latent shape {latent.shape} does not match pipeline latent shape "
            f"{tuple(config.latent_shape)}"
        )
    return np.asarray(latent, dtype=np.float64)


def render(
    backend: LatentImageBackend,
    prompt: str,
    latent_file,
    out_image,
    config: PipelineConfig | None = None,
) -> Path:
    """Generate an image from the latent stored in ``latent_file``.

    The latent is validated before any model work. Deterministic given the
    backend's scheduler seed.
    """
    config = config or PipelineConfig()
    latent = load_latent(latent_file, config)
    image = backend.latents_to_image(latent, prompt, config)
    if image.size != tuple(config.image_size):
        raise ValueError(f"backend produced {image.size} image, expected {tuple(config.image_size)}")
    out_image = Path(out_image)
    image.save(out_image)
    return out_image


def invert(
    backend: LatentImageBackend,
    image_path,
    out_latent,
    config: PipelineConfig | None = None,
) -> Path:
    """Estimate the initial latent of ``image_path`` and write it as NPY."""
    config = config or PipelineConfig()
    try:
        image = Image.open(image_path)
        image.load()
    except OSError as exc:
        raise ValueError(f"{image_path}: cannot decode image ({exc})") from exc
    estimate = backend.image_to_latents(image, config)
    estimate = np.asarray(estimate, dtype=np.float64)
    if estimate.shape != tuple(config.latent_shape):
        raise ValueError(
            f"backend produced latent of shape {estimate.shape}, expected {tuple(config.latent_shape)}"
        )
    out_latent = Path(out_latent)
    np.save(out_latent, estimate)
    return out_latent


def relative_latent_error(original: np.ndarray, estimate: np.ndarray) -> float:
    """Diagnostic ||estimate - original|| / ||original|| for inversion quality.

    Inversion noise is method-dependent; this is logged, not bounded.
    """
    return float(np.linalg.norm(estimate - original) / np.linalg.norm(original))


class StableDiffusionBackend:
    """Diffusers-backed rendering and DDIM inversion.

    Imports torch/diffusers lazily so the adapter stays importable (and its
    tests runnable) without the heavyweight stack installed.
    """

    def __init__(self, config: PipelineConfig | None = None, scheduler_seed: int = 0):
        self.config = config or PipelineConfig()
        self.scheduler_seed = scheduler_seed
        try:
            import torch
            from diffusers import DDIMInverseScheduler, DDIMScheduler, StableDiffusionPipeline
        except ImportError as exc:
            raise RuntimeError(
                "StableDiffusionBackend needs the optional [real] dependencies "
                "(torch, diffusers, transformers); install clwemark-adapter[real]"
            ) from exc
        self._torch = torch
        try:
            self._pipe = StableDiffusionPipeline.from_pretrained(self.config.model_id)
        except Exception as exc:  # model download/load failure is an input error here
            raise RuntimeError(f"cannot load model {self.config.model_id!r}: {exc}") from exc
        self._pipe.to(self.config.device)
        self._scheduler = DDIMScheduler.from_config(self._pipe.scheduler.config)
        self._inverse_scheduler = DDIMInverseScheduler.from_config(self._pipe.scheduler.config)

    def latents_to_image(self, latents, prompt, config):
        torch = self._torch
        self._pipe.scheduler = self._scheduler
        generator = torch.Generator(device=config.device).manual_seed(self.scheduler_seed)
        batch = torch.from_numpy(np.ascontiguousarray(latents, dtype=np.float32))[None]
        result = self._pipe(
            prompt,
            num_inference_steps=config.steps,
            guidance_scale=config.guidance_scale,
            latents=batch.to(config.device),
            generator=generator,
            output_type="pil",
        )
        return result.images[0]

    def image_to_latents(self, image, config):
        torch = self._torch
        pipe = self._pipe
        pixels = np.asarray(image.convert("RGB"), dtype=np.float32) / 127.5 - 1.0
        batch = torch.from_numpy(pixels).permute(2, 0, 1)[None].to(config.device)
        with torch.no_grad():
            posterior = pipe.vae.encode(batch).latent_dist
            z = posterior.mean * pipe.vae.config.scaling_factor
            # Unconditional DDIM inversion: walk the clean latent back to noise.
            prompt_embeds, _ = pipe.encode_prompt(
                "", config.device, num_images_per_prompt=1, do_classifier_free_guidance=False
            )
            self._inverse_scheduler.set_timesteps(config.steps, device=config.device)
            for t in self._inverse_scheduler.timesteps:
                noise_pred = pipe.unet(z, t, encoder_hidden_states=prompt_embeds).sample
                z = self._inverse_scheduler.step(noise_pred, t, z).prev_sample
        return z[0].cpu().numpy().astype(np.float64)
