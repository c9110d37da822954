"""Pipeline configuration for rendering and inversion."""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class PipelineConfig:
    """Model and sampling settings; defaults match the reference setup
    (Stable Diffusion 2.1 base, 512x512 in 50 steps, DDIM inversion).

    The latent geometry implied by the model must match the watermark key:
    512x512 RGB renders from a 4x64x64 latent.
    """

    model_id: str = "stabilityai/stable-diffusion-2-1-base"
    steps: int = 50
    image_size: tuple[int, int] = (512, 512)
    guidance_scale: float = 7.5
    inversion_method: str = "ddim-inverse"
    latent_shape: tuple[int, int, int] = (4, 64, 64)
    device: str = "cpu"

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if len(self.latent_shape) != 3:
            raise ValueError(f"latent_shape must be 3-D, got {self.latent_shape}")
        if len(self.image_size) != 2:
            raise ValueError(f"image_size must be (width, height), got {self.image_size}")

    def as_dict(self) -> dict:
        return asdict(self)
