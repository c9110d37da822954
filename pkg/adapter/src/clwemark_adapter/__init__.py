"""Optional diffusion-model bridge for the clwemark watermarking tool.

Moves latent tensors between NPY files and a latent diffusion backend
(render and invert), applies benign image perturbations, and drives
end-to-end recovery evaluations through the primary CLI. No code here links
against the primary package; the contract is files plus subprocess.
"""

from .config import PipelineConfig
from .eval import read_prompts, run_eval
from .perturb import KINDS, perturb
from .pipeline import StableDiffusionBackend, invert, relative_latent_error, render

__version__ = "0.1.0"

__all__ = [
    "KINDS",
    "PipelineConfig",
    "StableDiffusionBackend",
    "invert",
    "perturb",
    "read_prompts",
    "relative_latent_error",
    "render",
    "run_eval",
]
