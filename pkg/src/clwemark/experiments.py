"""Experiment drivers shared by the CLI and the verification suite."""

from __future__ import annotations

import numpy as np

from .attacks import AucResult
from .clwe import SQRT_2PI, ClweParams, SampleMatrix, Units, hclwe_transform, sample_unit_direction, z_scores
from .engine import SecretKey, detection_score, mark_latent
from .stats import derive_substream


def random_latent(rng: np.random.Generator, dims: tuple[int, int, int]) -> np.ndarray:
    """An iid standard-normal latent tensor."""
    return rng.standard_normal(tuple(dims))


def marked_pair(key: SecretKey, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """(base, marked) latents sharing the same base randomness."""
    base = random_latent(rng, key.latent_dims)
    return base, mark_latent(base, key, rng)


def detection_auc_at_noise(
    key: SecretKey,
    noise_sigma: float,
    trials: int,
    seed: int,
) -> AucResult:
    """Detection AUC of marked vs unmarked latents under additive latent noise.

    Noise is iid N(0, noise_sigma^2) per latent entry, applied to both classes
    before extraction; scores are the Rayleigh -log(p) evidence.
    """
    if noise_sigma < 0:
        raise ValueError(f"noise sigma must be >= 0, got {noise_sigma}")
    pos = np.empty(trials)
    neg = np.empty(trials)
    for t in range(trials):
        rng = derive_substream(seed, t)
        _, marked = marked_pair(key, rng)
        unmarked = random_latent(rng, key.latent_dims)
        if noise_sigma > 0:
            marked = marked + noise_sigma * rng.standard_normal(marked.shape)
            unmarked = unmarked + noise_sigma * rng.standard_normal(unmarked.shape)
        pos[t] = detection_score(marked, key)
        neg[t] = detection_score(unmarked, key)
    return AucResult.from_scores(pos, neg, trials)


def simulate_phase_sets(
    m: int,
    params: ClweParams,
    noise_width: float,
    rng: np.random.Generator,
) -> dict[str, np.ndarray]:
    """Pancake phases for three reference cases: Gaussian, pancake, noisy pancake.

    The noisy case perturbs the recovered phases with circular Gaussian noise
    of rho-width ``noise_width`` (standard deviation ``noise_width /
    sqrt(2*pi)`` of a turn), modelling dispersion accumulated between marking
    and recovery.
    """
    w = sample_unit_direction(rng, params.n)
    base = SampleMatrix(rng.standard_normal((m, params.n)) / SQRT_2PI, Units.RHO)
    pancake = hclwe_transform(base, w, params, rng)

    gaussian_z = z_scores(SampleMatrix(rng.standard_normal((m, params.n)) / SQRT_2PI, Units.RHO), w, params.gamma)
    pancake_z = z_scores(pancake, w, params.gamma)
    noisy_z = np.mod(pancake_z + rng.standard_normal(m) * (noise_width / SQRT_2PI), 1.0)
    return {"normal": gaussian_z, "pancake": pancake_z, "pancake_noisy": noisy_z}
