"""Undetectable latent-noise watermarking built on Gaussian-pancake structure.

The embedded signal is a secret-direction pancake pattern planted in the Haar
wavelet coefficients of a diffusion model's initial latent noise; without the
secret direction the marked latents remain (computationally) indistinguishable
from iid standard normals, while the key holder detects the pattern through a
circular-statistics uniformity test.
"""

from .attacks import (
    AttackTrialConfig,
    AucResult,
    averaging_attack,
    covariance_auc,
    covariance_score,
    pancake_sample_matrix,
    roc_auc,
    theoretical_threshold,
    threshold_accuracy,
    threshold_classifier_accuracy,
)
from .clwe import (
    ClweParams,
    SampleMatrix,
    Units,
    hclwe_density_unnormalized,
    hclwe_transform,
    latent_to_rho,
    rho,
    rho_to_latent,
    sample_unit_direction,
    z_scores,
)
from .engine import (
    DetectionReport,
    RayleighResult,
    SecretKey,
    detection_score,
    extract_latent,
    latent_phases,
    mark_latent,
    rayleigh_test,
    setup,
)
from .estimator import LatentWatermarker
from .io import read_key, read_tensor, write_key, write_tensor
from .stats import RoseHistogram, derive_substream, ks_test, rose_histogram
from .wavelet import BlockShape, blocks_of, dwt2, idwt2, unblock

__version__ = "0.1.0"

__all__ = [
    "AttackTrialConfig",
    "AucResult",
    "BlockShape",
    "ClweParams",
    "DetectionReport",
    "LatentWatermarker",
    "RayleighResult",
    "RoseHistogram",
    "SampleMatrix",
    "SecretKey",
    "Units",
    "averaging_attack",
    "blocks_of",
    "covariance_auc",
    "covariance_score",
    "derive_substream",
    "detection_score",
    "dwt2",
    "extract_latent",
    "hclwe_density_unnormalized",
    "hclwe_transform",
    "idwt2",
    "ks_test",
    "latent_phases",
    "latent_to_rho",
    "mark_latent",
    "pancake_sample_matrix",
    "rayleigh_test",
    "read_key",
    "read_tensor",
    "rho",
    "rho_to_latent",
    "roc_auc",
    "rose_histogram",
    "sample_unit_direction",
    "setup",
    "theoretical_threshold",
    "threshold_accuracy",
    "threshold_classifier_accuracy",
    "unblock",
    "write_key",
    "write_tensor",
    "z_scores",
]
