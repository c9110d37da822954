"""Distinguishing attacks used to probe undetectability empirically.

The covariance attack scores a sample set by how far the eigenvalues of its
(rho-normalized) second-moment matrix stray from the isotropic value
``1/(2*pi)``; pancake structure depresses the variance along the secret
direction. The adaptive variant compares score distributions via ROC AUC
instead of the fixed theoretical threshold, which keeps some power at sample
sizes where the threshold is useless.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .clwe import ClweParams, SampleMatrix, Units, hclwe_transform, rho_to_latent, sample_unit_direction
from .stats import derive_substream

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class AttackTrialConfig:
    """Monte-Carlo grid point: sample geometry plus trial count and seed."""

    n: int
    m: int
    gamma: float
    beta: float
    trials: int
    seed: int

    def __post_init__(self):
        if self.trials < 2:
            raise ValueError(f"need at least 2 trials, got {self.trials}")
        if min(self.n, self.m) < 1 or self.gamma <= 0 or self.beta <= 0:
            raise ValueError("n, m, gamma, beta must all be positive")


@dataclass(frozen=True)
class AucResult:
    auc: float
    trials: int
    scores_positive: np.ndarray = field(repr=False)
    scores_negative: np.ndarray = field(repr=False)

    @classmethod
    def from_scores(cls, pos, neg, trials: int) -> "AucResult":
        pos = np.asarray(pos, dtype=float)
        neg = np.asarray(neg, dtype=float)
        return cls(auc=roc_auc(pos, neg), trials=trials, scores_positive=pos, scores_negative=neg)


def roc_auc(pos, neg) -> float:
    """P[random positive score > random negative score], ties counting 1/2."""
    pos = np.asarray(pos, dtype=float)
    neg = np.asarray(neg, dtype=float)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("roc_auc needs non-empty score vectors")
    ranks = rankdata(np.concatenate([pos, neg]))
    u = ranks[: pos.size].sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def covariance_score(samples: SampleMatrix) -> float:
    """Maximum eigenvalue deviation of ``A^T A / (2*pi*m)`` from ``1/(2*pi)``."""
    samples.require_units(Units.LATENT, "covariance_score")
    a = samples.data
    if not np.all(np.isfinite(a)):
        raise ValueError("covariance_score: samples contain non-finite entries")
    if samples.m < samples.n:
        warnings.warn(
            f"covariance_score with m={samples.m} < n={samples.n}: eigenvalue "
            "estimates will be noise-dominated",
            stacklevel=2,
        )
    sigma = a.T @ a / (TWO_PI * samples.m)
    mu = np.linalg.eigvalsh(sigma)
    return float(np.abs(mu - 1.0 / TWO_PI).max())


def theoretical_threshold(gamma: float, beta: float) -> float:
    """Classifier cutoff ``gamma^2 * exp(-pi*(beta^2 + gamma^2))``.

    A lower bound on the asymptotic pancake score; the actual large-m score is
    roughly twice this (see :func:`asymptotic_pancake_score`).
    """
    return float(gamma**2 * np.exp(-np.pi * (beta**2 + gamma**2)))


def asymptotic_pancake_score(gamma: float, beta: float, terms: int = 8) -> float:
    """Large-m limit of the covariance score on pancake samples.

    The variance deficit along the secret direction, from the Fourier series
    of the pancake marginal: ``2*gamma^2 * sum_j j^2 e^{-pi g'^2 j^2} / (1 + 2
    sum_j e^{-pi g'^2 j^2})`` with ``g'^2 = gamma^2 + beta^2``.
    """
    gp2 = gamma**2 + beta**2
    j = np.arange(1, terms + 1)
    e = np.exp(-np.pi * gp2 * j**2)
    return float(2.0 * gamma**2 * (j**2 * e).sum() / (1.0 + 2.0 * e.sum()))


def pancake_sample_matrix(rng: np.random.Generator, m: int, n: int, gamma: float, beta: float) -> SampleMatrix:
    """Draw m pancake samples (latent units) under a fresh random direction.

    Consumes randomness in a fixed order (direction, base, width noise) so
    runs that share a stream but differ only in gamma see paired draws.
    """
    params = ClweParams(n=n, gamma=gamma, beta=beta)
    w = sample_unit_direction(rng, n)
    base = SampleMatrix(rng.standard_normal((m, n)) / np.sqrt(TWO_PI), Units.RHO)
    return rho_to_latent(hclwe_transform(base, w, params, rng))


def _trial_scores(cfg: AttackTrialConfig) -> tuple[np.ndarray, np.ndarray]:
    pos = np.empty(cfg.trials)
    neg = np.empty(cfg.trials)
    for t in range(cfg.trials):
        rng = derive_substream(cfg.seed, t)
        pos[t] = covariance_score(pancake_sample_matrix(rng, cfg.m, cfg.n, cfg.gamma, cfg.beta))
        neg[t] = covariance_score(SampleMatrix(rng.standard_normal((cfg.m, cfg.n)), Units.LATENT))
    return pos, neg


def covariance_auc(cfg: AttackTrialConfig) -> AucResult:
    """ROC AUC of covariance scores, pancake draws versus Gaussian draws.

    Each trial runs on an independent substream keyed by (seed, trial index),
    so results are bit-reproducible regardless of execution order.
    """
    pos, neg = _trial_scores(cfg)
    return AucResult.from_scores(pos, neg, cfg.trials)


def threshold_accuracy(pos, neg, threshold: float) -> float:
    """Balanced accuracy of classifying ``score > threshold`` as pancake."""
    pos = np.asarray(pos, dtype=float)
    neg = np.asarray(neg, dtype=float)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("threshold_accuracy needs non-empty score vectors")
    return float(((pos > threshold).mean() + (neg <= threshold).mean()) / 2.0)


def threshold_classifier_accuracy(cfg: AttackTrialConfig) -> float:
    """Balanced accuracy of thresholding scores at :func:`theoretical_threshold`.

    Runs the same trial generation as :func:`covariance_auc` (identical
    substreams, so the two report on the same draws).
    """
    pos, neg = _trial_scores(cfg)
    return threshold_accuracy(pos, neg, theoretical_threshold(cfg.gamma, cfg.beta))


def averaging_attack(marked, unmarked) -> tuple[np.ndarray, list[np.ndarray]]:
    """Estimate a fixed additive watermark pattern and subtract it.

    Averages ``marked_i - unmarked_i`` over pairs built from shared base
    randomness, then returns the mean-difference tensor and the cleaned marked
    tensors. Against a pattern-free scheme the mean difference is just
    sampling noise and the cleaning step removes nothing.
    """
    marked = [np.asarray(t, dtype=float) for t in marked]
    unmarked = [np.asarray(t, dtype=float) for t in unmarked]
    if len(marked) != len(unmarked) or not marked:
        raise ValueError(
            f"need equal non-zero pair counts, got {len(marked)} marked, {len(unmarked)} unmarked"
        )
    shape = marked[0].shape
    for t in marked + unmarked:
        if t.shape != shape:
            raise ValueError(f"tensor shape {t.shape} does not match {shape}")
    mean_difference = np.mean([m - u for m, u in zip(marked, unmarked)], axis=0)
    cleaned = [m - mean_difference for m in marked]
    return mean_difference, cleaned
