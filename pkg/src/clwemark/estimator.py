"""Scikit-learn style front end for marking and detecting latent batches."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .clwe import ClweParams
from .engine import DEFAULT_THRESHOLD, SecretKey, detection_score, extract_latent, mark_latent, setup
from .stats import derive_substream
from .wavelet import BlockShape


class LatentWatermarker(BaseEstimator):
    """Embed and detect a pancake watermark in batches of latent tensors.

    ``fit`` draws the secret key, ``transform`` marks iid-N(0,1) latents, and
    ``predict`` / ``score_samples`` run detection. X is an array of shape
    (n_latents, channels, height, width).

    Parameters
    ----------
    gamma, beta : float
        Pancake frequency and width.
    block_shape : tuple of 3 ints
        Sample block extent along (channel, height, width); its volume is the
        sample dimension n.
    latent_dims : tuple of 3 ints
        Expected (channels, height, width) of every latent.
    threshold : float
        p-value cutoff for the boolean decision.
    random_state : int or numpy Generator, optional
        Key-generation and marking-noise randomness. Fitting with the same
        integer twice yields the identical key.
    """

    def __init__(
        self,
        gamma: float = 2.0,
        beta: float = 0.001,
        block_shape: tuple[int, int, int] = (2, 4, 4),
        latent_dims: tuple[int, int, int] = (4, 64, 64),
        threshold: float = DEFAULT_THRESHOLD,
        random_state=None,
    ):
        self.gamma = gamma
        self.beta = beta
        self.block_shape = block_shape
        self.latent_dims = latent_dims
        self.threshold = threshold
        self.random_state = random_state

    def _rng(self) -> np.random.Generator:
        if isinstance(self.random_state, np.random.Generator):
            return self.random_state
        if self.random_state is None:
            return np.random.default_rng()
        if isinstance(self.random_state, numbers.Integral):
            return derive_substream(int(self.random_state), 0)
        raise ValueError(f"random_state must be None, an int, or a Generator, got {self.random_state!r}")

    def fit(self, X=None, y=None):
        """Generate the secret key. ``X`` is accepted for pipeline compatibility."""
        bc, bh, bw = self.block_shape
        block = BlockShape(bc, bh, bw)
        params = ClweParams(n=block.n, gamma=self.gamma, beta=self.beta)
        self._mark_rng = self._rng()
        self.key_ = setup(self._mark_rng, params, block, tuple(self.latent_dims), self.threshold)
        return self

    def _check_fitted(self) -> SecretKey:
        if not hasattr(self, "key_"):
            raise NotFittedError("LatentWatermarker is not fitted; call fit() or set_key() first")
        return self.key_

    def set_key(self, key: SecretKey):
        """Adopt an existing key (e.g. loaded from a key file)."""
        self.key_ = key
        self._mark_rng = self._rng()
        return self

    def _as_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 4:
            raise ValueError(
                f"X must have shape (n_latents, channels, height, width), got {X.shape}"
            )
        return X

    def transform(self, X) -> np.ndarray:
        """Mark each latent in the batch."""
        key = self._check_fitted()
        X = self._as_batch(X)
        return np.stack([mark_latent(x, key, self._mark_rng) for x in X])

    def fit_transform(self, X, y=None) -> np.ndarray:
        return self.fit(X).transform(X)

    def score_samples(self, X) -> np.ndarray:
        """Detection evidence per latent: -log p of the Rayleigh test."""
        key = self._check_fitted()
        X = self._as_batch(X)
        return np.array([detection_score(x, key) for x in X])

    def predict(self, X) -> np.ndarray:
        """Boolean watermark decision per latent at the configured threshold."""
        key = self._check_fitted()
        X = self._as_batch(X)
        return np.array([extract_latent(x, key, self.threshold).decision for x in X])
