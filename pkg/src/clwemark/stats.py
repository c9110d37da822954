"""Shared statistical machinery: KS testing, circular histograms, seeded streams.

Everything here is deterministic given its inputs; randomness only enters
through explicitly passed generators created by :func:`derive_substream`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_substream(seed: int, index: int) -> np.random.Generator:
    """Return an independent random stream for ``(seed, index)``.

    Uses the Philox counter-based generator keyed on the pair, so streams for
    distinct indices are statistically independent, reproducible across
    processes and platforms, and safe to hand to parallel workers.
    """
    key = np.array([seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def kolmogorov_pvalue(d: float, n: int, terms: int = 20) -> float:
    """Asymptotic p-value of a one-sample KS statistic ``d`` at sample size ``n``.

    Evaluates the Kolmogorov distribution tail with ``terms`` terms at
    lambda = sqrt(n)*d: the alternating series 2*sum (-1)^{j-1} exp(-2 j^2
    lambda^2) for lambda >= 1, and its theta-transformed dual below that
    (where the alternating form converges too slowly to truncate).
    """
    lam = np.sqrt(n) * d
    if lam <= 0:
        return 1.0
    j = np.arange(1, terms + 1)
    if lam >= 1.0:
        p = 2.0 * np.sum((-1.0) ** (j - 1) * np.exp(-2.0 * j**2 * lam**2))
    else:
        cdf = (np.sqrt(2.0 * np.pi) / lam) * np.sum(
            np.exp(-((2 * j - 1) ** 2) * np.pi**2 / (8.0 * lam**2))
        )
        p = 1.0 - cdf
    return float(min(1.0, max(0.0, p)))


def ks_test(samples, cdf) -> tuple[float, float]:
    """One-sample Kolmogorov-Smirnov test against a callable CDF.

    Parameters
    ----------
    samples : array_like
        At least 8 observations.
    cdf : callable
        Vectorized monotone CDF mapping reals into [0, 1].

    Returns
    -------
    (D, p) : tuple of float
        The statistic ``sup |F_emp - cdf|`` and its asymptotic p-value.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 8:
        raise ValueError(f"ks_test needs at least 8 samples, got {n}")
    f = np.asarray(cdf(x), dtype=float)
    if f.min() < -1e-12 or f.max() > 1 + 1e-12:
        raise ValueError("cdf values must lie in [0, 1]")
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    d = float(max(d_plus, d_minus))
    return d, kolmogorov_pvalue(d, n)


@dataclass(frozen=True)
class RoseHistogram:
    """Counts of circular scores binned over [0, 1)."""

    bin_count: int
    counts: np.ndarray
    total: int

    @property
    def bin_edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.bin_count + 1)


def rose_histogram(z, bins: int) -> RoseHistogram:
    """Bin circular scores ``z`` in [0, 1) into ``bins`` equal sectors.

    A score of 1.0 corresponds to a full turn, so bin 0 collects the scores
    nearest zero phase.
    """
    if bins < 4:
        raise ValueError(f"need at least 4 bins, got {bins}")
    z = np.asarray(z, dtype=float)
    if z.size and (z.min() < 0.0 or z.max() >= 1.0):
        raise ValueError("scores must lie in [0, 1)")
    counts = np.bincount((z * bins).astype(np.intp), minlength=bins)
    return RoseHistogram(bin_count=bins, counts=counts, total=int(z.size))
