import numpy as np
import pytest
from _oracles import pancake_marginal_cdf
from scipy.special import ndtr

from clwemark import (
    ClweParams,
    SampleMatrix,
    Units,
    hclwe_density_unnormalized,
    hclwe_transform,
    ks_test,
    latent_to_rho,
    rho,
    rho_to_latent,
    sample_unit_direction,
    z_scores,
)
from clwemark.stats import derive_substream

SQRT_2PI = np.sqrt(2 * np.pi)


class ZeroNoise:
    """Generator stub that yields zero width-noise, isolating the pancake snap."""

    def standard_normal(self, size=None):
        return np.zeros(size) if size is not None else 0.0


def rho_samples(rng, m, n):
    return SampleMatrix(rng.standard_normal((m, n)) / SQRT_2PI, Units.RHO)


class TestRho:
    def test_zero_vector_is_one(self):
        assert rho(np.zeros(5), 3.7) == 1.0

    def test_unit_point(self):
        assert rho([1.0], 1.0) == pytest.approx(np.exp(-np.pi), rel=1e-15)

    def test_scaled_point(self):
        assert rho([2.0, 0.0], 2.0) == pytest.approx(np.exp(-np.pi), rel=1e-15)

    def test_range(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            v = rho(rng.standard_normal(4), rng.uniform(0.1, 5))
            assert 0.0 < v <= 1.0

    def test_nonpositive_width_rejected(self):
        with pytest.raises(ValueError):
            rho([1.0], 0.0)

    def test_nonfinite_input_rejected(self):
        with pytest.raises(ValueError):
            rho([np.nan, 0.0], 1.0)


class TestClweParams:
    def test_gamma_prime_recomputed(self):
        p = ClweParams(n=32, gamma=2.0, beta=0.001)
        assert p.gamma_prime == pytest.approx(np.sqrt(4.000001), rel=1e-15)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n=1, gamma=2.0, beta=0.1),
            dict(n=32, gamma=0.0, beta=0.1),
            dict(n=32, gamma=2.0, beta=0.0),
            dict(n=32, gamma=2.0, beta=-0.5),
            dict(n=32, gamma=0.5, beta=0.5),  # beta >= gamma
        ],
    )
    def test_invalid_params_rejected(self, kwargs):
        with pytest.raises(ValueError):
            ClweParams(**kwargs)


class TestUnitDirection:
    def test_unit_norm(self):
        w = sample_unit_direction(derive_substream(11, 0), 32)
        assert abs(np.linalg.norm(w) - 1.0) <= 1e-12

    def test_deterministic(self):
        w1 = sample_unit_direction(derive_substream(5, 3), 16)
        w2 = sample_unit_direction(derive_substream(5, 3), 16)
        np.testing.assert_array_equal(w1, w2)

    def test_dimension_floor(self):
        with pytest.raises(ValueError):
            sample_unit_direction(derive_substream(0, 0), 1)

    def test_sphere_symmetry(self):
        # Monte-Carlo check: coordinate means vanish under uniformity.
        rng = derive_substream(123, 0)
        draws = np.array([sample_unit_direction(rng, 3) for _ in range(10_000)])
        assert np.all(np.abs(draws.mean(axis=0)) < 0.05)


class TestDensity:
    def test_origin_dominated_by_central_slice(self):
        params = ClweParams(n=2, gamma=2.0, beta=0.001)
        val = hclwe_density_unnormalized(np.zeros(2), np.array([1.0, 0.0]), params)
        assert val == pytest.approx(1.0, abs=1e-12)

    def test_midgap_vanishes(self):
        params = ClweParams(n=2, gamma=2.0, beta=0.001)
        w = np.array([1.0, 0.0])
        y = np.array([0.25, 0.3])  # gamma*<w,y> = 0.5, exactly between slices
        bound = rho(y, 1.0) * 2 * np.exp(-np.pi * (0.5 / 0.001) ** 2)
        assert hclwe_density_unnormalized(y, w, params) <= bound + 1e-300

    def test_marginal_peaks_at_slice_centers(self):
        # Numerically normalized 1-D marginal: peaks at multiples of
        # gamma/gamma_prime^2 (approximately 1/gamma).
        params = ClweParams(n=2, gamma=2.0, beta=0.1)
        w = np.array([1.0, 0.0])
        ts = np.linspace(0.3, 0.7, 2001)
        f = [hclwe_density_unnormalized(np.array([t, 0.0]), w, params) for t in ts]
        peak = ts[int(np.argmax(f))]
        expected = params.gamma / params.gamma_prime**2
        assert peak == pytest.approx(expected, abs=2e-3)

    def test_nonfinite_rejected(self):
        params = ClweParams(n=2, gamma=2.0, beta=0.1)
        with pytest.raises(ValueError):
            hclwe_density_unnormalized(np.array([np.inf, 0.0]), np.array([1.0, 0.0]), params)


class TestTransform:
    def test_hand_snap_to_half(self):
        # Width -> 0 limit with the noise draw forced to zero: the projection
        # 0.6 snaps to the slice at 0.5.
        params = ClweParams(n=2, gamma=2.0, beta=1e-8)
        samples = SampleMatrix(np.array([[0.6, 1.3]]), Units.RHO)
        out = hclwe_transform(samples, np.array([1.0, 0.0]), params, ZeroNoise())
        np.testing.assert_allclose(out.data, [[0.5, 1.3]], rtol=0, atol=1e-12)

    def test_hand_snap_to_zero(self):
        params = ClweParams(n=2, gamma=2.0, beta=1e-8)
        samples = SampleMatrix(np.array([[0.24, -0.7]]), Units.RHO)
        out = hclwe_transform(samples, np.array([1.0, 0.0]), params, ZeroNoise())
        np.testing.assert_allclose(out.data, [[0.0, -0.7]], rtol=0, atol=1e-12)

    def test_orthogonal_component_untouched(self):
        rng = derive_substream(9, 0)
        params = ClweParams(n=8, gamma=2.0, beta=0.01)
        w = sample_unit_direction(rng, 8)
        samples = rho_samples(rng, 200, 8)
        out = hclwe_transform(samples, w, params, rng)
        orth_in = samples.data - np.outer(samples.data @ w, w)
        orth_out = out.data - np.outer(out.data @ w, w)
        np.testing.assert_allclose(orth_out, orth_in, atol=1e-13)

    def test_axis_coordinates_bitwise_unchanged(self):
        # With w on the first axis, all other coordinates must be identical bits.
        rng = derive_substream(10, 0)
        params = ClweParams(n=4, gamma=2.0, beta=0.01)
        w = np.array([1.0, 0.0, 0.0, 0.0])
        samples = rho_samples(rng, 100, 4)
        out = hclwe_transform(samples, w, params, rng)
        np.testing.assert_array_equal(out.data[:, 1:], samples.data[:, 1:])

    def test_dimension_mismatch(self):
        params = ClweParams(n=8, gamma=2.0, beta=0.01)
        samples = rho_samples(derive_substream(0, 0), 10, 4)
        with pytest.raises(ValueError):
            hclwe_transform(samples, sample_unit_direction(derive_substream(0, 1), 8), params, ZeroNoise())

    def test_units_enforced(self):
        params = ClweParams(n=4, gamma=2.0, beta=0.01)
        latent = SampleMatrix(np.zeros((5, 4)), Units.LATENT)
        with pytest.raises(ValueError, match="rho-unit"):
            hclwe_transform(latent, np.array([1.0, 0, 0, 0]), params, ZeroNoise())

    def test_deterministic(self):
        params = ClweParams(n=8, gamma=2.0, beta=0.001)
        w = sample_unit_direction(derive_substream(2, 0), 8)
        samples = rho_samples(derive_substream(2, 1), 500, 8)
        a = hclwe_transform(samples, w, params, derive_substream(2, 2))
        b = hclwe_transform(samples, w, params, derive_substream(2, 2))
        np.testing.assert_array_equal(a.data, b.data)

    def test_projection_matches_density(self):
        # Light version of the sampler/density agreement gate (full 50k run
        # with both parameter sets lives in the acceptance suite).
        gamma, beta = 2.0, 0.1
        params = ClweParams(n=4, gamma=gamma, beta=beta)
        rng = derive_substream(31, 0)
        w = sample_unit_direction(rng, 4)
        out = hclwe_transform(rho_samples(rng, 20_000, 4), w, params, rng)
        _, p = ks_test(out.data @ w, pancake_marginal_cdf(gamma, beta))
        assert p > 0.001

    def test_orthogonal_projection_stays_gaussian(self):
        params = ClweParams(n=4, gamma=2.0, beta=0.1)
        rng = derive_substream(32, 0)
        w = sample_unit_direction(rng, 4)
        v = np.array([w[1], -w[0], w[3], -w[2]])  # orthogonal to w by construction
        v /= np.linalg.norm(v)
        assert abs(v @ w) < 1e-12
        out = hclwe_transform(rho_samples(rng, 20_000, 4), w, params, rng)
        _, p = ks_test(out.data @ v, lambda x: ndtr(np.asarray(x) * SQRT_2PI))
        assert p > 0.001

    def test_phase_concentration(self):
        params = ClweParams(n=32, gamma=2.0, beta=0.001)
        rng = derive_substream(33, 0)
        w = sample_unit_direction(rng, 32)
        out = hclwe_transform(rho_samples(rng, 20_000, 32), w, params, rng)
        z = z_scores(out, w, params.gamma)
        band = 3 * params.beta / params.gamma_prime
        inside = (z <= band) | (z >= 1 - band)
        assert inside.mean() >= 0.99


class TestZScores:
    def test_on_slice(self):
        samples = SampleMatrix(np.array([[0.5, 1.3]]), Units.RHO)
        assert z_scores(samples, np.array([1.0, 0.0]), 2.0)[0] == pytest.approx(0.0, abs=1e-15)

    def test_fractional(self):
        samples = SampleMatrix(np.array([[0.3, 9.9]]), Units.RHO)
        assert z_scores(samples, np.array([1.0, 0.0]), 2.0)[0] == pytest.approx(0.6, rel=1e-12)

    def test_negative_wraps(self):
        samples = SampleMatrix(np.array([[-0.2, 0.0]]), Units.RHO)
        assert z_scores(samples, np.array([1.0, 0.0]), 2.0)[0] == pytest.approx(0.6, rel=1e-12)

    def test_units_enforced(self):
        samples = SampleMatrix(np.zeros((2, 2)), Units.LATENT)
        with pytest.raises(ValueError, match="rho-unit"):
            z_scores(samples, np.array([1.0, 0.0]), 2.0)


class TestUnitConversion:
    def test_scaling_constant(self):
        sm = SampleMatrix(np.array([[1.0]] * 2), Units.LATENT)
        assert latent_to_rho(sm).data[0, 0] == pytest.approx(0.3989422804014327, rel=1e-12)

    def test_round_trip(self):
        rng = derive_substream(4, 0)
        sm = SampleMatrix(rng.standard_normal((50, 7)), Units.LATENT)
        back = rho_to_latent(latent_to_rho(sm))
        np.testing.assert_allclose(back.data, sm.data, rtol=1e-15)

    def test_variance_maps_to_rho_convention(self):
        rng = derive_substream(4, 1)
        m = 200_000
        sm = SampleMatrix(rng.standard_normal((m, 1)), Units.LATENT)
        var = latent_to_rho(sm).data.var()
        target = 1 / (2 * np.pi)
        se = target * np.sqrt(2.0 / (m - 1))
        assert abs(var - target) < 3 * se

    def test_direction_enforced(self):
        sm = SampleMatrix(np.zeros((2, 2)), Units.RHO)
        with pytest.raises(ValueError, match="latent-unit"):
            latent_to_rho(sm)
