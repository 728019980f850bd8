import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lchpc.channel import (
    PathComponent, channel_from_paths, generate_channel, measure, steering_matrix,
    steering_vector,
)
from lchpc.errors import ContractViolation


class TestSteeringVector:
    def test_single_antenna(self):
        np.testing.assert_allclose(steering_vector(1, 0.731), [1.0])

    def test_broadside(self):
        np.testing.assert_allclose(steering_vector(2, 0.0), np.array([1, 1]) / np.sqrt(2))

    def test_periodic(self):
        np.testing.assert_allclose(steering_vector(8, 0.37), steering_vector(8, 2.37), atol=1e-15)

    def test_entries(self):
        v = steering_vector(5, 0.3)
        np.testing.assert_allclose(v, np.exp(1j * np.pi * 0.3 * np.arange(5)) / np.sqrt(5))

    def test_zero_antennas(self):
        with pytest.raises(ContractViolation):
            steering_vector(0, 0.1)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 128), st.floats(-1, 1))
    def test_unit_norm_and_period(self, n, omega):
        v = steering_vector(n, omega)
        assert abs(np.linalg.norm(v) - 1) < 1e-14
        np.testing.assert_allclose(v, steering_vector(n, omega + 2), atol=1e-13)


def rebuild(h):
    out = np.zeros((h.n_ms_antennas, h.n_bs_antennas), dtype=complex)
    for p in h.paths:
        out += p.gain * np.outer(steering_vector(h.n_ms_antennas, p.aoa_cos),
                                 steering_vector(h.n_bs_antennas, p.aod_cos).conj())
    return np.sqrt(h.n_bs_antennas * h.n_ms_antennas) * out


class TestGenerateChannel:
    def test_self_consistent(self, rng):
        for _ in range(20):
            h = generate_channel(16, 8, 3, rng)
            np.testing.assert_allclose(h.matrix, rebuild(h), atol=1e-12)
            assert h.matrix.shape == (8, 16)
            for p in h.paths:
                assert p.aod_cos == pytest.approx(np.cos(p.aod_phys), abs=1e-15)
                assert p.aoa_cos == pytest.approx(np.cos(p.aoa_phys), abs=1e-15)
                assert 0 <= p.aod_phys < 2 * np.pi and 0 <= p.aoa_phys < 2 * np.pi

    def test_mean_energy(self, rng):
        # E||H||_F^2 = N_A M_A * sum_l E|gain_l|^2 = N_A M_A
        energy = [np.linalg.norm(generate_channel(8, 8, 3, rng).matrix) ** 2
                  for _ in range(10_000)]
        assert np.mean(energy) == pytest.approx(64.0, rel=0.05)

    def test_single_path_rank_one(self):
        h = channel_from_paths([PathComponent.from_cosines(1.0, 0.2, -0.4)], 8, 8)
        s = np.linalg.svd(h.matrix, compute_uv=False)
        assert s[1] < 1e-10
        assert s[0] == pytest.approx(8.0)

    def test_seeded_determinism(self):
        a = generate_channel(8, 8, 4, np.random.default_rng(5))
        b = generate_channel(8, 8, 4, np.random.default_rng(5))
        assert a.matrix.tobytes() == b.matrix.tobytes()
        assert a.paths == b.paths

    def test_needs_a_path(self, rng):
        with pytest.raises(ContractViolation):
            generate_channel(8, 8, 0, rng)

    def test_immutable(self, rng):
        h = generate_channel(4, 4, 1, rng)
        with pytest.raises(ValueError):
            h.matrix[0, 0] = 1


class TestMeasure:
    def test_zero_power(self, rng):
        h = generate_channel(8, 8, 2, rng)
        assert measure(h, steering_vector(8, 0.1), steering_vector(8, 0.2), 0.0,
                       noiseless=True) == 0

    def test_matched_single_path(self):
        h = channel_from_paths([PathComponent.from_cosines(1.0, 0.3, -0.55)], 16, 8)
        y = measure(h, steering_vector(8, -0.55), steering_vector(16, 0.3), 10.0, noiseless=True)
        assert y == pytest.approx(np.sqrt(10.0 * 16 * 8), abs=1e-10)

    def test_noise_variance(self, rng):
        h = generate_channel(8, 8, 2, rng)
        w = steering_vector(8, 0.4)
        ys = np.array([measure(h, w, w, 0.0, rng) for _ in range(10_000)])
        assert np.var(ys) == pytest.approx(1.0, rel=0.05)

    def test_linear_in_channel(self, rng):
        h1 = generate_channel(8, 4, 2, rng)
        h2 = generate_channel(8, 4, 3, rng)
        both = channel_from_paths(h1.paths + h2.paths, 8, 4)
        w_ms, w_bs = steering_vector(4, 0.1), steering_vector(8, -0.7)
        total = measure(both, w_ms, w_bs, 3.0, noiseless=True)
        parts = measure(h1, w_ms, w_bs, 3.0, noiseless=True) + measure(h2, w_ms, w_bs, 3.0,
                                                                         noiseless=True)
        assert abs(total - parts) < 1e-12

    def test_dimension_mismatch(self, rng):
        h = generate_channel(8, 4, 1, rng)
        with pytest.raises(ContractViolation):
            measure(h, steering_vector(8, 0), steering_vector(8, 0), 1.0, noiseless=True)


def test_steering_matrix_columns():
    m = steering_matrix(6, [0.1, -0.3])
    np.testing.assert_allclose(m[:, 1], steering_vector(6, -0.3))
