"""Hankel snapshot construction and forward-backward extension."""

import numpy as np
import pytest

from sinoma import (InvalidInputError, SystemConfig, backward_extend,
                    build_data_matrix, default_snapshot_len, frame_snapshots,
                    generate_opportunity)


class TestFrameSnapshots:
    def test_hand_checked_hankel(self):
        y = np.array([1, 2, 3, 4], dtype=complex)
        block = frame_snapshots(y, 2)
        assert np.array_equal(block, np.array([[1, 2, 3], [2, 3, 4]]))

    def test_full_window_boundary(self):
        y = np.arange(5, dtype=complex)
        block = frame_snapshots(y, 5)
        assert block.shape == (5, 1)
        assert np.array_equal(block[:, 0], y)

    def test_single_tone_columns_align_with_steering(self):
        omega, m_len, l = 0.7, 16, 6
        y = np.exp(1j * omega * np.arange(m_len))
        block = frame_snapshots(y, l)
        theta = np.exp(1j * omega * np.arange(l))
        for m in range(m_len - l + 1):
            assert np.allclose(block[:, m], np.exp(1j * omega * m) * theta)

    def test_rejects_bad_length(self):
        with pytest.raises(InvalidInputError):
            frame_snapshots(np.zeros(4, dtype=complex), 1)
        with pytest.raises(InvalidInputError):
            frame_snapshots(np.zeros(4, dtype=complex), 5)


class TestBackwardExtend:
    def test_flip_conjugate_by_hand(self):
        col = np.array([[1.0], [1j]])
        ext = backward_extend(col)
        assert np.array_equal(ext[:, 1], np.array([-1j, 1.0]))

    def test_real_palindrome_fixed_point(self):
        col = np.array([[1.0], [2.0], [1.0]])
        ext = backward_extend(col)
        assert np.array_equal(ext[:, 0], ext[:, 1])

    def test_single_tone_backward_direction(self):
        # K conj(theta) = theta * exp(-i omega (l-1)): the backward
        # column points along the same steering vector
        omega, l = 1.1, 8
        theta = np.exp(1j * omega * np.arange(l))
        ext = backward_extend(theta[:, None])
        expected = theta * np.exp(-1j * omega * (l - 1))
        assert np.allclose(ext[:, 1], expected, atol=1e-12)


class TestBuildDataMatrix:
    def test_column_count(self):
        cfg = SystemConfig(seed=1)
        _, signal = generate_opportunity(cfg)
        snap = build_data_matrix(signal, 50)
        assert snap.s_bar.shape == (50, 270)
        assert snap.num_columns == 270

    def test_single_frame_max_window_boundary(self):
        # J = 1 at the largest legal window: one forward and one
        # backward column per shift
        y = np.exp(1j * np.arange(6, dtype=float))[:, None]
        snap = build_data_matrix(y, 5)
        assert snap.s_bar.shape == (5, 4)

    def test_noise_free_rank_three_tones(self):
        cfg = SystemConfig(noiseless=True, num_active=3, seed=21)
        _, signal = generate_opportunity(cfg)
        snap = build_data_matrix(signal, 20)
        s = np.linalg.svd(snap.s_bar, compute_uv=False)
        assert np.sum(s > 1e-10 * s[0]) == 3

    def test_conjugate_symmetry_within_frame_blocks(self):
        cfg = SystemConfig(seed=3)
        _, signal = generate_opportunity(cfg)
        l = 50
        snap = build_data_matrix(signal, l)
        cols = signal.y.shape[0] - l + 1
        for j in range(signal.y.shape[1]):
            block = snap.s_bar[:, 2 * cols * j: 2 * cols * (j + 1)]
            forward, backward = block[:, :cols], block[:, cols:]
            assert np.array_equal(backward, np.conj(forward)[::-1, :])

    def test_column_energy_doubles_forward_energy(self):
        cfg = SystemConfig(seed=4)
        _, signal = generate_opportunity(cfg)
        l = 50
        snap = build_data_matrix(signal, l)
        forward = sum(
            np.sum(np.abs(frame_snapshots(signal.y[:, j], l)) ** 2)
            for j in range(signal.y.shape[1])
        )
        assert np.isclose(np.sum(np.abs(snap.s_bar) ** 2), 2 * forward, rtol=0, atol=0)

    def test_rejects_l_equal_m(self):
        with pytest.raises(InvalidInputError):
            build_data_matrix(np.zeros((8, 2), dtype=complex), 8)


class TestDefaultSnapshotLen:
    def test_table_entries(self):
        assert [default_snapshot_len(m) for m in (32, 48, 64, 80, 96, 112)] == \
            [20, 40, 50, 60, 78, 90]

    def test_off_table_fit_and_clamp(self):
        assert default_snapshot_len(40) == 31          # round(0.78 * 40)
        assert default_snapshot_len(3) == 2            # clamped to M - 1
        for m in (3, 5, 17, 40, 56, 100, 200):
            l = default_snapshot_len(m)
            assert m // 2 < l <= m - 1
