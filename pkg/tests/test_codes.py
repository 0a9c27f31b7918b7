"""Spreading-sequence generation and the index <-> frequency map."""

import numpy as np
import pytest

from sinoma import (CodebookConfig, InvalidInputError, code_matrix,
                    frequency_to_index, spreading_sequence, user_frequency)


def test_user_frequency_values():
    assert user_frequency(0, 128) == 0.0
    assert user_frequency(64, 128) == np.pi
    assert abs(user_frequency(5, 128) - 0.24543692606170259) < 1e-15


def test_user_frequency_rejects_out_of_range():
    with pytest.raises(InvalidInputError):
        user_frequency(128, 128)
    with pytest.raises(InvalidInputError):
        user_frequency(-1, 128)


def test_frequency_to_index_examples():
    assert frequency_to_index(0.2454369, 128) == 5
    assert frequency_to_index(2 * np.pi - 1e-9, 128) == 0
    assert frequency_to_index(np.pi, 128) == 64
    assert frequency_to_index(-0.05, 128) == 127


def test_round_trip_all_indices():
    for n_users in (7, 128):
        for n in range(n_users):
            assert frequency_to_index(user_frequency(n, n_users), n_users) == n


def test_dc_and_nyquist_sequences():
    cfg = CodebookConfig(N=16, M=8, gamma=0.5)
    assert np.allclose(spreading_sequence(0, cfg), 0.5)
    alt = spreading_sequence(8, cfg)  # n = N/2: alternating +/- gamma
    assert np.allclose(alt, 0.5 * np.array([1, -1] * 4))


def test_quarter_rate_sequence():
    # omega = pi/2 walks the four QPSK points
    cfg = CodebookConfig(N=8, M=4, gamma=1.0)
    assert np.allclose(spreading_sequence(2, cfg), [1, 1j, -1, -1j])


def test_constant_modulus_and_shift_structure():
    cfg = CodebookConfig(N=128, M=64, gamma=0.37)
    for n in (0, 1, 17, 64, 127):
        seq = spreading_sequence(n, cfg)
        assert np.allclose(np.abs(seq), cfg.gamma, rtol=1e-15)
        omega = user_frequency(n, cfg.N)
        assert np.allclose(seq[1:], seq[:-1] * np.exp(1j * omega), atol=1e-12)


def test_code_matrix_columns_match_sequences():
    cfg = CodebookConfig(N=128, M=64, gamma=1.2)
    mat = code_matrix([3, 40, 90], cfg)
    assert mat.shape == (64, 3)
    for col, n in enumerate((3, 40, 90)):
        assert np.allclose(mat[:, col], spreading_sequence(n, cfg))


def test_code_matrix_orthogonal_pair_full_period():
    # indices 0 and N/2 complete whole periods over an even M
    cfg = CodebookConfig(N=16, M=8, gamma=1.0)
    mat = code_matrix([0, 8], cfg)
    assert abs(np.vdot(mat[:, 0], mat[:, 1])) < 1e-12


def test_code_matrix_gram_matches_geometric_series():
    cfg = CodebookConfig(N=128, M=64, gamma=0.9)
    mat = code_matrix([0, 1], cfg)
    inner = np.vdot(mat[:, 0], mat[:, 1])
    expected = cfg.gamma**2 * np.sum(np.exp(2j * np.pi * np.arange(64) / 128))
    assert abs(inner - expected) < 1e-10


def test_code_matrix_rejects_duplicates():
    cfg = CodebookConfig(N=16, M=8, gamma=1.0)
    with pytest.raises(InvalidInputError):
        code_matrix([1, 1], cfg)


def test_codebook_config_invariants():
    with pytest.raises(InvalidInputError):
        CodebookConfig(N=8, M=8, gamma=1.0)    # needs M < N
    with pytest.raises(InvalidInputError):
        CodebookConfig(N=8, M=4, gamma=0.0)    # needs gamma > 0
