import numpy as np
import pytest

from open_schwinger.environment import (EnvCorrelator, correlator_matrix,
                                        correlator_value, fourier_correlator)


def test_delta_values():
    env = EnvCorrelator("delta", D0=2.5)
    assert correlator_value(env, 0) == 2.5
    assert correlator_value(env, 1) == 0.0
    assert correlator_value(env, -3) == 0.0


def test_gaussian_values():
    env = EnvCorrelator("gaussian", D0=1.0, sigma=1.0)
    assert correlator_value(env, 0) == 1.0
    assert correlator_value(env, 1) == pytest.approx(np.exp(-0.5))
    assert correlator_value(env, -1) == correlator_value(env, 1)


def test_constant_values():
    env = EnvCorrelator("constant", D0=0.7)
    assert all(correlator_value(env, x) == 0.7 for x in range(-5, 6))


def test_matrix_forms():
    n_f = 6
    assert np.array_equal(correlator_matrix(EnvCorrelator("delta", D0=3.0), n_f),
                          3.0 * np.eye(n_f))
    const = correlator_matrix(EnvCorrelator("constant", D0=0.5), n_f)
    assert np.array_equal(const, 0.5 * np.ones((n_f, n_f)))
    assert np.linalg.matrix_rank(const) == 1


def test_matrix_symmetric_exactly():
    m = correlator_matrix(EnvCorrelator("gaussian", sigma=1.7), 8)
    assert np.array_equal(m, m.T)


def test_gaussian_matrix_psd():
    for sigma in (0.3, 1.0, 4.0):
        m = correlator_matrix(EnvCorrelator("gaussian", D0=1.0, sigma=sigma), 12)
        assert np.linalg.eigvalsh(m).min() >= -1e-12


def test_gaussian_limits_match_delta_and_constant():
    n_f = 12
    narrow = correlator_matrix(EnvCorrelator("gaussian", sigma=1e-3), n_f)
    assert np.max(np.abs(narrow - correlator_matrix(EnvCorrelator("delta"), n_f))) < 1e-10
    wide = correlator_matrix(EnvCorrelator("gaussian", sigma=1e4), n_f)
    assert np.max(np.abs(wide - correlator_matrix(EnvCorrelator("constant"), n_f))) < 1e-6


def test_fourier_delta_flat():
    d_k = fourier_correlator(EnvCorrelator("delta", D0=1.5), 8)
    assert np.allclose(d_k, 1.5)


def test_fourier_constant_single_mode():
    d_k = fourier_correlator(EnvCorrelator("constant", D0=2.0), 8)
    assert d_k[0] == pytest.approx(16.0)
    assert np.max(np.abs(d_k[1:])) < 1e-12


def test_fourier_gaussian_monotone():
    d_k = fourier_correlator(EnvCorrelator("gaussian", sigma=1.5), 8).real
    assert np.all(np.diff(d_k[: 8 // 2 + 1]) < 0)


def test_fourier_real_and_invertible():
    n_f = 8
    env = EnvCorrelator("gaussian", D0=1.3, sigma=2.0)
    d_k = fourier_correlator(env, n_f)
    assert np.max(np.abs(d_k.imag)) < 1e-12
    x = np.arange(n_f)
    x_min = np.where(x > n_f // 2, x - n_f, x)
    recovered = np.exp(2j * np.pi * np.outer(x, np.arange(n_f)) / n_f) @ d_k / n_f
    expected = np.array([correlator_value(env, int(xi)) for xi in x_min])
    assert np.max(np.abs(recovered - expected)) < 1e-12


def test_validation():
    with pytest.raises(ValueError):
        EnvCorrelator("lorentzian")
    with pytest.raises(ValueError):
        EnvCorrelator("delta", D0=-1.0)
    with pytest.raises(ValueError):
        EnvCorrelator("gaussian", sigma=0.0)
    with pytest.raises(ValueError):
        EnvCorrelator("delta", beta=-0.1)
