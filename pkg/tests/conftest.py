"""Shared test helpers."""

import numpy as np
import pytest


def integrated_autocorr_time(x, max_lag=None):
    """IACT estimate by summing positive autocorrelation pairs (Geyer).

    Conservative enough for Monte-Carlo standard errors of chain means.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    x = x - x.mean()
    if max_lag is None:
        max_lag = min(n - 2, 2000)
    f = np.fft.rfft(x, n=2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:max_lag + 1]
    if acf[0] <= 0:
        return 1.0
    acf = acf / acf[0]
    tau = 1.0
    k = 1
    while k + 1 <= max_lag:
        pair = acf[k] + acf[k + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
        k += 2
    return max(tau, 1.0)


def chain_mean_se(x):
    """Monte-Carlo standard error of the mean of a correlated chain."""
    x = np.asarray(x, dtype=float)
    tau = integrated_autocorr_time(x)
    return x.std(ddof=1) * np.sqrt(tau / len(x))


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
