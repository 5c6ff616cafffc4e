import numpy as np
import pytest
from scipy.stats import chisquare

from zrp import rates


@pytest.fixture
def rate_one():
    return rates.preset("rate-one")


@pytest.fixture
def rate_half():
    return rates.RateFunction(head=(0.5,))


@pytest.fixture
def rate_threshold3():
    return rates.preset("threshold-3")


def chi2_pvalue(counts, probs) -> float:
    """Goodness-of-fit p-value with low-expectation cells pooled (>= 5)."""
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    n = counts.sum()
    expected = probs / probs.sum() * n
    order = np.argsort(expected)
    obs_bins: list[float] = []
    exp_bins: list[float] = []
    co = ce = 0.0
    for i in order:
        co += counts[i]
        ce += expected[i]
        if ce >= 5.0:
            obs_bins.append(co)
            exp_bins.append(ce)
            co = ce = 0.0
    if ce > 0:
        if obs_bins:
            obs_bins[-1] += co
            exp_bins[-1] += ce
        else:
            obs_bins.append(co)
            exp_bins.append(ce)
    if len(obs_bins) < 2:
        return 1.0
    return float(chisquare(obs_bins, exp_bins).pvalue)
