"""Poisson and binomial probability helpers.

Everything here is small-argument exact arithmetic: pmf vectors by stable
recursion, tails by summation of individual terms (so tiny tails keep full
relative accuracy instead of suffering 1 - cdf cancellation).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError


def poisson_pmf(mean: float, kmax: int) -> np.ndarray:
    """P[Po(mean) = k] for k = 0..kmax."""
    if mean <= 0:
        raise ParameterError(f"Poisson mean must be positive, got {mean}")
    out = np.empty(kmax + 1)
    out[0] = math.exp(-mean)
    for k in range(1, kmax + 1):
        out[k] = out[k - 1] * mean / k
    return out


def _pmf_at(mean: float, k: int) -> float:
    return math.exp(k * math.log(mean) - mean - math.lgamma(k + 1))


def poisson_tail(mean: float, k: int) -> float:
    """P[Po(mean) >= k], summed term by term from k upward."""
    if k <= 0:
        return 1.0
    term = _pmf_at(mean, k)
    terms = []
    i = k
    while term > 0.0 and (i <= mean or term > 1e-30 * (terms[0] if terms else term)):
        terms.append(term)
        i += 1
        term = term * mean / i
        if i > k + 10_000:  # unreachable for sane arguments
            break
    return min(1.0, math.fsum(reversed(terms)))


def binomial_pmf(m: int, p: float) -> np.ndarray:
    """P[Bin(m, p) = j] for j = 0..m (exact combinatorics, m small)."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"binomial p must lie in [0, 1], got {p}")
    q = 1.0 - p
    return np.array([math.comb(m, j) * p**j * q ** (m - j) for j in range(m + 1)])
