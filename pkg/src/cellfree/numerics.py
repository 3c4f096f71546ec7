"""Integration and series helpers shared by the load and coverage evaluators."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special
from scipy.stats import qmc

log = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-6
DEFAULT_ATOL = 1e-12
DEFAULT_TAIL_EPS = 1e-6


class Unconverged(RuntimeWarning):
    pass


@dataclass(frozen=True)
class IntegrationResult:
    value: float
    error: float
    converged: bool = True

    def __float__(self):
        return float(self.value)


def integrate_1d(f, a, b, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, limit=200, points=()):
    """Adaptive Gauss-Kronrod over ``[a, b]`` (``b`` may be ``inf``)."""
    pts = [p for p in points if a < p < b] if np.isfinite(b) else None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, epsabs=atol, epsrel=rtol, limit=limit,
                                      points=pts or None)
            ok = True
        except integrate.IntegrationWarning:
            ok = False
    if not ok:
        val, err = integrate.quad(f, a, b, epsabs=atol, epsrel=rtol, limit=limit,
                                  points=pts or None, full_output=1)[:2]
        warnings.warn(f"quad did not converge on [{a}, {b}] (err {err:.2e})", Unconverged)
    return IntegrationResult(float(val), float(err), ok)


def integrate_2d(f, x_range, y_range, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, limit=100):
    """Nested adaptive quadrature of ``f(x, y)``.

    ``y_range`` may be a pair of callables of ``x`` for non-rectangular domains.
    """
    flagged = []

    def inner(x):
        lo, hi = (g(x) if callable(g) else g for g in y_range)
        res = integrate_1d(lambda y: f(x, y), lo, hi, rtol=rtol, atol=atol, limit=limit)
        if not res.converged:
            flagged.append(x)
        return res.value

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", Unconverged)
        outer = integrate_1d(inner, *x_range, rtol=rtol, atol=atol, limit=limit)
    ok = outer.converged and not flagged
    if not ok:
        warnings.warn("2-D quadrature did not converge", Unconverged)
    return IntegrationResult(outer.value, outer.error, ok)


@dataclass(frozen=True)
class QmcResult:
    value: float
    stderr: float
    n_points: int

    def __float__(self):
        return float(self.value)


def integrate_qmc(f, lower, upper, budget=2**20, randomizations=8, seed=0, chunk=2**15):
    """Randomised quasi-Monte Carlo over a box.

    ``f`` receives an ``(n, d)`` array of points and returns ``n`` values.
    ``budget`` points are split over ``randomizations`` independently
    scrambled Sobol sequences; the standard error comes from the spread of
    the per-randomisation estimates.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(upper <= lower):
        raise ValueError("empty box")
    if randomizations < 2:
        raise ValueError("need at least two randomisations for an error estimate")
    dim = lower.size
    per = max(int(budget // randomizations), 1)
    m = int(np.ceil(np.log2(per)))
    volume = float(np.prod(upper - lower))
    seeds = np.random.SeedSequence(seed).spawn(randomizations)
    estimates = np.empty(randomizations)
    for i, ss in enumerate(seeds):
        sob = qmc.Sobol(dim, scramble=True, seed=np.random.default_rng(ss))
        pts = sob.random_base2(m)
        acc = 0.0
        for start in range(0, pts.shape[0], chunk):
            x = lower + pts[start:start + chunk] * (upper - lower)
            acc += float(np.sum(f(x)))
        estimates[i] = volume * acc / pts.shape[0]
    stderr = float(np.std(estimates, ddof=1) / np.sqrt(randomizations))
    return QmcResult(float(np.mean(estimates)), stderr, randomizations * 2**m)


def gauss_legendre(breaks, order=20):
    """Composite Gauss-Legendre nodes and weights over consecutive panels."""
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (b + a))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def poisson_pmf(n, mu):
    """Poisson probabilities evaluated in log space; zero for negative ``n``."""
    n = np.asarray(n)
    mu = np.asarray(mu, dtype=float)
    nn = np.maximum(n, 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = special.xlogy(nn, mu) - mu - special.gammaln(nn + 1)
    out = np.where(n < 0, 0.0, np.exp(logp))
    return out if out.ndim else float(out)


def poisson_cmf(n, mu):
    """``P[Poisson(mu) <= n]``; zero for negative ``n``."""
    n = np.asarray(n)
    mu = np.asarray(mu, dtype=float)
    out = np.where(n < 0, 0.0, special.pdtr(np.maximum(n, 0), mu))
    return out if out.ndim else float(out)


def sum_pmf_weighted(pmf, g, tail_eps=DEFAULT_TAIL_EPS, k_limit=10**7):
    """``sum_k pmf(k) g(k)``, stopping once the unexplored pmf mass is below ``tail_eps``.

    ``pmf`` and ``g`` are callables of integer arrays.
    """
    total = 0.0
    mass = 0.0
    k0 = 0
    block = 64
    while k0 < k_limit:
        k = np.arange(k0, k0 + block)
        p = np.asarray(pmf(k), dtype=float)
        total += float(np.sum(p * np.asarray(g(k), dtype=float)))
        mass += float(np.sum(p))
        if 1.0 - mass < tail_eps:
            return total
        k0 += block
        block *= 2
    warnings.warn("pmf sum hit k_limit before tail_eps", Unconverged)
    return total
