"""Load statistics of the user-centric architecture.

All integrals are carried out in units where the AP density is 1 (lengths
scaled by ``sqrt(lambda_r)``), so moments depend on the densities only
through ``lambda_u / lambda_r``.  Radii enter through the normalised disk
areas ``a = pi * lambda_r * r**2``, which turns the Poisson void factors
into plain exponentials and keeps every integration variable O(N_s).

Frames
------
Tagged AP: the AP sits at the origin, the typical user at distance
``r_o`` along the positive x axis, and other users at polar coordinates
``(r_x, w_x)`` around the AP.  A user at ``x`` is served by the AP iff
fewer than ``N_s`` other APs fall in the disk of radius ``|x|`` around it;
the AP is the typical user's N-th nearest iff exactly ``N - 1`` other
APs fall in the disk of radius ``r_o`` around the typical user.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special, stats

from .geometry import disks_intersection_area, lens_area
from .numerics import (
    DEFAULT_TAIL_EPS,
    IntegrationResult,
    QmcResult,
    gauss_legendre,
    integrate_qmc,
    poisson_cmf,
    poisson_pmf,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LoadMoments:
    m1: float
    m2: float
    m2_stderr: float = 0.0

    def __post_init__(self):
        if self.m1 < 0:
            raise ValueError("negative first moment")

    @property
    def variance(self) -> float:
        return self.m2 - self.m1**2


class Underdispersed(ValueError):
    pass


@dataclass(frozen=True)
class NegBinParams:
    r: float
    p: float

    @property
    def mean(self) -> float:
        return (1 - self.p) * self.r / self.p

    @property
    def second_moment(self) -> float:
        return (1 - self.p) * self.r * (1 + (1 - self.p) * self.r) / self.p**2

    def pmf(self, k):
        return stats.nbinom.pmf(k, self.r, self.p)


@dataclass(frozen=True)
class LoadPmf:
    """Probabilities of loads ``0..len(probs)-1``; the missing tail is below ``tail_eps``."""

    probs: np.ndarray
    tail_eps: float = DEFAULT_TAIL_EPS
    label: str = ""

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if np.any(probs < 0):
            raise ValueError("negative probability")
        object.__setattr__(self, "probs", probs)

    @property
    def k(self) -> np.ndarray:
        return np.arange(self.probs.size)

    def pmf(self, k):
        k = np.asarray(k)
        inside = (k >= 0) & (k < self.probs.size)
        return np.where(inside, self.probs[np.clip(k, 0, self.probs.size - 1)], 0.0)

    def cdf(self, k):
        k = np.asarray(k)
        c = np.cumsum(self.probs)
        return np.where(k < 0, 0.0, c[np.clip(k, 0, c.size - 1)])

    def mean(self) -> float:
        return float(np.dot(self.k, self.probs))

    def ppf(self, q):
        """Smallest k with cdf(k) >= q."""
        c = np.cumsum(self.probs)
        return np.minimum(np.searchsorted(c, np.asarray(q) - 1e-15), c.size - 1)

    @classmethod
    def from_samples(cls, samples, label=""):
        counts = np.bincount(np.asarray(samples, dtype=int))
        return cls(counts / counts.sum(), tail_eps=0.0, label=label)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "probability"])
            for k, p in zip(self.k, self.probs):
                w.writerow([int(k), repr(float(p))])


def total_variation(p: LoadPmf, q: LoadPmf) -> float:
    n = max(p.probs.size, q.probs.size)
    a = np.zeros(n)
    b = np.zeros(n)
    a[: p.probs.size] = p.probs
    b[: q.probs.size] = q.probs
    # mass missing from either table counts as disagreement
    return 0.5 * (np.abs(a - b).sum() + abs(a.sum() - b.sum()))


# ---------------------------------------------------------------------------
# quadrature grids
# ---------------------------------------------------------------------------

def _area_breaks(n_s: int) -> np.ndarray:
    top = n_s + 12.0 * math.sqrt(n_s) + 30.0
    base = [0.0, 0.25, 0.75, 1.5, 3.0, 5.0, 8.0, 12.0, 17.0, 23.0, 30.0, 40.0, 52.0, 66.0, 82.0, 100.0]
    br = [b for b in base if b < top]
    return np.array(br + [top])


_ANGLE_BREAKS = np.array([0.0, 0.02, 0.08, 0.25, 0.6, 1.2, 2.0, np.pi])


def _radius(area):
    return np.sqrt(area / np.pi)


# ---------------------------------------------------------------------------
# typical AP
# ---------------------------------------------------------------------------

def _h_typ(a, b, u, n_s):
    rx, ry = _radius(a), _radius(b)
    dxy = np.sqrt(np.maximum(rx**2 + ry**2 - 2 * rx * ry * np.cos(u), 0.0))
    common = np.minimum(lens_area(rx, ry, dxy), np.minimum(a, b))
    only_x = np.maximum(a - common, 0.0)
    only_y = np.maximum(b - common, 0.0)
    out = 0.0
    for l in range(n_s):
        out = out + (poisson_pmf(l, common) * poisson_cmf(n_s - l - 1, only_x)
                     * poisson_cmf(n_s - l - 1, only_y))
    return out


@lru_cache(maxsize=64)
def _typical_pair_integral(n_s: int, order: int) -> float:
    # (1/2pi) int int int h_typ da db du over [0,inf)^2 x [0, 2pi)
    na, wa = gauss_legendre(_area_breaks(n_s), order)
    nu, wu = gauss_legendre(_ANGLE_BREAKS, order)
    total = 0.0
    for i in range(na.size):
        h = _h_typ(na[i], na[:, None], nu[None, :], n_s)
        total += wa[i] * float(wa @ h @ wu)
    return 2.0 * total / (2.0 * np.pi)


def typical_load_moments(lambda_r: float, lambda_u: float, n_s: int, order: int = 16) -> LoadMoments:
    """First two moments of the number of users served by a typical AP."""
    if n_s < 1 or lambda_r <= 0 or lambda_u <= 0:
        raise ValueError("need n_s >= 1 and positive densities")
    ratio = lambda_u / lambda_r
    m1 = n_s * ratio
    m2 = ratio**2 * _typical_pair_integral(int(n_s), int(order)) + m1
    return LoadMoments(m1, m2)


def typical_load_m1_quadrature(lambda_r, lambda_u, n_s, order=16) -> float:
    """The typical-AP mean via the same quadrature machinery (closed form is ``n_s * ratio``)."""
    na, wa = gauss_legendre(_area_breaks(n_s), order)
    return lambda_u / lambda_r * float(wa @ poisson_cmf(n_s - 1, na))


# ---------------------------------------------------------------------------
# tagged AP, first moment
# ---------------------------------------------------------------------------

def _h_tag_m1(a, b, w, rank, n_s):
    r_o, r_x = _radius(a), _radius(b)
    d_ox = np.sqrt(np.maximum(r_o**2 + r_x**2 - 2 * r_o * r_x * np.cos(w), 0.0))
    common = np.minimum(lens_area(r_o, r_x, d_ox), np.minimum(a, b))
    only_o = np.maximum(a - common, 0.0)
    only_x = np.maximum(b - common, 0.0)
    out = 0.0
    for n in range(rank):
        out = out + (poisson_pmf(rank - n - 1, only_o) * poisson_pmf(n, common)
                     * poisson_cmf(n_s - n - 1, only_x))
    return out


def _check_rank(rank, n_s, lambda_r, lambda_u):
    if not 1 <= rank <= n_s:
        raise ValueError(f"rank must lie in 1..{n_s}")
    if lambda_r <= 0 or lambda_u <= 0:
        raise ValueError("densities must be positive")


@lru_cache(maxsize=256)
def _tagged_m1_integral(rank: int, n_s: int, order: int) -> float:
    na, wa = gauss_legendre(_area_breaks(n_s), order)
    nw, ww = gauss_legendre(_ANGLE_BREAKS, order)
    total = 0.0
    for i in range(na.size):
        h = _h_tag_m1(na[i], na[:, None], nw[None, :], rank, n_s)
        total += wa[i] * float(wa @ h @ ww)
    return 2.0 * total / (2.0 * np.pi)


def tagged_load_m1(rank: int, lambda_r: float, lambda_u: float, n_s: int, order: int = 16) -> float:
    """Mean number of other users served by the typical user's ``rank``-th nearest AP."""
    _check_rank(rank, n_s, lambda_r, lambda_u)
    return lambda_u / lambda_r * _tagged_m1_integral(int(rank), int(n_s), int(order))


# ---------------------------------------------------------------------------
# importance-sampled QMC for the tagged AP
# ---------------------------------------------------------------------------
#
# Unit-cube coordinates are mapped to
#   a   ~ Gamma(rank, 1)            (the law of the disk area holding rank-1 APs)
#   b_* ~ Exponential(mean a + n_s) (users' disk areas, heavier-tailed than the integrand)
#   w_* ~ Uniform(0, 2 pi)
# and the integrand is divided by the proposal density; the 1/(2 pi) factors
# of the polar measure cancel the uniform angle density.

def _map_area_o(u, rank):
    u = np.clip(u, 1e-16, 1 - 1e-16)
    a = special.gammaincinv(rank, u)
    log_q = (rank - 1) * np.log(a) - a - special.gammaln(rank)
    return a, np.exp(-log_q)


def _map_area_user(u, a, n_s):
    u = np.clip(u, 0.0, 1 - 1e-16)
    mu = a + n_s
    b = -mu * np.log1p(-u)
    return b, mu / (1.0 - u)


def _tag_m1_qmc_integrand(pts, rank, n_s):
    a, wa = _map_area_o(pts[:, 0], rank)
    b, wb = _map_area_user(pts[:, 1], a, n_s)
    w = 2 * np.pi * pts[:, 2]
    return _h_tag_m1(a, b, w, rank, n_s) * wa * wb


def tagged_load_m1_qmc(rank, lambda_r, lambda_u, n_s, budget=2**18, randomizations=8, seed=0) -> QmcResult:
    """QMC estimate of :func:`tagged_load_m1`, used as an independent cross-check."""
    _check_rank(rank, n_s, lambda_r, lambda_u)
    res = integrate_qmc(lambda p: _tag_m1_qmc_integrand(p, rank, n_s), np.zeros(3), np.ones(3),
                        budget=budget, randomizations=randomizations, seed=seed)
    ratio = lambda_u / lambda_r
    return QmcResult(ratio * res.value, ratio * res.stderr, res.n_points)


def _pmf_table(area, kmax):
    k = np.arange(kmax + 1)[:, None]
    return poisson_pmf(k, area[None, :])


def _cmf_table(area, kmax):
    k = np.arange(kmax + 1)[:, None]
    return poisson_cmf(k, area[None, :])


def h_tag_m2(a, b_x, b_y, w_x, w_y, rank, n_s):
    """Joint-service probability of two users by the rank-th tagged AP.

    Areas are normalised (AP density 1).  The plane is cut into the seven
    cells of the three disks (typical user's, ``x``'s and ``y``'s); AP
    counts in disjoint cells are independent Poisson variables.  Users'
    exclusive cells enter through cumulative probabilities because the
    service condition only caps their counts.
    """
    a, b_x, b_y, w_x, w_y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b_x, b_y, w_x, w_y)))
    r_o, r_x, r_y = _radius(a), _radius(b_x), _radius(b_y)
    o = np.stack([r_o, np.zeros_like(r_o)])
    x = np.stack([r_x * np.cos(w_x), r_x * np.sin(w_x)])
    y = np.stack([r_y * np.cos(w_y), r_y * np.sin(w_y)])
    a_ox = lens_area(r_o, r_x, np.hypot(*(o - x)))
    a_oy = lens_area(r_o, r_y, np.hypot(*(o - y)))
    a_xy = lens_area(r_x, r_y, np.hypot(*(x - y)))
    a_oxy = disks_intersection_area([o, x, y], [r_o, r_x, r_y])
    a_oxy = np.minimum(a_oxy, np.minimum(np.minimum(a_ox, a_oy), a_xy))

    def nn(v):
        return np.maximum(v, 0.0)

    cells = {
        "oxy": nn(a_oxy),
        "ox": nn(a_ox - a_oxy),
        "oy": nn(a_oy - a_oxy),
        "o": nn(a - a_ox - a_oy + a_oxy),
        "xy": nn(a_xy - a_oxy),
        "x": nn(b_x - a_ox - a_xy + a_oxy),
        "y": nn(b_y - a_oy - a_xy + a_oxy),
    }
    top = n_s - 1
    pmf = {key: _pmf_table(v.ravel(), top) for key, v in cells.items() if key not in ("x", "y")}
    cmf_x = _cmf_table(cells["x"].ravel(), top)
    cmf_y = _cmf_table(cells["y"].ravel(), top)

    # q-sum depends on (n+m, n+p) only
    qsum = {}
    for s1 in range(rank):
        for s2 in range(rank):
            acc = 0.0
            for q in range(min(top - s1, top - s2) + 1):
                acc = acc + pmf["xy"][q] * cmf_x[top - s1 - q] * cmf_y[top - s2 - q]
            qsum[s1, s2] = acc

    out = 0.0
    for n in range(rank):
        for m in range(rank - n):
            for p in range(rank - n - m):
                rest = rank - 1 - n - m - p
                out = out + (pmf["oxy"][n] * pmf["ox"][m] * pmf["oy"][p] * pmf["o"][rest]
                             * qsum[n + m, n + p])
    return np.asarray(out).reshape(a.shape)


def _tag_m2_qmc_integrand(pts, rank, n_s):
    a, wa = _map_area_o(pts[:, 0], rank)
    bx, wbx = _map_area_user(pts[:, 1], a, n_s)
    by, wby = _map_area_user(pts[:, 2], a, n_s)
    wx = 2 * np.pi * pts[:, 3]
    wy = 2 * np.pi * pts[:, 4]
    return h_tag_m2(a, bx, by, wx, wy, rank, n_s) * wa * wbx * wby


@lru_cache(maxsize=256)
def _tagged_m2_pair(rank, n_s, budget, randomizations, seed):
    return integrate_qmc(lambda p: _tag_m2_qmc_integrand(p, rank, n_s), np.zeros(5), np.ones(5),
                         budget=budget, randomizations=randomizations, seed=seed)


def tagged_load_m2(rank: int, lambda_r: float, lambda_u: float, n_s: int,
                   budget: int = 2**20, randomizations: int = 8, seed: int = 0) -> QmcResult:
    """Second moment of the rank-th tagged AP's load (other users only), by randomised QMC."""
    _check_rank(rank, n_s, lambda_r, lambda_u)
    ratio = lambda_u / lambda_r
    pair = _tagged_m2_pair(int(rank), int(n_s), int(budget), int(randomizations), int(seed))
    m1 = tagged_load_m1(rank, lambda_r, lambda_u, n_s)
    return QmcResult(ratio**2 * pair.value + m1, ratio**2 * pair.stderr, pair.n_points)


def tagged_load_moments(rank, lambda_r, lambda_u, n_s, budget=2**20, randomizations=8, seed=0) -> LoadMoments:
    m2 = tagged_load_m2(rank, lambda_r, lambda_u, n_s, budget, randomizations, seed)
    return LoadMoments(tagged_load_m1(rank, lambda_r, lambda_u, n_s), m2.value, m2.stderr)


# ---------------------------------------------------------------------------
# moment matching
# ---------------------------------------------------------------------------

def fit_negbin(m: LoadMoments) -> NegBinParams:
    """Negative binomial with the given mean and second moment.

    Raises :class:`Underdispersed` when the variance does not exceed the mean.
    """
    v = m.variance
    if m.m1 <= 0 or v <= m.m1:
        raise Underdispersed(f"variance {v:.6g} <= mean {m.m1:.6g}")
    return NegBinParams(r=m.m1**2 / (v - m.m1), p=m.m1 / v)


def load_pmf(m: LoadMoments, tail_eps: float = DEFAULT_TAIL_EPS, label: str = "") -> LoadPmf:
    """Moment-matched load pmf, truncated once the remaining tail is below ``tail_eps``.

    Zero mean gives a point mass at 0; underdispersed moments fall back to a
    Poisson pmf with the same mean.
    """
    if m.m1 == 0:
        return LoadPmf(np.array([1.0]), tail_eps, label)
    try:
        nb = fit_negbin(m)
        dist = stats.nbinom(nb.r, nb.p)
    except Underdispersed as exc:
        log.warning("%s; falling back to Poisson(%g)", exc, m.m1)
        dist = stats.poisson(m.m1)
    k_cap = int(dist.isf(tail_eps)) + 1
    while dist.sf(k_cap) >= tail_eps:
        k_cap += 1
    return LoadPmf(dist.pmf(np.arange(k_cap + 1)), tail_eps, label)


def scnr_coverage(c_f: float, t_s: float, pmf: LoadPmf) -> float:
    """Probability that an AP with this load law meets SCNR target ``t_s``."""
    if not t_s > 0:
        raise ValueError("t_s must be positive")
    cap = c_f / math.log2(1.0 + t_s)
    if cap >= pmf.probs.size:
        return float(min(pmf.probs.sum(), 1.0))
    return float(pmf.cdf(math.floor(cap + 1e-12)))


def required_fronthaul(t_s: float, pmf: LoadPmf, target: float = 0.95) -> float:
    """Smallest fronthaul capacity with ``scnr_coverage >= target``."""
    k = int(pmf.ppf(target))
    return k * math.log2(1.0 + t_s)


def effective_mean_load(rank: int, k_max: int, pmf: LoadPmf) -> float:
    """``1 + E[min(K_rank, k_max)]``: the evaluated user plus the capped other load."""
    if rank < 2:
        raise ValueError("the nearest AP's load enters exactly, not through its mean")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    return 1.0 + float(np.dot(np.minimum(pmf.k, k_max), pmf.probs))


__all__ = [
    "IntegrationResult",
    "LoadMoments",
    "LoadPmf",
    "NegBinParams",
    "Underdispersed",
    "effective_mean_load",
    "fit_negbin",
    "h_tag_m2",
    "load_pmf",
    "required_fronthaul",
    "scnr_coverage",
    "tagged_load_m1",
    "tagged_load_m1_qmc",
    "tagged_load_m2",
    "tagged_load_moments",
    "total_variation",
    "typical_load_moments",
    "typical_load_m1_quadrature",
]
