"""Analytic rate coverage for the traditional (finite BPP) and user-centric (PPP) networks."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special
from scipy.integrate import cumulative_simpson
from scipy.stats import qmc

from .distances import law_nearest_of_m, law_truncated_remaining, law_user_to_random_ap
from .load import (
    LoadPmf,
    effective_mean_load,
    load_pmf,
    tagged_load_moments,
)
from .numerics import Unconverged, gauss_legendre, integrate_1d
from .propagation import FronthaulParams, RadioParams, estimation_variance, large_scale_gain
from .sinr import sinr_from_sums


class CurveTooShort(ValueError):
    pass


# ---------------------------------------------------------------------------
# configs and curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TraditionalConfig:
    m: int
    k: int
    r_s: float
    radio: RadioParams
    c_f: float

    def __post_init__(self):
        if self.m < 1 or self.k < 1 or not self.r_s > 0 or not self.c_f > 0:
            raise ValueError("need m, k >= 1 and positive r_s, c_f")
        if self.radio.tau_p < self.k:
            raise ValueError(f"tau_p={self.radio.tau_p} < K={self.k}: pilots would be reused")
        if self.m * self.radio.n_antennas < 2 * self.k:
            warnings.warn("M*N_a < 2K: far from the many-antenna regime", RuntimeWarning)


@dataclass(frozen=True)
class UserCentricConfig:
    lambda_r: float
    lambda_u: float
    n_s: int
    radio: RadioParams
    fronthaul: FronthaulParams

    def __post_init__(self):
        if self.n_s < 1 or self.lambda_r <= 0 or self.lambda_u <= 0:
            raise ValueError("need n_s >= 1 and positive densities")

    @property
    def k_max(self) -> int:
        return self.fronthaul.k_max


@dataclass
class CoverageCurve:
    thresholds: np.ndarray
    probabilities: np.ndarray
    stderr: np.ndarray
    method: str = "analytic"
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.thresholds = np.asarray(self.thresholds, dtype=float)
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        self.stderr = np.broadcast_to(np.asarray(self.stderr, dtype=float), self.thresholds.shape).copy()
        if np.any(np.diff(self.thresholds) <= 0):
            raise ValueError("thresholds must be strictly ascending")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["threshold", "probability", "stderr"])
            for row in zip(self.thresholds, self.probabilities, self.stderr):
                w.writerow([repr(float(v)) for v in row])

    def max_gap(self, other: "CoverageCurve") -> float:
        if not np.array_equal(self.thresholds, other.thresholds):
            raise ValueError("curves are on different grids")
        return float(np.max(np.abs(self.probabilities - other.probabilities)))


def mean_user_rate(curve: CoverageCurve, literal: bool = False) -> float:
    """Mean spectral efficiency from a coverage curve.

    Default: the survival identity ``E[X] = int R_c(t) dt``.  ``literal=True``
    evaluates ``int t R_c(t) dt`` instead.  Both use the trapezoid rule with
    an exponential tail fitted to the last two points.
    """
    t, p = curve.thresholds, curve.probabilities
    if p[-1] >= 1e-3:
        raise CurveTooShort(f"coverage still {p[-1]:.3g} at the last threshold {t[-1]}")
    if t[0] > 0:
        t = np.concatenate([[0.0], t])
        p = np.concatenate([[1.0], p])
    weight = t if literal else np.ones_like(t)
    body = float(np.trapezoid(weight * p, t))
    tail = 0.0
    if p[-1] > 0 and p[-2] > p[-1]:
        s = (t[-1] - t[-2]) / math.log(p[-2] / p[-1])
        tail = p[-1] * s * ((t[-1] + s) if literal else 1.0)
    return body + tail


@dataclass(frozen=True)
class SumRateScan:
    k_values: np.ndarray
    sum_rates: np.ndarray

    @property
    def argmax(self) -> int:
        return int(self.k_values[int(np.argmax(self.sum_rates))])


# ---------------------------------------------------------------------------
# traditional network
# ---------------------------------------------------------------------------

def _link_functions(r, radio):
    beta = large_scale_gain(r, radio)
    gamma = estimation_variance(beta, 0.0, radio)
    return np.sqrt(gamma), gamma, beta


def approx_signal_terms(d_oo: float, r_o: float, cfg: TraditionalConfig):
    """Nearest-AP terms plus the conditional mean of the other ``M-1`` APs' contributions.

    Returns ``(I1, I2, I3)`` approximating the sums of ``sqrt(gamma)``,
    ``gamma`` and ``beta`` over all APs given the nearest distance ``d_oo``.
    """
    hi = cfg.r_s + r_o
    if not 0 <= d_oo <= hi:
        raise ValueError(f"d_oo must lie in [0, {hi}]")
    own = _link_functions(d_oo, cfg.radio)
    if cfg.m == 1:
        return tuple(float(v) for v in own)
    law = law_truncated_remaining(r_o, cfg.r_s, d_oo)
    kinks = [cfg.radio.d_ref, *law._breaks()]
    out = []
    for idx in range(3):
        res = integrate_1d(lambda r: _link_functions(r, cfg.radio)[idx] * law.pdf(r),
                           d_oo, hi, points=kinks, rtol=1e-9)
        if not res.converged:
            warnings.warn("approx_signal_terms: integration unconverged", Unconverged)
        out.append(float(own[idx] + (cfg.m - 1) * res.value))
    return tuple(out)


def _radial_grid(lo, hi, kinks, n=3000):
    # smooth spacing inside each segment; Simpson misbehaves on near-duplicate nodes
    br = np.unique([lo, hi, *(k for k in kinks if lo < k < hi)])
    parts = []
    for a, b in zip(br[:-1], br[1:]):
        seg = np.linspace(a, b, 64) if a == 0 else np.geomspace(a, b, n)
        parts.append(seg if not parts else seg[1:])
    return np.concatenate(parts)


class TraditionalAnalytic:
    """Rate coverage of a random user in the finite network under the dominant-AP approximation.

    For each user radius (Gauss-Legendre nodes against ``2 r / R_s^2``) the
    approximate SINR is tabulated at equal-probability quantiles of the
    nearest-AP distance.  Any threshold grid is then answered from the table.
    """

    def __init__(self, cfg: TraditionalConfig, n_radius: int = 12, n_quantiles: int = 2000):
        self.cfg = cfg
        r_nodes, r_w = gauss_legendre(np.linspace(0.0, cfg.r_s, 5), n_radius)
        self.weights = r_w * 2.0 * r_nodes / cfg.r_s**2
        q = (np.arange(n_quantiles) + 0.5) / n_quantiles
        self.sinr = np.stack([self._table(r_o, q) for r_o in r_nodes])

    def _table(self, r_o, q):
        cfg = self.cfg
        base = law_user_to_random_ap(r_o, cfg.r_s)
        r = _radial_grid(0.0, base.hi, [cfg.radio.d_ref, cfg.r_s - r_o])
        f = base.pdf(r)
        big_f = base.cdf(r)
        # quantiles of the nearest of M iid distances, by inverting F on the grid
        p = -np.expm1(np.log1p(-q) / cfg.m)
        d = np.interp(p, big_f, r)
        g = _link_functions(d, cfg.radio)
        if cfg.m == 1:
            sums = g
        else:
            surv = np.maximum(1.0 - base.cdf(d), 1e-300)
            sums = []
            for gk, vals in zip(_link_functions(r, cfg.radio), g):
                cum = cumulative_simpson(gk * f, x=r, initial=0.0)
                tail = cum[-1] - np.interp(d, r, cum)
                sums.append(vals + (cfg.m - 1) * tail / surv)
        return sinr_from_sums(sums[0], sums[1], sums[2], cfg.radio, cfg.c_f, cfg.k)

    def coverage(self, thresholds) -> np.ndarray:
        t = np.atleast_1d(np.asarray(thresholds, dtype=float))
        theta = np.exp2(t) - 1.0
        srt = np.sort(self.sinr, axis=1)
        n = srt.shape[1]
        frac = np.stack([n - np.searchsorted(row, theta, side="right") for row in srt]) / n
        return self.weights @ frac

    def max_rate(self) -> float:
        return float(np.log2(1.0 + self.sinr.max()))

    def curve(self, thresholds=None, n_points: int = 200, label="") -> CoverageCurve:
        if thresholds is None:
            thresholds = np.linspace(0.0, self.max_rate() * 1.001, n_points + 1)[1:]
        thresholds = np.asarray(thresholds, dtype=float)
        return CoverageCurve(thresholds, self.coverage(thresholds), 0.0, "analytic", label)

    def mean_rate(self, literal=False) -> float:
        return mean_user_rate(self.curve(), literal)


def rate_coverage_traditional(cfg: TraditionalConfig, t_r) -> np.ndarray | float:
    """Coverage probability ``P[log2(1 + SINR) > t_r]`` for one or more thresholds."""
    if np.any(np.asarray(t_r) <= 0):
        raise ValueError("thresholds must be positive")
    out = TraditionalAnalytic(cfg).coverage(t_r)
    return out if np.ndim(t_r) else float(out[0])


def sum_rate_scan(template: TraditionalConfig, k_values, literal=False) -> SumRateScan:
    """Sum rate ``K * mean rate`` over a grid of user counts."""
    k_values = np.asarray(k_values, dtype=int)
    rates = [k * TraditionalAnalytic(replace(template, k=int(k))).mean_rate(literal) for k in k_values]
    return SumRateScan(k_values, np.array(rates))


# ---------------------------------------------------------------------------
# user-centric network
# ---------------------------------------------------------------------------

def out_of_cluster_mean(d, lambda_r, radio: RadioParams):
    """Mean total gain of APs beyond distance ``d``: ``2 pi lambda_r int_d^inf r / l(r) dr``."""
    d = np.asarray(d, dtype=float)
    a, d0 = radio.alpha, radio.d_ref
    far = d0**a * np.maximum(d, d0) ** (2 - a) / (a - 2)
    near = 0.5 * (d0**2 - np.minimum(d, d0) ** 2) + d0**2 / (a - 2)
    return 2 * np.pi * lambda_r * np.where(d >= d0, far, near)


@dataclass
class LoadModel:
    """The load inputs of the user-centric coverage: nearest-AP pmf and effective means."""

    pmf_k1: LoadPmf
    kbar: np.ndarray  # ranks 2..N_s


def load_model(cfg: UserCentricConfig, budget=2**20, seed=0) -> LoadModel:
    moms = [tagged_load_moments(i, cfg.lambda_r, cfg.lambda_u, cfg.n_s, budget=budget, seed=seed)
            for i in range(1, cfg.n_s + 1)]
    pmfs = [load_pmf(m, label=f"rank{i + 1}") for i, m in enumerate(moms)]
    kbar = np.array([effective_mean_load(i, cfg.k_max, pmfs[i - 1]) for i in range(2, cfg.n_s + 1)])
    return LoadModel(pmfs[0], kbar)


class UserCentricAnalytic:
    """Rate coverage of the typical user served by its ``N_s`` nearest APs.

    The expectation over serving distances is taken by randomised QMC; the
    nearest AP's load is summed exactly against its pmf.  For each sample
    and each possible scheduled count of the nearest AP the coverage
    condition reduces to ``2**T_r - 1 <= S``, so one pass of samples serves
    every threshold.

    ``literal_hcov=True`` drops the square on the coherent sum, as in the
    displayed coverage condition; the default squares it, which is what the
    SINR expression implies.
    """

    def __init__(self, cfg: UserCentricConfig, loads: LoadModel | None = None,
                 literal_hcov: bool = False, budget: int = 2**18, randomizations: int = 8, seed: int = 0):
        self.cfg = cfg
        self.loads = loads if loads is not None else load_model(cfg, seed=seed)
        if self.loads.kbar.size != cfg.n_s - 1:
            raise ValueError("need one effective mean load per rank 2..N_s")
        self.literal = literal_hcov
        self.randomizations = randomizations
        k_max = cfg.k_max
        # scheduled count of the nearest AP is min(k1 + 1, k_max) = j
        probs = self.loads.pmf_k1.probs
        w = np.zeros(k_max)
        w[: min(k_max - 1, probs.size)] = probs[: k_max - 1]
        w[k_max - 1] = max(1.0 - w[: k_max - 1].sum(), 0.0)
        self.j_weights = w
        per = max(budget // randomizations, 2)
        m = int(math.ceil(math.log2(per)))
        seeds = np.random.SeedSequence(seed).spawn(randomizations)
        self.scores = [self._scores(qmc.Sobol(cfg.n_s, scramble=True, seed=np.random.default_rng(s))
                                    .random_base2(m)) for s in seeds]

    def _distances(self, u):
        cfg = self.cfg
        u = np.clip(u, 1e-16, 1 - 1e-16)
        c = np.pi * cfg.lambda_r
        d_last = np.sqrt(special.gammaincinv(cfg.n_s, u[:, -1]) / c)
        inner = np.sort(d_last[:, None] * np.sqrt(u[:, :-1]), axis=1)
        return np.concatenate([inner, d_last[:, None]], axis=1)

    def _scores(self, u):
        cfg, radio = self.cfg, self.cfg.radio
        d = self._distances(u)
        beta = large_scale_gain(d, radio)
        gamma = estimation_variance(beta, 0.0, radio)
        c_f, k_max = cfg.fronthaul.c_f, cfg.k_max
        q_rest = np.exp2(-c_f / self.loads.kbar)
        rest_coh = np.sum(np.sqrt(gamma[:, 1:] * (1 - q_rest)), axis=1)
        rest_cmp = np.sum(gamma[:, 1:] * q_rest, axis=1)
        base = (beta.sum(axis=1) + 1.0 / radio.rho_d
                + out_of_cluster_mean(d[:, -1], cfg.lambda_r, radio))
        j = np.arange(1, k_max + 1)
        q1 = np.exp2(-c_f / j)
        coh = np.sqrt(gamma[:, :1] * (1 - q1)) + rest_coh[:, None]
        if not self.literal:
            coh = coh**2
        scale = radio.n_antennas / k_max
        cmp = gamma[:, :1] * q1 + rest_cmp[:, None]
        return np.sort(scale * coh / (scale * cmp + base[:, None]), axis=0)

    def coverage_with_error(self, thresholds):
        theta = np.exp2(np.atleast_1d(np.asarray(thresholds, dtype=float))) - 1.0
        ests = []
        for sc in self.scores:
            n = sc.shape[0]
            frac = np.stack([n - np.searchsorted(sc[:, j], theta, side="left") for j in range(sc.shape[1])]) / n
            ests.append(self.j_weights @ frac)
        ests = np.array(ests)
        return ests.mean(axis=0), ests.std(axis=0, ddof=1) / np.sqrt(len(ests))

    def coverage(self, thresholds):
        return self.coverage_with_error(thresholds)[0]

    def curve(self, thresholds, label="") -> CoverageCurve:
        p, se = self.coverage_with_error(thresholds)
        return CoverageCurve(thresholds, p, se, "analytic", label)


def rate_coverage_user_centric(cfg: UserCentricConfig, t_r, pmf_k1: LoadPmf | None = None,
                               kbar=None, literal_hcov=False, budget=2**18, seed=0):
    """Typical-user coverage at one or more thresholds; loads computed if not supplied."""
    if np.any(np.asarray(t_r) <= 0):
        raise ValueError("thresholds must be positive")
    loads = None
    if pmf_k1 is not None:
        loads = LoadModel(pmf_k1, np.asarray(kbar if kbar is not None else [], dtype=float))
    ev = UserCentricAnalytic(cfg, loads, literal_hcov, budget=budget, seed=seed)
    out = ev.coverage(t_r)
    return out if np.ndim(t_r) else float(out[0])


__all__ = [
    "CoverageCurve",
    "CurveTooShort",
    "LoadModel",
    "SumRateScan",
    "TraditionalAnalytic",
    "TraditionalConfig",
    "UserCentricAnalytic",
    "UserCentricConfig",
    "approx_signal_terms",
    "load_model",
    "mean_user_rate",
    "out_of_cluster_mean",
    "rate_coverage_traditional",
    "rate_coverage_user_centric",
    "sum_rate_scan",
]
