"""Monte Carlo oracle: drop points, associate, schedule, evaluate the conditional SINR.

Trials are grouped in fixed blocks of :data:`BLOCK` trials; block ``b``
draws from ``SeedSequence(seed, spawn_key=(b,))``.  Block results are
concatenated in order, so output does not depend on the worker count.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, is_dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .coverage import CoverageCurve, TraditionalConfig, UserCentricConfig
from .geometry import DiskRegion, NetworkRealization, sample_bpp, sample_ppp
from .load import LoadPmf
from .propagation import estimation_variance, large_scale_gain
from .sinr import Association, sinr_traditional

BLOCK = 250


class InsufficientAps(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    deployment: TraditionalConfig | UserCentricConfig
    trials: int = 10_000
    seed: int = 0
    window: float = 2000.0
    guard: float = 500.0
    pilots: str = "orthogonal"
    n_pilots: int | None = None
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.guard < self.window:
            raise ValueError("need 0 <= guard < window")
        if self.pilots not in ("orthogonal", "reuse"):
            raise ValueError("pilots must be 'orthogonal' or 'reuse'")
        if self.pilots == "reuse" and not (self.n_pilots and self.n_pilots >= 1):
            raise ValueError("pilot reuse needs n_pilots >= 1")

    @property
    def kind(self) -> str:
        return "traditional" if isinstance(self.deployment, TraditionalConfig) else "user_centric"


def _jsonable(obj):
    if is_dataclass(obj):
        return {k: _jsonable(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


@dataclass
class SimResult:
    config: SimConfig
    sinr: np.ndarray
    tagged_loads: np.ndarray | None = None  # (trials, N_s), other users only
    typical_hist: np.ndarray | None = None  # pooled interior-AP load histogram
    typical_trial_means: np.ndarray | None = None
    typical_trial_m2: np.ndarray | None = None
    pilot_terms: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def rate(self) -> np.ndarray:
        return np.log2(1.0 + self.sinr)

    def coverage(self, thresholds, label="") -> CoverageCurve:
        t = np.asarray(thresholds, dtype=float)
        srt = np.sort(self.rate)
        n = srt.size
        p = (n - np.searchsorted(srt, t, side="right")) / n
        return CoverageCurve(t, p, np.sqrt(p * (1 - p) / n), "simulated", label)

    def tagged_pmf(self, rank: int) -> LoadPmf:
        if self.tagged_loads is None:
            raise ValueError("no tagged loads in a traditional run")
        return LoadPmf.from_samples(self.tagged_loads[:, rank - 1], label=f"rank{rank}")

    def typical_pmf(self) -> LoadPmf:
        if self.typical_hist is None:
            raise ValueError("no typical-AP loads in a traditional run")
        return LoadPmf(self.typical_hist / self.typical_hist.sum(), 0.0, "typical")

    def typical_mean(self):
        """Pooled mean interior-AP load and its standard error across trials."""
        k = np.arange(self.typical_hist.size)
        mean = float(k @ self.typical_hist / self.typical_hist.sum())
        tm = self.typical_trial_means
        return mean, float(np.std(tm, ddof=1) / math.sqrt(tm.size))

    def typical_second_moment(self):
        """Pooled interior-AP E[K^2] and its standard error across trials."""
        k = np.arange(self.typical_hist.size)
        m2 = float(k**2 @ self.typical_hist / self.typical_hist.sum())
        t2 = self.typical_trial_m2
        return m2, float(np.std(t2, ddof=1) / math.sqrt(t2.size))

    def to_json(self, path, thresholds=None):
        body = {"config": _jsonable(self.config), "kind": self.config.kind, "trials": int(self.sinr.size)}
        if thresholds is not None:
            c = self.coverage(thresholds)
            body["coverage"] = {"threshold": c.thresholds.tolist(), "probability": c.probabilities.tolist()}
        if self.tagged_loads is not None:
            body["tagged_mean"] = self.tagged_loads.mean(axis=0).tolist()
            body["typical_mean"] = self.typical_mean()[0]
        Path(path).write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            head = ["trial", "sinr"]
            if self.tagged_loads is not None:
                head += [f"load_rank{i + 1}" for i in range(self.tagged_loads.shape[1])]
            w.writerow(head)
            for i, s in enumerate(self.sinr):
                row = [i, repr(float(s))]
                if self.tagged_loads is not None:
                    row += [int(v) for v in self.tagged_loads[i]]
                w.writerow(row)


# ---------------------------------------------------------------------------
# association
# ---------------------------------------------------------------------------

def nearest_aps(aps, users, n_s):
    """Indices of each user's ``n_s`` nearest APs, nearest first (ties by lower index)."""
    if aps.shape[0] < n_s:
        raise InsufficientAps(f"insufficient-aps: {aps.shape[0]} APs for N_s={n_s}")
    users = np.asarray(users, dtype=float).reshape(-1, 2)
    k = min(n_s + 2, aps.shape[0])  # spare candidates so exact ties at rank n_s resolve by index
    _, cand = cKDTree(aps).query(users, k=k)
    cand = np.asarray(cand).reshape(len(users), k)
    d = np.hypot(*(aps[cand] - users[:, None, :]).transpose(2, 0, 1))
    order = np.lexsort((cand, d), axis=-1)
    return np.take_along_axis(cand, order, axis=1)[:, :n_s]


def associate_and_schedule(realization: NetworkRealization, n_s: int, k_max: int,
                           rng: np.random.Generator, evaluate: int | None = None,
                           pilot_plan=None) -> Association:
    """Serve each user by its ``n_s`` nearest APs; overloaded APs schedule a random ``k_max``-subset.

    When ``evaluate`` is given, that user is always kept in the subsets.
    """
    aps, users = realization.aps, realization.users
    idx = nearest_aps(aps, users, n_s)
    loads = np.bincount(idx.ravel(), minlength=aps.shape[0])
    members = [[] for _ in range(aps.shape[0])]
    for u, row in enumerate(idx):
        for a in row:
            members[a].append(u)
    scheduled = []
    for a, mem in enumerate(members):
        mem = np.array(mem, dtype=int)
        if mem.size > k_max:
            if evaluate is not None and evaluate in mem:
                others = mem[mem != evaluate]
                pick = rng.choice(others, size=k_max - 1, replace=False)
                mem = np.sort(np.append(pick, evaluate))
            else:
                mem = np.sort(rng.choice(mem, size=k_max, replace=False))
        scheduled.append(mem)
    if pilot_plan is None:
        pilot_plan = np.arange(users.shape[0])
    return Association(list(idx), loads, scheduled, pilot_plan, k_max)


# ---------------------------------------------------------------------------
# traditional
# ---------------------------------------------------------------------------

def _block_rng(seed, block):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def _traditional_block(args):
    cfg, block, n = args
    dep: TraditionalConfig = cfg.deployment
    rng = _block_rng(cfg.seed, block)
    region = DiskRegion(dep.r_s)
    user = sample_bpp(n, region, rng)
    aps = sample_bpp(n * dep.m, region, rng).reshape(n, dep.m, 2)
    d = np.linalg.norm(aps - user[:, None, :], axis=2)
    return sinr_traditional(d, dep.radio, dep.c_f, dep.k)


def _blocks(trials):
    return [(b, min(BLOCK, trials - b * BLOCK)) for b in range(math.ceil(trials / BLOCK))]


def _run(fn, cfg):
    jobs = [(cfg, b, n) for b, n in _blocks(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def simulate_traditional(cfg: SimConfig) -> SimResult:
    """Random user in a disk with ``M`` uniform APs; finite-network SINR per trial."""
    if cfg.kind != "traditional":
        raise TypeError("simulate_traditional needs a TraditionalConfig")
    parts = _run(_traditional_block, cfg)
    return SimResult(cfg, np.concatenate(parts))


# ---------------------------------------------------------------------------
# user-centric
# ---------------------------------------------------------------------------

def typical_user_sinr(beta_all, serving, k_sched, radio, c_f, k_max, gamma_serving=None, pilot_term=0.0):
    """SINR of the user whose gains to every AP are ``beta_all``.

    ``serving`` indexes its serving APs, ``k_sched`` their scheduled
    counts.  ``pilot_term`` is the coherent pilot-contamination power
    divided by ``rho_d N_a``.
    """
    beta_s = beta_all[serving]
    gamma = estimation_variance(beta_s, 0.0, radio) if gamma_serving is None else gamma_serving
    q = np.exp2(-c_f / np.asarray(k_sched, dtype=float))
    rho, n_a = radio.rho_d, radio.n_antennas
    num = rho * n_a / k_max * np.sum(np.sqrt(gamma * (1 - q))) ** 2
    den = rho * n_a / k_max * np.sum(gamma * q) + rho * np.sum(beta_all) + rho * n_a * pilot_term + 1.0
    return float(num / den)


def _uc_trial(cfg: SimConfig, rng):
    dep: UserCentricConfig = cfg.deployment
    region = DiskRegion(cfg.window)
    aps = sample_ppp(dep.lambda_r, region, rng)
    others = sample_ppp(dep.lambda_u, region, rng)
    users = np.vstack([[0.0, 0.0], others])  # typical user first, at the centre
    idx = nearest_aps(aps, users, dep.n_s)
    loads = np.bincount(idx.ravel(), minlength=aps.shape[0])
    serving = idx[0]
    k_sched = np.minimum(loads[serving], dep.k_max)
    radio = dep.radio
    beta_all = large_scale_gain(np.hypot(aps[:, 0], aps[:, 1]), radio)
    gamma_s, pilot_term = None, 0.0
    if cfg.pilots == "reuse":
        pil = rng.integers(cfg.n_pilots, size=users.shape[0])
        co = np.flatnonzero(pil == pil[0])[1:]
        touched = np.unique(np.concatenate([serving, idx[co].ravel()]))
        d_co = np.linalg.norm(aps[touched][:, None, :] - users[co][None, :, :], axis=2)
        co_sum = large_scale_gain(d_co, radio).sum(axis=1)
        gamma_t = estimation_variance(beta_all[touched], co_sum, radio)
        pos = {a: i for i, a in enumerate(touched)}
        gamma_s = gamma_t[[pos[a] for a in serving]]
        for u in co:
            g = gamma_t[[pos[a] for a in idx[u]]]
            pilot_term += np.sum(np.sqrt(g / dep.k_max)) ** 2
    s = typical_user_sinr(beta_all, serving, k_sched, radio, dep.fronthaul.c_f, dep.k_max, gamma_s, pilot_term)
    interior = np.hypot(aps[:, 0], aps[:, 1]) <= cfg.window - cfg.guard
    # the typical user is an added point; typical-AP statistics use the others only
    background = loads - np.bincount(serving, minlength=aps.shape[0])
    return s, loads[serving] - 1, background[interior], pilot_term


def _uc_block(args):
    cfg, block, n = args
    rng = _block_rng(cfg.seed, block)
    sinr = np.empty(n)
    tagged = np.empty((n, cfg.deployment.n_s), dtype=np.int64)
    pilot = np.empty(n)
    hist = np.zeros(1, dtype=np.int64)
    means = np.empty(n)
    m2s = np.empty(n)
    for i in range(n):
        sinr[i], tagged[i], typ, pilot[i] = _uc_trial(cfg, rng)
        h = np.bincount(typ)
        if h.size > hist.size:
            hist = np.pad(hist, (0, h.size - hist.size))
        hist[: h.size] += h
        means[i] = typ.mean()
        m2s[i] = np.mean(typ.astype(float) ** 2)
    return sinr, tagged, hist, means, pilot, m2s


def simulate_user_centric(cfg: SimConfig) -> SimResult:
    """Typical user at the window centre, PPP APs and users, ``N_s`` nearest-AP service."""
    if cfg.kind != "user_centric":
        raise TypeError("simulate_user_centric needs a UserCentricConfig")
    parts = _run(_uc_block, cfg)
    size = max(p[2].size for p in parts)
    hist = sum(np.pad(p[2], (0, size - p[2].size)) for p in parts)
    return SimResult(
        cfg,
        sinr=np.concatenate([p[0] for p in parts]),
        tagged_loads=np.concatenate([p[1] for p in parts]),
        typical_hist=hist,
        typical_trial_means=np.concatenate([p[3] for p in parts]),
        pilot_terms=np.concatenate([p[4] for p in parts]),
        typical_trial_m2=np.concatenate([p[5] for p in parts]),
    )


def simulate(cfg: SimConfig) -> SimResult:
    return simulate_traditional(cfg) if cfg.kind == "traditional" else simulate_user_centric(cfg)


__all__ = [
    "BLOCK",
    "InsufficientAps",
    "SimConfig",
    "SimResult",
    "associate_and_schedule",
    "nearest_aps",
    "simulate",
    "simulate_traditional",
    "simulate_user_centric",
    "typical_user_sinr",
]
