"""Conditional SINR of a user under conjugate beamforming and compressed fronthaul.

:func:`sinr_user_centric` is the general expression (arbitrary serving
sets, per-AP loads, pilot reuse).  :func:`sinr_traditional` is its
specialisation to a finite network where every AP serves every user with
orthogonal pilots.  :func:`term_variances` breaks the general expression
into the seven interference/noise powers it is made of.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .geometry import NetworkRealization
from .propagation import FronthaulParams, RadioParams, estimation_variance, large_scale_gain


@dataclass
class Association:
    """Who serves whom in one realization.

    serving_sets
        Per user, AP indices ordered nearest first.
    loads
        Per AP, the number of users that list it in their serving set.
    scheduled
        Per AP, the indices of users it schedules (at most ``k_max``).
    pilot_plan
        Per user, a pilot index; equal indices share a pilot.
    """

    serving_sets: list
    loads: np.ndarray
    scheduled: list
    pilot_plan: np.ndarray
    k_max: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.loads = np.asarray(self.loads, dtype=int)
        self.pilot_plan = np.asarray(self.pilot_plan, dtype=int)

    @classmethod
    def full(cls, n_aps: int, n_users: int, pilot_plan=None):
        """Every AP serves every user; ``k_max`` equals the number of users."""
        aps = np.arange(n_aps)
        users = np.arange(n_users)
        if pilot_plan is None:
            pilot_plan = users.copy()
        return cls(
            serving_sets=[aps.copy() for _ in users],
            loads=np.full(n_aps, n_users),
            scheduled=[users.copy() for _ in aps],
            pilot_plan=pilot_plan,
            k_max=n_users,
        )

    def scheduled_count(self, ap: int) -> int:
        return len(self.scheduled[ap])


class TermVariances(NamedTuple):
    desired: float
    beamforming_uncertainty: float
    compression: float
    estimation_error: float
    intra_cluster: float
    out_of_cluster: float
    pilot_contamination: float

    def sinr(self) -> float:
        rest = sum(self[1:])
        return self.desired / (rest + 1.0)


def _link_state(user_index, realization, assoc, radio):
    beta = large_scale_gain(realization.distances(), radio)  # (aps, users)
    pilots = assoc.pilot_plan
    copilots = np.flatnonzero((pilots == pilots[user_index]) & (np.arange(len(pilots)) != user_index))
    copilot_sum = beta[:, copilots].sum(axis=1)
    gamma = estimation_variance(beta[:, user_index], copilot_sum, radio)
    return beta[:, user_index], gamma, copilots


def _serving(user_index, assoc):
    serving = np.asarray(assoc.serving_sets[user_index], dtype=int)
    for ap in serving:
        if user_index not in assoc.scheduled[ap]:
            raise ValueError(f"user {user_index} is not scheduled at serving AP {ap}")
    k_eff = np.array([assoc.scheduled_count(ap) for ap in serving], dtype=float)
    return serving, k_eff


def term_variances(user_index: int, realization: NetworkRealization, assoc: Association,
                   radio: RadioParams, fh: FronthaulParams) -> TermVariances:
    """Powers of the desired signal and the six impairment terms.

    The intra-cluster and out-of-cluster interference are returned at their
    upper bounds (every AP schedules ``k_max`` users), which is what makes
    ``TermVariances.sinr()`` coincide with :func:`sinr_user_centric`.  The
    out-of-cluster bound uses coefficient 1 because a non-serving AP may
    schedule ``k_max`` users none of which is the evaluated one.  The
    compression term carries ``N_a + 1``; the extra unit is cancelled by
    the beamforming-uncertainty and estimation-error terms.
    """
    serving, k_eff = _serving(user_index, assoc)
    beta, gamma, copilots = _link_state(user_index, realization, assoc, radio)
    if serving.size == 0:
        return TermVariances(0.0, 0.0, 0.0, 0.0, 0.0, float(radio.rho_d * beta.sum()), 0.0)
    rho, n_a, kmax = radio.rho_d, radio.n_antennas, assoc.k_max
    g_s, b_s = gamma[serving], beta[serving]
    noise = np.exp2(-fh.c_f / k_eff)
    signal = 1.0 - noise
    t1 = rho * n_a * np.sum(np.sqrt(g_s * signal / kmax)) ** 2
    t2 = rho * np.sum(g_s * signal) / kmax
    t3 = rho * (n_a + 1) * np.sum(g_s * noise) / kmax
    t4 = rho * np.sum(b_s - g_s) / kmax
    t5 = rho * (kmax - 1) / kmax * np.sum(b_s)
    mask = np.ones(beta.size, bool)
    mask[serving] = False
    t6 = rho * np.sum(beta[mask])
    t7 = rho * n_a * _pilot_coherent(gamma, copilots, assoc, kmax)
    return TermVariances(*(float(t) for t in (t1, t2, t3, t4, t5, t6, t7)))


def _pilot_coherent(gamma, copilots, assoc, kmax):
    total = 0.0
    for i in copilots:
        aps_i = np.asarray(assoc.serving_sets[i], dtype=int)
        if aps_i.size:
            total += np.sum(np.sqrt(gamma[aps_i] / kmax)) ** 2
    return total


def sinr_user_centric(user_index: int, realization: NetworkRealization, assoc: Association,
                      radio: RadioParams, fh: FronthaulParams) -> float:
    """Achievable-rate SINR of one user, conditioned on all locations.

    Compression at AP ``l`` uses the number of users it actually schedules.
    A user with no serving AP gets 0.
    """
    serving, k_eff = _serving(user_index, assoc)
    if serving.size == 0:
        return 0.0
    beta, gamma, copilots = _link_state(user_index, realization, assoc, radio)
    rho, n_a, kmax = radio.rho_d, radio.n_antennas, assoc.k_max
    noise = np.exp2(-fh.c_f / k_eff)
    g_s = gamma[serving]
    num = rho * n_a * np.sum(np.sqrt(g_s * (1.0 - noise) / kmax)) ** 2
    den = (rho * n_a * np.sum(g_s * noise) / kmax
           + rho * np.sum(beta)
           + rho * n_a * _pilot_coherent(gamma, copilots, assoc, kmax)
           + 1.0)
    return float(num / den)


def sinr_traditional(distances, radio: RadioParams, c_f: float, n_users: int):
    """SINR when all APs serve all ``n_users`` users with orthogonal pilots.

    ``distances`` holds user-to-AP distances on its last axis; any leading
    axes (e.g. independent drops) are broadcast.
    """
    if n_users < 1:
        raise ValueError("need at least one user")
    beta = large_scale_gain(np.asarray(distances, dtype=float), radio)
    gamma = estimation_variance(beta, 0.0, radio)
    return sinr_from_sums(np.sum(np.sqrt(gamma), -1), np.sum(gamma, -1), np.sum(beta, -1),
                          radio, c_f, n_users)


def sinr_from_sums(sum_sqrt_gamma, sum_gamma, sum_beta, radio, c_f, n_users):
    """Finite-network SINR expressed through its three distance sums."""
    scale = radio.rho_d * radio.n_antennas / n_users
    noise = np.exp2(-c_f / n_users)
    num = scale * (1.0 - noise) * np.asarray(sum_sqrt_gamma) ** 2
    den = scale * noise * np.asarray(sum_gamma) + radio.rho_d * np.asarray(sum_beta) + 1.0
    out = num / den
    return out if np.ndim(out) else float(out)
