"""Path loss, MMSE estimate quality and the fronthaul compression split."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0) if np.ndim(db) else 10.0 ** (db / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class RadioParams:
    """Radio-side constants, all linear (use :meth:`from_db` for dB inputs)."""

    n_antennas: int = 4
    rho_d: float = 1e10
    rho_p: float = 1e10
    tau_p: int = 80
    alpha: float = 3.7
    d_ref: float = 1.0

    def __post_init__(self):
        if self.n_antennas < 1 or self.tau_p < 1:
            raise ValueError("n_antennas and tau_p must be >= 1")
        if min(self.rho_d, self.rho_p, self.alpha, self.d_ref) <= 0:
            raise ValueError("rho_d, rho_p, alpha and d_ref must be positive")

    @classmethod
    def from_db(cls, n_antennas=4, rho_d_db=100.0, rho_p_db=100.0, tau_p=80, alpha=3.7, d_ref=1.0):
        return cls(n_antennas, db_to_linear(rho_d_db), db_to_linear(rho_p_db), tau_p, alpha, d_ref)

    @property
    def pilot_gain(self) -> float:
        """tau_p * rho_p."""
        return self.tau_p * self.rho_p


class InvalidTarget(ValueError):
    pass


class NoLoad(ValueError):
    pass


@dataclass(frozen=True)
class FronthaulParams:
    c_f: float
    t_s: float | None = None
    k_max: int | None = None

    def __post_init__(self):
        if not self.c_f > 0:
            raise ValueError("c_f must be positive")
        if self.k_max is None:
            if self.t_s is None:
                raise ValueError("need t_s or k_max")
            object.__setattr__(self, "k_max", max_scheduled_users(self.c_f, self.t_s))
        if self.k_max < 1:
            raise ValueError(f"fronthaul cap yields k_max={self.k_max}; need >= 1")

    @classmethod
    def from_target_db(cls, c_f, t_s_db):
        return cls(c_f=c_f, t_s=db_to_linear(t_s_db))


def path_loss(d, params: RadioParams | None = None):
    """Bounded power-law loss: ``(d/d_ref)^alpha`` beyond ``d_ref``, 1 inside."""
    alpha = 3.7 if params is None else params.alpha
    d_ref = 1.0 if params is None else params.d_ref
    d = np.asarray(d, dtype=float)
    out = np.where(d > d_ref, (np.maximum(d, d_ref) / d_ref) ** alpha, 1.0)
    return out if out.ndim else float(out)


def large_scale_gain(d, params: RadioParams | None = None):
    """beta = 1 / l(d)."""
    return 1.0 / path_loss(d, params)


def estimation_variance(beta_k, copilot_beta_sum, params: RadioParams):
    """MMSE estimate variance gamma for one AP-user link.

    ``copilot_beta_sum`` collects the gains of the *other* users sharing
    the pilot; pass 0 for orthogonal pilots.
    """
    beta_k = np.asarray(beta_k, dtype=float)
    g = params.pilot_gain
    out = g * beta_k**2 / (1.0 + g * (beta_k + np.asarray(copilot_beta_sum, dtype=float)))
    return out if out.ndim else float(out)


def compression_split(c_f, k):
    """Signal and compression-noise powers for an AP forwarding ``k`` streams.

    Returns ``(rho_q, rho_qtilde)`` with unit total power; the SCNR is
    ``rho_q / rho_qtilde = 2**(c_f / k) - 1``.
    """
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr <= 0):
        raise NoLoad("AP with zero load has nothing to compress")
    noise = np.exp2(-np.asarray(c_f, dtype=float) / k_arr)
    signal = 1.0 - noise
    if noise.ndim == 0:
        return float(signal), float(noise)
    return signal, noise


def scnr(c_f, k):
    return np.expm1(np.log(2.0) * np.asarray(c_f, dtype=float) / np.asarray(k, dtype=float))


def max_scheduled_users(c_f: float, t_s: float) -> int:
    """Largest K with ``K * log2(1 + t_s) <= c_f``."""
    if not t_s > 0:
        raise InvalidTarget(f"SCNR target must be positive, got {t_s}")
    per_user = math.log2(1.0 + t_s)
    ratio = c_f / per_user
    k = math.floor(ratio)
    # c_f built as k*log2(1+t_s) can land a hair below the integer
    if math.isclose(ratio, k + 1, rel_tol=1e-12):
        k += 1
    return k
