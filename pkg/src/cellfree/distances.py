"""Distance distributions for uniform points in a disk and for PPP order statistics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special, stats

_ACOS_TOL = 1e-12


class EmptySupport(ValueError):
    pass


def _safe_arccos(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1 + _ACOS_TOL):
        # outside the rounding band: caller evaluated a branch off its support
        x = np.where(np.abs(x) > 1 + _ACOS_TOL, np.nan, x)
    return np.arccos(np.clip(x, -1.0, 1.0))


@dataclass(frozen=True)
class DistanceLaw:
    """A distance distribution on ``[lo, hi]``.

    ``pdf`` and ``cdf`` accept arrays and return 0 / clipped values off the
    support.  ``ppf`` and ``sample`` invert the cdf by bisection unless a
    closed-form inverse is supplied.
    """

    pdf_fn: Callable
    cdf_fn: Callable
    lo: float
    hi: float
    ppf_fn: Callable | None = None

    def pdf(self, d):
        d = np.asarray(d, dtype=float)
        inside = (d >= self.lo) & (d <= self.hi)
        out = np.where(inside, self.pdf_fn(np.clip(d, self.lo, self.hi)), 0.0)
        return out if out.ndim else float(out)

    def cdf(self, d):
        d = np.asarray(d, dtype=float)
        out = np.where(d <= self.lo, 0.0,
                       np.where(d >= self.hi, 1.0, self.cdf_fn(np.clip(d, self.lo, self.hi))))
        out = np.clip(out, 0.0, 1.0)
        return out if out.ndim else float(out)

    def ppf(self, q, tol: float = 1e-9):
        q = np.asarray(q, dtype=float)
        if self.ppf_fn is not None:
            out = self.ppf_fn(q)
            return out if np.ndim(out) else float(out)
        lo = np.full(q.shape, self.lo)
        hi = np.full(q.shape, self.hi)
        width = self.hi - self.lo
        n_iter = int(np.ceil(np.log2(1.0 / tol))) + 1
        for _ in range(n_iter):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < q
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= tol * width):
                break
        out = 0.5 * (lo + hi)
        return out if out.ndim else float(out)

    def sample(self, rng: np.random.Generator, size=None):
        return self.ppf(rng.random(size))

    def mean(self) -> float:
        from .numerics import integrate_1d

        return integrate_1d(lambda d: d * self.pdf(d), self.lo, self.hi,
                            points=self._breaks()).value

    def _breaks(self):
        return getattr(self, "_kinks", ())


def _with_kinks(law: DistanceLaw, kinks):
    object.__setattr__(law, "_kinks", tuple(k for k in kinks if law.lo < k < law.hi))
    return law


def law_center_distance(r_s: float) -> DistanceLaw:
    """Distance of a uniform point in a disk of radius ``r_s`` from its centre."""
    if not r_s > 0:
        raise ValueError("r_s must be positive")
    return DistanceLaw(
        pdf_fn=lambda r: 2.0 * r / r_s**2,
        cdf_fn=lambda r: (r / r_s) ** 2,
        lo=0.0,
        hi=float(r_s),
        ppf_fn=lambda q: r_s * np.sqrt(np.clip(q, 0.0, 1.0)),
    )


def _random_ap_parts(r_o, r_s):
    def theta_star(d):
        with np.errstate(invalid="ignore", divide="ignore"):
            th = _safe_arccos((d**2 + r_o**2 - r_s**2) / (2.0 * r_o * d))
        # d -> 0 only reachable when r_o == r_s, where the limit is pi/2
        return np.where(d > 0, th, 0.5 * np.pi)

    def phi_star(d):
        return _safe_arccos((r_s**2 + r_o**2 - d**2) / (2.0 * r_o * r_s))

    inner = r_s - r_o

    def cdf(d):
        d = np.asarray(d, dtype=float)
        if r_o == 0:
            return (d / r_s) ** 2
        th = theta_star(np.maximum(d, inner))
        ph = phi_star(np.maximum(d, inner))
        outer = (d**2 * (th - 0.5 * np.sin(2 * th)) / (np.pi * r_s**2)
                 + (ph - 0.5 * np.sin(2 * ph)) / np.pi)
        return np.where(d < inner, (d / r_s) ** 2, outer)

    def pdf(d):
        d = np.asarray(d, dtype=float)
        if r_o == 0:
            return 2.0 * d / r_s**2
        th = theta_star(np.maximum(d, inner))
        return np.where(d < inner, 2.0 * d / r_s**2, 2.0 * d * th / (np.pi * r_s**2))

    return pdf, cdf


def law_user_to_random_ap(r_o: float, r_s: float) -> DistanceLaw:
    """Distance from a user at radius ``r_o`` to a uniform AP in the disk of radius ``r_s``."""
    if not 0 <= r_o <= r_s:
        raise ValueError("need 0 <= r_o <= r_s")
    pdf, cdf = _random_ap_parts(r_o, r_s)
    law = DistanceLaw(pdf, cdf, 0.0, float(r_s + r_o))
    return _with_kinks(law, [r_s - r_o])


def law_nearest_of_m(r_o: float, r_s: float, m: int) -> DistanceLaw:
    """Distance from the user to the nearest of ``m`` uniform APs."""
    if m < 1:
        raise ValueError("m must be >= 1")
    base = law_user_to_random_ap(r_o, r_s)

    def cdf(d):
        return -np.expm1(m * np.log1p(-np.minimum(base.cdf(d), 1.0)))

    def pdf(d):
        surv = np.maximum(1.0 - base.cdf(d), 0.0)
        return m * base.pdf(d) * surv ** (m - 1)

    return _with_kinks(DistanceLaw(pdf, cdf, base.lo, base.hi), base._breaks())


def law_truncated_remaining(r_o: float, r_s: float, d_oo: float) -> DistanceLaw:
    """Distance to a uniform AP conditioned to lie beyond ``d_oo`` from the user."""
    base = law_user_to_random_ap(r_o, r_s)
    if not 0 <= d_oo < base.hi:
        raise EmptySupport(f"d_oo={d_oo} outside [0, {base.hi})")
    mass = 1.0 - base.cdf(d_oo)
    if mass <= 0:
        raise EmptySupport("no probability mass beyond d_oo")

    def pdf(d):
        return base.pdf(d) / mass

    def cdf(d):
        return (base.cdf(d) - (1.0 - mass)) / mass

    return _with_kinks(DistanceLaw(pdf, cdf, float(d_oo), base.hi), base._breaks())


def law_ppp_order(n_s: int, lambda_r: float) -> DistanceLaw:
    """Distance to the ``n_s``-th nearest point of a PPP of density ``lambda_r``.

    ``pi * lambda_r * D^2`` is Gamma(n_s, 1); the upper end of the support is
    put where the survival probability drops below 1e-15.
    """
    if n_s < 1 or not lambda_r > 0:
        raise ValueError("need n_s >= 1 and lambda_r > 0")
    c = np.pi * lambda_r
    hi = float(np.sqrt(stats.gamma.isf(1e-15, n_s) / c))

    def pdf(d):
        d = np.asarray(d, dtype=float)
        with np.errstate(divide="ignore"):
            logp = (np.log(2.0) - special.gammaln(n_s) + n_s * np.log(c)
                    + (2 * n_s - 1) * np.log(d) - c * d**2)
        return np.exp(logp)

    return DistanceLaw(
        pdf_fn=pdf,
        cdf_fn=lambda d: special.gammainc(n_s, c * np.asarray(d) ** 2),
        lo=0.0,
        hi=hi,
        ppf_fn=lambda q: np.sqrt(special.gammaincinv(n_s, np.clip(q, 0.0, 1.0)) / c),
    )


def conditional_inner_law(d_ons: float) -> DistanceLaw:
    """Distance of one of the closer points given the outermost serving distance ``d_ons``."""
    if not d_ons > 0:
        raise ValueError("d_ons must be positive")
    return law_center_distance(d_ons)
