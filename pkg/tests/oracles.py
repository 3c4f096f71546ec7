"""Independent oracles shared by the tests (no package code on the oracle side)."""

import numpy as np
from scipy.stats import qmc


def dart_area(centers, radii, n_darts, seed=0, chunk=2**20):
    """Area common to several disks by throwing low-discrepancy darts into their joint bounding box."""
    centers = np.asarray(centers, dtype=float)
    radii = np.asarray(radii, dtype=float)
    lo = np.max(centers - radii[:, None], axis=0)
    hi = np.min(centers + radii[:, None], axis=0)
    if np.any(hi <= lo):
        return 0.0
    sob = qmc.Sobol(2, scramble=True, seed=seed)
    hits = 0
    done = 0
    m = int(np.ceil(np.log2(n_darts)))
    total = 2**m
    while done < total:
        n = min(chunk, total - done)
        pts = lo + sob.random(n) * (hi - lo)
        inside = np.ones(n, bool)
        for c, r in zip(centers, radii):
            inside &= np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1]) <= r
        hits += int(inside.sum())
        done += n
    return float(np.prod(hi - lo) * hits / total)


def ppp_drop(rng, density, radius):
    n = rng.poisson(density * np.pi * radius**2)
    r = radius * np.sqrt(rng.random(n))
    t = 2 * np.pi * rng.random(n)
    return np.column_stack([r * np.cos(t), r * np.sin(t)])


def fading_sinr(beta, serving, scheduled, pilots, user, radio, c_f, k_max, n_draws, seed=0, chunk=50_000):
    """Use-and-then-forget SINR of ``user`` from simulated small-scale fading.

    Channels are Rayleigh with gains ``beta[l, u]``; each AP forms MMSE
    estimates from a received pilot, applies normalized conjugate
    beamforming to the users in ``scheduled[l]`` and adds independent
    per-AP compression noise.  Every AP must schedule the same number of
    users so that all symbols share one compression ratio.
    """
    rng = np.random.default_rng(seed)
    beta = np.asarray(beta, float)
    n_ap, n_u = beta.shape
    n_a = radio.n_antennas
    tp = radio.tau_p * radio.rho_p
    loads = {len(s) for s in scheduled}
    assert len(loads) == 1
    delta = 2.0 ** (-c_f / loads.pop())
    pilots = np.asarray(pilots)
    mean_acc = 0.0
    sq_sym = np.zeros(n_u)
    sq_noise = 0.0
    done = 0
    while done < n_draws:
        n = min(chunk, n_draws - done)
        shape = (n, n_ap, n_u, n_a)
        g = np.sqrt(beta[None, :, :, None] / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        coef = np.zeros((n, n_ap, n_u), complex)
        for p in np.unique(pilots):
            group = np.flatnonzero(pilots == p)
            w = rng.standard_normal((n, n_ap, n_a)) + 1j * rng.standard_normal((n, n_ap, n_a))
            y = np.sqrt(tp) * g[:, :, group, :].sum(axis=2) + w / np.sqrt(2)
            denom = 1.0 + tp * beta[:, group].sum(axis=1)
            for i in group:
                c = np.sqrt(tp) * beta[:, i] / denom
                gamma = np.sqrt(tp) * beta[:, i] * c
                g_hat = c[None, :, None] * y
                a = np.sqrt(radio.rho_d / (k_max * n_a * gamma))[None, :]
                coef[:, :, i] = a * np.einsum("nla,nla->nl", g[:, :, user, :], np.conj(g_hat))
        mask = np.zeros((n_ap, n_u), bool)
        for l, s in enumerate(scheduled):
            mask[l, list(s)] = True
        coef = coef * mask[None]
        per_sym = coef.sum(axis=1)
        mean_acc += per_sym[:, user].sum()
        sq_sym += (np.abs(per_sym) ** 2).sum(axis=0)
        sq_noise += (np.abs(coef) ** 2).sum()
        done += n
    mean = mean_acc / n_draws
    power = (1 - delta) * sq_sym.sum() / n_draws + delta * sq_noise / n_draws
    desired = (1 - delta) * abs(mean) ** 2
    assert set(serving) == {l for l in range(n_ap) if mask[l, user]}
    return desired / (power - desired + 1.0)
