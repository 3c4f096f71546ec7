"""Acceptance criteria 1-8.

Run with ``pytest tests/test_acceptance.py``; the terminal summary prints
one PASS/FAIL line per criterion.  Criteria 7(b) and 7(d) are expected to
fail: see the notes on those tests.
"""

import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from oracles import dart_area
from scipy import stats

from cellfree import cli
from cellfree.coverage import UserCentricAnalytic, load_model
from cellfree.geometry import DiskRegion, NetworkRealization, aoi2, aoi3_polar
from cellfree.load import (
    load_pmf,
    tagged_load_moments,
    total_variation,
    typical_load_moments,
)
from cellfree.propagation import RadioParams, compression_split, large_scale_gain, linear_to_db, scnr
from cellfree.sim import SimConfig, simulate_user_centric
from cellfree.sinr import Association, sinr_traditional, sinr_user_centric, term_variances
from cellfree.propagation import FronthaulParams

LAM = 1e-4


def _spec(name, **overrides):
    text, source = cli._read_spec(name)
    spec = cli.parse_spec(text, source)
    for k, v in overrides.items():
        setattr(spec, k, v)
    return spec


def _series(rows, value):
    sel = [r for r in rows if r[1] == value]
    return np.array([r[2] for r in sel]), np.array([r[3] for r in sel]), np.array([r[5] for r in sel])


# --------------------------------------------------------------------------- 1
def test_c1_exact_constants(acceptance, uc_sim):
    c_f = np.linspace(0.5, 120, 60)[:, None]
    k = np.arange(1, 41)[None, :]
    sig, noise = compression_split(c_f, k)
    split_err = float(np.max(np.abs(sig + noise - 1)))
    scnr_err = float(np.max(np.abs(scnr(c_f, k) / (2.0 ** (c_f / k) - 1) - 1)))
    acceptance(1, "split sums to 1", split_err <= 1e-12, f"{split_err:.1e}")
    acceptance(1, "SCNR closed form", scnr_err <= 1e-12, f"{scnr_err:.1e}")

    radio = RadioParams.from_db(rho_d_db=100)
    edge = float(linear_to_db(radio.rho_d * large_scale_gain(500.0, radio)))
    acceptance(1, "edge SNR", abs(edge - 0.1381) <= 1e-3, f"{edge:.4f} dB")

    m1 = typical_load_moments(LAM, LAM, 5).m1
    acceptance(1, "E[K_o] closed form", abs(m1 - 5) <= 5e-12, f"{m1!r}")
    emp, se = uc_sim.typical_mean()
    acceptance(1, "E[K_o] empirical", abs(emp - 5) <= 0.1, f"{emp:.4f} +- {se:.4f}")
    assert split_err <= 1e-12 and scnr_err <= 1e-12
    assert abs(edge - 0.1381) <= 1e-3
    assert abs(m1 - 5) <= 5e-12 and abs(emp - 5) <= 0.1


# --------------------------------------------------------------------------- 2
def test_c2_typical_second_moment(acceptance):
    ok = True
    for n_s in (1, 3, 5):
        m = typical_load_moments(LAM, LAM, n_s)
        ref = m.m1**2 + 1.2802 * n_s
        rel = abs(m.m2 / ref - 1)
        good = rel <= 0.02
        if n_s == 1:
            # 1.2802 is the 4-digit rounding of 1 + Voronoi area variance
            good = abs(m.m2 - ref) <= 5e-5 + 1e-6 * ref
        acceptance(2, f"N_s={n_s}", good, f"m2={m.m2:.5f} vs {ref:.4f}")
        ok &= good
    assert ok


# --------------------------------------------------------------------------- 3
def test_c3_load_pmf_fit(acceptance, uc_sim):
    assert uc_sim.sinr.size >= 10_000
    typ = total_variation(load_pmf(typical_load_moments(LAM, LAM, 5)), uc_sim.typical_pmf())
    tag = total_variation(load_pmf(tagged_load_moments(1, LAM, LAM, 5)), uc_sim.tagged_pmf(1))
    acceptance(3, "typical AP TV", typ <= 0.05, f"{typ:.4f}")
    acceptance(3, "rank-1 tagged AP TV", tag <= 0.05, f"{tag:.4f}")
    assert typ <= 0.05 and tag <= 0.05


# --------------------------------------------------------------------------- 4
def _random_configs(rng, n):
    """Configurations whose triple overlap is at least 5% of the smallest disk.

    Thinner slivers are excluded: a dart oracle on them cannot resolve 1e-3
    relative error at these dart counts.  Degenerate overlaps are covered by
    the bound and limit tests in test_geometry.
    """
    out = []
    while len(out) < n:
        r_o = rng.uniform(0.2, 2.0)
        d_x, d_y = rng.uniform(0.1, 3.0, 2)
        v_x, v_y = rng.uniform(0, 2 * np.pi, 2)
        ap = np.array([r_o, 0.0])
        x = d_x * np.array([np.cos(v_x), np.sin(v_x)])
        y = d_y * np.array([np.cos(v_y), np.sin(v_y)])
        r_x, r_y = np.hypot(*(x - ap)), np.hypot(*(y - ap))
        if aoi3_polar(r_o, d_x, d_y, v_x, v_y) >= 0.05 * np.pi * min(r_o, r_x, r_y) ** 2:
            out.append((r_o, d_x, d_y, v_x, v_y, x, y, r_x, r_y))
    return out


def test_c4_geometry_vs_darts(acceptance):
    rng = np.random.default_rng(2024)
    configs = _random_configs(rng, 100)
    worst2 = worst3 = 0.0
    for i, (r_o, d_x, d_y, v_x, v_y, x, y, r_x, r_y) in enumerate(configs):
        darts = 2**24 if i < 20 else 2**20
        a2 = float(aoi2(r_o, d_x, v_x))
        a3 = float(aoi3_polar(r_o, d_x, d_y, v_x, v_y))
        t2 = dart_area([[0, 0], x], [r_o, r_x], darts, seed=i)
        t3 = dart_area([[0, 0], x, y], [r_o, r_x, r_y], darts, seed=10_000 + i)
        worst2 = max(worst2, abs(a2 - t2) / t2)
        worst3 = max(worst3, abs(a3 - t3) / t3)
    acceptance(4, "aoi2", worst2 <= 1e-3, f"worst rel err {worst2:.1e} over 100")
    acceptance(4, "aoi3", worst3 <= 1e-3, f"worst rel err {worst3:.1e} over 100")
    assert worst2 <= 1e-3 and worst3 <= 1e-3


# --------------------------------------------------------------------------- 5
def test_c5_finite_network_vs_simulation(acceptance):
    spec = _spec("fig2_left", trials=10_000)
    assert len(spec.grid) == 30 and spec.series == [5.0, 15.0, 25.0]
    rows, _ = cli.evaluate(spec)
    ok = True
    for t_s in spec.series:
        _, a, s = _series(rows, t_s)
        gap = float(np.max(np.abs(a - s)))
        acceptance(5, f"T_s={t_s:g} dB", gap <= 0.03, f"max gap {gap:.4f}")
        ok &= gap <= 0.03
    assert ok


# --------------------------------------------------------------------------- 6
def test_c6_user_centric_vs_simulation(acceptance, uc_config, uc_sim):
    grid = np.linspace(0.25, 4.0, 20)
    ana = UserCentricAnalytic(uc_config, load_model(uc_config)).coverage(grid)
    emp = uc_sim.coverage(grid).probabilities
    gap = float(np.max(np.abs(ana - emp)))
    acceptance(6, "T_s=15 dB, C_f=45", gap <= 0.05, f"max gap {gap:.4f}; coverage {ana[0]:.2f}..{ana[-1]:.2f}")
    assert gap <= 0.05


# --------------------------------------------------------------------------- 7
def _quasi_concave(y):
    # no point lies strictly below a larger value on each side
    left = np.maximum.accumulate(y)
    right = np.maximum.accumulate(y[::-1])[::-1]
    return bool(np.all(y >= np.minimum(left, right) - 1e-12 * np.abs(y).max()))


def test_c7a_sum_rate_scan(acceptance):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # K > M N_a / 2 on part of the grid
        rows, _ = cli.evaluate(_spec("fig2_right"))
    argmax, concave = [], []
    for c_f in (10.0, 20.0, 40.0):
        k, a, _ = _series(rows, c_f)
        argmax.append(int(k[np.argmax(a)]))
        concave.append(_quasi_concave(a))
    ok = all(concave) and argmax == sorted(argmax)
    acceptance(7, "(a) sum rate", ok, f"argmax K* = {argmax}, quasi-concave {concave}")
    assert ok


def test_c7b_mean_rate_toward_collocated(acceptance):
    # Expected to fail at the collocated end.  With a single AP placed uniformly
    # in the disk (M=1, N_a=128), users far from it are SNR-limited at
    # rho_d = 100 dB and alpha = 3.7, so the mean rate drops below M=2.  The
    # simulation path reproduces the drop (about 1.99 vs 2.18 bits/s/Hz).
    spec = _spec("fig4", mode="analytic", series=[100.0])
    rows, _ = cli.evaluate(spec)
    n_a, a, _ = _series(rows, 100.0)
    ok = bool(np.all(np.diff(a) >= 0))
    acceptance(7, "(b) mean rate vs N_a", ok, ", ".join(f"{int(n)}:{v:.2f}" for n, v in zip(n_a, a)))
    assert ok


def test_c7c_interior_optimum_in_n_s(acceptance):
    rows, _ = cli.evaluate(_spec("fig7_right", mode="analytic"))
    n_s, a, _ = _series(rows, "")
    best = int(n_s[np.argmax(a)])
    ok = n_s[0] < best < n_s[-1]
    acceptance(7, "(c) coverage vs N_s", ok, f"argmax N_s={best}; " + ", ".join(f"{v:.3f}" for v in a))
    assert ok


def test_c7d_required_fronthaul_linear(acceptance):
    # Expected to fail.  Required C_f is k* log2(1 + T_s) with k* the 0.95
    # quantile of an integer load, so the curve is a staircase:
    # k* = 3, 5, 7, 8, 10, 11, 12, 14 for N_s = 1..8 at every T_s, and the
    # empirical pmfs give the same k*.  The linear fit reaches R^2 = 0.9895.
    rows, _ = cli.evaluate(_spec("fig6_right", mode="analytic", series=[15.0]))
    n_s, a, _ = _series(rows, 15.0)
    r2 = stats.linregress(n_s, a).rvalue ** 2
    k_star = np.round(a / math.log2(1 + 10**1.5)).astype(int).tolist()
    acceptance(7, "(d) required C_f linear in N_s", r2 > 0.99, f"R^2={r2:.5f}, k*={k_star}")
    assert r2 > 0.99


# --------------------------------------------------------------------------- 8
def test_c8_cross_path_identities(acceptance, tmp_path, uc_config):
    rng = np.random.default_rng(8)
    radio = RadioParams.from_db(n_antennas=4, rho_d_db=100, rho_p_db=100, tau_p=80)
    worst_red = worst_sum = 0.0
    for _ in range(100):
        m, k = rng.integers(1, 40), rng.integers(1, 30)
        c_f = float(rng.uniform(1, 100))
        region = DiskRegion(500.0)
        net = NetworkRealization(rng.uniform(-350, 350, (m, 2)), rng.uniform(-350, 350, (k, 2)), region)
        assoc = Association.full(m, k)
        fh = FronthaulParams(c_f=c_f, t_s=1.0, k_max=int(k))
        u = int(rng.integers(k))
        trad = sinr_traditional(net.distances()[:, u], radio, c_f, int(k))
        uc = sinr_user_centric(u, net, assoc, radio, fh)
        tv = term_variances(u, net, assoc, radio, fh).sinr()
        worst_red = max(worst_red, abs(trad / uc - 1))
        worst_sum = max(worst_sum, abs(tv / uc - 1))
    acceptance(8, "reduction", worst_red <= 1e-12, f"{worst_red:.1e}")
    acceptance(8, "term sum", worst_sum <= 1e-12, f"{worst_sum:.1e}")

    cfg = SimConfig(uc_config, trials=300, seed=77)
    a, b = simulate_user_centric(cfg), simulate_user_centric(cfg)
    a.to_csv(tmp_path / "a.csv")
    b.to_csv(tmp_path / "b.csv")
    replay = (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes() and \
        a.sinr.tobytes() == b.sinr.tobytes()
    acceptance(8, "replay", replay)
    assert worst_red <= 1e-12 and worst_sum <= 1e-12 and replay
