# A finite cell-free network: M APs and K users dropped uniformly in a
# 500 m disk, every AP serving every user.  The fronthaul budget per AP is
# C_f = K log2(1 + T_s), so T_s sets how much compression noise rides on
# each user's symbol.

import numpy as np

from cellfree import (RadioParams, SimConfig, TraditionalAnalytic, TraditionalConfig, db_to_linear,
                      simulate_traditional)

radio = RadioParams.from_db(n_antennas=4, rho_d_db=100, rho_p_db=100, tau_p=80)
grid = np.linspace(0.25, 3.0, 12)

for t_s_db in (5, 15, 25):
    c_f = 20 * np.log2(1 + db_to_linear(t_s_db))
    cfg = TraditionalConfig(m=32, k=20, r_s=500.0, radio=radio, c_f=c_f)
    ana = TraditionalAnalytic(cfg)
    sim = simulate_traditional(SimConfig(cfg, trials=3000, seed=2))
    a, s = ana.coverage(grid), sim.coverage(grid).probabilities
    print(f"T_s = {t_s_db} dB  (C_f = {c_f:.1f} bits/s/Hz)")
    for t, pa, ps in zip(grid, a, s):
        print(f"   T_r={t:4.2f}  analytic {pa:.3f}  simulated {ps:.3f}")
    print(f"   mean rate {ana.mean_rate():.3f} bits/s/Hz\n")

# Fixed fronthaul, varying K: more users share the same C_f, so each
# gets a coarser quantizer, but the sum rate first grows.
cfg = TraditionalConfig(32, 1, 500.0, radio, 20.0)
for k in (1, 5, 10, 20, 40):
    from dataclasses import replace

    r = TraditionalAnalytic(replace(cfg, k=k)).mean_rate()
    print(f"K={k:2d}: per-user {r:.3f}, sum {k * r:.2f} bits/s/Hz")
