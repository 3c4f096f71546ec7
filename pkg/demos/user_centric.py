# User-centric service on an infinite network: each user is served by its
# N_s nearest APs, and each AP schedules at most K_max users, the number
# its fronthaul can carry at SCNR target T_s.

import numpy as np

from cellfree import (FronthaulParams, RadioParams, SimConfig, UserCentricAnalytic, UserCentricConfig,
                      load_model, required_fronthaul, simulate_user_centric, typical_load_moments, load_pmf,
                      db_to_linear)

lam = 1e-4
radio = RadioParams.from_db(n_antennas=10, rho_d_db=100, rho_p_db=100, tau_p=80)
fh = FronthaulParams.from_target_db(45.0, 15.0)
print(f"C_f=45 at T_s=15 dB lets an AP schedule K_max={fh.k_max} users")

cfg = UserCentricConfig(lam, lam, 5, radio, fh)
loads = load_model(cfg, budget=2**16)
ana = UserCentricAnalytic(cfg, loads, budget=2**16)
sim = simulate_user_centric(SimConfig(cfg, trials=2000, seed=3))

grid = np.linspace(0.25, 4.0, 10)
p, se = ana.coverage_with_error(grid)
emp = sim.coverage(grid)
for t, a, e, s, es in zip(grid, p, se, emp.probabilities, emp.stderr):
    print(f"T_r={t:4.2f}  analytic {a:.3f} +- {e:.3f}   simulated {s:.3f} +- {es:.3f}")

# Dimensioning: fronthaul needed so that 95% of APs meet the SCNR target.
t_s = db_to_linear(15.0)
for n_s in range(1, 9):
    pmf = load_pmf(typical_load_moments(lam, lam, n_s))
    print(f"N_s={n_s}: C_f >= {required_fronthaul(t_s, pmf):5.1f} bits/s/Hz")
