# How many users does an access point carry when every user picks its N_s
# nearest APs?  This walk-through computes the load moments analytically,
# fits a negative binomial, and checks it against a Monte Carlo drop.

import numpy as np

from cellfree import (FronthaulParams, RadioParams, SimConfig, UserCentricConfig, load_pmf,
                      simulate_user_centric, tagged_load_moments, total_variation, typical_load_moments)

lam = 1e-4  # one AP and one user per 10^4 m^2

# A randomly chosen AP: its mean load is N_s times the density ratio, and the
# second moment is close to m1^2 + 1.28 N_s.
for n_s in (1, 3, 5):
    m = typical_load_moments(lam, lam, n_s)
    print(f"N_s={n_s}: E[K]={m.m1:.3f}  E[K^2]={m.m2:.4f}  rule of thumb {m.m1**2 + 1.2802 * n_s:.4f}")

# The APs that serve a given user are busier than a random AP (a user is
# more likely to sit in a large cell), and the nearest one is busiest.
for rank in (1, 2, 5):
    m = tagged_load_moments(rank, lam, lam, 5, budget=2**16)
    print(f"rank {rank} serving AP: E[K]={m.m1:.3f}  var={m.variance:.3f}")

# Monte Carlo: 2000 drops in a 2 km window.
radio = RadioParams.from_db(n_antennas=10)
cfg = UserCentricConfig(lam, lam, 5, radio, FronthaulParams.from_target_db(45.0, 15.0))
sim = simulate_user_centric(SimConfig(cfg, trials=2000, seed=1))

fit = load_pmf(typical_load_moments(lam, lam, 5))
emp = sim.typical_pmf()
print("\n k   negbin   empirical")
for k in range(0, 14):
    print(f"{k:2d}  {fit.pmf(k):.4f}   {emp.pmf(k):.4f}")
print(f"total variation: {total_variation(fit, emp):.4f}")

# Remaining gap is mostly sampling noise in the rank-1 histogram.
fit1 = load_pmf(tagged_load_moments(1, lam, lam, 5, budget=2**16))
print(f"rank-1 total variation: {total_variation(fit1, sim.tagged_pmf(1)):.4f}")
print("empirical tagged means:", np.round(sim.tagged_loads.mean(axis=0), 3))
