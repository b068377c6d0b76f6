"""Delivery cost versus the number of initially cached copies.

Sweeps the cache seeding level for a single content and overlays the
predicted cost (placement + opportunistic + deadline phases) with the
realized cost from trace-driven simulation. Caching is expensive, so
the curve dips at an interior optimum well below saturating every small
cell, then climbs again: the textbook U shape. The water-filling closed
form lands on the same spot.

Run from the repository root:  python3 demos/cost_u_curve.py
"""

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from edgecache import analytics, optimizer
from edgecache.mctrace import generate_poisson_trace, sample_rate_matrix
from edgecache.model import ContentClass, CostParams, ScenarioConfig
from edgecache.sim import run_replications

N_MN, N_SC = 100, 40
MU = 1.0
TTL = 0.05            # gamma = mu * ttl = 0.05, the shallow-dip regime
P_C = 0.0             # caching only, the regime the closed form solves
COSTS = CostParams(c_bh=2.0, c_bs=1.0, c_sc=0.04, c_d2d=0.04, c_bs_ttl=2.0)
N_REPS = 300

content = ContentClass("demo", N_MN, TTL)
h_grid = np.arange(1, 41)
predicted = np.empty(len(h_grid))
simulated = np.empty(len(h_grid))
for j, h0 in enumerate(h_grid):
    cfg = ScenarioConfig(n_bs=1, n_sc=N_SC, n_mn=N_MN, cache_per_sc=1,
                         p_c=P_C, mu_lambda=MU)

    def source(seed):
        rates = sample_rate_matrix(N_MN, N_SC, MU, 0.5, seed=seed)
        return generate_poisson_trace(rates, TTL, seed=seed)

    # same base seed for every h0: each sweep point sees identical traces
    curves = run_replications(source, cfg, content, int(h0), 0, n_reps=N_REPS,
                              base_seed=11, t_grid=np.array([TTL]), costs=COSTS)
    predicted[j] = analytics.content_cost(content, float(h0), 0.0, cfg, COSTS)
    simulated[j] = curves.mean_cost

cfg_opt = ScenarioConfig(n_bs=1, n_sc=N_SC, n_mn=N_MN, cache_per_sc=1,
                         p_c=0.0, mu_lambda=MU)
closed, _ = optimizer.optimal_sc_allocation([content], COSTS, cfg_opt)
h_star = float(closed.h_sc0[0])
baseline = COSTS.c_bs_ttl * N_MN

print(f"{'h0':>4} {'predicted':>10} {'simulated':>10}")
for j in range(0, len(h_grid), 5):
    print(f"{h_grid[j]:4d} {predicted[j]:10.2f} {simulated[j]:10.2f}")
print(f"closed-form optimum: h0 = {h_star:.2f}")
print(f"grid minima: predicted at h0={h_grid[np.argmin(predicted)]}, "
      f"simulated at h0={h_grid[np.argmin(simulated)]}")
print(f"no-offloading baseline cost: {baseline:.0f}, "
      f"best predicted cost: {predicted.min():.1f}")

fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(h_grid, predicted, "k-", label="predicted")
ax.plot(h_grid, simulated, "C0o", ms=4, label=f"simulated ({N_REPS} reps)")
ax.axvline(h_star, color="C3", ls=":", label="closed-form optimum")
ax.set_xlabel("initially cached copies h0")
ax.set_ylabel("total delivery cost")
ax.legend()
fig.tight_layout()
out = Path("cost_u_curve.png")
fig.savefig(out, dpi=120)
print(f"wrote {out}")
