"""Constructing a Lyapunov function from trajectory data alone.

Fits a decay surface to sampled trajectories of a two-mode switched
system, factorizes it, and assembles the weighted integral-type family
into a function W that provably decays with a computable floor.
"""

import numpy as np

from nclyap import build_linear, build_switched_linear, flow
from nclyap.comparison import identity_table
from nclyap.converse import ConverseConfig, assemble_w, construct_vk_integral
from nclyap.probes import probe_attractivity

print("== closed-form sanity on x' = -x ==")
lin = build_linear([[-1.0]])
cfg = ConverseConfig(rho=identity_table(12.0), alpha1=identity_table(12.0),
                     k_max=4, disturbance_budget=2, quadrature_step=1e-3)
v1 = construct_vk_integral(lin, 1, cfg)
print(f"  V_1(e) = {v1(np.array([np.e])):.6f}   (closed form e - 2 = {np.e - 2:.6f})")
print(f"  horizon T(1, 1) = {cfg.horizon(1.0, 1):.6f} = ln 2")
W = assemble_w(lin, cfg)
print(f"  weights: {[f'{w:.4f}' for w in W.weights]}")
print(f"  W(0) = {W(np.array([0.0]))}, W(2) = {W(np.array([2.0])):.4f}, "
      f"psi1(0.2) = {W.psi1(0.2)}, psi1(0.5) = {W.psi1(0.5):.4f}")

print("\n== data-driven construction on a switched pair ==")
sw = build_switched_linear([
    [[-1.0, 0.0], [0.0, -2.0]],
    [[-1.5, 0.5], [0.0, -0.8]],
])
probe = probe_attractivity(sw.system, "UGAS", r_grid=(0.5, 1.0, 2.0), budget=6,
                           horizon=12.0, seed=0, step=2e-2)
print(f"  UGAS probe: {probe.verdict}")
cfg2 = ConverseConfig.from_kl_bound(probe.tables["beta"], k_max=2,
                                    disturbance_budget=6, quadrature_step=5e-3,
                                    seed=0, R=2.0)
vk = construct_vk_integral(sw.system, 2, cfg2)
rng = np.random.default_rng(1)
worst = -np.inf
for _ in range(30):
    u = rng.normal(size=2)
    x = u / np.linalg.norm(u) * rng.uniform(0.1, 2.0)
    worst = max(worst, vk(x) - float(cfg2.alpha1(np.linalg.norm(x))))
print(f"  max over samples of V_2(x) - alpha1(||x||): {worst:.3e}  (<= 0 up to tolerance)")
x = np.array([1.0, 1.0]) / np.sqrt(2)
traj = flow(sw.system, 1.0, x, step=1e-2)
print(f"  V_2 along the flow: {vk(x):.4f} -> {vk(traj.final_state):.4f} (decaying)")
