"""The block-operator family: a quadratic functional that decays like
e^{-t} along every solution yet is not coercive, and an epsilon-shifted
variant where the same functional decays while the norm grows.
"""

import numpy as np

from nclyap import build_l2_block_model, coercivity_profile, flow

print("== epsilon = 0: V decays, inf of V on the unit sphere collapses ==")
block = build_l2_block_model(30, 0.0)
model, cand = block.system, block.candidate
lam = block.lambda_mins()
for i in (1, 5, 10, 20, 30):
    print(f"  lambda_min(P_{i:2d}) = {lam[i - 1]:.3e}")
rng = np.random.default_rng(0)
x = rng.normal(size=model.dim)
v0 = cand(x)
for t in (0.5, 1.0, 2.0):
    traj = flow(model, t, x, step=t)
    print(f"  V(phi({t}, x)) / V(x) = {cand(traj.final_state) / v0:.4f}  "
          f"(e^-t = {np.exp(-t):.4f})")
prof = coercivity_profile(cand, model, [1.0], direction_budget=32, seed=0,
                          witness_directions=block.witness_directions())
print(f"  inf/sup of V on the unit sphere: {prof.inf_estimates[0]:.2e} / "
      f"{prof.sup_estimates[0]:.3f}  -> non-coercive: {prof.noncoercive_flag}")

print("\n== epsilon = 0.25: Lyapunov decay coexists with norm growth ==")
shifted = build_l2_block_model(40, 0.25)
model_s, cand_s = shifted.system, shifted.candidate
wit = shifted.singular_direction(10.0)
v0 = cand_s(wit)
for t in (2.5, 5.0, 10.0):
    traj = flow(model_s, t, wit, step=t)
    print(f"  t = {t:4.1f}: ||phi|| / ||x|| = {model_s.norm(traj.final_state):7.3f}, "
          f"V ratio = {cand_s(traj.final_state) / v0:.3e} "
          f"(bound e^(-t/2) = {np.exp(-0.5 * t):.3e})")
