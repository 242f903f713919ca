"""A planar vector field with a strictly decaying, norm-dominated Lyapunov
function whose sublevel sets are not compact: solutions in the left
half-plane escape in finite time while V stays trapped in (1, 3).
"""

import numpy as np

from nclyap import build_blowup_example, flow, verify_decay
from nclyap.comparison import identity_table

model, cand = build_blowup_example(3.0)

print("== finite escape in the half-plane z1 <= -1 ==")
for z0 in [(-1.0, 2.0), (-2.5, 0.0), (-4.0, -2.0)]:
    traj = flow(model, 12.0, np.array(z0), step=1e-2)
    lo, hi = traj.escaped
    v_last = cand(traj.final_state)
    print(f"  z0 = {z0}: escape bracket ({lo:.3f}, {hi:.3f}), "
          f"V at last finite sample = {v_last:.3f}  (stays inside (1, 3))")

print("\n== convergence in the conjugate-stable region ==")
for z0 in [(1.0, 1.0), (2.0, 0.0), (0.0, 2.0)]:
    traj = flow(model, 15.0, np.array(z0), step=5e-3)
    print(f"  z0 = {z0}: ||z(15)|| = {model.norm(traj.final_state):.2e}")

print("\n== the decay inequality dV <= -||z|| for ||z|| >= 2 ==")
rng = np.random.default_rng(0)
xs = []
for _ in range(8):
    v = rng.normal(size=2)
    xs.append(v / np.linalg.norm(v) * rng.uniform(2.0, 4.0))
report = verify_decay(cand, identity_table(8.0), model, xs, [model.default_signal()],
                      tol=5e-3, h_sequence=np.array([1e-3, 1e-4, 1e-5]), step=1e-6)
print(f"  verdict: {report.verdict} ({report.summary()})")

print("\n== non-coercivity: V is bounded, so no Kinf lower bound exists ==")
for R in (5.0, 20.0, 100.0):
    z = np.array([-R, 0.0])
    print(f"  V at ||z|| = {R:5.0f} (left axis): {cand(z):.3f}")
