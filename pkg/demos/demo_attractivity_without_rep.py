"""A planar system that reaches any neighborhood of 0 in uniformly bounded
time, yet whose equilibrium is not robust: tiny initial states can be
thrown arbitrarily far by strong disturbances before everything collapses.
"""

import numpy as np

from nclyap import build_ugatt_example, flow
from nclyap.probes import classify_rep, probe_attractivity
from nclyap.systems import DisturbanceSignal

model = build_ugatt_example()

print("== the disturbance channel dies in finite time ==")
traj = flow(model, 3.0, [0.0, 1.0], step=2e-5)
hit = traj.times[np.nonzero(np.abs(traj.states[:, 1]) <= 1e-6)[0][0]]
print(f"  y-component from y0 = 1 reaches |y| <= 1e-6 at t = {hit:.3f}")

print("\n== transient blow-up scales with the disturbance ==")
for K in (10.0, 100.0):
    tr = flow(model, 2.0, [1.0, 1.0], DisturbanceSignal.constant(K), step=1e-4)
    print(f"  d = {K:5.0f}: max |x| = {np.abs(tr.states[:, 0]).max():9.2f}")

print("\n== probes ==")
ugatt = probe_attractivity(model, "UGATT", r_grid=(0.5, 1.0), eps_grid=(0.01,),
                           budget=8, horizon=8.0, seed=0, magnitude=2.0, step=2e-3)
print(f"  uniform global attractivity: {ugatt.verdict}, "
      f"reach-and-stay times {ugatt.tables['tau']}")
rep = classify_rep(model, h_grid=(0.5,), eps_grid=(0.5,), budget=4, seed=0, step=5e-3)
print(f"  robust equilibrium: {rep.verdict}")
print(f"  ({rep.notes})")
