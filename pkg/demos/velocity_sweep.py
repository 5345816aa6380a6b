"""Friction is proportional to the initial momentum.

Reads F_x at t* = 1/Gamma0 for a handful of velocities, once from the
closed form and once from simulations on a coarse grid.
"""
from radfriction import toy_atom
from radfriction.experiments import SimSetup, linearity_sweep

atom = toy_atom()
betas = [0.0, 0.002, 0.005, 0.008, 0.01]

closed = linearity_sweep(betas, SimSetup(atom), source="analytic")
coarse = SimSetup(atom, n_omega=200, n_theta=8, n_phi=8)
sim = linearity_sweep(betas, coarse)

print("  beta      F_closed       F_sim")
for a, b in zip(closed.points, sim.points):
    print(f"  {a.beta:5.3f}  {a.force_x: .5e}  {b.force_x: .5e}")
print(f"closed form: slope {closed.slope:.5e}, r^2 {closed.r_squared:.10f}")
print(f"simulation:  slope {sim.slope:.5e}, r^2 {sim.r_squared:.10f}, intercept {sim.intercept:.1e}")
print(f"slope ratio sim/closed = {sim.slope / closed.slope:.3f}")
