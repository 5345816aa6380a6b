"""Excited atom moving through vacuum: decay, recoil and the friction force.

Runs the mode-sum evolution in the toy regime (Gamma0/omega0 = recoil
parameter = beta = 0.01) and sets the simulated force next to the
closed-form law. Takes about half a minute on one core.
"""
import numpy as np

from radfriction import toy_atom
from radfriction.dynamics import hemisphere_mean_frequency
from radfriction.experiments import SimSetup, compare_force, fit_decay

atom = toy_atom()
g0 = atom.gamma0
setup = SimSetup(atom)

trajs, series, force = setup.run(0.01)
print(f"{len(trajs[0].coupled)} mode amplitudes per momentum sample, dt = {trajs[0].dt:.4g}")

# survival of the excited state
surv = fit_decay(series.times, series.survival, (0.0, 5.0 / g0))
print(f"survival decays at {surv.rate / g0:.4f} Gamma0 (r^2 = {surv.r_squared:.6f})")

# bookkeeping: nothing leaks
total = series.p_atom + series.p_photon
print(f"norm drift {np.max(np.abs(series.norms - 1)):.1e}, momentum drift {np.max(np.abs(total - total[0])):.1e}")

# photons emitted forward come out bluer than those emitted backward:
# hemisphere-averaged Doppler shifts are +-beta/2, on top of the recoil
# shift -hbar omega0/(2 m c^2), so expect about 1.000 and 0.990 here
fwd, bwd = hemisphere_mean_frequency(trajs, setup.pack(0.01))
print(f"mean photon frequency forward {fwd:.5f}, backward {bwd:.5f}")

# force: d<P>/dt against the closed form. The first row is a one-sided
# difference across the switch-on transient and means little.
window = (0.5 / g0, 3.0 / g0)
cmp = compare_force(force, "analytic", window)
print("\n  t*Gamma0      F_sim          F_closed     ratio")
for i in range(0, len(force.times), 10):
    fx, fa = force.f_sim[i, 0], force.f_analytic_x[i]
    print(f"  {force.times[i] * g0:6.2f}  {fx: .5e}  {fa: .5e}  {fx / fa:6.3f}")
print(f"\nmean relative gap over [0.5, 3]/Gamma0: {cmp.mean:.3f}")

fit = fit_decay(force.times, np.abs(force.f_sim[:, 0]), window)
print(f"|F_x| decays at {fit.rate / g0:.4f} Gamma0")

# the impulse carried off by the photons: one quantum's worth of mass
# hbar omega0/c^2 leaving at speed beta c, about four times what the
# closed form integrates to
dp = series.p_photon[-1, 0] / (1 - series.survival[-1])
print(f"photon impulse per emission {dp:.5f}  vs  hbar omega0 beta / c = {atom.hbar * atom.omega0 * 0.01:.5f}")
