"""How the discrete mode grid approaches the continuum.

The golden-rule rate on the grid against Gamma0, then the pole-approximation
amplitudes against the integrated ones on a one-dimensional band.
"""
import numpy as np

from radfriction import band_self_energy, evolve, pole_amplitudes, single_momentum, toy_atom
from radfriction.experiments import SimSetup, convergence_study

atom = toy_atom()
setup = SimSetup(atom)

ladder = [(100, 8, 8), (200, 12, 12), (400, 16, 16)]
res = convergence_study(ladder, "rate_error", setup)
for (n_w, n_t, n_p), err in res.rows:
    print(f"grid {n_w:4d} x {n_t:2d} x {n_p:2d}: |rate/Gamma0 - 1| = {err:.2e}")
# the spectral density grows linearly in omega, which the hat kernel
# interpolates exactly, so the error sits at roundoff on every rung

coupled = setup.couplings(0.01, (200, 2, 2))
t = 5.0 / atom.gamma0
ode = evolve(single_momentum(1.0), coupled, atom, t, n_out=11)[0].final_state().c_modes
b_r, gamma = band_self_energy(atom, coupled, 1.0)
print(f"\nband shift {b_r / atom.gamma0:+.4f} Gamma0, band rate {gamma / atom.gamma0:.4f} Gamma0")
for label, kw in (("Gamma0", {"b_r": b_r}), ("band rate", {"b_r": b_r, "gamma": gamma})):
    _, pole = pole_amplitudes(atom, coupled, 1.0, t, **kw)
    print(f"pole vs integrated, width {label:9s}: L2 = {np.linalg.norm(pole - ode) / np.linalg.norm(ode):.4f}")
