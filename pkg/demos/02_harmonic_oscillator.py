"""
Bound states from resonances
============================

The oscillator x^2 on |x| < 4 is closed off by flat barriers of height 16
out to |x| = 10.  Each bound level of the well becomes a quasi-bound
resonance of this model, so a transmission sweep reads off the spectrum.
"""

import warnings

import numpy as np

from qsolve import DiscretizationRule, ResonanceWarning, builtin, solve_model

# windows reaching the barrier top end on a rising flank; its edge warning is expected
warnings.simplefilter("ignore", ResonanceWarning)

model = builtin("harmonic_model")
states = solve_model(model, DiscretizationRule(2000), (0.5, 16.0), 1e-12)

print(" n   eigenvalue          2n+1   nodes")
for s in states:
    print(f"{s.index:2d}   {s.eigenvalue:16.12f}  {2 * s.index + 1:4d}   {s.node_count}")

# the ground state is the Gaussian pi^-1/4 exp(-x^2/2), up to sign
g = states[0]
inside = np.abs(g.grid) < 4
exact = np.pi**-0.25 * np.exp(-0.5 * g.grid[inside] ** 2)
print("ground state max deviation from the Gaussian:", np.max(np.abs(g.psi[inside] - exact)))

# the upper levels feel the finite barrier height and slide below 2n+1
print("shift of the top level:", states[-1].eigenvalue - 15)
