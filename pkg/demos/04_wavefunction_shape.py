"""
Inside a quasi-bound state
==========================

At a resonance of a double barrier the wave function is large between the
barriers, grows through the first barrier, decays through the second and
leaves as a plane wave.  Away from resonance the amplitude inside is small.
"""

import numpy as np

from qsolve import builtin, compute_coefficients, continuity_defects, locate_resonances, wavefunction

profile = builtin("rect_double_barrier", {"barrier_width": 2.0, "well_width": 4.0})
e_res = locate_resonances(profile, 0.01, 0.99, 2000, tol_e=1e-12)[0].energy
x = np.linspace(-2, 10, 1201)

for label, E in (("on resonance", e_res), ("off resonance", 0.5 * e_res)):
    c = compute_coefficients(profile, E)
    psi = wavefunction(c, x)
    well = (x > 2) & (x < 6)
    print(f"{label:14s} E={E:.10f}  max|psi| in the well {np.abs(psi[well]).max():7.3f}"
          f"  |T|^2 {np.exp(2 * c.log_T.real):.3e}  continuity {max(continuity_defects(c)):.1e}")

c = compute_coefficients(profile, e_res)
a = np.abs(wavefunction(c, x))
first, second = (x > 0) & (x < 2), (x > 6) & (x < 8)
print("grows through the first barrier:", bool(np.all(np.diff(a[first]) > 0)))
print("decays through the second barrier:", bool(np.all(np.diff(a[second]) < 0)))
