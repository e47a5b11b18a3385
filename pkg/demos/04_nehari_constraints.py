"""The weighted Dirac eigenproblem and the Nehari constraint set.

Neh_rho is cut out by G1 (center of mass of e^{2u}), G2,k (weighted
eigenspinor pairings for negative modes) and G3 (a normalized volume).
The script solves the weighted eigenproblem, certifies its output, and
shows that the constrained gradient is tangent to the constraint set.
"""

import numpy as np

from superliouville import branch, functional, nehari, sphere, spinor

band = 16
basis = spinor.assemble_dirac_basis(band)

u = 0.25 * sphere.ScalarField.coordinate(band, 3)
system = nehari.weighted_eigensystem(u, 4, basis)
print("weighted Dirac eigenvalues (u = 0.25 x^3):")
for j in (1, -1, 2, -2):
    print("  lambda_%+d = %+.10f   residual %.2e" % (j, system.eigenvalue(j), system.residual(j)))
print("e^u-orthonormality defect: %.2e" % system.orthonormality_defect(4))

# constant shifts scale the spectrum exactly: lambda(u + c) = e^{-c} lambda(u)
shifted = nehari.weighted_eigensystem(u + sphere.ScalarField.constant(band, np.log(2.0)), 1, basis)
print("\nlambda_1 halves under u -> u + ln 2: %.2e"
      % abs(shifted.eigenvalue(1) - 0.5 * system.eigenvalue(1)))

# constraints vanish on the Killing branch and the gradient is tangent
s = branch.killing_branch(1.8, basis=basis)
vals = nehari.constraints(s, j_max=6)
print("\nconstraints at the Killing point rho=1.8: max |G| = %.2e" % vals.max_abs)

frame = nehari.normal_frame(s, j_max=6)
g, mult = nehari.constrained_gradient(s, j_max=6, frame=frame)
worst = max(abs(functional.metric_inner(g, v)) for v in frame.vectors)
print("constrained gradient: norm %.2e, max frame pairing %.2e" % (functional.metric_norm(g), worst))
print("multipliers:", {k: np.round(v, 6) for k, v in mult.items()})
print("collinearity det(J1, J2) at the critical point: %.2e" % nehari.collinearity_det(s, j_max=6))
