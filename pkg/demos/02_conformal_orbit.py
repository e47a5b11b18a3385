"""Moebius maps, pullbacks, and the conformal invariance of the functional.

A Moebius map phi acts on a configuration by

    u_phi = u o phi + (1/2) log det(d phi),
    psi_phi = det(d phi)^{1/4} (cocycle) psi o phi,

and J_rho(u_phi, psi_phi) = J_rho(u, psi).  The script also balances a
field: a suitable pullback always recenters the mass e^{2u} at the origin.
"""

import numpy as np

from superliouville import functional, moebius, sphere, spinor

band = 16
rng = np.random.default_rng(7)
basis = spinor.assemble_dirac_basis(band)

# a smooth random state
c = rng.standard_normal(sphere.num_coeffs(band))
for l in range(band + 1):
    c[l * l : (l + 1) * (l + 1)] *= 0.0 if l > 3 else 0.3 / (1 + l) ** 2
u = sphere.ScalarField(band, c)
cc = rng.standard_normal(basis.size) + 1j * rng.standard_normal(basis.size)
cc *= np.exp(-2.0 * np.abs(basis.eigenvalues))
psi = spinor.SpinorField(basis, 0.4 * cc / np.linalg.norm(cc))
s = functional.State(u, psi, 1.7)
j0 = functional.eval_J(s)
print("J_rho at the base state: %.12f" % j0)

for name, phi in [
    ("rotation", moebius.MoebiusMap.rotation(2, 1.1)),
    ("dilation t=1.4", moebius.dilation_family(1.4)),
    ("rotation o boost", moebius.MoebiusMap.rotation(1, 0.6) @ moebius.MoebiusMap.boost([0.2, -0.3, 0.25])),
]:
    s2 = functional.State(
        moebius.pullback_scalar(s.u, phi), moebius.pullback_spinor(s.psi, phi), s.rho
    )
    print("  %-18s |J change| = %.2e" % (name, abs(functional.eval_J(s2) - j0)))

# group law and conformal factor chain rule at random points
x = rng.standard_normal((5, 3))
x /= np.linalg.norm(x, axis=1)[:, None]
f1 = moebius.MoebiusMap.boost([0.3, 0.1, -0.2])
f2 = moebius.MoebiusMap.rotation(3, 0.9)
err = np.abs(
    moebius.apply_map(f1 @ f2, x) - moebius.apply_map(f1, moebius.apply_map(f2, x))
).max()
print("\ngroup law error at 5 points: %.2e" % err)

# balancing: drive the center of mass of e^{2u} to zero
u_off = 0.3 * sphere.ScalarField.coordinate(band, 3)
print("\ncenter of mass before balancing:", np.round(moebius.center_of_mass(u_off), 6))
phi, u_bal = moebius.balance(u_off)
print("after balancing: |CM| = %.2e" % np.linalg.norm(moebius.center_of_mass(u_bal)))
