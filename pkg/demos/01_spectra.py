"""Spectra of the Laplacian and the Dirac operator on the round sphere.

The scalar side is diagonal by construction: real spherical harmonics are
stored per degree, and the Laplacian multiplies degree l by -l(l+1).  The
spinor side is assembled numerically from spin-weighted harmonics and
certified against the known spectrum +-(k+1) with real multiplicity 4(k+1).
"""

import numpy as np

from superliouville import sphere, spinor

band = 16

print("Laplace eigenvalues mu_k = k(k+1), multiplicity 2k+1:")
for k in range(5):
    ev, mult = sphere.laplace_eigendata(k)
    print("  k=%d: mu=%d (x%d)" % (k, ev, mult))

basis = spinor.assemble_dirac_basis(band)
print("\nDirac eigenbasis at band %d: %d complex modes" % (band, basis.size))
for m in range(1, 5):
    sel = np.abs(basis.eigenvalues - m) < 1e-4
    err = np.abs(basis.eigenvalues[sel] - m).max()
    print(
        "  lambda=+%d: real multiplicity %d (expected %d), max error %.2e"
        % (m, 2 * int(sel.sum()), 4 * m, err)
    )

print("\nOrthonormality defect of the basis: %.2e" % basis._orthonormality_defect())

# Killing spinors (eigenvalue +-1) have constant pointwise length
phi = basis.killing_field()
dens = spinor.density_on_grid(phi)
print("Killing spinor |phi|^2 spread over the grid: %.2e" % np.ptp(dens))
print("Killing spinor L2 norm squared / 4pi: %.15f" % (phi.l2_norm() ** 2 / (4 * np.pi)))
