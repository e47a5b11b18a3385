import json

import numpy as np
import pytest

from superliouville import sphere, spinor


def random_spinor(basis, rng, decay=1.0, norm=1.0):
    c = rng.standard_normal(basis.size) + 1j * rng.standard_normal(basis.size)
    c *= np.exp(-decay * np.abs(basis.eigenvalues))
    return spinor.SpinorField(basis, c / np.linalg.norm(c) * norm)


def test_wigner_d_half_closed_forms():
    th = np.linspace(0.1, 3.0, 7)
    # d^{1/2}_{1/2,1/2} = cos(theta/2), d^{1/2}_{1/2,-1/2} = -sin(theta/2)
    assert np.abs(spinor.wigner_d_half(1, 1, 1, th) - np.cos(th / 2)).max() < 1e-14
    assert np.abs(spinor.wigner_d_half(1, 1, -1, th) + np.sin(th / 2)).max() < 1e-14


def test_spin_half_harmonics_orthonormal():
    # quadrature inner products of a few low modes
    grid = sphere.grid_for_band(8)
    th, ph = grid.theta_phi
    modes = [(1, 1), (1, -1), (3, 1), (3, 3)]
    vals = [spinor.spin_half_harmonic(1, l2, m2, th, ph) for l2, m2 in modes]
    for a in range(len(modes)):
        for b in range(len(modes)):
            ip = np.dot(grid.weights, np.conj(vals[a]) * vals[b])
            assert abs(ip - (a == b)) < 1e-12


def test_dirac_spectrum(basis8):
    for m in range(1, 5):
        for sgn in (1, -1):
            sel = np.abs(basis8.eigenvalues - sgn * m) < 1e-4
            assert int(sel.sum()) == 2 * m
            assert np.abs(basis8.eigenvalues[sel] - sgn * m).max() < 1e-10 * m


def test_basis_orthonormal(basis8):
    assert basis8._orthonormality_defect() < 1e-11


def test_apply_dirac_on_eigenfields(basis8):
    rng = np.random.default_rng(11)
    psi = random_spinor(basis8, rng)
    dpsi = spinor.apply_dirac(psi)
    assert np.abs(dpsi.coeffs - basis8.eigenvalues * psi.coeffs).max() < 1e-12
    back = spinor.apply_abs_dirac_inverse(dpsi)
    sign = np.sign(basis8.eigenvalues)
    assert np.abs(back.coeffs - sign * psi.coeffs).max() < 1e-12


def test_killing_spinor_constant_density(basis8):
    phi = basis8.killing_field()
    dens = spinor.density_on_grid(phi)
    assert np.abs(dens - 1.0).max() < 1e-10
    assert phi.l2_norm() ** 2 == pytest.approx(4 * np.pi, rel=1e-12)
    dphi = spinor.apply_dirac(phi)
    assert np.abs(dphi.coeffs - phi.coeffs).max() < 1e-12


def test_volume_element_action(basis8):
    rng = np.random.default_rng(12)
    psi = random_spinor(basis8, rng)
    g = spinor.volume_element_conjugate(psi)
    # isometry, gamma^2 = -1, and anticommutation with the Dirac operator
    assert g.l2_norm() == pytest.approx(psi.l2_norm(), rel=1e-12)
    gg = spinor.volume_element_conjugate(g)
    assert np.abs(gg.coeffs + psi.coeffs).max() < 1e-11
    lhs = spinor.apply_dirac(g).coeffs
    rhs = spinor.volume_element_conjugate(spinor.apply_dirac(psi)).coeffs
    assert np.abs(lhs + rhs).max() < 1e-10


def test_multiply_by_scalar_grid_is_projection(basis8):
    rng = np.random.default_rng(13)
    psi = random_spinor(basis8, rng, decay=2.0)
    u = 0.2 * sphere.ScalarField.coordinate(8, 3)
    eu = sphere.exp_on_grid(u)
    out = spinor.multiply_by_scalar_grid(psi, eu)
    # pairing against any basis spinor matches the direct quadrature
    probe = basis8.eigen_field(2)
    direct = np.dot(
        basis8.grid.weights, eu * spinor.pointwise_pairing_on_grid(probe, psi)
    )
    assert spinor.real_pairing(probe, out) == pytest.approx(direct, abs=1e-12)


def test_real_pairing_weighted(basis8):
    rng = np.random.default_rng(14)
    psi = random_spinor(basis8, rng)
    u = sphere.ScalarField.zero(8)
    assert spinor.real_pairing(psi, psi, weight=u) == pytest.approx(
        psi.l2_norm() ** 2, rel=1e-12
    )


def test_json_roundtrip(basis8):
    rng = np.random.default_rng(15)
    psi = random_spinor(basis8, rng)
    back = spinor.SpinorField.from_json(json.loads(psi.dumps()), basis8)
    assert np.array_equal(back.coeffs, psi.coeffs)


def test_coefficient_validation(basis8):
    with pytest.raises(ValueError):
        spinor.SpinorField(basis8, np.zeros(3, dtype=complex))
