import numpy as np
import pytest

from superliouville import functional, moebius, sphere, spinor


def random_points(rng, n):
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1)[:, None]


def random_map(rng, boost=0.4):
    m = moebius.MoebiusMap.rotation(
        int(rng.integers(1, 4)), float(rng.uniform(0, 2 * np.pi))
    )
    return m @ moebius.MoebiusMap.boost(rng.uniform(-boost, boost, size=3))


def test_identity_and_determinant():
    phi = moebius.MoebiusMap.identity()
    assert np.array_equal(phi.matrix, np.eye(2))
    rng = np.random.default_rng(20)
    m = random_map(rng)
    assert abs(np.linalg.det(m.matrix) - 1.0) < 1e-12


def test_apply_map_identity_and_rotation():
    rng = np.random.default_rng(21)
    x = random_points(rng, 40)
    assert np.abs(moebius.apply_map(moebius.MoebiusMap.identity(), x) - x).max() < 1e-13
    phi = moebius.MoebiusMap.rotation(3, 0.7)
    y = moebius.apply_map(phi, x)
    c, s = np.cos(0.7), np.sin(0.7)
    ref = np.stack(
        [c * x[:, 0] - s * x[:, 1], s * x[:, 0] + c * x[:, 1], x[:, 2]], axis=1
    )
    assert np.abs(y - ref).max() < 1e-12
    assert np.abs(moebius.conformal_factor(phi, x) - 1.0).max() < 1e-12


def test_group_law_and_chain_rule():
    rng = np.random.default_rng(22)
    x = random_points(rng, 60)
    f1, f2 = random_map(rng), random_map(rng)
    comp = f1 @ f2
    lhs = moebius.apply_map(comp, x)
    rhs = moebius.apply_map(f1, moebius.apply_map(f2, x))
    assert np.abs(lhs - rhs).max() < 1e-10
    dl = moebius.conformal_factor(comp, x)
    dr = moebius.conformal_factor(f1, moebius.apply_map(f2, x)) * moebius.conformal_factor(f2, x)
    assert np.abs(dl - dr).max() < 1e-10


def test_inverse():
    rng = np.random.default_rng(23)
    phi = random_map(rng)
    x = random_points(rng, 20)
    back = moebius.apply_map(phi.inverse(), moebius.apply_map(phi, x))
    assert np.abs(back - x).max() < 1e-11


def test_dilation_preserves_volume():
    # u = 0 pulled back by a dilation: int e^{2 u_phi} = int det(d phi) = 4 pi
    band = 16
    u = sphere.ScalarField.zero(band)
    phi = moebius.dilation_family(1.5)
    up = moebius.pullback_scalar(u, phi)
    grid = sphere.grid_for_band(band, oversample=2)
    vol = np.dot(grid.weights, sphere.exp_on_grid(up, t=2.0))
    assert abs(vol - 4 * np.pi) < 1e-6
    # rotations have det == 1, so the pullback of 0 is 0
    rot = moebius.MoebiusMap.rotation(2, 1.1)
    assert np.abs(moebius.pullback_scalar(u, rot).coeffs).max() < 1e-12


def test_scalar_pullback_cocycle():
    rng = np.random.default_rng(24)
    band = 16
    c = rng.standard_normal(sphere.num_coeffs(band))
    for l in range(band + 1):
        c[l * l : (l + 1) * (l + 1)] *= 0.0 if l > 3 else 0.2 / (1 + l) ** 2
    u = sphere.ScalarField(band, c)
    f1, f2 = random_map(rng, boost=0.3), random_map(rng, boost=0.3)
    once = moebius.pullback_scalar(moebius.pullback_scalar(u, f1), f2)
    composed = moebius.pullback_scalar(u, f1 @ f2)
    grid = sphere.grid_for_band(band)
    diff = sphere.synthesize(once - composed)
    assert np.abs(diff).max() < 1e-8


def test_spinor_pullback_preserves_dirac_action(basis16):
    rng = np.random.default_rng(25)
    c = rng.standard_normal(basis16.size) + 1j * rng.standard_normal(basis16.size)
    c *= np.exp(-2.0 * np.abs(basis16.eigenvalues))
    psi = spinor.SpinorField(basis16, c / np.linalg.norm(c) * 0.5)
    action0 = float(np.sum(basis16.eigenvalues * np.abs(psi.coeffs) ** 2))
    norm0 = psi.l2_norm()
    rot = moebius.MoebiusMap.rotation(1, 0.9)
    psir = moebius.pullback_spinor(psi, rot)
    assert psir.l2_norm() == pytest.approx(norm0, abs=1e-10)
    phi = random_map(rng, boost=0.5)
    psip = moebius.pullback_spinor(psi, phi)
    action1 = float(np.sum(basis16.eigenvalues * np.abs(psip.coeffs) ** 2))
    assert action1 == pytest.approx(action0, abs=1e-9)


def test_center_of_mass_and_lambda():
    band = 12
    u0 = sphere.ScalarField.zero(band)
    assert np.abs(moebius.center_of_mass(u0)).max() < 1e-13
    lam = moebius.lambda_matrix(u0)
    assert np.abs(lam - (4 * np.pi / 3) * np.eye(3)).max() < 1e-12


def test_balance():
    band = 12
    u = 0.3 * sphere.ScalarField.coordinate(band, 3)
    phi, ub = moebius.balance(u, tol=1e-8, max_iter=20)
    assert np.linalg.norm(moebius.center_of_mass(ub)) < 1e-8
    # the balanced field is the pullback of u by the returned map
    ref = moebius.pullback_scalar(u, phi)
    assert np.abs(sphere.synthesize(ub - ref)).max() < 1e-10


def test_appendix_dilation_derivatives():
    errs = moebius.derivative_checks(3, n_points=200, h=1e-4, seed=0)
    assert max(errs.values()) < 1e-6


def test_json_roundtrip():
    rng = np.random.default_rng(26)
    phi = random_map(rng)
    back = moebius.MoebiusMap.from_json(phi.to_json())
    assert np.abs(back.matrix - phi.matrix).max() < 1e-15
