import json

import numpy as np
import pytest

from superliouville import sphere


def random_field(band, rng, decay=2.0, amp=1.0):
    c = rng.standard_normal(sphere.num_coeffs(band))
    for l in range(band + 1):
        c[l * l : (l + 1) * (l + 1)] *= amp / (1.0 + l) ** decay
    return sphere.ScalarField(band, c)


def test_laplace_eigendata():
    for k in range(20):
        ev, mult = sphere.laplace_eigendata(k)
        assert ev == k * (k + 1)
        assert mult == 2 * k + 1


def test_coeff_indexing():
    seen = set()
    for l in range(6):
        for m in range(-l, l + 1):
            seen.add(sphere.coeff_index(l, m))
    assert seen == set(range(sphere.num_coeffs(5)))


def test_analysis_synthesis_roundtrip():
    rng = np.random.default_rng(1)
    u = random_field(12, rng)
    vals = sphere.synthesize(u)
    back = sphere.analyze(vals, 12)
    assert np.abs(back.coeffs - u.coeffs).max() < 1e-12


def test_quadrature_exactness():
    band = 10
    one = sphere.ScalarField.constant(band, 1.0)
    assert abs(sphere.integrate(one) - 4 * np.pi) < 1e-12
    x3 = sphere.ScalarField.coordinate(band, 3)
    assert abs(sphere.integrate(x3)) < 1e-13
    # int (x^3)^2 = 4 pi / 3
    grid = sphere.grid_for_band(band)
    v = sphere.synthesize(x3) ** 2
    assert abs(np.dot(grid.weights, v) - 4 * np.pi / 3) < 1e-12


def test_laplacian_is_diagonal():
    rng = np.random.default_rng(2)
    u = random_field(8, rng)
    lap = sphere.laplacian(u)
    for l in range(9):
        for m in range(-l, l + 1):
            i = sphere.coeff_index(l, m)
            assert lap.coeffs[i] == pytest.approx(-l * (l + 1) * u.coeffs[i])


def test_inverse_one_minus_laplacian():
    rng = np.random.default_rng(3)
    u = random_field(8, rng)
    w = sphere.inverse_one_minus_laplacian(u)
    back = w - sphere.laplacian(w)
    assert np.abs(back.coeffs - u.coeffs).max() < 1e-12


def test_grad_dot_closed_form():
    # grad x3 . grad x3 = 1 - (x3)^2 on the unit sphere
    band = 8
    x3 = sphere.ScalarField.coordinate(band, 3)
    g = sphere.grad_dot(x3, x3, band=band)
    vals = sphere.synthesize(g)
    ref = 1.0 - sphere.synthesize(x3) ** 2
    assert np.abs(vals - ref).max() < 1e-11


def test_evaluate_matches_synthesis():
    rng = np.random.default_rng(4)
    u = random_field(6, rng)
    grid = sphere.grid_for_band(6)
    vals = sphere.synthesize(u)
    th, ph = grid.theta_phi
    pts = rng.integers(0, th.size, size=12)
    direct = sphere.evaluate(u, th[pts], ph[pts])
    assert np.abs(direct - vals[pts]).max() < 1e-11


def test_multiply_is_pointwise_product():
    rng = np.random.default_rng(5)
    u = random_field(5, rng)
    v = random_field(5, rng)
    w = sphere.multiply(u, v, band=10)
    assert w.band == 10
    lhs = sphere.synthesize(w)
    rhs = sphere.synthesize(u.truncate(10)) * sphere.synthesize(v.truncate(10))
    assert np.abs(lhs - rhs).max() < 1e-11


def test_h1_norm_on_single_mode():
    band = 6
    c = np.zeros(sphere.num_coeffs(band))
    c[sphere.coeff_index(3, 1)] = 2.0
    u = sphere.ScalarField(band, c)
    # H1 norm squared = (1 + l(l+1)) * coeff^2
    assert sphere.h1_norm(u) ** 2 == pytest.approx(4.0 * (1 + 12))


def test_mean_value():
    rng = np.random.default_rng(6)
    u = random_field(7, rng)
    assert sphere.mean_value(u) == pytest.approx(
        sphere.integrate(u) / (4 * np.pi), abs=1e-13
    )


def test_json_roundtrip():
    rng = np.random.default_rng(7)
    u = random_field(5, rng)
    back = sphere.ScalarField.from_json(json.loads(u.dumps()))
    assert back.band == u.band
    assert np.array_equal(back.coeffs, u.coeffs)
