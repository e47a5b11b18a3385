"""The super-Liouville functional on the round sphere.

Evaluates

    J_rho(u, psi) = int |grad u|^2 + 2u - e^{2u}
                    + 2(<D psi, psi> - rho e^u |psi|^2) dvol + 4 pi,

its splitting J_rho = J^1 - rho J^2, Euler-Lagrange residuals, Riesz-lifted
gradients in the H^1 x H^{1/2} metric, the Hessian index at the origin, and
the integral identities (Kazdan-Warner, the mixed conservation law, the
volume and Baer inequalities) used as solution certificates.
"""

from __future__ import annotations

import json
import math

import numpy as np

from . import sphere, spinor


class State:
    """A point (u, psi) of the configuration space together with rho > 0."""

    __slots__ = ("u", "psi", "rho")

    def __init__(self, u, psi, rho):
        if rho <= 0:
            raise ValueError("rho must be positive")
        if u.band != psi.basis.band:
            raise ValueError("u and psi must share the band limit")
        self.u = u
        self.psi = psi
        self.rho = float(rho)

    @classmethod
    def origin(cls, band, rho, basis=None):
        basis = basis or spinor.assemble_dirac_basis(band)
        return cls(sphere.ScalarField.zero(band), basis.zero_field(), rho)

    def to_json(self):
        return {"rho": self.rho, "u": self.u.to_json(), "psi": self.psi.to_json()}

    @classmethod
    def from_json(cls, obj, basis=None):
        u = sphere.ScalarField.from_json(obj["u"])
        psi = spinor.SpinorField.from_json(obj["psi"], basis)
        return cls(u, psi, float(obj["rho"]))

    def dumps(self):
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, text, basis=None):
        return cls.from_json(json.loads(text), basis)


class Residual:
    """Euler-Lagrange residual, left minus right of the two equations."""

    __slots__ = ("scalar_part", "spinor_part", "norm")

    def __init__(self, scalar_part, spinor_part):
        self.scalar_part = scalar_part
        self.spinor_part = spinor_part
        self.norm = math.sqrt(
            float(np.dot(scalar_part.coeffs, scalar_part.coeffs))
            + float(np.vdot(spinor_part.coeffs, spinor_part.coeffs).real)
        )


def _grad_norm_sq(u):
    """Integral of |grad u|^2, exact in coefficient space."""
    return sphere.h1_inner(u, u) - sphere.l2_inner(u, u)


def _weighted_density_integral(s):
    """Integral of e^u |psi|^2 on the oversampled grid."""
    grid = s.psi.basis.grid
    eu = sphere.exp_on_grid(s.u)
    return float(np.dot(grid.weights, eu * spinor.density_on_grid(s.psi)))


def eval_J1_J2(s):
    """The rho-independent pieces: J_rho = J1 - rho * J2.

    J1 = int |grad u|^2 + 2u + 1 - e^{2u} + 2<D psi, psi>;
    J2 = int 2 e^u |psi|^2.
    """
    grid = sphere.grid_for_band(s.u.band, oversample=2)
    e2u = float(np.dot(grid.weights, sphere.exp_on_grid(s.u, t=2.0)))
    dirac = float(np.sum(s.psi.basis.eigenvalues * np.abs(s.psi.coeffs) ** 2))
    j1 = _grad_norm_sq(s.u) + 2.0 * sphere.integrate(s.u) + 4.0 * np.pi - e2u + 2.0 * dirac
    j2 = 2.0 * _weighted_density_integral(s)
    return j1, j2


def eval_J(s):
    """J_rho(u, psi), normalized so that J_rho(0, 0) = 0."""
    j1, j2 = eval_J1_J2(s)
    return j1 - s.rho * j2


def el_residual(s):
    """Residual of the Euler-Lagrange system.

    scalar_part = -Delta u - e^{2u} + 1 - rho e^u |psi|^2 (analyzed at band);
    spinor_part = D psi - rho P(e^u psi) with P the band projection.
    """
    grid = s.psi.basis.grid
    eu = sphere.exp_on_grid(s.u)
    dens = spinor.density_on_grid(s.psi)
    scalar_vals = -sphere.exp_on_grid(s.u, t=2.0) + 1.0 - s.rho * eu * dens
    scalar = sphere.analyze(scalar_vals, 2 * s.u.band).truncate(s.u.band) - sphere.laplacian(s.u)
    spin = spinor.apply_dirac(s.psi) - s.rho * spinor.multiply_by_scalar_grid(s.psi, eu)
    return Residual(scalar, spin)


def gradient(s):
    """Riesz-lifted gradient of J_rho in the H^1 x H^{1/2} metric.

    grad J1 = (2(1-Delta)^{-1}(-Delta u + 1 - e^{2u}), 4|D|^{-1} D psi);
    grad J2 = (2(1-Delta)^{-1}(e^u |psi|^2),            4|D|^{-1} P(e^u psi));
    returned as grad J1 - rho grad J2.
    """
    g1u, g1p = gradient_J1(s)
    g2u, g2p = gradient_J2(s)
    return g1u - s.rho * g2u, g1p - s.rho * g2p


def gradient_J1(s):
    band = s.u.band
    e2u = sphere.analyze(sphere.exp_on_grid(s.u, t=2.0), 2 * band).truncate(band)
    su = 2.0 * sphere.inverse_one_minus_laplacian(
        -1.0 * sphere.laplacian(s.u) + sphere.ScalarField.constant(band, 1.0) - e2u
    )
    sp = 4.0 * spinor.apply_abs_dirac_inverse(spinor.apply_dirac(s.psi))
    return su, sp


def gradient_J2(s):
    band = s.u.band
    eu = sphere.exp_on_grid(s.u)
    wd = sphere.analyze(eu * spinor.density_on_grid(s.psi), 2 * band).truncate(band)
    su = 2.0 * sphere.inverse_one_minus_laplacian(wd)
    sp = 4.0 * spinor.apply_abs_dirac_inverse(spinor.multiply_by_scalar_grid(s.psi, eu))
    return su, sp


def metric_inner(a, b):
    """H^1 x H^{1/2} inner product of two (ScalarField, SpinorField) pairs."""
    su = sphere.h1_inner(a[0], b[0])
    lam = np.abs(a[1].basis.eigenvalues)
    sp = float(np.sum(lam * (np.conj(a[1].coeffs) * b[1].coeffs).real))
    return su + sp


def metric_norm(a):
    return math.sqrt(metric_inner(a, a))


def directional_derivative(s, v, h):
    """First variation of J_rho in the direction (v, h), via the residual.

    Equals 2 * int scalar_part * v + 4 * Re int <spinor_part, h>.
    """
    r = el_residual(s)
    return 2.0 * sphere.l2_inner(r.scalar_part, v) + 4.0 * spinor.real_pairing(
        r.spinor_part, h
    )


def hessian_index_at_origin(rho, window=2.0, degeneracy_tol=1e-8):
    """Morse index of J_rho at (0, 0) restricted to the Nehari tangent space.

    The scalar block has eigenvalues 2(mu_k - 2) >= 8 for admissible modes
    (k >= 2) and never contributes; the spinor block contributes 4m negative
    directions for each positive Dirac eigenvalue m < rho.  Returns a dict
    with the index, the Hessian eigenvalues 4(m - rho) within ``window`` of
    zero (with multiplicity), and degeneracy information at integer rho.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    nearest = round(rho)
    degenerate = nearest >= 1 and abs(rho - nearest) < degeneracy_tol
    index = 0
    spectrum = []
    m = 1
    while True:
        val = 4.0 * (m - rho)
        if val < -degeneracy_tol:
            index += 4 * m
        if abs(val) <= window:
            spectrum.extend([val] * (4 * m))
        if val > window:
            break
        m += 1
    return {
        "index": index,
        "spectrum_near_zero": spectrum,
        "degenerate": bool(degenerate),
        "kernel_dim": 4 * int(nearest) if degenerate else 0,
    }


def kazdan_warner_defect(u):
    """The three integrals int Delta u (grad x^j . grad u) dvol (all zero)."""
    lap = sphere.laplacian(u)
    out = np.empty(3)
    for j in (1, 2, 3):
        xj = sphere.ScalarField.coordinate(u.band, j)
        g = sphere.grad_dot(xj, u, band=u.band + 2)
        out[j - 1] = sphere.l2_inner(lap.truncate(u.band + 2), g)
    return out


def conservation_defect(s):
    """Per-axis defect of the mixed conservation law.

    LHS_j = int e^u grad(|psi|^2) . grad x^j; RHS_j = int e^u |psi|^2 x^j;
    the lemma asserts LHS = RHS for solutions of the spinor equation.
    """
    band = s.u.band
    grid = s.psi.basis.grid  # band-2L quadrature
    eu = sphere.exp_on_grid(s.u)
    dens_vals = spinor.density_on_grid(s.psi)
    dens = sphere.analyze(dens_vals, 2 * band)
    out = np.empty(3)
    for j in (1, 2, 3):
        xj = sphere.ScalarField.coordinate(2 * band, j)
        g = sphere.grad_dot(dens, xj, band=2 * band + 2).truncate(2 * band)
        lhs = float(np.dot(grid.weights, eu * sphere.synthesize(g)))
        rhs = float(np.dot(grid.weights, eu * dens_vals * grid.xyz[:, j - 1]))
        out[j - 1] = lhs - rhs
    return out


def bar_volume_check(s):
    """Volume and Baer-inequality report for an approximate solution.

    volume = int e^{2u} (should be <= 4 pi); bar_product = lambda_1(u)^2 *
    volume with lambda_1 the first positive eigenvalue of the e^u-weighted
    Dirac problem (should be >= 4 pi); rho_gt_one records the constraint
    rho > 1 whenever psi does not vanish.
    """
    from . import nehari

    grid = sphere.grid_for_band(s.u.band, oversample=2)
    volume = float(np.dot(grid.weights, sphere.exp_on_grid(s.u, t=2.0)))
    lam1 = nehari.weighted_eigensystem(s.u, 1).eigenvalue(1)
    bar = lam1 * lam1 * volume
    psi_nonzero = s.psi.l2_norm() > 1e-12
    return {
        "volume": volume,
        "lambda_1": lam1,
        "bar_product": bar,
        "volume_ok": volume <= 4.0 * np.pi * (1.0 + 1e-6),
        "bar_ok": bar >= 4.0 * np.pi * (1.0 - 1e-6),
        "rho_gt_one": (not psi_nonzero) or s.rho > 1.0,
    }
