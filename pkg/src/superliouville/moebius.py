"""Moebius group actions on the round sphere.

A Moebius transformation is stored as its SL(2, C) lift acting on the
projective spinor coordinates (z1, z2) ~ (x^1 + i x^2, 1 - x^3) of the
stereographic chart from the north pole.  The module provides point maps,
conformal factors det(d phi), scalar and spinor pullbacks, the center of
mass of e^{2u}, the Lambda(u) matrix, the balancing Newton iteration and
the axis dilation families with their closed-form derivative checks.
"""

from __future__ import annotations

import json
import math

import numpy as np

from . import sphere, spinor

_SIGMA = (
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
)


class MoebiusMap:
    """Fractional linear map of the Riemann sphere, stored as its SL(2,C) lift."""

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.shape != (2, 2):
            raise ValueError("matrix must be 2x2")
        det = matrix[0, 0] * matrix[1, 1] - matrix[0, 1] * matrix[1, 0]
        if abs(det) < 1e-14:
            raise ValueError("singular matrix")
        matrix = matrix / np.sqrt(det)
        self.matrix = matrix

    @classmethod
    def identity(cls):
        return cls(np.eye(2))

    @classmethod
    def rotation(cls, axis, angle):
        """Rotation of the sphere by ``angle`` about coordinate ``axis`` (right-handed)."""
        if axis not in (1, 2, 3):
            raise ValueError("axis must be 1, 2 or 3")
        s = _SIGMA[axis - 1]
        half = 0.5 * angle
        # the chart from the north pole carries the conjugate representation
        return cls(np.conj(math.cos(half) * np.eye(2) - 1j * math.sin(half) * s))

    @classmethod
    def boost(cls, a):
        """Pure dilation family exp((a . sigma)/2) for a real 3-vector a.

        Along axis 3 this is the chart dilation z -> e^{|a|} z; general axes
        follow by rotation.
        """
        a = np.asarray(a, dtype=float)
        r = float(np.linalg.norm(a))
        if r == 0.0:
            return cls.identity()
        n = a / r
        sig = n[0] * _SIGMA[0] + n[1] * _SIGMA[1] + n[2] * _SIGMA[2]
        return cls(np.conj(math.cosh(r / 2) * np.eye(2) + math.sinh(r / 2) * sig))

    def compose(self, other):
        """self after other: apply(self.compose(other), x) = apply(self, apply(other, x))."""
        return MoebiusMap(self.matrix @ other.matrix)

    def __matmul__(self, other):
        return self.compose(other)

    def inverse(self):
        m = self.matrix
        return MoebiusMap(np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]))

    def norm(self):
        return float(np.linalg.norm(self.matrix, 2))

    def to_json(self):
        return {"matrix": [[float(c.real), float(c.imag)] for c in self.matrix.ravel()]}

    @classmethod
    def from_json(cls, obj):
        vals = [re + 1j * im for re, im in obj["matrix"]]
        return cls(np.array(vals).reshape(2, 2))

    def dumps(self):
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, text):
        return cls.from_json(json.loads(text))


def _lift_chart(x):
    """Chart lift (z1, z2) = (x^1 + i x^2, 1 - x^3); singular only at the north pole."""
    return x[..., 0] + 1j * x[..., 1], 1.0 - x[..., 2]


def _lift_robust(x):
    """Projective lift choosing the better-conditioned chart per point."""
    z1a, z2a = _lift_chart(x)
    z1b = 1.0 + x[..., 2]
    z2b = x[..., 0] - 1j * x[..., 1]
    use_b = x[..., 2] > 0.5
    z1 = np.where(use_b, z1b, z1a)
    z2 = np.where(use_b, z2b, z2a)
    return z1, z2


def _push(map_, z1, z2):
    m = map_.matrix
    w1 = m[0, 0] * z1 + m[0, 1] * z2
    w2 = m[1, 0] * z1 + m[1, 1] * z2
    return w1, w2


def _unproject(w1, w2):
    n = np.abs(w1) ** 2 + np.abs(w2) ** 2
    y3 = (np.abs(w1) ** 2 - np.abs(w2) ** 2) / n
    yc = 2.0 * w1 * np.conj(w2) / n
    return np.stack([yc.real, yc.imag, y3], axis=-1)


def apply_map(map_, x):
    """Image point(s) of unit vector(s) x under the Moebius map."""
    x = np.asarray(x, dtype=float)
    if np.abs(np.sum(x * x, axis=-1) - 1.0).max() > 1e-10:
        raise ValueError("input points must lie on the unit sphere")
    z1, z2 = _lift_robust(x)
    w1, w2 = _push(map_, z1, z2)
    return _unproject(w1, w2)


def conformal_factor(map_, x):
    """det(d phi)(x) > 0, the pointwise metric scaling phi* g0 = det(d phi) g0."""
    x = np.asarray(x, dtype=float)
    z1, z2 = _lift_robust(x)
    w1, w2 = _push(map_, z1, z2)
    num = np.abs(z1) ** 2 + np.abs(z2) ** 2
    den = np.abs(w1) ** 2 + np.abs(w2) ** 2
    return (num / den) ** 2


def _mapped_grid(map_, grid):
    """Mapped angles and conformal data on a quadrature grid (chart lift)."""
    x = grid.xyz
    z1, z2 = _lift_chart(x)
    w1, w2 = _push(map_, z1, z2)
    n = np.abs(w1) ** 2 + np.abs(w2) ** 2
    y3 = np.clip((np.abs(w1) ** 2 - np.abs(w2) ** 2) / n, -1.0, 1.0)
    yc = 2.0 * w1 * np.conj(w2) / n
    thw = np.arccos(y3)
    phw = np.mod(np.angle(yc), 2.0 * np.pi)
    det = ((np.abs(z1) ** 2 + np.abs(z2) ** 2) / n) ** 2
    return thw, phw, det, z1, z2, w1, w2


def pullback_scalar(u, map_):
    """u_phi = u o phi + (1/2) ln det(d phi), analyzed at the band of u."""
    grid = sphere.grid_for_band(u.band, oversample=2)
    thw, phw, det = _mapped_grid(map_, grid)[:3]
    vals = sphere.evaluate(u, thw, phw) + 0.5 * np.log(det)
    return sphere.analyze(vals, 2 * u.band).truncate(u.band)


def pullback_spinor(psi, map_):
    """Conformal spinor pullback det(d phi)^{1/4} beta (psi o phi).

    beta is the chart-level SL(2,C) half-weight cocycle acting on the
    spin-weight +-1/2 components; the pullback preserves the Dirac action.
    """
    basis = psi.basis
    grid = basis.grid
    thw, phw, det, z1, z2, w1, w2 = _mapped_grid(map_, grid)
    vals = basis.evaluate_field(psi.coeffs, thw, phw)
    q = z2 / w2
    q = q / np.abs(q)
    # chart azimuth of source and image (z2 real > 0 in the chart lift)
    phz = np.mod(np.angle(z1), 2.0 * np.pi)
    p_unit = q * np.exp(0.5j * (phz - phw))
    pf = det**0.25
    pulled = np.stack([pf * p_unit * vals[0], pf * np.conj(p_unit) * vals[1]])
    c = np.einsum("jks,s,ks->j", np.conj(basis.samples), grid.weights, pulled)
    return spinor.SpinorField(basis, c)


def center_of_mass(u):
    """CM(e^{2u}): mass-weighted average position, |result| < 1."""
    grid = sphere.grid_for_band(u.band, oversample=2)
    e2u = sphere.exp_on_grid(u, t=2.0)
    w = grid.weights * e2u
    return grid.xyz.T @ w / np.sum(w)


def lambda_matrix(u):
    """Lambda_{kj}(u) = integral of e^{2u} x^k x^j; symmetric positive definite."""
    grid = sphere.grid_for_band(u.band, oversample=2)
    e2u = sphere.exp_on_grid(u, t=2.0)
    xw = grid.xyz * (grid.weights * e2u)[:, None]
    return grid.xyz.T @ xw


def balance(u, tol=1e-8, max_iter=50):
    """Moebius map phi (pure dilations) with |CM(e^{2u_phi})| < tol.

    Damped Newton on the 3-parameter dilation family using Lambda(u) as
    the Jacobian of the first constraint G1(u) = integral of x e^{2u}.
    Returns (phi, u_phi); raises RuntimeError on non-convergence with the
    best defect in the message.
    """
    phi = MoebiusMap.identity()
    u_cur = u
    cm = center_of_mass(u_cur)
    best = float(np.linalg.norm(cm))
    for _ in range(max_iter):
        if best < tol:
            return phi, u_cur
        g1 = cm * _volume2(u_cur)  # G1 = CM * integral e^{2u}
        step = 0.5 * np.linalg.solve(lambda_matrix(u_cur), g1)
        damping = 1.0
        while damping > 1e-4:
            cand_map = phi.compose(MoebiusMap.boost(damping * step))
            cand_u = pullback_scalar(u, cand_map)
            cand_cm = center_of_mass(cand_u)
            if np.linalg.norm(cand_cm) < best:
                phi, u_cur, cm = cand_map, cand_u, cand_cm
                best = float(np.linalg.norm(cm))
                break
            damping *= 0.5
        else:
            break
    if best < tol:
        return phi, u_cur
    raise RuntimeError("balance did not converge: |CM| = %.3e" % best)


def _volume2(u):
    grid = sphere.grid_for_band(u.band, oversample=2)
    return float(np.dot(grid.weights, sphere.exp_on_grid(u, t=2.0)))


def dilation_family(t, axis=3):
    """The Moebius dilation of parameter t > 0 along a coordinate axis.

    Axis 3 is the chart map z -> t z; other axes arise by conjugation with
    fixed rotations.  t = 1 gives the identity.
    """
    if t <= 0:
        raise ValueError("dilation parameter must be positive")
    return MoebiusMap.boost(math.log(t) * np.eye(3)[axis - 1])


def gradient_coordinate(axis, x):
    """grad x^axis on the sphere: e_axis - x^axis x."""
    x = np.asarray(x, dtype=float)
    e = np.zeros(3)
    e[axis - 1] = 1.0
    return e - x[..., axis - 1][..., None] * x


def derivative_checks(axis=3, n_points=200, h=1e-4, seed=0):
    """Finite-difference verification of the dilation-family derivatives.

    Checks d/dt|_{t=1} phi_t(x) = grad x^axis and
    d/dt|_{t=1} det(d phi_t)^{1/2} = -x^axis by central differences;
    returns the two max errors.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n_points, 3))
    x = v / np.linalg.norm(v, axis=1)[:, None]
    mp, mm = dilation_family(1.0 + h, axis), dilation_family(1.0 - h, axis)
    dy = (apply_map(mp, x) - apply_map(mm, x)) / (2.0 * h)
    err_point = float(np.abs(dy - gradient_coordinate(axis, x)).max())
    dd = (np.sqrt(conformal_factor(mp, x)) - np.sqrt(conformal_factor(mm, x))) / (2.0 * h)
    err_det = float(np.abs(dd + x[:, axis - 1]).max())
    return {"point_derivative_error": err_point, "det_half_derivative_error": err_det}
