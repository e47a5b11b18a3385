"""The natural constraint manifold for the super-Liouville functional.

Provides the e^u-weighted Dirac eigensystem D phi = lambda e^u phi, first
order eigenvector variations in u, the constraint values

    G1(u)      = int x e^{2u}            (3 components),
    G2_k(u,psi)= int <D psi - rho e^u psi, phi_k(u)>,   k < 0,
    G3(u,psi)  = (1/4pi) int (e^{2u} + rho e^u |psi|^2) - 1,

the normal frame (Y_j, Z_k, W) spanning the normal bundle, constrained
gradients with Lagrange multipliers, and the Cauchy-Schwarz determinant of
the two constrained gradients.
"""

from __future__ import annotations

import io
import json
import math

import numpy as np
import scipy.linalg

from . import functional, sphere, spinor


class WeightedEigenSystem:
    """Solution of the generalized eigenproblem D c = lambda M_u c.

    M_u is the Gram matrix of the e^u-weighted Hermitian pairing in the
    round Dirac eigenbasis; eigenvectors are e^u-orthonormal.  Indexing
    follows the convention j in {+-1, +-2, ...} ordered away from zero.
    """

    def __init__(self, u, basis=None):
        basis = basis or spinor.assemble_dirac_basis(u.band)
        self.u = u
        self.basis = basis
        self.gram = _weighted_gram(u, basis)
        D = np.diag(basis.eigenvalues).astype(complex)
        evals, evecs = scipy.linalg.eigh(D, self.gram)
        self.eigenvalues = evals
        self.vectors = evecs  # columns, M_u-orthonormal
        self._pos = np.where(evals > 0)[0]
        self._neg = np.where(evals < 0)[0]
        if self._pos.size + self._neg.size != evals.size:
            raise RuntimeError("weighted Dirac eigenvalue at zero")

    def position(self, j):
        if j > 0:
            return int(self._pos[j - 1])
        if j < 0:
            return int(self._neg[::-1][-j - 1])
        raise ValueError("index 0 is not used")

    def eigenvalue(self, j):
        return float(self.eigenvalues[self.position(j)])

    def eigenvector(self, j):
        return spinor.SpinorField(self.basis, self.vectors[:, self.position(j)])

    def residual(self, j):
        """L^2 norm of (D - lambda_j M_u) c_j in coefficient space."""
        p = self.position(j)
        c = self.vectors[:, p]
        r = self.basis.eigenvalues * c - self.eigenvalues[p] * (self.gram @ c)
        return float(np.linalg.norm(r))

    def weighted_inner(self, psi, j):
        """Hermitian e^u pairing (psi, phi_j)_{e^u} in coefficient space."""
        return complex(np.vdot(self.vectors[:, self.position(j)], self.gram @ psi.coeffs).conjugate())

    def orthonormality_defect(self, j_max):
        idx = [self.position(j) for j in range(1, j_max + 1)]
        idx += [self.position(-j) for j in range(1, j_max + 1)]
        V = self.vectors[:, idx]
        G = np.conj(V.T) @ self.gram @ V
        return float(np.abs(G - np.eye(len(idx))).max())

    def to_csv(self, j_max):
        buf = io.StringIO()
        buf.write("j,lambda,residual\n")
        for j in [j for k in range(1, j_max + 1) for j in (k, -k)]:
            buf.write("%d,%.17g,%.17g\n" % (j, self.eigenvalue(j), self.residual(j)))
        return buf.getvalue()


def _weighted_gram(u, basis):
    """Gram matrix of the e^u pairing over the oversampled grid samples."""
    eu = sphere.exp_on_grid(u.truncate(basis.band))
    w = basis.grid.weights * eu
    S = basis.samples  # (n, 2, N)
    A = (S * w).reshape(basis.size, -1)
    return np.conj(S.reshape(basis.size, -1)) @ A.T


def weighted_eigensystem(u, j_max, basis=None):
    """Weighted Dirac eigensystem exposing indices +-1..+-j_max.

    Raises if j_max exceeds a quarter of the basis size (the trustworthy
    part of the discrete spectrum).
    """
    basis = basis or spinor.assemble_dirac_basis(u.band)
    if j_max > basis.size // 4:
        raise ValueError("j_max exceeds the trusted spectral range")
    sys_ = WeightedEigenSystem(u, basis)
    sys_.j_max = j_max
    return sys_


def _cluster_of(evals, p, tol=1e-6):
    scale = max(1.0, float(np.abs(evals).max()))
    return np.where(np.abs(evals - evals[p]) < tol * scale)[0]


def eigen_variation(u, v, k, basis=None, system=None, return_base=False):
    """First-order variation of the weighted eigenspinor phi_k(u) along v.

    Degenerate clusters are pre-diagonalized with respect to the
    perturbation form before differentiating; the returned field is the
    variation of the cluster member that diagonalizes the perturbation
    (for v constant every gauge gives the same answer).
    """
    sys_ = system or WeightedEigenSystem(u, basis)
    basis = sys_.basis
    p = sys_.position(k)
    evals, C = sys_.eigenvalues, sys_.vectors
    B = _weighted_gram_direction(u, v, basis)
    cluster = _cluster_of(evals, p)
    # pre-diagonalize the cluster against the perturbation matrix
    Bc = np.conj(C[:, cluster].T) @ B @ C[:, cluster]
    _, R = np.linalg.eigh(-evals[p] * Bc)
    ck = (C[:, cluster] @ R)[:, list(cluster).index(p)]
    lam_k = evals[p]
    b = np.conj(C.T) @ (B @ ck)  # b_m = c_m^H B c_k
    out = np.zeros(basis.size, dtype=complex)
    mask = np.ones(evals.size, dtype=bool)
    mask[cluster] = False
    amps = np.zeros(evals.size, dtype=complex)
    amps[mask] = lam_k * b[mask] / (evals[mask] - lam_k)
    out = C @ amps
    bkk = float(np.real(np.conj(ck) @ (B @ ck)))
    out = out - 0.5 * bkk * ck
    variation = spinor.SpinorField(basis, out)
    if return_base:
        return variation, spinor.SpinorField(basis, ck)
    return variation


def _weighted_gram_direction(u, v, basis):
    """Derivative of the weighted Gram matrix: pairing against v e^u."""
    eu = sphere.exp_on_grid(u.truncate(basis.band))
    vv = sphere.synthesize(v.truncate(basis.band), oversample=2)
    w = basis.grid.weights * eu * vv
    S = basis.samples
    return np.conj(S.reshape(basis.size, -1)) @ (S * w).reshape(basis.size, -1).T


class ConstraintValues:
    __slots__ = ("G1", "G2", "G3")

    def __init__(self, G1, G2, G3):
        self.G1 = np.asarray(G1, dtype=float)
        self.G2 = np.asarray(G2, dtype=float)
        self.G3 = float(G3)

    @property
    def max_abs(self):
        vals = [float(np.abs(self.G1).max()), abs(self.G3)]
        if self.G2.size:
            vals.append(float(np.abs(self.G2).max()))
        return max(vals)

    def to_json(self):
        return {"G1": list(self.G1), "G2": list(self.G2), "G3": self.G3}


def constraints(s, j_max=None, system=None):
    """Constraint values at a state; G2 truncated at j_max negative modes."""
    basis = s.psi.basis
    if j_max is None:
        j_max = basis.size // 4
    grid = sphere.grid_for_band(s.u.band, oversample=2)
    e2u = sphere.exp_on_grid(s.u, t=2.0)
    g1 = grid.xyz.T @ (grid.weights * e2u)
    g2 = np.empty(j_max)
    if j_max > 0:
        sys_ = system or WeightedEigenSystem(s.u, basis)
        for i, k in enumerate(range(-1, -j_max - 1, -1)):
            g2[i] = (sys_.eigenvalue(k) - s.rho) * sys_.weighted_inner(s.psi, k).real
    vol2 = float(np.dot(grid.weights, e2u))
    mixed = _mixed_integral(s)
    g3 = (vol2 + s.rho * mixed) / (4.0 * np.pi) - 1.0
    return ConstraintValues(g1, g2, g3)


def _mixed_integral(s):
    grid = s.psi.basis.grid
    eu = sphere.exp_on_grid(s.u)
    return float(np.dot(grid.weights, eu * spinor.density_on_grid(s.psi)))


class NormalFrame:
    """Vectors spanning the normal bundle of Neh_rho at a state.

    ``Y`` (3 vectors), ``Z`` (one per retained negative cluster index) and
    ``W`` (one vector); each vector is a (ScalarField, SpinorField) pair in
    the H^1 x H^{1/2} metric.
    """

    def __init__(self, Y, Z, W):
        self.Y = Y
        self.Z = Z
        self.W = W

    @property
    def vectors(self):
        return list(self.Y) + list(self.Z) + [self.W]

    def gram(self):
        vs = self.vectors
        n = len(vs)
        G = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                G[i, j] = G[j, i] = functional.metric_inner(vs[i], vs[j])
        return G


def normal_frame(s, j_max=None, system=None):
    """Assemble the (Y_j, Z_k, W) frame at a state near Neh_rho."""
    basis = s.psi.basis
    band = s.u.band
    if j_max is None:
        j_max = basis.size // 4
    sys_ = system or WeightedEigenSystem(s.u, basis)
    grid2 = sphere.grid_for_band(band, oversample=2)
    e2u_vals = sphere.exp_on_grid(s.u, t=2.0)
    eu_vals = sphere.exp_on_grid(s.u)
    dens_vals = spinor.density_on_grid(s.psi)
    zero_sp = basis.zero_field()

    def lift_scalar(vals):
        f = sphere.analyze(vals, 2 * band).truncate(band)
        return sphere.inverse_one_minus_laplacian(f)

    Y = []
    for j in range(3):
        Y.append((lift_scalar(grid2.xyz[:, j] * e2u_vals), zero_sp))

    W_scalar = lift_scalar(2.0 * e2u_vals + s.rho * eu_vals * dens_vals)
    W_spinor = spinor.apply_abs_dirac_inverse(
        2.0 * s.rho * spinor.multiply_by_scalar_grid(s.psi, eu_vals)
    )
    W = (W_scalar, W_spinor)

    Z = _z_vectors(s, sys_, j_max, eu_vals)
    return NormalFrame(Y, Z, W)


def _z_vectors(s, sys_, j_max, eu_vals):
    """The Z_k family, k = -1..-j_max, Riesz representatives of DG2_k.

    Every retained complex eigenmode contributes two real normal
    directions: the Riesz representative of the real pairing against
    phi_k and the one against i phi_k (the negative spectral projection
    P^- psi = 0 is two real conditions per complex mode).
    """
    basis = s.psi.basis
    band = s.u.band
    grid = basis.grid
    evals, C = sys_.eigenvalues, sys_.vectors
    # weighted eigenspinor grid samples
    Phi = np.tensordot(C.T, basis.samples, axes=(1, 0))  # (n, 2, N)
    pair = np.conj(np.conj(C.T) @ (sys_.gram @ s.psi.coeffs))  # (psi, phi_m)_{e^u}
    psi_vals = _field_vals(s.psi, basis)
    out = []
    scale = max(1.0, float(np.abs(evals).max()))
    for k in range(-1, -j_max - 1, -1):
        p = sys_.position(k)
        lam_k = evals[p]
        cluster = np.abs(evals - lam_k) < 1e-6 * scale
        wts = np.zeros(evals.size, dtype=complex)
        mask = ~cluster
        wts[mask] = lam_k * (evals[mask] - s.rho) * pair[mask] / (evals[mask] - lam_k)
        xi = np.tensordot(np.conj(wts), Phi, axes=(0, 0))  # sum conj(w_m) phi_m
        dk = (np.abs(Phi[p][0]) ** 2 + np.abs(Phi[p][1]) ** 2).real
        rsp = basis.eigenvalues * C[:, p] - s.rho * _project_weighted(basis, eu_vals, C[:, p])
        for phase in (1.0, 1.0j):
            phik = phase * Phi[p]
            s_vals = eu_vals * (np.conj(xi[0]) * phik[0] + np.conj(xi[1]) * phik[1]).real
            # normalization (diagonal) term of the eigenvector variation
            s_vals = s_vals - 0.5 * (lam_k - s.rho) * (phase * pair[p]).real * eu_vals * dk
            # explicit-u derivative of G2_k
            s_vals = s_vals - s.rho * eu_vals * (
                np.conj(psi_vals[0]) * phik[0] + np.conj(psi_vals[1]) * phik[1]
            ).real
            z_scalar = sphere.inverse_one_minus_laplacian(
                sphere.analyze(s_vals, 2 * band).truncate(band)
            )
            z_spinor = spinor.apply_abs_dirac_inverse(spinor.SpinorField(basis, phase * rsp))
            out.append((z_scalar, z_spinor))
    return out


def _field_vals(psi, basis):
    return np.tensordot(psi.coeffs, basis.samples, axes=(0, 0))


def _project_weighted(basis, eu_vals, coeffs):
    v = np.tensordot(coeffs, basis.samples, axes=(0, 0)) * eu_vals
    return np.einsum("jks,s,ks->j", np.conj(basis.samples), basis.grid.weights, v)


def constrained_gradient(s, j_max=None, system=None, frame=None):
    """Project the gradient onto the tangent space of Neh_rho.

    Returns (tangent, multipliers) with multipliers alpha (3), mu (list),
    tau solving the frame Gram system; the tangent is metric-orthogonal to
    every frame vector.
    """
    frame = frame or normal_frame(s, j_max=j_max, system=system)
    grad = functional.gradient(s)
    tangent, m = _project_out(grad, frame)
    k = len(frame.Z)
    multipliers = {"alpha": m[:3], "mu": m[3 : 3 + k], "tau": float(m[-1])}
    return tangent, multipliers


def _project_out(vec, frame):
    vs = frame.vectors
    G = frame.gram()
    rhs = np.array([functional.metric_inner(v, vec) for v in vs])
    m = np.linalg.solve(G, rhs)
    su = vec[0]
    sp = vec[1]
    for mi, v in zip(m, vs):
        su = su - mi * v[0]
        sp = sp - mi * v[1]
    return (su, sp), m


def collinearity_det(s, j_max=None, system=None, frame=None):
    """Gram determinant of the two constrained gradients (Cauchy-Schwarz).

    det = |grad^N J1|^2 |grad^N J2|^2 - <grad^N J1, grad^N J2>^2 >= 0.
    """
    if s.psi.l2_norm() == 0.0:
        raise ValueError("collinearity determinant requires psi != 0")
    frame = frame or normal_frame(s, j_max=j_max, system=system)
    g1 = functional.gradient_J1(s)
    g2 = functional.gradient_J2(s)
    t1, _ = _project_out(g1, frame)
    t2, _ = _project_out(g2, frame)
    a = functional.metric_inner(t1, t1)
    bb = functional.metric_inner(t2, t2)
    c = functional.metric_inner(t1, t2)
    return a * bb - c * c
