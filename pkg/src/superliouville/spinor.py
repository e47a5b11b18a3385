"""Spinor fields on the round sphere via a numerically assembled Dirac eigenbasis.

The raw assembly basis consists of spin-weight +-1/2 spherical harmonics
(one per component slot); the Dirac operator couples the two spin weights
through the ladder action

    eth  (s=-1/2 -> +1/2):  +(l + 1/2)
    ethb (s=+1/2 -> -1/2):  -(l + 1/2)

and is realized as the Hermitian block  D = [[0, i*eth], [i*ethb, 0]]
inside each (l, m) sector.  The assembled matrix is diagonalized
numerically and certified only through its spectrum (+-(k+1) with complex
multiplicity 2(k+1), i.e. real multiplicity 4(k+1)) and the orthonormality
of the eigenspinors.

Half-integer degrees and orders are stored as doubled integers (l2 = 2l).
"""

from __future__ import annotations

import json
import math
from math import lgamma

import numpy as np
import scipy.sparse as sparse

from . import sphere


def wigner_d_half(l2, mp2, m2, theta):
    """Wigner small-d matrix element d^l_{m',m}(theta) with doubled indices.

    Valid for integer and half-integer l, m', m (l2 = 2l etc.); vectorized
    over theta.
    """
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    kmin = max(0, (m2 - mp2) // 2)
    kmax = min((l2 + m2) // 2, (l2 - mp2) // 2)
    pref = 0.5 * (
        lgamma((l2 + mp2) / 2 + 1)
        + lgamma((l2 - mp2) / 2 + 1)
        + lgamma((l2 + m2) / 2 + 1)
        + lgamma((l2 - m2) / 2 + 1)
    )
    out = np.zeros_like(theta)
    for k in range(kmin, kmax + 1):
        ln = pref - (
            lgamma((l2 + m2) / 2 - k + 1)
            + lgamma(k + 1)
            + lgamma((mp2 - m2) / 2 + k + 1)
            + lgamma((l2 - mp2) / 2 - k + 1)
        )
        sgn = -1.0 if ((mp2 - m2) // 2 + k) % 2 else 1.0
        out = out + sgn * np.exp(ln) * c ** (l2 + (m2 - mp2) // 2 - 2 * k) * s ** (
            (mp2 - m2) // 2 + 2 * k
        )
    return out


def spin_half_harmonic(s2, l2, m2, theta, phi):
    """Spin-weighted spherical harmonic for s = s2/2, l = l2/2, m = m2/2.

    Phase convention: prefactor e^{i pi s} (reduces to (-1)^s at integer
    spin weight), fixed so that the eth ladder acts with the real constants
    +-(l + 1/2) between the two half-integer weights.
    """
    phase = np.exp(0.5j * np.pi * s2)
    amp = math.sqrt((l2 + 1) / (4.0 * np.pi))
    return phase * amp * wigner_d_half(l2, m2, -s2, theta) * np.exp(0.5j * m2 * np.asarray(phi))


def _harmonic_labels(L):
    """(l2, m2) pairs of the half-integer harmonics kept at band limit L."""
    labels = []
    for l2 in range(1, 2 * L, 2):
        for m2 in range(-l2, l2 + 1, 2):
            labels.append((l2, m2))
    return labels


class SpectrumValidationError(RuntimeError):
    """Assembled Dirac matrix failed its spectrum/multiplicity certification."""


class DiracBasis:
    """Orthonormal eigenbasis of the round Dirac operator at band limit L.

    Eigenvalues are +-(k+1), k+1 <= L, each with complex multiplicity
    2(k+1).  ``samples``/``samples_base`` hold the two-component values of
    every eigenspinor on the oversampled / base quadrature grids, shape
    (n_basis, 2, n_points).  ``index_j`` maps the paper-style index
    j in {+-1, +-2, ...} to a basis position.
    """

    def __init__(self, band):
        if band < 4:
            raise ValueError("band limit must be at least 4")
        self.band = int(band)
        self.labels = _harmonic_labels(band)
        n_raw = 2 * len(self.labels)
        D = self._assemble_matrix().toarray()
        evals, evecs = np.linalg.eigh(D)
        order = np.argsort(evals, kind="stable")
        evals, evecs = evals[order], evecs[:, order]
        evecs = self._fix_cluster_gauge(evals, evecs)
        self.eigenvalues = evals
        self.vectors = evecs
        self.size = n_raw
        self._validate()
        self.grid = sphere.grid_for_band(band, oversample=2)
        self.grid_base = sphere.grid_for_band(band, oversample=1)
        self.samples = self._sample(self.grid)
        self.samples_base = self._sample(self.grid_base)
        self.gamma_matrix = self._gamma_in_eigenbasis()
        self._index_map = self._build_index_map()
        self.orthonormality_defect = self._orthonormality_defect()

    # -- assembly ---------------------------------------------------------

    def _assemble_matrix(self):
        rows, cols, vals = [], [], []
        for i, (l2, _m2) in enumerate(self.labels):
            up, dn = 2 * i, 2 * i + 1
            a = (l2 + 1) / 2.0  # l + 1/2
            # i*eth on the lower component feeds the upper slot; i*ethb back.
            rows += [up, dn]
            cols += [dn, up]
            vals += [1j * a, -1j * a]
        n = 2 * len(self.labels)
        return sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()

    @staticmethod
    def _fix_cluster_gauge(evals, evecs, tol=1e-6):
        """Deterministic gauge inside degenerate clusters.

        Replaces each cluster's eigenvectors by a Gram-Schmidt sweep of the
        cluster projector applied to the assembly unit vectors in index
        order, which does not depend on LAPACK's internal choices.
        """
        n = evals.size
        scale = max(1.0, np.abs(evals).max())
        out = np.empty_like(evecs)
        start = 0
        while start < n:
            stop = start + 1
            while stop < n and abs(evals[stop] - evals[start]) < tol * scale:
                stop += 1
            V = evecs[:, start:stop]
            k = stop - start
            cols = []
            for i in range(n):
                cand = V @ np.conj(V[i, :])  # projector column P e_i
                for c in cols:
                    cand = cand - c * np.vdot(c, cand)
                nrm = np.linalg.norm(cand)
                if nrm > 1e-8:
                    cand = cand / nrm
                    # fix global phase: first significant entry real positive
                    lead = cand[np.argmax(np.abs(cand) > 1e-10)]
                    cand = cand * (np.conj(lead) / abs(lead))
                    cols.append(cand)
                if len(cols) == k:
                    break
            out[:, start:stop] = np.stack(cols, axis=1)
            start = stop
        return out

    def _validate(self, rel_tol=1e-6, cluster_tol=1e-4):
        evals = self.eigenvalues
        report = {"max_rel_eigenvalue_error": 0.0, "multiplicity_ok": True}
        gap = np.abs(evals).min()
        if gap < 1.0 - rel_tol:
            raise SpectrumValidationError(
                "eigenvalue %.3e inside the forbidden gap (-1, 1)" % gap
            )
        for m in range(1, self.band + 1):
            for sgn in (1, -1):
                sel = np.abs(evals - sgn * m) < cluster_tol
                err = np.abs(evals[sel] - sgn * m).max() / m if sel.any() else np.inf
                report["max_rel_eigenvalue_error"] = max(
                    report["max_rel_eigenvalue_error"], 0.0 if sel.any() else np.inf, err
                )
                if sel.sum() != 2 * m or err > rel_tol:
                    report["multiplicity_ok"] = False
                    raise SpectrumValidationError(
                        "eigenvalue %+d: found complex multiplicity %d (expected %d), "
                        "rel. error %.2e" % (sgn * m, int(sel.sum()), 2 * m, err)
                    )
        self.validation = report

    def _sample(self, grid):
        th, ph = grid.theta_phi
        n_raw = self.size
        raw = np.empty((n_raw, 2, grid.n_points), dtype=complex)
        for i, (l2, m2) in enumerate(self.labels):
            raw[2 * i, 0] = spin_half_harmonic(1, l2, m2, th, ph)
            raw[2 * i, 1] = 0.0
            raw[2 * i + 1, 0] = 0.0
            raw[2 * i + 1, 1] = spin_half_harmonic(-1, l2, m2, th, ph)
        # eigenspinor samples: sum_raw V[raw, eig] * raw_sample
        return np.tensordot(self.vectors.T, raw, axes=(1, 0))

    def evaluate_field(self, coeffs, theta, phi):
        """Two-component values of a coefficient vector at arbitrary points."""
        theta = np.asarray(theta, dtype=float)
        raw_c = self.vectors @ coeffs  # assembly-basis coefficients
        out = np.zeros((2, theta.size), dtype=complex)
        for i, (l2, m2) in enumerate(self.labels):
            cu, cd = raw_c[2 * i], raw_c[2 * i + 1]
            if cu != 0.0:
                out[0] += cu * spin_half_harmonic(1, l2, m2, theta, phi)
            if cd != 0.0:
                out[1] += cd * spin_half_harmonic(-1, l2, m2, theta, phi)
        return out

    def evaluate_raw(self, theta, phi):
        """Two-component values of every eigenspinor at arbitrary points."""
        theta = np.asarray(theta, dtype=float)
        n_pts = theta.size
        raw = np.zeros((self.size, 2, n_pts), dtype=complex)
        for i, (l2, m2) in enumerate(self.labels):
            raw[2 * i, 0] = spin_half_harmonic(1, l2, m2, theta, phi)
            raw[2 * i + 1, 1] = spin_half_harmonic(-1, l2, m2, theta, phi)
        return np.tensordot(self.vectors.T, raw, axes=(1, 0))

    def _gamma_in_eigenbasis(self):
        # gamma(omega) = gamma(e1) gamma(e2) acts pointwise as diag(i, -i)
        # on the spin-weight (+1/2, -1/2) components.
        g = np.empty(self.size, dtype=complex)
        g[0::2] = 1j
        g[1::2] = -1j
        return np.conj(self.vectors.T) @ (g[:, None] * self.vectors)

    def _build_index_map(self):
        pos = np.where(self.eigenvalues > 0)[0]
        neg = np.where(self.eigenvalues < 0)[0]
        mapping = {}
        for j, p in enumerate(pos, start=1):
            mapping[j] = int(p)
        for j, p in enumerate(neg[::-1], start=1):
            mapping[-j] = int(p)
        return mapping

    def position(self, j):
        """Basis position of the paper-style index j (j != 0)."""
        return self._index_map[j]

    def _orthonormality_defect(self):
        S = self.samples_base
        w = self.grid_base.weights
        G = np.einsum("iks,s,jks->ij", np.conj(S), w, S)
        return float(np.abs(G - np.eye(self.size)).max())

    # -- field constructors ------------------------------------------------

    def zero_field(self):
        return SpinorField(self, np.zeros(self.size, dtype=complex))

    def eigen_field(self, j, amplitude=1.0):
        """Unit eigenspinor number j (paper indexing, L^2-normalized)."""
        c = np.zeros(self.size, dtype=complex)
        c[self.position(j)] = amplitude
        return SpinorField(self, c)

    def killing_field(self, phase=None):
        """Pointwise unit-length eigenspinor with eigenvalue +1.

        ``phase`` selects a unit vector in the two complex-dimensional
        lambda = 1 cluster; the result satisfies |psi|^2 = 1 everywhere and
        has L^2 norm squared 4*pi.
        """
        sel = np.abs(self.eigenvalues - 1.0) < 1e-8
        idx = np.where(sel)[0]
        if phase is None:
            phase = np.zeros(idx.size, dtype=complex)
            phase[0] = 1.0
        phase = np.asarray(phase, dtype=complex)
        phase = phase / np.linalg.norm(phase)
        c = np.zeros(self.size, dtype=complex)
        c[idx] = phase * math.sqrt(4.0 * np.pi)
        return SpinorField(self, c)


_BASIS_CACHE = {}


def assemble_dirac_basis(band):
    """Cached Dirac eigenbasis for the given band limit (certified spectrum)."""
    if band not in _BASIS_CACHE:
        _BASIS_CACHE[band] = DiracBasis(band)
    return _BASIS_CACHE[band]


class SpinorField:
    """Spinor on S^2, stored as complex coefficients in a Dirac eigenbasis."""

    __slots__ = ("basis", "coeffs")

    def __init__(self, basis, coeffs):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (basis.size,):
            raise ValueError("coefficient length does not match basis")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("non-finite coefficients")
        self.basis = basis
        self.coeffs = coeffs

    def _check(self, other):
        if self.basis is not other.basis:
            raise ValueError("spinor fields live in different bases")

    def __add__(self, other):
        self._check(other)
        return SpinorField(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return SpinorField(self.basis, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpinorField(self.basis, self.coeffs * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return SpinorField(self.basis, -self.coeffs)

    def l2_norm(self):
        return float(np.linalg.norm(self.coeffs))

    def h_half_norm_sq(self):
        """Square of the |D|^{1/2}-seminorm used as the H^{1/2} metric."""
        return float(np.sum(np.abs(self.basis.eigenvalues) * np.abs(self.coeffs) ** 2))

    def grid_values(self, base=False):
        """Two-component values on the (oversampled by default) grid."""
        S = self.basis.samples_base if base else self.basis.samples
        return np.tensordot(self.coeffs, S, axes=(0, 0))

    def to_json(self):
        entries = []
        for j in sorted(self.basis._index_map):
            c = self.coeffs[self.basis.position(j)]
            entries.append([j, float(c.real), float(c.imag)])
        return {"band": self.basis.band, "coeffs": entries}

    @classmethod
    def from_json(cls, obj, basis=None):
        basis = basis or assemble_dirac_basis(int(obj["band"]))
        c = np.zeros(basis.size, dtype=complex)
        for j, re, im in obj["coeffs"]:
            c[basis.position(int(j))] = re + 1j * im
        return cls(basis, c)

    def dumps(self):
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, text, basis=None):
        return cls.from_json(json.loads(text), basis)


def apply_dirac(psi):
    """Dirac operator: multiplies each coefficient by its eigenvalue."""
    return SpinorField(psi.basis, psi.basis.eigenvalues * psi.coeffs)


def apply_abs_dirac_inverse(psi):
    """|D|^{-1}, diagonal in the eigenbasis."""
    return SpinorField(psi.basis, psi.coeffs / np.abs(psi.basis.eigenvalues))


def pointwise_density(psi, band=None):
    """|psi|^2 as a ScalarField (analyzed on the oversampled grid)."""
    v = psi.grid_values()
    dens = np.abs(v[0]) ** 2 + np.abs(v[1]) ** 2
    full = sphere.analyze(dens, 2 * psi.basis.band)
    return full.truncate(band if band is not None else psi.basis.band)


def density_on_grid(psi):
    """|psi|^2 on the oversampled grid (no truncation)."""
    v = psi.grid_values()
    return np.abs(v[0]) ** 2 + np.abs(v[1]) ** 2


def pointwise_pairing_on_grid(psi, phi):
    """Re<psi, phi> on the oversampled grid."""
    a = psi.grid_values()
    b = phi.grid_values()
    return (np.conj(a[0]) * b[0] + np.conj(a[1]) * b[1]).real


def real_pairing(psi, phi, weight=None):
    """Real L^2 pairing, optionally with the weight e^{weight(x)}.

    Returns Re integral of <psi, phi> e^weight; with no weight the pairing
    is evaluated exactly in coefficient space.
    """
    psi._check(phi)
    if weight is None:
        return float(np.vdot(psi.coeffs, phi.coeffs).real)
    w = sphere.exp_on_grid(weight.truncate(psi.basis.band))
    vals = pointwise_pairing_on_grid(psi, phi)
    return float(np.dot(psi.basis.grid.weights, w * vals))


def multiply_by_scalar_grid(psi, grid_factor):
    """Project (grid_factor * psi) back onto the eigenbasis.

    ``grid_factor`` is a real array on the oversampled grid; the result is
    the L^2-orthogonal projection of the pointwise product onto the basis.
    """
    v = psi.grid_values() * grid_factor
    w = psi.basis.grid.weights
    c = np.einsum("jks,s,ks->j", np.conj(psi.basis.samples), w, v)
    return SpinorField(psi.basis, c)


def volume_element_conjugate(psi):
    """Clifford action of the volume element; anticommutes with the Dirac operator."""
    return SpinorField(psi.basis, psi.basis.gamma_matrix @ psi.coeffs)
