"""Scalar spectral analysis on the round 2-sphere.

Real spherical-harmonic transforms on a Gauss-Legendre x uniform-longitude
grid, together with the differential operators and integrals used by the
rest of the package.  Conventions:

* real spherical harmonics, orthonormal for the unnormalized surface
  measure (integral of Y^2 over the sphere equals 1);
* coefficients of a field of band limit L are stored as a flat array of
  length (L+1)^2, index(l, m) = l^2 + l + m;
* the Laplace-Beltrami operator acts diagonally, multiplying the (l, m)
  coefficient by -l(l+1).

Products of fields and pointwise exponentials are evaluated on a grid of
twice the band limit before re-analysis, which keeps aliasing below the
tolerances quoted in the docstrings.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.special import sph_harm_y


def laplace_eigendata(k):
    """Eigenvalue and multiplicity of the k-th Laplace eigenspace on S^2.

    Returns (k(k+1), C(2+k,2) - C(k,2)); the multiplicity equals 2k+1.
    """
    if k < 0:
        raise ValueError("eigenspace index must be nonnegative")
    mult = math.comb(2 + k, 2) - math.comb(k, 2)
    return k * (k + 1), mult


def coeff_index(l, m):
    """Flat index of the (l, m) real-harmonic coefficient."""
    return l * l + l + m


def num_coeffs(L):
    return (L + 1) * (L + 1)


@dataclass(frozen=True)
class SphereGrid:
    """Gauss-Legendre colatitude x uniform longitude quadrature grid.

    ``theta``/``phi`` are the 1d node arrays; ``weights`` is the flattened
    (n_lat * n_lon) quadrature weight vector summing to 4*pi.  Fields are
    stored flattened in row-major (lat, lon) order.
    """

    n_lat: int
    n_lon: int
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray

    @property
    def xyz(self):
        """Unit vectors of all nodes, shape (n_lat*n_lon, 3)."""
        th = np.repeat(self.theta, self.n_lon)
        ph = np.tile(self.phi, self.n_lat)
        st = np.sin(th)
        return np.stack([st * np.cos(ph), st * np.sin(ph), np.cos(th)], axis=1)

    @property
    def theta_phi(self):
        th = np.repeat(self.theta, self.n_lon)
        ph = np.tile(self.phi, self.n_lat)
        return th, ph

    @property
    def n_points(self):
        return self.n_lat * self.n_lon


def _gauss_legendre_grid(n_lat, n_lon):
    nodes, w = npleg.leggauss(n_lat)
    theta = np.arccos(nodes[::-1])
    w = w[::-1]
    phi = 2.0 * np.pi * np.arange(n_lon) / n_lon
    weights = np.repeat(w * (2.0 * np.pi / n_lon), n_lon)
    return SphereGrid(n_lat, n_lon, theta, phi, weights)


@lru_cache(maxsize=None)
def grid_for_band(L, oversample=1):
    """Quadrature grid for band limit L; ``oversample=2`` doubles the band.

    n_lat = L'+2 Gauss-Legendre nodes and n_lon = 2L'+2 longitudes with
    L' = oversample * L, exact for products of two degree-L' harmonics.
    """
    Leff = L * oversample
    return _gauss_legendre_grid(Leff + 2, 2 * Leff + 2)


def _real_harmonic_matrix(L, grid):
    """Matrix Y with Y[p, coeff_index(l, m)] = Y_lm(node p)."""
    th, ph = grid.theta_phi
    Y = np.empty((grid.n_points, num_coeffs(L)))
    for l in range(L + 1):
        # scipy returns the complex Y_l^m; build the real combinations.
        Y[:, coeff_index(l, 0)] = sph_harm_y(l, 0, th, ph).real
        for m in range(1, l + 1):
            ylm = sph_harm_y(l, m, th, ph)
            s = math.sqrt(2.0) * (-1.0) ** m
            Y[:, coeff_index(l, m)] = s * ylm.real
            Y[:, coeff_index(l, -m)] = s * ylm.imag
    return Y


@lru_cache(maxsize=None)
def _harmonic_matrix_cached(L, oversample):
    return _real_harmonic_matrix(L, grid_for_band(L, oversample))


class ScalarField:
    """Band-limited real function on S^2, stored by real-harmonic coefficients."""

    __slots__ = ("band", "coeffs")

    def __init__(self, band, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if band < 0 or coeffs.shape != (num_coeffs(band),):
            raise ValueError("coefficient array does not match band limit")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("non-finite coefficients")
        self.band = int(band)
        self.coeffs = coeffs

    @classmethod
    def zero(cls, band):
        return cls(band, np.zeros(num_coeffs(band)))

    @classmethod
    def constant(cls, band, value):
        c = np.zeros(num_coeffs(band))
        c[0] = value * math.sqrt(4.0 * np.pi)
        return cls(band, c)

    @classmethod
    def coordinate(cls, band, axis):
        """The coordinate function x^axis (axis in {1, 2, 3}) at band limit `band`."""
        if axis not in (1, 2, 3):
            raise ValueError("axis must be 1, 2 or 3")
        c = np.zeros(num_coeffs(band))
        # x^3 = sqrt(4 pi / 3) Y_{1,0}; x^1, x^2 are the m = +-1 partners.
        amp = math.sqrt(4.0 * np.pi / 3.0)
        m = {1: 1, 2: -1, 3: 0}[axis]
        c[coeff_index(1, m)] = amp
        return cls(band, c)

    def __add__(self, other):
        self._check(other)
        return ScalarField(self.band, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return ScalarField(self.band, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return ScalarField(self.band, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.band, -self.coeffs)

    def _check(self, other):
        if self.band != other.band:
            raise ValueError("band limits differ")

    def truncate(self, band):
        """Copy of the field truncated (or zero-padded) to another band limit."""
        c = np.zeros(num_coeffs(band))
        n = min(c.size, self.coeffs.size)
        c[:n] = self.coeffs[:n]
        return ScalarField(band, c)

    @property
    def mean(self):
        """Average value over the sphere."""
        return float(self.coeffs[0]) / math.sqrt(4.0 * np.pi)

    def to_json(self):
        entries = []
        for l in range(self.band + 1):
            for m in range(-l, l + 1):
                entries.append([l, m, float(self.coeffs[coeff_index(l, m)])])
        return {"band": self.band, "coeffs": entries}

    @classmethod
    def from_json(cls, obj):
        band = int(obj["band"])
        c = np.zeros(num_coeffs(band))
        for l, m, v in obj["coeffs"]:
            c[coeff_index(int(l), int(m))] = float(v)
        return cls(band, c)

    def dumps(self):
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, text):
        return cls.from_json(json.loads(text))


def synthesize(field, oversample=1):
    """Grid values of a ScalarField on the (possibly oversampled) standard grid."""
    Y = _harmonic_matrix_cached(field.band, oversample)
    return Y @ field.coeffs


def analyze(values, band, oversample=1):
    """Project grid values onto real harmonics up to ``band``.

    Exact (to rounding) for values sampled from a field of degree at most
    ``oversample * band``; inverse of :func:`synthesize` on band-limited input.
    """
    grid = grid_for_band(band, oversample)
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n_points,):
        raise ValueError("grid values do not match the band-%d grid" % band)
    Y = _harmonic_matrix_cached(band, oversample)
    return ScalarField(band, Y.T @ (grid.weights * values))


def evaluate(field, theta, phi):
    """Values of a ScalarField at arbitrary points (theta, phi)."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    out = np.zeros_like(theta)
    for l in range(field.band + 1):
        out += field.coeffs[coeff_index(l, 0)] * sph_harm_y(l, 0, theta, phi).real
        for m in range(1, l + 1):
            cp = field.coeffs[coeff_index(l, m)]
            cm = field.coeffs[coeff_index(l, -m)]
            if cp == 0.0 and cm == 0.0:
                continue
            ylm = sph_harm_y(l, m, theta, phi)
            s = math.sqrt(2.0) * (-1.0) ** m
            out += s * (cp * ylm.real + cm * ylm.imag)
    return out


def integrate(field):
    """Integral of the field over S^2 (exact quadrature for band-limited input)."""
    return float(field.coeffs[0]) * math.sqrt(4.0 * np.pi)


def integrate_grid(values, grid):
    return float(np.dot(grid.weights, values))


def mean_value(field):
    """Average of the field over the sphere."""
    return integrate(field) / (4.0 * np.pi)


def laplacian(field):
    """Laplace-Beltrami operator; multiplies coefficient (l, m) by -l(l+1)."""
    c = field.coeffs.copy()
    for l in range(field.band + 1):
        c[l * l : (l + 1) * (l + 1)] *= -l * (l + 1)
    return ScalarField(field.band, c)


def _degree_multipliers(band, fn):
    out = np.empty(num_coeffs(band))
    for l in range(band + 1):
        out[l * l : (l + 1) * (l + 1)] = fn(l)
    return out


def inverse_one_minus_laplacian(field):
    """(1 - Delta)^{-1}, diagonal: coefficient (l, m) divided by 1 + l(l+1)."""
    mult = _degree_multipliers(field.band, lambda l: 1.0 / (1.0 + l * (l + 1)))
    return ScalarField(field.band, field.coeffs * mult)


def multiply(f, g, band=None):
    """Pointwise product, evaluated on the oversampled grid and re-analyzed.

    The result is exact when deg f + deg g <= 2 * max(band_f, band_g); the
    returned band defaults to the common band of the inputs (truncation).
    """
    L = max(f.band, g.band)
    vf = synthesize(f.truncate(L), oversample=2)
    vg = synthesize(g.truncate(L), oversample=2)
    full = analyze(vf * vg, 2 * L)
    return full.truncate(band if band is not None else min(f.band, g.band))


def grad_dot(f, g, band=None):
    """Pointwise inner product of the gradients of two fields.

    Uses the exact identity grad f . grad g = (Delta(fg) - f Delta g
    - g Delta f) / 2, with the product formed on the oversampled grid.
    """
    L = max(f.band, g.band)
    fg = multiply(f, g, band=2 * L)
    term = laplacian(fg) - multiply(f, laplacian(g), band=2 * L) - multiply(g, laplacian(f), band=2 * L)
    return (0.5 * term).truncate(band if band is not None else min(f.band, g.band))


def exp_on_grid(field, t=1.0, oversample=2):
    """Grid values of exp(t * field) on the oversampled grid (no truncation)."""
    return np.exp(t * synthesize(field, oversample=oversample))


def h1_inner(f, g):
    """H^1 inner product: integral of grad f . grad g + f g."""
    mult = _degree_multipliers(f.band, lambda l: 1.0 + l * (l + 1))
    return float(np.dot(f.coeffs * mult, g.coeffs))


def h1_norm(f):
    return math.sqrt(h1_inner(f, f))


def l2_inner(f, g):
    return float(np.dot(f.coeffs, g.coeffs))
