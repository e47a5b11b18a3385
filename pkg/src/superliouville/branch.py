"""Solution branches of the super-Liouville system.

The explicit Killing branch, a damped Gauss-Newton corrector on a reduced
spectral subspace, pseudo-arclength continuation in rho with Morse-index
bookkeeping, bifurcation detection through index jumps at the origin, and
the constraint-preserving deformation flow with its conservation
certificates.
"""

from __future__ import annotations

import io
import json
import math

import numpy as np
import scipy.linalg

from . import functional, nehari, sphere, spinor


class BranchPoint:
    __slots__ = ("state", "residual_norm", "index_l", "constraint_norm")

    def __init__(self, state, residual_norm, index_l, constraint_norm):
        self.state = state
        self.residual_norm = float(residual_norm)
        self.index_l = int(index_l)
        self.constraint_norm = float(constraint_norm)


def killing_branch(rho, band=None, basis=None, phase=None):
    """The explicit branch u = -ln rho, psi = (sqrt(rho^2-1)/rho) phi_1.

    phi_1 is the pointwise unit-length Killing eigenspinor (int |phi_1|^2
    = 4 pi); requires rho > 1.
    """
    if rho <= 1:
        raise ValueError("rho must exceed 1 on the Killing branch")
    basis = basis or spinor.assemble_dirac_basis(band if band else 16)
    band = basis.band
    u = sphere.ScalarField.constant(band, -math.log(rho))
    amp = math.sqrt(rho * rho - 1.0) / rho
    psi = amp * basis.killing_field(phase)
    return functional.State(u, psi, rho)


def killing_energy(rho):
    """Closed form J_rho on the Killing branch: 4 pi (1 - rho^{-2} - 2 ln rho)."""
    return 4.0 * np.pi * (1.0 - rho ** (-2) - 2.0 * math.log(rho))


# -- reduced spectral subspace for the Newton corrector ---------------------


class Subspace:
    """Low-frequency real coordinates for (u, psi) used by the solvers.

    u is restricted to degree <= u_band, psi to Dirac eigenvalues with
    |lambda| <= lam_max; coordinates are real (Re/Im split for psi).
    """

    def __init__(self, basis, u_band=4, lam_max=3):
        self.basis = basis
        self.u_band = min(u_band, basis.band)
        self.n_u = sphere.num_coeffs(self.u_band)
        self.psi_idx = np.where(np.abs(basis.eigenvalues) <= lam_max + 0.5)[0]
        self.n_psi = self.psi_idx.size
        self.dim = self.n_u + 2 * self.n_psi

    def pack(self, s):
        x = np.empty(self.dim)
        x[: self.n_u] = s.u.coeffs[: self.n_u]
        c = s.psi.coeffs[self.psi_idx]
        x[self.n_u : self.n_u + self.n_psi] = c.real
        x[self.n_u + self.n_psi :] = c.imag
        return x

    def unpack(self, x, rho):
        cu = np.zeros(sphere.num_coeffs(self.basis.band))
        cu[: self.n_u] = x[: self.n_u]
        cc = np.zeros(self.basis.size, dtype=complex)
        cc[self.psi_idx] = (
            x[self.n_u : self.n_u + self.n_psi] + 1j * x[self.n_u + self.n_psi :]
        )
        return functional.State(
            sphere.ScalarField(self.basis.band, cu),
            spinor.SpinorField(self.basis, cc),
            rho,
        )

    def residual_vector(self, s):
        """Projected Euler-Lagrange residual plus the G1/G3 constraints."""
        r = functional.el_residual(s)
        cons = nehari.constraints(s, j_max=0)
        out = np.empty(self.dim + 4)
        out[: self.n_u] = r.scalar_part.coeffs[: self.n_u]
        cs = r.spinor_part.coeffs[self.psi_idx]
        out[self.n_u : self.n_u + self.n_psi] = cs.real
        out[self.n_u + self.n_psi : self.dim] = cs.imag
        out[self.dim : self.dim + 3] = cons.G1
        out[self.dim + 3] = cons.G3
        return out


class BasinEscape(RuntimeError):
    pass


def newton_solve(s0, rho, u_band=4, lam_max=3, tol=1e-9, max_iter=40, svd_cutoff=1e-8):
    """Damped Gauss-Newton least-squares solve of (EL) with G1, G3 pinned.

    Works on the reduced spectral subspace; steps use a truncated-SVD
    pseudoinverse so that conformal/rotational orbit directions (an
    expected Jacobian kernel) do not blow up the step.  Accepts when the
    combined residual norm falls below ``tol``; raises BasinEscape if the
    residual grows tenfold, RuntimeError on max_iter.
    """
    basis = s0.psi.basis
    sub = Subspace(basis, u_band=u_band, lam_max=lam_max)
    x = sub.pack(s0)
    f = sub.residual_vector(sub.unpack(x, rho))
    norm0 = np.linalg.norm(f)
    best = norm0
    h = 1e-6
    for _ in range(max_iter):
        if best < tol:
            break
        J = np.empty((f.size, sub.dim))
        for i in range(sub.dim):
            xp = x.copy()
            xp[i] += h
            xm = x.copy()
            xm[i] -= h
            J[:, i] = (
                sub.residual_vector(sub.unpack(xp, rho))
                - sub.residual_vector(sub.unpack(xm, rho))
            ) / (2 * h)
        U, sv, Vt = np.linalg.svd(J, full_matrices=False)
        keep = sv > svd_cutoff * sv[0]
        step = -Vt[keep].T @ ((U[:, keep].T @ f) / sv[keep])
        damping = 1.0
        while damping > 1e-6:
            cand = x + damping * step
            fc = sub.residual_vector(sub.unpack(cand, rho))
            if np.linalg.norm(fc) < best:
                x, f, best = cand, fc, np.linalg.norm(fc)
                break
            damping *= 0.5
        else:
            break
        if best > 10.0 * max(norm0, tol):
            raise BasinEscape("residual grew tenfold: %.3e" % best)
    if best >= tol and (best > 10.0 * max(norm0, tol) or best > 1.0):
        raise BasinEscape("basin escape: residual stuck at %.3e" % best)
    if best >= tol:
        raise RuntimeError("Newton did not converge: residual %.3e" % best)
    s = sub.unpack(x, rho)
    cons = nehari.constraints(s)
    return BranchPoint(s, best, morse_index(s, sub), cons.max_abs)


def morse_index(s, sub=None, tol=1e-6):
    """Morse index of the second variation on the Nehari tangent space.

    At the origin the analytic count is used; elsewhere the Hessian is
    finite-differenced on the reduced subspace, projected orthogonal to the
    normal frame, and its negative eigenvalues counted.
    """
    if not s.u.coeffs.any() and s.psi.l2_norm() == 0.0:
        return functional.hessian_index_at_origin(s.rho)["index"]
    sub = sub or Subspace(s.psi.basis)
    return _numeric_index(s, sub, tol)


def _numeric_index(s, sub, tol, h=1e-4):
    basis = sub.basis
    # metric Gram of the subspace coordinate directions (diagonal)
    lam = np.abs(basis.eigenvalues[sub.psi_idx])
    diag_u = np.array(
        [1.0 + l * (l + 1) for l in range(sub.u_band + 1) for _ in range(2 * l + 1)]
    )
    metric = np.concatenate([diag_u, lam, lam])

    def grad_vec(x):
        st = sub.unpack(x, s.rho)
        gu, gp = functional.gradient(st)
        out = np.empty(sub.dim)
        out[: sub.n_u] = gu.coeffs[: sub.n_u]
        c = gp.coeffs[sub.psi_idx]
        out[sub.n_u : sub.n_u + sub.n_psi] = c.real
        out[sub.n_u + sub.n_psi :] = c.imag
        return metric * out  # back to the dual pairing

    x0 = sub.pack(s)
    H = np.empty((sub.dim, sub.dim))
    for i in range(sub.dim):
        xp = x0.copy()
        xp[i] += h
        xm = x0.copy()
        xm[i] -= h
        H[:, i] = (grad_vec(xp) - grad_vec(xm)) / (2 * h)
    H = 0.5 * (H + H.T)
    # restrict to the orthogonal complement of the normal frame
    frame = nehari.normal_frame(s, j_max=min(12, basis.size // 4))
    F = []
    for fu, fp in frame.vectors:
        v = np.empty(sub.dim)
        v[: sub.n_u] = fu.coeffs[: sub.n_u]
        c = fp.coeffs[sub.psi_idx]
        v[sub.n_u : sub.n_u + sub.n_psi] = c.real
        v[sub.n_u + sub.n_psi :] = c.imag
        F.append(metric * v)
    F = np.array(F).T  # constraints: F^T x = 0
    q, _ = np.linalg.qr(F)
    P = np.eye(sub.dim) - q @ q.T
    M = np.diag(metric)
    Hp = P.T @ H @ P + (np.eye(sub.dim) - P) * metric.max() * 10.0
    evals = scipy.linalg.eigh(0.5 * (Hp + Hp.T), M, eigvals_only=True)
    return int(np.sum(evals < -tol))


def continue_branch(start, rho_range, step, **newton_kw):
    """Pseudo-arclength continuation of a branch over a rho interval.

    Natural-parameter predictor with secant extrapolation; on Newton
    failure the step is halved, stopping below 1e-6 with partial results.
    """
    lo, hi = rho_range
    points = [start]
    prev = None
    rho = start.state.rho
    direction = 1.0 if hi >= rho else -1.0
    h = abs(step)
    while (direction > 0 and rho < hi - 1e-12) or (direction < 0 and rho > lo + 1e-12):
        rho_next = min(hi, rho + direction * h) if direction > 0 else max(lo, rho + direction * h)
        cur = points[-1].state
        if prev is not None and abs(prev.rho - rho) > 0:
            t = (rho_next - rho) / (rho - prev.rho)
            guess = functional.State(
                cur.u + t * (cur.u - prev.u), cur.psi + t * (cur.psi - prev.psi), rho_next
            )
        else:
            guess = functional.State(cur.u, cur.psi, rho_next)
        try:
            pt = newton_solve(guess, rho_next, **newton_kw)
        except (RuntimeError, BasinEscape):
            h *= 0.5
            if h < 1e-6:
                break
            continue
        prev = cur
        points.append(pt)
        rho = rho_next
    return points


def detect_bifurcation(rho_range):
    """Integer points of index jump at the origin inside the open range.

    Returns [(rho*, kernel_dim)] with kernel_dim = the index jump 4 rho*.
    """
    lo, hi = rho_range
    out = []
    m = max(2, math.floor(lo) + 1)
    delta = 1e-3
    while m <= hi:
        if lo < m:
            jump = (
                functional.hessian_index_at_origin(m + delta)["index"]
                - functional.hessian_index_at_origin(m - delta)["index"]
            )
            if jump > 0:
                out.append((m, jump))
        m += 1
    return out


def branch_to_csv(points):
    buf = io.StringIO()
    buf.write("rho,J,J1,J2,residual,index_l,constraint_norm\n")
    for p in points:
        j1, j2 = functional.eval_J1_J2(p.state)
        buf.write(
            "%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g\n"
            % (
                p.state.rho,
                j1 - p.state.rho * j2,
                j1,
                j2,
                p.residual_norm,
                p.index_l,
                p.constraint_norm,
            )
        )
    return buf.getvalue()


# -- deformation flow --------------------------------------------------------


def admissible_flow_state(basis, rho_star, alpha=0.15, mix_index=3):
    """A small state on Neh_{rho*} with J_{rho*} = 0 inside the cutoff plateau.

    Uses u = const and psi = alpha (cos(sigma) phi_{+1} + sin(sigma) phi_{+m})
    mixing the first two positive Dirac clusters; the mixing angle and the
    constant are solved so that J1/J2 = rho* and G3 = 0.  G1 and G2 vanish
    by symmetry (constant weight, positive modes only).
    """
    import scipy.optimize

    band = basis.band

    def make(c, sigma, rho):
        u = sphere.ScalarField.constant(band, c)
        psi = alpha * (
            math.cos(sigma) * basis.eigen_field(1)
            + math.sin(sigma) * basis.eigen_field(mix_index)
        )
        return functional.State(u, psi, rho)

    def eqs(p):
        s = make(p[0], p[1], rho_star)
        j1, j2 = functional.eval_J1_J2(s)
        return [j1 / j2 - rho_star, nehari.constraints(s, j_max=0).G3]

    (c, sigma), _, ier, msg = scipy.optimize.fsolve(eqs, [-0.01, 0.7], full_output=True)
    if ier != 1:
        raise RuntimeError("admissible state solve failed: %s" % msg)
    return make(c, sigma, rho_star)


def smoothstep_bump(x, eps, eps1):
    """C^2 cutoff: 1 on [-2 eps1, 2 eps1], 0 outside [-eps, eps]."""
    ax = abs(x)
    if ax <= 2.0 * eps1:
        return 1.0
    if ax >= eps:
        return 0.0
    t = (eps - ax) / (eps - 2.0 * eps1)
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def flow_field(s, rho_star, eps, eps1, j_max=None):
    """The cut-off deformation vector field X~ at a state.

    X solves the linear system in span{grad J1, grad J2, Y_j, Z_k, W}:

        <X, grad J1> = J2,   <X, grad J2> = 0,
        <X, Y_j> = 0,        <X, Z_k> = 0,
        <X, W>  = -int e^u |psi|^2,

    which makes J_rho, J2, G1, G2 and G3 first integrals of the flow.
    Returns (X~_u, X~_psi, omega).
    """
    basis = s.psi.basis
    if s.psi.l2_norm() == 0.0:
        return sphere.ScalarField.zero(s.u.band), basis.zero_field(), 0.0
    j1, j2 = functional.eval_J1_J2(s)
    norms = sphere.h1_norm(s.u) ** 2 + s.psi.h_half_norm_sq()
    omega = smoothstep_bump(rho_star - j1 / j2, eps, eps1) * smoothstep_bump(
        norms, eps, eps1
    )
    if omega == 0.0:
        return sphere.ScalarField.zero(s.u.band), basis.zero_field(), 0.0
    system = nehari.WeightedEigenSystem(s.u, basis)
    frame = nehari.normal_frame(s, j_max=j_max, system=system)
    g1 = functional.gradient_J1(s)
    g2 = functional.gradient_J2(s)
    vecs = [g1, g2] + frame.vectors
    n = len(vecs)
    G = np.empty((n, n))
    for i in range(n):
        for jj in range(i, n):
            G[i, jj] = G[jj, i] = functional.metric_inner(vecs[i], vecs[jj])
    rhs = np.zeros(n)
    mixed = 0.5 * j2  # int e^u |psi|^2
    rhs[0] = j2
    rhs[-1] = -mixed
    coef = np.linalg.solve(G, rhs)
    xu = sphere.ScalarField.zero(s.u.band)
    xp = basis.zero_field()
    for c, (vu, vp) in zip(coef, vecs):
        xu = xu + (omega * c) * vu
        xp = xp + (omega * c) * vp
    return xu, xp, omega


class FlowTrace:
    """Recorded samples of a deformation-flow trajectory."""

    def __init__(self):
        self.samples = []

    def record(self, rho, state, invariants):
        self.samples.append((rho, state, invariants))

    def to_json_lines(self):
        lines = []
        for rho, state, inv in self.samples:
            lines.append(
                json.dumps({"rho": rho, "invariants": inv, "state": state.to_json()})
            )
        return "\n".join(lines) + "\n"

    def invariant_drift(self, key):
        vals = [inv[key] for _, _, inv in self.samples]
        return max(vals) - min(vals)


def _invariants(s, j_max, system=None):
    j1, j2 = functional.eval_J1_J2(s)
    cons = nehari.constraints(s, j_max=j_max, system=system)
    return {
        "J2": j2,
        "G1": float(np.abs(cons.G1).max()),
        "G2max": float(np.abs(cons.G2).max()) if cons.G2.size else 0.0,
        "G3": cons.G3,
        "J_rho": j1 - s.rho * j2,
    }


def deformation_flow(
    s0,
    rho0,
    rho1,
    rho_star,
    eps=0.2,
    eps1=0.05,
    step=1e-3,
    j_max=None,
    richardson_tol=1e-8,
    record_every=10,
):
    """Integrate d/drho (u, psi) = X~(u, psi) from rho0 to rho1.

    Classical RK4 with fixed step and step-doubling Richardson monitoring;
    stationary cases (psi = 0 or omega = 0 at the start) are returned as
    constant traces.  The trace records the five conserved quantities.
    """
    basis = s0.psi.basis
    if j_max is None:
        j_max = basis.size // 4
    s0 = functional.State(s0.u, s0.psi, rho0)
    trace = FlowTrace()
    _, _, omega0 = flow_field(s0, rho_star, eps, eps1, j_max)
    stationary = s0.psi.l2_norm() == 0.0 or omega0 == 0.0
    n_steps = max(1, int(round(abs(rho1 - rho0) / step)))
    h = (rho1 - rho0) / n_steps
    s = s0
    rho = rho0
    trace.record(rho, s, _invariants(s, j_max))
    if stationary:
        for i in range(n_steps):
            rho += h
            trace.record(rho, s, _invariants(functional.State(s.u, s.psi, rho), j_max))
        return trace

    def rhs(state, r):
        xu, xp, _ = flow_field(functional.State(state.u, state.psi, r), rho_star, eps, eps1, j_max)
        return xu, xp

    def rk4(state, r, hh):
        k1u, k1p = rhs(state, r)
        s2 = functional.State(state.u + (hh / 2) * k1u, state.psi + (hh / 2) * k1p, r)
        k2u, k2p = rhs(s2, r + hh / 2)
        s3 = functional.State(state.u + (hh / 2) * k2u, state.psi + (hh / 2) * k2p, r)
        k3u, k3p = rhs(s3, r + hh / 2)
        s4 = functional.State(state.u + hh * k3u, state.psi + hh * k3p, r)
        k4u, k4p = rhs(s4, r + hh)
        nu = state.u + (hh / 6) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        np_ = state.psi + (hh / 6) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        return functional.State(nu, np_, r + hh)

    for i in range(n_steps):
        full = rk4(s, rho, h)
        if (i % record_every) == 0:
            half = rk4(rk4(s, rho, h / 2), rho + h / 2, h / 2)
            err = functional.metric_norm(
                (full.u - half.u, full.psi - half.psi)
            )
            if err > richardson_tol:
                raise RuntimeError(
                    "step error %.3e exceeds the Richardson tolerance" % err
                )
            s = half
        else:
            s = full
        rho += h
        s = functional.State(s.u, s.psi, rho)
        trace.record(rho, s, _invariants(s, j_max))
    return trace
