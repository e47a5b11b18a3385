import numpy as np
import pytest

from superliouville import branch, functional, nehari, sphere, spinor


def test_killing_branch_closed_form(basis8):
    for rho in (1.2, 2.0, 2.5):
        s = branch.killing_branch(rho, basis=basis8)
        assert functional.el_residual(s).norm < 1e-9
        assert nehari.constraints(s, j_max=4).max_abs < 1e-10
        assert functional.eval_J(s) == pytest.approx(
            branch.killing_energy(rho), abs=1e-10
        )
    with pytest.raises(ValueError):
        branch.killing_branch(0.9, basis=basis8)


def test_killing_energy_value():
    # 4 pi (1 - 1/rho^2 - 2 ln rho) at rho = 2
    assert branch.killing_energy(2.0) == pytest.approx(-7.99582, abs=1e-4)


def test_newton_stays_at_origin(basis8):
    s0 = functional.State.origin(8, 1.3, basis8)
    bp = branch.newton_solve(s0, 1.3)
    assert bp.residual_norm < 1e-12
    assert sphere.h1_norm(bp.state.u) < 1e-12
    assert bp.state.psi.l2_norm() < 1e-12
    assert bp.index_l == 4


def test_newton_recovers_killing_orbit(basis8):
    rng = np.random.default_rng(50)
    s = branch.killing_branch(1.5, basis=basis8)
    c = rng.standard_normal(sphere.num_coeffs(8))
    for l in range(9):
        c[l * l : (l + 1) * (l + 1)] *= 0.0 if l > 4 else 1.0 / (1 + l) ** 2
    noise_u = sphere.ScalarField(8, 1e-3 * c / np.linalg.norm(c))
    cc = rng.standard_normal(basis8.size) + 1j * rng.standard_normal(basis8.size)
    cc *= np.exp(-np.abs(basis8.eigenvalues))
    noise_p = spinor.SpinorField(basis8, 1e-3 * cc / np.linalg.norm(cc))
    s0 = functional.State(s.u + noise_u, s.psi + noise_p, 1.5)
    bp = branch.newton_solve(s0, 1.5)
    assert bp.residual_norm < 1e-9
    # compare orbit invariants rather than raw fields
    assert sphere.mean_value(bp.state.u) == pytest.approx(
        sphere.mean_value(s.u), abs=1e-6
    )
    assert bp.state.psi.l2_norm() == pytest.approx(s.psi.l2_norm(), abs=1e-6)
    j1, j2 = functional.eval_J1_J2(bp.state)
    j1r, j2r = functional.eval_J1_J2(s)
    assert j2 == pytest.approx(j2r, abs=1e-6)


def test_newton_basin_escape(basis8):
    u = sphere.ScalarField.constant(8, 10.0)
    s0 = functional.State(u, basis8.zero_field(), 1.5)
    with pytest.raises(branch.BasinEscape):
        branch.newton_solve(s0, 1.5, max_iter=10)


def test_continue_branch(basis8):
    start = branch.newton_solve(branch.killing_branch(1.5, basis=basis8), 1.5)
    points = branch.continue_branch(start, (1.5, 1.9), 0.2)
    assert [round(p.state.rho, 6) for p in points] == [1.5, 1.7, 1.9]
    for p in points:
        assert p.residual_norm < 1e-9
        j1, j2 = functional.eval_J1_J2(p.state)
        assert j1 - p.state.rho * j2 == pytest.approx(
            branch.killing_energy(p.state.rho), abs=1e-6
        )
    csv = branch.branch_to_csv(points)
    lines = csv.strip().split("\n")
    assert lines[0] == "rho,J,J1,J2,residual,index_l,constraint_norm"
    assert len(lines) == 4


def test_detect_bifurcation():
    assert branch.detect_bifurcation((1.5, 3.5)) == [(2, 8), (3, 12)]
    assert branch.detect_bifurcation((1.1, 1.9)) == []


def test_smoothstep_bump():
    assert branch.smoothstep_bump(0.0, 0.2, 0.05) == 1.0
    assert branch.smoothstep_bump(0.1, 0.2, 0.05) == 1.0
    assert branch.smoothstep_bump(0.25, 0.2, 0.05) == 0.0
    mid = branch.smoothstep_bump(0.175, 0.2, 0.05)
    assert 0.0 < mid < 1.0


def test_flow_field_vanishes_off_support(basis8):
    s = branch.admissible_flow_state(basis8, 1.5)
    # J1/J2 sits at 1.5, far outside the cutoff window around rho* = 2.5
    du, dpsi, omega = branch.flow_field(s, 2.5, 0.2, 0.05, j_max=4)
    assert omega == 0.0
    origin = functional.State.origin(8, 1.5, basis8)
    du0, dpsi0, _ = branch.flow_field(origin, 1.5, 0.2, 0.05, j_max=4)
    assert sphere.h1_norm(du0) == 0.0 and dpsi0.l2_norm() == 0.0


def test_flow_conserves_invariants_short(basis8):
    s0 = branch.admissible_flow_state(basis8, 1.5)
    trace = branch.deformation_flow(
        s0, 1.5, 1.51, 1.5, step=1e-3, j_max=4, record_every=5
    )
    for key in ("J2", "G1", "G2max", "G3", "J_rho"):
        assert abs(trace.invariant_drift(key)) < 1e-8
    lines = trace.to_json_lines().strip().split("\n")
    assert len(lines) == len(trace.samples)


def test_flow_stationary_case(basis8):
    s0 = functional.State.origin(8, 1.45, basis8)
    trace = branch.deformation_flow(s0, 1.45, 1.47, 1.5, step=1e-3, j_max=4)
    for key in ("J2", "G1", "G2max", "G3"):
        assert trace.invariant_drift(key) == 0.0
