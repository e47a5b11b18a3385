"""The cut-off deformation flow and its five first integrals.

The flow moves rho while transporting the state so that J2, G1, G2, G3
and J_rho itself are all conserved; the cutoff omega freezes the motion
far from rho* or for large states.  Band 8 keeps the run short.
"""

from superliouville import branch, functional, sphere, spinor

basis = spinor.assemble_dirac_basis(8)
rho_star = 1.5

s0 = branch.admissible_flow_state(basis, rho_star)
print(
    "admissible start: mean u = %.6f, |psi| = %.6f, J1/J2 = %.10f"
    % (
        sphere.mean_value(s0.u),
        s0.psi.l2_norm(),
        functional.eval_J1_J2(s0)[0] / functional.eval_J1_J2(s0)[1],
    )
)

trace = branch.deformation_flow(
    s0, rho_star - 0.05, rho_star + 0.05, rho_star, step=1e-3, j_max=6
)
print("\nintegrated %d recorded samples over rho in [1.45, 1.55]" % len(trace.samples))
print("invariant drifts (max |value - initial value|):")
for key in ("J2", "G1", "G2max", "G3", "J_rho"):
    print("  %-6s %.2e" % (key, abs(trace.invariant_drift(key))))

# stationary cases: psi = 0 never moves, and neither does a state outside
# the cutoff window
zero = branch.deformation_flow(
    functional.State.origin(8, rho_star, basis), rho_star, rho_star + 0.05, rho_star
)
print("\npsi = 0 trajectory drift: %g" % abs(zero.invariant_drift("J2")))
off = branch.deformation_flow(s0, 2.45, 2.55, 2.5)
print("omega = 0 trajectory drift: %g" % abs(off.invariant_drift("J2")))
