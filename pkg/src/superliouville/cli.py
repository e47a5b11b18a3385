"""Command-line front end.

Subcommands: spectrum, verify, solve, continue, balance, flow, bifurcate.
Shared flags: --band, --out, --config, --json.  Exit codes: 0 success,
1 validation failure (JSON failure report on stdout), 2 usage error.
All numeric output is serialized with 17 significant digits; artifacts
(CSV, JSON lines, SVG) are byte-deterministic for identical inputs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import branch, functional, moebius, nehari, sphere, spinor


def _fmt(x):
    return "%.17g" % float(x)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _emit(report, as_json):
    if as_json:
        print(json.dumps(report, default=_json_default, sort_keys=True))
    else:
        for k in sorted(report):
            print("%s: %s" % (k, report[k]))


def _outdir(args):
    out = args.out or os.environ.get("SUPERLIOUVILLE_OUT") or "."
    os.makedirs(out, exist_ok=True)
    return out


# -- spectrum ----------------------------------------------------------------


def cmd_spectrum(args):
    out = _outdir(args)
    rows = []
    if args.operator == "dirac":
        basis = spinor.assemble_dirac_basis(args.band)
        for m in range(1, args.band + 1):
            for sgn in (1, -1):
                mult = int(np.sum(np.abs(basis.eigenvalues - sgn * m) < 1e-4)) * 2
                rows.append((float(sgn * m), mult))
        rows.sort()
    else:
        for k in range(args.band + 1):
            ev, mult = sphere.laplace_eigendata(k)
            rows.append((float(ev), mult))
    path = os.path.join(out, "spectrum_%s_band%d.csv" % (args.operator, args.band))
    with open(path, "w") as fh:
        fh.write("eigenvalue,real_multiplicity\n")
        for ev, mult in rows:
            fh.write("%s,%d\n" % (_fmt(ev), mult))
    _emit({"csv": path, "entries": len(rows)}, args.json)
    return 0


# -- verify ------------------------------------------------------------------


def _verify_spectrum(band):
    basis = spinor.assemble_dirac_basis(band)
    errs = {}
    for m in range(1, band // 2 + 1):
        for sgn in (1, -1):
            sel = np.abs(basis.eigenvalues - sgn * m) < 1e-4
            if int(sel.sum()) != 2 * m:
                return False, {"eigenvalue": sgn * m, "complex_multiplicity": int(sel.sum())}
            errs[str(sgn * m)] = float(np.abs(basis.eigenvalues[sel] - sgn * m).max() / m)
    return max(errs.values()) < 1e-6, {"max_rel_error": max(errs.values())}


def _verify_killing(band):
    basis = spinor.assemble_dirac_basis(band)
    worst = 0.0
    for rho in (1.2, 2.0, 2.5):
        s = branch.killing_branch(rho, basis=basis)
        r = functional.el_residual(s).norm
        c = nehari.constraints(s, j_max=8).max_abs
        j = abs(functional.eval_J(s) - branch.killing_energy(rho))
        worst = max(worst, r, c, j * 0.1)
    return worst < 1e-8, {"worst": worst}


def _random_state(band, basis, rng, u_amp=0.3, p_amp=0.4, rho=1.7):
    c = rng.standard_normal(sphere.num_coeffs(band))
    for l in range(band + 1):
        c[l * l : (l + 1) * (l + 1)] *= 0.0 if l > 6 else u_amp / (1 + l) ** 2
    u = sphere.ScalarField(band, c)
    cc = rng.standard_normal(basis.size) + 1j * rng.standard_normal(basis.size)
    cc *= np.exp(-np.abs(basis.eigenvalues) * 1.5)
    cc = cc / np.linalg.norm(cc) * p_amp
    return functional.State(u, spinor.SpinorField(basis, cc), rho)


def _random_map(rng, max_norm=2.0):
    while True:
        m = moebius.MoebiusMap.rotation(int(rng.integers(1, 4)), float(rng.uniform(0, 2 * np.pi)))
        m = m @ moebius.MoebiusMap.boost(rng.uniform(-0.4, 0.4, size=3))
        if m.norm() <= max_norm:
            return m


def _verify_conformal(band, n_states=5, n_maps=3):
    basis = spinor.assemble_dirac_basis(band)
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(n_states):
        s = _random_state(band, basis, rng)
        j0 = functional.eval_J(s)
        for _ in range(n_maps):
            phi = _random_map(rng)
            s2 = functional.State(
                moebius.pullback_scalar(s.u, phi), moebius.pullback_spinor(s.psi, phi), s.rho
            )
            worst = max(worst, abs(functional.eval_J(s2) - j0))
    return worst < 1e-6, {"max_J_change": worst}


def _verify_identities(band):
    rng = np.random.default_rng(7)
    basis = spinor.assemble_dirac_basis(band)
    worst = 0.0
    for _ in range(5):
        u = _random_state(band, basis, rng).u
        worst = max(worst, float(np.abs(functional.kazdan_warner_defect(u)).max()))
    checks = moebius.derivative_checks(3)
    worst_app = max(checks.values())
    return worst < 1e-7 and worst_app < 1e-6, {
        "kazdan_warner_max": worst,
        "appendix_max": worst_app,
    }


def _verify_gradient(band):
    basis = spinor.assemble_dirac_basis(band)
    rng = np.random.default_rng(13)
    worst = 0.0
    for _ in range(5):
        s = _random_state(band, basis, rng)
        g = functional.gradient(s)
        v = _random_state(band, basis, rng, u_amp=0.2).u
        h = _random_state(band, basis, rng).psi
        eps = 1e-4
        fd = (
            functional.eval_J(functional.State(s.u + eps * v, s.psi + eps * h, s.rho))
            - functional.eval_J(functional.State(s.u - eps * v, s.psi - eps * h, s.rho))
        ) / (2 * eps)
        an = functional.metric_inner(g, (v, h))
        worst = max(worst, abs(fd - an) / (1 + abs(fd)))
    return worst < 1e-5, {"max_rel_error": worst}


def _verify_index(band):
    ok = (
        functional.hessian_index_at_origin(1.5)["index"] == 4
        and functional.hessian_index_at_origin(2.5)["index"] == 12
        and functional.hessian_index_at_origin(3.5)["index"] == 24
        and functional.hessian_index_at_origin(2.0)["kernel_dim"] == 8
        and branch.detect_bifurcation((1.5, 3.5)) == [(2, 8), (3, 12)]
    )
    return ok, {}


def _verify_balance(band):
    u = 0.3 * sphere.ScalarField.coordinate(band, 3)
    _, ub = moebius.balance(u)
    cm = float(np.linalg.norm(moebius.center_of_mass(ub)))
    lam_err = float(
        np.abs(moebius.lambda_matrix(sphere.ScalarField.zero(band)) - (4 * np.pi / 3) * np.eye(3)).max()
    )
    return cm < 1e-8 and lam_err < 1e-9, {"cm": cm, "lambda0_err": lam_err}


_SUITES = {
    "spectrum": _verify_spectrum,
    "killing": _verify_killing,
    "conformal": _verify_conformal,
    "identities": _verify_identities,
    "gradient": _verify_gradient,
    "index": _verify_index,
    "balance": _verify_balance,
}


def cmd_verify(args):
    names = list(_SUITES) if args.suite == "all" else [args.suite]
    report = {}
    failed = False
    for name in names:
        ok, details = _SUITES[name](args.band)
        report[name] = {"pass": bool(ok), **details}
        failed = failed or not ok
    _emit(report, args.json)
    return 1 if failed else 0


# -- solve / continue ----------------------------------------------------------


def _branch_start(branch_name, rho, basis):
    if branch_name == "killing":
        if rho <= 1.0:
            print("rho must exceed 1 on the Killing branch", file=sys.stderr)
            sys.exit(2)
        return branch.killing_branch(rho, basis=basis)
    return functional.State.origin(basis.band, rho, basis)


def cmd_solve(args):
    basis = spinor.assemble_dirac_basis(args.band)
    s0 = _branch_start(args.branch, args.rho, basis)
    try:
        bp = branch.newton_solve(s0, args.rho)
    except (branch.BasinEscape, RuntimeError) as exc:
        _emit({"error": str(exc)}, args.json)
        return 1
    out = _outdir(args)
    path = os.path.join(out, "solution_%s_rho%s.json" % (args.branch, _fmt(args.rho)))
    with open(path, "w") as fh:
        fh.write(bp.state.dumps())
    _emit(
        {
            "state": path,
            "residual": bp.residual_norm,
            "constraint_norm": bp.constraint_norm,
            "index_l": bp.index_l,
            "J": functional.eval_J(bp.state),
        },
        args.json,
    )
    return 0


def cmd_continue(args):
    basis = spinor.assemble_dirac_basis(args.band)
    lo, hi = args.rho_start, args.rho_end
    s0 = _branch_start(args.branch, lo, basis)
    start = branch.newton_solve(s0, s0.rho)
    points = branch.continue_branch(start, (min(lo, hi), max(lo, hi)), args.step)
    out = _outdir(args)
    path = os.path.join(out, "branch_%s.csv" % args.branch)
    with open(path, "w") as fh:
        fh.write(branch.branch_to_csv(points))
    _emit({"csv": path, "points": len(points)}, args.json)
    return 0


# -- balance / flow / bifurcate -------------------------------------------------


def cmd_balance(args):
    if args.u_json:
        with open(args.u_json) as fh:
            u = sphere.ScalarField.from_json(json.load(fh))
    else:
        u = 0.3 * sphere.ScalarField.coordinate(args.band, 3)
    try:
        phi, u_b = moebius.balance(u)
    except RuntimeError as exc:
        _emit({"error": str(exc)}, args.json)
        return 1
    out = _outdir(args)
    path = os.path.join(out, "balanced_u.json")
    with open(path, "w") as fh:
        fh.write(u_b.dumps())
    _emit(
        {
            "map": phi.to_json(),
            "balanced_u": path,
            "cm_norm": float(np.linalg.norm(moebius.center_of_mass(u_b))),
        },
        args.json,
    )
    return 0


def cmd_flow(args):
    basis = spinor.assemble_dirac_basis(args.band)
    s0 = branch.admissible_flow_state(basis, args.rho_star)
    trace = branch.deformation_flow(
        s0, args.rho_star, args.rho_star + args.width, args.rho_star
    )
    out = _outdir(args)
    path = os.path.join(out, "flow_trace.jsonl")
    with open(path, "w") as fh:
        fh.write(trace.to_json_lines())
    drifts = {k: trace.invariant_drift(k) for k in ("J2", "G1", "G2max", "G3", "J_rho")}
    _emit({"trace": path, "samples": len(trace.samples), **drifts}, args.json)
    return 0 if max(abs(v) for v in drifts.values()) < 1e-6 else 1


def cmd_bifurcate(args):
    lo, hi = args.range
    found = branch.detect_bifurcation((lo, hi))
    out = _outdir(args)
    # reference branches for the diagram
    basis = spinor.assemble_dirac_basis(args.band)
    paths = []
    rows_trivial = []
    for rho in np.linspace(max(lo, 1.05), hi, 13):
        idx = functional.hessian_index_at_origin(float(rho))["index"]
        rows_trivial.append((float(rho), 0.0, 0.0, 0.0, 0.0, idx, 0.0))
    paths.append(_write_branch_csv(os.path.join(out, "branch_trivial.csv"), rows_trivial))
    rows_killing = []
    for rho in np.linspace(max(lo, 1.05), hi, 13):
        s = branch.killing_branch(float(rho), basis=basis)
        j1, j2 = functional.eval_J1_J2(s)
        rows_killing.append(
            (float(rho), j1 - rho * j2, j1, j2, functional.el_residual(s).norm, 0, 0.0)
        )
    paths.append(_write_branch_csv(os.path.join(out, "branch_killing.csv"), rows_killing))
    svg = emit_bifurcation_diagram(paths, os.path.join(out, "bifurcation.svg"))
    _emit({"bifurcations": found, "svg": svg, "branches": paths}, args.json)
    return 0


def _write_branch_csv(path, rows):
    with open(path, "w") as fh:
        fh.write("rho,J,J1,J2,residual,index_l,constraint_norm\n")
        for r in rows:
            fh.write(
                ",".join([_fmt(r[0]), _fmt(r[1]), _fmt(r[2]), _fmt(r[3]), _fmt(r[4]), str(int(r[5])), _fmt(r[6])])
                + "\n"
            )
    return path


# -- SVG ----------------------------------------------------------------------


def emit_bifurcation_diagram(csv_paths, out_path):
    """Deterministic SVG of the branches in the (rho, spinor norm) plane.

    The vertical coordinate is sqrt(J2/2), the e^u-weighted L^2 norm of
    psi; vertical markers are drawn at integer rho where the index column
    jumps.  Byte-identical output for identical inputs.
    """
    curves = []
    markers = set()
    for path in csv_paths:
        rows = []
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if header[:4] != ["rho", "J", "J1", "J2"]:
                raise ValueError("malformed branch CSV: %s" % path)
            prev_idx = None
            for line in fh:
                parts = line.strip().split(",")
                rho = float(parts[0])
                j2 = float(parts[3])
                idx = int(parts[5])
                rows.append((rho, math.sqrt(max(j2, 0.0) / 2.0)))
                if prev_idx is not None and idx != prev_idx:
                    markers.add(round(rho))
                prev_idx = idx
        curves.append((os.path.basename(path), rows))
    width, height, pad = 640, 480, 50
    all_pts = [p for _, rows in curves for p in rows] or [(0.0, 0.0), (1.0, 1.0)]
    x0, x1 = min(p[0] for p in all_pts), max(p[0] for p in all_pts)
    y0, y1 = 0.0, max(max(p[1] for p in all_pts), 1e-9)
    if x1 <= x0:
        x1 = x0 + 1.0

    def sx(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" viewBox="0 0 %d %d">'
        % (width, height, width, height),
        '<rect width="%d" height="%d" fill="white"/>' % (width, height),
        '<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="black"/>'
        % (pad, height - pad, width - pad, height - pad),
        '<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="black"/>' % (pad, pad, pad, height - pad),
        '<text x="%d" y="%d" font-size="12">rho</text>' % (width - pad, height - pad + 30),
        '<text x="%d" y="%d" font-size="12">|psi|</text>' % (10, pad),
    ]
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"]
    for i, (name, rows) in enumerate(sorted(curves)):
        if not rows:
            continue
        pts = " ".join("%.6f,%.6f" % (sx(r), sy(v)) for r, v in rows)
        parts.append(
            '<polyline points="%s" fill="none" stroke="%s" stroke-width="1.5"/>'
            % (pts, colors[i % len(colors)])
        )
        parts.append(
            '<text x="%.6f" y="%.6f" font-size="11" fill="%s">%s</text>'
            % (sx(rows[-1][0]), sy(rows[-1][1]) - 6, colors[i % len(colors)], name)
        )
    for m in sorted(markers):
        if x0 <= m <= x1:
            parts.append(
                '<line x1="%.6f" y1="%d" x2="%.6f" y2="%d" stroke="#888" stroke-dasharray="4 3"/>'
                % (sx(m), pad, sx(m), height - pad)
            )
    parts.append("</svg>")
    with open(out_path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
    return out_path


# -- argument parsing -----------------------------------------------------------


def _build_parser():
    p = argparse.ArgumentParser(prog="superliouville", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--band", type=int, default=16)
        sp.add_argument("--out", default=None)
        sp.add_argument("--config", default=None)
        sp.add_argument("--json", action="store_true")

    sp = sub.add_parser("spectrum")
    common(sp)
    sp.add_argument("--operator", choices=["dirac", "laplace"], default="dirac")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("verify")
    common(sp)
    sp.add_argument("--suite", choices=["all"] + list(_SUITES), default="all")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("solve")
    common(sp)
    sp.add_argument("--branch", choices=["killing", "trivial"], default="killing")
    sp.add_argument("--rho", type=float, required=True)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("continue")
    common(sp)
    sp.add_argument("--branch", choices=["killing", "trivial"], default="killing")
    sp.add_argument("--rho-start", type=float, required=True)
    sp.add_argument("--rho-end", type=float, required=True)
    sp.add_argument("--step", type=float, default=0.1)
    sp.set_defaults(func=cmd_continue)

    sp = sub.add_parser("balance")
    common(sp)
    sp.add_argument("--u-json", default=None)
    sp.set_defaults(func=cmd_balance)

    sp = sub.add_parser("flow")
    common(sp)
    sp.add_argument("--rho-star", type=float, default=1.5)
    sp.add_argument("--width", type=float, default=0.05)
    sp.set_defaults(func=cmd_flow)

    sp = sub.add_parser("bifurcate")
    common(sp)
    sp.add_argument("--range", type=lambda s: tuple(float(x) for x in s.split(",")), default=(1.5, 3.5))
    sp.set_defaults(func=cmd_bifurcate)
    return p


def _apply_config(args):
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        for key, val in cfg.items():
            attr = key.replace("-", "_")
            if hasattr(args, attr) and _is_default(args, attr):
                setattr(args, attr, val)
    return args


_DEFAULTS = {"band": 16, "out": None, "json": False}


def _is_default(args, attr):
    return attr in _DEFAULTS and getattr(args, attr) == _DEFAULTS[attr]


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    args = _apply_config(args)
    if not 8 <= args.band <= 64:
        print("band limit must lie in [8, 64]", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
