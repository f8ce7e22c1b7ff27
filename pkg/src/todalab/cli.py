"""Batch front-end: solve -> verify -> frame -> gauss -> variation -> certify.

Exit codes: 0 = all checks passed, 1 = a numeric check failed (the report
names it), 2 = input/config error.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import algebra, certify, frame, gauss, higgs, toda, variation
from .config import load_config, data_from_config, write_report
from .field import read_field, write_field, ScalarField

_EXIT_OK, _EXIT_FAIL, _EXIT_INPUT = 0, 1, 2


def _load_run(run_dir):
    cfg = load_config(os.path.join(run_dir, "config.json"))
    data, solver = data_from_config(cfg)
    fields = []
    for k in range(1, cfg["n"] + 1):
        f = read_field(os.path.join(run_dir, "w%d.csv" % k), data.grid)
        fields.append(ScalarField(data.grid, f.values))
    state = toda.TodaState(fields)
    with open(os.path.join(run_dir, "solve_report.json")) as fh:
        solve_report = json.load(fh)
    return cfg, data, solver, state, solve_report


def cmd_solve(args):
    cfg = load_config(args.config)
    data, solver = data_from_config(cfg)
    if args.tol is not None:
        solver["tol"] = args.tol
    os.makedirs(args.out, exist_ok=True)
    try:
        state, report = toda.solve_toda(data, tol=solver["tol"],
                                        max_iter=solver["max_iter"],
                                        damping=solver["damping"])
    except RuntimeError as exc:
        print("solve failed: %s" % exc)
        return _EXIT_FAIL
    for k in range(data.n):
        write_field(state.w[k], os.path.join(args.out, "w%d.csv" % (k + 1)))
    with open(os.path.join(args.out, "config.json"), "w") as fh:
        json.dump(cfg, fh, sort_keys=True, indent=1)
        fh.write("\n")
    write_report(dict(report), os.path.join(args.out, "solve_report.json"))
    print("solved: %d iterations, final residual %.3e"
          % (report["iterations"], report["residual_history"][-1]))
    return _EXIT_OK


def _check_toda(data, state, solve_report, out):
    res = toda.toda_residual(state, data)
    rmax = max(float(np.max(np.abs(r.values))) for r in res)
    out["toda_residual"] = rmax
    return rmax <= 10 * solve_report.get("tol", 1e-11)


def _check_star(data, state, solve_report, out):
    rep = toda.check_star(state, data)
    out["star"] = rep
    return all(v["min"] >= -1e-9 for v in rep["quantities"].values())


def _check_divisor(data, state, solve_report, out):
    ok, pairs = toda.check_divisor_chain(data)
    out["divisor_chain"] = {"ok": ok, "pairs": pairs}
    return ok


def _check_hitchin(data, state, solve_report, out):
    rt = toda.toda_residual(state, data)
    rh = higgs.hitchin_residual(state, data)
    dev = max(float(np.max(np.abs(a.values - b.values)))
              for a, b in zip(rt, rh))
    out["hitchin_vs_toda"] = dev
    out["commutator_offdiag"] = higgs.commutator_offdiag_max(state, data)
    return dev <= 1e-12 and out["commutator_offdiag"] <= 1e-12


def _check_gauge(data, state, solve_report, out):
    res = higgs.gauge_identity_residual(state, data)
    out["gauge_identity_residual"] = res
    # exact on constant states; O(h^2) otherwise
    return res <= 1e-12 + 10 * data.grid.h ** 2


def _check_g2(data, state, solve_report, out):
    rep = higgs.g2_checks(state, data)
    out["g2"] = rep
    return rep["h3_identity_ok"] and rep["g2c_pattern_ok"] and rep["varpi_ok"]


_CHECKS = {"toda": _check_toda, "star": _check_star, "divisor": _check_divisor,
           "hitchin": _check_hitchin, "gauge": _check_gauge, "g2": _check_g2}


def cmd_verify(args):
    cfg, data, solver, state, solve_report = _load_run(args.run)
    names = [c.strip() for c in args.check.split(",") if c.strip()]
    for name in names:
        if name not in _CHECKS:
            print("unknown check %r (choose from %s)" % (name, sorted(_CHECKS)))
            return _EXIT_INPUT
    out, ok_all = {}, True
    for name in names:
        try:
            ok = _CHECKS[name](data, state, solve_report, out)
        except ValueError as exc:
            print("check %s: input error: %s" % (name, exc))
            return _EXIT_INPUT
        print("check %-8s %s" % (name, "PASS" if ok else "FAIL"))
        ok_all = ok_all and ok
    write_report(out, os.path.join(args.run, "verify_report.json"))
    return _EXIT_OK if ok_all else _EXIT_FAIL


def cmd_frame(args):
    cfg, data, solver, state, solve_report = _load_run(args.run)
    res = toda.toda_residual(state, data)
    rmax = max(float(np.max(np.abs(r.values))) for r in res)
    if rmax > 10 * solve_report.get("tol", 1e-11):
        print("refusing to run frames: toda residual %.3e exceeds 10x solve "
              "tolerance" % rmax)
        return _EXIT_INPUT
    om = frame.assemble_omega(state, data)
    dens, curv = frame.gauss_codazzi_residual(om)
    frames = frame.integrate_frame(om)
    report = {"curvature": curv, "gram_drift": frames.gram_drift,
              "so_residual": om.so_residual()}
    if data.grid.mode == "torus":
        try:
            _, mon = frame.monodromy(om, g2_check=(data.n == 3))
        except ValueError:
            _, mon = frame.monodromy(om)
        report["monodromy"] = mon
    vs = frame.verify_structure(frames, state, data, om)
    report["structure"] = vs
    path = os.path.join(args.run, "frames.bin")
    with open(path, "wb") as fh:
        header = {"N": data.grid.N, "d": om.d, "layout": "row-major f64"}
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(frames.P.astype("<f8").tobytes())
    write_report(report, os.path.join(args.run, "frame_report.json"))
    ok = vs["all_ok"] and frames.gram_drift < 1e-6
    print("frame integration: %s (gram drift %.3e)"
          % ("PASS" if ok else "FAIL", frames.gram_drift))
    return _EXIT_OK if ok else _EXIT_FAIL


def _load_frames(run_dir, data):
    path = os.path.join(run_dir, "frames.bin")
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        N, d = header["N"], header["d"]
        P = np.frombuffer(fh.read(), dtype="<f8").reshape(N, N, d, d)
    return frame.FrameField(data.grid, data.n, P.copy(), (0, 0), float("nan"))


def cmd_gauss(args):
    cfg, data, solver, state, solve_report = _load_run(args.run)
    frames = _load_frames(args.run, data)
    _, _, rep = gauss.pullback_metric(frames, state, data)
    report = {"conformality_max": rep["conformality_max"],
              "formula_rel_err": rep["formula_rel_err"],
              "factor_formula": rep["factor_formula"],
              "jholo_max": None, "phi_residual_max": None}
    ok = rep["formula_rel_err"] < 1e-3 and rep["conformality_max"] < 1e-3
    if data.n == 3:
        try:
            _, jrep = gauss.jholo_residual(frames, state, data)
            report["jholo_max"] = jrep["jholo_max"]
            report["phi_residual_max"] = jrep["phi_residual_max"]
            ok = ok and jrep["jholo_max"] < 1e-5
        except ValueError as exc:
            report["jholo_skipped"] = str(exc)
    if args.plot_data:
        X, Y = data.grid.meshgrid()
        nr = toda.norms(state, data)
        factor = (8 * data.n - 4) * (0.5 + sum(nr[j] for j in range(2, data.n))
                                     + nr["plus"] + nr["minus"])
        with open(os.path.join(args.run, "pullback.csv"), "w") as fh:
            for iy in range(data.grid.N):
                for ix in range(data.grid.N):
                    fh.write("%r,%r,%r\n" % (X[iy, ix], Y[iy, ix],
                                             float(factor[iy, ix])))
    write_report(report, os.path.join(args.run, "gauss_report.json"))
    print("gauss checks: %s" % ("PASS" if ok else "FAIL"))
    return _EXIT_OK if ok else _EXIT_FAIL


def cmd_variation(args):
    cfg, data, solver, state, solve_report = _load_run(args.run)
    rng = np.random.default_rng(args.seed)
    op = variation.JacobiOperator(state, data)
    report = {"seed": args.seed, "samples": args.samples, "collar_frac": 0.1}
    parities = ["minus"] if data.n == 2 else ["plus", "minus"]
    strict_star = None
    if data.n >= 3:
        mask = variation.support_mask(data.grid) > 0
        nr = toda.norms(state, data)
        chains = [0.5 - nr[2]]
        for k in range(2, data.n - 1):
            chains.append(nr[k] - nr[k + 1])
        chains.append(nr[data.n - 1] - nr["plus"] - nr["minus"])
        strict_star = bool(min(float(np.min(c[mask])) for c in chains) > 0)
    report["star_strict_on_support"] = strict_star
    ok = True
    for parity in parities:
        vals = []
        for _ in range(args.samples):
            xi = variation.NormalField.random_bump(data.grid, data.n, parity, rng)
            vals.append(op.second_variation(xi))
        expect = -1 if parity == "minus" else +1
        expected_sign_applies = (data.n == 2 and parity == "minus") or strict_star
        violations = sum(1 for v in vals if v * expect <= 0)
        report[parity] = {"min": min(vals), "max": max(vals),
                          "sign_violations": violations if expected_sign_applies
                          else None}
        if expected_sign_applies:
            ok = ok and violations == 0
    xi1 = variation.NormalField.random_bump(data.grid, data.n, parities[-1], rng)
    xi2 = variation.NormalField.random_bump(data.grid, data.n, parities[0], rng)
    sa = abs(op.pairing(op.apply(xi1), xi2) - op.pairing(xi1, op.apply(xi2)))
    report["self_adjointness_defect"] = sa
    sv = op.second_variation(xi1)
    report["quadratic_form_match"] = abs(-op.pairing(op.apply(xi1), xi1) - sv)
    sigma = op.min_singular_value()
    report["min_singular_value"] = sigma
    ok = ok and sa < 1e-10 and sigma > 0
    write_report(report, os.path.join(args.run, "variation_report.json"))
    print("variation checks: %s (sigma_min %.4e)" % ("PASS" if ok else "FAIL",
                                                     sigma))
    return _EXIT_OK if ok else _EXIT_FAIL


def cmd_certify(args):
    threads = args.threads or int(os.environ.get("TODA_LAB_THREADS", "1"))
    report = certify.dichotomy_scan(args.n, A_max=args.a_max, step=args.step,
                                    eps=args.eps, threads=threads)
    ok = report["dichotomy_holds"]
    if args.from_solution:
        cfg, data, solver, state, solve_report = _load_run(args.from_solution)
        fm = certify.field_maxima(state, data)
        report["field_maxima"] = fm
        ok = ok and fm["inequalities_satisfied"]
    out_dir = args.from_solution or "."
    write_report(report, os.path.join(out_dir, "certify_report.json"))
    print("certify: %s (%d feasible tuples, %d counterexamples)"
          % ("PASS" if ok else "FAIL", report["feasible"],
             len(report["counterexamples"])))
    return _EXIT_OK if ok else _EXIT_FAIL


def cmd_algebra_selftest(args):
    from fractions import Fraction
    import random
    rnd = random.Random(args.seed)
    checks = []

    def rvec():
        return [Fraction(rnd.randint(-6, 6), rnd.randint(1, 6)) for _ in range(7)]

    ok = True
    for _ in range(200):
        x, y = rvec(), rvec()
        oc = algebra.split_octonion_mul([Fraction(0)] + x, [Fraction(0)] + y)[1:]
        c = algebra.cross(x, y)
        ok = ok and c == oc and algebra.metric34(c, x) == 0
    checks.append(("cross_vs_octonion_table", ok))
    tab = algebra.ThreeForm.from_function(algebra.phi3)
    checks.append(("phi_coefficient_pattern", tab.coeffs == {
        k: Fraction(v) for k, v in algebra.PHI.items()}))
    import sympy as sp
    et, a, e = algebra.principal_sl2(exact=True)
    checks.append(("sl2_commutators_exact",
                   (a * e - e * a - e).is_zero_matrix
                   and (a * et - et * a + et).is_zero_matrix
                   and (e * et - et * e - a).is_zero_matrix))
    B = algebra.real_form_frame(1, 1, exact=True)
    pb = algebra.pullback_threeform(algebra._varpi_exact(), sp.Matrix(B))
    target = dict(algebra.PHI.items())
    ok = set(k for k, v in pb.items() if sp.simplify(v) != 0) == set(target)
    for k, v in pb.items():
        if sp.simplify(v - target.get(k, 0)) != 0:
            ok = False
    checks.append(("real_form_varpi_pullback_exact", ok))
    all_ok = True
    for name, res in checks:
        print("%-32s %s" % (name, "PASS" if res else "FAIL"))
        all_ok = all_ok and res
    return _EXIT_OK if all_ok else _EXIT_FAIL


def main(argv=None):
    parser = argparse.ArgumentParser(prog="todalab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the Toda system from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="run")
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="run checks on a solved run directory")
    p.add_argument("run", nargs="?", default="run")
    p.add_argument("--check", default="toda")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("frame", help="integrate moving frames for a run")
    p.add_argument("run", nargs="?", default="run")
    p.set_defaults(func=cmd_frame)

    p = sub.add_parser("gauss", help="Gauss-map checks for integrated frames")
    p.add_argument("run", nargs="?", default="run")
    p.add_argument("--plot-data", action="store_true")
    p.set_defaults(func=cmd_gauss)

    p = sub.add_parser("variation", help="second-variation and Jacobi checks")
    p.add_argument("run", nargs="?", default="run")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_variation)

    p = sub.add_parser("certify", help="max-principle inequality scan")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--step", type=float, default=1e-2)
    p.add_argument("--eps", type=float, default=1e-9)
    p.add_argument("--a-max", type=float, default=2.0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--from-solution", default=None)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("algebra-selftest", help="exact-arithmetic identities")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_algebra_selftest)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        print("input error: %s" % exc)
        return _EXIT_INPUT
    except Exception as exc:  # jsonschema.ValidationError et al.
        import jsonschema
        if isinstance(exc, jsonschema.ValidationError):
            print("config error: %s" % exc.message)
            return _EXIT_INPUT
        raise


if __name__ == "__main__":
    sys.exit(main())
