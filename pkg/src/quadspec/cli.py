"""Command-line front end.

Exit status: 0 on success, 1 for input errors (unreadable files, schema
violations, bad flags), 2 when the analysis itself fails.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AnalysisError, InputError, QuadspecError
from .flow_weights import (
    average_min_eig,
    check_escape_identity,
    deform,
    ellipticity_radius,
    flow_average,
    weight_go,
)
from .hermite import HermiteBasisSpec, auto_scales, resolvent_scan
from .io import (
    POINTS_SCHEMA,
    PROP1_CONFIG_SCHEMA,
    QUADRATIC_SCHEMA,
    SCAN_CONFIG_SCHEMA,
    SYMBOL_SCHEMA,
    dumps,
    load_json,
    quadratic_from_doc,
    symbol_from_doc,
    validate_report,
    z_grid_from_doc,
)
from .symbols import AdmissibleRegion, classify, find_characteristic_points
from .symplectic import (
    analyze,
    hamilton_map,
    quadratic_spectrum,
    real_eigen_splitting,
    sigma_matrix,
)
from .weights import WeightField, verify_prop1

log = logging.getLogger("quadspec")

ELLIPTIC_THRESHOLD = 1e-8
DEFAULT_DELTAS = (0.2, 0.1, 0.05)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _positive(name):
    def conv(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return v

    return conv


def _nonneg(text):
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError("delta must be nonnegative")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("input", help="input JSON file")
    common.add_argument("--out", default="-", help="output path (default: stdout)")
    common.add_argument("--tol", type=_positive("tol"), default=1e-10, help="rank/residual tolerance")
    common.add_argument("--seed", type=int, default=0, help="RNG seed for sampling steps")

    p = _Parser(prog="quadspec", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze-quadratic", parents=[common], help="singular space and spectrum generators")
    a.add_argument("--radius", type=_positive("radius"), default=10.0)

    s = sub.add_parser("spectrum", parents=[common], help="enumerate the eigenvalue lattice")
    s.add_argument("--radius", type=_positive("radius"), default=10.0)

    d = sub.add_parser("deform", parents=[common], help="flow average, weight and deformed form")
    d.add_argument("--T", type=_positive("T"), default=1.0)
    d.add_argument("--delta", type=_nonneg, action="append")

    w = sub.add_parser("weight", parents=[common], help="evaluate G_eps and its gradient")
    w.add_argument("--epsilon", type=_positive("epsilon"), default=0.01)
    w.add_argument("--T", type=_positive("T"), default=1.0)
    w.add_argument("--grid-file", required=True, help='JSON {"points": [[...], ...]}')

    c = sub.add_parser("certify-prop1", parents=[common], help="grid check of the weight properties")
    c.add_argument("--epsilon", type=_positive("epsilon"))
    c.add_argument("--delta", type=_nonneg)
    c.add_argument("--T", type=_positive("T"))
    c.add_argument("--grid-file", help="certification config JSON")

    r = sub.add_parser("scan-resolvent", parents=[common], help="s_min(P - hz) over z and h; CSV output")
    r.add_argument("--grid-file", required=True, help="scan config JSON")
    r.add_argument("--levels", type=int)
    r.add_argument("--h", type=_positive("h"), action="append")

    v = sub.add_parser("verify-identities", parents=[common], help="matrix identities for a quadratic form")
    v.add_argument("--T", type=_positive("T"), default=1.0)
    return p


# ---------------------------------------------------------------- commands


def _lattice_doc(lat):
    return {
        "radius": lat.radius,
        "ground": lat.ground,
        "generators": [{"mu": mu, "multiplicity": r} for mu, r in lat.generators],
        "points": [{"value": p.value, "k": list(p.k)} for p in lat.points],
        "count": len(lat.points),
    }


def cmd_analyze(args, cfg):
    q = quadratic_from_doc(load_json(args.input, QUADRATIC_SCHEMA))
    F = hamilton_map(q)
    S, ok = analyze(q, args.tol)
    adm = q.is_admissible()
    res = {
        "n": q.n,
        "Q": q.Q,
        "F": F.F,
        "admissible": adm,
        "singular_space": {"dim": S.dim, "basis": S.basis, "perp_dim": S.perp.shape[1], "perp": S.perp},
        "partially_elliptic": ok,
        "vacuous": S.dim == 0,
        "williamson": None,
        "classification": classify(q, args.tol),
        "real_eigenvalues": [{"lambda": lam, "dim": b.shape[1]} for lam, b in real_eigen_splitting(F, S=S)],
        "spectrum": None,
    }
    if S.williamson is not None:
        res["williamson"] = {"sign": S.williamson.sign, "freqs": S.williamson.freqs}
    if adm and ok:
        res["spectrum"] = _lattice_doc(quadratic_spectrum(q, args.radius, args.tol))
    return res


def cmd_spectrum(args, cfg):
    q = quadratic_from_doc(load_json(args.input, QUADRATIC_SCHEMA))
    return _lattice_doc(quadratic_spectrum(q, args.radius, args.tol))


def cmd_deform(args, cfg):
    q = quadratic_from_doc(load_json(args.input, QUADRATIC_SCHEMA))
    A = flow_average(q, args.T)
    G = weight_go(q, args.T)
    deltas = args.delta or list(DEFAULT_DELTAS)
    cfg["delta"] = deltas
    records = []
    for dl in deltas:
        D = deform(q, G, dl)
        rad = ellipticity_radius(D, seed=args.seed)
        records.append({"delta": dl, "Qd": D.Qd, "ellipticity_radius": rad, "elliptic": rad > ELLIPTIC_THRESHOLD})
    good = [r["delta"] for r in records if r["elliptic"]]
    return {
        "T": args.T,
        "A": A.A,
        "G": G.G,
        "residual": check_escape_identity(q, G, A),
        "records": records,
        "largest_elliptic_delta": max(good) if good else None,
        "elliptic_threshold": ELLIPTIC_THRESHOLD,
    }


def _critical_points(p0, p1, seeds, tol):
    if seeds is None:
        seeds = np.zeros((1, p0.dim))
    errors: list = []
    pts = find_characteristic_points(p0, seeds, tol=max(tol, 1e-8), p1=p1, errors=errors)
    for seed, exc in errors:
        log.warning("seed %s: %s", list(seed), exc)
    if not pts:
        raise AnalysisError("no doubly characteristic point found from the supplied seeds")
    return pts


def _points_doc(pts):
    return [
        {
            "X": cp.X,
            "res_value": cp.res_value,
            "res_grad": cp.res_grad,
            "qform": cp.qform.Q,
            "p1_value": cp.p1_value,
            "classification": classify(cp.qform),
            "warnings": list(cp.warnings),
        }
        for cp in pts
    ]


def cmd_weight(args, cfg):
    p0, p1, seeds = symbol_from_doc(load_json(args.input, SYMBOL_SCHEMA))
    pts_doc = load_json(args.grid_file, POINTS_SCHEMA, "grid file")
    cfg["points"] = pts_doc["points"]
    cps = _critical_points(p0, p1, seeds, args.tol)
    W = WeightField(p0, args.epsilon, args.T, centers=np.array([cp.X for cp in cps]))
    values = []
    for X in pts_doc["points"]:
        if len(X) != p0.dim:
            raise InputError(f"grid point {X} must have {p0.dim} coordinates")
        val, grad = W(np.asarray(X, dtype=float))
        values.append({"X": X, "G": val, "grad": grad})
    return {
        "epsilon": args.epsilon,
        "T": args.T,
        "centers": [cp.X for cp in cps],
        "rho": W.rho,
        "values": values,
    }


def _item_doc(it):
    return {"name": it.name, "passed": it.passed, "constants": it.constants, "worst": it.worst, "note": it.note}


def cmd_certify(args, cfg):
    p0, p1, seeds = symbol_from_doc(load_json(args.input, SYMBOL_SCHEMA))
    conf = load_json(args.grid_file, PROP1_CONFIG_SCHEMA, "config") if args.grid_file else {}
    eps = args.epsilon if args.epsilon is not None else conf.get("epsilon", 0.01)
    delta = args.delta if args.delta is not None else conf.get("delta", 0.05)
    T = args.T if args.T is not None else conf.get("T", 1.0)
    grid = conf.get("grid", {})
    cfg.update(epsilon=eps, delta=delta, T=T, grid=grid, T_sweep=conf.get("T_sweep", []))
    cps = _critical_points(p0, p1, seeds, args.tol)
    rep = verify_prop1(p0, eps, delta, T, cps, grid=grid, seed=args.seed)
    sweep = []
    for Ts in conf.get("T_sweep", []):
        try:
            r = verify_prop1(p0, eps, delta, Ts, cps, grid=grid, seed=args.seed)
            sweep.append({"T": Ts, "passed": r.passed, "items": {it.name: it.passed for it in r.items}})
        except AnalysisError as exc:
            sweep.append({"T": Ts, "passed": False, "error": f"{type(exc).__name__}: {exc}"})
    return {
        "epsilon": eps,
        "delta": delta,
        "T": T,
        "passed": rep.passed,
        "items": [_item_doc(it) for it in rep.items],
        "grid": rep.grid,
        "bump_profile": rep.bump_profile,
        "critical_points": _points_doc(cps),
        "T_sweep": sweep,
    }


def cmd_scan(args, cfg):
    p0, p1, seeds = symbol_from_doc(load_json(args.input, SYMBOL_SCHEMA))
    conf = load_json(args.grid_file, SCAN_CONFIG_SCHEMA, "scan config")
    zs = z_grid_from_doc(conf["z_grid"])
    if not zs:
        raise InputError("empty grid")
    hs = args.h or conf.get("h") or [0.1]
    levels = args.levels or conf.get("levels", 30)
    sc_opt = conf.get("scales", "auto")
    scales = auto_scales(p0) if sc_opt == "auto" else None if sc_opt == "unit" else tuple(sc_opt)
    margin = conf.get("margin", 0.5)
    cfg.update(z_grid=conf["z_grid"], h=hs, levels=levels, scales=scales, margin=margin)
    cps = _critical_points(p0, p1, seeds, args.tol)
    region = AdmissibleRegion(cps, margin, conf.get("C_bound", np.inf))
    basis = HermiteBasisSpec(p0.n, levels, scales=scales)
    scan = resolvent_scan(p0, p1, zs, hs, basis, region, tol_conv=conf.get("tol_conv", 1e-6))
    buf = _io.StringIO()
    cols = ["z_re", "z_im", "h", "s_min", "s_min_over_h", "converged", "admissible"]
    wr = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    wr.writeheader()
    for row in scan.rows():
        wr.writerow({k: ("%.17g" % v if isinstance(v, float) else str(v).lower()) for k, v in row.items()})
    return {
        "csv": buf.getvalue(),
        "C0_fit": [{"h": h, "C0_fit": c} for h, c in scan.C0_fit.items()],
        "entries": len(scan.entries),
        "unconverged": sum(not e.converged for e in scan.entries),
        "critical_points": _points_doc(cps),
    }


def cmd_verify(args, cfg):
    q = quadratic_from_doc(load_json(args.input, QUADRATIC_SCHEMA))
    J = sigma_matrix(q.n)
    F = hamilton_map(q)
    checks = []

    def add(name, value, tol):
        checks.append({"name": name, "value": float(value), "tol": tol, "passed": bool(value <= tol)})

    add("hamilton_identity", np.abs(J @ F.F - q.Q).max(), 1e-12)
    add("skew_symmetry", np.abs(F.F.T @ J + J @ F.F).max(), 1e-12)
    add(
        "re_im_parts",
        max(np.abs(F.ReF - hamilton_map(q.re).F).max(), np.abs(F.ImF - hamilton_map(q.im).F).max()),
        1e-14,
    )
    S, ok = analyze(q, args.tol)
    if S.dim:
        add("singular_space_in_ker_re_q", np.linalg.norm(q.Q.real @ S.basis), 10 * args.tol)
    A = flow_average(q, args.T)
    G = weight_go(q, args.T)
    add("escape_identity", check_escape_identity(q, G, A), 1e-9)
    add("deform_at_zero", np.abs(deform(q, G, 0.0).Qd - q.Q).max(), 0.0)
    if q.is_admissible() and ok:
        if S.dim:
            add("weight_vanishes_on_S", np.linalg.norm(S.basis.T @ G.G), 1e-9)
        if S.perp.shape[1]:
            mev = average_min_eig(q, args.T, S.perp)
            checks.append({"name": "average_definite_on_perp", "value": float(mev), "tol": 0.0, "passed": bool(mev > 0)})
    return {"passed": all(c["passed"] for c in checks), "checks": checks, "partially_elliptic": ok}


COMMANDS = {
    "analyze-quadratic": cmd_analyze,
    "spectrum": cmd_spectrum,
    "deform": cmd_deform,
    "weight": cmd_weight,
    "certify-prop1": cmd_certify,
    "scan-resolvent": cmd_scan,
    "verify-identities": cmd_verify,
}


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    cfg = {k: v for k, v in vars(args).items() if k not in ("verbose",)}
    try:
        result = COMMANDS[args.command](args, cfg)
        report = {"command": args.command, "version": __version__, "config": cfg, "result": result}
        if args.command == "scan-resolvent":
            table = result.pop("csv")
            result["csv"] = args.out
            validate_report(report)
            _write(args.out, table)
            summary = dumps(report)
            if args.out == "-":
                sys.stderr.write(summary)
            else:
                Path(args.out + ".json").write_text(summary)
        else:
            validate_report(report)
            _write(args.out, dumps(report))
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except QuadspecError as exc:
        print(f"analysis failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())
