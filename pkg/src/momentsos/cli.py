"""Command-line surface: JSON in, JSON/CSV out, deterministic given a seed.

Exit codes: 0 success, 1 input validation failure, 2 numerical failure.
Failures emit a machine-readable {"error": {"kind", "message"}} document.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .christoffel import CDKernel, MomentMatrixSingularError
from .christrep import (
    LogDetConvergenceError,
    NotInteriorError,
    christoffel_representation,
    equilibrium_experiment,
    pell_check,
)
from .disintegration import FactorizationError, disintegrate_cf
from .hierarchy import (
    SdpFailureError,
    lower_bound,
    upper_bound,
    upper_bound_pushforward,
)
from .linalg import NotPositiveDefiniteError
from .moments import (
    DegreeOverflowError,
    MeasureDescriptor,
    MomentSequence,
    SemialgebraicSet,
    archimedean_augment,
    catalog_moments,
)
from .poly import Polynomial
from .schemas import validate_result
from .sdp import SolveOptions

NUMERICAL_ERRORS = (
    SdpFailureError,
    NotInteriorError,
    LogDetConvergenceError,
    NotPositiveDefiniteError,
    MomentMatrixSingularError,
    FactorizationError,
    DegreeOverflowError,
)


class InputError(ValueError):
    pass


def _load_input(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise InputError(f"cannot read input {path}: {err}")


def _need(data: dict, key: str):
    if key not in data:
        raise InputError(f"input is missing required field {key!r}")
    return data[key]


def _resolve_measure(obj: dict, degree_bound: int) -> MomentSequence:
    if "kind" in obj:
        desc = MeasureDescriptor.from_dict(obj)
        return catalog_moments(desc, degree_bound)
    if "moments" in obj:
        seq = MomentSequence.from_dict(obj["moments"])
        if seq.degree_bound < degree_bound:
            raise InputError(
                f"supplied moments reach degree {seq.degree_bound}, "
                f"need {degree_bound}"
            )
        return seq
    raise InputError("measure must carry either 'kind'/'params' or 'moments'")


def _parse_set(data: dict) -> SemialgebraicSet:
    n = int(_need(data, "n"))
    gens = [Polynomial.from_dict(g) for g in data.get("generators", [])]
    S = SemialgebraicSet(n, gens)
    radius = data.get("archimedean_radius")
    if radius is not None:
        S = archimedean_augment(S, float(radius))
    return S


def _t_values(args, data: dict, default_min: int = 1) -> list:
    if args.t is not None:
        return [args.t]
    if args.t_max is not None:
        return list(range(default_min, args.t_max + 1))
    if "t" in data:
        return [int(data["t"])]
    if "t_range" in data:
        lo, hi = data["t_range"]
        return list(range(int(lo), int(hi) + 1))
    raise InputError("no relaxation order given (use --t/--t-max or input t/t_range)")


def _moments_dict(seq: MomentSequence) -> dict:
    return seq.to_dict()


def _matrix(M: np.ndarray) -> list:
    return [[float(v) for v in row] for row in M]


def _envelope(command: str, tolerances: dict, results, seed) -> dict:
    return {
        "command": command,
        "version": __version__,
        "seed": seed,
        "tolerances": tolerances,
        "results": results,
    }


def _emit_json(document: dict, output: str | None) -> None:
    validate_result(document)
    text = json.dumps(document, indent=2, sort_keys=True)
    if output:
        with open(output, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _emit_error(kind: str, message: str, output: str | None) -> None:
    text = json.dumps({"error": {"kind": kind, "message": message}}, sort_keys=True)
    if output:
        with open(output, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stderr.write(text + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_lowerbound(args) -> dict:
    data = _load_input(args.input)
    f = Polynomial.from_dict(_need(data, "f"))
    S = _parse_set(data)
    opts = SolveOptions(gap_tol=args.tol_gap)
    results = []
    for t in _t_values(args, data):
        res = lower_bound(f, S, t, opts)
        results.append(
            {
                "t": t,
                "rho": res.rho,
                "status": res.sdp.status,
                "gap": res.sdp.gap,
                "certificate_residual": res.certificate_residual,
                "flat": res.flat,
                "ranks": list(res.ranks),
                "minimizers": [[float(v) for v in x] for x in res.minimizers],
                "extraction_status": res.extraction_status,
                "certificate": [_matrix(Z) for Z in res.sos_certificate],
                "phi": _moments_dict(res.phi_star),
            }
        )
    return _envelope(
        "lowerbound",
        {"gap_tol": args.tol_gap, "feas_tol": opts.feas_tol},
        results,
        args.seed,
    )


def _cmd_upperbound(args) -> dict:
    data = _load_input(args.input)
    f = Polynomial.from_dict(_need(data, "f"))
    mode = data.get("mode", "multivariate")
    if mode not in ("multivariate", "pushforward"):
        raise InputError(f"unknown upper-bound mode {mode!r}")
    t_values = _t_values(args, data, default_min=0)
    if mode == "multivariate":
        need = max(2 * t + f.degree for t in t_values)
    else:
        need = max((2 * t + 1) * max(f.degree, 1) for t in t_values)
    mu = _resolve_measure(_need(data, "measure"), need)
    results = []
    for t in t_values:
        res = (
            upper_bound(f, mu, t)
            if mode == "multivariate"
            else upper_bound_pushforward(f, mu, t)
        )
        results.append(
            {
                "t": t,
                "mode": res.mode,
                "value": float(res.value),
                "degenerate": res.degenerate,
                "sigma": res.sigma_star.to_dict() if res.sigma_star else None,
            }
        )
    return _envelope("upperbound", {"gap_tol": args.tol_gap}, results, args.seed)


def _cmd_christoffel_rep(args) -> dict:
    data = _load_input(args.input)
    p = Polynomial.from_dict(_need(data, "p"))
    S = _parse_set(data)
    (t,) = _t_values(args, data)
    rep = christoffel_representation(p, S, t)
    results = {
        "t": t,
        "phi": _moments_dict(rep.phi_star),
        "gram_blocks": [_matrix(Q) for Q in rep.gram_blocks],
        "representation_residual": rep.residual_poly.norm_inf(),
        "duality_gap": abs(rep.dual_value - rep.primal_value),
        "kkt_residual": rep.info.kkt_residual,
        "newton_iterations": rep.info.iterations,
    }
    return _envelope(
        "christoffel-rep",
        {"decrement_tol": 1e-10, "residual_tol": 1e-6},
        results,
        args.seed,
    )


def _cmd_pell_check(args) -> dict:
    data = _load_input(args.input)
    S = _parse_set(data)
    t_values = _t_values(args, data)
    need = max(2 * t for t in t_values)
    phi = _resolve_measure(_need(data, "measure"), need)
    results = []
    for t in t_values:
        r = pell_check(S, phi, t)
        results.append(
            {
                "t": t,
                "constant": r.constant,
                "max_residual": r.max_residual,
                "residual_poly": r.residual_poly.to_dict(),
            }
        )
    return _envelope("pell-check", {"residual_tol": 1e-8}, results, args.seed)


def _cmd_equilibrium(args) -> dict:
    data = _load_input(args.input)
    name = _need(data, "set")
    t_values = _t_values(args, data)
    report = equilibrium_experiment(name, t_values)
    per_order = [
        {
            "t": t,
            "constant": entry["constant"],
            "phi": _moments_dict(entry["phi"]),
            "pell_residual": entry["pell_residual"],
            "exploratory": entry["exploratory"],
        }
        for t, entry in sorted(report["results"].items())
    ]
    drift = [
        {"from_t": lo, "to_t": hi, "max_shared_coordinate_change": v}
        for (lo, hi), v in sorted(report["drift"].items())
    ]
    results = {"set": name, "per_order": per_order, "drift": drift}
    return _envelope("equilibrium", {"drift_tol": 1e-7}, results, args.seed)


def _cmd_disintegrate(args) -> dict:
    data = _load_input(args.input)
    (t,) = _t_values(args, data)
    mu = _resolve_measure(_need(data, "measure"), 2 * t)
    xs = _need(data, "x")
    results = []
    for x in xs:
        rep = disintegrate_cf(mu, x, t)
        results.append(
            {
                "x": [float(v) for v in rep.x],
                "t": t,
                "lambda_marginal": rep.lambda_marginal,
                "nu": _moments_dict(rep.nu_moments),
                "nu_mass": rep.nu_mass,
                "factor_residual": rep.factor_residual,
                "joint_reciprocal": rep.joint_reciprocal.to_dict(),
            }
        )
    return _envelope("disintegrate", {"factor_tol": 1e-6}, results, args.seed)


def _grid_points(data: dict, args, phi_points) -> np.ndarray:
    if args.grid:
        counts = [int(v) for v in args.grid.split(",")]
        spec = data.get("grid", {})
        if "min" in spec and "max" in spec:
            lows, highs = spec["min"], spec["max"]
        elif phi_points is not None:
            pts = np.asarray(phi_points, dtype=float)
            span = pts.max(axis=0) - pts.min(axis=0)
            lows = pts.min(axis=0) - 0.1 * span
            highs = pts.max(axis=0) + 0.1 * span
        else:
            raise InputError("grid bounds required: input 'grid': {min, max}")
        if len(counts) == 1:
            counts = counts * len(lows)
        if len(counts) != len(lows):
            raise InputError("--grid counts do not match dimension")
        axes = [np.linspace(lo, hi, c) for lo, hi, c in zip(lows, highs, counts)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)
    if "points" in data:
        return np.asarray(data["points"], dtype=float)
    raise InputError("either input 'points' or --grid is required")


def _cmd_cf(args) -> None:
    data = _load_input(args.input)
    t = int(_need(data, "t") if args.t is None else args.t)
    measure = _need(data, "measure")
    phi = _resolve_measure(measure, 2 * t)
    pts = _grid_points(
        data, args, measure.get("params", {}).get("points") if "kind" in measure else None
    )
    if pts.ndim != 2 or pts.shape[1] != phi.n:
        raise InputError(f"evaluation points must be ({phi.n},)-dimensional")
    kern = CDKernel(phi, t, regularize=True)

    def score(row):
        lam = kern.cf(row)
        return lam, kern.size * lam

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            scored = list(pool.map(score, pts))
    else:
        scored = [score(row) for row in pts]
    header = [f"x{i+1}" for i in range(phi.n)] + ["lambda", "scaled_lambda", "inside_flag"]
    lines = [",".join(header)]
    for row, (lam, scaled) in zip(pts, scored):
        flag = 1 if scaled >= 1.0 else 0
        cells = [f"{v:.17g}" for v in row] + [f"{lam:.17g}", f"{scaled:.17g}", str(flag)]
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_common(p: argparse.ArgumentParser, need_input: bool = True):
    p.add_argument("--input", required=need_input, help="input JSON path")
    p.add_argument("--output", default=None, help="output path (default stdout)")
    p.add_argument("--t", type=int, default=None, help="single relaxation order")
    p.add_argument("--t-max", type=int, default=None, help="sweep orders up to this")
    p.add_argument("--tol-gap", type=float, default=1e-8, help="SDP duality-gap tolerance")
    p.add_argument("--seed", type=int, default=None, help="seed recorded in outputs")
    p.add_argument("--grid", default=None, help="grid counts nx[,ny] for CF evaluation")
    p.add_argument("--threads", type=int, default=1, help="threads for grid sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="momentsos",
        description="Moment-SOS bounds, Christoffel functions, log-det certificates",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (
        "lowerbound",
        "upperbound",
        "cf",
        "christoffel-rep",
        "pell-check",
        "equilibrium",
        "disintegrate",
        "support-score",
    ):
        _add_common(sub.add_parser(name))
    return parser


_JSON_COMMANDS = {
    "lowerbound": _cmd_lowerbound,
    "upperbound": _cmd_upperbound,
    "christoffel-rep": _cmd_christoffel_rep,
    "pell-check": _cmd_pell_check,
    "equilibrium": _cmd_equilibrium,
    "disintegrate": _cmd_disintegrate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("cf", "support-score"):
            _cmd_cf(args)
        else:
            document = _JSON_COMMANDS[args.command](args)
            _emit_json(document, args.output)
        return 0
    except (InputError, ValueError, KeyError) as err:
        _emit_error("validation", str(err), args.output)
        return 1
    except NUMERICAL_ERRORS as err:
        _emit_error("numerical", str(err), args.output)
        return 2


if __name__ == "__main__":
    sys.exit(main())
