"""Command line interface: simulate | extract | validate | criteria | spectral | report.

Every JSON output embeds the resolved configuration and the seed, so a rerun
with the same inputs is byte-identical apart from the ``created`` timestamp.
Exit status: 0 success, 1 a required validation failed, 2 input/parse error,
3 numerical abort.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import criteria as criteria_mod
from . import spectral as spectral_mod
from . import validate as validate_mod
from .expressions import ExpressionError, parse_expression
from .extract import (ExtractionError, assemble_sample, evaluate_npc,
                      npcs_from_dict, npcs_to_dict, solve_gevp)
from .model import DomainError, Penalty, model_from_spec
from .sieve import basis_from_spec, hermite_scaling_from_sample, make_hermite
from .simulate import (NumericsError, read_samples, sample_stationary,
                       write_samples)

_EXIT_OK = 0
_EXIT_VALIDATION = 1
_EXIT_INPUT = 2
_EXIT_NUMERIC = 3


def _apply_thread_cap():
    cap = os.environ.get("LONGRUN_NPC_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, cap)
    try:
        import threadpoolctl
        threadpoolctl.threadpool_limits(int(cap))
    except ImportError:
        pass


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(
            f"{path}: parse error at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc


def _write_json(payload, path, config):
    payload = dict(payload)
    payload["config"] = config
    payload["created"] = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _config_of(args, keys):
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="longrun-npc",
        description="Nonlinear principal components of stationary diffusions")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="sample a stationary path to CSV")
    sim.add_argument("--model", required=True, help="model spec JSON")
    sim.add_argument("--out", required=True, help="samples CSV path")
    sim.add_argument("--meta", help="sidecar JSON path (default <out>.meta.json)")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--interval", type=float, default=0.1)
    sim.add_argument("--length", type=int, default=10000)
    sim.add_argument("--substeps", type=int, default=10)
    sim.add_argument("--burn-in", dest="burn_in", type=int, default=1000)

    ext = sub.add_parser("extract", help="assemble forms and solve the eigenproblem")
    ext.add_argument("--samples", required=True, help="samples CSV")
    ext.add_argument("--model", required=True, help="model spec JSON (for Sigma)")
    ext.add_argument("--basis", help="basis spec JSON")
    ext.add_argument("--m", type=int, help="Hermite basis size when no basis spec")
    ext.add_argument("--k", type=int, help="number of components (default m)")
    ext.add_argument("--ridge", type=float, help="fixed ridge scale override")
    ext.add_argument("--out", required=True, help="components JSON")
    ext.add_argument("--grid-out", dest="grid_out",
                     help="optional CSV of component values on a grid")
    ext.add_argument("--seed", type=int, default=0)

    val = sub.add_parser("validate", help="run implication checks on components")
    val.add_argument("--npcs", required=True, help="components JSON")
    val.add_argument("--samples", required=True, help="samples CSV")
    val.add_argument("--model", required=True, help="model spec JSON")
    val.add_argument("--out", help="report JSON (default stdout)")
    val.add_argument("--j", type=int, nargs="*", help="component indices to AR-test")
    val.add_argument("--batches", type=int, default=64)
    val.add_argument("--tol", type=float, default=0.25,
                     help="relative tolerance of the long-run variance check")
    val.add_argument("--seed", type=int, default=0)

    cri = sub.add_parser("criteria", help="evaluate existence criteria")
    cri.add_argument("--model", required=True, help="model spec JSON")
    cri.add_argument("--varsigma", help="penalization spec JSON")
    cri.add_argument("--cbar", type=float, help="lower bound on varsigma^2")
    cri.add_argument("--radii", type=float, nargs="*", help="radius ladder")
    cri.add_argument("--out", help="report JSON (default stdout)")
    cri.add_argument("--seed", type=int, default=0)

    spe = sub.add_parser("spectral", help="semigroup/resolvent/long-run arithmetic")
    spe.add_argument("--npcs", required=True, help="components JSON")
    spe.add_argument("--expr", help="function of x1..xn to project")
    spe.add_argument("--coeffs", help="comma-separated expansion coefficients")
    spe.add_argument("--samples", help="samples CSV for the projection measure")
    spe.add_argument("--model", help="model spec JSON (needed with --samples)")
    spe.add_argument("--t", type=float, help="transition horizon")
    spe.add_argument("--alpha", type=float, help="resolvent parameter")
    spe.add_argument("--longrun", action="store_true",
                     help="report the long-run variance")
    spe.add_argument("--out", help="result JSON (default stdout)")
    spe.add_argument("--seed", type=int, default=0)

    rep = sub.add_parser("report", help="merge extract and validate outputs")
    rep.add_argument("--npcs", required=True, help="components JSON")
    rep.add_argument("--validation", help="validation report JSON")
    rep.add_argument("--samples", help="samples CSV for the plotting grid")
    rep.add_argument("--out", required=True,
                     help="output prefix (<out>.txt and <out>.csv)")
    return parser


def _cmd_simulate(args):
    model = model_from_spec(_load_json(args.model))
    path = sample_stationary(model, args.interval, args.length,
                             burn_in=args.burn_in, substeps=args.substeps,
                             seed=args.seed)
    meta = args.meta or (args.out + ".meta.json")
    path.meta["model"] = model.spec
    write_samples(path, args.out, meta)
    return _EXIT_OK


def _resolve_basis(args, states):
    if args.basis:
        return basis_from_spec(_load_json(args.basis))
    if args.m is None:
        raise ValueError("pass --basis or --m")
    if states.shape[1] != 1:
        raise ValueError("--m builds a scalar Hermite basis; pass --basis "
                         "for multivariate samples")
    shift, scale = hermite_scaling_from_sample(states)
    return make_hermite(1, args.m - 1, shift, scale)


def _cmd_extract(args):
    model = model_from_spec(_load_json(args.model))
    path = read_samples(args.samples, _maybe_sidecar(args.samples))
    basis = _resolve_basis(args, path.states)
    forms = assemble_sample(basis, model.diffusion, path, ridge=args.ridge)
    npcs = solve_gevp(forms, args.k)
    payload = npcs_to_dict(npcs)
    config = _config_of(args, ("samples", "model", "basis", "m", "k", "ridge",
                               "seed"))
    _write_json(payload, args.out, config)
    if args.grid_out:
        _write_grid(npcs, path.states, args.grid_out)
    return _EXIT_OK


def _maybe_sidecar(samples_path):
    candidate = samples_path + ".meta.json"
    return candidate if os.path.exists(candidate) else None


def _write_grid(npcs, states, out_path, points=201):
    lo = np.percentile(states[:, 0], 0.5)
    hi = np.percentile(states[:, 0], 99.5)
    grid_x = np.linspace(lo, hi, points)
    full = np.tile(np.median(states, axis=0), (points, 1))
    full[:, 0] = grid_x
    columns = [grid_x]
    for j in range(npcs.count):
        columns.append(evaluate_npc(npcs, None, full, j))
    data = np.column_stack(columns)
    header = ",".join(["x"] + [f"psi{j}" for j in range(npcs.count)])
    with open(out_path, "w") as fh:
        fh.write(header + "\n")
        for row in data:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _cmd_validate(args):
    model = model_from_spec(_load_json(args.model))
    path = read_samples(args.samples, _maybe_sidecar(args.samples))
    npcs = npcs_from_dict(_load_json(args.npcs))
    forms = assemble_sample(npcs.basis, model.diffusion, path)

    reports = []
    indices = args.j if args.j else [j for j in (1, 2, 3) if j < npcs.count]
    for j in indices:
        reports.append(validate_mod.ar_test(path, npcs, npcs.basis, j))
    own = solve_gevp(forms, npcs.count)
    reports.append(validate_mod.orthogonality_report(own, forms))
    probes = path.states[:: max(1, path.length // 100)][:100]
    reports.append(validate_mod.drift_identity_check(model, probes))
    if npcs.count > 1 and npcs.eigenvalues[1] > 0:
        reference = 2.0 / float(npcs.eigenvalues[1])
        reports.append(validate_mod.longrun_mc(
            path, lambda x: evaluate_npc(npcs, None, x, 1), args.batches,
            reference=reference, rel_tol=args.tol))

    payload = {"reports": [r.to_dict() for r in reports],
               "all_passed": all(r.passed for r in reports)}
    config = _config_of(args, ("npcs", "samples", "model", "j", "batches",
                               "tol", "seed"))
    _write_json(payload, args.out, config)
    return _EXIT_OK if payload["all_passed"] else _EXIT_VALIDATION


def _cmd_criteria(args):
    model = model_from_spec(_load_json(args.model))
    n = model.state_space.dimension
    grid = criteria_mod.default_grid(n, radii=args.radii or None, seed=args.seed)
    if args.varsigma:
        pen = Penalty.from_spec(_load_json(args.varsigma))
    elif getattr(model, "penalty", None) is not None:
        pen = model.penalty
    else:
        pen = Penalty.constant(1.0)
    cbar = args.cbar
    if cbar is None:
        cbar = pen.spec.get("floor", pen.spec.get("value", 1.0)) if pen.spec else 1.0

    reports = []
    if n == 1:
        reports.append(criteria_mod.check_scalar(model.density, pen, grid))
    reports.append(criteria_mod.check_core(model.density, model.diffusion, grid))
    reports.append(criteria_mod.check_divergent_potential(
        model.density, model.diffusion, grid))
    reports.append(criteria_mod.check_thin_tail(model.density, pen, grid))
    reports.append(criteria_mod.check_algebraic_tail(model.density, pen, cbar, grid))

    payload = {"reports": [r.to_dict() for r in reports],
               "grid": grid.to_dict()}
    config = _config_of(args, ("model", "varsigma", "cbar", "radii", "seed"))
    _write_json(payload, args.out, config)
    return _EXIT_OK


def _cmd_spectral(args):
    npcs = npcs_from_dict(_load_json(args.npcs))
    if args.coeffs:
        coeffs = np.array([float(v) for v in args.coeffs.split(",")])
        sf = spectral_mod.SpectralFunction(coeffs, npcs)
    elif args.expr:
        if not (args.samples and args.model):
            raise ValueError("--expr projection needs --samples and --model")
        model = model_from_spec(_load_json(args.model))
        path = read_samples(args.samples, _maybe_sidecar(args.samples))
        forms = assemble_sample(npcs.basis, model.diffusion, path)
        expr = parse_expression(args.expr, path.dimension)
        own = solve_gevp(forms, npcs.count)
        sf = spectral_mod.project(lambda x: expr(x), own, forms)
        npcs = own
    else:
        raise ValueError("pass --coeffs or --expr")

    result = {"coefficients": sf.coefficients.tolist(),
              "delta": npcs.eigenvalues.tolist()}
    if args.t is not None:
        result["transition"] = spectral_mod.transition_apply(
            sf, args.t).coefficients.tolist()
        result["t"] = args.t
    if args.alpha is not None:
        result["resolvent"] = spectral_mod.resolvent_apply(
            sf, args.alpha).coefficients.tolist()
        result["alpha"] = args.alpha
    if args.longrun:
        result["longrun_variance"] = spectral_mod.longrun_variance(sf)
    config = _config_of(args, ("npcs", "expr", "coeffs", "samples", "model",
                               "t", "alpha", "seed"))
    _write_json(result, args.out, config)
    return _EXIT_OK


def _cmd_report(args):
    npcs_payload = _load_json(args.npcs)
    npcs = npcs_from_dict(npcs_payload)
    lines = ["components", "=========="]
    for j, d in enumerate(npcs_payload["delta"]):
        lines.append(f"psi_{j}: delta = {d:.10g}")
    if npcs_payload.get("ridge"):
        lines.append(f"ridge applied to W: {npcs_payload['ridge']:.3e}")
    if args.validation:
        val = _load_json(args.validation)
        lines += ["", "validation", "=========="]
        for rep in val["reports"]:
            flag = "PASS" if rep["passed"] else "FAIL"
            se = rep.get("standard_error")
            se_txt = f" (se {se:.3g})" if se is not None else ""
            lines.append(f"[{flag}] {rep['test']}: statistic "
                         f"{rep['statistic']:.6g}{se_txt}, tolerance "
                         f"{rep['tolerance']:.3g}")
        lines.append("")
        lines.append("all passed" if val["all_passed"] else "FAILURES PRESENT")
    with open(args.out + ".txt", "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if args.samples:
        path = read_samples(args.samples, _maybe_sidecar(args.samples))
        _write_grid(npcs, path.states, args.out + ".csv")
    return _EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "extract": _cmd_extract,
    "validate": _cmd_validate,
    "criteria": _cmd_criteria,
    "spectral": _cmd_spectral,
    "report": _cmd_report,
}


def main(argv=None):
    _apply_thread_cap()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (NumericsError, ExtractionError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return _EXIT_NUMERIC
    except (OSError, ValueError, KeyError, ExpressionError, DomainError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return _EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
