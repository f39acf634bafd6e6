"""Command-line entry point: deterministic, file-based pipelines.

Every subcommand validates its JSON inputs against the schemas below
before computing, writes outputs with round-trip float precision, and
drops a RunManifest recording input/output digests.  Repeated runs on
identical inputs produce byte-identical data artifacts; the manifest's
wall_time_seconds is the one field allowed to differ.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None

from . import __version__
from .analysis import DecayBound, TheoremScenario, theorem_witness
from .core import kvm_from_dict, kvm_to_dict, state_from_dict, state_to_dict
from .errors import TodaLabError
from .evolution import (
    fit_dispersion,
    growth_exponent_witness,
    law_from_dict,
    law_to_dict,
)
from .flow import FlowConfig, Trajectory, integrate, integrate_kvm
from .hierarchy import HierarchyCoeffs, coeffs_from_dict, tl_field
from .soliton import SolitonSpec, build_soliton
from .spectral import scatter_unit_circle, sd_from_dict, sd_to_dict

SCHEMA_VERSION = 1

_NUM = {"type": "number"}
_NUMS = {"type": "array", "items": _NUM, "minItems": 1}
_PAIR = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_PAIRS = {"type": "array", "items": _PAIR}

STATE_SCHEMA = {
    "type": "object",
    "required": ["n_min", "a", "b", "a0", "b0"],
    "properties": {
        "schema_version": {"type": "integer"},
        "n_min": {"type": "integer"},
        "a": _NUMS,
        "b": _NUMS,
        "a0": _NUM,
        "b0": _NUM,
        "t": _NUM,
    },
}

KVM_SCHEMA = {
    "type": "object",
    "required": ["n_min", "rho", "rho0"],
    "properties": {
        "schema_version": {"type": "integer"},
        "n_min": {"type": "integer"},
        "rho": _NUMS,
        "rho0": _NUM,
        "t": _NUM,
    },
}

COEFFS_SCHEMA = {
    "type": "object",
    "required": ["r", "c"],
    "properties": {
        "schema_version": {"type": "integer"},
        "r": {"type": "integer", "minimum": 0},
        "c": {"type": "array", "items": _NUM, "minItems": 2},
    },
}

SCATTERING_SCHEMA = {
    "type": "object",
    "required": ["t", "k_grid", "R_plus", "R_minus", "bound_states"],
    "properties": {
        "schema_version": {"type": "integer"},
        "t": _NUM,
        "k_grid": _PAIRS,
        "R_plus": _PAIRS,
        "R_minus": _PAIRS,
        "bound_states": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["k", "lambda", "gamma_plus", "gamma_minus"],
                "properties": {
                    "k": _NUM,
                    "lambda": _NUM,
                    "gamma_plus": _NUM,
                    "gamma_minus": _NUM,
                },
            },
        },
    },
}

LAW_SCHEMA = {
    "type": "object",
    "required": ["r", "d"],
    "properties": {
        "schema_version": {"type": "integer"},
        "r": {"type": "integer", "minimum": 0},
        "d": {
            "type": "object",
            "patternProperties": {r"^-?\d+$": _NUM},
            "additionalProperties": False,
        },
        "residual": _NUM,
    },
}


def thread_cap(default: int = 1) -> int:
    """Parallelism cap from TODA_LAB_THREADS; invalid or unset -> default."""
    raw = os.environ.get("TODA_LAB_THREADS", "")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)
            + "\n").encode("utf-8")


def _cell(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _csv_bytes(header, rows) -> bytes:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(x) for x in row))
    return ("\n".join(lines) + "\n").encode("utf-8")


class _Inputs:
    """Reads and schema-validates JSON inputs, remembering their digests."""

    def __init__(self):
        self.digests = {}

    def load(self, path, schema):
        raw = Path(path).read_bytes()
        self.digests[str(path)] = _sha256(raw)
        obj = json.loads(raw.decode("utf-8"))
        if jsonschema is not None:
            jsonschema.validate(obj, schema)
        return obj


def _finish(out, command, params, input_digests, artifacts, started,
            force_dir=False):
    """Write artifacts plus a manifest; without --out, print the first one.

    artifacts is an ordered list of (canonical_name, bytes).  A
    trailing-slash or directory --out keeps canonical names inside it;
    a file --out renames the first artifact and derives siblings from
    its stem.
    """
    if out is None:
        sys.stdout.write(artifacts[0][1].decode("utf-8"))
        return 0
    out_path = Path(out)
    dir_mode = (force_dir or str(out).endswith(os.sep) or str(out).endswith("/")
                or out_path.is_dir())
    written = []
    if dir_mode:
        out_path.mkdir(parents=True, exist_ok=True)
        for name, data in artifacts:
            (out_path / name).write_bytes(data)
            written.append((name, data))
        manifest_path = out_path / "manifest.json"
    else:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_bytes(artifacts[0][1])
        written.append((out_path.name, artifacts[0][1]))
        for name, data in artifacts[1:]:
            sibling = out_path.with_name(out_path.stem + Path(name).suffix)
            sibling.write_bytes(data)
            written.append((sibling.name, data))
        manifest_path = out_path.with_name(out_path.stem + ".manifest.json")
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "parameters": params,
        "input_digests": input_digests,
        "output_digests": {name: _sha256(data) for name, data in written},
        "tool_version": __version__,
        "wall_time_seconds": time.monotonic() - started,
    }
    manifest_path.write_bytes(_json_bytes(manifest))
    return 0


def _coeffs_from_args(args, inp: _Inputs) -> HierarchyCoeffs:
    if getattr(args, "c", None):
        return coeffs_from_dict(inp.load(args.c, COEFFS_SCHEMA))
    return HierarchyCoeffs.homogeneous(args.r)


def _flow_config(args) -> FlowConfig:
    return FlowConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol,
                      guard_band=args.guard_band)


def _snapshot_indices(total: int, snapshots) -> list:
    if snapshots is None or snapshots >= total:
        return list(range(total))
    if snapshots < 2:
        raise ValueError("--snapshots must be at least 2")
    return sorted(set(int(round(x))
                      for x in np.linspace(0, total - 1, snapshots)))


def _cmd_evolve(args):
    started = time.monotonic()
    inp = _Inputs()
    state = state_from_dict(inp.load(args.state, STATE_SCHEMA))
    coeffs = _coeffs_from_args(args, inp)
    traj = integrate(state, coeffs, args.t_final, _flow_config(args))
    arts = []
    for i in _snapshot_indices(len(traj), args.snapshots):
        doc = {"schema_version": SCHEMA_VERSION, **state_to_dict(traj.states[i])}
        arts.append(("state_%04d.json" % i, _json_bytes(doc)))
    arts.append(("conservation.csv",
                 _csv_bytes(Trajectory.CONSERVATION_COLUMNS, traj.conservation)))
    params = {"state": str(args.state), "r": args.r, "c": args.c,
              "t_final": args.t_final, "rel_tol": args.rel_tol,
              "abs_tol": args.abs_tol, "guard_band": args.guard_band,
              "snapshots": args.snapshots}
    return _finish(args.out, "evolve", params, inp.digests, arts, started,
                   force_dir=True)


def _cmd_scatter(args):
    started = time.monotonic()
    inp = _Inputs()
    state = state_from_dict(inp.load(args.state, STATE_SCHEMA))
    sd = scatter_unit_circle(state, grid=args.grid,
                             truncation=args.truncation,
                             threads=thread_cap())
    doc = {"schema_version": SCHEMA_VERSION, **sd_to_dict(sd)}
    params = {"state": str(args.state), "grid": args.grid,
              "truncation": args.truncation}
    return _finish(args.out, "scatter", params, inp.digests,
                   [("sd.json", _json_bytes(doc))], started)


def _cmd_soliton(args):
    started = time.monotonic()
    ks = args.k or []
    gammas = args.gamma or []
    if len(ks) != len(gammas) or not ks:
        raise ValueError("need one --gamma per --k, at least one pair")
    lo, _, hi = args.window.partition(":")
    if not _:
        raise ValueError("--window expects lo:hi, e.g. -100:100")
    spec = SolitonSpec(bound_states=tuple(zip(ks, gammas)), t=args.t)
    state = build_soliton(spec, (int(lo), int(hi)))
    doc = {"schema_version": SCHEMA_VERSION, **state_to_dict(state)}
    params = {"k": list(ks), "gamma": list(gammas), "window": args.window,
              "t": args.t}
    return _finish(args.out, "soliton", params, {},
                   [("state.json", _json_bytes(doc))], started)


def _cmd_dispersion_fit(args):
    started = time.monotonic()
    inp = _Inputs()
    sd0 = sd_from_dict(inp.load(args.sd0, SCATTERING_SCHEMA))
    sd1 = sd_from_dict(inp.load(args.sd1, SCATTERING_SCHEMA))
    law = fit_dispersion(sd0, sd1, args.r)
    doc = {"schema_version": SCHEMA_VERSION, **law_to_dict(law)}
    params = {"sd0": str(args.sd0), "sd1": str(args.sd1), "r": args.r}
    return _finish(args.out, "dispersion fit", params, inp.digests,
                   [("law.json", _json_bytes(doc))], started)


def _cmd_witness_growth(args):
    started = time.monotonic()
    inp = _Inputs()
    sd = sd_from_dict(inp.load(args.sd, SCATTERING_SCHEMA))
    law = law_from_dict(inp.load(args.law, LAW_SCHEMA))
    rep = growth_exponent_witness(sd, law, x_max=args.x_max)
    lines = [
        "growth exponent witness",
        "r: %d" % rep.r,
        "branch: %s" % rep.branch,
        "trivial reflection: %s" % ("yes" if rep.trivial else "no"),
        "circle sup log|R_plus|: %s" % repr(rep.circle_log_sup),
        "leading coefficient: %s (expected %s)"
        % (repr(rep.leading_coeff), repr(rep.expected_coeff)),
        "grows: %s" % ("yes" if rep.grows else "no"),
        rep.message,
    ]
    report = ("\n".join(lines) + "\n").encode("utf-8")
    rows = zip(rep.xs, rep.rate_minus_dir, rep.rate_plus_dir)
    csv = _csv_bytes(("x", "rate_minus_dir", "rate_plus_dir"), rows)
    params = {"sd": str(args.sd), "law": str(args.law), "x_max": args.x_max}
    return _finish(args.out, "witness growth", params, inp.digests,
                   [("report.txt", report), ("growth.csv", csv)], started)


def _cmd_theorem_demo(args):
    started = time.monotonic()
    inp = _Inputs()
    state = state_from_dict(inp.load(args.state, STATE_SCHEMA))
    coeffs = _coeffs_from_args(args, inp)
    bound = DecayBound(C=args.C, delta=args.delta)
    scenario = TheoremScenario(t0=args.t0, t1=args.t1, initial=state,
                               coeffs=coeffs, bound=bound)
    report = theorem_witness(scenario, _flow_config(args))
    slices_doc = []
    for sl in report.slices:
        slices_doc.append({
            "t": sl.t,
            "first_moment": sl.first_moment,
            "fitted_class": sl.fitted_class,
            "rows": [
                {"M": r.M, "tail": r.tail, "bound": r.bound_value,
                 "satisfied": bool(r.satisfied)}
                for r in sl.rows
            ],
        })
    doc = {
        "schema_version": SCHEMA_VERSION,
        "verdict": report.verdict,
        "t0": args.t0,
        "t1": args.t1,
        "C": args.C,
        "delta": args.delta,
        "slices": slices_doc,
    }
    csv_rows = [
        (r0.M, r0.tail, r1.tail, r0.bound_value)
        for r0, r1 in zip(report.t0_slice.rows, report.t1_slice.rows)
    ]
    csv = _csv_bytes(("M", "tail_t0", "tail_t1", "bound"), csv_rows)
    params = {"state": str(args.state), "r": args.r, "c": args.c,
              "C": args.C, "delta": args.delta, "t0": args.t0, "t1": args.t1,
              "rel_tol": args.rel_tol, "abs_tol": args.abs_tol,
              "guard_band": args.guard_band}
    return _finish(args.out, "theorem-demo", params, inp.digests,
                   [("report.json", _json_bytes(doc)), ("report.csv", csv)],
                   started)


def _cmd_hierarchy_show(args):
    started = time.monotonic()
    inp = _Inputs()
    state = state_from_dict(inp.load(args.state, STATE_SCHEMA))
    coeffs = _coeffs_from_args(args, inp)
    fields = tl_field(state, coeffs)
    ns = range(state.n_min, state.n_max + 1)
    rows = [(n, ad, bd) for n, ad, bd in zip(ns, fields[0], fields[1])]
    csv = _csv_bytes(("n", "a_dot", "b_dot"), rows)
    params = {"state": str(args.state), "r": args.r, "c": args.c}
    return _finish(args.out, "hierarchy show", params, inp.digests,
                   [("field.csv", csv)], started)


def _cmd_kvm_evolve(args):
    started = time.monotonic()
    inp = _Inputs()
    state = kvm_from_dict(inp.load(args.state, KVM_SCHEMA))
    traj = integrate_kvm(state, args.t_final, _flow_config(args))
    arts = []
    for i in _snapshot_indices(len(traj), args.snapshots):
        doc = {"schema_version": SCHEMA_VERSION, **kvm_to_dict(traj.states[i])}
        arts.append(("state_%04d.json" % i, _json_bytes(doc)))
    arts.append(("conservation.csv",
                 _csv_bytes(Trajectory.CONSERVATION_COLUMNS, traj.conservation)))
    params = {"state": str(args.state), "t_final": args.t_final,
              "rel_tol": args.rel_tol, "abs_tol": args.abs_tol,
              "guard_band": args.guard_band, "snapshots": args.snapshots}
    return _finish(args.out, "kvm evolve", params, inp.digests, arts, started,
                   force_dir=True)


def _add_flow_flags(p, guard_default=8):
    p.add_argument("--rel-tol", type=float, default=1e-10, dest="rel_tol")
    p.add_argument("--abs-tol", type=float, default=1e-12, dest="abs_tol")
    p.add_argument("--guard-band", type=int, default=guard_default,
                   dest="guard_band")


def _add_coeff_flags(p):
    p.add_argument("--r", type=int, default=0,
                   help="hierarchy order (homogeneous coefficients)")
    p.add_argument("--c", type=str, default=None,
                   help="HierarchyCoeffs JSON overriding --r")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toda-lab",
        description="Numerical laboratory for the Toda and Kac-van Moerbeke "
                    "hierarchies.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("evolve", help="integrate a Toda hierarchy flow")
    p.add_argument("--state", required=True)
    _add_coeff_flags(p)
    p.add_argument("--t-final", type=float, required=True, dest="t_final")
    p.add_argument("--snapshots", type=int, default=None)
    _add_flow_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("scatter", help="forward scattering on the unit circle")
    p.add_argument("--state", required=True)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--truncation", type=int, default=401)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_scatter)

    p = sub.add_parser("soliton", help="build a pure N-soliton state")
    p.add_argument("--k", type=float, action="append")
    p.add_argument("--gamma", type=float, action="append")
    p.add_argument("--window", required=True, help="lo:hi site range")
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_soliton)

    p = sub.add_parser("dispersion", help="dispersion-law pipelines")
    dsub = p.add_subparsers(dest="subcommand")
    pf = dsub.add_parser("fit", help="fit a law from two scattering snapshots")
    pf.add_argument("--sd0", required=True)
    pf.add_argument("--sd1", required=True)
    pf.add_argument("--r", type=int, default=0)
    pf.add_argument("--out", default=None)
    pf.set_defaults(func=_cmd_dispersion_fit)

    p = sub.add_parser("witness", help="uniqueness-mechanism witnesses")
    wsub = p.add_subparsers(dest="subcommand")
    pw = wsub.add_parser("growth", help="growth of the evolution factor")
    pw.add_argument("--sd", required=True)
    pw.add_argument("--law", required=True)
    pw.add_argument("--x-max", type=float, default=30.0, dest="x_max")
    pw.add_argument("--out", default=None)
    pw.set_defaults(func=_cmd_witness_growth)

    p = sub.add_parser("theorem-demo", help="two-time decay dichotomy witness")
    p.add_argument("--state", required=True)
    _add_coeff_flags(p)
    p.add_argument("--C", type=float, default=10.0)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=1.0)
    _add_flow_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_theorem_demo)

    p = sub.add_parser("hierarchy", help="hierarchy field inspection")
    hsub = p.add_subparsers(dest="subcommand")
    ph = hsub.add_parser("show", help="evaluate the TL_r field on a state")
    ph.add_argument("--state", required=True)
    _add_coeff_flags(ph)
    ph.add_argument("--out", default=None)
    ph.set_defaults(func=_cmd_hierarchy_show)

    p = sub.add_parser("kvm", help="Kac-van Moerbeke pipelines")
    ksub = p.add_subparsers(dest="subcommand")
    pk = ksub.add_parser("evolve", help="integrate the KvM flow")
    pk.add_argument("--state", required=True)
    pk.add_argument("--t-final", type=float, required=True, dest="t_final")
    pk.add_argument("--snapshots", type=int, default=None)
    _add_flow_flags(pk, guard_default=4)
    pk.add_argument("--out", required=True)
    pk.set_defaults(func=_cmd_kvm_evolve)

    return parser


def _mend_argv(argv):
    """Fuse --window with its value: argparse misreads "-100:100" as a flag."""
    if argv is None:
        argv = sys.argv[1:]
    out = []
    i = 0
    while i < len(argv):
        if argv[i] == "--window" and i + 1 < len(argv):
            out.append("--window=" + argv[i + 1])
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(_mend_argv(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return int(args.func(args) or 0)
    except TodaLabError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - domain errors exit 1
        if jsonschema is not None and isinstance(
                exc, jsonschema.ValidationError):
            print("invalid input: %s" % exc.message, file=sys.stderr)
            return 1
        if isinstance(exc, (ValueError, OSError, KeyError)):
            print("error: %s" % exc, file=sys.stderr)
            return 1
        raise


if __name__ == "__main__":
    sys.exit(main())
