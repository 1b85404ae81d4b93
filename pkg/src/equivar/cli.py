"""Command-line entry point.

Every command prints one JSON object ``{"status", "payload", "diagnostics"}``
on stdout.  Exit code 0 means ``status == "ok"``; 1 is a domain error
(the error class name is the first diagnostic); 2 is a usage error or
unreadable input.  With ``--out PATH`` the payload is written atomically to
PATH and stdout carries only the status record.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from .catalog import check_invariance, generators
from .certify import CertificationFailure, NoExpression, PolyMap, decompose
from .fit import TASKS, Dataset, EquiModel, evaluate, fit, make_task, predict
from .groups import FAMILIES, GroupSpec, NumericError, sample, verify_membership
from .linsolve import Inconsistent
from .malgrange import CatalogCorruption, Parametrization, check_equivariance, derive, eval_basis, eval_features
from .poly import StructuralError
from .seeding import derive_seed, worker_count


class UsageError(Exception):
    """Bad arguments or unreadable / malformed input; exit code 2."""


class DomainFailure(Exception):
    """A command ran but its result is a failure (e.g. verification)."""

    def __init__(self, message: str, payload=None):
        super().__init__(message)
        self.payload = payload


DOMAIN_ERRORS = (
    StructuralError,
    NumericError,
    NoExpression,
    CertificationFailure,
    CatalogCorruption,
    Inconsistent,
    DomainFailure,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read_json(path: str):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc}") from exc
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _load(path: str, build):
    """Parse a JSON file with ``build``; unwraps a command-result envelope."""
    data = _read_json(path)
    if isinstance(data, dict) and "status" in data and "payload" in data:
        data = data["payload"]
    try:
        return build(data)
    except (StructuralError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed input in {path}: {exc}") from exc


def _load_inputs(path: str, spec: GroupSpec) -> np.ndarray:
    def build(data):
        X = np.array(data["vectors"], dtype=float)
        if X.shape[-2:] != (spec.n, spec.d):
            raise StructuralError(f"expected vectors of shape ({spec.n}, {spec.d}), got {X.shape}")
        return X

    return _load(path, build)


def _spec(args) -> GroupSpec:
    return GroupSpec(args.group, args.d, args.n)


def _add_group(p, required=True):
    p.add_argument("--group", choices=FAMILIES, required=required)
    p.add_argument("--d", type=int, required=required)
    p.add_argument("--n", type=int, required=required)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="equivar", description="Equivariant polynomial maps from invariant generators.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--out", default=None, help="write the payload here instead of stdout")

    p = sub.add_parser("generators", help="invariant generators of V x W*")
    _add_group(p)
    common(p)

    p = sub.add_parser("derive", help="features and equivariant basis maps")
    _add_group(p)
    common(p)

    p = sub.add_parser("eval", help="evaluate a parametrization on an input tuple")
    p.add_argument("--param", help="Parametrization JSON (output of derive)")
    _add_group(p, required=False)
    p.add_argument("--input", required=True, help='InputTuple JSON {"vectors": [[...], ...]}')
    common(p)

    p = sub.add_parser("verify", help="numeric invariance / equivariance table")
    _add_group(p)
    p.add_argument("--trials", type=int, default=100)
    common(p)

    p = sub.add_parser("express", help="decompose a polynomial map and certify it")
    _add_group(p)
    p.add_argument("--map", required=True, help="PolyMap JSON")
    p.add_argument("--degree-bound", type=int, default=None)
    common(p)

    p = sub.add_parser("fit", help="fit an equivariant regression model")
    p.add_argument("--task", choices=TASKS)
    p.add_argument("--data", help="Dataset JSON (instead of --task)")
    _add_group(p, required=False)
    p.add_argument("--count", type=int, default=500)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--degree", type=int, default=1)
    p.add_argument("--lambda", dest="ridge_lambda", type=float, default=1e-8)
    common(p)

    p = sub.add_parser("predict", help="predict with a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    common(p)

    p = sub.add_parser("evaluate", help="test metrics of a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", help="Dataset JSON (instead of --task)")
    p.add_argument("--task", choices=TASKS)
    p.add_argument("--count", type=int, default=500)
    p.add_argument("--noise", type=float, default=0.0)
    common(p)
    return parser


def cmd_generators(args):
    return generators(_spec(args)).to_json()


def cmd_derive(args):
    return derive(generators(_spec(args))).to_json()


def cmd_eval(args):
    if args.param:
        param = _load(args.param, Parametrization.from_json)
    elif args.group and args.d and args.n:
        param = derive(generators(_spec(args)))
    else:
        raise UsageError("eval needs --param or --group/--d/--n")
    X = _load_inputs(args.input, param.spec)
    return {"features": eval_features(param, X).tolist(), "basis": eval_basis(param, X).tolist()}


def cmd_verify(args):
    spec = _spec(args)
    tol = spec.default_tol if args.tol is None else args.tol
    genset = generators(spec)
    membership = [
        verify_membership(sample(spec, derive_seed(args.seed, "trial-group", t)), tol).max_violation
        for t in range(args.trials)
    ]
    rows = [{"item": "membership", "kind": "group", "max_violation": max(membership),
             "pass": max(membership) <= tol}]
    inv = check_invariance(genset, args.trials, tol, args.seed, workers=worker_count())
    rows += [dict(i.to_json(), kind="generator") for i in inv.items]
    rows += [i.to_json() for i in check_equivariance(derive(genset), args.trials, tol, args.seed)]
    payload = {"spec": spec.to_json(), "trials": args.trials, "tol": tol, "rows": rows,
               "all_pass": all(r["pass"] for r in rows)}
    if not payload["all_pass"]:
        failed = [r["item"] for r in rows if not r["pass"]]
        raise DomainFailure("verification failed for " + ", ".join(failed), payload)
    return payload


def cmd_express(args):
    spec = _spec(args)
    f = _load(args.map, PolyMap.from_json)
    if (f.universe.d, f.universe.n) != (spec.d, spec.n):
        raise StructuralError(f"map is over d={f.universe.d}, n={f.universe.n}; group says d={spec.d}, n={spec.n}")
    genset = generators(spec)
    dec = decompose(f, genset, derive(genset), args.degree_bound)
    out = dec.to_json()
    out["certified"] = True
    out["degree_bound"] = dec.expression.degree_bound
    return out


def _dataset(args, spec=None) -> Dataset:
    if args.data:
        return _load(args.data, Dataset.from_json)
    if not args.task:
        raise UsageError("need --data or --task")
    spec = spec or _spec(args)
    return make_task(args.task, spec, args.count, args.seed, args.noise)


def cmd_fit(args):
    if not args.data and not (args.group and args.d and args.n):
        raise UsageError("fit --task needs --group, --d and --n")
    data = _dataset(args)
    model = fit(data, args.degree, args.ridge_lambda)
    out = model.to_json()
    out["training"] = evaluate(model, data, seed=args.seed).to_json()
    return out


def cmd_predict(args):
    model = _load(args.model, EquiModel.from_json)
    X = _load_inputs(args.input, model.param.spec)
    return {"y": predict(model, X).tolist()}


def cmd_evaluate(args):
    model = _load(args.model, EquiModel.from_json)
    data = _dataset(args, model.param.spec)
    return evaluate(model, data, seed=args.seed).to_json()


COMMANDS = {
    "generators": cmd_generators,
    "derive": cmd_derive,
    "eval": cmd_eval,
    "verify": cmd_verify,
    "express": cmd_express,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
}


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".equivar-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(argv=None) -> tuple[dict, int]:
    """Execute one command; returns the result record and the exit code."""
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand; choose from " + ", ".join(COMMANDS))
        payload = COMMANDS[args.command](args)
    except UsageError as exc:
        return {"status": "error", "payload": None, "diagnostics": ["UsageError", str(exc)]}, 2
    except DOMAIN_ERRORS as exc:
        diagnostics = [type(exc).__name__, str(exc)]
        if hasattr(exc, "diagnostics"):
            diagnostics.append(json.dumps(exc.diagnostics()))
        return {"status": "error", "payload": getattr(exc, "payload", None), "diagnostics": diagnostics}, 1
    out = getattr(args, "out", None)
    if out:
        _write_atomic(out, json.dumps(payload, indent=1) + "\n")
        return {"status": "ok", "payload": {"written": out}, "diagnostics": []}, 0
    return {"status": "ok", "payload": payload, "diagnostics": []}, 0


def main(argv=None) -> int:
    result, code = run(argv)
    sys.stdout.write(json.dumps(result) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
