"""Command-line surface: sample, walk, interp, diagnose, serve.

Exit codes: 0 success, 2 validation error (bad documents or references),
3 runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .diagnostics import reports_to_json
from .errors import DocumentError
from .runspec import canonical_json, parse_runspec
from .storage import ArtifactStore, ModelRegistry, execute_run, load_runspec_file
from .suites import run_suite
from .walks import WalkAxis, WalkSpec, interpolate_styles, plan_walk
from .guidance import TemporalProfile
from .runspec import parse_mask_ref, parse_temporal

STORE_ENV = "GUIDEWALK_STORE"


def _store(args) -> ArtifactStore:
    root = getattr(args, "out", None) or os.environ.get(STORE_ENV)
    if not root:
        raise DocumentError(f"no artifact store: pass --out or set {STORE_ENV}", "out")
    return ArtifactStore(root)


def _registry(args) -> ModelRegistry:
    return ModelRegistry(getattr(args, "models", "") or "")


def _execute_cells(cells, store, registry, jobs: int) -> list[str]:
    if jobs <= 1:
        return [execute_run(spec, store, registry) for spec in cells]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda spec: execute_run(spec, store, registry), cells))


def _write_grid_manifest(store, subdir: str, doc: dict) -> str:
    grid_id = hashlib.sha256(canonical_json(doc).encode()).hexdigest()
    out_dir = os.path.join(store.root, subdir)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{grid_id}.json")
    if not os.path.exists(path):
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    return path


def cmd_sample(args) -> int:
    store = _store(args)
    spec = load_runspec_file(args.spec, store)
    run_id = execute_run(spec, store, _registry(args))
    print(run_id)
    return 0


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc}") from None


def _base_spec(doc, store, base_dir: str):
    if "base" not in doc:
        raise DocumentError("document needs a 'base' run spec", "base")

    def resolver(ref: str) -> str:
        full = ref if os.path.isabs(ref) else os.path.join(base_dir, ref)
        return store.store_mask_file(full)

    return parse_runspec(doc["base"], mask_resolver=resolver), resolver


def cmd_walk(args) -> int:
    store = _store(args)
    doc = _load_json(args.spec)
    base, _ = _base_spec(doc, store, os.path.dirname(os.path.abspath(args.spec)))
    axes_doc = doc.get("axes")
    if not isinstance(axes_doc, list) or not axes_doc:
        raise DocumentError("walk needs a non-empty axes list", "axes")
    axes = []
    for ai, adoc in enumerate(axes_doc):
        try:
            axes.append(
                WalkAxis(
                    int(adoc["term"]), str(adoc["parameter"]),
                    tuple(float(v) for v in adoc["values"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DocumentError(f"bad axis: {exc}", f"axes[{ai}]") from None
    try:
        walk = WalkSpec(base, tuple(axes), bool(doc.get("shared_seed", True)))
        cells = plan_walk(walk)
    except ValueError as exc:
        raise DocumentError(str(exc), "axes") from None
    run_ids = _execute_cells(cells, store, _registry(args), args.jobs)
    values = [axis.values for axis in axes]
    cell_docs = []
    for i, (spec, run_id) in enumerate(zip(cells, run_ids)):
        coords = (
            [values[0][i]]
            if len(axes) == 1
            else [values[0][i // len(values[1])], values[1][i % len(values[1])]]
        )
        cell_docs.append({"values": coords, "run_id": run_id})
    path = _write_grid_manifest(
        store, "walks",
        {"kind": "walk", "axes": [a.parameter for a in axes], "cells": cell_docs},
    )
    print(path)
    return 0


def cmd_interp(args) -> int:
    store = _store(args)
    doc = _load_json(args.spec)
    base, resolver = _base_spec(doc, store, os.path.dirname(os.path.abspath(args.spec)))
    idoc = doc.get("interpolate")
    if not isinstance(idoc, dict):
        raise DocumentError("document needs an 'interpolate' object", "interpolate")
    for key in ("condition_a", "condition_b", "m", "lambdas"):
        if key not in idoc:
            raise DocumentError(f"interpolate missing {key!r}", "interpolate")
    temporal = (
        parse_temporal(idoc["temporal"], "interpolate.temporal")
        if "temporal" in idoc
        else TemporalProfile.constant(0.0)
    )
    mask = parse_mask_ref(idoc.get("mask"), "interpolate.mask", resolver)
    try:
        cells = interpolate_styles(
            base, str(idoc["condition_a"]), str(idoc["condition_b"]),
            float(idoc["m"]), [float(v) for v in idoc["lambdas"]],
            temporal=temporal, mask=mask,
        )
    except ValueError as exc:
        raise DocumentError(str(exc), "interpolate") from None
    run_ids = _execute_cells(cells, store, _registry(args), args.jobs)
    cell_docs = [
        {"lambda": float(lam), "run_id": run_id}
        for lam, run_id in zip(idoc["lambdas"], run_ids)
    ]
    path = _write_grid_manifest(store, "interps", {"kind": "interp", "cells": cell_docs})
    print(path)
    return 0


def cmd_diagnose(args) -> int:
    store = ArtifactStore(args.dir)
    reports = run_suite(args.suite, store, _registry(args))
    out_dir = os.path.join(store.root, "diagnostics")
    os.makedirs(out_dir, exist_ok=True)
    payload = reports_to_json(reports)
    path = os.path.join(out_dir, f"{args.suite}.json")
    if not (os.path.exists(path) and open(path).read() == payload):
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    for report in reports:
        status = "PASS" if report.passed else "FAIL"
        print(f"{status} {report.name} value={report.value:.6g} tol={report.tolerance:g}")
    print(path)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    root = args.store or os.environ.get(STORE_ENV)
    if not root:
        raise DocumentError(f"no artifact store: pass --store or set {STORE_ENV}", "store")
    app = create_app(
        root, models_dir=args.models or "", max_workers=args.jobs, ui_dir=args.ui or ""
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="guidewalk",
        description="Guided diffusion sampling with scale functions and style walks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="execute one run spec")
    p.add_argument("spec", help="run spec JSON file")
    p.add_argument("--out", help=f"artifact store root (default ${STORE_ENV})")
    p.add_argument("--models", help="directory of model JSON files")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("walk", help="execute a parameter-sweep walk")
    p.add_argument("spec", help="walk spec JSON file")
    p.add_argument("--out", help=f"artifact store root (default ${STORE_ENV})")
    p.add_argument("--models")
    p.add_argument("--jobs", type=int, default=1, help="concurrent cell executions")
    p.set_defaults(func=cmd_walk)

    p = sub.add_parser("interp", help="execute a two-style interpolation")
    p.add_argument("spec", help="interpolation spec JSON file")
    p.add_argument("--out", help=f"artifact store root (default ${STORE_ENV})")
    p.add_argument("--models")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_interp)

    p = sub.add_parser("diagnose", help="run a metric suite over a store")
    p.add_argument("dir", help="artifact store root")
    p.add_argument("--suite", required=True)
    p.add_argument("--models")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--store", help=f"artifact store root (default ${STORE_ENV})")
    p.add_argument("--models")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--jobs", type=int, default=2, help="concurrent run workers")
    p.add_argument("--ui", help="directory of static UI files to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DocumentError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
