"""Command-line front end: build modules, represent elements, verify laws.

Subcommands:
  build      construct a truncated module and write it as JSON
  represent  apply a stored module to a stored element, write the matrix
  verify     run verification suites and write a report (json or csv)

Values resolve flag > VIRANN_-prefixed environment variable > config file
> built-in default.  Exit status: 0 success (for verify, every check
passed); 1 schema errors, unknown suites, or failed checks; 2 violated
preconditions (non-inward elements, nonunitary parameters, modes or
depths beyond what the cutoff resolves).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from importlib import resources

import jsonschema

from .annulus import AnnulusElement, identity_element, standard_element
from .errors import (ArgumentError, EvolutionError, GridError,
                     NonUnitaryError, NotInwardError, TruncationError)
from .evolve import DEFAULT_ODE_TOL
from .field import FieldPath, VectorField
from .rep import represent
from .verify import SUITES, run_config
from .virmod import (ModuleParams, build_module, check_unitarity,
                     module_from_dict, module_to_dict)


def load_schema(name: str) -> dict:
    ref = resources.files("virann.schemas").joinpath(name + ".schema.json")
    return json.loads(ref.read_text())


def _validate(doc: dict, schema_name: str) -> None:
    jsonschema.validate(doc, load_schema(schema_name))


def _env(name: str) -> str | None:
    return os.environ.get("VIRANN_" + name)


def _resolve(flag, env_name: str, cast, fallback):
    if flag is not None:
        return flag
    v = _env(env_name)
    if v is not None:
        return cast(v)
    return fallback


# ---------------------------------------------------------------------------
# build


def cmd_build(args) -> int:
    c = _resolve(args.c, "C", float, 2.0)
    h = _resolve(args.h, "H", float, 0.5)
    N = _resolve(args.N, "N", int, 12)
    tol = _resolve(args.tol, "TOL", float, None)
    out = _resolve(args.out, "OUT", str, "module.json")

    params = ModuleParams(c, h, N)
    ok, why = check_unitarity(params)
    if not ok:
        raise NonUnitaryError(why)
    module = (build_module(params) if tol is None
              else build_module(params, nulltol=tol))
    doc = module_to_dict(module)
    _validate(doc, "module")
    with open(out, "w") as f:
        json.dump(doc, f)
        f.write("\n")

    full = [len(b) for b in module.basis]
    nulls = [a - b for a, b in zip(full, module.dims)]
    print(f"module (c={c:g}, h={h:g}, N={N}) -> {out}")
    print(f"dims  {list(module.dims)}")
    if any(nulls):
        print(f"nulls {nulls}  (null directions quotiented per level)")
    print(f"unitarity: {why}")
    return 0


# ---------------------------------------------------------------------------
# represent


def _element_from_doc(doc: dict):
    """Decode an element file: (argument for represent, scalar or None)."""
    z = complex(*doc["z"]) if "z" in doc else 1.0 + 0j
    kind = doc["kind"]
    if kind == "identity":
        E = identity_element()
        return AnnulusElement(E.framing, z=z, path=E.path), None
    if kind == "standard":
        E = standard_element(complex(*doc["q"]))
        return AnnulusElement(E.framing, z=z, path=E.path), None
    knots = [float(t) for t in doc["knots"]]
    fields = [VectorField.from_dict(fd) for fd in doc["fields"]]
    return FieldPath(knots, fields), z


def cmd_represent(args) -> int:
    tol = _resolve(args.tol, "TOL", float, DEFAULT_ODE_TOL)
    out = _resolve(args.out, "OUT", str, "represented.json")

    with open(args.module) as f:
        mdoc = json.load(f)
    _validate(mdoc, "module")
    module = module_from_dict(mdoc)

    with open(args.element) as f:
        edoc = json.load(f)
    _validate(edoc, "element")
    E, z = _element_from_doc(edoc)

    R = (represent(E, module, tol=tol) if z is None
         else represent(E, module, tol=tol, z=z))
    bounds = R.hn_report()
    doc = {
        "dim": module.dim,
        "z": [float(R.z.real), float(R.z.imag)],
        "U": [[[float(x.real), float(x.imag)] for x in row] for row in R.U],
        "bounds": {str(n): {"norm": float(b["norm"]),
                            "bound": float(b["bound"]), "ok": bool(b["ok"])}
                   for n, b in bounds.items()},
    }
    with open(out, "w") as f:
        json.dump(doc, f)
        f.write("\n")

    cm, hm = module.params.as_floats()
    print(f"represented element on (c={cm:g}, h={hm:g}, N={module.N}) "
          f"-> {out}")
    for n, b in bounds.items():
        verdict = "ok" if b["ok"] else "VIOLATION"
        print(f"  graded norm n={n}: {b['norm']:.6e} <= {b['bound']:.6e}  "
              f"{verdict}")
    return 0


# ---------------------------------------------------------------------------
# verify


def _write_csv(path: str, rows: list[dict]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "anchor", "residual", "bound", "pass", "seconds"])
        for r in rows:
            w.writerow([r["id"], r["anchor"], repr(r["residual"]),
                        repr(r["bound"]), "true" if r["pass"] else "false",
                        f"{r['seconds']:.3f}"])


def cmd_verify(args) -> int:
    cfg = {}
    if args.config is not None:
        with open(args.config) as f:
            cfg = json.load(f)
        if not isinstance(cfg, dict):
            raise ArgumentError("config file must hold a JSON object")
    file_module = cfg.get("module", {})

    c = _resolve(args.c, "C", float, file_module.get("c", 2.0))
    h = _resolve(args.h, "H", float, file_module.get("h", 0.5))
    N = _resolve(args.N, "N", int, file_module.get("N", 12))
    tol = _resolve(args.tol, "TOL", float, cfg.get("tol", DEFAULT_ODE_TOL))
    seed = _resolve(args.seed, "SEED", int, cfg.get("seed", 1))
    fmt = _resolve(args.format, "FORMAT", str, cfg.get("format", "json"))
    outdir = _resolve(args.out, "OUT", str, cfg.get("out", "."))
    verbosity = int(_env("VERBOSITY") or cfg.get("verbosity", 1))

    if args.suite:
        suites = [s for spec in args.suite for s in spec.split(",")]
    elif _env("SUITE"):
        suites = _env("SUITE").split(",")
    else:
        suites = cfg.get("suites", ["all"])
    if suites == ["all"]:
        suites = list(SUITES)

    full = {"module": {"c": c, "h": h, "N": N}, "tol": tol, "seed": seed,
            "suites": suites, "format": fmt, "out": outdir,
            "verbosity": verbosity}
    _validate(full, "run_config")

    workers = int(_env("WORKERS") or 0) or None
    report = run_config(full, workers=workers)
    _validate(report, "report")

    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "report." + fmt)
    if fmt == "json":
        with open(path, "w") as f:
            json.dump(report, f, indent=2)
            f.write("\n")
    else:
        _write_csv(path, report["results"])

    if verbosity >= 1:
        for r in report["results"]:
            status = "pass" if r["pass"] else "FAIL"
            print(f"{status}  {r['id']:34s} residual {r['residual']:10.3e}  "
                  f"bound {r['bound']:8.1e}  {r['seconds']:.3f}s")
    counts = report["counts"]
    print(f"{counts['pass']} passed, {counts['fail']} failed -> {path}")
    return 0 if report["passed"] else 1


# ---------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="virann",
        description="truncated lowest-weight modules, represented annuli, "
                    "and quantitative verification suites")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="construct a truncated module file")
    b.add_argument("--c", type=float, help="central charge")
    b.add_argument("--h", type=float, help="lowest weight")
    b.add_argument("--N", type=int, help="truncation level")
    b.add_argument("--tol", type=float, help="null-direction tolerance")
    b.add_argument("--out", help="output file (default module.json)")
    b.set_defaults(func=cmd_build)

    r = sub.add_parser("represent",
                       help="apply a stored module to a stored element")
    r.add_argument("module", help="module JSON file")
    r.add_argument("element", help="element JSON file")
    r.add_argument("--tol", type=float, help="solver tolerance")
    r.add_argument("--out", help="output file (default represented.json)")
    r.set_defaults(func=cmd_represent)

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("config", nargs="?",
                   help="optional run-configuration JSON file")
    v.add_argument("--c", type=float, help="central charge")
    v.add_argument("--h", type=float, help="lowest weight")
    v.add_argument("--N", type=int, help="truncation level")
    v.add_argument("--tol", type=float, help="solver tolerance")
    v.add_argument("--seed", type=int, help="random seed")
    v.add_argument("--suite", action="append",
                   help="suite name; repeat or comma-separate, 'all' runs "
                        "every suite")
    v.add_argument("--format", choices=["json", "csv"],
                   help="report format (default json)")
    v.add_argument("--out", help="output directory (default .)")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except (NotInwardError, NonUnitaryError, TruncationError, GridError,
            EvolutionError) as e:
        print(f"precondition violated: {e}", file=sys.stderr)
        return 2
    except jsonschema.ValidationError as e:
        print(f"schema error: {e.message}", file=sys.stderr)
        return 1
    except (ArgumentError, json.JSONDecodeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
