"""Command line front end.

Every command reads JSON and writes a JSON report.  Exit codes: 0 success,
1 usage or parameter error, 2 precision exhausted, 3 invalid module,
4 input fails schema validation.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import tempfile
from pathlib import Path
from typing import Any, Sequence

import jsonschema

from . import __version__
from .display import (
    DEFAULT_DEG,
    Display,
    display_from_json,
    display_of_module,
    display_to_json,
    hasse_series,
    make_display,
    special_base,
    universal_deformation,
)
from .errors import DieudonneError, InvalidModuleError, PrecisionError
from .omod import (
    ODieudonneModule,
    Signature,
    dualize,
    hodge_newton_split,
    k_tau,
    module_from_ints,
    module_from_json,
    module_to_json,
    mu_ordinary,
    o_hodge_polygon,
    partial_hasse,
    product,
    random_module,
    random_signature,
)
from .polygons import compare, contact_points, newton_polygon, polygons_svg
from .witt import get_witt_ring

EXIT_OK, EXIT_USAGE, EXIT_PRECISION, EXIT_INVALID, EXIT_SCHEMA = 0, 1, 2, 3, 4

_ENTRY = {
    "oneOf": [
        {"type": "integer"},
        {
            "type": "array",
            "items": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        },
    ]
}
_MATRIX = {"type": "array", "items": {"type": "array", "items": _ENTRY}}

MODULE_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["p", "m", "f", "r", "h", "V"],
    "properties": {
        "p": {"type": "integer", "minimum": 2},
        "m": {"type": "integer", "minimum": 1},
        "f": {"type": "integer", "minimum": 1},
        "r": {"type": "integer", "minimum": 1},
        "h": {"type": "integer", "minimum": 1},
        "V": {"type": "array", "items": _MATRIX, "minItems": 1},
        "F": {"oneOf": [{"type": "null"}, {"type": "array", "items": _MATRIX}]},
    },
}

_COORD = {
    "oneOf": [
        {"type": "array", "items": {"type": "integer", "minimum": 0}},
        {
            "type": "object",
            "required": ["terms"],
            "properties": {
                "terms": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "prefixItems": [
                            {"type": "array", "items": {"type": "integer", "minimum": 0}},
                            {"type": "array", "items": {"type": "integer", "minimum": 0}},
                        ],
                        "minItems": 2,
                        "maxItems": 2,
                    },
                }
            },
        },
    ]
}
_SERIES_ENTRY = {"oneOf": [{"type": "integer"}, {"type": "array", "items": _COORD}]}

DISPLAY_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["p", "m", "f", "r_w", "blocks"],
    "properties": {
        "p": {"type": "integer", "minimum": 2},
        "m": {"type": "integer", "minimum": 1},
        "f": {"type": "integer", "minimum": 1},
        "r_w": {"type": "integer", "minimum": 1},
        "deg": {"type": "integer", "minimum": 0},
        "vars": {"type": "array", "items": {"type": "string"}},
        "blocks": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["p_tau", "q_tau", "HW"],
                "properties": {
                    "p_tau": {"type": "integer", "minimum": 0},
                    "q_tau": {"type": "integer", "minimum": 0},
                    "HW": {"type": "array", "items": {"type": "array", "items": _SERIES_ENTRY}},
                },
            },
        },
    },
}


class SchemaViolation(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _validate(data: Any, schema: dict[str, Any], what: str) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
        raise SchemaViolation(f"{what} schema violation at {path}: {err.message}")


def _read_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"{path}: not valid JSON ({exc})") from exc


def load_module(path: str, precision: int | None = None) -> ODieudonneModule:
    data = _read_json(path)
    _validate(data, MODULE_SCHEMA, "module")
    return module_from_json(data, precision)


def load_display(path: str) -> Display:
    data = _read_json(path)
    _validate(data, DISPLAY_SCHEMA, "display")
    return display_from_json(data)


def dump_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _module_params(M: ODieudonneModule) -> dict[str, Any]:
    return {"p": M.p, "m": M.m, "f": M.f, "h": M.h, "r": M.r, "f_reconstructed": M.f_reconstructed}


def _report(command: str, params: dict[str, Any], result: Any) -> dict[str, Any]:
    return {"version": __version__, "command": command, "params": params, "result": result}


def _taus(M_f: int, tau: int | None) -> list[int]:
    return list(range(M_f)) if tau is None else [tau % M_f]


# ---------------------------------------------------------------------------
# commands


def cmd_polygons(args: argparse.Namespace) -> dict[str, Any]:
    M = load_module(args.input, args.precision)
    newt = newton_polygon(M, args.tau or 0)
    hdg = o_hodge_polygon(M)
    if args.svg:
        write_atomic(args.svg, polygons_svg({"Newt_O": newt, "Hdg_O": hdg}))
    result = {
        "signature": M.signature().to_json(),
        "newton": newt.to_json(),
        "hodge": hdg.to_json(),
        "position": compare(newt, hdg),
        "contacts": list(contact_points(newt, hdg)),
    }
    return _report("polygons", _module_params(M), result)


def cmd_hasse(args: argparse.Namespace) -> dict[str, Any]:
    M = load_module(args.input, args.precision)
    reports = [partial_hasse(M, t).to_json() for t in _taus(M.f, args.tau)]
    return _report("hasse", _module_params(M), {"signature": M.signature().to_json(), "hasse": reports})


def cmd_mu_ord(args: argparse.Namespace) -> dict[str, Any]:
    M = load_module(args.input, args.precision)
    return _report("mu-ord", _module_params(M), mu_ordinary(M).to_json())


def cmd_hn_split(args: argparse.Namespace) -> dict[str, Any]:
    M = load_module(args.input, args.precision)
    s1, s2 = hodge_newton_split(M, args.x)
    result = {"x": args.x, "signature": M.signature().to_json(), "first": s1.to_json(), "second": s2.to_json()}
    return _report("hn-split", _module_params(M), result)


def cmd_dual(args: argparse.Namespace) -> dict[str, Any]:
    M = load_module(args.input, args.precision)
    if M.F is None:
        M = M.with_reconstructed_F()
    MD = dualize(M)
    sig, sigD = M.signature(), MD.signature()
    rows = []
    for t in _taus(M.f, args.tau):
        a, b = partial_hasse(M, t), partial_hasse(MD, t)
        rows.append(
            {
                "tau": t,
                "k": k_tau(sig, t),
                "k_dual": k_tau(sigD, t),
                "k_identity": k_tau(sig, t) - k_tau(sigD, t) == sig.d - M.f * sig.p_tau[t],
                "invertible": a.invertible,
                "invertible_dual": b.invertible,
                "zero_locus_agrees": a.invertible == b.invertible,
            }
        )
    result = {"signature": sig.to_json(), "dual_signature": sigD.to_json(), "checks": rows, "dual": module_to_json(MD)}
    return _report("dual", _module_params(M), result)


def cmd_deform(args: argparse.Namespace) -> dict[str, Any]:
    data = _read_json(args.input)
    deg = DEFAULT_DEG if args.deg is None else args.deg
    if isinstance(data, dict) and "blocks" in data:
        _validate(data, DISPLAY_SCHEMA, "display")
        D0 = display_from_json(data)
    else:
        _validate(data, MODULE_SCHEMA, "module")
        D0 = display_of_module(module_from_json(data, args.precision), deg)
    names = args.vars.split(",") if args.vars else None
    U = universal_deformation(D0, names, deg=deg, r_w=args.witt_length)
    series = [hasse_series(U, t).to_json(U.ring.vars) for t in _taus(U.f, args.tau)]
    params = {"p": U.p, "m": U.m, "f": U.f, "h": U.h, "r_w": U.r_w, "deg": U.ring.deg}
    return _report("deform", params, {"display": display_to_json(U), "hasse": series})


def cmd_random(args: argparse.Namespace) -> dict[str, Any]:
    rng = random.Random(args.seed)
    ring = get_witt_ring(args.p, args.m, args.precision or 4)
    sig = random_signature(args.f, args.h, rng)
    M = random_module(ring, args.f, sig, rng)
    return module_to_json(M)


# ---------------------------------------------------------------------------
# worked examples


def product_example_modules(p: int = 2, r: int = 6) -> dict[str, ODieudonneModule]:
    """The product counterexample; index 0 is tau', index 1 is tau."""
    I2 = [[1, 0], [0, 1]]
    G1 = module_from_ints(p, 2, 2, r, [[[1, 0], [0, p]], I2])
    G2 = module_from_ints(p, 2, 2, r, [[[1, 0, 0], [0, 1, 0], [0, 0, p]], [[p, 0, 0], [0, p, 0], [0, 0, p]]])
    G1, G2 = G1.with_reconstructed_F(), G2.with_reconstructed_F()
    return {"G1": G1, "G2": G2, "G1xG2": product(G1, G2)}


def deformation_example_displays(p: int = 2, r_w: int = 3, deg: int = DEFAULT_DEG) -> dict[str, Display]:
    """Height 4, f = 2, signature ((0,2),(1,1)) over k; piece 1 carries the deformation."""
    base = special_base(p, 2, r_w, deg)
    sw, I2 = [[0, 1], [1, 0]], [[1, 0], [0, 1]]
    D0 = make_display(base, 2, Signature((0, 1), (2, 1)), [I2, sw])
    return {"example": D0}


def strata_display(p: int, f: int, k: int, n: Sequence[int], r_w: int = 3, deg: int = DEFAULT_DEG) -> Display:
    """Rank two per tau: piece k has signature (1,1); piece j != k is p^{n_j} I_2 (n_j = 1 gives q = 0)."""
    base = special_base(p, f, r_w, deg)
    p_tau, q_tau, HW = [], [], []
    for j in range(f):
        pj = 1 if j == k else 2 * n[j]
        p_tau.append(pj)
        q_tau.append(2 - pj)
        HW.append([[0, 1], [1, 0]] if j == k else [[1, 0], [0, 1]])
    return make_display(base, f, Signature(tuple(p_tau), tuple(q_tau)), HW)


def cmd_examples(args: argparse.Namespace) -> dict[str, Any]:
    out = Path(args.output_dir)
    written = []
    if args.which == "product":
        for name, M in product_example_modules(r=args.precision or 6).items():
            path = out / f"{name}.json"
            data = module_to_json(M)
            data.pop("F", None)
            write_atomic(path, dump_json(data))
            written.append(str(path))
    else:
        deg = DEFAULT_DEG if args.deg is None else args.deg
        r_w = args.witt_length or 3
        items = dict(deformation_example_displays(r_w=r_w, deg=deg))
        items["strata"] = strata_display(2, 2, 0, [0, 0], r_w=r_w, deg=deg)
        for name, D in items.items():
            path = out / f"{name}.json"
            write_atomic(path, dump_json(display_to_json(D)))
            written.append(str(path))
    return _report("examples", {"which": args.which}, {"files": written})


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dieudonne", description="Hasse invariants of O-graded Dieudonne modules and displays.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p: argparse.ArgumentParser, needs_input: bool = True) -> None:
        if needs_input:
            p.add_argument("--input", "-i", required=True, help="module or display JSON")
        p.add_argument("--output", "-o", help="report path (default: stdout)")
        p.add_argument("--precision", "-r", type=int, help="reinterpret matrix entries in W_r")
        p.add_argument("--tau", type=int, help="restrict to one embedding index")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("polygons", help="Newton and Hodge polygons with contacts")
    common(p)
    p.add_argument("--svg", help="also write an SVG plot")
    p.set_defaults(func=cmd_polygons)

    p = sub.add_parser("hasse", help="partial Hasse invariants")
    common(p)
    p.set_defaults(func=cmd_hasse)

    p = sub.add_parser("mu-ord", help="mu-ordinarity with certificate")
    common(p)
    p.set_defaults(func=cmd_mu_ord)

    p = sub.add_parser("hn-split", help="Hodge-Newton split signatures")
    common(p)
    p.add_argument("--x", type=int, required=True, help="break abscissa")
    p.set_defaults(func=cmd_hn_split)

    p = sub.add_parser("dual", help="dual module, k identity and zero-locus check")
    common(p)
    p.set_defaults(func=cmd_dual)

    p = sub.add_parser("deform", help="universal deformation and Hasse series")
    common(p)
    p.add_argument("--witt-length", type=int)
    p.add_argument("--deg", type=int)
    p.add_argument("--vars", help="comma separated variable names")
    p.set_defaults(func=cmd_deform)

    p = sub.add_parser("random", help="random module of a random signature")
    common(p, needs_input=False)
    for name in ("p", "m", "f", "h"):
        p.add_argument(f"--{name}", type=int, required=True)
    p.set_defaults(func=cmd_random)

    p = sub.add_parser("examples", help="write the worked example fixtures")
    p.add_argument("which", choices=["product", "deformation"])
    p.add_argument("--output-dir", "-d", default=".")
    p.add_argument("--precision", "-r", type=int)
    p.add_argument("--witt-length", type=int)
    p.add_argument("--deg", type=int)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_examples)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.func(args)
    except SchemaViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except PrecisionError as exc:
        print(f"precision error: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except InvalidModuleError as exc:
        print(f"invalid module: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (DieudonneError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = dump_json(report)
    if getattr(args, "output", None):
        write_atomic(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
