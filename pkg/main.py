import argparse
import json
import sys
from typing import Dict, List, Optional

from config import config
from exceptions import RibaucourError, ValidationError, VerificationError
from geometry.catalog import list_families
from geometry.profiles import Rectangle
from logger import logger, set_verbosity
from orchestrator import RibaucourSystem
from services.exporter import export_csv, export_field_csv, export_obj, write_json
from services.sampler import default_grid
from utils import canonical_json, parse_patch, parse_range, parse_real, parse_resolution, parse_steps


class CliParser(argparse.ArgumentParser):
    """argparse usage errors become ValidationError (exit 1)."""

    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


# ----------- Parser -----------

def build_parser() -> CliParser:
    common = CliParser(add_help=False)
    common.add_argument("--b", help="integration parameter b (decimal literal)")
    common.add_argument("--c", help="transformation parameter c != 0 (decimal literal)")
    common.add_argument("--coeffs", help="a1=..,b1=..,a2=..,b2=.. | A1=..,B1=.. | A1=..,a2=..,b2=.. | singular[:+1|-1]")
    common.add_argument("--family", help="catalog family name (see the catalog command)")
    common.add_argument("--u1", help=f"u1 range LO:HI, default {config.DEFAULT_U1[0]:g}:{config.DEFAULT_U1[1]:g}; "
                                     "use --u1=-2:2 for negative bounds")
    common.add_argument("--u2", help="u2 range LO:HI, default 0:2pi")
    common.add_argument("--res", help=f"grid resolution N1xN2, default {config.DEFAULT_RES[0]}x{config.DEFAULT_RES[1]}")
    common.add_argument("--tol-domain", help=f"mask |f+g| below this, default {config.TOL_DOMAIN:g}")
    common.add_argument("--tol-sing", help=f"mask |M| below this, default {config.TOL_SING:g}")
    common.add_argument("--out", help="output file")
    common.add_argument("--json", action="store_true", help="machine-readable reports and errors")
    common.add_argument("--workers", type=int, default=1, help="threads for grid sampling")
    common.add_argument("--quiet", action="store_true")
    common.add_argument("--verbose", action="store_true")

    parser = CliParser(prog="ribaucour", description="Ribaucour transforms of the cylinder and their Calapso fields")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("family", parents=[common], help="validate parameters and print the run manifest")
    sub.add_parser("sample", parents=[common], help="sample the surface on a grid and write CSV")
    mesh = sub.add_parser("mesh", parents=[common], help="sample the surface and write an OBJ mesh")
    mesh.add_argument("--no-normals", action="store_true", help="omit vn records")
    calapso = sub.add_parser("calapso", parents=[common], help="Calapso field samples and residual convergence")
    calapso.add_argument("--kind", choices=["omega", "capital_omega"], default="omega")
    calapso.add_argument("--patch", help="residual patch U1A:U1B,U2A:U2B; auto-selected when omitted")
    calapso.add_argument("--steps", help="decreasing step sizes, e.g. 0.04,0.02,0.01")
    calapso.add_argument("--report", help="write the residual report as JSON")
    sub.add_parser("singular", parents=[common], help="list singular points in the window")
    sub.add_parser("classify", parents=[common], help="print the geometry classification")
    sub.add_parser("verify", parents=[common], help="run the full audit; exit 2 on failure")
    sub.add_parser("catalog", parents=[common], help="list the named families")
    return parser


# ----------- Helpers -----------

def _inputs(args: argparse.Namespace) -> Dict[str, object]:
    ignored = {"out", "json", "workers", "quiet", "verbose", "report"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in ignored}


def _emit(args: argparse.Namespace, document: Dict[str, object], summary: List[str]) -> None:
    if args.json:
        sys.stdout.write(canonical_json(document) + "\n")
    else:
        sys.stdout.write("\n".join(summary) + "\n")


def _require_out(args: argparse.Namespace) -> str:
    if not args.out:
        raise ValidationError(f"{args.command} needs --out PATH")
    return args.out


def _system(args: argparse.Namespace, strict: bool = True) -> RibaucourSystem:
    return RibaucourSystem.from_inputs(
        b=parse_real(args.b, "b") if args.b is not None else None,
        c=parse_real(args.c, "c") if args.c is not None else None,
        coeffs=args.coeffs,
        family=args.family,
        strict=strict,
        tol_domain=parse_real(args.tol_domain, "tol-domain") if args.tol_domain else None,
        tol_sing=parse_real(args.tol_sing, "tol-sing") if args.tol_sing else None,
    )


def _grid(args: argparse.Namespace, system: RibaucourSystem):
    return default_grid(
        u1=parse_range(args.u1, "u1") if args.u1 else None,
        u2=parse_range(args.u2, "u2") if args.u2 else None,
        res=parse_resolution(args.res) if args.res else None,
        tol_domain=system.tol_domain,
        tol_sing=system.tol_sing,
    )


def _window(grid) -> Rectangle:
    return Rectangle(grid.u1_min, grid.u1_max, grid.u2_min, grid.u2_max)


# ----------- Commands -----------

def cmd_catalog(args: argparse.Namespace) -> int:
    entries = list_families()
    _emit(args, {"families": [e.to_dict() for e in entries]},
          [f"{e.name:22s} {e.description}" for e in entries])
    return 0


def cmd_family(args: argparse.Namespace) -> int:
    system = _system(args)
    grid = _grid(args, system)
    manifest = system.manifest("family", _inputs(args), _window(grid)).to_dict()
    if args.out:
        write_json(manifest, args.out)
    derived = manifest["derived"]
    summary = [f"case {manifest['family']['case']}, b = {system.params.b:.17g}, c = {system.params.c:.17g}"]
    if derived["cmc"]:
        summary.append("cmc: H = -1/2")
    summary.append(f"placement {manifest['classification']['placement']}, "
                   f"planar ends {manifest['classification']['planar_ends']}")
    _emit(args, manifest, summary)
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    out = _require_out(args)
    system = _system(args)
    grid = _grid(args, system)
    table = system.sample(grid, args.workers)
    export_csv(table, out)
    manifest = system.manifest("sample", _inputs(args), _window(grid),
                               {"output": {"rows": len(table), "masked": table.masked_count}}).to_dict()
    _emit(args, manifest, [f"{len(table)} rows, {table.masked_count} masked -> {out}"])
    return 0


def cmd_mesh(args: argparse.Namespace) -> int:
    out = _require_out(args)
    system = _system(args)
    grid = _grid(args, system)
    table = system.sample(grid, args.workers)
    export_obj(table, out, normals=not args.no_normals)
    manifest = system.manifest("mesh", _inputs(args), _window(grid),
                               {"output": {"vertices": len(table) - table.masked_count}}).to_dict()
    _emit(args, manifest, [f"{len(table) - table.masked_count} vertices -> {out}"])
    return 0


def cmd_calapso(args: argparse.Namespace) -> int:
    system = _system(args)
    grid = _grid(args, system)
    patch = Rectangle(*parse_patch(args.patch)) if args.patch else None
    steps = parse_steps(args.steps) if args.steps else None
    samples, study = system.calapso(args.kind, grid, patch, steps)
    if args.out:
        export_field_csv(samples, args.out)
    report = {"epsilon": system.params.epsilon, "residual": study.to_dict()}
    if args.report:
        write_json(report, args.report)
    _emit(args, report, [f"{study.label}: residual order {study.order:.4f} on {study.patch.to_dict()}"])
    return 0


def cmd_singular(args: argparse.Namespace) -> int:
    system = _system(args)
    window = _window(_grid(args, system))
    points = system.singular(window)
    _emit(args, {"window": window.to_dict(), "singular_points": [list(p) for p in points]},
          [f"{u1:.17g} {u2:.17g}" for u1, u2 in points] or ["no singular points"])
    return 0


def cmd_classify(args: argparse.Namespace) -> int:
    system = _system(args)
    record = system.classify()
    _emit(args, record, [f"{k}: {v}" for k, v in sorted(record.items())])
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    # audit mode: constraint violations are reported by the identity suite
    system = _system(args, strict=False)
    window = _window(_grid(args, system))
    report = system.verify(window).to_dict()
    if args.out:
        write_json(report, args.out)
    summary = [f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}" + ("" if c["gating"] else " (info)")
               for c in report["checks"]]
    _emit(args, report, summary)
    if not report["passed"]:
        raise VerificationError(f"verification failed: {report['first_failure']}")
    return 0


COMMANDS = {
    "family": cmd_family,
    "sample": cmd_sample,
    "mesh": cmd_mesh,
    "calapso": cmd_calapso,
    "singular": cmd_singular,
    "classify": cmd_classify,
    "verify": cmd_verify,
    "catalog": cmd_catalog,
}


# ----------- Main -----------

def run_cli(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    as_json = "--json" in argv
    try:
        args = build_parser().parse_args(argv)
        set_verbosity(args.quiet, args.verbose)
        return COMMANDS[args.command](args)
    except SystemExit as e:
        return int(e.code or 0)
    except RibaucourError as e:
        if not as_json:
            logger.error(f"{type(e).__name__}: {e}")
            return e.exit_code
        # the JSON object is the whole error report under --json
        sys.stderr.write(json.dumps({"error": str(e), "exit_code": e.exit_code, "type": type(e).__name__},
                                    sort_keys=True) + "\n")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(run_cli())
