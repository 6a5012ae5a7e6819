"""Command-line entry point: ``hochblocks <area> <action> [options]``.

Exit status 0 when every verification passed, 1 on a verification failure and
2 on usage or schema errors.  Every JSON output carries a run manifest.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from importlib import metadata
from pathlib import Path
from typing import Any

import numpy as np

from . import acceptance, blocks, cutgraph, dworacle, lego
from .cutgraph import CutGraph, CutGraphError
from .groups import FiniteGroup, GroupError, builtin_group
from .homcx import is_quasi_iso
from .hopfcat import AxiomError, HopfAlgebra, check_all, drinfeld_double, hopf_from_json

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


BUILTIN_SURFACES = {
    "torus": lambda: cutgraph.torus(True),
    "cylinder": cutgraph.cylinder,
    "one-holed-torus": lambda: cutgraph.one_holed_torus(True),
    "pants": lambda: cutgraph.sphere((1, 1, -1)),
    "genus2-separated": lambda: cutgraph.genus2_separated(True, True),
    "genus2-theta": cutgraph.genus2_theta,
    "genus2-two-cut": cutgraph.genus2_two_cut,
    "two-pants": lambda: cutgraph.pants_pair_genus2()[0],
    "two-holed-torus": blocks.two_holed_torus,
}


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.1.0"


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class Run:
    """Collects the manifest of one invocation."""

    def __init__(self, args: argparse.Namespace, argv: list[str]):
        self.manifest: dict[str, Any] = {
            "command": " ".join(argv),
            "inputs": {},
            "field": None,
            "truncation": getattr(args, "truncate", None),
            "seed": getattr(args, "seed", 0),
            "version": _version(),
        }

    def read_json(self, path: str) -> Any:
        p = Path(path)
        try:
            raw = p.read_bytes()
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc}") from None
        self.manifest["inputs"][path] = _digest(raw)
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None

    def note_input(self, name: str, value: str) -> None:
        self.manifest["inputs"][name] = _digest(value.encode())


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        seq = sorted(x) if isinstance(x, (set, frozenset)) else x
        return [_jsonable(v) for v in seq]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    return x


def emit(run: Run, result: dict, out: str | None) -> None:
    text = json.dumps(_jsonable({"manifest": run.manifest, "result": result}), indent=2, sort_keys=True,
                      ensure_ascii=False)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


# -- input helpers --------------------------------------------------------------

def _from_json(loader, obj, path: str):
    """Run a JSON loader; missing or malformed fields become usage errors with a pointer."""
    if not isinstance(obj, dict):
        raise UsageError(f"{path}: /: expected an object")
    try:
        return loader(obj)
    except KeyError as exc:
        raise UsageError(f"{path}: /{exc.args[0]}: required field missing") from None
    except (TypeError, ValueError, IndexError) as exc:
        if isinstance(exc, (CutGraphError, GroupError)):
            raise
        raise UsageError(f"{path}: malformed input: {exc}") from None


def load_group(run: Run, spec: str) -> FiniteGroup:
    if Path(spec).suffix == ".json" or Path(spec).exists():
        return _from_json(FiniteGroup.from_json, run.read_json(spec), spec)
    run.note_input(f"group:{spec}", spec)
    return builtin_group(spec)


def load_algebra(run: Run, args) -> HopfAlgebra:
    if getattr(args, "algebra", None):
        h = _from_json(hopf_from_json, run.read_json(args.algebra), args.algebra)
        if not isinstance(h, HopfAlgebra):
            raise UsageError(f"{args.algebra}: need a Hopf algebra, got a plain algebra")
    else:
        if args.group is None or args.char is None:
            raise UsageError("give --algebra FILE or both --group and --char")
        h = drinfeld_double(load_group(run, args.group), args.char)
    run.manifest["field"] = {"p": h.field.p, "k": h.field.k}
    return h


def load_surface(run: Run, spec: str) -> CutGraph:
    if spec in BUILTIN_SURFACES:
        run.note_input(f"surface:{spec}", spec)
        return BUILTIN_SURFACES[spec]()
    try:
        return _from_json(CutGraph.from_json, run.read_json(spec), spec)
    except CutGraphError as exc:
        raise UsageError(f"{spec}: {exc}") from None


def parse_leg(text: str) -> tuple[str, int]:
    if ":" not in text:
        raise UsageError(f"leg reference {text!r} must look like piece:index")
    a, b = text.rsplit(":", 1)
    try:
        return a, int(b)
    except ValueError:
        raise UsageError(f"leg reference {text!r}: index must be an integer") from None


def parse_move(text: str) -> lego.Move:
    kind, _, rest = text.partition(":")
    if kind in ("F", "S") and rest:
        return lego.Move(kind, rest)
    if kind == "Finv" and rest:
        piece, _, legs = rest.partition(":")
        return lego.Move("Finv", piece=piece, legs=tuple(int(x) for x in legs.split(",") if x))
    raise UsageError(f"move {text!r}: expected F:cut, S:cut or Finv:piece:i,j,...")


# -- commands -------------------------------------------------------------------

def cmd_hopf_check(run: Run, args) -> int:
    h = load_algebra(run, args)
    reports = check_all(h)
    emit(run, {"algebra": h.name, "dim": h.dim, "checks": {k: r.to_json() for k, r in reports.items()}}, args.out)
    return EXIT_OK if all(r.passed for r in reports.values()) else EXIT_FAIL


def cmd_hopf_double(run: Run, args) -> int:
    g = load_group(run, args.group)
    run.manifest["field"] = {"p": args.char, "k": 1}
    try:
        h = drinfeld_double(g, args.char)
    except AxiomError as exc:
        emit(run, {"error": str(exc)}, args.out)
        return EXIT_FAIL
    emit(run, {"algebra": h.to_json(), "checks": {k: r.passed for k, r in h.reports.items()}}, args.out)
    return EXIT_OK


def cmd_block_compute(run: Run, args) -> int:
    h = load_algebra(run, args)
    g = load_surface(run, args.surface)
    b = blocks.marked_block(g, h, args.truncate).betti()
    emit(run, {"betti": b.to_json(), "dims": b.provenance.get("dims")}, args.out)
    return EXIT_OK


def cmd_block_excise(run: Run, args) -> int:
    h = load_algebra(run, args)
    g = load_surface(run, args.surface)
    rep = blocks.excision_check(g, parse_leg(args.plus), parse_leg(args.minus), h, args.truncate,
                                cut_id=args.cut_id)
    emit(run, rep.to_json(), args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_block_uncolor(run: Run, args) -> int:
    h = load_algebra(run, args)
    g = load_surface(run, args.surface)
    cuts = [c for c in args.cuts.split(",") if c]
    f, src, tgt = blocks.uncoloring_map(g, cuts, h, args.truncate)
    q = is_quasi_iso(f, args.truncate)
    surj = blocks.is_degreewise_surjective(f)
    emit(run, {"quasi_iso": q.to_json(), "surjective": surj, "source": src.betti().to_json(),
               "target": tgt.betti().to_json()}, args.out)
    return EXIT_OK if q.passed and surj else EXIT_FAIL


def cmd_block_sl2z(run: Run, args) -> int:
    h = load_algebra(run, args)
    d = blocks.torus_sl2z(h)
    emit(run, {"report": d.report.to_json(), "S": d.S.dense().tolist(), "T": d.T.dense().tolist(),
               "basis": [list(r) for r in d.orbit_basis]}, args.out)
    return EXIT_OK if d.report.passed else EXIT_FAIL


def cmd_block_compare(run: Run, args) -> int:
    h = load_algebra(run, args)
    rep = blocks.compare_block_paths(h, args.genus, args.truncate)
    emit(run, rep.to_json(), args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_lego_lift(run: Run, args) -> int:
    g = load_surface(run, args.surface)
    if args.colored is not None:
        g = g.with_colors([c for c in args.colored.split(",") if c])
    lift = lego.lift_move(g, parse_move(args.move))
    rep = lego.verify_lift(lift)
    emit(run, {"lift": lift.to_json(), "checks": rep.to_json()}, args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def _seeds(run: Run, specs: list[str] | None) -> list[CutGraph]:
    if not specs:
        run.note_input("seeds", "default")
        return acceptance.lego_seeds()
    return [load_surface(run, s) for s in specs]


def cmd_lego_relations(run: Run, args) -> int:
    seeds = _seeds(run, args.seed_surface)
    rep = lego.check_relations(seeds, args.radius)
    systems = lego.neighborhood(seeds, args.radius)
    lifts = lego.check_lifts(systems)
    emit(run, {"relations": rep.to_json(), "lifts": lifts.to_json()}, args.out)
    return EXIT_OK if rep.passed and lifts.passed else EXIT_FAIL


def cmd_lego_reach(run: Run, args) -> int:
    a = load_surface(run, args.source)
    b = load_surface(run, args.target)
    r = lego.reachability(a, b, args.radius)
    emit(run, {"found": r.found, "length": r.length, "forward": [m.to_json() for m in r.forward],
               "backward": [m.to_json() for m in r.backward], "explored": r.explored}, args.out)
    return EXIT_OK if r.found else EXIT_FAIL


def cmd_lego_fiber(run: Run, args) -> int:
    g = load_surface(run, args.surface)
    init, rep = lego.fiber_initial(g)
    emit(run, {"initial": init.to_json(), "colorings": [sorted(c) for c in lego.legal_colorings(g)],
               "checks": rep.to_json()}, args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_dw_homology(run: Run, args) -> int:
    g = load_group(run, args.group)
    run.manifest["field"] = {"p": args.char, "k": 1}
    grpd = dworacle.bundle_groupoid(g, args.genus)
    b = dworacle.groupoid_homology(grpd, args.char, args.truncate)
    emit(run, {"betti": b.to_json(), "objects": len(grpd.objects), "orbits": len(grpd.orbits)}, args.out)
    return EXIT_OK


def cmd_dw_compare(run: Run, args) -> int:
    g = load_group(run, args.group)
    run.manifest["field"] = {"p": args.char, "k": 1}
    rep = dworacle.compare_dw(g, args.char, args.genus, args.truncate)
    emit(run, rep.to_json(), args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_suite(run: Run, args) -> int:
    outcomes = acceptance.run_all(args.budget)
    for o in outcomes:
        print(o.line(), file=sys.stderr)
    emit(run, {"criteria": [o.to_json() for o in outcomes]}, args.out)
    return EXIT_OK if all(o.passed for o in outcomes) else EXIT_FAIL


# -- parser ---------------------------------------------------------------------

def _algebra_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algebra", help="Hopf algebra JSON file")
    p.add_argument("--group", help="built-in group name or group JSON (with --char: its Drinfeld double)")
    p.add_argument("--char", type=int, help="characteristic of the prime field")


def _common(p: argparse.ArgumentParser, truncate: int | None = None) -> None:
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.add_argument("--seed", type=int, default=0, help="recorded in the manifest")
    if truncate is not None:
        p.add_argument("--truncate", type=int, default=truncate, help="homology is reported through this degree")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hochblocks", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=_version())
    areas = ap.add_subparsers(dest="area", required=True)

    hopf = areas.add_parser("hopf").add_subparsers(dest="action", required=True)
    p = hopf.add_parser("check", help="run the Hopf, quasitriangular, ribbon and factorizability checks")
    _algebra_opts(p)
    _common(p)
    p.set_defaults(fn=cmd_hopf_check)
    p = hopf.add_parser("double", help="build and verify a Drinfeld double")
    p.add_argument("--group", required=True)
    p.add_argument("--char", type=int, required=True)
    _common(p)
    p.set_defaults(fn=cmd_hopf_double)

    block = areas.add_parser("block").add_subparsers(dest="action", required=True)
    p = block.add_parser("compute", help="Betti table of a marked block")
    p.add_argument("--surface", required=True, help=f"cut-graph JSON or one of {', '.join(BUILTIN_SURFACES)}")
    _algebra_opts(p)
    _common(p, 3)
    p.set_defaults(fn=cmd_block_compute)
    p = block.add_parser("excise", help="sew a boundary pair and verify excision")
    p.add_argument("--surface", required=True)
    p.add_argument("--plus", required=True, help="outgoing boundary leg, piece:index")
    p.add_argument("--minus", required=True, help="incoming boundary leg, piece:index")
    p.add_argument("--cut-id", default="sewn")
    _algebra_opts(p)
    _common(p, 3)
    p.set_defaults(fn=cmd_block_excise)
    p = block.add_parser("uncolor", help="uncoloring map and its quasi-isomorphism check")
    p.add_argument("--surface", required=True)
    p.add_argument("--cuts", required=True, help="comma-separated colored cuts to uncolor")
    _algebra_opts(p)
    _common(p, 2)
    p.set_defaults(fn=cmd_block_uncolor)
    p = block.add_parser("sl2z", help="S and T on H0 of the closed torus")
    _algebra_opts(p)
    _common(p)
    p.set_defaults(fn=cmd_block_sl2z)
    p = block.add_parser("compare-paths", help="closed genus g through M_{g-1} and through a cut graph")
    p.add_argument("--genus", type=int, default=2)
    _algebra_opts(p)
    _common(p, 2)
    p.set_defaults(fn=cmd_block_compare)

    lg = areas.add_parser("lego").add_subparsers(dest="action", required=True)
    p = lg.add_parser("lift", help="lift a move through a zigzag of uncolorings")
    p.add_argument("--surface", required=True)
    p.add_argument("--move", required=True, help="F:cut, S:cut or Finv:piece:i,j")
    p.add_argument("--colored", help="comma-separated colored cuts (overrides the file)")
    _common(p)
    p.set_defaults(fn=cmd_lego_lift)
    p = lg.add_parser("relations", help="check uncoloring relations, move inverses and lifts near seed systems")
    p.add_argument("--seed-surface", action="append", help="repeatable; default: genus-2 and one-holed torus seeds")
    p.add_argument("--radius", type=int, default=3)
    _common(p)
    p.set_defaults(fn=cmd_lego_relations)
    p = lg.add_parser("reach", help="search for a path of moves between two cut systems")
    p.add_argument("--from", dest="source", required=True)
    p.add_argument("--to", dest="target", required=True)
    p.add_argument("--radius", type=int, default=4)
    _common(p)
    p.set_defaults(fn=cmd_lego_reach)
    p = lg.add_parser("fiber", help="all-colored initial object of the fiber")
    p.add_argument("--surface", required=True)
    _common(p)
    p.set_defaults(fn=cmd_lego_fiber)

    dw = areas.add_parser("dw").add_subparsers(dest="action", required=True)
    for name, fn, text in (("homology", cmd_dw_homology, "homology of the bundle groupoid"),
                           ("compare", cmd_dw_compare, "block versus bundle-groupoid Betti tables")):
        p = dw.add_parser(name, help=text)
        p.add_argument("--group", required=True)
        p.add_argument("--char", type=int, required=True)
        p.add_argument("--genus", type=int, default=1)
        _common(p, 3)
        p.set_defaults(fn=fn)

    suite = areas.add_parser("suite").add_subparsers(dest="action", required=True)
    p = suite.add_parser("acceptance", help="run the eleven acceptance criteria")
    p.add_argument("--budget", type=float, default=None, help="wall-clock budget in seconds")
    _common(p)
    p.set_defaults(fn=cmd_suite)
    return ap


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    run = Run(args, argv)
    try:
        return args.fn(run, args)
    except (UsageError, CutGraphError, GroupError, lego.MoveNotApplicable,
            lego.AdmissibilityError) as exc:
        print(f"hochblocks: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AxiomError as exc:
        print(f"hochblocks: verification failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
