"""The acceptance matrix: eleven exact checks over finite fields."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import blocks, cutgraph, dworacle, lego
from .exactla import Mat
from .groups import builtin_group
from .homcx import homology_dims, is_quasi_iso, iterated_bar, regular_bimodule
from .hopfcat import drinfeld_double, mg_bimodule


@dataclass
class Outcome:
    number: int
    title: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d}. {self.title} ({self.seconds:.1f}s)"

    def to_json(self) -> dict:
        return {"criterion": self.number, "title": self.title, "passed": self.passed,
                "detail": _plain(self.detail)}


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


_DOUBLES: dict = {}


def double(group: str, p: int):
    key = (group, p)
    if key not in _DOUBLES:
        _DOUBLES[key] = drinfeld_double(builtin_group(group), p)
    return _DOUBLES[key]


def c1_hopf_gauntlet() -> tuple[bool, dict]:
    detail, ok = {}, True
    for g in ("Z2", "Z3", "Z2xZ2", "S3"):
        for p in (2, 3, 5):
            h = drinfeld_double(builtin_group(g), p)  # raises unless every checker passes
            res = {k: r.passed for k, r in h.reports.items()}
            detail[f"D({g})/F{p}"] = res
            ok &= all(res.values())
    return ok, detail


def c2_dw_torus_nonsemisimple() -> tuple[bool, dict]:
    h = double("Z2", 2)
    blk = blocks.marked_block(cutgraph.torus(True), h, 3).betti().degrees
    dw = dworacle.groupoid_homology(dworacle.bundle_groupoid(builtin_group("Z2"), 1), 2, 3).degrees
    return blk == dw == [4, 4, 4, 4], {"block": blk, "groupoid": dw}


def c3_semisimple_collapse() -> tuple[bool, dict]:
    detail, ok = {}, True
    for g, p in (("Z2", 3), ("S3", 5)):
        h = double(g, p)
        blk = blocks.marked_block(cutgraph.torus(True), h, 3).betti().degrees
        orbits = len(dworacle.bundle_groupoid(builtin_group(g), 1).orbits)
        detail[f"D({g})/F{p}"] = {"betti": blk, "orbits": orbits}
        ok &= blk == [orbits, 0, 0, 0]
    return ok, detail


def c4_excision() -> tuple[bool, dict]:
    h = double("Z2", 2)
    cyl = blocks.excision_check(cutgraph.cylinder(), ("C", 1), ("C", 0), h, 3)
    g, plus, minus = cutgraph.pants_pair_genus2()
    pants = blocks.excision_check(g, plus, minus, h, 3, cut_id="c")
    detail = {"cylinder -> torus": cyl.results, "pants -> genus 2": pants.results,
              "torus betti": cyl.info["betti"], "genus 2 betti": pants.info["betti"]}
    return cyl.passed and pants.passed, detail


def c5_augmentation() -> tuple[bool, dict]:
    h = double("Z2", 2)
    detail, ok = {}, True
    cases = {
        "one-holed torus, label A": cutgraph.one_holed_torus(True),
        "one-holed torus, label A^2": cutgraph.one_holed_torus(True, mult=2),
        "3-holed sphere, labels (A, A, A^2)": cutgraph.sphere((1, 1, -1), (1, 1, 2)),
    }
    for name, g in cases.items():
        r = blocks.h0_agreement(g, h, 3)
        detail[name] = {"betti": r.info["betti"], "h0": r.info["h0"]}
        ok &= r.passed and r.info["betti"] == [r.info["h0"], 0, 0, 0]
    return ok, detail


def uncoloring_cases() -> list[tuple[str, cutgraph.CutGraph, list[str]]]:
    return [
        ("one-holed torus, handle", cutgraph.one_holed_torus(True), ["h"]),
        ("genus 2 two cuts, a", cutgraph.genus2_two_cut(), ["a"]),
        ("genus 2 theta, a", cutgraph.genus2_theta(), ["a"]),
        ("genus 2 theta, a and b", cutgraph.genus2_theta(), ["a", "b"]),
        ("genus 2 separating, h1", cutgraph.genus2_separated(True, True), ["h1"]),
        ("genus 2 separating, h1 and h2", cutgraph.genus2_separated(True, True), ["h1", "h2"]),
        ("two pants with boundary, a and b", cutgraph.pants_pair_genus2()[0], ["a", "b"]),
    ]


def c6_uncoloring() -> tuple[bool, dict]:
    h = double("Z2", 2)
    detail, ok = {}, True
    for name, g, sub in uncoloring_cases():
        f, src, tgt = blocks.uncoloring_map(g, sub, h, 2)
        q = is_quasi_iso(f, 2)
        surj = blocks.is_degreewise_surjective(f)
        detail[name] = {"quasi-iso": q.passed, "surjective": surj, "betti": src.betti().degrees}
        ok &= q.passed and surj
    return ok and len(detail) >= 5, detail


def c7_two_paths() -> tuple[bool, dict]:
    h = double("Z2", 2)
    r = blocks.compare_block_paths(h, 2, 2)
    return r.passed, r.info


def _perm_matrix(reps, perm) -> np.ndarray:
    m = np.zeros((len(reps), len(reps)), dtype=np.int64)
    for i, r in enumerate(reps):
        m[reps.index(perm[r]), i] = 1
    return m


def c8_sl2z() -> tuple[bool, dict]:
    detail, ok = {}, True
    for g, p in (("Z2", 3), ("S3", 5)):
        h = double(g, p)
        d = blocks.torus_sl2z(h)
        mcg = dworacle.mcg_action_torus(builtin_group(g))
        reps = d.orbit_basis
        ps = _perm_matrix(reps, mcg.info["S"])
        pt = _perm_matrix(reps, mcg.info["T"])
        t_match = bool(np.array_equal(d.T.dense(), pt) or np.array_equal(d.T.dense(), pt.T))
        s_support = bool(np.array_equal(d.S.dense() != 0, ps != 0) or np.array_equal(d.S.dense() != 0, ps.T != 0))
        # the same relations through the cut-graph H0 of the closed torus
        sb, tb = blocks.torus_h0_via_block(h)
        s2 = sb @ sb
        lam2_b = blocks._scalar_multiple(s2 @ s2, Mat.identity(h.field, sb.rows))
        st = sb @ tb
        lam1_b = blocks._scalar_multiple(st @ st @ st, s2)
        detail[f"D({g})/F{p}"] = {"relations": d.report.results, "lambda1": d.report.info["lambda1"],
                                  "lambda2": d.report.info["lambda2"], "T matches DW": t_match,
                                  "S support matches DW": s_support,
                                  "block route scalars": (lam1_b, lam2_b)}
        ok &= d.report.passed and t_match and s_support and lam1_b is not None and lam2_b is not None
    return ok, detail


def lego_seeds() -> list[cutgraph.CutGraph]:
    return [cutgraph.closed_genus(2), cutgraph.genus2_theta(), cutgraph.genus2_two_cut(),
            cutgraph.one_holed_torus()]


def c9_lego() -> tuple[bool, dict]:
    systems = lego.neighborhood(lego_seeds(), 3)
    lifts = lego.check_lifts(systems)
    fibers = lego.check_fibers(systems)
    u = cutgraph.genus2_separated(False, False).with_colors({"h1"})
    recolor = lego.lift_move(u, lego.Move("S", "h1"))
    recolor_ok = lego.verify_lift(recolor).passed and len(recolor.zigzag) == 2
    detail = {"systems": len(systems), "pairs": lifts.info["pairs"], "lifts": lifts.results,
              "fibers": fibers.results, "fiber sizes": fibers.info["fiber sizes"],
              "recoloring example": [s.to_json() for s in recolor.steps]}
    return lifts.passed and fibers.passed and recolor_ok, detail


def c10_skeleton() -> tuple[bool, dict]:
    h = double("Z2", 2)
    detail, ok = {}, True
    for name, m in (("A", regular_bimodule(h)), ("M1", mg_bimodule(h, 1))):
        one = blocks.skeleton_betti(h, m, 2, sizes=(1,)).degrees
        two = blocks.skeleton_betti(h, m, 2, sizes=(1, 2)).degrees
        detail[name] = {"{A}": one, "{A, A+A}": two}
        ok &= one == two
    return ok, detail


def c11_unordered() -> tuple[bool, dict]:
    h = double("Z2", 2)
    g = cutgraph.genus2_theta(("a", "b"))
    base = blocks.marked_block(g, h, 2)
    ref = base.betti().degrees
    detail = {"reference": ref}
    swapped = blocks.marked_block(g, h, 2, variable_order=list(reversed(base.variables))).betti().degrees
    detail["variables transposed"] = swapped
    relabeled = g.relabel({"P1": "Z2", "P2": "Z1"}, {"a": "z", "b": "y", "c": "x"})
    detail["pieces and cuts relabeled"] = blocks.marked_block(relabeled, h, 2).betti().degrees
    m = blocks.marked_block(g, h, 2).coefficient
    detail["bar order reversed"] = homology_dims(iterated_bar(h, m, 2, order=[1, 0])).degrees
    detail["absolute bar"] = blocks.marked_block(g, h, 2, relative=False).betti().degrees
    ok = all(v == ref for k, v in detail.items() if k != "reference")
    return ok, detail


CRITERIA: list[tuple[int, str, Callable[[], tuple[bool, dict]]]] = [
    (1, "Hopf gauntlet", c1_hopf_gauntlet),
    (2, "DW torus, non-semisimple", c2_dw_torus_nonsemisimple),
    (3, "semisimple collapse", c3_semisimple_collapse),
    (4, "excision", c4_excision),
    (5, "augmentation fibration", c5_augmentation),
    (6, "uncoloring quasi-isomorphisms", c6_uncoloring),
    (7, "two-path genus-2 agreement", c7_two_paths),
    (8, "SL(2,Z) projective relations", c8_sl2z),
    (9, "lego lifting and fibers", c9_lego),
    (10, "skeleton invariance", c10_skeleton),
    (11, "unordered-coend invariance", c11_unordered),
]


def run(number: int) -> Outcome:
    num, title, fn = next(c for c in CRITERIA if c[0] == number)
    t0 = time.perf_counter()
    try:
        passed, detail = fn()
    except Exception as exc:  # reported as a red criterion, never swallowed silently
        passed, detail = False, {"error": repr(exc)}
    return Outcome(num, title, bool(passed), detail, time.perf_counter() - t0)


def run_all(budget: float | None = None) -> list[Outcome]:
    out = []
    start = time.perf_counter()
    for num, title, _ in CRITERIA:
        if budget is not None and time.perf_counter() - start > budget:
            out.append(Outcome(num, title, False, {"error": "wall-clock budget exhausted"}))
            continue
        out.append(run(num))
    return out
