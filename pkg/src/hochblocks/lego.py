"""Colored cut systems: the moves F̄ and S̄, uncolorings, lifting and fibers.

Cut systems are cut graphs read without their markings: two systems are the
same when their incidence data are isomorphic.  Colors sit on the cuts.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import networkx as nx

from .cutgraph import Boundary, ColoringError, Cut, CutGraph, Piece
from .hopfcat import CheckReport

ColoredCutSystem = CutGraph


class AdmissibilityError(ValueError):
    """The move would touch a colored cut."""


class MoveNotApplicable(ValueError):
    pass


# -- structure -------------------------------------------------------------------

def cut_surface(g: CutGraph) -> dict:
    """Pieces of the surface cut along all cuts, with boundary and Euler counts."""
    pieces = [{"id": p.id, "legs": p.n, "euler": 2 - p.n} for p in g.pieces]
    total = sum(p.n for p in g.pieces)
    return {
        "pieces": pieces,
        "boundary": total,
        "original boundary": len(g.boundary),
        "cuts": len(g.cuts),
        "euler": sum(x["euler"] for x in pieces),
    }


def _fresh(prefix: str, taken: Iterable[str]) -> str:
    taken = set(taken)
    k = 0
    while f"{prefix}{k}" in taken:
        k += 1
    return f"{prefix}{k}"


def _rebuild(g: CutGraph, pieces: Sequence[Piece], remap: dict, drop_cuts: Iterable[str] = (),
             extra_cuts: Sequence[Cut] = ()) -> CutGraph:
    m = lambda leg: remap.get(leg, leg)  # noqa: E731
    drop = set(drop_cuts)
    cuts = tuple(Cut(c.id, m(c.plus), m(c.minus), c.colored) for c in g.cuts if c.id not in drop)
    bnd = tuple(Boundary(m(b.leg), b.mult) for b in g.boundary)
    return CutGraph(tuple(pieces), cuts + tuple(extra_cuts), bnd, None, g.name)


# -- moves -------------------------------------------------------------------------

def fbar_applicable(g: CutGraph, cut_id: str) -> bool:
    c = g.cut(cut_id)
    return c.plus[0] != c.minus[0]


def apply_fbar(g: CutGraph, cut_id: str, *, check_colors: bool = True) -> CutGraph:
    """Delete a cut joining two distinct pieces; the pieces merge."""
    c = g.cut(cut_id)
    if check_colors and c.colored:
        raise AdmissibilityError(f"cut {cut_id} is colored")
    if c.plus[0] == c.minus[0]:
        raise MoveNotApplicable(f"deleting {cut_id} would leave a piece of positive genus")
    (pa, ia), (pb, ib) = c.plus, c.minus
    p1, p2 = g.piece(pa), g.piece(pb)
    legs = [(pa, (ia + k) % p1.n) for k in range(1, p1.n)] + [(pb, (ib + k) % p2.n) for k in range(1, p2.n)]
    nid = min(pa, pb)
    remap = {leg: (nid, k) for k, leg in enumerate(legs)}
    merged = Piece(nid, tuple(g.eps_of(leg) for leg in legs))
    pieces = [p for p in g.pieces if p.id not in (pa, pb)] + [merged]
    out = _rebuild(g, pieces, remap, drop_cuts=[cut_id])
    if check_colors:
        out.check_coloring()
    return out


def split_piece(g: CutGraph, pid: str, legs: Iterable[int], cut_id: str | None = None,
                colored: bool = False) -> CutGraph:
    """Inverse of F̄: separate ``legs`` of a piece from the others by a new cut.

    Each side keeps at least two of the old legs, so the new cut bounds
    neither a disk nor an annulus.
    """
    p = g.piece(pid)
    side = sorted(set(legs))
    rest = [i for i in range(p.n) if i not in side]
    if len(side) < 2 or len(rest) < 2:
        raise MoveNotApplicable("each side of the new cut needs at least two legs")
    cid = cut_id or _fresh("n", [c.id for c in g.cuts])
    qid = _fresh(f"{pid}.", [q.id for q in g.pieces])
    a = Piece(pid, tuple(p.eps[i] for i in side) + (1,))
    b = Piece(qid, tuple(p.eps[i] for i in rest) + (-1,))
    remap = {(pid, i): (pid, k) for k, i in enumerate(side)}
    remap.update({(pid, i): (qid, k) for k, i in enumerate(rest)})
    pieces = [q for q in g.pieces if q.id != pid] + [a, b]
    new = Cut(cid, (pid, len(side)), (qid, len(rest)), colored)
    return _rebuild(g, pieces, remap, extra_cuts=[new])


def splits(g: CutGraph) -> list[tuple[str, tuple[int, ...]]]:
    """All F̄^{-1} moves, one per unordered partition of a piece's legs."""
    out = []
    for p in g.pieces:
        for r in range(2, p.n - 1):
            for side in itertools.combinations(range(p.n), r):
                if 0 in side:  # count each partition once
                    out.append((p.id, side))
    return out


def sbar_region(g: CutGraph, cut_id: str) -> str:
    """Piece of the one-holed torus region around a handle cut."""
    c = g.cut(cut_id)
    if c.plus[0] != c.minus[0]:
        raise MoveNotApplicable(f"cut {cut_id} is not a handle cut")
    p = g.piece(c.plus[0])
    if p.n != 3:
        raise MoveNotApplicable(f"piece {p.id} around {cut_id} is not a one-holed torus region")
    return p.id


def sbar_regions(g: CutGraph) -> list[str]:
    out = []
    for c in g.cuts:
        try:
            sbar_region(g, c.id)
        except MoveNotApplicable:
            continue
        out.append(c.id)
    return out


def transversal_id(cut_id: str) -> str:
    return cut_id[:-1] if cut_id.endswith("'") else cut_id + "'"


def apply_sbar(g: CutGraph, cut_id: str, *, check_colors: bool = True) -> CutGraph:
    """Replace the handle cut of a one-holed torus region by a transversal one.

    At the level of incidences the new cut is indistinguishable from the old
    one, so only its identifier changes.
    """
    sbar_region(g, cut_id)
    c = g.cut(cut_id)
    if check_colors and c.colored:
        raise AdmissibilityError(f"cut {cut_id} is colored")
    new = Cut(transversal_id(cut_id), c.plus, c.minus, c.colored)
    return replace(g, cuts=tuple(x for x in g.cuts if x.id != cut_id) + (new,))


def uncolor(g: CutGraph, subset: Iterable[str]) -> CutGraph:
    return g.uncolor(subset)


# -- moves as data -------------------------------------------------------------------

@dataclass(frozen=True)
class Move:
    kind: str  # "F", "S" or "Finv"
    cut: str | None = None
    piece: str | None = None
    legs: tuple[int, ...] = ()

    def affected(self) -> frozenset[str]:
        return frozenset([self.cut]) if self.kind in ("F", "S") else frozenset()

    def apply(self, g: CutGraph, *, check_colors: bool = True) -> CutGraph:
        if self.kind == "F":
            return apply_fbar(g, self.cut, check_colors=check_colors)
        if self.kind == "S":
            return apply_sbar(g, self.cut, check_colors=check_colors)
        if self.kind == "Finv":
            out = split_piece(g, self.piece, self.legs)
            if check_colors:
                out.check_coloring()
            return out
        raise ValueError(f"unknown move {self.kind}")

    def to_json(self) -> dict:
        return {"kind": self.kind, "cut": self.cut, "piece": self.piece, "legs": list(self.legs)}


def moves_of(g: CutGraph) -> list[Move]:
    """All F̄, S̄ and F̄^{-1} moves of the underlying cut system."""
    out = [Move("F", c.id) for c in g.cuts if fbar_applicable(g, c.id)]
    out += [Move("S", cid) for cid in sbar_regions(g)]
    out += [Move("Finv", piece=pid, legs=side) for pid, side in splits(g)]
    return out


# -- isomorphism ------------------------------------------------------------------------

def incidence_digraph(g: CutGraph, *, colors: bool = True) -> nx.Graph:
    """Labelled graph whose isomorphism class is the cut system (markings forgotten)."""
    x = nx.Graph()
    for p in g.pieces:
        x.add_node(("p", p.id), kind="piece")
        for i, e in enumerate(p.eps):
            x.add_node(("l", p.id, i), kind=f"leg{e}")
            x.add_edge(("p", p.id), ("l", p.id, i))
    for c in g.cuts:
        x.add_node(("c", c.id), kind="colored" if (colors and c.colored) else "cut")
        x.add_edge(("c", c.id), ("l",) + tuple(c.plus))
        x.add_edge(("c", c.id), ("l",) + tuple(c.minus))
    for b in g.boundary:
        x.add_node(("b",) + tuple(b.leg), kind=f"boundary{b.mult}")
        x.add_edge(("b",) + tuple(b.leg), ("l",) + tuple(b.leg))
    return x


def canonical_hash(g: CutGraph, *, colors: bool = True) -> str:
    return nx.weisfeiler_lehman_graph_hash(incidence_digraph(g, colors=colors), node_attr="kind")


def isomorphic(g1: CutGraph, g2: CutGraph, *, colors: bool = True) -> bool:
    a, b = incidence_digraph(g1, colors=colors), incidence_digraph(g2, colors=colors)
    return nx.is_isomorphic(a, b, node_match=lambda u, v: u["kind"] == v["kind"])


class IsoSet:
    """Cut systems up to isomorphism."""

    def __init__(self, colors: bool = True):
        self.colors = colors
        self.buckets: dict[str, list[CutGraph]] = {}

    def find(self, g: CutGraph) -> CutGraph | None:
        for h in self.buckets.get(canonical_hash(g, colors=self.colors), []):
            if isomorphic(g, h, colors=self.colors):
                return h
        return None

    def add(self, g: CutGraph) -> bool:
        if self.find(g) is not None:
            return False
        self.buckets.setdefault(canonical_hash(g, colors=self.colors), []).append(g)
        return True

    def __iter__(self):
        for v in self.buckets.values():
            yield from v

    def __len__(self) -> int:
        return sum(len(v) for v in self.buckets.values())


# -- lifting -------------------------------------------------------------------------

@dataclass
class Step:
    kind: str  # "uncolor", "uncolor^-1" or "move"
    source: CutGraph
    target: CutGraph
    cuts: tuple[str, ...] = ()
    move: Move | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "cuts": list(self.cuts),
               "source colors": sorted(self.source.colored), "target colors": sorted(self.target.colored)}
        if self.move is not None:
            out["move"] = self.move.to_json()
        return out


@dataclass
class Lift:
    start: CutGraph
    move: Move
    zigzag: list[Step] = field(default_factory=list)
    final: Step | None = None

    @property
    def steps(self) -> list[Step]:
        return self.zigzag + ([self.final] if self.final else [])

    def to_json(self) -> dict:
        return {"move": self.move.to_json(), "steps": [s.to_json() for s in self.steps]}


def _legal(g: CutGraph, colors: Iterable[str]) -> bool:
    return not g.coloring_violations(colors)


def _zigzag(u: CutGraph, target: frozenset[str]) -> list[Step]:
    """U ← W → V with W = U ∪ V: recolor then uncolor."""
    steps = []
    cur = u
    add = target - u.colored
    if add:
        w = u.with_colors(u.colored | add)
        steps.append(Step("uncolor^-1", u, w, tuple(sorted(add))))  # W → U read backwards
        cur = w
    drop = cur.colored - target
    if drop:
        v = cur.uncolor(drop)
        steps.append(Step("uncolor", cur, v, tuple(sorted(drop))))
        cur = v
    return steps


def lift_move(u: CutGraph, mu: Move, *, depth_cap: int | None = None) -> Lift:
    """Zigzag of uncolorings from U to a coloring V on which μ is admissible, then μ̂."""
    u.check_coloring()
    mu.apply(u, check_colors=False)  # the underlying move must exist
    lift = Lift(u, mu)
    bad = mu.affected() & u.colored
    if bad:
        target = _recoloring(u, mu, depth_cap if depth_cap is not None else 2 * len(u.cuts))
        lift.zigzag = _zigzag(u, target)
    v = lift.zigzag[-1].target if lift.zigzag else u
    w = mu.apply(v)
    lift.final = Step("move", v, w, tuple(sorted(mu.affected())), mu)
    return lift


def _recoloring(u: CutGraph, mu: Move, cap: int) -> frozenset[str]:
    """A legal coloring avoiding the affected cuts, close to the current one.

    Greedy: drop the affected cuts and, on any component left bare, color the
    unaffected cut nearest to the dropped one.  Breadth-first search over
    single-cut recolorings is the fallback.
    """
    aff = mu.affected()
    base = set(u.colored - aff)
    if _legal(u, base):
        return frozenset(base)
    inc = u.incidence_graph()
    for comp in u.coloring_violations(base):
        sources = {u.cut(c).plus[0] for c in aff if u.cut(c).plus[0] in comp}
        dist = nx.multi_source_dijkstra_path_length(inc, sources) if sources else {}
        cand = [c for c in u.cuts if c.plus[0] in comp and c.id not in aff]
        cand.sort(key=lambda c: (min(dist.get(c.plus[0], 1 << 30), dist.get(c.minus[0], 1 << 30)), c.id))
        if cand:
            base.add(cand[0].id)
    if _legal(u, base):
        return frozenset(base)
    # fallback: breadth-first over colorings
    start = frozenset(u.colored)
    seen = {start}
    q = deque([(start, 0)])
    allowed = [c.id for c in u.cuts if c.id not in aff]
    while q:
        col, d = q.popleft()
        if not (col & aff) and _legal(u, col):
            return col
        if d >= cap:
            continue
        for c in [c.id for c in u.cuts]:
            nxt = col ^ {c}
            if c not in allowed and c not in col:
                continue
            if nxt not in seen:
                seen.add(nxt)
                q.append((nxt, d + 1))
    raise RuntimeError(f"no admissible recoloring within {cap} steps for {mu} on {u.name}")


def project(lift: Lift) -> list[Move]:
    """Image under forgetting colors: uncolorings go to identities."""
    return [s.move for s in lift.steps if s.kind == "move"]


def verify_lift(lift: Lift) -> CheckReport:
    rep = CheckReport(f"lift of {lift.move.kind}")
    ok_chain = True
    cur = lift.start
    for s in lift.zigzag:
        if s.kind == "uncolor^-1":
            # a formal inverse: the target uncolors back to the source
            ok_chain &= s.source == cur and s.target.uncolor(s.cuts) == s.source
        else:
            ok_chain &= s.source == cur and s.source.uncolor(s.cuts) == s.target
        cur = s.target
    ok_chain &= lift.final is not None and lift.final.source == cur
    rep.record("zigzag composes", ok_chain)
    rep.record("final move admissible", not (lift.move.affected() & lift.final.source.colored))
    under = lift.move.apply(lift.start.with_colors(()), check_colors=False)
    rep.record("projects to the move", project(lift) == [lift.move]
               and lift.final.target.with_colors(()) == under)
    rep.record("depth within cap", len(lift.zigzag) <= 2 * max(1, len(lift.start.cuts)))
    return rep


# -- fibers ---------------------------------------------------------------------------------

def legal_colorings(g: CutGraph) -> list[frozenset[str]]:
    ids = [c.id for c in g.cuts]
    out = []
    for r in range(len(ids) + 1):
        for sub in itertools.combinations(ids, r):
            if _legal(g, sub):
                out.append(frozenset(sub))
    return out


def fiber_initial(g: CutGraph) -> tuple[CutGraph, CheckReport]:
    rep = CheckReport(f"fiber over {g.name or 'cut system'}")
    all_cuts = frozenset(c.id for c in g.cuts)
    if not _legal(g, all_cuts):
        raise ColoringError("coloring all cuts is illegal: some closed component has no cut")
    init = g.with_colors(all_cuts)
    cols = legal_colorings(g)
    rep.info["fiber size"] = len(cols)
    # a morphism init -> V is an uncoloring, determined by the set difference
    maps_out = True
    for c in cols:
        try:
            maps_out &= init.uncolor(all_cuts - c) == g.with_colors(c)
        except ColoringError:
            maps_out = False
    into = [c for c in cols if all_cuts <= c]
    rep.record("initial maps to every coloring", maps_out)
    rep.record("only the identity maps into it", into == [all_cuts])
    rep.record("uncolorings compose", _uncolorings_compose(g, cols))
    return init, rep


def _uncolorings_compose(g: CutGraph, cols: list[frozenset[str]]) -> bool:
    """uncolor(S' \\ S'') ∘ uncolor(S \\ S') = uncolor(S \\ S'') whenever all three are legal."""
    full = {c: g.with_colors(c) for c in cols}
    for s in cols:
        for s1 in cols:
            if not s1 <= s:
                continue
            for s2 in cols:
                if not s2 <= s1:
                    continue
                two = full[s].uncolor(s - s1).uncolor(s1 - s2) if s1 != s else full[s].uncolor(s - s2)
                if two != full[s].uncolor(s - s2):
                    return False
    return True


# -- neighborhoods and relations ------------------------------------------------------------

def neighborhood(seeds: Sequence[CutGraph], radius: int) -> list[CutGraph]:
    """Uncolored cut systems within ``radius`` F̄/S̄/F̄^{-1} rewrites of the seeds."""
    found = IsoSet(colors=False)
    frontier = []
    for s in seeds:
        s0 = s.with_colors(())
        s0 = replace(s0, genus=None)
        if found.add(s0):
            frontier.append(s0)
    for _ in range(radius):
        nxt = []
        for g in frontier:
            for mu in moves_of(g):
                h = mu.apply(g, check_colors=False)
                if found.add(h):
                    nxt.append(h)
        frontier = nxt
    return list(found)


def check_lifts(systems: Iterable[CutGraph]) -> CheckReport:
    rep = CheckReport("lifting")
    n = bad = 0
    for g in systems:
        for col in legal_colorings(g):
            u = g.with_colors(col)
            for mu in moves_of(g):
                n += 1
                try:
                    r = verify_lift(lift_move(u, mu))
                    ok = r.passed
                except Exception as exc:  # a failure here is a bug worth reporting, not hiding
                    ok = False
                    rep.witnesses.setdefault("error", repr(exc))
                if not ok:
                    bad += 1
                    rep.witnesses.setdefault("first failure", (g.name, sorted(col), mu.to_json()))
    rep.info["pairs"] = n
    rep.record("every lift succeeds", bad == 0, bad)
    return rep


def check_fibers(systems: Iterable[CutGraph]) -> CheckReport:
    rep = CheckReport("fiber initial objects")
    ok = True
    sizes = []
    for g in systems:
        try:
            _, r = fiber_initial(g)
        except ColoringError:
            # only possible for closed components without cuts (a closed sphere)
            continue
        ok &= r.passed
        sizes.append(r.info["fiber size"])
    rep.info["fiber sizes"] = sizes
    rep.record("initial object verified", ok)
    return rep


def check_relations(seeds: Sequence[CutGraph], radius: int) -> CheckReport:
    """Uncolorings compose, commute with admissible moves, and moves have inverses, near the seeds."""
    rep = CheckReport(f"relations within radius {radius}")
    systems = neighborhood(seeds, radius)
    composes = c_ok = rm = True
    for g in systems:
        cols = legal_colorings(g)
        composes &= _uncolorings_compose(g, cols)
        for col in cols:
            u = g.with_colors(col)
            for mu in moves_of(g):
                if mu.affected() & col:
                    continue
                try:
                    w = mu.apply(u)
                except ColoringError:
                    continue
                # uncoloring any subset commutes with an admissible move
                for r in range(1, len(col) + 1):
                    for sub in itertools.combinations(sorted(col), r):
                        try:
                            a = mu.apply(u.uncolor(sub))
                        except ColoringError:
                            continue
                        c_ok &= a == w.uncolor(sub)
                # S̄ is an involution up to isomorphism, F̄ undoes F̄^{-1}
                if mu.kind == "S":
                    rm &= isomorphic(apply_sbar(w, transversal_id(mu.cut)), u)
                if mu.kind == "Finv":
                    new = (set(c.id for c in w.cuts) - set(c.id for c in u.cuts)).pop()
                    rm &= isomorphic(apply_fbar(w, new), u)
    rep.info["systems"] = len(systems)
    rep.record("uncolorings compose", composes)
    rep.record("uncoloring commutes with moves", c_ok)
    rep.record("moves have inverses", rm)
    return rep


@dataclass
class Reach:
    found: bool
    forward: list[Move]  # moves from the first system to the meeting point
    backward: list[Move]  # moves from the second system to the meeting point
    explored: int

    @property
    def length(self) -> int:
        return len(self.forward) + len(self.backward)


def reachability(c1: CutGraph, c2: CutGraph, radius: int) -> Reach:
    """Bidirectional breadth-first search over F̄/S̄/F̄^{-1} rewrites of the uncolored systems."""
    roots = [replace(c1.with_colors(()), genus=None), replace(c2.with_colors(()), genus=None)]
    if isomorphic(roots[0], roots[1], colors=False):
        return Reach(True, [], [], 2)
    seen = [IsoSet(False), IsoSet(False)]
    visited: list[list[tuple[CutGraph, list[Move]]]] = [[(roots[0], [])], [(roots[1], [])]]
    frontier = [list(visited[0]), list(visited[1])]
    for k in (0, 1):
        seen[k].add(roots[k])
    explored = 2
    for depth in range(radius):
        k = depth % 2
        nxt = []
        for g, path in frontier[k]:
            for mu in moves_of(g):
                h = mu.apply(g, check_colors=False)
                if not seen[k].add(h):
                    continue
                explored += 1
                other = _match(h, visited[1 - k])
                if other is not None:
                    mine = path + [mu]
                    fwd, back = (mine, other) if k == 0 else (other, mine)
                    return Reach(True, fwd, back, explored)
                nxt.append((h, path + [mu]))
        visited[k] += nxt
        frontier[k] = nxt
    return Reach(False, [], [], explored)


def _match(h: CutGraph, side: list) -> list[Move] | None:
    for g, path in side:
        if isomorphic(g, h, colors=False):
            return path
    return None
