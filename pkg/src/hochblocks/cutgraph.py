"""Combinatorial marked surfaces: genus-zero pieces glued along cuts."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import networkx as nx

LegRef = tuple[str, int]


class CutGraphError(ValueError):
    """Structurally invalid cut graph."""


class ColoringError(CutGraphError):
    """A component would have neither a colored cut nor a boundary leg."""


@dataclass(frozen=True)
class Piece:
    id: str
    eps: tuple[int, ...]
    start: int = 0

    def __post_init__(self):
        object.__setattr__(self, "eps", tuple(int(e) for e in self.eps))
        if not self.eps:
            raise CutGraphError(f"piece {self.id} has no legs")
        if any(e not in (1, -1) for e in self.eps):
            raise CutGraphError(f"piece {self.id}: leg signs must be ±1")
        if not 0 <= self.start < len(self.eps):
            raise CutGraphError(f"piece {self.id}: start leg out of range")

    @property
    def n(self) -> int:
        return len(self.eps)

    def order(self) -> list[int]:
        """Leg indices in cyclic order from the distinguished leg."""
        return [(self.start + k) % self.n for k in range(self.n)]


@dataclass(frozen=True)
class Cut:
    id: str
    plus: LegRef
    minus: LegRef
    colored: bool = True


@dataclass(frozen=True)
class Boundary:
    leg: LegRef
    mult: int = 1


@dataclass(frozen=True)
class CutGraph:
    pieces: tuple[Piece, ...]
    cuts: tuple[Cut, ...] = ()
    boundary: tuple[Boundary, ...] = ()
    genus: int | None = None  # declared total genus, checked if given
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(sorted(self.pieces, key=lambda p: p.id)))
        object.__setattr__(self, "cuts", tuple(sorted(self.cuts, key=lambda c: c.id)))
        object.__setattr__(self, "boundary", tuple(sorted(self.boundary, key=lambda b: b.leg)))
        ids = [p.id for p in self.pieces]
        if len(set(ids)) != len(ids):
            raise CutGraphError("duplicate piece ids")
        cids = [c.id for c in self.cuts]
        if len(set(cids)) != len(cids):
            raise CutGraphError("duplicate cut ids")
        used: dict[LegRef, str] = {}
        for c in self.cuts:
            for leg, want in ((c.plus, 1), (c.minus, -1)):
                if self.eps_of(leg) != want:
                    raise CutGraphError(f"cut {c.id}: leg {leg} has the wrong orientation")
                if leg in used:
                    raise CutGraphError(f"leg {leg} used twice")
                used[leg] = c.id
        for b in self.boundary:
            self.eps_of(b.leg)
            if b.leg in used:
                raise CutGraphError(f"leg {b.leg} used twice")
            if b.mult < 1:
                raise CutGraphError(f"boundary leg {b.leg}: label multiplicity must be >= 1")
            used[b.leg] = "boundary"
        for p in self.pieces:
            for i in range(p.n):
                if (p.id, i) not in used:
                    raise CutGraphError(f"leg {(p.id, i)} is neither cut nor boundary")
        if self.genus is not None and self.genus != self.total_genus():
            raise CutGraphError(f"declared genus {self.genus} but incidences give {self.total_genus()}")

    # -- lookups ----------------------------------------------------------
    def piece(self, pid: str) -> Piece:
        for p in self.pieces:
            if p.id == pid:
                return p
        raise CutGraphError(f"no piece {pid!r}")

    def eps_of(self, leg: LegRef) -> int:
        p = self.piece(leg[0])
        if not 0 <= leg[1] < p.n:
            raise CutGraphError(f"leg {leg} out of range")
        return p.eps[leg[1]]

    def cut(self, cid: str) -> Cut:
        for c in self.cuts:
            if c.id == cid:
                return c
        raise CutGraphError(f"no cut {cid!r}")

    def cut_at(self, leg: LegRef) -> Cut | None:
        for c in self.cuts:
            if leg in (c.plus, c.minus):
                return c
        return None

    def boundary_at(self, leg: LegRef) -> Boundary | None:
        for b in self.boundary:
            if b.leg == leg:
                return b
        return None

    @property
    def colored(self) -> frozenset[str]:
        return frozenset(c.id for c in self.cuts if c.colored)

    # -- topology ---------------------------------------------------------
    def incidence_graph(self) -> nx.MultiGraph:
        g = nx.MultiGraph()
        for p in self.pieces:
            g.add_node(p.id)
        for c in self.cuts:
            g.add_edge(c.plus[0], c.minus[0], key=c.id)
        return g

    def components(self) -> list[frozenset[str]]:
        return sorted((frozenset(c) for c in nx.connected_components(self.incidence_graph())), key=sorted)

    def component_of(self, pid: str) -> frozenset[str]:
        return next(c for c in self.components() if pid in c)

    def genus_of(self, comp: Iterable[str]) -> int:
        comp = set(comp)
        e = sum(1 for c in self.cuts if c.plus[0] in comp)
        return e - len(comp) + 1

    def total_genus(self) -> int:
        return sum(self.genus_of(c) for c in self.components())

    def boundary_count(self, comp: Iterable[str] | None = None) -> int:
        if comp is None:
            return len(self.boundary)
        comp = set(comp)
        return sum(1 for b in self.boundary if b.leg[0] in comp)

    def coloring_violations(self, colored: Iterable[str] | None = None) -> list[frozenset[str]]:
        col = self.colored if colored is None else set(colored)
        bad = []
        for comp in self.components():
            nc = sum(1 for c in self.cuts if c.plus[0] in comp and c.id in col)
            if nc + self.boundary_count(comp) < 1:
                bad.append(comp)
        return bad

    def check_coloring(self) -> None:
        bad = self.coloring_violations()
        if bad:
            raise ColoringError(f"components {[sorted(c) for c in bad]} have no colored cut and no boundary")

    # -- rewriting --------------------------------------------------------
    def with_colors(self, colored: Iterable[str]) -> "CutGraph":
        col = set(colored)
        unknown = col - {c.id for c in self.cuts}
        if unknown:
            raise CutGraphError(f"unknown cuts {sorted(unknown)}")
        return replace(self, cuts=tuple(replace(c, colored=c.id in col) for c in self.cuts))

    def uncolor(self, subset: Iterable[str]) -> "CutGraph":
        subset = set(subset)
        if not subset <= self.colored:
            raise CutGraphError(f"cuts {sorted(subset - self.colored)} are not colored")
        out = self.with_colors(self.colored - subset)
        out.check_coloring()
        return out

    def with_start(self, pid: str, start: int) -> "CutGraph":
        pieces = tuple(replace(p, start=start % p.n) if p.id == pid else p for p in self.pieces)
        return replace(self, pieces=pieces)

    def with_boundary_mult(self, leg: LegRef, mult: int) -> "CutGraph":
        return replace(self, boundary=tuple(replace(b, mult=mult) if b.leg == leg else b for b in self.boundary))

    def sew(self, plus: LegRef, minus: LegRef, cut_id: str, colored: bool = True) -> "CutGraph":
        bp, bm = self.boundary_at(plus), self.boundary_at(minus)
        if bp is None or bm is None:
            raise CutGraphError("both legs must be boundary legs")
        if self.eps_of(plus) != 1 or self.eps_of(minus) != -1:
            raise CutGraphError("sewing needs one outgoing (+) and one incoming (−) leg")
        if bp.mult != bm.mult:
            raise CutGraphError("sewn legs carry different labels")
        if bp.mult != 1:
            raise CutGraphError("only legs labeled by A itself can be sewn into a cut")
        bnd = tuple(b for b in self.boundary if b.leg not in (plus, minus))
        return replace(self, cuts=self.cuts + (Cut(cut_id, plus, minus, colored),), boundary=bnd, genus=None)

    def unsew(self, cut_id: str) -> "CutGraph":
        c = self.cut(cut_id)
        cuts = tuple(x for x in self.cuts if x.id != cut_id)
        return replace(self, cuts=cuts, boundary=self.boundary + (Boundary(c.plus, 1), Boundary(c.minus, 1)),
                       genus=None)

    def relabel(self, piece_map: dict[str, str] | None = None, cut_map: dict[str, str] | None = None) -> "CutGraph":
        pm = piece_map or {}
        cm = cut_map or {}
        lm = lambda leg: (pm.get(leg[0], leg[0]), leg[1])  # noqa: E731
        pieces = tuple(replace(p, id=pm.get(p.id, p.id)) for p in self.pieces)
        cuts = tuple(Cut(cm.get(c.id, c.id), lm(c.plus), lm(c.minus), c.colored) for c in self.cuts)
        bnd = tuple(Boundary(lm(b.leg), b.mult) for b in self.boundary)
        return CutGraph(pieces, cuts, bnd, self.genus, self.name)

    # -- serialization ----------------------------------------------------
    def to_json(self) -> dict:
        ref = lambda leg: [leg[0], leg[1]]  # noqa: E731
        return {
            "name": self.name,
            "genus": self.genus,
            "pieces": [{"id": p.id, "legs": [{"eps": e, "start": i == p.start} for i, e in enumerate(p.eps)]}
                       for p in self.pieces],
            "cuts": [[ref(c.plus), ref(c.minus), {"colored": c.colored, "id": c.id}] for c in self.cuts],
            "boundary": [{"leg": ref(b.leg), "label_mult": b.mult} for b in self.boundary],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CutGraph":
        errors = []

        def leg_ref(x, path):
            try:
                if isinstance(x, str) and ":" in x:
                    a, b = x.rsplit(":", 1)
                    return (a, int(b))
                if isinstance(x, (list, tuple)) and len(x) == 2:
                    return (str(x[0]), int(x[1]))
            except ValueError:
                pass
            errors.append(f"{path}: leg reference must be [piece, index] or 'piece:index'")
            return ("?", 0)

        if not isinstance(obj, dict):
            raise CutGraphError("/: expected an object")
        if not isinstance(obj.get("pieces"), list) or not obj["pieces"]:
            raise CutGraphError("/pieces: expected a nonempty list")
        pieces = []
        for i, p in enumerate(obj["pieces"]):
            legs = p.get("legs") if isinstance(p, dict) else None
            if not isinstance(legs, list) or not legs:
                errors.append(f"/pieces/{i}/legs: expected a nonempty list")
                continue
            signs = []
            for k, leg in enumerate(legs):
                e = leg.get("eps") if isinstance(leg, dict) else None
                if e not in (1, -1):
                    errors.append(f"/pieces/{i}/legs/{k}/eps: expected 1 or -1, got {e!r}")
                signs.append(1 if e == 1 else -1)
            starts = [k for k, leg in enumerate(legs) if isinstance(leg, dict) and leg.get("start")]
            pieces.append(Piece(str(p.get("id", f"P{i}")), tuple(signs), starts[0] if starts else 0))
        n_legs = {p.id: p.n for p in pieces}

        def checked(ref, path):
            if ref[0] != "?" and not 0 <= ref[1] < n_legs.get(ref[0], 0):
                errors.append(f"{path}: no leg {ref[1]} on piece {ref[0]!r}")
            return ref

        cuts = []
        for i, c in enumerate(obj.get("cuts", [])):
            if not isinstance(c, list) or len(c) < 2:
                errors.append(f"/cuts/{i}: expected [legRef, legRef, {{...}}]")
                continue
            meta = c[2] if len(c) > 2 and isinstance(c[2], dict) else {}
            a = checked(leg_ref(c[0], f"/cuts/{i}/0"), f"/cuts/{i}/0")
            b = checked(leg_ref(c[1], f"/cuts/{i}/1"), f"/cuts/{i}/1")
            cuts.append((str(meta.get("id", f"c{i}")), a, b, bool(meta.get("colored", True))))
        bnd = []
        for i, b in enumerate(obj.get("boundary", [])):
            path = f"/boundary/{i}"
            if not isinstance(b, dict):
                errors.append(f"{path}: expected an object")
                continue
            mult = b.get("label_mult", 1)
            if not isinstance(mult, int) or mult < 1:
                errors.append(f"{path}/label_mult: expected a positive integer")
                mult = 1
            bnd.append(Boundary(checked(leg_ref(b.get("leg"), f"{path}/leg"), f"{path}/leg"), mult))
        if errors:
            raise CutGraphError("; ".join(errors))
        eps = {(p.id, k): e for p in pieces for k, e in enumerate(p.eps)}
        cut_objs = []
        for cid, a, b, col in cuts:
            if eps.get(a) == -1 and eps.get(b) == 1:
                a, b = b, a
            cut_objs.append(Cut(cid, a, b, col))
        return cls(tuple(pieces), tuple(cut_objs), tuple(bnd), obj.get("genus"), obj.get("name", ""))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# -- standard surfaces --------------------------------------------------------

def torus(colored: bool = True) -> CutGraph:
    return CutGraph((Piece("T", (-1, 1)),), (Cut("h", ("T", 1), ("T", 0), colored),), (), 1, "torus")


def cylinder(mult: int = 1) -> CutGraph:
    return CutGraph((Piece("C", (-1, 1)),), (), (Boundary(("C", 0), mult), Boundary(("C", 1), mult)), 0,
                    "cylinder")


def disk(eps: int = 1, mult: int = 1) -> CutGraph:
    return CutGraph((Piece("D", (eps,)),), (), (Boundary(("D", 0), mult),), 0, "disk")


def sphere(eps: Sequence[int], mults: Sequence[int] | None = None) -> CutGraph:
    mults = list(mults) if mults is not None else [1] * len(eps)
    return CutGraph((Piece("S", tuple(eps)),), (), tuple(Boundary(("S", i), m) for i, m in enumerate(mults)), 0,
                    f"sphere{len(eps)}")


def one_holed_torus(colored: bool = True, mult: int = 1, eps: int = 1) -> CutGraph:
    return CutGraph((Piece("T", (-1, 1, eps)),), (Cut("h", ("T", 1), ("T", 0), colored),),
                    (Boundary(("T", 2), mult),), 1, "one-holed torus")


def genus2_separated(handles_colored: bool = False, sep_colored: bool = True) -> CutGraph:
    """Two one-holed tori sewn along a separating cut."""
    pieces = (Piece("T1", (-1, 1, 1)), Piece("T2", (-1, -1, 1)))
    cuts = (Cut("h1", ("T1", 1), ("T1", 0), handles_colored),
            Cut("h2", ("T2", 2), ("T2", 1), handles_colored),
            Cut("s", ("T1", 2), ("T2", 0), sep_colored))
    return CutGraph(pieces, cuts, (), 2, "genus 2 (separating)")


def genus2_theta(colored: Iterable[str] = ("a", "b", "c")) -> CutGraph:
    """Two pants glued along all three legs."""
    col = set(colored)
    pieces = (Piece("P1", (1, 1, 1)), Piece("P2", (-1, -1, -1)))
    cuts = tuple(Cut(c, ("P1", i), ("P2", i), c in col) for i, c in enumerate("abc"))
    return CutGraph(pieces, cuts, (), 2, "genus 2 (theta)")


def genus2_two_cut(colored: Iterable[str] = ("a", "b")) -> CutGraph:
    """One four-legged sphere with two handle cuts."""
    col = set(colored)
    pieces = (Piece("Q", (-1, 1, -1, 1)),)
    cuts = (Cut("a", ("Q", 1), ("Q", 0), "a" in col), Cut("b", ("Q", 3), ("Q", 2), "b" in col))
    return CutGraph(pieces, cuts, (), 2, "genus 2 (two cuts)")


def closed_genus(g: int, handles_colored: bool = False) -> CutGraph:
    """Chain of one-holed tori joined by colored separating cuts (g >= 2); torus for g = 1."""
    if g == 1:
        return torus(True)
    if g < 1:
        raise CutGraphError("closed_genus needs g >= 1")
    pieces = [Piece("T01", (-1, 1, 1))]
    cuts = [Cut("h01", ("T01", 1), ("T01", 0), handles_colored)]
    for i in range(2, g):
        pid = f"T{i:02d}"
        pieces.append(Piece(pid, (-1, -1, 1, 1)))
        cuts.append(Cut(f"h{i:02d}", (pid, 2), (pid, 1), handles_colored))
    last = f"T{g:02d}"
    pieces.append(Piece(last, (-1, -1, 1)))
    cuts.append(Cut(f"h{g:02d}", (last, 2), (last, 1), handles_colored))
    for i in range(1, g):
        src = f"T{i:02d}"
        leg = 2 if i == 1 else 3
        cuts.append(Cut(f"s{i:02d}", (src, leg), (f"T{i + 1:02d}", 0), True))
    return CutGraph(tuple(pieces), tuple(cuts), (), g, f"closed genus {g}")


def pants_pair_genus2() -> tuple[CutGraph, LegRef, LegRef]:
    """Two pants joined along two colored cuts, with one free pair of legs to sew."""
    pieces = (Piece("P1", (1, 1, 1)), Piece("P2", (-1, -1, -1)))
    cuts = (Cut("a", ("P1", 0), ("P2", 0), True), Cut("b", ("P1", 1), ("P2", 1), True))
    bnd = (Boundary(("P1", 2), 1), Boundary(("P2", 2), 1))
    return CutGraph(pieces, cuts, bnd, 1, "two pants"), ("P1", 2), ("P2", 2)
