"""Marked blocks of cut graphs over a ribbon Hopf algebra.

Every piece contributes the invariants hom(1, X_1^{ε_1} ⊗ … ⊗ X_n^{ε_n}) in
cyclic order from its distinguished leg; X is the regular module A at cut
legs and a free module A^{⊕k} at boundary legs.  Each cut becomes one
bimodule variable on the tensor product of these spaces: the right action on
the + slot is x ↦ x·b and the left action on the − slot is φ ↦ φ(– · b).
Uncolored cuts are glued by ordinary coends, colored ones by the bar
construction.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from functools import reduce
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .cutgraph import Boundary, Cut, CutGraph, CutGraphError, LegRef, Piece, closed_genus, torus
from .exactla import Mat, _dense_rref, inverse, kernel_basis, kron, rank, solve
from .homcx import (BarBasis, BettiTable, ChainComplex, ChainError, ChainMap, MultiBimodule, TruncationError,
                    coend_bimodule, homology_dims, induced_chain_map, is_signed_permutation, iterated_bar,
                    koszul_permutation_rule)
from .hopfcat import (Algebra, CheckReport, HopfAlgebra, Module, algebra_inverse, central_forms,
                      coadjoint_module, free_module, invariants, mg_bimodule, module_dual, module_tensor,
                      regular_module, s_transform, t_transform)


class MoveError(ValueError):
    """The requested move does not apply to the given cut graph."""


# -- slots and pieces ---------------------------------------------------------

@dataclass(frozen=True)
class Slot:
    """One tensor factor of a piece: a module plus an optional cut attachment."""

    kind: str  # "A", "A*", "free", "free*", "F"
    mult: int = 1
    cut: str | None = None
    role: str | None = None  # "plus" or "minus" for cut slots
    leg: LegRef | None = None


@dataclass
class PieceSpace:
    id: str
    slots: list[Slot]
    modules: list[Module]
    basis: Mat  # ambient x dim, columns span the invariants
    left_inv: Mat  # dim x ambient with left_inv @ basis = id

    @property
    def dim(self) -> int:
        return self.basis.cols

    @property
    def ambient(self) -> int:
        return self.basis.rows

    @property
    def slot_dims(self) -> list[int]:
        return [m.dim for m in self.modules]


def _slot_module(h: HopfAlgebra, s: Slot, cache: dict) -> Module:
    key = (s.kind, s.mult)
    if key not in cache:
        if s.kind == "A":
            cache[key] = regular_module(h)
        elif s.kind == "A*":
            cache[key] = module_dual(regular_module(h))
        elif s.kind == "free":
            cache[key] = free_module(h, s.mult)
        elif s.kind == "free*":
            cache[key] = module_dual(free_module(h, s.mult))
        elif s.kind == "F":
            cache[key] = coadjoint_module(h)
        else:
            raise ValueError(f"unknown slot kind {s.kind}")
    return cache[key]


def _left_inverse(b: Mat) -> Mat:
    f = b.field
    if b.cols == 0:
        return Mat.zeros(f, 0, b.rows)
    fast = _private_rows(b)
    if fast is not None:
        return fast
    _, piv = _dense_rref(f, b.dense().T)
    rows = b.dense()[piv, :]
    inv = inverse(Mat(f, rows)).dense()
    sel = Mat.from_entries(f, len(piv), b.rows, [(i, r, 1) for i, r in enumerate(piv)])
    return (Mat(f, inv) @ sel).auto()


def _private_rows(b: Mat) -> Mat | None:
    """Left inverse read off rows that meet a single column, if every column has one."""
    f = b.field
    s = sp.csr_matrix(b.sparse())
    s.data %= f.p
    s.eliminate_zeros()
    single = np.nonzero(np.diff(s.indptr) == 1)[0]
    col_of = s.indices[s.indptr[single]]
    val = s.data[s.indptr[single]]
    chosen = {}
    for r, c, v in zip(single, col_of, val):
        chosen.setdefault(int(c), (int(r), int(v)))
    if len(chosen) != b.cols:
        return None
    return Mat.from_entries(f, b.cols, b.rows,
                            [(c, r, pow(v, -1, f.p)) for c, (r, v) in sorted(chosen.items())])


def _invariant_basis(h: HopfAlgebra, modules: list[Module]) -> Mat:
    if not modules:
        return Mat.identity(h.field, 1)
    tot = reduce(module_tensor, modules)
    return invariants(tot)


class BlockCache:
    """Memoizes piece invariant spaces per algebra and slot signature."""

    def __init__(self, h: HopfAlgebra):
        self.h = h
        self.modules: dict = {}
        self.spaces: dict = {}

    def piece(self, pid: str, slots: list[Slot]) -> PieceSpace:
        key = tuple((s.kind, s.mult) for s in slots)
        mods = [_slot_module(self.h, s, self.modules) for s in slots]
        if key not in self.spaces:
            b = _invariant_basis(self.h, mods)
            self.spaces[key] = (b, _left_inverse(b))
        b, li = self.spaces[key]
        return PieceSpace(pid, slots, mods, b, li)


_CACHES: dict[int, BlockCache] = {}


def cache_for(h: HopfAlgebra) -> BlockCache:
    c = _CACHES.get(id(h))
    if c is None or c.h is not h:
        c = BlockCache(h)
        _CACHES[id(h)] = c
    return c


def piece_slots(g: CutGraph, pid: str) -> list[Slot]:
    p = g.piece(pid)
    out = []
    for i in p.order():
        leg = (pid, i)
        eps = p.eps[i]
        c = g.cut_at(leg)
        if c is not None:
            out.append(Slot("A" if eps == 1 else "A*", 1, c.id, "plus" if eps == 1 else "minus", leg))
        else:
            b = g.boundary_at(leg)
            kind = ("A" if eps == 1 else "A*") if b.mult == 1 else ("free" if eps == 1 else "free*")
            out.append(Slot(kind, b.mult, None, None, leg))
    return out


def genus_zero_block(h: HopfAlgebra, eps: Sequence[int], mults: Sequence[int], start: int = 0) -> Mat:
    """Basis of hom(1, X_1^{ε_1} ⊗ …) for free labels, in cyclic order from ``start``."""
    if not eps:
        raise CutGraphError("empty piece")
    n = len(eps)
    slots = []
    for k in range(n):
        i = (start + k) % n
        m = mults[i]
        kind = ("A" if eps[i] == 1 else "A*") if m == 1 else ("free" if eps[i] == 1 else "free*")
        slots.append(Slot(kind, m))
    return cache_for(h).piece("S", slots).basis


# -- assembled multi-bimodules ------------------------------------------------

@dataclass
class Assembly:
    """Tensor product of piece spaces with one bimodule variable per cut."""

    h: HopfAlgebra
    pieces: list[PieceSpace]
    cut_ids: list[str]
    module: MultiBimodule

    @property
    def dim(self) -> int:
        return self.module.dim

    def piece_index(self, pid: str) -> int:
        return [p.id for p in self.pieces].index(pid)

    def basis(self) -> Mat:
        return reduce(kron, [p.basis for p in self.pieces]) if self.pieces else Mat.identity(self.h.field, 1)

    def left_inv(self) -> Mat:
        return reduce(kron, [p.left_inv for p in self.pieces]) if self.pieces else Mat.identity(self.h.field, 1)


def _slot_right_op(h: HopfAlgebra, slot: Slot, b: int, mod: Module) -> Mat:
    if slot.kind == "A":
        return h.right_mult[b]
    if slot.kind == "A*":
        return h.right_mult[b].T
    raise MoveError(f"slot {slot.kind} carries no coend action")


def _embed_piece_op(ps: PieceSpace, slot_index: int, op: Mat) -> Mat:
    """Restrict an operator on one slot to the piece invariants."""
    f = op.field
    dims = ps.slot_dims
    left = int(np.prod(dims[:slot_index])) if slot_index else 1
    right = int(np.prod(dims[slot_index + 1:])) if slot_index + 1 < len(dims) else 1
    amb = kron(kron(Mat.identity(f, left), op), Mat.identity(f, right))
    return (ps.left_inv @ (amb @ ps.basis)).auto()


def _kron_at(mats_dims: list[int], k: int, op: Mat) -> Mat:
    f = op.field
    left = int(np.prod(mats_dims[:k])) if k else 1
    right = int(np.prod(mats_dims[k + 1:])) if k + 1 < len(mats_dims) else 1
    return kron(kron(Mat.identity(f, left), op), Mat.identity(f, right))


def assemble(h: HopfAlgebra, specs: list[tuple[str, list[Slot]]], cut_ids: Sequence[str] | None = None) -> Assembly:
    cache = cache_for(h)
    pieces = [cache.piece(pid, slots) for pid, slots in specs]
    vdims = [p.dim for p in pieces]
    total = int(np.prod(vdims)) if vdims else 1
    found: dict[str, dict[str, tuple[int, int]]] = {}
    for k, p in enumerate(pieces):
        for si, s in enumerate(p.slots):
            if s.cut is not None:
                found.setdefault(s.cut, {})[s.role] = (k, si)
    ids = sorted(found) if cut_ids is None else list(cut_ids)
    actions = []
    for cid in ids:
        roles = found[cid]
        if set(roles) != {"plus", "minus"}:
            raise CutGraphError(f"cut {cid} lacks one of its legs")
        acts = {}
        for role in ("minus", "plus"):
            k, si = roles[role]
            ps = pieces[k]
            mats = []
            for b in range(h.dim):
                op = _slot_right_op(h, ps.slots[si], b, ps.modules[si])
                mats.append(_kron_at(vdims, k, _embed_piece_op(ps, si, op)).auto())
            acts[role] = mats
        actions.append((acts["minus"], acts["plus"]))
    mb = MultiBimodule(h, total, actions, name="V")
    return Assembly(h, pieces, ids, mb)


def graph_specs(g: CutGraph) -> list[tuple[str, list[Slot]]]:
    return [(p.id, piece_slots(g, p.id)) for p in g.pieces]


def assemble_graph(h: HopfAlgebra, g: CutGraph) -> Assembly:
    return assemble(h, graph_specs(g), [c.id for c in g.cuts])


# -- marked blocks --------------------------------------------------------------

@dataclass
class BlockComplex:
    complex: ChainComplex
    graph: CutGraph
    algebra: str
    truncation: int
    coends: dict[str, str]  # cut id -> "homotopy" or "ordinary"
    basis: BarBasis
    assembly: Assembly
    quotient_pi: Mat  # coefficient space of the bar construction <- V_total
    quotient_sigma: Mat
    variables: list[str]  # colored cuts in bar-variable order
    coefficient: MultiBimodule

    def betti(self, upto: int | None = None) -> BettiTable:
        b = homology_dims(self.complex, upto)
        b.provenance.update({"surface": self.graph.name, "algebra": self.algebra, "truncation": b.truncation})
        return b


def _apply_coends(asm: Assembly, uncolored: Iterable[str]) -> tuple[MultiBimodule, Mat, Mat, list[str]]:
    h = asm.h
    f = h.field
    mb = asm.module
    ids = list(asm.cut_ids)
    pi = Mat.identity(f, mb.dim)
    sigma = Mat.identity(f, mb.dim)
    for cid in sorted(uncolored):
        j = ids.index(cid)
        mb, q = coend_bimodule(h, mb, j)
        pi = q.pi @ pi
        sigma = sigma @ q.sigma
        ids.pop(j)
    return mb, pi, sigma, ids


def marked_block(g: CutGraph, h: HopfAlgebra, N: int, *, relative: bool = True,
                 variable_order: Sequence[str] | None = None) -> BlockComplex:
    if N < 0:
        raise TruncationError("truncation must be >= 0")
    g.check_coloring()
    asm = assemble_graph(h, g)
    uncol = [c.id for c in g.cuts if not c.colored]
    mb, pi, sigma, ids = _apply_coends(asm, uncol)
    if variable_order is not None:
        if sorted(variable_order) != sorted(ids):
            raise CutGraphError("variable order must list the colored cuts")
        mb = mb.permuted([ids.index(c) for c in variable_order])
        ids = list(variable_order)
    c, basis = iterated_bar(h, mb, N, relative=relative, return_basis=True)
    c.provenance.update({"surface": g.name, "algebra": h.name})
    coends = {cut.id: ("homotopy" if cut.colored else "ordinary") for cut in g.cuts}
    return BlockComplex(c, g, h.name, N, coends, basis, asm, pi, sigma, ids, mb)


# -- sewing and excision -------------------------------------------------------

def sewing_map(g: CutGraph, plus: LegRef, minus: LegRef, h: HopfAlgebra, N: int, cut_id: str = "sewn",
               *, relative: bool = True) -> tuple[ChainMap, BlockComplex, BlockComplex]:
    """Structure map from the P-diagonal block of the unsewn surface into the sewn block."""
    sewn = g.sew(plus, minus, cut_id, colored=True)
    src = marked_block(g, h, N, relative=relative)
    tgt = marked_block(sewn, h, N, relative=relative)
    pos = tgt.variables.index(cut_id)
    fmat = tgt.quotient_pi @ src.quotient_sigma
    perm_src = [src.variables.index(v) for v in tgt.variables if v != cut_id]

    def rule(chains):
        moved = tuple(chains[i] for i in perm_src)
        return moved[:pos] + ((),) + moved[pos:], 1

    return induced_chain_map(src.complex, src.basis, tgt.complex, tgt.basis, fmat, rule), src, tgt


def excision_check(g: CutGraph, plus: LegRef, minus: LegRef, h: HopfAlgebra, N: int, cut_id: str = "sewn",
                   *, relative: bool = True) -> CheckReport:
    """Bar construction over the boundary pair of the unsewn block versus the sewn block."""
    rep = CheckReport(f"excision {g.name} along {plus}~{minus}")
    sewn = g.sew(plus, minus, cut_id, colored=True)
    tgt = marked_block(sewn, h, N, relative=relative)
    # unsewn block with the boundary pair opened as a new, last variable
    specs = graph_specs(g)
    specs = [(pid, [replace(s, cut=cut_id, role="plus") if s.leg == plus else
                    replace(s, cut=cut_id, role="minus") if s.leg == minus else s for s in slots])
             for pid, slots in specs]
    others = [c.id for c in g.cuts]
    asm = assemble(h, specs, others + [cut_id])
    mb, pi, sigma, ids = _apply_coends(asm, [c.id for c in g.cuts if not c.colored])
    src, sb = iterated_bar(h, mb, N, relative=relative, return_basis=True)
    rep.info["unsewn dims"] = src.dims
    rep.info["sewn dims"] = tgt.complex.dims
    rep.record("dimensions agree", src.dims == tgt.complex.dims)
    perm = [ids.index(v) for v in tgt.variables]
    fmat = tgt.quotient_pi @ sigma
    try:
        phi = induced_chain_map(src, sb, tgt.complex, tgt.basis, fmat, koszul_permutation_rule(perm))
    except ChainError as exc:
        rep.record("basis bijection", False, str(exc))
        return rep
    rep.record("chain map", phi.is_chain_map(), phi.commutation_failures())
    bij = all(is_signed_permutation(phi.components[n]) if fmat == Mat.identity(h.field, fmat.rows)
              else rank(phi.components[n]) == src.dims[n] == tgt.complex.dims[n]
              for n in range(src.top + 1))
    rep.record("degreewise isomorphism", bij)
    rep.info["betti"] = homology_dims(tgt.complex).degrees
    return rep


# -- uncoloring ----------------------------------------------------------------

def uncoloring_map(g: CutGraph, subset: Iterable[str], h: HopfAlgebra, N: int, *, relative: bool = True
                   ) -> tuple[ChainMap, BlockComplex, BlockComplex]:
    subset = set(subset)
    tgt_graph = g.uncolor(subset)  # raises on constraint violation
    src = marked_block(g, h, N, relative=relative)
    tgt = marked_block(tgt_graph, h, N, relative=relative)
    fmat = tgt.quotient_pi @ src.quotient_sigma
    keep = [src.variables.index(v) for v in tgt.variables]
    drop = [src.variables.index(v) for v in subset]

    def rule(chains):
        if any(chains[i] for i in drop):
            return None
        return tuple(chains[i] for i in keep), 1

    return induced_chain_map(src.complex, src.basis, tgt.complex, tgt.basis, fmat, rule), src, tgt


def is_degreewise_surjective(f: ChainMap) -> bool:
    return all(rank(f.components[n]) == f.target.dims[n] for n in range(f.top + 1))


# -- H0 blocks -------------------------------------------------------------------

@dataclass
class H0Block:
    graph: CutGraph | None
    assembly: Assembly
    pi: Mat  # H0 <- V_total
    sigma: Mat  # V_total <- H0

    @property
    def dim(self) -> int:
        return self.pi.rows

    def relations(self) -> Mat:
        """Basis (columns) of the kernel of π in V_total."""
        ker = kernel_basis(self.pi)
        f = self.pi.field
        if not ker:
            return Mat.zeros(f, self.pi.cols, 0)
        return Mat(f, np.stack(ker, axis=1)).auto()


def h0_from_specs(h: HopfAlgebra, specs, cut_ids=None, graph=None) -> H0Block:
    asm = assemble(h, specs, cut_ids)
    _, pi, sigma, _ = _apply_coends(asm, asm.cut_ids)
    return H0Block(graph, asm, pi, sigma)


def h0_block(g: CutGraph, h: HopfAlgebra) -> H0Block:
    return h0_from_specs(h, graph_specs(g), [c.id for c in g.cuts], g)


def h0_agreement(g: CutGraph, h: HopfAlgebra, N: int) -> CheckReport:
    rep = CheckReport(f"H0 agreement {g.name}")
    b = marked_block(g, h, N).betti()
    d0 = h0_block(g, h).dim
    every_bounded = all(g.boundary_count(c) >= 1 for c in g.components())
    rep.info["betti"] = b.degrees
    rep.info["h0"] = d0
    rep.info["trivial fibration expected"] = every_bounded
    rep.record("degree 0", b[0] == d0)
    if every_bounded:
        rep.record("higher degrees vanish", all(x == 0 for x in b.degrees[1:]))
    return rep


def transport(src: H0Block, tgt: H0Block, vmap: Mat, *, check: bool = True) -> Mat:
    """Matrix H0(src) -> H0(tgt) of a V_total-level map that respects the coend relations."""
    m = (tgt.pi @ vmap @ src.sigma).auto()
    if check:
        rel = src.relations()
        if rel.cols and not (tgt.pi @ vmap @ rel).is_zero():
            raise MoveError("map does not descend to the coends")
    return m


def _piece_vmap(asm_src: Assembly, asm_tgt: Assembly, src_ids: list[str], tgt_ids: list[str], local: Mat) -> Mat:
    """V_total map acting by ``local`` on the listed pieces and as identity elsewhere.

    ``local`` maps ⊗_{src_ids} V_P to ⊗_{tgt_ids} V_P; untouched pieces must agree.
    """
    f = local.field
    s_order = [p.id for p in asm_src.pieces]
    t_order = [p.id for p in asm_tgt.pieces]
    rest_s = [pid for pid in s_order if pid not in src_ids]
    rest_t = [pid for pid in t_order if pid not in tgt_ids]
    if rest_s != rest_t:
        raise MoveError("untouched pieces differ between source and target")
    sd = {p.id: p.dim for p in asm_src.pieces}
    td = {p.id: p.dim for p in asm_tgt.pieces}
    p_in = tensor_permutation(f, [sd[x] for x in s_order], [s_order.index(x) for x in src_ids + rest_s])
    rest_dim = int(np.prod([sd[x] for x in rest_s])) if rest_s else 1
    mid = kron(local, Mat.identity(f, rest_dim))
    staged = tgt_ids + rest_t
    p_out = tensor_permutation(f, [td[x] for x in staged], [staged.index(x) for x in t_order])
    return (p_out @ mid @ p_in).auto()


def tensor_permutation(f, dims: Sequence[int], order: Sequence[int]) -> Mat:
    """Permutation V_0 ⊗ … ⊗ V_{k-1} -> V_{order[0]} ⊗ V_{order[1]} ⊗ …"""
    n = int(np.prod(dims)) if dims else 1
    idx = np.arange(n).reshape(tuple(dims) if dims else (1,))
    perm_idx = np.transpose(idx, order) if dims else idx
    dst_of_src = np.empty(n, dtype=np.int64)
    dst_of_src[perm_idx.ravel()] = np.arange(n)
    return Mat(f, sp.csr_matrix((np.ones(n, dtype=np.int64), (dst_of_src, np.arange(n))), shape=(n, n)))


# -- moves --------------------------------------------------------------------

def pivotal_element(h: HopfAlgebra) -> np.ndarray:
    """g = u v^{-1}."""
    return h.multiply(h.drinfeld_element, algebra_inverse(h, h.ribbon))


def _slot_action(h: HopfAlgebra, mod: Module, x: np.ndarray) -> Mat:
    return mod.act(x)


def move_iso_Z(g: CutGraph, h: HopfAlgebra, pid: str) -> tuple[Mat, CutGraph, H0Block, H0Block]:
    """Rotate the distinguished leg of a piece one step."""
    p = g.piece(pid)
    tgt_g = g.with_start(pid, p.start + 1)
    src, tgt = h0_block(g, h), h0_block(tgt_g, h)
    ps = src.assembly.pieces[src.assembly.piece_index(pid)]
    pt = tgt.assembly.pieces[tgt.assembly.piece_index(pid)]
    dims = ps.slot_dims
    piv = pivotal_element(h)
    rot = tensor_permutation(h.field, dims, list(range(1, len(dims))) + [0])
    last = _kron_at([int(np.prod(dims[1:])) if len(dims) > 1 else 1, dims[0]], 1,
                    _slot_action(h, ps.modules[0], piv))
    amb = last @ rot
    local = (pt.left_inv @ amb @ ps.basis).auto()
    vmap = _piece_vmap(src.assembly, tgt.assembly, [pid], [pid], local)
    return transport(src, tgt, vmap), tgt_g, src, tgt


def _braiding(h: HopfAlgebra, mx: Module, my: Module) -> Mat:
    """c_{X,Y}(x ⊗ y) = Σ R2·y ⊗ R1·x as a matrix X⊗Y -> Y⊗X."""
    f = h.field
    acc = None
    for (i, j), c in h.r_tensor.items():
        t = kron(my.action[j], mx.action[i]).sparse() * c
        acc = t if acc is None else acc + t
    swap = tensor_permutation(f, [mx.dim, my.dim], [1, 0])
    return (Mat(f, acc) @ swap).auto()


def move_iso_B(g: CutGraph, h: HopfAlgebra, pid: str, pos: int) -> tuple[Mat, CutGraph, H0Block, H0Block]:
    """Braid the slots at cyclic positions pos and pos+1 (counted from the distinguished leg)."""
    p = g.piece(pid)
    if not 0 <= pos < p.n - 1:
        raise MoveError("braiding needs two adjacent slots after the distinguished leg")
    order = p.order()
    i, j = order[pos], order[pos + 1]
    tgt_g = swap_legs(g, pid, i, j)
    src, tgt = h0_block(g, h), h0_block(tgt_g, h)
    ps = src.assembly.pieces[src.assembly.piece_index(pid)]
    pt = tgt.assembly.pieces[tgt.assembly.piece_index(pid)]
    dims = ps.slot_dims
    c = _braiding(h, ps.modules[pos], ps.modules[pos + 1])
    left = int(np.prod(dims[:pos])) if pos else 1
    right = int(np.prod(dims[pos + 2:])) if pos + 2 < len(dims) else 1
    amb = kron(kron(Mat.identity(h.field, left), c), Mat.identity(h.field, right))
    local = (pt.left_inv @ amb @ ps.basis).auto()
    vmap = _piece_vmap(src.assembly, tgt.assembly, [pid], [pid], local)
    return transport(src, tgt, vmap), tgt_g, src, tgt


def swap_legs(g: CutGraph, pid: str, i: int, j: int) -> CutGraph:
    """Exchange legs i and j of a piece, carrying their cut/boundary attachments along."""
    p = g.piece(pid)
    eps = list(p.eps)
    eps[i], eps[j] = eps[j], eps[i]
    remap = {(pid, i): (pid, j), (pid, j): (pid, i)}
    m = lambda leg: remap.get(leg, leg)  # noqa: E731
    start = {i: j, j: i}.get(p.start, p.start)
    pieces = tuple(replace(q, eps=tuple(eps), start=start) if q.id == pid else q for q in g.pieces)
    cuts = tuple(Cut(c.id, m(c.plus), m(c.minus), c.colored) for c in g.cuts)
    bnd = tuple(Boundary(m(b.leg), b.mult) for b in g.boundary)
    return CutGraph(pieces, cuts, bnd, g.genus, g.name)


def monodromy_map(g: CutGraph, h: HopfAlgebra, pid: str, pos: int) -> Mat:
    """Action of R21·R on the slots at positions pos, pos+1, on H0."""
    blk = h0_block(g, h)
    ps = blk.assembly.pieces[blk.assembly.piece_index(pid)]
    dims = ps.slot_dims
    acc = None
    for (i, j), c in _tensor_items(h.monodromy):
        t = kron(ps.modules[pos].action[i], ps.modules[pos + 1].action[j]).sparse() * c
        acc = t if acc is None else acc + t
    mono = Mat(h.field, acc)
    left = int(np.prod(dims[:pos])) if pos else 1
    right = int(np.prod(dims[pos + 2:])) if pos + 2 < len(dims) else 1
    amb = kron(kron(Mat.identity(h.field, left), mono), Mat.identity(h.field, right))
    local = (ps.left_inv @ amb @ ps.basis).auto()
    vmap = _piece_vmap(blk.assembly, blk.assembly, [pid], [pid], local)
    return transport(blk, blk, vmap)


def twist_map(g: CutGraph, h: HopfAlgebra, pid: str, pos: int, power: int = 1) -> Mat:
    """Action of v^power (v the ribbon element) on the slot at position pos, on H0."""
    blk = h0_block(g, h)
    ps = blk.assembly.pieces[blk.assembly.piece_index(pid)]
    v = h.ribbon if power >= 0 else algebra_inverse(h, h.ribbon)
    op = Mat.identity(h.field, ps.modules[pos].dim)
    for _ in range(abs(power)):
        op = ps.modules[pos].act(v) @ op
    local = _embed_piece_op(ps, pos, op)
    vmap = _piece_vmap(blk.assembly, blk.assembly, [pid], [pid], local)
    return transport(blk, blk, vmap)


def _tensor_items(arr: np.ndarray):
    for i, j in zip(*np.nonzero(arr)):
        yield (int(i), int(j)), int(arr[i, j])


def _evaluation(h: HopfAlgebra, first: Slot, second: Slot) -> Mat:
    """Pairing of adjacent dual slots (A*⊗A via φ⊗x ↦ φ(x); A⊗A* via x⊗φ ↦ φ(g·x))."""
    f = h.field
    d = h.dim
    if first.kind == "A*" and second.kind == "A":
        ev = np.eye(d, dtype=np.int64).reshape(1, d * d)
        return Mat(f, ev)
    if first.kind == "A" and second.kind == "A*":
        gm = h.left_mult_by(pivotal_element(h)).dense()  # (g·x)_k
        # x ⊗ φ ↦ Σ_k φ_k (g x)_k ; index (x, φ) = x*d + φ
        ev = gm.T.reshape(1, d * d) % f.p
        return Mat(f, ev)
    raise MoveError("cut legs must carry A and A*")


def merge_pieces(g: CutGraph, cut_id: str, new_id: str | None = None) -> CutGraph:
    """Delete a cut between two distinct pieces whose cut legs sit last/first in cyclic order."""
    c = g.cut(cut_id)
    (pa, ia), (pb, ib) = c.plus, c.minus
    if pa == pb:
        raise MoveError("deleting a cut inside one piece would create genus")
    p1, p2 = g.piece(pa), g.piece(pb)
    o1, o2 = p1.order(), p2.order()
    if o1[-1] == ia and o2[0] == ib:
        first, second = (p1, o1), (p2, o2)
    elif o2[-1] == ib and o1[0] == ia:
        first, second = (p2, o2), (p1, o1)
    else:
        raise MoveError("cut legs must be last in one piece and first in the other; rotate first")
    nid = new_id or first[0].id
    legs = [(first[0].id, i) for i in first[1][:-1]] + [(second[0].id, i) for i in second[1][1:]]
    remap = {leg: (nid, k) for k, leg in enumerate(legs)}
    eps = tuple(g.eps_of(leg) for leg in legs)
    pieces = tuple(q for q in g.pieces if q.id not in (p1.id, p2.id)) + (Piece(nid, eps, 0),)
    m = lambda leg: remap.get(leg, leg)  # noqa: E731
    cuts = tuple(Cut(x.id, m(x.plus), m(x.minus), x.colored) for x in g.cuts if x.id != cut_id)
    bnd = tuple(Boundary(m(b.leg), b.mult) for b in g.boundary)
    return CutGraph(pieces, cuts, bnd, g.genus, g.name)


def move_iso_F(g: CutGraph, h: HopfAlgebra, cut_id: str) -> tuple[Mat, CutGraph, H0Block, H0Block]:
    """Cut deletion: contract the two slots of the cut (the cut leg must be last/first)."""
    tgt_g = merge_pieces(g, cut_id)
    c = g.cut(cut_id)
    src, tgt = h0_block(g, h), h0_block(tgt_g, h)
    a1 = src.assembly
    p_plus, p_minus = c.plus[0], c.minus[0]
    o = g.piece(p_plus).order()
    first_id, second_id = (p_plus, p_minus) if o[-1] == c.plus[1] else (p_minus, p_plus)
    ps1 = a1.pieces[a1.piece_index(first_id)]
    ps2 = a1.pieces[a1.piece_index(second_id)]
    nid = first_id
    pt = tgt.assembly.pieces[tgt.assembly.piece_index(nid)]
    ev = _evaluation(h, ps1.slots[-1], ps2.slots[0])
    d1 = int(np.prod(ps1.slot_dims[:-1])) if len(ps1.slots) > 1 else 1
    d2 = int(np.prod(ps2.slot_dims[1:])) if len(ps2.slots) > 1 else 1
    amb = kron(kron(Mat.identity(h.field, d1), ev), Mat.identity(h.field, d2))
    local = (pt.left_inv @ amb @ kron(ps1.basis, ps2.basis)).auto()
    vmap = _piece_vmap(a1, tgt.assembly, [first_id, second_id], [nid], local)
    return transport(src, tgt, vmap), tgt_g, src, tgt


def handle_region(g: CutGraph, cut_id: str) -> tuple[str, int, int]:
    """(piece, position of − leg, position of + leg) for a handle cut whose legs are the first two slots."""
    c = g.cut(cut_id)
    if c.plus[0] != c.minus[0]:
        raise MoveError(f"cut {cut_id} is not a handle cut")
    p = g.piece(c.plus[0])
    if p.n < 3:
        raise MoveError("S needs a one-holed torus region (a further leg)")
    o = p.order()
    if o[0] != c.minus[1] or o[1] != c.plus[1]:
        raise MoveError("rotate the piece so the handle legs are its first two slots (− then +)")
    return p.id, 0, 1


def _coadjoint_iota(h: HopfAlgebra) -> Mat:
    """ι: A* ⊗ A -> F, ι(φ ⊗ x)(y) = φ(y x); column index φ*d + x."""
    d = h.dim
    arr = np.transpose(h.mult, (0, 2, 1)).reshape(d, d * d)  # [y, (k=φ, x)] = mult[y, x, k]
    # mult[y, x, k] indexed as [y, k, x] after transpose (0,2,1): want column φ*d + x
    return Mat(h.field, arr).auto()


def move_iso_S(g: CutGraph, h: HopfAlgebra, cut_id: str, *, variant: str = "S") -> tuple[Mat, CutGraph]:
    """S on H0 for a one-holed torus region: Φ^{-1} (S_F ⊗ id) Φ with Φ induced by ι ⊗ id."""
    pid, _, _ = handle_region(g, cut_id)
    src = h0_block(g, h)
    specs = graph_specs(g)
    fspecs = []
    for q, slots in specs:
        if q == pid:
            slots = [Slot("F")] + slots[2:]
        fspecs.append((q, slots))
    others = [c.id for c in g.cuts if c.id != cut_id]
    fblk = h0_from_specs(h, fspecs, others)
    ps = src.assembly.pieces[src.assembly.piece_index(pid)]
    pf = fblk.assembly.pieces[fblk.assembly.piece_index(pid)]
    rest = int(np.prod(ps.slot_dims[2:])) if len(ps.slots) > 2 else 1
    iota = kron(_coadjoint_iota(h), Mat.identity(h.field, rest))
    phi_local = (pf.left_inv @ iota @ ps.basis).auto()
    phi_v = _piece_vmap(src.assembly, fblk.assembly, [pid], [pid], phi_local)
    phi = transport(src, fblk, phi_v)
    if phi.rows != phi.cols or rank(phi) != phi.rows:
        raise MoveError(f"Φ is not invertible on H0 (shape {phi.shape}, rank {rank(phi)})")
    sf = s_transform(h) if variant == "S" else t_transform(h)
    op_local = (pf.left_inv @ kron(sf, Mat.identity(h.field, rest)) @ pf.basis).auto()
    op_v = _piece_vmap(fblk.assembly, fblk.assembly, [pid], [pid], op_local)
    op = transport(fblk, fblk, op_v)
    s = (inverse(phi) @ op @ phi).auto()
    new_id = f"{cut_id}'"
    c = g.cut(cut_id)
    cuts = tuple(x for x in g.cuts if x.id != cut_id) + (Cut(new_id, c.plus, c.minus, c.colored),)
    return s, replace(g, cuts=cuts)


# -- torus SL(2, Z) ------------------------------------------------------------

@dataclass
class TorusModularData:
    S: Mat
    T: Mat
    orbit_basis: list[tuple[int, int]]  # representatives (a, b) of commuting pairs, if a group is attached
    report: CheckReport


def _scalar_multiple(m: Mat, ref: Mat) -> int | None:
    """λ with m = λ·ref, or None."""
    md, rd = m.dense(), ref.dense()
    nz = np.argwhere(rd != 0)
    if nz.size == 0:
        return 0 if not md.any() else None
    i, j = nz[0]
    p = m.field.p
    lam = int(md[i, j] * pow(int(rd[i, j]), -1, p) % p)
    return lam if np.array_equal(md, (lam * rd) % p) else None


def central_form_transforms(h: HopfAlgebra) -> tuple[Mat, Mat, Mat]:
    """(basis C of central forms, S|_C, T|_C)."""
    c = central_forms(h)
    s = solve(c, s_transform(h) @ c)
    t = solve(c, t_transform(h) @ c)
    return c, s, t


def torus_h0_transforms(h: HopfAlgebra) -> tuple[Mat, Mat, Mat]:
    """S, T on H0 = A/[A,A] (inverse transposes of the actions on central forms) and the class basis."""
    c, s, t = central_form_transforms(h)
    return c, inverse(s).T, inverse(t).T


def orbit_classes(h: HopfAlgebra) -> list[tuple[int, int]]:
    g = getattr(h, "group", None)
    if g is None:
        return []
    reps, seen = [], set()
    for a in range(g.order):
        for b in range(g.order):
            if g.mul(a, b) != g.mul(b, a) or (a, b) in seen:
                continue
            orb = {(g.conj(x, a), g.conj(x, b)) for x in range(g.order)}
            seen |= orb
            reps.append((a, b))
    return reps


def h0_in_orbit_basis(h: HopfAlgebra, op_on_forms: Mat) -> Mat:
    """Action on A/[A,A] in the basis of classes [δ_a⊗b], given the action on central forms."""
    f = h.field
    g = h.group
    n = g.order
    reps = orbit_classes(h)
    # indicator forms of orbits are a basis of central forms (dual to the class basis)
    ind = np.zeros((h.dim, len(reps)), dtype=np.int64)
    for k, (a, b) in enumerate(reps):
        for x in range(n):
            ind[g.conj(x, a) * n + g.conj(x, b), k] = 1
    ind_m = Mat(f, ind)
    on_forms = solve(ind_m, op_on_forms @ ind_m)
    return inverse(on_forms).T


def torus_sl2z(h: HopfAlgebra) -> TorusModularData:
    """S and T on H0 of the closed torus, with the projective scalars of the SL(2,Z) relations."""
    f = h.field
    rep = CheckReport(f"SL(2,Z) on the torus for {h.name}")
    sf, tf = s_transform(h), t_transform(h)
    reps = orbit_classes(h)
    if reps:
        S = h0_in_orbit_basis(h, sf)
        T = h0_in_orbit_basis(h, tf)
    else:
        _, S, T = torus_h0_transforms(h)
    k = S.rows
    eye = Mat.identity(f, k)
    s2 = S @ S
    lam2 = _scalar_multiple(s2 @ s2, eye)
    st = S @ T
    st3 = st @ st @ st
    lam1 = _scalar_multiple(st3, s2)
    rep.info["dim"] = k
    rep.info["lambda1"] = lam1
    rep.info["lambda2"] = lam2
    rep.record("S invertible", rank(S) == k)
    rep.record("S^4 scalar", lam2 is not None, lam2)
    rep.record("(ST)^3 = λ S^2", lam1 is not None, lam1)
    return TorusModularData(S, T, reps, rep)


def torus_h0_via_block(h: HopfAlgebra) -> tuple[Mat, Mat]:
    """S and T on H0 of the closed-torus cut graph, computed through the F-identification."""
    g = torus(colored=False)
    blk = h0_block(g, h)
    fblk = h0_from_specs(h, [("T", [Slot("F")])], [])
    ps = blk.assembly.pieces[0]
    pf = fblk.assembly.pieces[0]
    phi = transport(blk, fblk, (pf.left_inv @ _coadjoint_iota(h) @ ps.basis).auto())
    out = []
    for sf in (s_transform(h), t_transform(h)):
        op = transport(fblk, fblk, (pf.left_inv @ sf @ pf.basis).auto())
        out.append((inverse(phi) @ op @ phi).auto())
    return out[0], out[1]


# -- Hopf route and path comparison --------------------------------------------

def genus_block_via_hopf(h: HopfAlgebra, genus: int, N: int, *, relative: bool = True) -> ChainComplex:
    if genus == 0:
        b = marked_block(sphere_two_disks(), h, N)
        return b.complex
    if genus < 0:
        raise ValueError("genus must be >= 0")
    m = mg_bimodule(h, genus - 1)
    c = iterated_bar(h, m, N, relative=relative)
    c.provenance.update({"route": "hopf", "genus": genus, "algebra": h.name})
    return c


def sphere_two_disks() -> CutGraph:
    """Closed sphere as two disks glued along one colored cut."""
    pieces = (Piece("D1", (1,)), Piece("D2", (-1,)))
    return CutGraph(pieces, (Cut("e", ("D1", 0), ("D2", 0), True),), (), 0, "sphere (two disks)")


def compare_block_paths(h: HopfAlgebra, genus: int, N: int) -> CheckReport:
    rep = CheckReport(f"two routes for closed genus {genus} over {h.name}")
    a = homology_dims(genus_block_via_hopf(h, genus, N))
    g = closed_genus(genus, handles_colored=False) if genus >= 1 else sphere_two_disks()
    b = marked_block(g, h, N).betti()
    rep.info["hopf route"] = a.degrees
    rep.info["cut graph route"] = b.degrees
    rep.record("Betti tables agree", a.degrees == b.degrees, (a.degrees, b.degrees))
    return rep


# -- skeleton enlargement -------------------------------------------------------

def matrix_algebra(a: Algebra, k: int) -> Algebra:
    """M_k(A) with basis E_ij ⊗ e_s at index (i*k + j)*d + s."""
    d = a.dim
    n = k * k * d
    mult = np.zeros((n, n, n), dtype=np.int64)
    for i, j, l in itertools.product(range(k), repeat=3):
        src1 = (i * k + j) * d
        src2 = (j * k + l) * d
        dst = (i * k + l) * d
        mult[src1:src1 + d, src2:src2 + d, dst:dst + d] = a.mult
    unit = np.zeros(n, dtype=np.int64)
    for i in range(k):
        unit[(i * k + i) * d:(i * k + i + 1) * d] = a.unit
    return Algebra(a.field, mult, unit, [f"E{i}{j}.{lab}" for i in range(k) for j in range(k) for lab in a.labels],
                   name=f"M{k}({a.name})", verify=False)


def matrix_bimodule(a: Algebra, big: Algebra, m: MultiBimodule, k: int) -> MultiBimodule:
    """M_k(M) over M_k(A): (E_ij⊗a)(E_jl⊗x) = E_il⊗a·x and (E_ij⊗x)(E_jl⊗a) = E_il⊗x·a."""
    f = a.field
    d = a.dim
    units = lambda i, j: Mat.from_entries(f, k, k, [(i, j, 1)])  # noqa: E731
    left, right = m.actions[0]
    L, R = [], []
    for i, j in itertools.product(range(k), repeat=2):
        for s in range(d):
            # left mult by E_ij: E_jl ↦ E_il  (matrix on k×k index: units(i, j) ⊗ id_k)
            L.append(kron(kron(units(i, j), Mat.identity(f, k)), left[s]).auto())
            # right mult by E_ij: E_li ↦ E_lj  (id_k ⊗ units(j, i))
            R.append(kron(kron(Mat.identity(f, k), units(j, i)), right[s]).auto())
    return MultiBimodule(big, k * k * m.dim, [(L, R)], name=f"M{k}({m.name})")


def skeleton_betti(h: HopfAlgebra, m: MultiBimodule, N: int, *, sizes: Sequence[int] = (1, 2),
                   fine: bool = False) -> BettiTable:
    """Bar homology over the skeleton {A^{⊕s} : s in sizes}, relative to the object identities.

    ``fine=True`` also splits each object identity along the idempotents of A.
    """
    k = sum(sizes)
    big = matrix_algebra(h, k)
    mk = matrix_bimodule(h, big, m, k)
    d = h.dim
    es = []
    starts = np.cumsum([0] + list(sizes))
    parts = h.idempotents if fine else [h.unit]
    for o in range(len(sizes)):
        for part in parts:
            e = np.zeros(big.dim, dtype=np.int64)
            for i in range(starts[o], starts[o + 1]):
                e[(i * k + i) * d:(i * k + i + 1) * d] = part
            es.append(e)
    big.idempotents = es
    c = iterated_bar(big, mk, N, idempotents=es)
    b = homology_dims(c)
    b.provenance.update({"skeleton": list(sizes), "fine": fine, "dims": c.dims})
    return b


# -- compatibility of cut deletion and S -------------------------------------

def two_holed_torus(mults: tuple[int, int] = (1, 1)) -> CutGraph:
    """Handle piece T = (h−, h+, s+) joined along s to a pair of pants P = (s−, X1, X2)."""
    pieces = (Piece("T", (-1, 1, 1)), Piece("U", (-1, 1, 1)))
    cuts = (Cut("h", ("T", 1), ("T", 0), False), Cut("s", ("T", 2), ("U", 0), False))
    bnd = (Boundary(("U", 1), mults[0]), Boundary(("U", 2), mults[1]))
    return CutGraph(pieces, cuts, bnd, 1, "two-holed torus")


def fs_compatibility(h: HopfAlgebra, g: CutGraph | None = None, handle: str = "h", cut: str = "s"
                     ) -> CheckReport:
    """Deleting the separating cut commutes with S on the handle: F ∘ S = S ∘ F on H0."""
    g = g if g is not None else two_holed_torus()
    rep = CheckReport(f"F/S compatibility on {g.name} over {h.name}")
    f_before, merged, _, _ = move_iso_F(g, h, cut)
    s_before, g_s = move_iso_S(g, h, handle)
    f_after, _, _, _ = move_iso_F(g_s, h, cut)
    s_after, _ = move_iso_S(merged, h, handle)
    lhs = f_after @ s_before
    rhs = s_after @ f_before
    rep.info["dims"] = (s_before.rows, s_after.rows)
    rep.record("square commutes", lhs == rhs)
    rep.record("loop is the identity", (inverse(f_before) @ inverse(s_after) @ f_after @ s_before)
               == Mat.identity(h.field, s_before.rows))
    return rep
