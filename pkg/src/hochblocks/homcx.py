"""Chain complexes, simplicial vector spaces and cyclic bar constructions.

Two routes compute the same homotopy coend:

* ``cyclic_bar`` + ``normalize`` builds the literal simplicial object
  M ⊗ A^{⊗n} and quotients by degenerate simplices.  It is only practical for
  very small algebras.
* ``iterated_bar`` builds the normalized bar complex relative to a split
  semisimple commutative subalgebra E = span{e_x} of orthogonal idempotents:
  M ⊗_{E^e} (A/E)^{⊗_E n}.  With E = k·1 this is the classical normalized
  complex M ⊗ (A/k)^{⊗n}; for a larger E the complex is much smaller and
  computes the same homology, since E is separable.
"""
from __future__ import annotations

import itertools
import os
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .exactla import (Mat, _dense_rref, column_space, complement_basis, hstack, inverse, kernel_basis, kron,
                      rank, solve)
from .field import FieldSpec
from .hopfcat import Algebra, AxiomError, CheckReport

WORKERS_ENV = "HOCHBLOCKS_WORKERS"


class TruncationError(ValueError):
    """A degree beyond the stored truncation was requested."""


class ChainError(ValueError):
    pass


# -- ranks ------------------------------------------------------------------

def split_rank(m: Mat) -> int:
    """Rank, computed blockwise over the connected components of the support graph."""
    if m.rows == 0 or m.cols == 0 or m.nnz == 0:
        return 0
    if m.rows * m.cols < 40_000:
        return rank(m)
    s = m.sparse().tocoo()
    n = m.rows + m.cols
    adj = sp.coo_matrix((np.ones(s.nnz, dtype=np.int8), (s.row, s.col + m.rows)), shape=(n, n))
    ncomp, lab = connected_components(adj, directed=False)
    if ncomp <= 1:
        return rank(m)
    rlab = lab[: m.rows]
    clab = lab[m.rows:]
    csr = m.sparse().tocsr()
    total = 0
    order_r = np.argsort(rlab, kind="stable")
    order_c = np.argsort(clab, kind="stable")
    rb = np.searchsorted(rlab[order_r], np.arange(ncomp + 1))
    cb = np.searchsorted(clab[order_c], np.arange(ncomp + 1))
    for comp in range(ncomp):
        rows = order_r[rb[comp]:rb[comp + 1]]
        cols = order_c[cb[comp]:cb[comp + 1]]
        if rows.size == 0 or cols.size == 0:
            continue
        sub = csr[rows][:, cols]
        if sub.nnz:
            total += rank(Mat(m.field, sub).auto())
    return total


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


# -- complexes --------------------------------------------------------------

@dataclass
class BettiTable:
    degrees: list[int]
    truncation: int
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"degrees": list(self.degrees), "truncation": self.truncation, "provenance": self.provenance}

    @classmethod
    def from_json(cls, obj: dict) -> "BettiTable":
        return cls(list(obj["degrees"]), int(obj["truncation"]), dict(obj.get("provenance", {})))

    def __getitem__(self, n: int) -> int:
        return self.degrees[n]

    def __eq__(self, other) -> bool:
        if isinstance(other, BettiTable):
            return self.degrees == other.degrees
        return list(self.degrees) == list(other)

    def __repr__(self) -> str:
        return f"Betti{tuple(self.degrees)}"


class ChainComplex:
    """Complex C_0 <- C_1 <- ... <- C_{N+1}; homology is reported through degree N.

    ``d[n]`` has shape dims[n-1] x dims[n] for 1 <= n <= N+1.
    """

    def __init__(self, field_: FieldSpec, dims: Sequence[int], d: dict[int, Mat], truncation: int | None = None,
                 *, provenance: dict | None = None, check: bool = True):
        self.field = field_
        self.dims = [int(x) for x in dims]
        self.truncation = len(self.dims) - 2 if truncation is None else int(truncation)
        if self.truncation < 0:
            raise TruncationError("truncation must be >= 0")
        if len(self.dims) < self.truncation + 2:
            raise TruncationError(f"need dims through degree {self.truncation + 1}")
        self.d = {}
        for n in range(1, len(self.dims)):
            m = d.get(n)
            if m is None:
                m = Mat.zeros(field_, self.dims[n - 1], self.dims[n])
            if m.shape != (self.dims[n - 1], self.dims[n]):
                raise ChainError(f"d[{n}] has shape {m.shape}, expected {(self.dims[n - 1], self.dims[n])}")
            self.d[n] = m
        self.provenance = dict(provenance or {})
        if check:
            bad = self.d_squared_failures()
            if bad:
                raise ChainError(f"d∘d ≠ 0 in degrees {bad}")

    @property
    def top(self) -> int:
        return len(self.dims) - 1

    def d_squared_failures(self) -> list[int]:
        return [n for n in range(2, self.top + 1) if not (self.d[n - 1] @ self.d[n]).is_zero()]

    def boundary(self, n: int) -> Mat:
        if n <= 0 or n > self.top:
            return Mat.zeros(self.field, self.dims[n - 1] if 0 < n <= len(self.dims) else 0,
                             self.dims[n] if 0 <= n < len(self.dims) else 0)
        return self.d[n]

    @cached_property
    def _ranks(self) -> dict[int, int]:
        degs = list(range(1, self.top + 1))
        if _workers() > 1 and len(degs) > 1:
            from concurrent.futures import ProcessPoolExecutor

            with ProcessPoolExecutor(max_workers=_workers()) as ex:
                vals = list(ex.map(split_rank, [self.d[n] for n in degs]))
        else:
            vals = [split_rank(self.d[n]) for n in degs]
        return dict(zip(degs, vals))

    def rank_d(self, n: int) -> int:
        if n <= 0 or n > self.top:
            return 0
        return self._ranks[n]

    def truncate(self, n: int) -> "ChainComplex":
        if n > self.truncation:
            raise TruncationError(f"cannot extend truncation {self.truncation} to {n}")
        return ChainComplex(self.field, self.dims[: n + 2], {k: self.d[k] for k in range(1, n + 2)}, n,
                            provenance=self.provenance, check=False)

    def to_json(self) -> dict:
        return {
            "field": self.field.to_json(),
            "dims": self.dims,
            "truncation": self.truncation,
            "d": {str(n): m.to_json() for n, m in self.d.items()},
            "provenance": self.provenance,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ChainComplex":
        f = FieldSpec.from_json(obj["field"])
        d = {int(k): Mat.from_json(v) for k, v in obj["d"].items()}
        return cls(f, obj["dims"], d, obj["truncation"], provenance=obj.get("provenance"))

    def __repr__(self) -> str:
        return f"ChainComplex(dims={self.dims}, N={self.truncation})"


def homology_dims(c: ChainComplex, upto: int | None = None) -> BettiTable:
    n_max = c.truncation if upto is None else upto
    if n_max > c.truncation:
        raise TruncationError(f"complex is valid only through degree {c.truncation}")
    out = []
    for n in range(n_max + 1):
        b = c.dims[n] - c.rank_d(n) - c.rank_d(n + 1)
        if b < 0:
            raise ChainError("negative Betti number; differentials inconsistent")
        out.append(b)
    return BettiTable(out, n_max, dict(c.provenance))


def direct_sum(a: ChainComplex, b: ChainComplex) -> ChainComplex:
    from .exactla import block_diag

    top = min(a.top, b.top)
    dims = [a.dims[n] + b.dims[n] for n in range(top + 1)]
    d = {n: block_diag([a.d[n], b.d[n]]) for n in range(1, top + 1)}
    return ChainComplex(a.field, dims, d, top - 1, check=False)


def tensor_complexes(a: ChainComplex, b: ChainComplex) -> ChainComplex:
    """Tensor product with Koszul signs; basis (p-part, q-part) ordered by p then index."""
    f = a.field
    top = min(a.top, b.top)
    blocks: dict[int, list[tuple[int, int]]] = {n: [(p, n - p) for p in range(n + 1)] for n in range(top + 1)}
    offsets = {}
    dims = []
    for n in range(top + 1):
        off = 0
        for p, q in blocks[n]:
            offsets[(p, q)] = off
            off += a.dims[p] * b.dims[q]
        dims.append(off)
    d = {}
    for n in range(1, top + 1):
        rows, cols, vals = [], [], []
        for p, q in blocks[n]:
            c0 = offsets[(p, q)]
            if p >= 1:
                m = kron(a.d[p], Mat.identity(f, b.dims[q])).sparse().tocoo()
                r0 = offsets[(p - 1, q)]
                rows.append(m.row + r0), cols.append(m.col + c0), vals.append(m.data)
            if q >= 1:
                m = kron(Mat.identity(f, a.dims[p]), b.d[q]).sparse().tocoo()
                r0 = offsets[(p, q - 1)]
                sign = -1 if p % 2 else 1
                rows.append(m.row + r0), cols.append(m.col + c0), vals.append(m.data * sign)
        if rows:
            mat = sp.coo_matrix((np.concatenate(vals) % f.p, (np.concatenate(rows), np.concatenate(cols))),
                                shape=(dims[n - 1], dims[n])).tocsr()
        else:
            mat = sp.csr_matrix((dims[n - 1], dims[n]), dtype=np.int64)
        d[n] = Mat(f, mat)
    return ChainComplex(f, dims, d, top - 1)


@dataclass
class ChainMap:
    source: ChainComplex
    target: ChainComplex
    components: dict[int, Mat]

    def __post_init__(self):
        top = min(self.source.top, self.target.top)
        for n in range(top + 1):
            m = self.components.get(n)
            if m is None or m.shape != (self.target.dims[n], self.source.dims[n]):
                raise ChainError(f"component {n} missing or misshaped")

    @property
    def top(self) -> int:
        return min(self.source.top, self.target.top)

    def commutation_failures(self) -> list[int]:
        bad = []
        for n in range(1, self.top + 1):
            lhs = self.target.d[n] @ self.components[n]
            rhs = self.components[n - 1] @ self.source.d[n]
            if lhs != rhs:
                bad.append(n)
        return bad

    def is_chain_map(self) -> bool:
        return not self.commutation_failures()

    def compose(self, other: "ChainMap") -> "ChainMap":
        """self ∘ other."""
        top = min(self.top, other.top)
        return ChainMap(other.source, self.target, {n: self.components[n] @ other.components[n] for n in range(top + 1)})


def identity_map(c: ChainComplex) -> ChainMap:
    return ChainMap(c, c, {n: Mat.identity(c.field, c.dims[n]) for n in range(c.top + 1)})


def zero_map(a: ChainComplex, b: ChainComplex) -> ChainMap:
    top = min(a.top, b.top)
    return ChainMap(a, b, {n: Mat.zeros(a.field, b.dims[n], a.dims[n]) for n in range(top + 1)})


def _colspace_rank(*mats: Mat) -> int:
    ms = [m for m in mats if m.cols]
    if not ms:
        return 0
    return split_rank(hstack(ms))


def is_quasi_iso(f: ChainMap, N: int | None = None) -> CheckReport:
    """Induced maps on homology through degree N, with injectivity/surjectivity verdicts."""
    n_max = min(f.source.truncation, f.target.truncation) if N is None else N
    if n_max + 1 > f.top:
        raise TruncationError(f"degree-{n_max} verdict needs both complexes through degree {n_max + 1}")
    rep = CheckReport("quasi-isomorphism")
    rep.record("chain map", f.is_chain_map(), f.commutation_failures())
    hs = homology_dims(f.source, n_max)
    ht = homology_dims(f.target, n_max)
    per = []
    for n in range(n_max + 1):
        z = kernel_basis(f.source.d[n]) if n >= 1 else None
        if n == 0:
            zmat = Mat.identity(f.source.field, f.source.dims[0])
        elif z:
            zmat = Mat(f.source.field, np.stack(z, axis=1)).auto()
        else:
            zmat = Mat.zeros(f.source.field, f.source.dims[n], 0)
        b = f.target.d[n + 1]
        rb = split_rank(b)
        rh = _colspace_rank(f.components[n] @ zmat, b) - rb
        inj = rh == hs[n]
        sur = rh == ht[n]
        per.append({"degree": n, "source": hs[n], "target": ht[n], "rank": rh, "injective": inj, "surjective": sur})
        rep.record(f"H{n} iso", inj and sur, per[-1])
    rep.info["degrees"] = per
    return rep


# -- simplicial vector spaces -----------------------------------------------

class SimplicialVS:
    """Levels 0..top with faces (n, i): V_n -> V_{n-1} and optional degeneracies (n, i): V_n -> V_{n+1}."""

    def __init__(self, field_: FieldSpec, levels: Sequence[int], faces: dict[tuple[int, int], Mat],
                 degeneracies: dict[tuple[int, int], Mat] | None = None, *, check: bool = True):
        self.field = field_
        self.levels = list(levels)
        self.faces = dict(faces)
        self.degeneracies = dict(degeneracies) if degeneracies else {}
        if check:
            bad = self.identity_failures()
            if bad:
                raise ChainError(f"simplicial identities fail: {bad[:5]}")

    @property
    def top(self) -> int:
        return len(self.levels) - 1

    @property
    def truncation(self) -> int:
        return self.top - 1

    def identity_failures(self) -> list[tuple]:
        bad = []
        d, s = self.faces, self.degeneracies
        for n in range(2, self.top + 1):
            for i in range(n):
                for j in range(i + 1, n + 1):
                    if d[(n - 1, i)] @ d[(n, j)] != d[(n - 1, j - 1)] @ d[(n, i)]:
                        bad.append(("dd", n, i, j))
        if not s:
            return bad
        for n in range(self.top):
            for i in range(n + 1):
                for j in range(i, n + 1):
                    if n + 1 < self.top and s[(n + 1, j + 1)] @ s[(n, i)] != s[(n + 1, i)] @ s[(n, j)]:
                        bad.append(("ss", n, i, j))
            for j in range(n + 1):
                for i in range(n + 2):
                    lhs = d[(n + 1, i)] @ s[(n, j)]
                    if i < j:
                        rhs = s[(n - 1, j - 1)] @ d[(n, i)]
                    elif i in (j, j + 1):
                        rhs = Mat.identity(self.field, self.levels[n])
                    else:
                        rhs = s[(n - 1, j)] @ d[(n, i - 1)]
                    if lhs != rhs:
                        bad.append(("ds", n, i, j))
        return bad


def moore_complex(s: SimplicialVS) -> ChainComplex:
    f = s.field
    d = {}
    for n in range(1, s.top + 1):
        acc = s.faces[(n, 0)]
        for i in range(1, n + 1):
            acc = acc + s.faces[(n, i)].scale(-1 if i % 2 else 1)
        d[n] = acc
    return ChainComplex(f, s.levels, d, s.top - 1)


def _quotient_maps(sub: Mat, n: int, f: FieldSpec) -> tuple[Mat, Mat]:
    """(π, σ) for V -> V/sub with σ spanned by standard basis vectors and πσ = id."""
    keep = complement_basis(sub, n) if sub.cols else list(range(n))
    sigma = Mat.from_entries(f, n, len(keep), [(k, j, 1) for j, k in enumerate(keep)])
    if not sub.cols:
        return sigma.T, sigma
    if not keep:
        return Mat.zeros(f, 0, n), sigma
    full = hstack([sub, sigma]).to_dense()
    inv = inverse(full).dense()
    pi = Mat(f, inv[sub.cols:, :]).auto()
    return pi, sigma


def normalize(s: SimplicialVS) -> ChainComplex:
    """Normalized chains: quotient of level n by the span of the degenerate simplices."""
    moore = moore_complex(s)
    if not s.degeneracies:
        return moore
    f = s.field
    pis, sigmas, dims = [], [], []
    for n in range(s.top + 1):
        imgs = [s.degeneracies[(n - 1, i)] for i in range(n)] if n >= 1 else []
        if imgs:
            sub = column_space(hstack(imgs))
        else:
            sub = Mat.zeros(f, s.levels[n], 0)
        pi, sigma = _quotient_maps(sub, s.levels[n], f)
        pis.append(pi)
        sigmas.append(sigma)
        dims.append(sigma.cols)
    d = {n: pis[n - 1] @ moore.d[n] @ sigmas[n] for n in range(1, s.top + 1)}
    return ChainComplex(f, dims, d, s.top - 1)


# -- bimodules --------------------------------------------------------------

class MultiBimodule:
    """Space with g commuting A-bimodule structures.

    ``actions[j] = (left, right)``; ``left[i]`` is the matrix of m -> e_i·m and
    ``right[i]`` the matrix of m -> m·e_i in variable j.
    """

    def __init__(self, algebra: Algebra, dim: int, actions: Sequence[tuple[Sequence[Mat], Sequence[Mat]]],
                 *, name: str = "M", extra: Sequence[Sequence[Mat]] = (), verify: bool = False):
        self.algebra = algebra
        self.dim = int(dim)
        self.actions = [(list(l), list(r)) for l, r in actions]
        self.name = name
        self.extra = [list(e) for e in extra]  # spare left module structures (boundary labels)
        if verify:
            rep = check_bimodule(self)
            if not rep.passed:
                raise AxiomError(f"bimodule {name}: {rep.failures()} {rep.witnesses}")

    @property
    def g(self) -> int:
        return len(self.actions)

    def left(self, j: int) -> list[Mat]:
        return self.actions[j][0]

    def right(self, j: int) -> list[Mat]:
        return self.actions[j][1]

    def act_left(self, j: int, x: np.ndarray) -> Mat:
        return _combine(self.actions[j][0], x, self.dim, self.algebra.field)

    def act_right(self, j: int, x: np.ndarray) -> Mat:
        return _combine(self.actions[j][1], x, self.dim, self.algebra.field)

    def permuted(self, order: Sequence[int]) -> "MultiBimodule":
        return MultiBimodule(self.algebra, self.dim, [self.actions[j] for j in order], name=self.name,
                             extra=self.extra)

    def __repr__(self) -> str:
        return f"MultiBimodule({self.name}, dim={self.dim}, g={self.g})"


def _combine(mats: Sequence[Mat], x: np.ndarray, n: int, f: FieldSpec) -> Mat:
    acc = None
    for i in np.nonzero(x)[0]:
        t = mats[i].sparse() * int(x[i])
        acc = t if acc is None else acc + t
    return Mat(f, acc).auto() if acc is not None else Mat.zeros(f, n, n)


def bimodule(algebra: Algebra, dim: int, left: Sequence[Mat], right: Sequence[Mat], name: str = "M",
             verify: bool = False) -> MultiBimodule:
    return MultiBimodule(algebra, dim, [(left, right)], name=name, verify=verify)


def regular_bimodule(a: Algebra) -> MultiBimodule:
    return bimodule(a, a.dim, a.left_mult, a.right_mult, name="A")


def check_bimodule(h: MultiBimodule, *, exhaustive: bool = True) -> CheckReport:
    a = h.algebra
    f = a.field
    rep = CheckReport(f"bimodule {h.name}")
    idx = range(a.dim) if exhaustive else [int(np.nonzero(g)[0][0]) for g in a.generators]
    eye = Mat.identity(f, h.dim)
    for j, (left, right) in enumerate(h.actions):
        ok_l = ok_r = True
        for i, k in itertools.product(idx, repeat=2):
            v = np.zeros(a.dim, dtype=np.int64)
            for t, c in a.mult_terms.get((i, k), []):
                v[t] = c
            if left[i] @ left[k] != _combine(left, v, h.dim, f):
                ok_l = False
            if right[k] @ right[i] != _combine(right, v, h.dim, f):
                ok_r = False
        rep.record(f"left action {j}", ok_l and _combine(left, a.unit, h.dim, f) == eye)
        rep.record(f"right action {j}", ok_r and _combine(right, a.unit, h.dim, f) == eye)
    gens = list(range(a.dim))
    structures = [m for pair in h.actions for m in pair] + h.extra
    ok = True
    for s1, s2 in itertools.combinations(range(len(structures)), 2):
        for i, k in itertools.product(gens, repeat=2):
            x, y = structures[s1][i], structures[s2][k]
            if x @ y != y @ x:
                ok = False
                rep.witnesses.setdefault("commutation", (s1, s2, i, k))
                break
        if not ok:
            break
    rep.record("actions commute", ok)
    return rep


# -- the literal cyclic bar object -----------------------------------------

def _perm_last_to_front(block: int, rest: int, last: int, f: FieldSpec) -> Mat:
    """X ⊗ Y ⊗ Z -> Z ⊗ X ⊗ Y as a permutation, dims (block, rest, last)."""
    n = block * rest * last
    src = np.arange(n)
    x, rem = np.divmod(src, rest * last)
    y, z = np.divmod(rem, last)
    dst = (z * block + x) * rest + y
    return Mat(f, sp.csr_matrix((np.ones(n, dtype=np.int64), (dst, src)), shape=(n, n)))


def _action_tensor(mats: Sequence[Mat], dim: int, algebra_first: bool, f: FieldSpec) -> Mat:
    """Matrix M⊗A -> M (or A⊗M -> M) assembled from per-basis action matrices."""
    blocks = [m.sparse() for m in mats]
    d = len(blocks)
    if algebra_first:
        out = sp.hstack(blocks, format="csr")  # column (a, m) = a*dim + m
    else:
        big = sp.hstack(blocks, format="csc")  # column a*dim + m; reorder to m*d + a
        perm = np.arange(d * dim).reshape(d, dim).T.ravel()
        out = big[:, perm].tocsr()
    return Mat(f, out)


def cyclic_bar(a: Algebra, m: MultiBimodule, N: int, variable: int = 0) -> SimplicialVS:
    """Levels 0..N+1 of M ⊗ A^{⊗n} with faces via the given bimodule variable."""
    f = a.field
    d = a.dim
    left, right = m.actions[variable]
    rho = _action_tensor(right, m.dim, False, f)  # (m, a) -> m·a
    lam = _action_tensor(left, m.dim, True, f)  # (a, m) -> a·m
    mu = Mat(f, a.mult.reshape(d * d, d).T).auto()  # (a, b) -> ab
    eta = Mat(f, a.unit.reshape(d, 1))
    eye = lambda n: Mat.identity(f, n)  # noqa: E731
    levels = [m.dim * d**n for n in range(N + 2)]
    faces, degs = {}, {}
    for n in range(1, N + 2):
        faces[(n, 0)] = kron(rho, eye(d ** (n - 1)))
        for i in range(1, n):
            faces[(n, i)] = kron(kron(eye(m.dim * d ** (i - 1)), mu), eye(d ** (n - 1 - i)))
        perm = _perm_last_to_front(m.dim, d ** (n - 1), d, f)
        faces[(n, n)] = kron(lam, eye(d ** (n - 1))) @ perm
    for n in range(N + 1):
        for i in range(n + 1):
            degs[(n, i)] = kron(kron(eye(m.dim * d**i), eta), eye(d ** (n - i)))
    return SimplicialVS(f, levels, faces, degs, check=False)


def diagonal_bar(a: Algebra, h: MultiBimodule, N: int) -> SimplicialVS:
    """Diagonal of the bisimplicial object for a two-variable multi-bimodule (unnormalized faces).

    Level n is H ⊗ A^{⊗n} ⊗ A^{⊗n}; face i applies face i in both directions.
    """
    if h.g != 2:
        raise ValueError("diagonal_bar needs exactly two variables")
    f = a.field
    d = a.dim
    s1 = cyclic_bar(a, h, N, variable=0)
    levels = [h.dim * d ** (2 * n) for n in range(N + 2)]
    faces = {}
    for n in range(1, N + 2):
        # reorder (H, A^n_1, A^n_2) so variable-2 faces act on (H, A^n_2) with A^n_1 carried along
        for i in range(n + 1):
            f1 = kron(s1.faces[(n, i)], Mat.identity(f, d**n))  # acts on (H,A1^n), A2^n passive
            f2 = _second_face(a, h, n, i)
            faces[(n, i)] = f2 @ f1
    return SimplicialVS(f, levels, faces, None, check=False)


def _second_face(a: Algebra, h: MultiBimodule, n: int, i: int) -> Mat:
    """Face i in the second variable on H ⊗ A^{n-1} ⊗ A^n (first chain already shortened)."""
    f = a.field
    d = a.dim
    s2 = cyclic_bar(a, h, n, variable=1)
    face = s2.faces[(n, i)]  # on H ⊗ A^n -> H ⊗ A^{n-1}
    # move the first chain (A^{n-1}) out of the way: (H, C1, C2) -> (H, C2, C1)
    p_in = _swap_middle(h.dim, d ** (n - 1), d**n, f)
    p_out = _swap_middle(h.dim, d ** (n - 1), d ** (n - 1), f).T
    return p_out @ kron(face, Mat.identity(f, d ** (n - 1))) @ p_in


def _swap_middle(a_: int, b: int, c: int, f: FieldSpec) -> Mat:
    """(x, y, z) -> (x, z, y) with dims (a_, b, c)."""
    n = a_ * b * c
    src = np.arange(n)
    x, rem = np.divmod(src, b * c)
    y, z = np.divmod(rem, c)
    dst = (x * c + z) * b + y
    return Mat(f, sp.csr_matrix((np.ones(n, dtype=np.int64), (dst, src)), shape=(n, n)))


# -- the relative normalized bar engine ------------------------------------

def _is_diag01(m: Mat) -> bool:
    s = m.sparse().tocoo()
    return bool(np.all(s.row == s.col) and np.all(s.data % m.field.p == 1))


@dataclass
class AdaptedAlgebra:
    """A in a basis adapted to the Peirce decomposition e_x A e_y."""

    algebra: Algebra
    idempotents: list[np.ndarray]
    change: Mat | None  # columns = adapted basis in original coordinates; None = identity
    left_label: np.ndarray
    right_label: np.ndarray
    e_index: list[int]  # adapted index of each e_x
    mult_terms: dict

    @cached_property
    def bar_indices(self) -> list[int]:
        es = set(self.e_index)
        return [i for i in range(self.algebra.dim) if i not in es]

    @cached_property
    def paths_by_start(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = defaultdict(list)
        for i in self.bar_indices:
            out[int(self.left_label[i])].append(i)
        return out

    @cached_property
    def bar_products(self) -> dict[tuple[int, int], list[tuple[int, int]]]:
        es = set(self.e_index)
        out = {}
        for (i, j), ts in self.mult_terms.items():
            kept = [(k, c) for k, c in ts if k not in es]
            if kept:
                out[(i, j)] = kept
        return out

    def to_adapted(self, x: np.ndarray) -> np.ndarray:
        if self.change is None:
            return x
        return solve(self.change, Mat(self.algebra.field, x.reshape(-1, 1))).dense().ravel()

    def from_adapted(self, x: np.ndarray) -> np.ndarray:
        if self.change is None:
            return x
        return self.change.dense() @ x % self.algebra.field.p

    def paths(self, x: int, y: int, n: int) -> list[tuple[int, ...]]:
        return self._paths(x, y, n)

    @cached_property
    def _path_cache(self) -> dict:
        return {}

    def _paths(self, x: int, y: int, n: int) -> list[tuple[int, ...]]:
        key = (x, y, n)
        c = self._path_cache
        if key in c:
            return c[key]
        if n == 0:
            res = [()] if x == y else []
        else:
            res = []
            for a in self.paths_by_start.get(x, []):
                z = int(self.right_label[a])
                for rest in self._paths(z, y, n - 1):
                    res.append((a,) + rest)
        c[key] = res
        return res


def adapt_algebra(a: Algebra, idempotents: Sequence[np.ndarray] | None = None) -> AdaptedAlgebra:
    f, p, d = a.field, a.p, a.dim
    es = [np.asarray(e, dtype=np.int64) % p for e in (idempotents if idempotents is not None else a.idempotents)]
    r = len(es)
    ls = [a.left_mult_by(e) for e in es]
    rs = [a.right_mult_by(e) for e in es]
    basis_e = [int(np.nonzero(e)[0][0]) if np.count_nonzero(e) == 1 and e[np.nonzero(e)[0][0]] == 1 else -1
               for e in es]
    if all(b >= 0 for b in basis_e) and all(_is_diag01(m) for m in ls + rs):
        left = np.full(d, -1)
        right = np.full(d, -1)
        for x, m in enumerate(ls):
            left[np.diag(m.dense()) == 1] = x
        for y, m in enumerate(rs):
            right[np.diag(m.dense()) == 1] = y
        if (left < 0).any() or (right < 0).any():
            raise AxiomError("idempotents do not sum to the unit")
        return AdaptedAlgebra(a, es, None, left, right, basis_e, a.mult_terms)
    # general path: explicit Peirce basis with e_x first in each diagonal block
    cols, left, right, e_index = [], [], [], []
    for x, y in itertools.product(range(r), repeat=2):
        proj = ls[x] @ rs[y]
        block = column_space(proj)
        if block.cols == 0:
            continue
        bd = block.dense()
        if x == y:
            ex = es[x].reshape(-1, 1)
            # complete e_x to a basis of the block
            aug = np.hstack([ex, bd])
            _, piv = _dense_rref(f, aug)
            bd = aug[:, piv]
            e_index.append(len(cols))
        for j in range(bd.shape[1]):
            cols.append(bd[:, j])
            left.append(x)
            right.append(y)
    change = Mat(f, np.stack(cols, axis=1))
    if len(cols) != d:
        raise AxiomError("idempotents do not decompose the algebra")
    inv = inverse(change).dense()
    cd = change.dense()
    mult = np.einsum("ia,jb,ijk,ck->abc", cd, cd, a.mult, inv, optimize=True) % p
    terms: dict = defaultdict(list)
    for i, j, k in zip(*np.nonzero(mult)):
        terms[(int(i), int(j))].append((int(k), int(mult[i, j, k])))
    return AdaptedAlgebra(a, es, change, np.array(left), np.array(right), e_index, dict(terms))


@dataclass
class AdaptedModule:
    change: Mat | None
    left_label: list[np.ndarray]  # per variable: label y with m in e_y M
    right_label: list[np.ndarray]  # per variable: label x with m in M e_x
    right_cols: list[dict]  # per variable: adapted A index -> csc matrix of right action
    left_cols: list[dict]


def adapt_module(aa: AdaptedAlgebra, h: MultiBimodule) -> AdaptedModule:
    a = aa.algebra
    f = a.field
    es = aa.idempotents
    proj = []
    for j in range(h.g):
        proj.append(([h.act_left(j, e) for e in es], [h.act_right(j, e) for e in es]))
    flat = [m for pl, pr in proj for m in pl + pr]
    change = None
    if all(_is_diag01(m) or m.is_zero() for m in flat):
        lab_l = []
        lab_r = []
        for pl, pr in proj:
            ll = np.full(h.dim, -1)
            rr = np.full(h.dim, -1)
            for x, m in enumerate(pl):
                ll[np.diag(m.dense()) == 1] = x
            for x, m in enumerate(pr):
                rr[np.diag(m.dense()) == 1] = x
            lab_l.append(ll)
            lab_r.append(rr)
    else:
        spaces = [(Mat.identity(f, h.dim), ())]
        for pl, pr in proj:
            for fam in (pl, pr):
                nxt = []
                for basis, labels in spaces:
                    for x, pm in enumerate(fam):
                        img = column_space(pm @ basis)
                        if img.cols:
                            nxt.append((img, labels + (x,)))
                spaces = nxt
        cols = [s for s, _ in spaces]
        change = hstack(cols).to_dense()
        if change.cols != h.dim:
            raise AxiomError("idempotent actions do not decompose the module")
        lab_l = [np.concatenate([[lab[2 * j]] * s.cols for s, lab in spaces]) for j in range(h.g)]
        lab_r = [np.concatenate([[lab[2 * j + 1]] * s.cols for s, lab in spaces]) for j in range(h.g)]
    for arr in lab_l + lab_r:
        if (arr < 0).any():
            raise AxiomError("idempotent actions do not decompose the module")
    inv = inverse(change) if change is not None else None
    right_cols, left_cols = [], []
    cd = aa.change.dense() if aa.change is not None else None
    for j in range(h.g):
        rc, lc = {}, {}
        for i in range(a.dim):
            x = cd[:, i] if cd is not None else a.basis_vector(i)
            rm, lm = h.act_right(j, x), h.act_left(j, x)
            if change is not None:
                rm, lm = inv @ rm @ change, inv @ lm @ change
            rc[i] = rm.sparse().tocsc()
            lc[i] = lm.sparse().tocsc()
        right_cols.append(rc)
        left_cols.append(lc)
    return AdaptedModule(change, lab_l, lab_r, right_cols, left_cols)


def _column(m: sp.csc_matrix, j: int) -> list[tuple[int, int]]:
    lo, hi = m.indptr[j], m.indptr[j + 1]
    return list(zip(m.indices[lo:hi].tolist(), m.data[lo:hi].tolist()))


@dataclass
class BarBasis:
    """Basis of the relative total complex: generators (m, chains) per degree.

    ``m`` indexes the adapted basis of the coefficient space; ``change`` holds
    that basis in original coordinates (None when it is the standard basis).
    """

    gens: list[list[tuple]]
    index: list[dict]
    change: Mat | None = None
    module_dim: int = 0

    def to_adapted(self, v: Mat) -> Mat:
        return v if self.change is None else solve(self.change, v)

    def from_adapted(self) -> Mat | None:
        return self.change


def induced_chain_map(src: ChainComplex, sb: BarBasis, tgt: ChainComplex, tb: BarBasis, fmat: Mat,
                      chain_rule) -> ChainMap:
    """Chain map m⊗chains ↦ f(m)⊗rule(chains).

    ``chain_rule(chains)`` returns (new_chains, sign) or None for zero.
    ``fmat`` maps the source coefficient space to the target one (original
    coordinates).
    """
    f = src.field
    p = f.p
    fm = fmat
    if sb.change is not None:
        fm = fm @ sb.change
    if tb.change is not None:
        fm = solve(tb.change, fm)
    cols_f = fm.sparse().tocsc()
    comps = {}
    for n in range(min(src.top, tgt.top) + 1):
        rows, cols, vals = [], [], []
        tgt_index = tb.index[n]
        for col, (m, chains) in enumerate(sb.gens[n]):
            res = chain_rule(chains)
            if res is None:
                continue
            new_chains, sign = res
            for m2, c in _column(cols_f, m):
                r = tgt_index.get((m2, new_chains))
                if r is None:
                    raise ChainError(f"image generator {(m2, new_chains)} missing in target degree {n}")
                rows.append(r), cols.append(col), vals.append(sign * c)
        mat = sp.coo_matrix((np.array(vals, dtype=np.int64) % p, (np.array(rows, dtype=np.int64),
                                                                   np.array(cols, dtype=np.int64))),
                            shape=(tgt.dims[n], src.dims[n])).tocsr()
        comps[n] = Mat(f, mat)
    return ChainMap(src, tgt, comps)


def koszul_permutation_rule(perm: Sequence[int]):
    """Chain rule for reordering variables: target variable k is source variable perm[k]."""

    def rule(chains):
        lengths = [len(c) for c in chains]
        sign = 1
        for a in range(len(perm)):
            for b in range(a + 1, len(perm)):
                if perm[a] > perm[b] and lengths[perm[a]] % 2 and lengths[perm[b]] % 2:
                    sign = -sign
        return tuple(chains[i] for i in perm), sign

    return rule


def is_signed_permutation(m: Mat) -> bool:
    if m.rows != m.cols:
        return False
    s = m.sparse().tocsc()
    s.eliminate_zeros()
    if s.nnz != m.cols:
        return False
    p = m.field.p
    ok_vals = np.all((s.data % p == 1) | (s.data % p == (p - 1) % p))
    return bool(ok_vals and len(set(s.indices.tolist())) == m.rows and np.all(np.diff(s.indptr) == 1))


def iterated_bar(a: Algebra, h: MultiBimodule, N: int, *, idempotents: Sequence[np.ndarray] | None = None,
                 relative: bool = True, order: Sequence[int] | None = None, return_basis: bool = False):
    """Total complex of the normalized multi-variable cyclic bar construction through degree N+1.

    ``relative=False`` forces E = k·1 (classical normalized complex).  The
    variables are processed in ``order`` (default: as stored); Koszul signs are
    (-1)^{n_1 + ... + n_{j-1}} for the differential of variable j.
    """
    if N < 0:
        raise TruncationError("truncation must be >= 0")
    f = a.field
    p = f.p
    if order is not None:
        h = h.permuted(order)
    if h.g == 0:
        dims = [h.dim] + [0] * (N + 1)
        c = ChainComplex(f, dims, {}, N, provenance={"variables": 0})
        gens0 = [[(m, ()) for m in range(h.dim)]] + [[] for _ in range(N + 1)]
        basis = BarBasis(gens0, [{g_: i for i, g_ in enumerate(lv)} for lv in gens0], None, h.dim)
        return (c, basis) if return_basis else c
    es = [a.unit] if not relative else (idempotents if idempotents is not None else a.idempotents)
    aa = adapt_algebra(a, es)
    am = adapt_module(aa, h)
    g = h.g
    top = N + 1
    # enumerate generators per total degree
    gens: list[list[tuple]] = [[] for _ in range(top + 1)]
    by_labels: dict[tuple, list[int]] = defaultdict(list)
    for m in range(h.dim):
        by_labels[tuple((int(am.right_label[j][m]), int(am.left_label[j][m])) for j in range(g))].append(m)
    for n in range(top + 1):
        for multideg in _compositions(n, g):
            for labels, ms in sorted(by_labels.items()):
                chain_sets = [aa.paths(x, y, k) for (x, y), k in zip(labels, multideg)]
                if any(not cs for cs in chain_sets):
                    continue
                for m in ms:
                    for chains in itertools.product(*chain_sets):
                        gens[n].append((m, chains))
    index = [{gen: i for i, gen in enumerate(level)} for level in gens]
    prods = aa.bar_products
    d = {}
    for n in range(1, top + 1):
        rows, cols, vals = [], [], []
        tgt = index[n - 1]
        for col, (m, chains) in enumerate(gens[n]):
            shift = 0
            for j, ch in enumerate(chains):
                k = len(ch)
                if k == 0:
                    continue
                sign0 = -1 if shift % 2 else 1
                # face 0: m·a1
                for m2, c in _column(am.right_cols[j][ch[0]], m):
                    key = (m2, chains[:j] + (ch[1:],) + chains[j + 1:])
                    r = tgt.get(key)
                    if r is not None:
                        rows.append(r), cols.append(col), vals.append(sign0 * c)
                # inner faces
                for i in range(1, k):
                    s = sign0 * (-1 if i % 2 else 1)
                    for b, c in prods.get((ch[i - 1], ch[i]), ()):
                        newch = ch[: i - 1] + (b,) + ch[i + 1:]
                        r = tgt.get((m, chains[:j] + (newch,) + chains[j + 1:]))
                        if r is not None:
                            rows.append(r), cols.append(col), vals.append(s * c)
                # last face: a_k·m
                s = sign0 * (-1 if k % 2 else 1)
                for m2, c in _column(am.left_cols[j][ch[-1]], m):
                    r = tgt.get((m2, chains[:j] + (ch[:-1],) + chains[j + 1:]))
                    if r is not None:
                        rows.append(r), cols.append(col), vals.append(s * c)
                shift += k
        mat = sp.coo_matrix((np.array(vals, dtype=np.int64) % p, (np.array(rows, dtype=np.int64),
                                                                   np.array(cols, dtype=np.int64))),
                            shape=(len(gens[n - 1]), len(gens[n]))).tocsr()
        d[n] = Mat(f, mat)
    prov = {"variables": g, "relative": bool(relative), "idempotents": len(es)}
    c = ChainComplex(f, [len(x) for x in gens], d, N, provenance=prov, check=False)
    if return_basis:
        return c, BarBasis(gens, index, am.change, h.dim)
    return c


def _compositions(n: int, g: int):
    """Weak compositions of n into g parts, lexicographic."""
    if g == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, g - 1):
            yield (first,) + rest


def check_d_squared(c: ChainComplex, *, sample: int | None = None, seed: int = 0) -> list[int]:
    """Degrees where d∘d ≠ 0; optionally only on a random sample of basis columns."""
    if sample is None:
        return c.d_squared_failures()
    rng = np.random.default_rng(seed)
    bad = []
    for n in range(2, c.top + 1):
        cols = rng.choice(c.dims[n], size=min(sample, c.dims[n]), replace=False) if c.dims[n] else []
        sub = c.d[n].sparse()[:, np.sort(cols)]
        prod = (c.d[n - 1].sparse() @ sub).tocsr()
        prod.data %= c.field.p
        prod.eliminate_zeros()
        if prod.nnz:
            bad.append(n)
    return bad


# -- ordinary coends --------------------------------------------------------

@dataclass
class Quotient:
    """V -> Q with projection π and a section σ (π σ = id)."""

    dim: int
    pi: Mat
    sigma: Mat


def ordinary_coend(a: Algebra, h: MultiBimodule, variable: int = 0) -> Quotient:
    """M / span{a·m − m·a} for the given variable, over all basis elements a."""
    f = a.field
    left, right = h.actions[variable]
    rel = [left[i] - right[i] for i in range(a.dim)]
    rel_mat = hstack(rel)
    # rows of π span the annihilator of the relation space
    ann = kernel_basis(rel_mat.T)
    if not ann:
        z = Mat.zeros(f, 0, h.dim)
        return Quotient(0, z, z.T)
    pi0 = Mat(f, np.stack(ann, axis=0)).auto()
    # pick standard columns where π0 is invertible
    _, piv = _dense_rref(f, pi0.dense())
    sigma = Mat.from_entries(f, h.dim, len(piv), [(c, j, 1) for j, c in enumerate(piv)])
    corr = inverse(pi0 @ sigma)
    pi = corr @ pi0
    return Quotient(pi.rows, pi, sigma)


def coend_bimodule(a: Algebra, h: MultiBimodule, variable: int) -> tuple[MultiBimodule, Quotient]:
    """Apply the ordinary coend in one variable; the other variables descend."""
    q = ordinary_coend(a, h, variable)
    acts = []
    for j, (l, r) in enumerate(h.actions):
        if j == variable:
            continue
        acts.append(([q.pi @ x @ q.sigma for x in l], [q.pi @ x @ q.sigma for x in r]))
    extra = [[q.pi @ x @ q.sigma for x in e] for e in h.extra]
    return MultiBimodule(a, q.dim, acts, name=f"{h.name}/[A,-]_{variable}", extra=extra), q


def hochschild_literal(a: Algebra, h: MultiBimodule, N: int) -> ChainComplex:
    """normalize(cyclic_bar(...)) for a single-variable bimodule."""
    return normalize(cyclic_bar(a, h, N))
