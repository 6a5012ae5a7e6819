"""Exact matrices over finite fields with row-reduction services.

Matrices are stored dense (``numpy.int64``) or sparse (``scipy.sparse`` CSR)
over the element encoding of :mod:`hochblocks.field`.  Sparse storage is used
whenever the density is below :data:`DENSITY_THRESHOLD`.  Extension-field
matrices are always dense; the heavy machinery (bar complexes) only runs over
prime fields.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .field import FieldSpec

DENSITY_THRESHOLD = 0.25
DENSE_ELIM_LIMIT = 2_000_000  # rows*cols above which sparse elimination is always used
SPARSE_ELIM_MIN = 40_000  # sparse inputs this large and this thin skip densification
SPARSE_ELIM_DENSITY = 0.05


class FieldMismatch(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


def _check_field(a: "Mat", b: "Mat") -> None:
    if a.field != b.field:
        raise FieldMismatch(f"{a.field} vs {b.field}")


class Mat:
    """Immutable matrix over a finite field."""

    __slots__ = ("field", "rows", "cols", "_dense", "_sparse")

    def __init__(self, field: FieldSpec, data, *, copy: bool = False):
        self.field = field
        if sp.issparse(data) and field.k > 1:
            data = data.toarray()
        if sp.issparse(data):
            s = sp.csr_matrix(data, dtype=np.int64, copy=True)
            s.data %= field.p
            s.eliminate_zeros()
            self.rows, self.cols = s.shape
            self._sparse, self._dense = s, None
        else:
            d = np.array(data, dtype=np.int64)
            if d.ndim != 2:
                d = d.reshape(d.shape[0] if d.ndim else 0, -1)
            if field.k == 1:
                d %= field.p
            self.rows, self.cols = d.shape
            self._dense, self._sparse = d, None
        for arr in (self._dense,):
            if arr is not None:
                arr.setflags(write=False)

    # -- constructors -----------------------------------------------------
    @classmethod
    def zeros(cls, field: FieldSpec, rows: int, cols: int, sparse: bool = True) -> "Mat":
        if sparse and field.k == 1:
            return cls(field, sp.csr_matrix((rows, cols), dtype=np.int64))
        return cls(field, np.zeros((rows, cols), dtype=np.int64))

    @classmethod
    def identity(cls, field: FieldSpec, n: int, sparse: bool = True) -> "Mat":
        if sparse and field.k == 1:
            return cls(field, sp.identity(n, dtype=np.int64, format="csr"))
        return cls(field, np.eye(n, dtype=np.int64))

    @classmethod
    def from_entries(cls, field: FieldSpec, rows: int, cols: int,
                     entries: Iterable[tuple[int, int, int]]) -> "Mat":
        """Build from (row, col, value) triples; repeated coordinates add up."""
        r, c, v = [], [], []
        for i, j, x in entries:
            if not (0 <= i < rows and 0 <= j < cols):
                raise ShapeMismatch(f"entry ({i},{j}) outside {rows}x{cols}")
            r.append(i)
            c.append(j)
            v.append(x)
        if field.k == 1:
            m = sp.coo_matrix((np.array(v, dtype=np.int64) % field.p, (r, c)),
                              shape=(rows, cols), dtype=np.int64).tocsr()
            return cls(field, m).auto()
        d = np.zeros((rows, cols), dtype=np.int64)
        for i, j, x in zip(r, c, v):
            d[i, j] = field.add(d[i, j], x)
        return cls(field, d)

    # -- representation ---------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def is_sparse(self) -> bool:
        return self._sparse is not None

    @property
    def nnz(self) -> int:
        if self._sparse is not None:
            return int(self._sparse.nnz)
        return int(np.count_nonzero(self._dense))

    def dense(self) -> np.ndarray:
        if self._dense is not None:
            return self._dense
        return self._sparse.toarray()

    def sparse(self) -> sp.csr_matrix:
        if self._sparse is not None:
            return self._sparse
        return sp.csr_matrix(self._dense)

    def to_sparse(self) -> "Mat":
        return self if self.is_sparse or self.field.k > 1 else Mat(self.field, self.sparse())

    def to_dense(self) -> "Mat":
        return self if not self.is_sparse else Mat(self.field, self.dense())

    def auto(self) -> "Mat":
        """Pick storage by density."""
        size = self.rows * self.cols
        if self.field.k > 1 or size == 0:
            return self.to_dense()
        if self.nnz / size < DENSITY_THRESHOLD:
            return self.to_sparse()
        return self.to_dense()

    def entries(self) -> list[tuple[int, int, int]]:
        s = sp.coo_matrix(self.sparse() if self.field.k == 1 else self.dense())
        trip = sorted(zip(s.row.tolist(), s.col.tolist(), s.data.tolist()))
        return [(i, j, v) for i, j, v in trip if v]

    def column(self, j: int) -> np.ndarray:
        if self._sparse is not None:
            return self._sparse[:, j].toarray().ravel()
        return self._dense[:, j].copy()

    def __repr__(self) -> str:
        kind = "sparse" if self.is_sparse else "dense"
        return f"Mat({self.rows}x{self.cols} over {self.field}, {kind}, nnz={self.nnz})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Mat):
            return NotImplemented
        if self.field != other.field or self.shape != other.shape:
            return False
        if self.field.k == 1:
            return (self.sparse() != other.sparse()).nnz == 0
        return bool(np.array_equal(self.dense(), other.dense()))

    __hash__ = None

    def is_zero(self) -> bool:
        return self.nnz == 0

    # -- arithmetic -------------------------------------------------------
    def __matmul__(self, other: "Mat") -> "Mat":
        return compose(self, other)

    def __add__(self, other: "Mat") -> "Mat":
        _check_field(self, other)
        if self.shape != other.shape:
            raise ShapeMismatch(f"{self.shape} + {other.shape}")
        if self.field.k == 1:
            if self.is_sparse and other.is_sparse:
                return Mat(self.field, self._sparse + other._sparse)
            return Mat(self.field, self.dense() + other.dense())
        return Mat(self.field, self.field.add(self.dense(), other.dense()))

    def __neg__(self) -> "Mat":
        if self.field.k == 1:
            if self.is_sparse:
                return Mat(self.field, -self._sparse)
            return Mat(self.field, -self._dense)
        return Mat(self.field, self.field.neg(self.dense()))

    def __sub__(self, other: "Mat") -> "Mat":
        return self + (-other)

    def scale(self, c: int) -> "Mat":
        if self.field.k == 1:
            if self.is_sparse:
                return Mat(self.field, self._sparse * int(c))
            return Mat(self.field, self._dense * int(c))
        return Mat(self.field, self.field.mul(self.dense(), int(c)))

    @property
    def T(self) -> "Mat":
        return transpose(self)

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Matrix-vector (or matrix-matrix with ndarray) product."""
        if self.field.k == 1:
            if self.is_sparse:
                return np.asarray(self._sparse @ v) % self.field.p
            return (self._dense @ v) % self.field.p
        return _ext_matmul(self.field, self.dense(), np.asarray(v).reshape(self.cols, -1)).reshape(
            (self.rows,) + np.asarray(v).shape[1:])

    # -- serialization ----------------------------------------------------
    def to_json(self) -> dict:
        f = self.field
        return {
            "field": f.to_json(),
            "rows": self.rows,
            "cols": self.cols,
            "entries": [[i, j, *f.coords(v)] for i, j, v in self.entries()],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Mat":
        f = FieldSpec.from_json(obj["field"])
        ents = [(int(e[0]), int(e[1]), f.element(e[2:])) for e in obj["entries"]]
        return cls.from_entries(f, int(obj["rows"]), int(obj["cols"]), ents)


# -- products ---------------------------------------------------------------

def _ext_matmul(f: FieldSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    for k in range(a.shape[1]):
        out = f.add(out, f.mul(a[:, k][:, None], b[k][None, :]))
    return out


def compose(a: Mat, b: Mat) -> Mat:
    """Exact product a·b."""
    _check_field(a, b)
    if a.cols != b.rows:
        raise ShapeMismatch(f"compose {a.shape} with {b.shape}")
    f = a.field
    if f.k > 1:
        return Mat(f, _ext_matmul(f, a.dense(), b.dense()))
    if a.is_sparse and b.is_sparse:
        return Mat(f, a._sparse @ b._sparse).auto()
    if a.is_sparse or b.is_sparse:
        return Mat(f, np.asarray(a.sparse() @ b.dense() if a.is_sparse else a.dense() @ b.sparse())).auto()
    if a.rows and b.cols and a.cols > 4096:
        # chunk to keep int64 accumulation exact
        return Mat(f, _chunked_matmul(a.dense(), b.dense(), f.p))
    return Mat(f, a.dense() @ b.dense()).auto()


def _chunked_matmul(a: np.ndarray, b: np.ndarray, p: int, step: int = 4096) -> np.ndarray:
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    for s in range(0, a.shape[1], step):
        out = (out + a[:, s:s + step] @ b[s:s + step]) % p
    return out


def kron(a: Mat, b: Mat) -> Mat:
    """Kronecker product, the matrix of a ⊗ b."""
    _check_field(a, b)
    f = a.field
    if f.k > 1:
        ad, bd = a.dense(), b.dense()
        out = f.mul(ad[:, None, :, None], bd[None, :, None, :])
        return Mat(f, out.reshape(a.rows * b.rows, a.cols * b.cols))
    return Mat(f, sp.kron(a.sparse(), b.sparse(), format="csr")).auto()


def transpose(m: Mat) -> Mat:
    if m.is_sparse:
        return Mat(m.field, m._sparse.T.tocsr())
    return Mat(m.field, m._dense.T.copy())


def hstack(mats: Sequence[Mat], field: FieldSpec | None = None, rows: int | None = None) -> Mat:
    if not mats:
        return Mat.zeros(field, rows or 0, 0)
    f = mats[0].field
    if f.k > 1:
        return Mat(f, np.hstack([m.dense() for m in mats]))
    return Mat(f, sp.hstack([m.sparse() for m in mats], format="csr")).auto()


def vstack(mats: Sequence[Mat], field: FieldSpec | None = None, cols: int | None = None) -> Mat:
    if not mats:
        return Mat.zeros(field, 0, cols or 0)
    f = mats[0].field
    if f.k > 1:
        return Mat(f, np.vstack([m.dense() for m in mats]))
    return Mat(f, sp.vstack([m.sparse() for m in mats], format="csr")).auto()


def block_diag(mats: Sequence[Mat]) -> Mat:
    f = mats[0].field
    if f.k > 1:
        rows = sum(m.rows for m in mats)
        cols = sum(m.cols for m in mats)
        out = np.zeros((rows, cols), dtype=np.int64)
        r = c = 0
        for m in mats:
            out[r:r + m.rows, c:c + m.cols] = m.dense()
            r += m.rows
            c += m.cols
        return Mat(f, out)
    return Mat(f, sp.block_diag([m.sparse() for m in mats], format="csr")).auto()


# -- elimination ------------------------------------------------------------

def _dense_rref(f: FieldSpec, a: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form; pivot = first nonzero row in column order."""
    m = np.array(a, dtype=np.int64, copy=True)
    rows, cols = m.shape
    pivots: list[int] = []
    r = 0
    prime = f.k == 1
    p = f.p
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(m[r:, c])[0]
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            m[[r, i]] = m[[i, r]]
        piv = int(m[r, c])
        if prime:
            m[r] = (m[r] * pow(piv, -1, p)) % p
            col = m[:, c].copy()
            col[r] = 0
            hit = np.nonzero(col)[0]
            if hit.size:
                m[hit] = (m[hit] - np.outer(col[hit], m[r])) % p
        else:
            m[r] = f.mul(m[r], int(f.inv(piv)))
            col = m[:, c].copy()
            col[r] = 0
            for h in np.nonzero(col)[0]:
                m[h] = f.sub(m[h], f.mul(m[r], int(col[h])))
        pivots.append(c)
        r += 1
    return m, pivots


def rref(m: Mat) -> tuple[Mat, int, list[int]]:
    """Row-reduced echelon form, rank and pivot columns."""
    if _use_sparse(m):
        piv_rows = _sparse_rref_rows(m)
        pivots = sorted(piv_rows)
        ents = [(r, c, v) for r, pc in enumerate(pivots) for c, v in piv_rows[pc].items()]
        red = Mat.from_entries(m.field, m.rows, m.cols, ents)
        return red, len(pivots), pivots
    red, pivots = _dense_rref(m.field, m.dense())
    return Mat(m.field, red).auto(), len(pivots), pivots


def _use_sparse(m: Mat) -> bool:
    if m.field.k != 1:
        return False
    size = m.rows * m.cols
    if size > DENSE_ELIM_LIMIT:
        return True
    return m.is_sparse and size > SPARSE_ELIM_MIN and m.nnz < SPARSE_ELIM_DENSITY * size


def _rows_of(m: Mat) -> list[dict[int, int]]:
    s = m.sparse()
    out = []
    for i in range(s.shape[0]):
        lo, hi = s.indptr[i], s.indptr[i + 1]
        if hi > lo:
            out.append(dict(zip(s.indices[lo:hi].tolist(), s.data[lo:hi].tolist())))
    return out


def _sparse_echelon(rows: Iterable[dict[int, int]], p: int) -> dict[int, dict[int, int]]:
    """Echelon rows keyed by leading (minimal) column, normalized to 1."""
    piv: dict[int, dict[int, int]] = {}
    for row in rows:
        r = {c: v % p for c, v in row.items() if v % p}
        while r:
            c = min(r)
            prow = piv.get(c)
            if prow is None:
                inv = pow(r[c], -1, p)
                piv[c] = {j: (v * inv) % p for j, v in r.items()}
                break
            fac = r[c]
            for j, v in prow.items():
                nv = (r.get(j, 0) - fac * v) % p
                if nv:
                    r[j] = nv
                else:
                    r.pop(j, None)
    return piv


def _sparse_rref_rows(m: Mat) -> dict[int, dict[int, int]]:
    p = m.field.p
    piv = _sparse_echelon(_rows_of(m), p)
    # back substitution, highest pivot first
    for c in sorted(piv, reverse=True):
        prow = piv[c]
        for c2 in sorted(piv):
            if c2 >= c:
                break
            r = piv[c2]
            fac = r.get(c)
            if fac:
                for j, v in prow.items():
                    nv = (r.get(j, 0) - fac * v) % p
                    if nv:
                        r[j] = nv
                    else:
                        r.pop(j, None)
    return piv


def _bitset_rank(vectors: Iterable[int]) -> int:
    piv: dict[int, int] = {}
    for v in vectors:
        while v:
            top = v.bit_length() - 1
            w = piv.get(top)
            if w is None:
                piv[top] = v
                break
            v ^= w
    return len(piv)


def _gf2_rank_sparse(s: sp.csr_matrix) -> int:
    # vectors along the longer axis, bits along the shorter one
    if s.shape[0] <= s.shape[1]:
        s = s.T.tocsr()
    vecs = []
    for i in range(s.shape[0]):
        idx = s.indices[s.indptr[i]:s.indptr[i + 1]][s.data[s.indptr[i]:s.indptr[i + 1]] % 2 == 1]
        v = 0
        for j in idx.tolist():
            v |= 1 << j
        if v:
            vecs.append(v)
    return _bitset_rank(vecs)


def rank(m: Mat) -> int:
    if m.rows == 0 or m.cols == 0 or m.nnz == 0:
        return 0
    f = m.field
    if _use_sparse(m):
        s = m.sparse()
        if f.p == 2:
            return _gf2_rank_sparse(s)
        if s.shape[0] > s.shape[1]:
            s = s.T.tocsr()
        return len(_sparse_echelon(_rows_of(Mat(f, s)), f.p))
    return len(_dense_rref(f, m.dense())[1])


def kernel_basis(m: Mat) -> list[np.ndarray]:
    """Basis of the right null space as a list of column vectors."""
    f = m.field
    n = m.cols
    if m.rows == 0 or m.nnz == 0:
        return [np.eye(n, dtype=np.int64)[:, j] for j in range(n)]
    if _use_sparse(m):
        piv = _sparse_rref_rows(m)
        free = [j for j in range(n) if j not in piv]
        out = []
        p = f.p
        for j in free:
            v = np.zeros(n, dtype=np.int64)
            v[j] = 1
            out.append(v)
        col_of = {j: k for k, j in enumerate(free)}
        for c, row in piv.items():
            for j, val in row.items():
                if j != c:
                    out[col_of[j]][c] = (-val) % p
        return out
    red, pivots = _dense_rref(f, m.dense())
    pivset = set(pivots)
    out = []
    for j in range(n):
        if j in pivset:
            continue
        v = np.zeros(n, dtype=np.int64)
        v[j] = 1
        for r, c in enumerate(pivots):
            v[c] = f.neg(red[r, j])
        out.append(v)
    return out


def kernel_matrix(m: Mat) -> Mat:
    """Kernel basis as the columns of a matrix."""
    vecs = kernel_basis(m)
    if not vecs:
        return Mat.zeros(m.field, m.cols, 0, sparse=False)
    return Mat(m.field, np.stack(vecs, axis=1)).auto()


def column_space(m: Mat) -> Mat:
    """Basis of the column space (pivot columns of m)."""
    if m.cols == 0 or m.nnz == 0:
        return Mat.zeros(m.field, m.rows, 0, sparse=False)
    t = transpose(m)
    if _use_sparse(t):
        piv = _sparse_echelon(_rows_of(t), m.field.p)
        ents = [(j, r, v) for r, c in enumerate(sorted(piv)) for j, v in piv[c].items()]
        return Mat.from_entries(m.field, m.rows, len(piv), ents)
    _, pivots = _dense_rref(m.field, m.dense())
    return Mat(m.field, m.dense()[:, pivots]).auto()


def solve(a: Mat, b: Mat) -> Mat:
    """Unique X with a·X = b, a of full column rank; raises if inconsistent."""
    _check_field(a, b)
    f = a.field
    aug = np.hstack([a.dense(), b.dense()])
    red, pivots = _dense_rref(f, aug)
    if any(c >= a.cols for c in pivots):
        raise ValueError("system has no solution")
    if len(pivots) != a.cols:
        raise ValueError("coefficient matrix is not of full column rank")
    return Mat(f, red[: a.cols, a.cols:]).auto()


def inverse(a: Mat) -> Mat:
    if a.rows != a.cols:
        raise ShapeMismatch("inverse of non-square matrix")
    return solve(a, Mat.identity(a.field, a.rows))


def complement_basis(sub: Mat, n: int) -> list[int]:
    """Standard basis indices completing the column space of ``sub`` to F^n."""
    f = sub.field
    aug = np.hstack([sub.dense(), np.eye(n, dtype=np.int64)]) if sub.cols else np.eye(n, dtype=np.int64)
    _, pivots = _dense_rref(f, aug)
    return [c - sub.cols for c in pivots if c >= sub.cols]


def minor_rank(m: Mat) -> int:
    """Rank from nonvanishing minors; brute force oracle for small matrices."""
    from itertools import combinations

    f = m.field
    d = m.dense()
    for r in range(min(m.rows, m.cols), 0, -1):
        for rs in combinations(range(m.rows), r):
            for cs in combinations(range(m.cols), r):
                if _det(f, d[np.ix_(rs, cs)]) != 0:
                    return r
    return 0


def _det(f: FieldSpec, a: np.ndarray) -> int:
    """Determinant by cofactor expansion along the first row."""
    n = a.shape[0]
    if n == 1:
        return int(a[0, 0])
    total = 0
    for j in range(n):
        if a[0, j] == 0:
            continue
        sub = np.delete(a[1:], j, axis=1)
        term = int(f.mul(int(a[0, j]), _det(f, sub)))
        total = int(f.add(total, term if j % 2 == 0 else f.neg(term)))
    return total
