"""Finite-dimensional Hopf algebras over prime fields and their modules.

Structure constants are kept twice: as dense numpy tensors (for building
action matrices) and as sparse term lists (for exhaustive axiom checks on basis
tuples, which would be cubic-to-sextic in the dimension if done densely).
"""
from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .exactla import Mat, kernel_basis, kron, rank, solve
from .field import FieldSpec
from .groups import FiniteGroup


class AxiomError(ValueError):
    """A structure failed one of its axioms at construction."""


class AlgebraMismatch(ValueError):
    pass


# -- reports ----------------------------------------------------------------

@dataclass
class CheckReport:
    name: str
    results: dict[str, bool] = field(default_factory=dict)
    witnesses: dict[str, object] = field(default_factory=dict)
    info: dict[str, object] = field(default_factory=dict)

    def record(self, axiom: str, ok: bool, witness=None) -> None:
        self.results[axiom] = bool(ok)
        if not ok:
            self.witnesses[axiom] = witness

    @property
    def passed(self) -> bool:
        return all(self.results.values())

    def failures(self) -> list[str]:
        return [k for k, v in self.results.items() if not v]

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "results": self.results,
            "witnesses": {k: repr(v) for k, v in self.witnesses.items()},
            "info": {k: (v if isinstance(v, (int, str, bool, float, list)) else repr(v))
                     for k, v in self.info.items()},
        }


# -- sparse tensor elements -------------------------------------------------

Tensor = dict  # maps tuple of basis indices -> coefficient


def _clean(t: Tensor, p: int) -> Tensor:
    return {k: v % p for k, v in t.items() if v % p}


def _tensor_from_dense(arr: np.ndarray) -> Tensor:
    idx = np.nonzero(arr)
    return {tuple(int(i) for i in key): int(arr[key]) for key in zip(*idx)}


def _tensor_to_dense(t: Tensor, shape: tuple[int, ...]) -> np.ndarray:
    out = np.zeros(shape, dtype=np.int64)
    for k, v in t.items():
        out[k] = v
    return out


# -- algebras ---------------------------------------------------------------

class Algebra:
    """Associative unital algebra given by structure constants."""

    def __init__(self, field_: FieldSpec, mult: np.ndarray, unit: np.ndarray,
                 labels: Sequence[str] | None = None, *,
                 idempotents: Sequence[np.ndarray] | None = None,
                 generators: Sequence[np.ndarray] | None = None,
                 name: str = "A", verify: bool = True):
        if field_.k != 1:
            raise NotImplementedError("algebras are supported over prime fields only")
        self.field = field_
        self.p = field_.p
        self.mult = np.asarray(mult, dtype=np.int64) % self.p
        self.dim = self.mult.shape[0]
        if self.mult.shape != (self.dim,) * 3:
            raise ValueError("multiplication tensor must have shape (d, d, d)")
        self.unit = np.asarray(unit, dtype=np.int64) % self.p
        self.labels = tuple(labels) if labels is not None else tuple(f"e{i}" for i in range(self.dim))
        self.name = name
        self.idempotents = [np.asarray(e, dtype=np.int64) % self.p for e in idempotents] if idempotents else [self.unit]
        basis = np.eye(self.dim, dtype=np.int64)
        self.generators = [np.asarray(g, dtype=np.int64) % self.p for g in generators] if generators else list(basis)
        if verify:
            rep = check_algebra_axioms(self)
            if not rep.passed:
                raise AxiomError(f"{name}: failed {rep.failures()} witness {rep.witnesses}")

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name}, dim={self.dim}, over {self.field})"

    @cached_property
    def mult_terms(self) -> dict[tuple[int, int], list[tuple[int, int]]]:
        terms: dict[tuple[int, int], list[tuple[int, int]]] = defaultdict(list)
        for i, j, k in zip(*np.nonzero(self.mult)):
            terms[(int(i), int(j))].append((int(k), int(self.mult[i, j, k])))
        return dict(terms)

    def multiply(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.einsum("i,j,ijk->k", x, y, self.mult) % self.p

    def basis_vector(self, i: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=np.int64)
        v[i] = 1
        return v

    @cached_property
    def left_mult(self) -> list[Mat]:
        """Matrices of x -> e_i x."""
        return [Mat(self.field, self.mult[i].T).auto() for i in range(self.dim)]

    @cached_property
    def right_mult(self) -> list[Mat]:
        """Matrices of x -> x e_i."""
        return [Mat(self.field, self.mult[:, i, :].T).auto() for i in range(self.dim)]

    def left_mult_by(self, x: np.ndarray) -> Mat:
        return Mat(self.field, np.einsum("i,ijk->kj", x, self.mult) % self.p).auto()

    def right_mult_by(self, x: np.ndarray) -> Mat:
        return Mat(self.field, np.einsum("j,ijk->ki", x, self.mult) % self.p).auto()

    def mul_tensors(self, x: Tensor, y: Tensor) -> Tensor:
        """Factorwise product of elements of A^{⊗n}."""
        out: dict = defaultdict(int)
        mt = self.mult_terms
        for kx, cx in x.items():
            for ky, cy in y.items():
                lists = [mt.get((a, b)) for a, b in zip(kx, ky)]
                if any(t is None for t in lists):
                    continue
                c0 = cx * cy
                for combo in itertools.product(*lists):
                    c = c0
                    for _, cc in combo:
                        c *= cc
                    out[tuple(k for k, _ in combo)] += c
        return _clean(out, self.p)

    def is_commutative(self) -> bool:
        return bool(np.array_equal(self.mult, self.mult.transpose(1, 0, 2)))

    def to_json(self) -> dict:
        return {
            "kind": "algebra",
            "name": self.name,
            "field": self.field.to_json(),
            "basis": list(self.labels),
            "mult": [[int(i), int(j), int(k), int(c)] for (i, j), ts in sorted(self.mult_terms.items()) for k, c in ts],
            "unit": self.unit.tolist(),
            "idempotents": [e.tolist() for e in self.idempotents],
        }


def check_algebra_axioms(a: Algebra) -> CheckReport:
    rep = CheckReport(f"algebra {a.name}")
    p, d = a.p, a.dim
    # associativity on all basis triples: (e_i e_j) e_k = e_i (e_j e_k)
    left = np.einsum("ijl,lkm->ijkm", a.mult, a.mult) % p
    right = np.einsum("jkl,ilm->ijkm", a.mult, a.mult) % p
    bad = np.argwhere(left != right)
    rep.record("associativity", bad.size == 0, tuple(bad[0][:3]) if bad.size else None)
    ul = np.einsum("i,ijk->jk", a.unit, a.mult) % p
    ur = np.einsum("j,ijk->ik", a.unit, a.mult) % p
    eye = np.eye(d, dtype=np.int64)
    rep.record("left unit", np.array_equal(ul, eye), np.argwhere(ul != eye)[:1].tolist())
    rep.record("right unit", np.array_equal(ur, eye), np.argwhere(ur != eye)[:1].tolist())
    if a.idempotents:
        total = sum(a.idempotents) % p
        ok = np.array_equal(total, a.unit)
        for (i, e), (j, f) in itertools.product(enumerate(a.idempotents), repeat=2):
            prod = a.multiply(e, f)
            want = e if i == j else np.zeros(d, dtype=np.int64)
            if not np.array_equal(prod, want):
                ok = False
        rep.record("orthogonal idempotents", ok)
    return rep


# -- Hopf algebras ----------------------------------------------------------

class HopfAlgebra(Algebra):
    def __init__(self, field_: FieldSpec, mult, unit, comult, counit, antipode,
                 labels=None, *, rmatrix=None, ribbon=None, verify: bool = True, **kw):
        self.comult = np.asarray(comult, dtype=np.int64) % field_.p
        self.counit = np.asarray(counit, dtype=np.int64) % field_.p
        self.antipode = np.asarray(antipode, dtype=np.int64) % field_.p  # column i = S(e_i)
        self.rmatrix = None if rmatrix is None else np.asarray(rmatrix, dtype=np.int64) % field_.p
        self.ribbon = None if ribbon is None else np.asarray(ribbon, dtype=np.int64) % field_.p
        super().__init__(field_, mult, unit, labels, verify=False, **kw)
        if verify:
            for check in (check_hopf_axioms, check_quasitriangular, check_ribbon):
                r = check(self)
                if r.results and not r.passed:
                    raise AxiomError(f"{self.name}: {r.name} failed {r.failures()} witness {r.witnesses}")

    @cached_property
    def comult_terms(self) -> list[Tensor]:
        return [_tensor_from_dense(self.comult[i]) for i in range(self.dim)]

    def S(self, x: np.ndarray) -> np.ndarray:
        return (self.antipode @ x) % self.p

    @cached_property
    def antipode_mat(self) -> Mat:
        return Mat(self.field, self.antipode).auto()

    def delta(self, x: np.ndarray) -> np.ndarray:
        return np.einsum("i,ijk->jk", x, self.comult) % self.p

    def eps(self, x: np.ndarray) -> int:
        return int(x @ self.counit % self.p)

    def _vec_tensor(self, x: np.ndarray) -> Tensor:
        return {(int(i),): int(x[i]) for i in np.nonzero(x)[0]}

    # derived ribbon data
    @cached_property
    def r_tensor(self) -> Tensor:
        return _tensor_from_dense(self.rmatrix)

    @cached_property
    def monodromy(self) -> np.ndarray:
        """R21 R as a (d, d) array."""
        r21 = {(k[1], k[0]): v for k, v in self.r_tensor.items()}
        return _tensor_to_dense(self.mul_tensors(r21, self.r_tensor), (self.dim, self.dim))

    @cached_property
    def monodromy_inverse(self) -> np.ndarray:
        """(R21 R)^{-1} = R^{-1} R21^{-1} with R^{-1} = (S ⊗ id)R, as a (d, d) array."""
        rinv: Tensor = defaultdict(int)
        for (i, j), c in self.r_tensor.items():
            s = self.S(self.basis_vector(i))
            for k in np.nonzero(s)[0]:
                rinv[(int(k), j)] += c * int(s[k])
        rinv = _clean(dict(rinv), self.p)
        r21inv = {(j, i): c for (i, j), c in rinv.items()}
        return _tensor_to_dense(self.mul_tensors(rinv, r21inv), (self.dim, self.dim))

    @cached_property
    def drinfeld_element(self) -> np.ndarray:
        """u = sum S(R2) R1."""
        u = np.zeros(self.dim, dtype=np.int64)
        for (i, j), c in self.r_tensor.items():
            u = (u + c * self.multiply(self.S(self.basis_vector(j)), self.basis_vector(i))) % self.p
        return u

    def drinfeld_map(self) -> Mat:
        """Matrix of A* -> A, alpha -> (alpha ⊗ id)(R21 R), in dual/primal bases."""
        return Mat(self.field, self.monodromy.T).auto()

    def to_json(self) -> dict:
        out = super().to_json()
        out.update({
            "kind": "hopf",
            "comult": [[int(i), int(j), int(k), int(self.comult[i, j, k])] for i, j, k in zip(*np.nonzero(self.comult))],
            "counit": self.counit.tolist(),
            "antipode": [[int(x) for x in e] for e in Mat(self.field, self.antipode).to_json()["entries"]],
        })
        if self.rmatrix is not None:
            out["rmatrix"] = [[int(i), int(j), int(self.rmatrix[i, j])] for i, j in zip(*np.nonzero(self.rmatrix))]
        if self.ribbon is not None:
            out["ribbon"] = self.ribbon.tolist()
        return out


def hopf_from_json(obj: dict) -> HopfAlgebra | Algebra:
    f = FieldSpec.from_json(obj["field"])
    d = len(obj["basis"])
    mult = np.zeros((d, d, d), dtype=np.int64)
    for i, j, k, c in obj["mult"]:
        mult[i, j, k] = c
    unit = np.array(obj["unit"])
    idem = [np.array(e) for e in obj.get("idempotents", [])] or None
    if obj.get("kind", "hopf") == "algebra":
        return Algebra(f, mult, unit, obj["basis"], idempotents=idem, name=obj.get("name", "A"))
    comult = np.zeros((d, d, d), dtype=np.int64)
    for i, j, k, c in obj["comult"]:
        comult[i, j, k] = c
    anti = np.zeros((d, d), dtype=np.int64)
    for e in obj["antipode"]:
        anti[e[0], e[1]] = e[2]
    rmat = None
    if "rmatrix" in obj:
        rmat = np.zeros((d, d), dtype=np.int64)
        for i, j, c in obj["rmatrix"]:
            rmat[i, j] = c
    ribbon = np.array(obj["ribbon"]) if "ribbon" in obj else None
    return HopfAlgebra(f, mult, unit, comult, np.array(obj["counit"]), anti, obj["basis"],
                       rmatrix=rmat, ribbon=ribbon, idempotents=idem, name=obj.get("name", "H"))


def check_hopf_axioms(h: HopfAlgebra) -> CheckReport:
    rep = check_algebra_axioms(h)
    rep.name = f"hopf {h.name}"
    p, d = h.p, h.dim
    cm = h.comult_terms
    # coassociativity
    bad = None
    for i in range(d):
        lhs: dict = defaultdict(int)
        rhs: dict = defaultdict(int)
        for (j, k), c in cm[i].items():
            for (a, b), c2 in cm[j].items():
                lhs[(a, b, k)] += c * c2
            for (a, b), c2 in cm[k].items():
                rhs[(j, a, b)] += c * c2
        if _clean(lhs, p) != _clean(rhs, p):
            bad = i
            break
    rep.record("coassociativity", bad is None, bad)
    # counit
    bad = None
    for i in range(d):
        left = np.zeros(d, dtype=np.int64)
        right = np.zeros(d, dtype=np.int64)
        for (j, k), c in cm[i].items():
            left[k] += c * h.counit[j]
            right[j] += c * h.counit[k]
        e = h.basis_vector(i)
        if not (np.array_equal(left % p, e) and np.array_equal(right % p, e)):
            bad = i
            break
    rep.record("counit", bad is None, bad)
    # Δ and ε are algebra maps
    bad = None
    bad_eps = None
    for (i, j) in itertools.product(range(d), repeat=2):
        prod = h.mul_tensors(cm[i], cm[j])
        want: dict = defaultdict(int)
        for k, c in h.mult_terms.get((i, j), []):
            for key, c2 in cm[k].items():
                want[key] += c * c2
        if _clean(want, p) != prod:
            bad = bad or (i, j)
        eps_prod = sum(c * h.counit[k] for k, c in h.mult_terms.get((i, j), [])) % p
        if eps_prod != (h.counit[i] * h.counit[j]) % p:
            bad_eps = bad_eps or (i, j)
        if bad and bad_eps:
            break
    rep.record("comultiplication multiplicative", bad is None, bad)
    rep.record("counit multiplicative", bad_eps is None, bad_eps)
    d1 = _clean(_tensor_from_dense(h.delta(h.unit)), p)
    one_one = _clean(_tensor_from_dense(np.outer(h.unit, h.unit)), p)
    rep.record("comultiplication unital", d1 == one_one)
    rep.record("counit unital", h.eps(h.unit) == 1)
    # antipode: m(S ⊗ id)Δ = η ε = m(id ⊗ S)Δ
    bad = None
    for i in range(d):
        left = np.zeros(d, dtype=np.int64)
        right = np.zeros(d, dtype=np.int64)
        for (j, k), c in cm[i].items():
            left += c * h.multiply(h.antipode[:, j], h.basis_vector(k))
            right += c * h.multiply(h.basis_vector(j), h.antipode[:, k])
        want = (h.counit[i] * h.unit) % p
        if not (np.array_equal(left % p, want) and np.array_equal(right % p, want)):
            bad = i
            break
    rep.record("antipode", bad is None, bad)
    return rep


def _apply_comult_factor(h: HopfAlgebra, t: Tensor, pos: int) -> Tensor:
    out: dict = defaultdict(int)
    for key, c in t.items():
        for (a, b), c2 in h.comult_terms[key[pos]].items():
            out[key[:pos] + (a, b) + key[pos + 1:]] += c * c2
    return _clean(out, h.p)


def _embed(t: Tensor, positions: tuple[int, ...], n: int, unit_terms: Tensor) -> Tensor:
    """Place a tensor into the given legs of an n-fold tensor; other legs get the unit."""
    out: dict = defaultdict(int)
    free = [i for i in range(n) if i not in positions]
    units = list(unit_terms.items())
    for key, c in t.items():
        for combo in itertools.product(units, repeat=len(free)):
            full = [0] * n
            cc = c
            for pos, k in zip(positions, key):
                full[pos] = k
            for pos, (uk, uc) in zip(free, combo):
                full[pos] = uk[0]
                cc *= uc
            out[tuple(full)] += cc
    return dict(out)


def check_quasitriangular(h: HopfAlgebra) -> CheckReport:
    rep = CheckReport(f"quasitriangular {h.name}")
    if h.rmatrix is None:
        return rep
    p, d = h.p, h.dim
    R = h.r_tensor
    # invertibility with R^{-1} = (S ⊗ id) R
    s_r: dict = defaultdict(int)
    for (i, j), c in R.items():
        for k in np.nonzero(h.antipode[:, i])[0]:
            s_r[(int(k), j)] += c * int(h.antipode[k, i])
    s_r = _clean(s_r, p)
    one = _clean(_tensor_from_dense(np.outer(h.unit, h.unit)), p)
    rep.record("R invertible", h.mul_tensors(R, s_r) == one and h.mul_tensors(s_r, R) == one)
    # R Δ(a) = Δ^op(a) R
    bad = None
    for i in range(d):
        delta = h.comult_terms[i]
        dop = {(k[1], k[0]): v for k, v in delta.items()}
        if h.mul_tensors(R, delta) != h.mul_tensors(dop, R):
            bad = i
            break
    rep.record("intertwining", bad is None, bad)
    unit_t = {(int(k),): int(h.unit[k]) for k in np.nonzero(h.unit)[0]}
    r13 = _embed(R, (0, 2), 3, unit_t)
    r23 = _embed(R, (1, 2), 3, unit_t)
    r12 = _embed(R, (0, 1), 3, unit_t)
    rep.record("hexagon (Δ⊗id)R = R13 R23", _apply_comult_factor(h, R, 0) == h.mul_tensors(r13, r23))
    rep.record("hexagon (id⊗Δ)R = R13 R12", _apply_comult_factor(h, R, 1) == h.mul_tensors(r13, r12))
    return rep


def check_ribbon(h: HopfAlgebra) -> CheckReport:
    rep = CheckReport(f"ribbon {h.name}")
    if h.ribbon is None or h.rmatrix is None:
        return rep
    p = h.p
    v = h.ribbon
    central = all(np.array_equal(h.multiply(v, h.basis_vector(i)), h.multiply(h.basis_vector(i), v))
                  for i in range(h.dim))
    rep.record("central", central)
    rep.record("S(v) = v", np.array_equal(h.S(v), v))
    rep.record("counit(v) = 1", h.eps(v) == 1)
    u = h.drinfeld_element
    rep.record("v^2 = u S(u)", np.array_equal(h.multiply(v, v), h.multiply(u, h.S(u))))
    try:
        vinv = algebra_inverse(h, v)
        rep.record("v invertible", True)
    except ValueError:
        rep.record("v invertible", False)
        return rep
    # Δ(v) = (R21 R)^{-1} (v ⊗ v)  <=>  (R21 R) Δ(v) = v ⊗ v
    q = _tensor_from_dense(h.monodromy)
    dv = _tensor_from_dense(h.delta(v))
    vv = _clean(_tensor_from_dense(np.outer(v, v)), p)
    rep.record("Δ(v) = (R21R)^-1 (v⊗v)", h.mul_tensors(q, dv) == vv)
    rep.info["inverse"] = vinv.tolist()
    return rep


def check_factorizable(h: HopfAlgebra) -> CheckReport:
    rep = CheckReport(f"factorizable {h.name}")
    if h.rmatrix is None:
        rep.record("R-matrix present", False)
        return rep
    r = rank(h.drinfeld_map())
    rep.info["drinfeld_rank"] = r
    rep.record("Drinfeld map bijective", r == h.dim, r)
    return rep


def check_all(h: HopfAlgebra) -> dict[str, CheckReport]:
    return {
        "hopf": check_hopf_axioms(h),
        "quasitriangular": check_quasitriangular(h),
        "ribbon": check_ribbon(h),
        "factorizable": check_factorizable(h),
    }


def algebra_inverse(a: Algebra, x: np.ndarray) -> np.ndarray:
    """Two-sided inverse of x; raises ValueError if x is not a unit."""
    y = solve(a.left_mult_by(x), Mat(a.field, a.unit.reshape(-1, 1)))
    y = y.dense().ravel()
    if not np.array_equal(a.multiply(y, x), a.unit):
        raise ValueError("element has only a one-sided inverse")
    return y


# -- Drinfeld doubles -------------------------------------------------------

def drinfeld_double(g: FiniteGroup, field_: FieldSpec | int, *, ribbon: str = "drinfeld",
                    verify: bool = True) -> HopfAlgebra:
    """D(G) on k(G) ⊗ k[G] with basis δ_a⊗b stored at index a*|G| + b.

    ``ribbon='drinfeld'`` uses the Drinfeld element u as ribbon element;
    ``ribbon='inverse'`` uses u^{-1} (which fails the ribbon axioms unless
    the monodromy squares to one).
    """
    f = field_ if isinstance(field_, FieldSpec) else FieldSpec(int(field_))
    n = g.order
    d = n * n
    idx = lambda a, b: a * n + b  # noqa: E731
    e = g.identity
    mult = np.zeros((d, d, d), dtype=np.int64)
    comult = np.zeros((d, d, d), dtype=np.int64)
    counit = np.zeros(d, dtype=np.int64)
    anti = np.zeros((d, d), dtype=np.int64)
    for a, b in itertools.product(range(n), repeat=2):
        for c, dd in itertools.product(range(n), repeat=2):
            if a == g.conj(b, c):
                mult[idx(a, b), idx(c, dd), idx(a, g.mul(b, dd))] = 1
        for x in range(n):
            y = g.mul(g.inv(x), a)
            comult[idx(a, b), idx(x, b), idx(y, b)] = 1
        counit[idx(a, b)] = 1 if a == e else 0
        binv = g.inv(b)
        anti[idx(g.mul(g.mul(binv, g.inv(a)), b), binv), idx(a, b)] = 1
    unit = np.zeros(d, dtype=np.int64)
    for a in range(n):
        unit[idx(a, e)] = 1
    rmat = np.zeros((d, d), dtype=np.int64)
    for gg in range(n):
        for a in range(n):
            rmat[idx(gg, e), idx(a, gg)] = 1
    labels = [f"d{g.elements[a]}|{g.elements[b]}" for a in range(n) for b in range(n)]
    idem = [np.eye(d, dtype=np.int64)[idx(x, e)] for x in range(n)]
    gens = list(idem)
    for s in g.generators:
        v = np.zeros(d, dtype=np.int64)
        for a in range(n):
            v[idx(a, s)] = 1
        gens.append(v)
    h = HopfAlgebra(f, mult, unit, comult, counit, anti, labels, rmatrix=rmat, verify=False,
                    idempotents=idem, generators=gens, name=f"D({g.name})/{f}")
    u = h.drinfeld_element
    if ribbon == "drinfeld":
        h.ribbon = u
    elif ribbon == "inverse":
        h.ribbon = algebra_inverse(h, u)
    else:
        raise ValueError(f"unknown ribbon choice {ribbon!r}")
    h.group = g
    if verify:
        reports = check_all(h)
        for name, rep in reports.items():
            if not rep.passed:
                raise AxiomError(f"{h.name}: {name} failed {rep.failures()}")
        h.reports = reports
    return h


def group_algebra(g: FiniteGroup, field_: FieldSpec | int, *, rmatrix: bool = True) -> HopfAlgebra:
    """k[G] with the trivial R-matrix 1⊗1 (abelian G)."""
    f = field_ if isinstance(field_, FieldSpec) else FieldSpec(int(field_))
    n = g.order
    mult = np.zeros((n, n, n), dtype=np.int64)
    comult = np.zeros((n, n, n), dtype=np.int64)
    anti = np.zeros((n, n), dtype=np.int64)
    for a, b in itertools.product(range(n), repeat=2):
        mult[a, b, g.mul(a, b)] = 1
    for a in range(n):
        comult[a, a, a] = 1
        anti[g.inv(a), a] = 1
    unit = np.eye(n, dtype=np.int64)[g.identity]
    counit = np.ones(n, dtype=np.int64)
    r = np.outer(unit, unit) if rmatrix else None
    h = HopfAlgebra(f, mult, unit, comult, counit, anti, [f"g{x}" for x in g.elements],
                    rmatrix=r, ribbon=unit if rmatrix else None, name=f"{f}[{g.name}]")
    h.group = g
    return h


def trivial_hopf(field_: FieldSpec | int) -> HopfAlgebra:
    f = field_ if isinstance(field_, FieldSpec) else FieldSpec(int(field_))
    one = np.ones((1, 1, 1), dtype=np.int64)
    return HopfAlgebra(f, one, [1], one, [1], [[1]], ["1"], rmatrix=[[1]], ribbon=[1], name=f"{f}")


def truncated_polynomial(field_: FieldSpec | int, n: int = 2) -> Algebra:
    """k[u]/u^n with basis 1, u, ..., u^{n-1}."""
    f = field_ if isinstance(field_, FieldSpec) else FieldSpec(int(field_))
    mult = np.zeros((n, n, n), dtype=np.int64)
    for i, j in itertools.product(range(n), repeat=2):
        if i + j < n:
            mult[i, j, i + j] = 1
    return Algebra(f, mult, np.eye(n, dtype=np.int64)[0], [f"u^{i}" for i in range(n)], name=f"{f}[u]/u^{n}")


# -- modules ----------------------------------------------------------------

class Module:
    """Left module: ``action[i]`` is the matrix of e_i."""

    def __init__(self, algebra: Algebra, dim: int, action: Sequence[Mat], *, name: str = "M",
                 verify: bool = False):
        self.algebra = algebra
        self.dim = dim
        self.action = list(action)
        self.name = name
        if len(self.action) != algebra.dim:
            raise ValueError("need one action matrix per basis element")
        if verify:
            rep = check_module(self)
            if not rep.passed:
                raise AxiomError(f"module {name}: {rep.failures()} {rep.witnesses}")

    def act(self, x: np.ndarray) -> Mat:
        f = self.algebra.field
        acc = None
        for i in np.nonzero(x)[0]:
            term = self.action[i].sparse() * int(x[i])
            acc = term if acc is None else acc + term
        if acc is None:
            return Mat.zeros(f, self.dim, self.dim)
        return Mat(f, acc).auto()

    def __repr__(self) -> str:
        return f"Module({self.name}, dim={self.dim})"


def check_module(m: Module) -> CheckReport:
    a = m.algebra
    rep = CheckReport(f"module {m.name}")
    bad = None
    for i, j in itertools.product(range(a.dim), repeat=2):
        lhs = m.action[i] @ m.action[j]
        v = np.zeros(a.dim, dtype=np.int64)
        for k, c in a.mult_terms.get((i, j), []):
            v[k] = c
        if lhs != m.act(v):
            bad = (i, j)
            break
    rep.record("action multiplicative", bad is None, bad)
    rep.record("unit acts as identity", m.act(a.unit) == Mat.identity(a.field, m.dim))
    return rep


def regular_module(a: Algebra) -> Module:
    return Module(a, a.dim, a.left_mult, name="A")


def trivial_module(h: HopfAlgebra) -> Module:
    f = h.field
    return Module(h, 1, [Mat(f, [[int(c)]]) for c in h.counit], name="1")


def free_module(a: Algebra, mult: int) -> Module:
    """A^{⊕mult}, basis index = a_index * mult + copy."""
    if mult == 1:
        return regular_module(a)
    eye = Mat.identity(a.field, mult)
    return Module(a, a.dim * mult, [kron(L, eye) for L in a.left_mult], name=f"A^{mult}")


def module_tensor(m: Module, n: Module) -> Module:
    h = m.algebra
    if n.algebra is not h:
        raise AlgebraMismatch("modules over different algebras")
    f = h.field
    acts = []
    for i in range(h.dim):
        acc = None
        for (j, k), c in h.comult_terms[i].items():
            term = sp.kron(m.action[j].sparse(), n.action[k].sparse(), format="csr") * c
            acc = term if acc is None else acc + term
        acts.append(Mat(f, acc if acc is not None else sp.csr_matrix((m.dim * n.dim,) * 2, dtype=np.int64)).auto())
    return Module(h, m.dim * n.dim, acts, name=f"({m.name}⊗{n.name})")


def module_dual(m: Module) -> Module:
    """Left dual: (a·φ)(x) = φ(S(a)x)."""
    h = m.algebra
    acts = [m.act(h.antipode[:, i]).T for i in range(h.dim)]
    return Module(h, m.dim, acts, name=f"{m.name}*")


def coadjoint_module(h: HopfAlgebra) -> Module:
    """A* with (a·α)(b) = α(S(a1) b a2), in the dual basis."""
    f, d, p = h.field, h.dim, h.p
    acts = []
    for i in range(d):
        # matrix of b -> sum S(a1) b a2 on A; the coadjoint action is its transpose
        op = np.zeros((d, d), dtype=np.int64)
        for (j, k), c in h.comult_terms[i].items():
            left = h.left_mult_by(h.antipode[:, j]).dense()
            right = h.right_mult[k].dense()
            op = (op + c * (left @ right)) % p
        acts.append(Mat(f, op.T).auto())
    return Module(h, d, acts, name="A*coadj")


def adjoint_module(h: HopfAlgebra) -> Module:
    """A with a·b = a1 b S(a2)."""
    f, d, p = h.field, h.dim, h.p
    acts = []
    for i in range(d):
        op = np.zeros((d, d), dtype=np.int64)
        for (j, k), c in h.comult_terms[i].items():
            op = (op + c * (h.left_mult[j].dense() @ h.right_mult_by(h.antipode[:, k]).dense())) % p
        acts.append(Mat(f, op).auto())
    return Module(h, d, acts, name="A_ad")


def _diag01(a: sp.spmatrix, p: int) -> np.ndarray | None:
    """Diagonal of a, if a is diagonal with entries in {0, 1}."""
    a = a.tocoo()
    vals = a.data % p
    keep = vals != 0
    if np.any(a.row[keep] != a.col[keep]) or np.any(vals[keep] != 1):
        return None
    d = np.zeros(a.shape[0], dtype=np.int64)
    d[a.row[keep]] = 1
    return d


def _permutation(a: sp.spmatrix, p: int) -> np.ndarray | None:
    """Image table j -> π(j), if a is a permutation matrix."""
    a = sp.csc_matrix(a)
    a.data %= p
    a.eliminate_zeros()
    n = a.shape[1]
    if a.nnz != n or np.any(np.diff(a.indptr) != 1) or np.any(a.data != 1):
        return None
    img = a.indices.copy()
    if len(np.unique(img)) != n:
        return None
    return img


def _selection(f: FieldSpec, n: int, coords: np.ndarray) -> Mat:
    k = len(coords)
    return Mat(f, sp.csr_matrix((np.ones(k, dtype=np.int64), (coords, np.arange(k))), shape=(n, k)))


def invariants(m: Module) -> Mat:
    """Basis (columns) of {x : a·x = ε(a) x} computed generator by generator.

    Generators acting diagonally by 0/1 just select coordinates.  If the rest
    act by permutations preserving the selected coordinates, the invariants
    are the orbit sums.
    """
    h = m.algebra
    f = h.field
    p = h.p
    coords = np.arange(m.dim)
    rest = []
    for g in h.generators:
        a = m.act(g).sparse()
        e = h.eps(g)
        d = _diag01(a, p)
        if d is not None and e in (0, 1):
            coords = coords[d[coords] == e]
        else:
            rest.append((a, e))
    if not rest or len(coords) == 0:
        return _selection(f, m.dim, coords)
    perms = [_permutation(a, p) if e == 1 else None for a, e in rest]
    inside = np.zeros(m.dim, dtype=bool)
    inside[coords] = True
    if all(pi is not None and inside[pi[coords]].all() for pi in perms):
        pos = -np.ones(m.dim, dtype=np.int64)
        pos[coords] = np.arange(len(coords))
        rows = np.concatenate([pos[coords]] * len(perms))
        cols = np.concatenate([pos[pi[coords]] for pi in perms])
        graph = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(coords),) * 2)
        _, labels = connected_components(graph, directed=True, connection="weak")
        # number orbits by their smallest coordinate
        first = np.full(labels.max() + 1, len(coords))
        np.minimum.at(first, labels, np.arange(len(coords)))
        rank_of = np.argsort(np.argsort(first))
        col = rank_of[labels]
        return Mat(f, sp.csr_matrix((np.ones(len(coords), dtype=np.int64), (coords, col)),
                                    shape=(m.dim, int(labels.max()) + 1)))
    basis = _selection(f, m.dim, coords)
    for a, e in rest:
        op = Mat(f, a) - Mat.identity(f, m.dim).scale(e)
        ker = kernel_basis((op @ basis).auto())
        if not ker:
            return Mat.zeros(f, m.dim, 0, sparse=False)
        basis = (basis @ Mat(f, np.stack(ker, axis=1)).auto()).auto()
    return basis


def hom_space(m: Module, n: Module) -> list[Mat]:
    """Basis of A-linear maps m -> n, each as an (n.dim x m.dim) matrix."""
    if m.algebra is not n.algebra:
        raise AlgebraMismatch("modules over different algebras")
    a = m.algebra
    f = a.field
    # f ρ_m(g) - ρ_n(g) f = 0; vec is row-major: index r*m.dim + c
    eye_m = Mat.identity(f, m.dim)
    eye_n = Mat.identity(f, n.dim)
    basis = Mat.identity(f, m.dim * n.dim)
    for g in a.generators:
        op = kron(eye_n, m.act(g).T) - kron(n.act(g), eye_m)
        ker = kernel_basis(op @ basis)
        if not ker:
            return []
        basis = basis @ Mat(f, np.stack(ker, axis=1)).auto()
    dense = basis.dense()
    return [Mat(f, dense[:, j].reshape(n.dim, m.dim)) for j in range(dense.shape[1])]


def is_module_map(fmat: Mat, m: Module, n: Module) -> bool:
    a = m.algebra
    return all(fmat @ m.action[i] == n.action[i] @ fmat for i in range(a.dim))


def restrict_to_subspace(op: Mat, basis: Mat, pivot_rows: list[int] | None = None) -> Mat:
    """Matrix of op on the invariant subspace spanned by the columns of ``basis``."""
    return solve(basis, op @ basis)


# -- integrals and the torus transformations --------------------------------

def left_integral(h: HopfAlgebra) -> np.ndarray:
    """Nonzero Λ with aΛ = ε(a)Λ."""
    vs = invariants(regular_module(h)).dense()
    if vs.shape[1] != 1:
        raise AxiomError(f"space of left integrals has dimension {vs.shape[1]}")
    return vs[:, 0]


def right_cointegral(h: HopfAlgebra) -> np.ndarray:
    """Nonzero λ ∈ A* with (λ ⊗ id)Δ(x) = λ(x)1."""
    f, d, p = h.field, h.dim, h.p
    # linear conditions on λ: for each basis x and each output coordinate
    rows = []
    for i in range(d):
        cond = np.zeros((d, d), dtype=np.int64)  # [output coord, λ index]
        for (j, k), c in h.comult_terms[i].items():
            cond[k, j] += c
        cond[:, i] = (cond[:, i] - h.unit) % p
        rows.append(cond)
    ker = kernel_basis(Mat(f, np.vstack(rows) % p))
    if len(ker) != 1:
        raise AxiomError(f"space of right cointegrals has dimension {len(ker)}")
    return ker[0]


def s_transform(h: HopfAlgebra) -> Mat:
    """S on A*: α ↦ λ(S(z) · –) with z = (α ⊗ id)((R21 R)^{-1}) and λ the right cointegral.

    Composing with the antipode makes the result a module map for the
    coadjoint action; λ(z · –) alone is not, once A is noncommutative.  The
    inverse monodromy is the choice for which (S T)^3 is proportional to S^2
    on all of A*, with T from ``t_transform``.
    """
    f, d, p = h.field, h.dim, h.p
    lam = right_cointegral(h)
    fq = h.monodromy_inverse.T
    # ψ(z)(b) = λ(z b): matrix [b, z]
    psi = np.einsum("zbk,k->bz", h.mult, lam) % p
    psi = (psi @ h.antipode) % p
    s = Mat(f, (psi @ fq) % p)
    if rank(s) != d:
        raise AxiomError(f"s_transform of {h.name} is not invertible over {f}")
    return s


def t_transform(h: HopfAlgebra) -> Mat:
    """T on A*: transpose of left multiplication by the ribbon element."""
    if h.ribbon is None:
        raise AxiomError("no ribbon element")
    return h.left_mult_by(h.ribbon).T


def central_forms(h: Algebra) -> Mat:
    """Basis (columns, in dual coordinates) of {α : α(ab) = α(ba)}."""
    f, d, p = h.field, h.dim, h.p
    comm = (h.mult - h.mult.transpose(1, 0, 2)).reshape(d * d, d) % p
    return Mat(f, np.stack(kernel_basis(Mat(f, comm)), axis=1)).auto()


def mg_bimodule(h: HopfAlgebra, g: int):
    """A ⊗ (A*_coadj)^{⊗g}: diagonal left action, right multiplication on the A factor."""
    from .homcx import MultiBimodule  # homcx builds on this module

    if g < 0:
        raise ValueError("g must be >= 0")
    f = h.field
    left = regular_module(h)
    for _ in range(g):
        left = module_tensor(left, coadjoint_module(h))
    rest = Mat.identity(f, h.dim ** g)
    right = [kron(r, rest).auto() for r in h.right_mult]
    return MultiBimodule(h, left.dim, [(left.action, right)], name=f"M{g}")
