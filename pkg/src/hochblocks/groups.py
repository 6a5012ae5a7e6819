"""Finite groups given by multiplication tables."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import permutations, product

import numpy as np


class GroupError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    name: str
    elements: tuple[str, ...]
    table: np.ndarray  # table[a, b] = index of a*b

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.int64)
        object.__setattr__(self, "table", t)
        n = len(self.elements)
        if t.shape != (n, n) or t.min(initial=0) < 0 or t.max(initial=0) >= n:
            raise GroupError("table shape or entries out of range")
        # associativity, exhaustively
        ar = np.arange(n)
        if not np.array_equal(t[t[:, :, None], ar[None, None, :]], t[ar[:, None, None], t[None, :, :]]):
            raise GroupError("multiplication is not associative")
        ids = [e for e in range(n) if np.array_equal(t[e], np.arange(n)) and np.array_equal(t[:, e], np.arange(n))]
        if len(ids) != 1:
            raise GroupError("no two-sided identity")
        for a in range(n):
            if ids[0] not in t[a]:
                raise GroupError(f"element {self.elements[a]} has no inverse")

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return self.order

    @cached_property
    def identity(self) -> int:
        n = self.order
        return next(e for e in range(n) if np.array_equal(self.table[e], np.arange(n)))

    @cached_property
    def inverses(self) -> np.ndarray:
        e = self.identity
        return np.array([int(np.nonzero(self.table[a] == e)[0][0]) for a in range(self.order)])

    def mul(self, a: int, b: int) -> int:
        return int(self.table[a, b])

    def inv(self, a: int) -> int:
        return int(self.inverses[a])

    def conj(self, g: int, x: int) -> int:
        """g x g^-1."""
        return int(self.table[self.table[g, x], self.inverses[g]])

    def commutator(self, a: int, b: int) -> int:
        """a b a^-1 b^-1."""
        t, i = self.table, self.inverses
        return int(t[t[t[a, b], i[a]], i[b]])

    def centralizer(self, x: int) -> list[int]:
        return [g for g in range(self.order) if self.table[g, x] == self.table[x, g]]

    @cached_property
    def classes(self) -> list[list[int]]:
        seen: set[int] = set()
        out = []
        for x in range(self.order):
            if x in seen:
                continue
            cls = sorted({self.conj(g, x) for g in range(self.order)})
            seen.update(cls)
            out.append(cls)
        return out

    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.table, self.table.T))

    @cached_property
    def generators(self) -> list[int]:
        """A small generating set, found greedily."""
        gens: list[int] = []
        span = {self.identity}
        for g in range(self.order):
            if g in span:
                continue
            gens.append(g)
            span = self._closure(gens)
            if len(span) == self.order:
                break
        return gens

    def _closure(self, gens: list[int]) -> set[int]:
        span = {self.identity}
        frontier = [self.identity]
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = self.mul(x, g)
                    if y not in span:
                        span.add(y)
                        nxt.append(y)
            frontier = nxt
        return span

    def subgroup(self, members: list[int], name: str = "H") -> "FiniteGroup":
        members = sorted(members)
        pos = {m: i for i, m in enumerate(members)}
        try:
            tab = [[pos[self.mul(a, b)] for b in members] for a in members]
        except KeyError as exc:
            raise GroupError("subset is not closed under multiplication") from exc
        return FiniteGroup(name, tuple(self.elements[m] for m in members), np.array(tab))

    def to_json(self) -> dict:
        return {"name": self.name, "elements": list(self.elements), "table": self.table.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "FiniteGroup":
        elems = [str(e) for e in obj["elements"]]
        tab = obj["table"]
        # tables may hold labels or indices
        if tab and tab[0] and isinstance(tab[0][0], str):
            pos = {e: i for i, e in enumerate(elems)}
            tab = [[pos[x] for x in row] for row in tab]
        return cls(obj.get("name", "G"), tuple(elems), np.array(tab, dtype=np.int64))


def _from_elements(name: str, elems: list, mul, label) -> FiniteGroup:
    pos = {e: i for i, e in enumerate(elems)}
    tab = np.array([[pos[mul(a, b)] for b in elems] for a in elems])
    return FiniteGroup(name, tuple(label(e) for e in elems), tab)


def cyclic(n: int) -> FiniteGroup:
    return _from_elements(f"Z{n}", list(range(n)), lambda a, b: (a + b) % n, str)


def klein() -> FiniteGroup:
    els = list(product(range(2), repeat=2))
    return _from_elements("Z2xZ2", els, lambda a, b: ((a[0] + b[0]) % 2, (a[1] + b[1]) % 2),
                          lambda e: f"{e[0]}{e[1]}")


def _perm_group(name: str, gens: list[tuple[int, ...]]) -> FiniteGroup:
    n = len(gens[0])
    ident = tuple(range(n))
    comp = lambda a, b: tuple(a[b[i]] for i in range(n))  # noqa: E731  (a after b)
    els = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = comp(x, g)
                if y not in els:
                    els.add(y)
                    nxt.append(y)
        frontier = nxt
    ordered = sorted(els)
    return _from_elements(name, ordered, comp, lambda e: "".join(map(str, e)))


def symmetric3() -> FiniteGroup:
    return _from_elements("S3", sorted(permutations(range(3))),
                          lambda a, b: tuple(a[b[i]] for i in range(3)),
                          lambda e: "".join(map(str, e)))


def dihedral4() -> FiniteGroup:
    return _perm_group("D4", [(1, 2, 3, 0), (3, 2, 1, 0)])


def quaternion() -> FiniteGroup:
    # elements (sign, unit) with unit in 1,i,j,k
    units = ["1", "i", "j", "k"]
    prod_table = {
        ("1", u): (1, u) for u in units
    }
    prod_table.update({(u, "1"): (1, u) for u in units})
    prod_table.update({
        ("i", "i"): (-1, "1"), ("j", "j"): (-1, "1"), ("k", "k"): (-1, "1"),
        ("i", "j"): (1, "k"), ("j", "k"): (1, "i"), ("k", "i"): (1, "j"),
        ("j", "i"): (-1, "k"), ("k", "j"): (-1, "i"), ("i", "k"): (-1, "j"),
    })
    els = [(s, u) for s in (1, -1) for u in units]

    def mul(a, b):
        s, u = prod_table[(a[1], b[1])]
        return (a[0] * b[0] * s, u)

    return _from_elements("Q8", els, mul, lambda e: ("" if e[0] == 1 else "-") + e[1])


BUILTIN = {
    "Z2": lambda: cyclic(2),
    "Z3": lambda: cyclic(3),
    "Z4": lambda: cyclic(4),
    "Z2xZ2": klein,
    "S3": symmetric3,
    "D4": dihedral4,
    "Q8": quaternion,
}


def builtin_group(name: str) -> FiniteGroup:
    try:
        return BUILTIN[name]()
    except KeyError:
        raise GroupError(f"unknown group {name!r}; built-ins: {', '.join(BUILTIN)}") from None
