"""Finite fields F_p and F_{p^k}, k <= 4.

Elements are encoded as integers ``0 <= x < q`` whose base-``p`` digits are the
coefficients of a polynomial in the generator (lowest degree first).  For prime
fields the encoding is the residue itself.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np

# Conway polynomials, coefficients lowest degree first, monic.
CONWAY: dict[tuple[int, int], tuple[int, ...]] = {
    (2, 2): (1, 1, 1),
    (2, 3): (1, 1, 0, 1),
    (2, 4): (1, 1, 0, 0, 1),
    (3, 2): (2, 2, 1),
    (3, 3): (1, 2, 0, 1),
    (3, 4): (2, 0, 0, 2, 1),
    (5, 2): (2, 4, 1),
    (5, 3): (3, 3, 0, 1),
    (5, 4): (2, 4, 4, 0, 1),
    (7, 2): (3, 6, 1),
    (7, 3): (4, 0, 6, 1),
    (7, 4): (3, 4, 5, 0, 1),
}

MAX_DEGREE = 4


class FieldError(ValueError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def _poly_has_factor(modulus: tuple[int, ...], p: int) -> bool:
    """Trial division by every monic polynomial of degree <= deg/2."""
    k = len(modulus) - 1
    for d in range(1, k // 2 + 1):
        for tail in product(range(p), repeat=d):
            divisor = list(tail) + [1]
            rem = list(modulus)
            for shift in range(k - d, -1, -1):
                c = rem[shift + d] % p
                if c:
                    for i, dc in enumerate(divisor):
                        rem[shift + i] = (rem[shift + i] - c * dc) % p
            if not any(r % p for r in rem[:d]):
                return True
    return False


def find_modulus(p: int, k: int) -> tuple[int, ...]:
    if k == 1:
        return (0, 1)
    if (p, k) in CONWAY:
        return CONWAY[(p, k)]
    for tail in product(range(p), repeat=k):
        cand = tuple(reversed(tail)) + (1,)
        if cand[0] == 0 or _poly_has_factor(cand, p):
            continue
        spec = FieldSpec(p, k, cand)
        if spec.is_primitive_modulus():
            return cand
    raise FieldError(f"no primitive modulus for p={p}, k={k}")


@dataclass(frozen=True)
class FieldSpec:
    p: int
    k: int = 1
    modulus: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not is_prime(self.p):
            raise FieldError(f"characteristic {self.p} is not prime")
        if not 1 <= self.k <= MAX_DEGREE:
            raise FieldError(f"extension degree {self.k} outside 1..{MAX_DEGREE}")
        if not self.modulus:
            object.__setattr__(self, "modulus", find_modulus(self.p, self.k))
        mod = tuple(int(c) % self.p for c in self.modulus)
        object.__setattr__(self, "modulus", mod)
        if len(mod) != self.k + 1 or mod[-1] != 1:
            raise FieldError("modulus must be monic of degree k")
        if self.k == 1 and mod != (0, 1):
            raise FieldError("prime fields use the modulus x")
        if self.k > 1 and _poly_has_factor(mod, self.p):
            raise FieldError(f"modulus {mod} is reducible over F_{self.p}")

    @property
    def q(self) -> int:
        return self.p ** self.k

    @property
    def is_prime_field(self) -> bool:
        return self.k == 1

    def __str__(self) -> str:
        return f"F_{self.p}" if self.k == 1 else f"F_{self.p}^{self.k}"

    def to_json(self) -> dict:
        return {"p": self.p, "k": self.k}

    @classmethod
    def from_json(cls, obj: dict) -> "FieldSpec":
        return cls(int(obj["p"]), int(obj.get("k", 1)), tuple(obj.get("modulus", ())))

    # -- arithmetic -------------------------------------------------------
    @cached_property
    def _digits(self) -> np.ndarray:
        q, p, k = self.q, self.p, self.k
        x = np.arange(q)
        return np.stack([(x // p**i) % p for i in range(k)], axis=1)

    @cached_property
    def _powers(self) -> np.ndarray:
        return self.p ** np.arange(self.k)

    def _encode(self, digits: np.ndarray) -> np.ndarray:
        return (digits % self.p) @ self._powers

    @cached_property
    def _tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """add, mul, neg, inv tables for extension fields."""
        q, k = self.q, self.k
        dig = self._digits
        add = self._encode(dig[:, None, :] + dig[None, :, :])
        # multiplication by the generator: shift and reduce with the modulus
        mod = np.array(self.modulus[:-1])
        mul = np.zeros((q, q), dtype=np.int64)
        # x^i * b computed iteratively for all b
        xb = [np.arange(q)]
        for _ in range(1, k):
            d = dig[xb[-1]]
            top = d[:, -1]
            shifted = np.concatenate([np.zeros((q, 1), dtype=np.int64), d[:, :-1]], axis=1)
            shifted = shifted - top[:, None] * mod[None, :]
            xb.append(self._encode(shifted))
        for a in range(q):
            acc = np.zeros(q, dtype=np.int64)
            for i in range(k):
                c = dig[a, i]
                if c:
                    acc = add[acc, mul_scalar_prime(xb[i], c, self)]
            mul[a] = acc
        neg = self._encode(-dig)
        inv = np.zeros(q, dtype=np.int64)
        for a in range(1, q):
            inv[a] = int(np.nonzero(mul[a] == 1)[0][0])
        return add, mul, neg, inv

    def add(self, a, b):
        if self.k == 1:
            return (np.asarray(a) + b) % self.p
        return self._tables[0][a, b]

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if self.k == 1:
            return (np.asarray(a) * b) % self.p
        return self._tables[1][a, b]

    def neg(self, a):
        if self.k == 1:
            return (-np.asarray(a)) % self.p
        return self._tables[2][a]

    def inv(self, a):
        if np.any(np.asarray(a) == 0):
            raise ZeroDivisionError("inverse of zero")
        if self.k == 1:
            a = np.asarray(a)
            if a.ndim == 0:
                return pow(int(a), -1, self.p)
            return np.array([pow(int(x), -1, self.p) for x in a.ravel()]).reshape(a.shape)
        return self._tables[3][a]

    def elements(self) -> range:
        return range(self.q)

    def embed_int(self, n: int) -> int:
        """Image of an integer under Z -> F_q."""
        return int(n) % self.p

    def element(self, coeffs) -> int:
        """Encode a coefficient vector (lowest degree first)."""
        coeffs = list(coeffs) + [0] * (self.k - len(coeffs))
        return int(sum((int(c) % self.p) * self.p**i for i, c in enumerate(coeffs[: self.k])))

    def coords(self, x: int) -> list[int]:
        return [int(d) for d in self._digits[int(x)]]

    def power(self, a: int, n: int) -> int:
        if n < 0:
            a, n = int(self.inv(a)), -n
        r = 1
        for _ in range(n):
            r = int(self.mul(r, a))
        return r

    def order(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no multiplicative order")
        r, n = a, 1
        while r != 1:
            r = int(self.mul(r, a))
            n += 1
        return n

    def is_primitive_modulus(self) -> bool:
        if self.k == 1:
            return True
        gen = self.element([0, 1])
        return self.order(gen) == self.q - 1


def mul_scalar_prime(x: np.ndarray, c: int, f: FieldSpec) -> np.ndarray:
    """Multiply encoded elements by a prime-subfield scalar digitwise."""
    return f._encode(f._digits[x] * c)


def gf(p: int, k: int = 1) -> FieldSpec:
    return FieldSpec(p, k)
