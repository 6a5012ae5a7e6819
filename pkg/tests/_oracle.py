"""Brute-force reference computations, written without the package's linear algebra."""
import itertools

import numpy as np


def rank_mod(m, p):
    m = np.array(m, dtype=np.int64) % p
    r = 0
    rows, cols = m.shape
    for c in range(cols):
        piv = next((i for i in range(r, rows) if m[i, c]), None)
        if piv is None:
            continue
        m[[r, piv]] = m[[piv, r]]
        m[r] = m[r] * pow(int(m[r, c]), p - 2, p) % p
        for i in range(rows):
            if i != r and m[i, c]:
                m[i] = (m[i] - m[i, c] * m[r]) % p
        r += 1
    return r


def hochschild(mult, p, N):
    """HH_0..HH_N(A, A) from the unnormalized cyclic bar complex A^{⊗ n+1}."""
    d = mult.shape[0]

    def boundary(n):
        src = list(itertools.product(range(d), repeat=n + 1))
        tgt = {t: i for i, t in enumerate(itertools.product(range(d), repeat=n))}
        b = np.zeros((len(tgt), len(src)), dtype=np.int64)
        for j, t in enumerate(src):
            for i in range(n + 1):
                sign = (-1) ** i
                for k in range(d):
                    if i < n:
                        c = mult[t[i], t[i + 1], k]
                        if c:
                            b[tgt[t[:i] + (k,) + t[i + 2:]], j] += sign * c
                    else:
                        c = mult[t[n], t[0], k]
                        if c:
                            b[tgt[(k,) + t[1:n]], j] += sign * c
        return b

    ranks = {n: rank_mod(boundary(n), p) for n in range(1, N + 2)}
    return [d ** (n + 1) - ranks.get(n, 0) - ranks[n + 1] for n in range(N + 1)]
