"""Pure-numpy kernel assembly for one-hot pair inputs.

A pair row ``x = e_a || e_b`` is given by two column positions ``a`` and
``b`` (``b`` already offset by ``n``), so ``x_i^T M x_j`` is a sum of four
entries of ``M``. The compiled module ``_ckernels`` implements the same
functions; both must agree to rounding.
"""

import numpy as np


def pair_gram(M, ra, rb, ca, cb):
    """``G[i, j] = x_i^T M x_j`` for row pairs ``(ra, rb)`` and column pairs ``(ca, cb)``."""
    Mr = M[ra]
    Mr += M[rb]
    G = Mr[:, ca]
    G += Mr[:, cb]
    return G


def pair_sqnorm(M, a, b):
    return M[a, a] + M[b, b] + M[a, b] + M[b, a]


def pair_gaussian(M, ra, rb, ca, cb, bandwidth):
    """``exp(-(x_i - x_j)^T M (x_i - x_j) / L)``."""
    G = pair_gram(M, ra, rb, ca, cb)
    G *= 2.0
    G -= pair_sqnorm(M, ra, rb)[:, None]
    G -= pair_sqnorm(M, ca, cb)[None, :]
    G /= bandwidth
    return np.exp(G, out=G)


def pair_quadratic(M, ra, rb, ca, cb):
    G = pair_gram(M, ra, rb, ca, cb)
    return np.square(G, out=G)
