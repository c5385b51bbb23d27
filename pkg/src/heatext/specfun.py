"""Hermite and Kummer-Laguerre families plus Gamma-function plumbing.

Two one-parameter polynomial families appear throughout the package:

* Hermite polynomials orthogonal for the weight e^{-x^2/4}, generated by

      H_0 = 1,  H_1 = x,  H_{n+1}(x) = x H_n(x) - 2 n H_{n-1}(x),

  giving H_2 = x^2 - 2, H_3 = x^3 - 6x, H_4 = x^4 - 12 x^2 + 12 and the
  norm ||H_n||^2 = n! 2^n under the unit-mass Gaussian of variance 2.

* The confluent-hypergeometric normalization of the generalized Laguerre
  polynomials,

      L_{(beta), m}(r) = M(-m, beta+1, r)
                       = sum_{j<=m} (-m)_j / ((beta+1)_j j!) r^j,

  fixed to equal 1 at r = 0.  It solves the Kummer equation
  r u'' + (beta + 1 - r) u' + m u = 0 and has derivative
  (-m/(beta+1)) M(-m+1, beta+2, r).

Everything is evaluated by forward recurrence in double precision; inputs
are validated, degrees are capped (default 64).
"""

from __future__ import annotations

import math

import numpy as np

DEGREE_CAP = 64


def _check_degree(n: int):
    n = int(n)
    if n < 0:
        raise ValueError("polynomial degree must be nonnegative")
    if n > DEGREE_CAP:
        raise ValueError(f"degree {n} exceeds cap {DEGREE_CAP}")
    return n


def hermite_1d(n: int, x):
    """H_n(x) by the three-term recurrence; x may be a scalar or array."""
    n = _check_degree(n)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite evaluation point")
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = x.copy()
    for k in range(1, n):
        prev, cur = cur, x * cur - 2.0 * k * prev
    return cur if cur.ndim else float(cur)


def hermite_1d_prime(n: int, x):
    """d/dx H_n(x) = n H_{n-1}(x)."""
    n = _check_degree(n)
    x = np.asarray(x, dtype=float)
    if n == 0:
        z = np.zeros_like(x)
        return z if z.ndim else 0.0
    out = n * np.asarray(hermite_1d(n - 1, x))
    return out if out.ndim else float(out)


def hermite_nd(alpha, x):
    """Product H_alpha(x) = prod_i H_{alpha_i}(x_i); x has shape (..., len(alpha))."""
    alpha = tuple(int(v) for v in alpha)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != len(alpha):
        raise ValueError("multi-index / point dimension mismatch")
    out = np.ones(x.shape[:-1])
    for i, ni in enumerate(alpha):
        out = out * hermite_1d(ni, x[..., i])
    return out if out.ndim else float(out)


def laguerre(beta: float, m: int, r):
    """M(-m, beta+1, r): Kummer-normalized generalized Laguerre, 1 at r=0."""
    m = _check_degree(m)
    beta = float(beta)
    if beta <= -1.0:
        raise ValueError("beta must exceed -1")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be nonnegative")
    out = np.ones_like(r)
    term = np.ones_like(r)
    for j in range(1, m + 1):
        term = term * (-(m - j + 1)) / ((beta + j) * j) * r
        out = out + term
    return out if out.ndim else float(out)


def laguerre_prime(beta: float, m: int, r):
    """d/dr M(-m, beta+1, r) = (-m/(beta+1)) M(-(m-1), beta+2, r)."""
    m = _check_degree(m)
    if m == 0:
        r = np.asarray(r, dtype=float)
        z = np.zeros_like(r)
        return z if z.ndim else 0.0
    val = laguerre(beta + 1.0, m - 1, r)
    scale = -m / (beta + 1.0)
    out = scale * np.asarray(val)
    return out if out.ndim else float(out)


def log_gamma(z: float) -> float:
    """log Gamma(z) for z > 0."""
    z = float(z)
    if not z > 0.0:
        raise ValueError("log_gamma requires z > 0")
    return math.lgamma(z)


def pochhammer(z: float, k: int) -> float:
    """Rising factorial (z)_k = z (z+1) ... (z+k-1)."""
    out = 1.0
    for i in range(int(k)):
        out *= z + i
    return out
