"""Sparse polynomials in (x_1..x_N, y, t) with parabolic-scaling helpers.

Monomials are keyed by ``(alpha, beta, j)`` where ``alpha`` is the
multi-index of the x-powers, ``beta`` the y-power and ``j`` the t-power.
The parabolic degree of a monomial is ``|alpha| + beta + 2 j``; under the
scaling (X, t) -> (r X, r^2 t) a polynomial that is homogeneous of
parabolic degree 2k picks up the factor r^{2k}, equivalently

    Z P = 2 t dP/dt + X . grad P = 2 kappa P.

This module is internal plumbing shared by the spectral, frequency and
blow-up layers; it knows nothing about measures or quadrature.
"""

from __future__ import annotations

import itertools
import math
from typing import Dict, Tuple

import numpy as np

Key = Tuple[Tuple[int, ...], int, int]

_TRIM = 0.0  # coefficients equal to zero are dropped eagerly


class XYTPoly:
    """Polynomial in (x, y, t) with float coefficients.

    Parameters
    ----------
    dim_n : number of x-variables N (y and t are always present)
    coeffs : mapping {(alpha, beta, j): c}
    """

    __slots__ = ("dim_n", "coeffs")

    def __init__(self, dim_n: int, coeffs: Dict[Key, float] | None = None):
        if dim_n < 1:
            raise ValueError("dim_n must be >= 1")
        self.dim_n = int(dim_n)
        self.coeffs: Dict[Key, float] = {}
        if coeffs:
            for (alpha, beta, j), c in coeffs.items():
                alpha = tuple(int(v) for v in alpha)
                if len(alpha) != dim_n:
                    raise ValueError("multi-index length mismatch")
                if min(alpha, default=0) < 0 or beta < 0 or j < 0:
                    raise ValueError("negative exponent")
                if c != _TRIM:
                    key = (alpha, int(beta), int(j))
                    self.coeffs[key] = self.coeffs.get(key, 0.0) + float(c)
        self._trim()

    # -- construction helpers -------------------------------------------
    @classmethod
    def constant(cls, dim_n: int, c: float) -> "XYTPoly":
        return cls(dim_n, {((0,) * dim_n, 0, 0): float(c)})

    @classmethod
    def coordinate(cls, dim_n: int, which: str, axis: int = 0) -> "XYTPoly":
        """The monomial x_axis, y, or t."""
        if which == "x":
            alpha = [0] * dim_n
            alpha[axis] = 1
            return cls(dim_n, {(tuple(alpha), 0, 0): 1.0})
        if which == "y":
            return cls(dim_n, {((0,) * dim_n, 1, 0): 1.0})
        if which == "t":
            return cls(dim_n, {((0,) * dim_n, 0, 1): 1.0})
        raise ValueError("which must be 'x', 'y' or 't'")

    def _trim(self):
        dead = [k for k, c in self.coeffs.items() if c == 0.0]
        for k in dead:
            del self.coeffs[k]

    def copy(self) -> "XYTPoly":
        return XYTPoly(self.dim_n, dict(self.coeffs))

    # -- ring operations -------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = XYTPoly.constant(self.dim_n, other)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0.0) + c
        return XYTPoly(self.dim_n, out)

    __radd__ = __add__

    def __neg__(self):
        return XYTPoly(self.dim_n, {k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = XYTPoly.constant(self.dim_n, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return XYTPoly(
                self.dim_n, {k: c * other for k, c in self.coeffs.items()}
            )
        out: Dict[Key, float] = {}
        for (a1, b1, j1), c1 in self.coeffs.items():
            for (a2, b2, j2), c2 in other.coeffs.items():
                key = (
                    tuple(u + v for u, v in zip(a1, a2)),
                    b1 + b2,
                    j1 + j2,
                )
                out[key] = out.get(key, 0.0) + c1 * c2
        return XYTPoly(self.dim_n, out)

    __rmul__ = __mul__

    def __repr__(self):
        if not self.coeffs:
            return "XYTPoly(0)"
        bits = []
        for (alpha, beta, j), c in sorted(self.coeffs.items()):
            mono = []
            for i, p in enumerate(alpha):
                if p:
                    mono.append(f"x{i}^{p}" if p > 1 else f"x{i}")
            if beta:
                mono.append(f"y^{beta}" if beta > 1 else "y")
            if j:
                mono.append(f"t^{j}" if j > 1 else "t")
            bits.append(f"{c:+g} " + " ".join(mono))
        return "XYTPoly(" + " ".join(bits) + ")"

    # -- calculus --------------------------------------------------------
    def diff_x(self, axis: int) -> "XYTPoly":
        out: Dict[Key, float] = {}
        for (alpha, beta, j), c in self.coeffs.items():
            p = alpha[axis]
            if p:
                na = list(alpha)
                na[axis] = p - 1
                out[(tuple(na), beta, j)] = out.get((tuple(na), beta, j), 0.0) + c * p
        return XYTPoly(self.dim_n, out)

    def diff_y(self) -> "XYTPoly":
        out: Dict[Key, float] = {}
        for (alpha, beta, j), c in self.coeffs.items():
            if beta:
                k = (alpha, beta - 1, j)
                out[k] = out.get(k, 0.0) + c * beta
        return XYTPoly(self.dim_n, out)

    def diff_t(self) -> "XYTPoly":
        out: Dict[Key, float] = {}
        for (alpha, beta, j), c in self.coeffs.items():
            if j:
                k = (alpha, beta, j - 1)
                out[k] = out.get(k, 0.0) + c * j
        return XYTPoly(self.dim_n, out)

    def dy_over_y(self) -> "XYTPoly":
        """(1/y) dP/dy, defined when every y-power in dP/dy stays >= 0.

        For y-even polynomials this is again a polynomial; the weighted
        radial term (a/y) dP/dy is ``a * P.dy_over_y()``.
        """
        out: Dict[Key, float] = {}
        for (alpha, beta, j), c in self.coeffs.items():
            if beta == 0:
                continue
            if beta == 1:
                raise ValueError("dy_over_y needs even powers of y")
            k = (alpha, beta - 2, j)
            out[k] = out.get(k, 0.0) + c * beta
        return XYTPoly(self.dim_n, out)

    def laplacian(self) -> "XYTPoly":
        """Full spatial Laplacian in (x_1..x_N, y)."""
        out = XYTPoly(self.dim_n, {})
        for ax in range(self.dim_n):
            out = out + self.diff_x(ax).diff_x(ax)
        return out + self.diff_y().diff_y()

    def weighted_heat_residual(self, a: float) -> "XYTPoly":
        """dt P + Lap P + (a/y) dP/dy — zero iff P is backward caloric."""
        return self.diff_t() + self.laplacian() + a * self.dy_over_y()

    def euler(self) -> "XYTPoly":
        """Z P = 2t dt P + x . grad_x P + y dy P."""
        out = 2.0 * (XYTPoly.coordinate(self.dim_n, "t") * self.diff_t())
        for ax in range(self.dim_n):
            out = out + XYTPoly.coordinate(self.dim_n, "x", ax) * self.diff_x(ax)
        return out + XYTPoly.coordinate(self.dim_n, "y") * self.diff_y()

    # -- scaling & structure ----------------------------------------------
    def parabolic_scale(self, r: float) -> "XYTPoly":
        """P(rX, r^2 t) as a new polynomial."""
        out = {
            k: c * r ** (sum(k[0]) + k[1] + 2 * k[2])
            for k, c in self.coeffs.items()
        }
        return XYTPoly(self.dim_n, out)

    def shifted(self, dx, dt: float = 0.0) -> "XYTPoly":
        """P(x + dx, y, t + dt): recenter along the trace directions.

        ``dx`` is one offset per x axis; the extension axis y keeps its
        origin on the trace plane and is never shifted.
        """
        try:
            dx = [float(v) for v in dx]
        except TypeError:
            dx = [float(dx)]
        if len(dx) != self.dim_n:
            raise ValueError("shift length does not match dim_n")
        dt = float(dt)
        out: Dict[Key, float] = {}
        for (alpha, beta, j), c in self.coeffs.items():
            axis_terms = []
            for ax, p in enumerate(alpha):
                axis_terms.append([
                    (k, math.comb(p, k) * dx[ax] ** (p - k))
                    for k in range(p + 1)
                ])
            axis_terms.append([
                (k, math.comb(j, k) * dt ** (j - k)) for k in range(j + 1)
            ])
            for combo in itertools.product(*axis_terms):
                new_alpha = tuple(k for k, _ in combo[:-1])
                jt, wt = combo[-1]
                w = c * wt
                for _, fac in combo[:-1]:
                    w *= fac
                key = (new_alpha, beta, jt)
                out[key] = out.get(key, 0.0) + w
        return XYTPoly(self.dim_n, out)

    def parabolic_degree(self) -> int:
        return max((sum(a) + b + 2 * j for (a, b, j) in self.coeffs), default=0)

    def y_even_part(self) -> "XYTPoly":
        return XYTPoly(
            self.dim_n, {k: c for k, c in self.coeffs.items() if k[1] % 2 == 0}
        )

    def y_odd_part(self) -> "XYTPoly":
        return XYTPoly(
            self.dim_n, {k: c for k, c in self.coeffs.items() if k[1] % 2 == 1}
        )

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.coeffs.values())

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    # -- evaluation --------------------------------------------------------
    def __call__(self, X, t):
        """Evaluate at points X (..., N+1) — last column is y — and time t.

        ``t`` broadcasts against the leading shape of ``X``.
        """
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.dim_n + 1:
            raise ValueError("point dimension mismatch")
        t = np.asarray(t, dtype=float)
        out = np.zeros(np.broadcast_shapes(X.shape[:-1], t.shape))
        for (alpha, beta, j), c in self.coeffs.items():
            term = np.full_like(out, c)
            for ax, p in enumerate(alpha):
                if p:
                    term = term * X[..., ax] ** p
            if beta:
                term = term * X[..., -1] ** beta
            if j:
                term = term * t**j
            out = out + term
        return out

    def eval_trace(self, x, t):
        """Evaluate on the trace plane y = 0; x has shape (..., N)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape[-1] != self.dim_n:
            x = x.reshape(x.shape + (1,)) if self.dim_n == 1 else x
        X = np.concatenate([x, np.zeros(x.shape[:-1] + (1,))], axis=-1)
        return self(X, t)


def caloric_extension(trace: XYTPoly, a: float) -> XYTPoly:
    """Extend a polynomial trace u(x,t) to the backward weighted equation.

    Returns the unique y-even polynomial W with W(x, 0, t) = u(x, t) and
    dt W + Lap W + (a/y) dy W = 0.  Writing W = sum_k c_k(x,t) y^{2k}, the
    cascade  c_{k+1} = -(dt + Lap_x) c_k / ((2k+2)(2k+1+a))  terminates
    because each step lowers the parabolic degree by 2.

    Examples: trace x^2 - 2t is already caloric; trace 2t picks up the
    radial correction -y^2/(1+a).
    """
    if not -1.0 < a < 1.0:
        raise ValueError("a must lie in (-1,1)")
    if any(k[1] != 0 for k in trace.coeffs):
        raise ValueError("trace polynomial must not involve y")
    out = XYTPoly(trace.dim_n, {})
    ck = trace.copy()
    k = 0
    while not ck.is_zero():
        y2k = XYTPoly(trace.dim_n, {((0,) * trace.dim_n, 2 * k, 0): 1.0})
        out = out + y2k * ck
        nxt = ck.diff_t()
        for ax in range(trace.dim_n):
            nxt = nxt + ck.diff_x(ax).diff_x(ax)
        ck = (-1.0 / ((2 * k + 2) * (2 * k + 1 + a))) * nxt
        k += 1
        if k > 64:
            raise RuntimeError("extension cascade failed to terminate")
    return out


def hermite_coefficients(n: int) -> np.ndarray:
    """Coefficient array (low-to-high) of H_n under H_{k+1} = x H_k - 2k H_{k-1}."""
    if n < 0:
        raise ValueError("negative degree")
    c_prev = np.array([1.0])
    if n == 0:
        return c_prev
    c = np.array([0.0, 1.0])
    for k in range(1, n):
        nxt = np.zeros(k + 2)
        nxt[1:] = c
        nxt[: k] -= 2.0 * k * c_prev
        c_prev, c = c, nxt
    return c


def laguerre_coefficients(beta: float, m: int) -> np.ndarray:
    """Coefficients (in r, low-to-high) of M(-m, beta+1, r)."""
    if m < 0:
        raise ValueError("negative degree")
    out = np.zeros(m + 1)
    term = 1.0
    out[0] = term
    for j in range(1, m + 1):
        term *= (-(m - j + 1)) / ((beta + j) * j)
        out[j] = term
    return out


def hermite_poly_in(dim_n: int, axis: int, n: int) -> XYTPoly:
    """H_n(x_axis) as an XYTPoly."""
    coeffs = hermite_coefficients(n)
    acc: Dict[Key, float] = {}
    for p, c in enumerate(coeffs):
        if c != 0.0:
            alpha = [0] * dim_n
            alpha[axis] = p
            acc[(tuple(alpha), 0, 0)] = float(c)
    return XYTPoly(dim_n, acc)


def scaled_hermite_theta(dim_n: int, axis: int, n: int) -> XYTPoly:
    """t^{n/2} H_n(x_axis / sqrt t) — a polynomial since H_n has fixed parity."""
    coeffs = hermite_coefficients(n)
    acc: Dict[Key, float] = {}
    for p, c in enumerate(coeffs):
        if c == 0.0:
            continue
        if (n - p) % 2:
            raise AssertionError("hermite parity violated")
        alpha = [0] * dim_n
        alpha[axis] = p
        acc[(tuple(alpha), 0, (n - p) // 2)] = float(c)
    return XYTPoly(dim_n, acc)


def scaled_laguerre_theta(dim_n: int, beta: float, m: int) -> XYTPoly:
    """t^m L_{(beta),m}(y^2 / (4 t)) — polynomial in (y^2, t)."""
    coeffs = laguerre_coefficients(beta, m)
    acc: Dict[Key, float] = {}
    for p, c in enumerate(coeffs):
        if c != 0.0:
            acc[((0,) * dim_n, 2 * p, m - p)] = float(c) / 4.0**p
    return XYTPoly(dim_n, acc)
