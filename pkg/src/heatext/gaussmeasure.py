"""Weighted heat kernels and Gaussian quadrature exact for their measures.

The degenerate-parabolic extension operator with weight y^a, a in (-1,1),
has the self-similar fundamental solution

    G_a(X, t) = C_{N,a} t^{-(N+a+1)/2} exp(-|X|^2 / (4t)),
    C_{N,a}   = 1 / (2^a Gamma((1+a)/2) (4 pi)^{N/2}),

for which y^a G_a(., t) dX is a probability measure on the upper
half-space R^N x (0, inf).  At unit time it factorizes into independent
marginals:

    x_i ~ N(0, 2)      (weight e^{-x^2/4} / sqrt(4 pi)),
    r = y^2/4 ~ Gamma((1+a)/2, 1)
                       (weight y^a e^{-y^2/4} / (2^a Gamma((1+a)/2))).

Quadrature rules are built per axis from the orthogonal-polynomial
recurrence coefficients by the symmetric-tridiagonal (Jacobi matrix)
eigenvalue method and then tensorized.  Three y-axis variants cover the
integrands that arise:

* ``neumann``          — plain weight; integrates polynomials in (x, y^2)
                         against d mu;
* ``dirichlet-mass``   — the rule value is  int f(x, r) y^{2(1-a)} d mu,
                         used for products of two y^{1-a}-type factors;
* ``dirichlet-energy`` — the rule value is  int f(x, r) y^{-2a} d mu,
                         used for products of their y-derivatives, which
                         carry y^{-a} each.

All three are exact (to rounding) for polynomial f, so Gram matrices and
weak-form residuals downstream are quadrature-exact.  Node sums use
``math.fsum``, making every integral independent of evaluation schedule.

Whole-space integrals against |y|^a G_a / 2 on R^{N+1} are reduced by
parity: only the y-even part of the integrand contributes, and it
contributes its half-space value.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eig_banded

from .specfun import log_gamma

__all__ = [
    "ExtensionParams",
    "QuadratureRule",
    "fundamental_constant",
    "fundamental_solution",
    "fundamental_gradient",
    "measure_density",
    "poisson_kernel",
    "build_quadrature",
    "integrate",
    "whole_space_integrate",
]


@dataclass(frozen=True)
class ExtensionParams:
    """Weight exponent a = 1 - 2s, order s, and trace dimension N."""

    a: float
    s: float
    dim_n: int = 1

    def __post_init__(self):
        if not -1.0 < self.a < 1.0:
            raise ValueError("a must lie in (-1,1)")
        if not 0.0 < self.s < 1.0:
            raise ValueError("s must lie in (0,1)")
        if abs(self.a - (1.0 - 2.0 * self.s)) > 1e-12:
            raise ValueError("inconsistent pair: a = 1 - 2s must hold")
        if self.dim_n < 1:
            raise ValueError("dim_n must be a positive integer")

    @classmethod
    def from_a(cls, a: float, dim_n: int = 1) -> "ExtensionParams":
        return cls(a=float(a), s=(1.0 - float(a)) / 2.0, dim_n=dim_n)

    @classmethod
    def from_s(cls, s: float, dim_n: int = 1) -> "ExtensionParams":
        return cls(a=1.0 - 2.0 * float(s), s=float(s), dim_n=dim_n)


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

def fundamental_constant(dim_n: int, a: float) -> float:
    """C_{N,a} = 1 / (2^a Gamma((1+a)/2) (4 pi)^{N/2})."""
    return math.exp(
        -(a * math.log(2.0) + log_gamma((1.0 + a) / 2.0)
          + 0.5 * dim_n * math.log(4.0 * math.pi))
    )


def fundamental_solution(X, t: float, p: ExtensionParams):
    """G_a(X, t); X has shape (..., N+1), the last coordinate being y >= 0."""
    if not t > 0.0:
        raise ValueError("t must be positive")
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != p.dim_n + 1:
        raise ValueError("point dimension mismatch")
    log_c = math.log(fundamental_constant(p.dim_n, p.a))
    expo = log_c - 0.5 * (p.dim_n + p.a + 1.0) * math.log(t) - np.sum(
        X * X, axis=-1
    ) / (4.0 * t)
    out = np.exp(expo)
    return out if out.ndim else float(out)


def fundamental_gradient(X, t: float, p: ExtensionParams):
    """grad_X G_a = -(X / 2t) G_a, the self-similar drift identity."""
    X = np.asarray(X, dtype=float)
    g = np.asarray(fundamental_solution(X, t, p))
    return -X / (2.0 * t) * g[..., None]


def measure_density(X, t: float, p: ExtensionParams, p0=(0.0, 0.0)):
    """Density of d mu_t^{p0}: y^a G_a(x - x0, y, t - t0).

    On the trace plane y = 0 the y^a factor is dropped and the value is
    G_a(x - x0, 0, t - t0), the weight of the boundary-potential term.
    ``p0`` is (x0, t0) with x0 scalar (N = 1) or length-N.
    """
    x0, t0 = _split_center(p0, p.dim_n)
    tau = t - t0
    if not tau > 0.0:
        raise ValueError("t must exceed the center time t0")
    X = np.asarray(X, dtype=float)
    Xc = X.copy()
    Xc[..., : p.dim_n] -= x0
    g = np.asarray(fundamental_solution(Xc, tau, p))
    y = X[..., -1]
    out = np.where(y > 0.0, np.abs(y) ** p.a * g, g)
    return out if out.ndim else float(out)


def _split_center(p0, dim_n):
    x0, t0 = p0
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.size != dim_n:
        raise ValueError("center x0 has wrong dimension")
    return x0, float(t0)


def poisson_kernel(x, y: float, t: float, p: ExtensionParams):
    """P_y^a(x,t) = G_N(x,t) y^{1-a} t^{-1-(1-a)/2} e^{-y^2/4t} / (2^{1-a} G((1-a)/2)).

    Unit total mass over (x, t) in R^N x (0, inf) for every y > 0.
    """
    if not y > 0.0:
        raise ValueError("y must be positive")
    if not t > 0.0:
        raise ValueError("t must be positive")
    s = p.s
    x = np.asarray(x, dtype=float)
    sq = x * x if x.ndim == 0 else np.sum(np.atleast_1d(x) ** 2, axis=-1)
    log_gn = -0.5 * p.dim_n * math.log(4.0 * math.pi * t) - sq / (4.0 * t)
    log_rest = (
        (1.0 - p.a) * math.log(y)
        - (1.0 + s) * math.log(t)
        - y * y / (4.0 * t)
        - (2.0 * s * math.log(2.0) + log_gamma(s))
    )
    out = np.exp(log_gn + log_rest)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

_VARIANTS = ("neumann", "dirichlet-mass", "dirichlet-energy")


def _nodes_weights_from_recurrence(diag, offdiag, mass):
    """Golub-Welsch: spectrum of the symmetrized Jacobi matrix.

    ``diag`` holds the recurrence a_k, ``offdiag`` the b_k (k >= 1) of the
    monic three-term recurrence; ``mass`` is the zeroth moment b_0.
    Weights are mass * (first eigenvector component)^2.
    """
    band = np.vstack([np.r_[0.0, np.sqrt(offdiag)], diag])
    vals, vecs = eig_banded(band, lower=False)
    w = mass * vecs[0, :] ** 2
    # At high orders the first eigenvector component of the most extreme
    # nodes underflows to exact zero (the true weights there are below
    # ~1e-60 times the mass, invisible to any finite-degree integrand);
    # drop those nodes so every kept weight stays strictly positive.
    keep = w > 0.0
    vals, w = vals[keep], w[keep]
    if len(w) < 2 or np.any(~np.isfinite(w)):
        raise RuntimeError("quadrature weight construction failed")
    return vals, w


def _hermite_axis(order: int):
    """Nodes/weights for e^{-x^2/4} dx normalized to unit mass (variance 2)."""
    k = np.arange(order, dtype=float)
    diag = np.zeros(order)
    offdiag = 2.0 * k[1:]
    mass = 2.0 * math.sqrt(math.pi)
    x, w = _nodes_weights_from_recurrence(diag, offdiag, mass)
    return x, w / mass


def _laguerre_axis(order: int, alpha: float):
    """Nodes/weights for r^alpha e^{-r} dr on (0, inf), unnormalized."""
    k = np.arange(order, dtype=float)
    diag = 2.0 * k + alpha + 1.0
    offdiag = k[1:] * (k[1:] + alpha)
    mass = math.exp(log_gamma(alpha + 1.0))
    return _nodes_weights_from_recurrence(diag, offdiag, mass)


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor rule for the unit-time measure (or a weighted variant of it).

    ``nodes`` has shape (M, N+1) with columns x_1..x_N, y; ``weights`` sum
    to 1 for the plain variant and to the appropriate weighted mass for
    the dirichlet variants.  Rules are immutable; ``integrate`` is an
    order-fixed compensated sum, so results do not depend on evaluation
    schedule.
    """

    a: float
    dim_n: int
    orders: tuple
    variant: str
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def integrate(self, f) -> float:
        """Sum w_i f(node_i); f maps an (M, N+1) array to an (M,) array."""
        vals = np.asarray(f(self.nodes), dtype=float)
        return self.integrate_values(vals)

    def integrate_values(self, vals) -> float:
        vals = np.asarray(vals, dtype=float)
        if vals.shape != (self.nodes.shape[0],):
            raise ValueError("value array does not match node count")
        if not np.all(np.isfinite(vals)):
            raise ValueError("non-finite integrand value at a quadrature node")
        return math.fsum(self.weights * vals)

    def with_variant(self, variant: str) -> "QuadratureRule":
        """Sibling rule on the same parameters with a different y-weight."""
        p = ExtensionParams.from_a(self.a, self.dim_n)
        return build_quadrature(p, self.orders, variant=variant)

    def to_json(self) -> str:
        return json.dumps(
            {
                "a": self.a,
                "N": self.dim_n,
                "orders": list(self.orders),
                "variant": self.variant,
                "nodes": self.nodes.tolist(),
                "weights": self.weights.tolist(),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "QuadratureRule":
        doc = json.loads(text)
        return cls(
            a=float(doc["a"]),
            dim_n=int(doc["N"]),
            orders=tuple(doc["orders"]),
            variant=doc["variant"],
            nodes=np.asarray(doc["nodes"], dtype=float),
            weights=np.asarray(doc["weights"], dtype=float),
        )


def build_quadrature(p: ExtensionParams, orders=None, variant: str = "neumann"):
    """Tensor Gauss rule exact for polynomials against the chosen weight.

    orders: per-axis node counts (N entries for x, one for y); default 40
    each, each in [2, 128].
    """
    if variant not in _VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if orders is None:
        orders = (40,) * (p.dim_n + 1)
    orders = tuple(int(o) for o in orders)
    if len(orders) != p.dim_n + 1:
        raise ValueError("need one order per x-axis plus one for y")
    if any(o < 2 or o > 128 for o in orders):
        raise ValueError("orders must lie in [2, 128]")

    axes_nodes, axes_weights = [], []
    for ax in range(p.dim_n):
        x, w = _hermite_axis(orders[ax])
        axes_nodes.append(x)
        axes_weights.append(w)

    a = p.a
    if variant == "neumann":
        alpha = (a - 1.0) / 2.0
        prefactor_log = -log_gamma((1.0 + a) / 2.0)
    elif variant == "dirichlet-mass":
        alpha = (1.0 - a) / 2.0
        prefactor_log = (2.0 - 2.0 * a) * math.log(2.0) - log_gamma((1.0 + a) / 2.0)
    else:  # dirichlet-energy
        alpha = -(1.0 + a) / 2.0
        prefactor_log = -2.0 * a * math.log(2.0) - log_gamma((1.0 + a) / 2.0)
    r, wr = _laguerre_axis(orders[-1], alpha)
    y = 2.0 * np.sqrt(r)
    wy = wr * math.exp(prefactor_log)
    axes_nodes.append(y)
    axes_weights.append(wy)

    grids = np.meshgrid(*axes_nodes, indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    wgrids = np.meshgrid(*axes_weights, indexing="ij")
    weights = np.ones(nodes.shape[0])
    for wg in wgrids:
        weights = weights * wg.ravel()
    return QuadratureRule(
        a=p.a, dim_n=p.dim_n, orders=orders, variant=variant,
        nodes=nodes, weights=weights,
    )


def integrate(f, rule: QuadratureRule) -> float:
    """Module-level alias for rule.integrate(f)."""
    return rule.integrate(f)


def whole_space_integrate(f, rule: QuadratureRule) -> float:
    """Integral of f against the whole-space probability measure |y|^a G_a/2.

    Only the y-even part of f contributes; it is evaluated through the
    half-space rule by mirroring the y coordinate.  The weight |y|^a is
    never sampled across its singular plane.
    """
    mirrored = rule.nodes.copy()
    mirrored[:, -1] = -mirrored[:, -1]
    vals = 0.5 * (
        np.asarray(f(rule.nodes), dtype=float)
        + np.asarray(f(mirrored), dtype=float)
    )
    return rule.integrate_values(vals)
