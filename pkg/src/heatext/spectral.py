"""Ornstein-Uhlenbeck eigensystem on the weighted Gaussian space.

The symmetric operator  V -> -Lap V + (X/2).grad V  on L^2 of the
unit-time measure d mu (weight y^a e^{-|X|^2/4}) diagonalizes over
Hermite-Laguerre products.  With r = y^2/4:

* Neumann / whole-space-even modes
      V_{alpha,m} = H_alpha(x) L_{((a-1)/2), m}(r),
      kappa = n/2 + m,                 n = |alpha|;
* Dirichlet / whole-space-odd modes carry the boundary factor
      V = y^{1-a} H_alpha(x) L_{((1-a)/2), m}(r)          (half-space)
      V = y|y|^{-a} H_alpha(x) L_{((1-a)/2), m}(r)        (odd extension)
      kappa = n/2 + m + (1-a)/2.

Every eigenfunction is a polynomial times (possibly) the boundary factor
y^{1-a}; inner products fold that factor into the quadrature weight
(``dirichlet-mass`` / ``dirichlet-energy`` rule variants), so Gram
matrices and the weak identity

    int grad V . grad eta  d mu  =  kappa int V eta  d mu

are evaluated without sampling any non-polynomial integrand.  Gradients
come from the polynomial coefficient tables, never finite differences.

The sharp Gaussian-Poincare constants live here too: the spectral gap
nu* = min{1, 1-a}/2 for the whole-space problem gives

    Var(V) <= P_a int |grad V|^2 d mu,   P_a = 1/nu* = 2/min{1, 1-a},

with equality exactly on span{x_j} for a < 0, span{y|y|^{-a}} for a > 0,
and both at a = 0; the trace-vanishing (Dirichlet) bound is 2/(1-a).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np

from .gaussmeasure import ExtensionParams, QuadratureRule
from .polynomials import (
    XYTPoly,
    hermite_poly_in,
    laguerre_coefficients,
    scaled_hermite_theta,
    scaled_laguerre_theta,
)
from . import specfun

NEUMANN = "neumann"
DIRICHLET = "dirichlet"
WHOLE_EVEN = "whole-even"
WHOLE_ODD = "whole-odd"
_KINDS = (NEUMANN, DIRICHLET, WHOLE_EVEN, WHOLE_ODD)
_SINGULAR_KINDS = (DIRICHLET, WHOLE_ODD)

EIGENSPACE_CAP = 16


@dataclass(frozen=True)
class EigenIndex:
    """One eigenfunction label: problem kind, x multi-index, radial index."""

    kind: str
    alpha: tuple
    m: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        object.__setattr__(self, "alpha", tuple(int(v) for v in self.alpha))
        if any(v < 0 for v in self.alpha) or self.m < 0:
            raise ValueError("negative index")
        if self.n + 2 * self.m > EIGENSPACE_CAP:
            raise ValueError("index beyond eigenspace cap")

    @property
    def n(self) -> int:
        return sum(self.alpha)

    @property
    def singular(self) -> bool:
        """True when the eigenfunction carries the boundary factor."""
        return self.kind in _SINGULAR_KINDS


def eigenvalue(idx: EigenIndex, p: ExtensionParams) -> float:
    """kappa of the mode: n/2 + m, plus (1-a)/2 for the singular kinds."""
    kappa = idx.n / 2.0 + idx.m
    if idx.singular:
        kappa += (1.0 - p.a) / 2.0
    return kappa


def _poly_part(idx: EigenIndex, p: ExtensionParams) -> XYTPoly:
    """The polynomial factor g with V = g (regular) or V = y^{1-a} g."""
    dim_n = p.dim_n
    if len(idx.alpha) != dim_n:
        raise ValueError("multi-index length does not match dim_n")
    beta = (p.a - 1.0) / 2.0 if not idx.singular else (1.0 - p.a) / 2.0
    lag = laguerre_coefficients(beta, idx.m)
    g = XYTPoly(dim_n, {((0,) * dim_n, 2 * k, 0): float(c) / 4.0**k
                        for k, c in enumerate(lag)})
    for ax, nu in enumerate(idx.alpha):
        g = g * hermite_poly_in(dim_n, ax, nu)
    return g


def eigenfunction(idx: EigenIndex, p: ExtensionParams, X):
    """Pointwise value of V_{alpha,m}; X has shape (..., N+1)."""
    X = np.asarray(X, dtype=float)
    y = X[..., -1]
    if idx.kind in (NEUMANN, DIRICHLET) and np.any(y < 0):
        raise ValueError("half-space eigenfunction queried at y < 0")
    g = _poly_part(idx, p)(X, 0.0)
    if not idx.singular:
        return g
    if idx.kind == DIRICHLET:
        factor = np.abs(y) ** (1.0 - p.a)
    else:  # whole-space odd extension
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = y * np.abs(y) ** (-p.a)
        factor = np.where(y == 0.0, 0.0, factor)
    return factor * g


def theta_poly(idx: EigenIndex, p: ExtensionParams) -> XYTPoly:
    """Theta(X, t) = t^kappa V(X / sqrt t) for the regular (even) kinds.

    Singular kinds are not polynomial in (X, t); use theta_value.
    """
    if idx.singular:
        raise ValueError("singular modes have no polynomial caloric form")
    out = scaled_laguerre_theta(p.dim_n, (p.a - 1.0) / 2.0, idx.m)
    for ax, nu in enumerate(idx.alpha):
        out = out * scaled_hermite_theta(p.dim_n, ax, nu)
    return out


def theta_value(idx: EigenIndex, p: ExtensionParams, X, t):
    """t^kappa V(X / sqrt t) pointwise, valid for every kind (t > 0)."""
    X = np.asarray(X, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("theta_value requires t > 0")
    scale = np.sqrt(t)
    Xs = X / scale[..., None] if scale.ndim else X / scale
    kap = eigenvalue(idx, p)
    return t**kap * eigenfunction(idx, p, Xs)


# ---------------------------------------------------------------------------
# inner products
# ---------------------------------------------------------------------------

def _rule_trio(rule: QuadratureRule):
    if rule.variant != "neumann":
        raise ValueError("pass the plain-variant rule; siblings are derived")
    return rule, rule.with_variant("dirichlet-mass"), rule.with_variant(
        "dirichlet-energy"
    )


class _ModeData:
    """Cached node values of one eigenfunction and its gradient factors."""

    def __init__(self, idx: EigenIndex, p: ExtensionParams, rules):
        plain, mass, energy = rules
        self.idx = idx
        self.p = p
        g = _poly_part(idx, p)
        if not idx.singular:
            nodes = plain.nodes
            self.vals = g(nodes, 0.0)
            self.grad = [g.diff_x(ax)(nodes, 0.0) for ax in range(p.dim_n)]
            self.grad.append(g.diff_y()(nodes, 0.0))
        else:
            # V = y^{1-a} g: the x-gradient keeps the full factor, the
            # y-derivative is y^{-a} [(1-a) g + (y/2) dg/dy].
            self.vals = g(mass.nodes, 0.0)
            self.grad = [g.diff_x(ax)(mass.nodes, 0.0) for ax in range(p.dim_n)]
            en = energy.nodes
            gy = g.diff_y()(en, 0.0)
            self.grad_y_energy = (1.0 - p.a) * g(en, 0.0) + en[:, -1] * gy


def _mode_inner(u: _ModeData, v: _ModeData, rules):
    plain, mass, _ = rules
    if u.idx.singular != v.idx.singular:
        return 0.0  # opposite y-parity in whole-space mode
    r = mass if u.idx.singular else plain
    return r.integrate_values(u.vals * v.vals)


def _mode_dirichlet_form(u: _ModeData, v: _ModeData, rules):
    """int grad V_u . grad V_v d mu via the exact variant split."""
    plain, mass, energy = rules
    if u.idx.singular != v.idx.singular:
        return 0.0
    if not u.idx.singular:
        vals = sum(gu * gv for gu, gv in zip(u.grad, v.grad))
        return plain.integrate_values(vals)
    out = 0.0
    x_part = sum(gu * gv for gu, gv in zip(u.grad, v.grad))
    out += mass.integrate_values(x_part)
    out += energy.integrate_values(u.grad_y_energy * v.grad_y_energy)
    return out


def gram_matrix(indices: Sequence[EigenIndex], rule: QuadratureRule):
    """Matrix of normalized inner products <V_i/|V_i|, V_j/|V_j|>.

    Half-space kinds must not be mixed (their families are not mutually
    orthogonal); the two whole-space kinds may be, and their cross blocks
    vanish identically by parity.
    """
    kinds = {i.kind for i in indices}
    if len(kinds) > 1 and not kinds <= {WHOLE_EVEN, WHOLE_ODD}:
        raise ValueError("mixed kinds are only allowed in whole-space mode")
    p = ExtensionParams.from_a(rule.a, rule.dim_n)
    rules = _rule_trio(rule)
    modes = [_ModeData(i, p, rules) for i in indices]
    norms = []
    for md in modes:
        nrm2 = _mode_inner(md, md, rules)
        if nrm2 < 1e-14:
            raise ValueError(f"singular norm for index {md.idx}")
        norms.append(math.sqrt(nrm2))
    k = len(modes)
    out = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            val = _mode_inner(modes[i], modes[j], rules) / (norms[i] * norms[j])
            out[i, j] = out[j, i] = val
    return out


def eigen_norm(idx: EigenIndex, rule: QuadratureRule) -> float:
    """Quadrature L^2(d mu) norm of the (unnormalized) eigenfunction."""
    p = ExtensionParams.from_a(rule.a, rule.dim_n)
    rules = _rule_trio(rule)
    md = _ModeData(idx, p, rules)
    return math.sqrt(_mode_inner(md, md, rules))


def ou_residual(idx: EigenIndex, rule: QuadratureRule,
                test_set: Sequence[EigenIndex]) -> float:
    """max over eta of |int grad V.grad eta d mu - kappa int V eta d mu|.

    Both V and eta are normalized; gradients are analytic.
    """
    if not test_set:
        raise ValueError("empty test set")
    p = ExtensionParams.from_a(rule.a, rule.dim_n)
    rules = _rule_trio(rule)
    kap = eigenvalue(idx, p)
    md = _ModeData(idx, p, rules)
    nrm = math.sqrt(_mode_inner(md, md, rules))
    worst = 0.0
    for jdx in test_set:
        md2 = _ModeData(jdx, p, rules)
        nrm2 = math.sqrt(_mode_inner(md2, md2, rules))
        lhs = _mode_dirichlet_form(md, md2, rules) / (nrm * nrm2)
        rhs = kap * _mode_inner(md, md2, rules) / (nrm * nrm2)
        worst = max(worst, abs(lhs - rhs))
    return worst


# ---------------------------------------------------------------------------
# eigenspace enumeration
# ---------------------------------------------------------------------------

def _multi_indices(n: int, dim_n: int) -> List[tuple]:
    """All multi-indices of total degree n, lexicographically descending."""
    if dim_n == 1:
        return [(n,)]
    out = []
    for head in range(n, -1, -1):
        for tail in _multi_indices(n - head, dim_n - 1):
            out.append((head,) + tail)
    return out


def nu_star(kind: str, p: ExtensionParams) -> float:
    """Smallest nonzero eigenvalue: min{1, 1-a}/2 whole-space, 1/2 Neumann."""
    if kind in (NEUMANN,):
        return 0.5
    return min(1.0, 1.0 - p.a) / 2.0


def poincare_constant(kind: str, p: ExtensionParams) -> float:
    if kind == "whole-space":
        return 2.0 / min(1.0, 1.0 - p.a)
    if kind == "half-space":
        return 2.0
    if kind == "dirichlet":
        return 2.0 / (1.0 - p.a)
    raise ValueError(f"unknown poincare kind {kind!r}")


def eigenspace(kappa: float, kind: str, p: ExtensionParams,
               cap: int = EIGENSPACE_CAP) -> List[EigenIndex]:
    """All indices under the cap whose eigenvalue matches kappa to 1e-12."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if kind not in _KINDS:
        raise ValueError(f"unknown problem kind {kind!r}")
    shift = (1.0 - p.a) / 2.0 if kind in _SINGULAR_KINDS else 0.0
    out = []
    for m in range(cap // 2 + 1):
        target_n = 2.0 * (kappa - shift - m)
        n = round(target_n)
        if n < 0 or abs(target_n - n) > 2e-12 or n + 2 * m > cap:
            continue
        for alpha in _multi_indices(int(n), p.dim_n):
            out.append(EigenIndex(kind, alpha, m))
    return out


def admissible_frequencies(kinds: Iterable[str], p: ExtensionParams,
                           cap: int = EIGENSPACE_CAP) -> List[float]:
    """Sorted distinct eigenvalues reachable under the cap for the kinds."""
    vals = set()
    for kind in kinds:
        shift = (1.0 - p.a) / 2.0 if kind in _SINGULAR_KINDS else 0.0
        for m in range(cap // 2 + 1):
            for n in range(cap - 2 * m + 1):
                vals.add(n / 2.0 + m + shift)
    return sorted(vals)


def all_indices(kind: str, p: ExtensionParams, cap: int) -> List[EigenIndex]:
    """Every index of one kind with n + 2m <= cap, kappa-ordered."""
    out = []
    for m in range(cap // 2 + 1):
        for n in range(cap - 2 * m + 1):
            for alpha in _multi_indices(n, p.dim_n):
                out.append(EigenIndex(kind, alpha, m))
    pp = p
    out.sort(key=lambda i: (eigenvalue(i, pp), i.m, i.alpha))
    return out


# ---------------------------------------------------------------------------
# Poincare ratios
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeparatedFunction:
    """A function y^{1-a} g(x, y) (g y-even) or its odd extension y|y|^{-a} g.

    The boundary factor is kept symbolic so that every integral reduces to
    a polynomial against one of the weighted rule variants.
    """

    gpoly: XYTPoly
    odd_extension: bool = False


def extremal_x(p: ExtensionParams, axis: int = 0) -> XYTPoly:
    """Coordinate extremal x_j, sharp for a <= 0."""
    return XYTPoly.coordinate(p.dim_n, "x", axis)


def extremal_boundary(p: ExtensionParams, whole_space: bool = True):
    """Boundary extremal y|y|^{-a} (whole) / y^{1-a} (Dirichlet), sharp a >= 0."""
    return SeparatedFunction(
        XYTPoly.constant(p.dim_n, 1.0), odd_extension=whole_space
    )


def _zero_over_zero(num: float, den: float) -> float:
    if den < 1e-14:
        if abs(num) < 1e-14:
            return 0.0
        raise ValueError("zero gradient energy with nonzero variance")
    return num / den


def poincare_ratio(V, kind: str, rule: QuadratureRule) -> float:
    """Rayleigh quotient of the Gaussian-Poincare inequality.

    kind = 'whole-space' | 'half-space': mean-centered variance over
    gradient energy; kind = 'dirichlet': plain norm over gradient energy
    (no centering — the function vanishes on the trace plane).

    V may be an XYTPoly (x- and y-powers; for the whole-space measure the
    parity split keeps every integral polynomial-exact), a
    SeparatedFunction for the boundary-factor family, or a pair of
    callables (value, gradient) evaluated at the nodes.
    """
    if kind not in ("whole-space", "half-space", "dirichlet"):
        raise ValueError(f"unknown poincare kind {kind!r}")
    p = ExtensionParams.from_a(rule.a, rule.dim_n)

    if isinstance(V, SeparatedFunction):
        plain, mass, energy = _rule_trio(rule)
        g = V.gpoly
        num = mass.integrate_values(g(mass.nodes, 0.0) ** 2)
        if kind != "dirichlet" and not V.odd_extension:
            # half-space boundary factor has a nonzero mean
            mean = _separated_mean(g, rule, p)
            num -= mean * mean
        gy = g.diff_y()(energy.nodes, 0.0)
        rad = (1.0 - p.a) * g(energy.nodes, 0.0) + energy.nodes[:, -1] * gy
        den = energy.integrate_values(rad**2)
        for ax in range(p.dim_n):
            den += mass.integrate_values(g.diff_x(ax)(mass.nodes, 0.0) ** 2)
        return _zero_over_zero(num, den)

    if isinstance(V, XYTPoly):
        if kind == "dirichlet":
            raise ValueError("dirichlet kind requires the boundary factor")
        even, odd = V.y_even_part(), V.y_odd_part()
        if kind == "half-space":
            vals = V(rule.nodes, 0.0)
            mean = rule.integrate_values(vals)
            num = rule.integrate_values(vals**2) - mean**2
            grads = [V.diff_x(ax)(rule.nodes, 0.0) for ax in range(p.dim_n)]
            grads.append(V.diff_y()(rule.nodes, 0.0))
            den = rule.integrate_values(sum(g * g for g in grads))
            return _zero_over_zero(num, den)
        # whole space: only even parts of each squared quantity survive
        mean = rule.integrate_values(even(rule.nodes, 0.0))
        num = (
            rule.integrate_values(even(rule.nodes, 0.0) ** 2)
            + rule.integrate_values(odd(rule.nodes, 0.0) ** 2)
            - mean**2
        )
        den = 0.0
        for part in (even, odd):
            grads = [part.diff_x(ax)(rule.nodes, 0.0) for ax in range(p.dim_n)]
            grads.append(part.diff_y()(rule.nodes, 0.0))
            den += rule.integrate_values(sum(g * g for g in grads))
        return _zero_over_zero(num, den)

    value_f, grad_f = V
    vals = np.asarray(value_f(rule.nodes), dtype=float)
    grads = np.asarray(grad_f(rule.nodes), dtype=float)
    num = rule.integrate_values(vals**2)
    if kind != "dirichlet":
        mean = rule.integrate_values(vals)
        num -= mean**2
    den = rule.integrate_values(np.sum(grads**2, axis=-1))
    return _zero_over_zero(num, den)


def _separated_mean(g: XYTPoly, rule: QuadratureRule, p: ExtensionParams):
    """int y^{1-a} g d mu over the half-space, via the plain rule.

    The integrand y^{1-a} x polynomial is not polynomial in y^2; the plain
    Gauss rule still converges fast and the mean only enters half-space
    diagnostics, never the sharp-constant assertions.
    """
    vals = rule.nodes[:, -1] ** (1.0 - p.a) * g(rule.nodes, 0.0)
    return rule.integrate_values(vals)


def random_polynomial(rng: np.random.Generator, p: ExtensionParams,
                      degree: int = 6) -> XYTPoly:
    """Random coefficients on all monomials x^alpha y^beta, |alpha|+beta <= degree."""
    coeffs = {}
    for total in range(degree + 1):
        for alpha in _multi_indices_upto(total, p.dim_n):
            beta = total - sum(alpha)
            coeffs[(alpha, beta, 0)] = float(rng.standard_normal())
    return XYTPoly(p.dim_n, coeffs)


def _multi_indices_upto(total: int, dim_n: int):
    for ks in itertools.product(range(total + 1), repeat=dim_n):
        if sum(ks) <= total:
            yield ks


def poincare_corpus(rng: np.random.Generator, p: ExtensionParams,
                    count: int = 100, degree: int = 6):
    """The random test family used for the sharpness sweep."""
    return [random_polynomial(rng, p, degree) for _ in range(count)]
