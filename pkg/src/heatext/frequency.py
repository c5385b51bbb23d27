"""Monotonicity functionals of the weighted heat flow.

Everything here analyzes a field W(X, t) centered at a trace point and
viewed in backward time: t > 0 means "t before the anchor".  The basic
quantities at a single time are

    h(t)  = int W^2 dmu_t,
    d0(t) = t * int |grad W|^2 dmu_t,
    d(t)  = d0(t) - t * int q w^2 dmu_t(x, 0),
    i(t)  = (1/2) int W * (2t dt W + X.grad W) dmu_t,

with dmu_t the weighted Gaussian probability measure of the extension
operator.  Their time averages H, D0, D, I over (0, r^2), the
Almgren-Poon quotients N = D-type/H, the exponentially corrected
Phi_a, the Weiss and Monneau energies, and the
Alt-Caffarelli-Friedman integral J are all built on one spatial
quadrature rule laid out in the self-similar variable X/sqrt(t), so a
single rule serves every time slice.

Fields come in two flavors: closed-form polynomials (exact evaluation
and derivatives) and solver lattices (trilinear interpolation with
lattice finite-difference gradients).  Both expose the same small
surface, so every functional is written once.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import roots_hermite, roots_jacobi, roots_legendre

from .gaussmeasure import ExtensionParams, QuadratureRule, build_quadrature
from .polynomials import XYTPoly
from .spectral import SeparatedFunction
from .solver import GridField, PotentialField, _bottom_gamma, trace_values

__all__ = [
    "CalibrationError",
    "FieldHandle",
    "PolyField",
    "GridHandle",
    "FrequencyProfile",
    "VanishingOrder",
    "default_rule",
    "instant_energies",
    "averaged",
    "quotients",
    "phi_a",
    "weiss",
    "t_sigma",
    "monneau",
    "acf_j",
    "vanishing_order",
    "frequency_profile",
    "radius_ladder",
    "grid_min_radius",
    "calibrate_constant",
    "ACF_NEUMANN",
    "ACF_DIRICHLET",
    "ACF_WHOLE",
]

ACF_NEUMANN = "neumann"
ACF_DIRICHLET = "dirichlet"
ACF_WHOLE = "whole-space"

H_FLOOR = 1e-14


class CalibrationError(RuntimeError):
    """No constant on the search grid makes the ladder nondecreasing."""


# ---------------------------------------------------------------------------
# field handles
# ---------------------------------------------------------------------------

class FieldHandle:
    """Common surface of analyzable fields.

    value / gradient / time_derivative map an (M, N+1) node array and a
    scalar backward time to (M,) arrays; forcing is the equation's
    right-hand side (zero for global solutions); trace evaluates on the
    thin plane y = 0; potential_trace returns q on the trace or None.
    """

    params: ExtensionParams

    def value(self, X: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, X: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    def time_derivative(self, X: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    def forcing(self, X: np.ndarray, t: float) -> np.ndarray:
        return np.zeros(np.asarray(X).shape[:-1])

    def trace(self, x: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    def potential_trace(self, x: np.ndarray, t: float):
        return None


class PolyField(FieldHandle):
    """Closed-form field: an XYTPoly in centered backward coordinates.

    ``q`` is an optional callable q(x, t) on the trace (backward time);
    ``forcing`` an optional XYTPoly right-hand side.
    """

    def __init__(self, poly: XYTPoly, params: ExtensionParams,
                 q: Optional[Callable] = None,
                 forcing: Optional[XYTPoly] = None):
        if poly.dim_n != params.dim_n:
            raise ValueError("polynomial dimension does not match params")
        self.poly = poly
        self.params = params
        self.q = q
        self._forcing = forcing
        self._gx = [poly.diff_x(ax) for ax in range(params.dim_n)]
        self._gy = poly.diff_y()
        self._gt = poly.diff_t()

    def value(self, X, t):
        return np.asarray(self.poly(X, t), dtype=float)

    def gradient(self, X, t):
        cols = [g(X, t) for g in self._gx] + [self._gy(X, t)]
        return np.stack([np.asarray(c, dtype=float) for c in cols], axis=-1)

    def time_derivative(self, X, t):
        return np.asarray(self._gt(X, t), dtype=float)

    def forcing(self, X, t):
        if self._forcing is None:
            return np.zeros(np.asarray(X).shape[:-1])
        return np.asarray(self._forcing(X, t), dtype=float)

    def trace(self, x, t):
        return np.asarray(self.poly.eval_trace(x, t), dtype=float)

    def potential_trace(self, x, t):
        if self.q is None:
            return None
        return np.asarray(self.q(x, t), dtype=float)


def _bracket_arrays(grid: np.ndarray, v: np.ndarray):
    """Vectorized bracketing: cell index and clipped linear weight."""
    idx = np.clip(np.searchsorted(grid, v, side="right") - 1,
                  0, len(grid) - 2)
    w = (v - grid[idx]) / (grid[idx + 1] - grid[idx])
    return idx, np.clip(w, 0.0, 1.0)


class GridHandle(FieldHandle):
    """Backward-in-time centered view of a solver lattice.

    ``anchor`` = (x0, t0) picks the trace point in forward solver
    coordinates; the handle exposes W(X, t) = field(x0 + x, y, t0 - t).
    Gradients are lattice finite differences (centered in the interior,
    one-sided at the boundaries; at the bottom row the potential flux
    -q*w*y0^{-a} is substituted when q is supplied), interpolated
    trilinearly.  Values below the first cell row follow the solver's
    y^{1-a} bottom profile.  Spatial queries outside the lattice hull
    evaluate to zero; the measure thus dropped is appended per call to
    ``dropped_log`` by the energy routines.
    """

    def __init__(self, w_field: GridField, anchor: Tuple[float, float],
                 f_field: Optional[GridField] = None,
                 q: Optional[PotentialField] = None):
        spec = w_field.spec
        self.params = ExtensionParams.from_a(spec.a, 1)
        self.spec = spec
        self.w_field = w_field
        self.f_field = f_field
        self.q = q
        self.x0, self.t0 = float(anchor[0]), float(anchor[1])
        if not (0.0 < self.t0 <= spec.t_final + 1e-12):
            raise ValueError("anchor time outside the field's time range")
        self._xg = spec.x_nodes()
        self._yc = spec.y_cells()
        self._tg = spec.t_nodes()
        self._gamma = _bottom_gamma(spec)
        self.dropped_log = []
        v = w_field.values
        gx = np.gradient(v, spec.dx, axis=1, edge_order=2)
        gy = np.empty_like(v)
        gy[:, :, 1:-1] = (v[:, :, 2:] - v[:, :, :-2]) / (2.0 * spec.dy)
        gy[:, :, -1] = (v[:, :, -1] - v[:, :, -2]) / spec.dy
        if q is not None:
            tr = np.stack([trace_values(w_field, n)
                           for n in range(spec.nt + 1)])
            gy[:, :, 0] = -q.values * tr * self._yc[0] ** (-spec.a)
        else:
            gy[:, :, 0] = (v[:, :, 1] - v[:, :, 0]) / spec.dy
        gt = np.gradient(v, spec.dt, axis=0, edge_order=2)
        self._gx, self._gy, self._gt = gx, gy, gt

    # -- lattice interpolation ---------------------------------------------
    def _forward_coords(self, X, t: float):
        X = np.asarray(X, dtype=float)
        xq = self.x0 + X[..., 0]
        yq = X[..., 1]
        tq = self.t0 - t
        if not (-1e-12 <= tq <= self.spec.t_final + 1e-12):
            raise ValueError("backward time outside the field's time hull")
        return xq, yq, float(min(max(tq, 0.0), self.spec.t_final))

    def in_hull(self, X, t: float) -> np.ndarray:
        xq, yq, _ = self._forward_coords(X, t)
        s = self.spec
        return ((xq >= s.xmin - 1e-12) & (xq <= s.xmax + 1e-12)
                & (yq >= -1e-12) & (yq <= self._yc[-1] + 1e-12))

    def _interp(self, arr: np.ndarray, xq, yq, tq: float,
                profile: bool) -> np.ndarray:
        s = self.spec
        inside = ((xq >= s.xmin - 1e-12) & (xq <= s.xmax + 1e-12)
                  & (yq >= -1e-12) & (yq <= self._yc[-1] + 1e-12))
        xc = np.clip(xq, s.xmin, s.xmax)
        yc = np.clip(yq, 0.0, self._yc[-1])
        it, wt = _bracket_arrays(self._tg, np.full_like(xc, tq))
        ix, wx = _bracket_arrays(self._xg, xc)
        iy, wy = _bracket_arrays(self._yc, np.maximum(yc, self._yc[0]))
        out = np.zeros_like(xc)
        for dt, wfac in ((0, 1.0 - wt), (1, wt)):
            ti = it + dt
            c00 = arr[ti, ix, iy]
            c01 = arr[ti, ix, iy + 1]
            c10 = arr[ti, ix + 1, iy]
            c11 = arr[ti, ix + 1, iy + 1]
            plane = ((1 - wx) * ((1 - wy) * c00 + wy * c01)
                     + wx * ((1 - wy) * c10 + wy * c11))
            if profile:
                below = yc < self._yc[0]
                if np.any(below):
                    g = self._gamma
                    v0l, v1l = arr[ti, ix, 0], arr[ti, ix, 1]
                    v0r, v1r = arr[ti, ix + 1, 0], arr[ti, ix + 1, 1]
                    trl = (1.0 + g) * v0l - g * v1l
                    trr = (1.0 + g) * v0r - g * v1r
                    frac = (yc / self._yc[0]) ** (1.0 - s.a)
                    pl = trl + (v0l - trl) * frac
                    pr = trr + (v0r - trr) * frac
                    plane = np.where(below, (1 - wx) * pl + wx * pr, plane)
            out = out + wfac * plane
        return np.where(inside, out, 0.0)

    # -- FieldHandle surface -------------------------------------------------
    def value(self, X, t):
        xq, yq, tq = self._forward_coords(X, t)
        return self._interp(self.w_field.values, xq, yq, tq, profile=True)

    def gradient(self, X, t):
        xq, yq, tq = self._forward_coords(X, t)
        gx = self._interp(self._gx, xq, yq, tq, profile=False)
        gy = self._interp(self._gy, xq, yq, tq, profile=False)
        return np.stack([gx, gy], axis=-1)

    def time_derivative(self, X, t):
        xq, yq, tq = self._forward_coords(X, t)
        return -self._interp(self._gt, xq, yq, tq, profile=False)

    def forcing(self, X, t):
        if self.f_field is None:
            return np.zeros(np.asarray(X).shape[:-1])
        xq, yq, tq = self._forward_coords(X, t)
        return self._interp(self.f_field.values, xq, yq, tq, profile=False)

    def trace(self, x, t):
        x = np.asarray(x, dtype=float)
        X = np.stack([x, np.zeros_like(x)], axis=-1)
        return self.value(X, t)

    def potential_trace(self, x, t):
        if self.q is None:
            return None
        xq = self.x0 + np.asarray(x, dtype=float)
        tq = self.t0 - t
        it, wt = _bracket_arrays(self._tg, np.full_like(xq, tq))
        ix, wx = _bracket_arrays(self._xg, np.clip(xq, self.spec.xmin,
                                                   self.spec.xmax))
        qv = self.q.values
        out = ((1 - wt) * ((1 - wx) * qv[it, ix] + wx * qv[it, ix + 1])
               + wt * ((1 - wx) * qv[it + 1, ix] + wx * qv[it + 1, ix + 1]))
        inside = (xq >= self.spec.xmin - 1e-12) & (xq <= self.spec.xmax + 1e-12)
        return np.where(inside, out, 0.0)


# ---------------------------------------------------------------------------
# quadrature helpers
# ---------------------------------------------------------------------------

@lru_cache(maxsize=16)
def _default_rule_cached(a: float, dim_n: int) -> QuadratureRule:
    return build_quadrature(ExtensionParams.from_a(a, dim_n))


def default_rule(p: ExtensionParams) -> QuadratureRule:
    """Shared 40-node-per-axis rule for the unit-time measure."""
    return _default_rule_cached(p.a, p.dim_n)


@lru_cache(maxsize=16)
def _trace_nodes(dim_n: int, order: int):
    """Nodes/weights of the unit-time trace Gaussian N(0,2) per axis."""
    z, w = roots_hermite(order)
    x = 2.0 * z
    w = w / math.sqrt(math.pi)
    if dim_n == 1:
        return x.reshape(-1, 1), w
    grids = np.meshgrid(*([x] * dim_n), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    wg = np.meshgrid(*([w] * dim_n), indexing="ij")
    weights = np.ones(nodes.shape[0])
    for g in wg:
        weights = weights * g.ravel()
    return nodes, weights


@lru_cache(maxsize=64)
def _gl_nodes(order: int):
    return roots_legendre(order)


@lru_cache(maxsize=64)
def _jacobi_nodes(order: int, beta: float):
    return roots_jacobi(order, 0.0, beta)


def _trace_prefactor(p: ExtensionParams, t: float) -> float:
    """Density factor of dmu_t restricted to the plane y = 0."""
    a = p.a
    return t ** (-(1.0 + a) / 2.0) / (
        2.0 ** a * math.exp(math.lgamma((1.0 + a) / 2.0)))


# ---------------------------------------------------------------------------
# instant and averaged energies
# ---------------------------------------------------------------------------

def instant_energies(W: FieldHandle, t: float,
                     rule: Optional[QuadratureRule] = None,
                     trace_order: int = 48):
    """(h, d0, d, i) at one backward time t > 0.

    h is the height, d0 the Dirichlet energy scaled by t, d subtracts
    the potential's trace drift, and i is the Z-operator pairing
    (1/2) int W (2t dt W + X . grad W) dmu_t.  Quadrature nodes outside
    a lattice hull contribute zero; the measure so dropped is appended
    to the handle's dropped_log.
    """
    if t <= 0.0:
        raise ValueError("instant energies need t > 0")
    p = W.params
    if rule is None:
        rule = default_rule(p)
    if rule.variant != "neumann":
        raise ValueError("instant energies use the plain measure rule")
    X = math.sqrt(t) * rule.nodes
    wts = rule.weights
    if hasattr(W, "in_hull"):
        inside = W.in_hull(X, t)
        W.dropped_log.append((t, float(np.sum(wts[~inside]))))
    vals = W.value(X, t)
    h = math.fsum(wts * vals * vals)
    grads = W.gradient(X, t)
    d0 = t * math.fsum(wts * np.sum(grads * grads, axis=-1))
    dt_vals = W.time_derivative(X, t)
    zw = 2.0 * t * dt_vals + np.sum(X * grads, axis=-1)
    i = 0.5 * math.fsum(wts * vals * zw)
    d = d0
    xtr, wtr = _trace_nodes(p.dim_n, trace_order)
    qv = W.potential_trace(math.sqrt(t) * xtr[:, 0] if p.dim_n == 1
                           else math.sqrt(t) * xtr, t)
    if qv is not None:
        xs = math.sqrt(t) * xtr[:, 0] if p.dim_n == 1 else math.sqrt(t) * xtr
        wv = W.trace(xs, t)
        drift = _trace_prefactor(p, t) * math.fsum(wtr * qv * wv * wv)
        d = d0 - t * drift
    return h, d0, d, i


def averaged(W: FieldHandle, r: float,
             rule: Optional[QuadratureRule] = None,
             torder: int = 16, trace_order: int = 48):
    """(H, D0, D, I): means of the instant energies over (0, r^2)."""
    if r <= 0.0:
        raise ValueError("averaging radius must be positive")
    zs, zw = _gl_nodes(torder)
    taus = r * r * (zs + 1.0) / 2.0
    parts = [instant_energies(W, float(tau), rule, trace_order)
             for tau in taus]
    out = []
    for k in range(4):
        out.append(math.fsum(0.5 * zw[j] * parts[j][k]
                             for j in range(len(taus))))
    return tuple(out)


def quotients(W: FieldHandle, r: float,
              rule: Optional[QuadratureRule] = None,
              torder: int = 16):
    """(N0, ND, NI) = (D0/H, D/H, I/H); requires H above the floor."""
    H, D0, D, I = averaged(W, r, rule, torder)
    if H <= H_FLOOR:
        raise ValueError("height too small to form quotients")
    return D0 / H, D / H, I / H


def phi_a(W: FieldHandle, r: float, C: float = 0.0,
          rule: Optional[QuadratureRule] = None, torder: int = 16) -> float:
    """Exponentially corrected quotient e^{Cr^{1-a}} N_I + e^{Cr^{1-a}} - 1."""
    if C < 0.0:
        raise ValueError("the correction constant must be >= 0")
    _, _, ni = quotients(W, r, rule, torder)
    bump = math.exp(C * r ** (1.0 - W.params.a))
    return bump * ni + bump - 1.0


def weiss(W: FieldHandle, r: float, sigma: float,
          rule: Optional[QuadratureRule] = None, torder: int = 16) -> float:
    """Weiss energy r^{-2 sigma} (D - (sigma/2) H)."""
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    H, D0, D, I = averaged(W, r, rule, torder)
    return r ** (-2.0 * sigma) * (D - 0.5 * sigma * H)


def t_sigma(W: FieldHandle, r: float, sigma: float,
            rule: Optional[QuadratureRule] = None, torder: int = 16) -> float:
    """Height ratio H(W, r) / r^{2 sigma}."""
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    H, _, _, _ = averaged(W, r, rule, torder)
    return H / r ** (2.0 * sigma)


def _height_of(value_fn: Callable, params: ExtensionParams, r: float,
               rule: Optional[QuadratureRule], torder: int) -> float:
    if rule is None:
        rule = default_rule(params)
    zs, zw = _gl_nodes(torder)
    taus = r * r * (zs + 1.0) / 2.0
    terms = []
    for j, tau in enumerate(taus):
        X = math.sqrt(tau) * rule.nodes
        v = value_fn(X, float(tau))
        terms.append(0.5 * zw[j] * math.fsum(rule.weights * v * v))
    return math.fsum(terms)


def monneau(W: FieldHandle, theta, r: float,
            rule: Optional[QuadratureRule] = None,
            torder: int = 16, kappa: Optional[float] = None) -> float:
    """Monneau energy r^{-4 kappa} H(W - Theta, r).

    ``theta`` is a tangent map (anything with .poly and .kappa) or a
    plain XYTPoly, in which case kappa must be passed explicitly.
    """
    poly = getattr(theta, "poly", theta)
    if kappa is None:
        kappa = getattr(theta, "kappa", None)
    if kappa is None:
        raise ValueError("kappa is required when theta is a bare polynomial")
    if isinstance(poly, property):  # defensive: class attribute passed
        raise TypeError("theta must be an instance, not a class")

    def diff(X, t):
        return W.value(X, t) - np.asarray(poly(X, t), dtype=float)

    H = _height_of(diff, W.params, r, rule, torder)
    return H / r ** (4.0 * kappa)


# ---------------------------------------------------------------------------
# Alt-Caffarelli-Friedman integral
# ---------------------------------------------------------------------------

_ACF_MODES = (ACF_NEUMANN, ACF_DIRICHLET, ACF_WHOLE)


def _acf_exponent(mode: str, a: float) -> float:
    if mode == ACF_NEUMANN:
        return 1.0
    if mode == ACF_DIRICHLET:
        return 1.0 - a
    return min(1.0, 1.0 - a)


def acf_j(U, t: float, mode: str = ACF_NEUMANN,
          params: Optional[ExtensionParams] = None,
          rule: Optional[QuadratureRule] = None, torder: int = 16) -> float:
    """J(U, t) = t^{-p} int_0^t int |grad U|^2 dmu_tau dtau.

    p is 1 (Neumann), 1-a (Dirichlet) or min{1, 1-a} (whole space).
    U may be a FieldHandle, a bare XYTPoly (with ``params``), or a
    SeparatedFunction y^{1-a} g; in the separated case the singular
    factor is integrated exactly through the weighted rule variants and
    a Jacobi rule absorbs the tau^{-a} time singularity.
    """
    if mode not in _ACF_MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if t <= 0.0:
        raise ValueError("J needs t > 0")
    if isinstance(U, SeparatedFunction):
        if params is None:
            raise ValueError("separated profiles need explicit params")
        return _acf_separated(U, t, mode, params, rule, torder)
    if isinstance(U, XYTPoly):
        if params is None:
            raise ValueError("bare polynomials need explicit params")
        U = PolyField(U, params)
    p = U.params
    a = p.a
    zs, zw = _gl_nodes(torder)
    taus = t * (zs + 1.0) / 2.0
    if rule is None:
        rule = default_rule(p)
    terms = []
    for j, tau in enumerate(taus):
        X = math.sqrt(tau) * rule.nodes
        g = U.gradient(X, float(tau))
        terms.append(0.5 * t * zw[j]
                     * math.fsum(rule.weights * np.sum(g * g, axis=-1)))
    return math.fsum(terms) / t ** _acf_exponent(mode, a)


def _acf_separated(U: SeparatedFunction, t: float, mode: str,
                   p: ExtensionParams, rule: Optional[QuadratureRule],
                   torder: int) -> float:
    """J for y^{1-a} g profiles: |grad U|^2 splits into the weighted
    variants y^{2-2a}|grad_x g|^2 + y^{-2a}((1-a)g + y g_y)^2, whose
    integrals scale like tau^{1-a} and tau^{-a}; the common tau^{-a} is
    absorbed by a Gauss-Jacobi time rule so the quadrature stays exact
    for polynomial g."""
    a = p.a
    if rule is None:
        rule = default_rule(p)
    mass = rule.with_variant("dirichlet-mass")
    energy = rule.with_variant("dirichlet-energy")
    g = U.gpoly
    gx = [g.diff_x(ax) for ax in range(p.dim_n)]
    gy = g.diff_y()

    def bracket(tau: float) -> float:
        Xm = math.sqrt(tau) * mass.nodes
        sq = np.zeros(Xm.shape[0])
        for gc in gx:
            vals = np.asarray(gc(Xm, tau), dtype=float)
            sq = sq + vals * vals
        vals_gy = np.asarray(gy(Xm, tau), dtype=float)
        sq = sq + vals_gy * vals_gy
        term_mass = math.fsum(mass.weights * sq)
        Xe = math.sqrt(tau) * energy.nodes
        rad = ((1.0 - a) * np.asarray(g(Xe, tau), dtype=float)
               + Xe[:, -1] * np.asarray(gy(Xe, tau), dtype=float))
        term_energy = math.fsum(energy.weights * rad * rad)
        return tau * term_mass + term_energy

    zs, zw = _jacobi_nodes(torder, -a)
    taus = t * (zs + 1.0) / 2.0
    integral = (t / 2.0) ** (1.0 - a) * math.fsum(
        zw[j] * bracket(float(taus[j])) for j in range(len(taus)))
    return integral / t ** _acf_exponent(mode, a)


# ---------------------------------------------------------------------------
# profiles, vanishing order, calibration
# ---------------------------------------------------------------------------

_PROFILE_COLUMNS = ("H", "D0", "D", "I", "N0", "ND", "NI",
                    "Phi", "Weiss", "Tsigma")


@dataclass(frozen=True)
class FrequencyProfile:
    """Per-radius table of every functional, ready for CSV export."""

    params: ExtensionParams
    p0: Tuple[float, float]
    sigma: float
    constant: float
    radii: np.ndarray
    columns: Dict[str, np.ndarray]

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if r.ndim != 1 or len(r) < 1:
            raise ValueError("profile needs a one-dimensional radius ladder")
        if not np.all(np.diff(r) < 0):
            raise ValueError("radii must be strictly decreasing")
        for key in _PROFILE_COLUMNS:
            if key not in self.columns:
                raise ValueError(f"missing column {key!r}")
            if len(self.columns[key]) != len(r):
                raise ValueError(f"column {key!r} length mismatch")
        if np.any(np.asarray(self.columns["H"]) <= 0.0):
            raise ValueError("heights must be positive where reported")

    def header(self) -> dict:
        return {
            "a": self.params.a,
            "s": self.params.s,
            "sigma": self.sigma,
            "C": self.constant,
            "p0": [self.p0[0], self.p0[1]],
        }

    def to_csv(self, path: Optional[str] = None,
               extra_header: Optional[dict] = None) -> str:
        head = self.header()
        if extra_header:
            head.update(extra_header)
        lines = ["# " + json.dumps(head, sort_keys=True)]
        lines.append("r," + ",".join(_PROFILE_COLUMNS))
        for k in range(len(self.radii)):
            row = [self.radii[k]] + [self.columns[c][k]
                                     for c in _PROFILE_COLUMNS]
            lines.append(",".join("%.17g" % v for v in row))
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text: str) -> "FrequencyProfile":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("#"):
            raise ValueError("missing JSON header line")
        head = json.loads(lines[0][1:].strip())
        names = lines[1].split(",")
        if names[0] != "r" or tuple(names[1:]) != _PROFILE_COLUMNS:
            raise ValueError("unexpected column header")
        rows = np.array([[float(v) for v in ln.split(",")]
                         for ln in lines[2:]])
        cols = {name: rows[:, 1 + k]
                for k, name in enumerate(_PROFILE_COLUMNS)}
        return cls(
            params=ExtensionParams.from_a(float(head["a"]), 1),
            p0=(float(head["p0"][0]), float(head["p0"][1])),
            sigma=float(head["sigma"]),
            constant=float(head["C"]),
            radii=rows[:, 0],
            columns=cols,
        )


def radius_ladder(r0: float = 0.4, levels: int = 12,
                  min_radius: float = 0.0) -> np.ndarray:
    """Geometric ladder r0 * 2^{-l/2}, truncated below min_radius."""
    r = r0 * 2.0 ** (-0.5 * np.arange(levels))
    r = r[r >= min_radius - 1e-15]
    if len(r) == 0:
        raise ValueError("ladder empty: min_radius exceeds the top radius")
    return r


def grid_min_radius(spec) -> float:
    """Smallest trustworthy ladder radius on a lattice: four cells."""
    return 4.0 * max(spec.dx, spec.dy)


def frequency_profile(W: FieldHandle, radii: Optional[np.ndarray] = None,
                      rule: Optional[QuadratureRule] = None,
                      sigma: float = 1.0, C: float = 0.0,
                      p0: Tuple[float, float] = (0.0, 0.0),
                      torder: int = 16) -> FrequencyProfile:
    """Evaluate every functional down the radius ladder."""
    if radii is None:
        if isinstance(W, GridHandle):
            radii = radius_ladder(min_radius=grid_min_radius(W.spec))
        else:
            radii = radius_ladder()
    radii = np.asarray(radii, dtype=float)
    if isinstance(W, GridHandle):
        p0 = (W.x0, W.t0)
    cols = {name: np.empty(len(radii)) for name in _PROFILE_COLUMNS}
    for k, r in enumerate(radii):
        H, D0, D, I = averaged(W, float(r), rule, torder)
        if H <= H_FLOOR:
            raise ValueError(f"height vanished at radius {r}")
        bump = math.exp(C * r ** (1.0 - W.params.a))
        cols["H"][k] = H
        cols["D0"][k] = D0
        cols["D"][k] = D
        cols["I"][k] = I
        cols["N0"][k] = D0 / H
        cols["ND"][k] = D / H
        cols["NI"][k] = I / H
        cols["Phi"][k] = bump * (I / H) + bump - 1.0
        cols["Weiss"][k] = r ** (-2.0 * sigma) * (D - 0.5 * sigma * H)
        cols["Tsigma"][k] = H / r ** (2.0 * sigma)
    return FrequencyProfile(params=W.params, p0=p0, sigma=sigma,
                            constant=C, radii=radii, columns=cols)


@dataclass(frozen=True)
class VanishingOrder:
    """Least-squares estimate of the vanishing order sigma*."""

    estimate: float
    half_width: float
    infinite_order_suspected: bool
    slopes: np.ndarray


def vanishing_order(profile: FrequencyProfile, use: int = 6,
                    blowup_gap: float = 4.0) -> VanishingOrder:
    """Slope of log H against log r over the smallest radii, halved.

    The flag trips when the local slopes keep growing toward small
    radii by more than ``blowup_gap`` in total — the signature of
    faster-than-polynomial vanishing, which no finite ladder can pin to
    a number.
    """
    r = np.asarray(profile.radii, dtype=float)
    Hv = np.asarray(profile.columns["H"], dtype=float)
    keep = Hv > 0.0
    r, Hv = r[keep], Hv[keep]
    if len(r) < max(use, 3):
        raise ValueError("not enough radii with positive height")
    lr, lh = np.log(r), np.log(Hv)
    local = np.diff(lh) / np.diff(lr)
    x, yv = lr[-use:], lh[-use:]
    n = len(x)
    xb, yb = x.mean(), yv.mean()
    sxx = float(np.sum((x - xb) ** 2))
    slope = float(np.sum((x - xb) * (yv - yb)) / sxx)
    resid = yv - (yb + slope * (x - xb))
    se = math.sqrt(float(np.sum(resid ** 2)) / max(n - 2, 1) / sxx)
    tail = local[-(use - 1):]
    growing = bool(np.all(np.diff(tail) > -1e-9)
                   and (tail[-1] - tail[0]) > blowup_gap)
    return VanishingOrder(
        estimate=slope / 2.0,
        half_width=1.96 * se / 2.0,
        infinite_order_suspected=growing,
        slopes=local,
    )


def calibrate_constant(W: FieldHandle, radii: np.ndarray,
                       rule: Optional[QuadratureRule] = None,
                       slack: float = 1e-6, c_max: float = 16.0,
                       c_step: float = 0.5, torder: int = 16) -> float:
    """Smallest C on {0, c_step, ..., c_max} making Phi_a nondecreasing.

    The value is an empirical calibration for this field only — it is
    reported with the profile, never claimed as a universal constant.
    """
    radii = np.sort(np.asarray(radii, dtype=float))
    ni = np.array([quotients(W, float(r), rule, torder)[2] for r in radii])
    a = W.params.a
    for C in np.arange(0.0, c_max + c_step / 2.0, c_step):
        bump = np.exp(C * radii ** (1.0 - a))
        phi = bump * (ni + 1.0) - 1.0
        if np.all(np.diff(phi) >= -slack):
            return float(C)
    raise CalibrationError(
        "no constant up to %g makes the ladder nondecreasing" % c_max)
