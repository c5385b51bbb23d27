"""Blow-up analysis: tangent maps and nodal-point classification.

The machinery follows the monotonicity toolbox in :mod:`.frequency`:
a field W centered at a trace point is rescaled parabolically,
projected onto the Hermite-Laguerre eigenbasis on the unit-time slice,
and the limits assemble into a tangent map

    Theta(X, t) = t^kappa sum_i v_i Vbar_i(X / sqrt t),

a parabolically 2 kappa-homogeneous caloric polynomial (plus, in the
whole-space mode, singular y^{1-a}-profile modes).  Classification of a
nodal point then reads off kappa: 1/2 means a regular point (equivalent
to a nonvanishing trace gradient), anything larger is singular, and for
integer 2 kappa the tangent map's spatial null space grades the
singular stratum.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dataclass_field
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .gaussmeasure import ExtensionParams, QuadratureRule
from .gaussmeasure import _hermite_axis, _laguerre_axis
from .polynomials import XYTPoly, caloric_extension
from .spectral import (EigenIndex, NEUMANN, admissible_frequencies,
                       eigen_norm, eigenspace, eigenvalue, theta_poly,
                       theta_value, _poly_part)
from .frequency import (FieldHandle, GridHandle, PolyField, averaged,
                        default_rule, frequency_profile, grid_min_radius,
                        quotients, radius_ladder, t_sigma, vanishing_order)
from .solver import GridField, trace_values

__all__ = [
    "BlowupError",
    "SnapError",
    "InfiniteOrderError",
    "TangentMap",
    "NodalClassification",
    "recenter",
    "rescale",
    "project_coefficients",
    "tangent_map",
    "homogeneity_residual",
    "spatial_dimension",
    "classify_nodal_point",
    "expansion_remainder",
    "scan_nodal_candidates",
]

COEFF_FLOOR = 1e-10
SNAP_TOL = 0.1
NODAL_TOL = 1e-8
GRADIENT_TOL = 1e-4


class BlowupError(RuntimeError):
    """Blow-up analysis could not complete."""


class SnapError(BlowupError):
    """Quotient limit not near an admissible frequency; carries .raw."""

    def __init__(self, message: str, raw: float):
        super().__init__(message)
        self.raw = raw


class InfiniteOrderError(BlowupError):
    """The height decays faster than every polynomial rate."""


# ---------------------------------------------------------------------------
# tangent maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TangentMap:
    """First nonzero term of the blow-up expansion at a trace point.

    ``coeffs`` holds coefficients against the L2(d mu)-normalized
    eigenfunctions; every index must share the eigenvalue ``kappa`` and
    at least one coefficient must be non-negligible, so the evaluation
    t^kappa sum v Vbar(X/sqrt t) is 2 kappa-homogeneous by construction.
    """

    kappa: float
    coeffs: Dict[EigenIndex, float]
    params: ExtensionParams
    L0: Optional[float] = None

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("tangent map needs at least one coefficient")
        for idx in self.coeffs:
            if abs(eigenvalue(idx, self.params) - self.kappa) > 1e-9:
                raise ValueError("index eigenvalue differs from kappa")
        if max(abs(v) for v in self.coeffs.values()) <= COEFF_FLOOR:
            raise ValueError("all coefficients below the floor")

    def _norm(self, idx: EigenIndex) -> float:
        return _norm_cached(idx, self.params.a, self.params.dim_n)

    @property
    def poly(self) -> XYTPoly:
        """Caloric polynomial form; defined for the regular (even) modes."""
        out = XYTPoly(self.params.dim_n, {})
        for idx, v in sorted(self.coeffs.items(),
                             key=lambda kv: (kv[0].kind, kv[0].m,
                                             kv[0].alpha)):
            if idx.singular:
                raise ValueError(
                    "tangent map with singular modes has no polynomial form")
            out = out + theta_poly(idx, self.params) * (v / self._norm(idx))
        return out

    def value(self, X, t):
        """Theta(X, t) pointwise for every mode kind (t > 0)."""
        X = np.asarray(X, dtype=float)
        acc = np.zeros(X.shape[:-1])
        for idx, v in self.coeffs.items():
            acc = acc + (v / self._norm(idx)) * theta_value(
                idx, self.params, X, t)
        return acc

    def to_json(self) -> str:
        terms = []
        for idx, v in sorted(self.coeffs.items(),
                             key=lambda kv: (kv[0].kind, kv[0].m,
                                             kv[0].alpha)):
            term = {"alpha": list(idx.alpha), "m": idx.m, "v": v}
            if idx.kind != NEUMANN:
                term["kind"] = idx.kind
            terms.append(term)
        doc = {
            "kappa": self.kappa,
            "terms": terms,
            "L0": self.L0,
            "params": {"a": self.params.a, "s": self.params.s,
                       "N": self.params.dim_n},
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TangentMap":
        doc = json.loads(text)
        p = ExtensionParams.from_a(float(doc["params"]["a"]),
                                   int(doc["params"]["N"]))
        coeffs = {}
        for term in doc["terms"]:
            idx = EigenIndex(term.get("kind", NEUMANN),
                             tuple(term["alpha"]), int(term["m"]))
            coeffs[idx] = float(term["v"])
        return cls(kappa=float(doc["kappa"]), coeffs=coeffs, params=p,
                   L0=doc.get("L0"))


@lru_cache(maxsize=4096)
def _norm_cached(idx: EigenIndex, a: float, dim_n: int) -> float:
    rule = default_rule(ExtensionParams.from_a(a, dim_n))
    return eigen_norm(idx, rule)


# ---------------------------------------------------------------------------
# recentring and rescaling
# ---------------------------------------------------------------------------

def recenter(W: FieldHandle, p0) -> FieldHandle:
    """View W from the trace point p0.

    For lattice-backed handles p0 = (x0, t0) is in forward solver
    coordinates (a new anchor).  For closed-form fields p0 = (x0, dt)
    shifts the center along the trace and moves the anchor dt deeper
    into the backward history.  p0 = None keeps the current center.
    """
    if p0 is None:
        return W
    x0, t0 = _split_point(p0)
    if isinstance(W, GridHandle):
        if (x0[0], t0) == (W.x0, W.t0):
            return W
        return GridHandle(W.w_field, (x0[0], t0), f_field=W.f_field, q=W.q)
    if isinstance(W, PolyField):
        if not any(x0) and t0 == 0.0:
            return W
        forcing = W._forcing.shifted(x0, t0) if W._forcing is not None \
            else None
        q = None
        if W.q is not None:
            base_q = W.q
            off = np.asarray(x0)
            q = lambda x, t: base_q(np.asarray(x) + off, t + t0)
        return PolyField(W.poly.shifted(x0, t0), W.params, q=q,
                         forcing=forcing)
    raise TypeError("cannot recenter this field handle")


def _split_point(p0) -> Tuple[List[float], float]:
    """(x0 list, t0) from a trace point (x0_scalar_or_vector, t0)."""
    x0 = np.atleast_1d(np.asarray(p0[0], dtype=float))
    return [float(v) for v in x0], float(p0[1])


class RescaledField(FieldHandle):
    """Parabolic rescaling W_r(X, t) = W(rX, r^2 t) / sqrt(H(W, r)).

    The potential and forcing transform covariantly (q_r = r^{1-a} q,
    F_r = r^2 F / sqrt H), so every functional of the rescaled view at
    radius rho reproduces the original at radius r*rho.
    """

    def __init__(self, base: FieldHandle, r: float, height: float):
        if height <= 1e-14:
            raise ValueError("height too small to rescale")
        self.base = base
        self.r = float(r)
        self.scale = 1.0 / math.sqrt(height)
        self.params = base.params
        self.dropped_log = []

    def _map(self, X, t):
        return self.r * np.asarray(X, dtype=float), self.r ** 2 * t

    def value(self, X, t):
        Xb, tb = self._map(X, t)
        return self.scale * self.base.value(Xb, tb)

    def gradient(self, X, t):
        Xb, tb = self._map(X, t)
        return self.r * self.scale * self.base.gradient(Xb, tb)

    def time_derivative(self, X, t):
        Xb, tb = self._map(X, t)
        return self.r ** 2 * self.scale * self.base.time_derivative(Xb, tb)

    def forcing(self, X, t):
        Xb, tb = self._map(X, t)
        return self.r ** 2 * self.scale * self.base.forcing(Xb, tb)

    def trace(self, x, t):
        return self.scale * self.base.trace(self.r * np.asarray(x, float),
                                            self.r ** 2 * t)

    def potential_trace(self, x, t):
        qv = self.base.potential_trace(self.r * np.asarray(x, float),
                                       self.r ** 2 * t)
        if qv is None:
            return None
        return self.r ** (1.0 - self.params.a) * qv

    def in_hull(self, X, t):
        Xb, tb = self._map(X, t)
        if hasattr(self.base, "in_hull"):
            return self.base.in_hull(Xb, tb)
        return np.ones(np.asarray(X).shape[:-1], dtype=bool)


def rescale(W: FieldHandle, p0, r: float,
            rule: Optional[QuadratureRule] = None,
            torder: int = 16) -> RescaledField:
    """Blow-up family member at radius r, normalized to unit height."""
    if r <= 0.0:
        raise ValueError("rescaling radius must be positive")
    Wc = recenter(W, p0)
    height = averaged(Wc, r, rule, torder)[0]
    return RescaledField(Wc, r, height)


# ---------------------------------------------------------------------------
# eigenprojections
# ---------------------------------------------------------------------------

@lru_cache(maxsize=8)
def _odd_projection_rule(a: float, dim_n: int, order: int = 40):
    """Quadrature for int_{y>0} f(X) * y * G_a(X, 1) dX, f odd in y.

    This is the weight against which the singular y|y|^{-a} modes pair
    with an odd field on the whole-space measure — the |y|^{+-a} factors
    cancel exactly, leaving a plain y weight.  Since f = y * h(y^2), the
    substitution y = 2 sqrt(r) maps the y integral onto a Laguerre rule
    with exponent 1/2, exact for every odd polynomial integrand.
    """
    xs, xw = _hermite_axis(order)
    rn, rw = _laguerre_axis(order, 0.5)
    y = 2.0 * np.sqrt(rn)
    mass = 2.0 ** (2.0 - a) / math.exp(math.lgamma((1.0 + a) / 2.0))
    yw = mass * rw / y
    axes_nodes = [xs] * dim_n + [y]
    axes_weights = [xw] * dim_n + [yw]
    grids = np.meshgrid(*axes_nodes, indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.ones(nodes.shape[0])
    for wg in np.meshgrid(*axes_weights, indexing="ij"):
        weights = weights * wg.ravel()
    return nodes, weights


def project_coefficients(W: FieldHandle, p0, r: float,
                         indices: Sequence[EigenIndex],
                         rule: Optional[QuadratureRule] = None
                         ) -> Dict[EigenIndex, float]:
    """Inner products of the slice W(rX, r^2) with normalized modes.

    Regular (even) modes pair through the half-space measure rule.
    Singular modes — whole-space analysis — require a closed-form field
    so the slice's odd-in-y part is available exactly.
    """
    Wc = recenter(W, p0)
    p = Wc.params
    if rule is None:
        rule = default_rule(p)
    xi = rule.nodes
    wts = rule.weights
    vals = None
    out: Dict[EigenIndex, float] = {}
    slice_poly = None
    for idx in indices:
        nrm = eigen_norm(idx, rule)
        if not idx.singular:
            if vals is None:
                vals = Wc.value(r * xi, r * r)
            V = theta_poly(idx, p)(xi, 1.0)
            out[idx] = math.fsum(wts * vals * V) / nrm
            continue
        if not isinstance(Wc, PolyField):
            raise BlowupError(
                "singular-mode projections need a closed-form field")
        if slice_poly is None:
            slice_poly = Wc.poly.parabolic_scale(r).y_odd_part()
        onodes, owts = _odd_projection_rule(p.a, p.dim_n)
        g = _poly_part(idx, p)
        integrand = slice_poly(onodes, 1.0) * g(onodes, 1.0)
        out[idx] = math.fsum(owts * integrand) / nrm
    return out


# ---------------------------------------------------------------------------
# tangent map extraction
# ---------------------------------------------------------------------------

def _kappa_from_ladder(W: FieldHandle, ladder: np.ndarray,
                       rule: Optional[QuadratureRule],
                       torder: int) -> Tuple[float, np.ndarray]:
    """Quotient limit by linear-in-r^2 extrapolation of N_I."""
    ni, used = [], []
    for rad in ladder:
        try:
            ni.append(quotients(W, float(rad), rule, torder)[2])
            used.append(rad)
        except ValueError:
            break  # height under the floor; deeper radii only get smaller
    if not ni:
        raise BlowupError("height vanished at every ladder radius")
    ni = np.asarray(ni)
    used = np.asarray(used)
    k = min(3, len(ni))
    if k == 1:
        return float(ni[-1]), used
    A = np.column_stack([np.ones(k), used[-k:] ** 2])
    sol, *_ = np.linalg.lstsq(A, ni[-k:], rcond=None)
    return float(sol[0]), used


def tangent_map(W: FieldHandle, p0=None,
                ladder: Optional[np.ndarray] = None,
                kinds: Iterable[str] = (NEUMANN,),
                rule: Optional[QuadratureRule] = None,
                snap_tol: float = SNAP_TOL,
                torder: int = 16) -> TangentMap:
    """Extract kappa and the leading eigen-coefficients at a trace point.

    kappa is the nearest admissible frequency to the extrapolated
    Almgren-Poon quotient (within ``snap_tol``, else SnapError carrying
    the raw limit); coefficients come from two-stage Richardson
    extrapolation of r^{-2 kappa} w(r) down the ladder, and L0 from the
    height ratio at the smallest usable radius.
    """
    Wc = recenter(W, p0)
    p = Wc.params
    if ladder is None:
        if isinstance(Wc, GridHandle):
            ladder = radius_ladder(min_radius=grid_min_radius(Wc.spec))
        else:
            ladder = radius_ladder()
    ladder = np.asarray(ladder, dtype=float)
    kinds = tuple(kinds)

    raw, used = _kappa_from_ladder(Wc, ladder, rule, torder)
    candidates = admissible_frequencies(kinds, p)
    kappa = min(candidates, key=lambda k: abs(k - raw))
    if abs(kappa - raw) > snap_tol:
        raise SnapError(
            "quotient limit %.6f is not near an admissible frequency"
            % raw, raw=raw)

    indices: List[EigenIndex] = []
    for kind in kinds:
        indices.extend(eigenspace(kappa, kind, p))
    if not indices:
        raise BlowupError("empty eigenspace for kappa=%g" % kappa)

    rows = []
    for rad in used:
        w = project_coefficients(Wc, None, float(rad), indices, rule)
        rows.append([w[idx] / rad ** (2.0 * kappa) for idx in indices])
    z = np.asarray(rows)
    while z.shape[0] >= 2:
        z = np.vstack([2.0 * z[k + 1] - z[k] for k in range(z.shape[0] - 1)])
        if z.shape[0] >= 2:
            z = np.vstack([(4.0 * z[k + 1] - z[k]) / 3.0
                           for k in range(z.shape[0] - 1)])
        break
    v = z[-1]

    vmax = float(np.max(np.abs(v)))
    if vmax <= COEFF_FLOOR:
        raise BlowupError(
            "all projected coefficients negligible — normalization "
            "contradiction")
    coeffs = {idx: float(val) for idx, val in zip(indices, v)
              if abs(val) > COEFF_FLOOR * vmax}
    if kappa > 0.0:
        L0 = t_sigma(Wc, float(used[-1]), 2.0 * kappa, rule, torder)
    else:  # constant mode: the sigma = 0 height ratio is the height itself
        L0 = averaged(Wc, float(used[-1]), rule, torder)[0]
    return TangentMap(kappa=kappa, coeffs=coeffs, params=p, L0=L0)


# ---------------------------------------------------------------------------
# homogeneity, spatial dimension, classification
# ---------------------------------------------------------------------------

def _default_samples(dim_n: int):
    axes = [np.linspace(-1.0, 1.0, 5)] * dim_n + [np.linspace(0.0, 1.0, 4)]
    grids = np.meshgrid(*axes, indexing="ij")
    X = np.stack([g.ravel() for g in grids], axis=-1)
    ts = np.array([0.25, 0.5, 1.0])
    return X, ts


def homogeneity_residual(theta, kappa: Optional[float] = None,
                         samples=None) -> float:
    """max |Z Theta - 2 kappa Theta| over a sample box.

    ``theta`` is a TangentMap (kappa defaults to its own) or a
    polynomial with explicit kappa; the Euler operator Z is applied
    analytically either way.
    """
    if isinstance(theta, TangentMap):
        if kappa is None:
            kappa = theta.kappa
        p = theta.params
        if samples is None:
            samples = _default_samples(p.dim_n)
        X, ts = samples
        worst = 0.0
        for idx, v in theta.coeffs.items():
            gap = 2.0 * (eigenvalue(idx, p) - kappa)
            if gap == 0.0:
                continue
            for t in ts:
                comp = (v / theta._norm(idx)) * theta_value(idx, p, X, t)
                worst = max(worst, abs(gap) * float(np.max(np.abs(comp))))
        return worst
    poly = theta
    if kappa is None:
        raise ValueError("kappa is required for a bare polynomial")
    resid = poly.euler() - 2.0 * kappa * poly
    if samples is None:
        samples = _default_samples(poly.dim_n)
    X, ts = samples
    worst = 0.0
    for t in ts:
        worst = max(worst, float(np.max(np.abs(resid(X, t)))))
    return worst


def spatial_dimension(theta: TangentMap) -> int:
    """dim{xi : xi . grad_x d^alpha d^j Theta = 0, |alpha|+2j = 2k-1}.

    Defined when 2 kappa is a positive integer; the rows are constant
    vectors because each derivative lowers the parabolic degree to one.
    """
    p = theta.params
    two_k = 2.0 * theta.kappa
    k_int = round(two_k)
    if k_int < 1 or abs(two_k - k_int) > 1e-9:
        raise ValueError(
            "spatial dimension applies only to integer 2*kappa strata")
    poly = theta.poly  # raises for singular content, which cannot occur here
    order = k_int - 1
    rows = []
    for j in range(order // 2 + 1):
        rest = order - 2 * j
        for alpha in _alpha_tuples(rest, p.dim_n):
            der = poly
            for _ in range(j):
                der = der.diff_t()
            for ax, times in enumerate(alpha):
                for _ in range(times):
                    der = der.diff_x(ax)
            row = []
            for ax in range(p.dim_n):
                comp = der.diff_x(ax)
                if comp.parabolic_degree() > 0:
                    raise ValueError("tangent map is not 2k-homogeneous")
                row.append(comp.coeffs.get(((0,) * p.dim_n, 0, 0), 0.0))
            rows.append(row)
    mat = np.asarray(rows, dtype=float)
    if mat.size == 0 or not np.any(mat):
        return p.dim_n
    rank = np.linalg.matrix_rank(mat, tol=1e-10)
    return p.dim_n - int(rank)


def _alpha_tuples(total: int, dim_n: int):
    if dim_n == 1:
        return [(total,)]
    out = []
    for head in range(total + 1):
        out.extend((head,) + rest
                   for rest in _alpha_tuples(total - head, dim_n - 1))
    return out


@dataclass(frozen=True)
class NodalClassification:
    """Outcome of classify_nodal_point."""

    regular: bool
    kappa: float
    tangent: TangentMap
    spatial_dim: Optional[int]
    gradient_norm: float
    sup_norm: float
    consistent: bool

    @property
    def verdict(self) -> str:
        if self.regular:
            return "Regular"
        if self.spatial_dim is None:
            return "Singular(kappa=%g)" % self.kappa
        return "Singular(kappa=%g, d=%d)" % (self.kappa, self.spatial_dim)


def _trace_sup_and_grad(u, p0, params):
    """Sup-norm of a trace over the reference box and |grad_x| at p0."""
    if isinstance(u, XYTPoly):
        n_per = 41 if params.dim_n == 1 else 11
        axes = [np.linspace(-1.0, 1.0, n_per)] * params.dim_n
        axes.append(np.linspace(0.0, 1.0, 21))
        grids = np.meshgrid(*axes, indexing="ij")
        xg = np.stack([g.ravel() for g in grids[:-1]], axis=-1)
        vals = u.eval_trace(xg, grids[-1].ravel())
        sup = float(np.max(np.abs(vals)))
        x0, t0 = _split_point(p0)
        pt = np.asarray([x0])
        val0 = float(np.asarray(u.eval_trace(pt, t0))[0])
        grad = [float(np.asarray(u.diff_x(ax).eval_trace(pt, t0))[0])
                for ax in range(params.dim_n)]
        return sup, abs(val0), float(np.hypot.reduce(grad))
    # lattice-backed handle: sample its trace around the center
    h = u
    spec = h.spec
    half = min(1.0, spec.xmax - h.x0, h.x0 - spec.xmin)
    xs = np.linspace(-half, half, 41)
    ts = np.linspace(0.0, min(1.0, h.t0 * 0.99), 11)[1:]
    sup = 0.0
    for t in ts:
        sup = max(sup, float(np.max(np.abs(h.trace(xs, float(t))))))
    dt0 = float(ts[0])
    val0 = abs(float(h.trace(np.array([0.0]), dt0)[0]))
    dx = spec.dx
    tr = h.trace(np.array([-dx, 0.0, dx]), dt0)
    grad = abs((tr[2] - tr[0]) / (2.0 * dx))
    return sup, val0, grad


def classify_nodal_point(u, p0=None,
                         ladder: Optional[np.ndarray] = None,
                         params: Optional[ExtensionParams] = None,
                         kinds: Iterable[str] = (NEUMANN,),
                         rule: Optional[QuadratureRule] = None,
                         torder: int = 16) -> NodalClassification:
    """Regular/Singular verdict for a nodal point of a trace.

    ``u`` is either a trace polynomial in backward coordinates (its
    caloric extension is computed here; ``params`` required) or an
    extension field handle; ``p0 = None`` means the polynomial's origin
    or the handle's own anchor.  The point must be nodal within
    1e-8 * sup|u|; the kappa = 1/2 verdict is cross-checked against the
    trace-gradient criterion, and for integer 2 kappa the tangent map's
    spatial dimension is attached.
    """
    if isinstance(u, XYTPoly):
        if params is None:
            raise ValueError("trace polynomials need explicit params")
        x0, t0 = _split_point(p0) if p0 is not None \
            else ([0.0] * params.dim_n, 0.0)
        trace_c = u.shifted(x0, t0)
        sup, val0, grad = _trace_sup_and_grad(u, (x0, t0), params)
        W = PolyField(caloric_extension(trace_c, params.a), params)
    elif isinstance(u, GridHandle):
        W = recenter(u, p0)
        sup, val0, grad = _trace_sup_and_grad(W, None, W.params)
    else:
        raise TypeError("u must be a trace polynomial or a grid handle")
    if sup == 0.0:
        raise BlowupError("identically zero trace")
    if val0 > NODAL_TOL * sup:
        raise BlowupError("point is not nodal: |u(p0)| = %.3e > %.3e"
                          % (val0, NODAL_TOL * sup))

    if ladder is None and isinstance(W, GridHandle):
        ladder = radius_ladder(min_radius=grid_min_radius(W.spec))
    elif ladder is None:
        ladder = radius_ladder()
    ladder = np.asarray(ladder, dtype=float)

    prof = frequency_profile(W, radii=ladder, rule=rule, sigma=1.0,
                             torder=torder)
    if len(prof.radii) >= 6:
        vo = vanishing_order(prof, use=min(6, len(prof.radii)))
        if vo.infinite_order_suspected:
            raise InfiniteOrderError(
                "height slope keeps growing; no finite vanishing order")

    tm = tangent_map(W, None, ladder=ladder, kinds=kinds, rule=rule,
                     torder=torder)
    regular = bool(abs(tm.kappa - 0.5) <= 1e-9)
    sdim = None
    if not regular:
        two_k = 2.0 * tm.kappa
        if abs(two_k - round(two_k)) <= 1e-9 and round(two_k) >= 1:
            sdim = spatial_dimension(tm)
    consistent = regular == bool(grad > GRADIENT_TOL * sup)
    return NodalClassification(regular=regular, kappa=float(tm.kappa),
                               tangent=tm, spatial_dim=sdim,
                               gradient_norm=float(grad),
                               sup_norm=float(sup), consistent=consistent)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def expansion_remainder(W: FieldHandle, theta: TangentMap, r: float,
                        nx: int = 9, ny: int = 5, nt: int = 4) -> float:
    """sup over the r-ball slab of |W - Theta| / r^{2 kappa}.

    The asymptotic expansion predicts this decays to zero down a radius
    ladder; evaluated on a deterministic sample lattice.
    """
    p = W.params
    axes = [np.linspace(-1.0, 1.0, nx)] * p.dim_n + [np.linspace(0.0, 1.0,
                                                                 ny)]
    grids = np.meshgrid(*axes, indexing="ij")
    xi = np.stack([g.ravel() for g in grids], axis=-1)
    worst = 0.0
    for frac in np.linspace(1.0 / nt, 1.0, nt):
        t = frac * r * r
        diff = W.value(r * xi, t) - theta.value(r * xi, t)
        worst = max(worst, float(np.max(np.abs(diff))))
    return worst / r ** (2.0 * theta.kappa)


def scan_nodal_candidates(field: GridField, t0: float) -> List[float]:
    """Zero crossings of the lattice trace at the step nearest t0.

    Returns linearly interpolated crossing abscissae between adjacent
    x nodes with opposite trace signs (exact node zeros included).
    """
    spec = field.spec
    step = int(round(t0 / spec.dt))
    step = min(max(step, 0), spec.nt)
    tr = trace_values(field, step)
    x = spec.x_nodes()
    out = []
    for i in range(len(x) - 1):
        a, b = tr[i], tr[i + 1]
        if a == 0.0:
            out.append(float(x[i]))
        elif a * b < 0.0:
            out.append(float(x[i] - a * (x[i + 1] - x[i]) / (b - a)))
    if tr[-1] == 0.0:
        out.append(float(x[-1]))
    return out
