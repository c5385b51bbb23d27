"""The fractional heat operator and its Poisson-kernel extension.

Both operators are built from the same primitive: the backward slice
average

    S_u(sigma) = E[u(x + 2 sqrt(sigma) xi, t - sigma)],   xi ~ N(0, 1/2)^N,

which is the heat semigroup applied to the trace at lag sigma.  In terms
of S the two constructions read

    ubar(x, y, t)   = int_0^inf  m_y(sigma) S_u(sigma) d sigma,
    H^s u (x, t)    = (1/|Gamma(-s)|) int_0^inf sigma^{-1-s}
                          [u(x,t) - S_u(sigma)] d sigma,

where m_y(sigma) = y^{2s} sigma^{-1-s} e^{-y^2/4 sigma} / (4^s Gamma(s))
is the probability density of sigma = y^2/(4 w), w ~ Gamma(s).

Truncation policy ("frozen history"): past lags beyond the horizon T are
replaced by the frozen value S(T) in *both* operators, i.e. S is
continued as S(sigma) := S(T) for sigma > T.  The continued profile is a
genuine bounded history, so the conormal identity

    -d_y^a ubar = c_s H^s u,    c_s = |Gamma(-s)| / (4^s Gamma(s)),

holds exactly between the two truncated operators; truncation affects
the values but never the identity.  The frozen-tail contributions have
closed forms: S(T) * P[sigma > T] for the extension (a regularized lower
incomplete gamma) and (u - S(T)) T^{-s}/s for the operator.

The time singularity sigma -> 0+ in H^s is handled by a second-order
Taylor model on (0, eps):  u - S(sigma) = c1 sigma + c2 sigma^2 + O(sigma^3)
with c1 = (d_t - Lap)u and c2 = -(d_t - Lap)^2 u / 2, integrated in
closed form; the coefficients come from finite differences of the trace.
The remaining smooth integrand is integrated on geometric log-time
panels with Gauss-Legendre nodes.

The spatial average inside S needs care at large lags: in the scaled
variable z = (zeta - x)/(2 sqrt sigma) the trace's features shrink like
1/sqrt(sigma), so a fixed Gauss rule against the e^{-z^2} weight loses
them.  S therefore uses a composite Gauss-Legendre rule on |z| <= 6.6
(weight tail below 1e-20) whose panel width tracks a quarter-unit
feature scale of the trace, with weights normalized to unit mass so that
constants — and hence the frozen-tail bookkeeping — are reproduced
exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.special import gammainc

from .gaussmeasure import ExtensionParams


class AccuracyError(RuntimeError):
    """A computed error estimate exceeds the requested tolerance."""


class ExtrapolationError(AccuracyError):
    """Richardson ladder failed to settle within tolerance."""


def conormal_constant(s: float) -> float:
    """c_s = |Gamma(-s)| / (4^s Gamma(s)) relating -d_y^a ubar to H^s u."""
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    # |Gamma(-s)| = Gamma(1-s)/s for 0 < s < 1
    return math.exp(math.lgamma(1.0 - s) - math.lgamma(s)) / (s * 4.0**s)


@dataclass(frozen=True)
class TruncationConfig:
    """Knobs for the truncated time integrals.

    t_back:        history horizon T; lags beyond it use the frozen value.
    space_std:     spatial window of the slice average, in standard
                   deviations of the heat kernel (window tail ~1e-20 at
                   the default; weights are renormalized to unit mass).
    head_eps:      end of the Taylor-model layer (0, eps) in H^s.
    panels/panel_order: geometric log-time panels and Gauss-Legendre
                   nodes per panel for the smooth part; the panel count
                   grows automatically when the log-range is wide.
    feature_scale: shortest spatial scale of the trace the slice average
                   must resolve (sets the composite-rule panel width).
    fd_step_first/second: finite-difference steps for the Taylor
                   coefficients c1 (fourth order) and c2 (nested second).
    tail_tol:      optional bound on the reported frozen-tail estimate;
                   exceeded -> AccuracyError.  None reports only.
    """

    t_back: float = 50.0
    space_std: float = 9.335  # 6.6 in the z = xi/sqrt(2) variable
    head_eps: float = 1e-3
    panels: int = 16
    panel_order: int = 16
    feature_scale: float = 0.25
    fd_step_first: float = 1e-2
    fd_step_second: float = 5e-2
    tail_tol: Optional[float] = None

    def __post_init__(self):
        if self.t_back <= 0 or self.head_eps <= 0:
            raise ValueError("horizon and head layer must be positive")
        if self.head_eps >= self.t_back:
            raise ValueError("head layer must end before the horizon")
        if min(self.panels, self.panel_order) < 2:
            raise ValueError("quadrature orders must be at least 2")
        if self.feature_scale <= 0 or self.space_std <= 0:
            raise ValueError("spatial window parameters must be positive")


DEFAULT_TRUNCATION = TruncationConfig()

_SLICE_RULES: dict = {}
_PANEL_LADDER = (32, 64, 128, 256, 512, 1024, 2048)


def _slice_rule(zmax: float, n_pan: int):
    """Composite GL-8 nodes/probability-weights for E[f(z)], z ~ N(0,1/2)."""
    key = (zmax, n_pan)
    if key not in _SLICE_RULES:
        zq, wq = np.polynomial.legendre.leggauss(8)
        edges = np.linspace(-zmax, zmax, n_pan + 1)
        mids = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        z = (mids[:, None] + half[:, None] * zq[None, :]).ravel()
        w = (half[:, None] * wq[None, :]).ravel() * np.exp(-z * z)
        w = w / math.fsum(w)
        _SLICE_RULES[key] = (z, w)
    return _SLICE_RULES[key]


def _panel_count(sigma: float, zmax: float, feature_scale: float) -> int:
    """Panels needed so each spans at most half a trace feature."""
    if sigma <= 0.0:
        return _PANEL_LADDER[0]
    width = 0.5 * feature_scale / (2.0 * math.sqrt(sigma))
    need = 2.0 * zmax / width
    for n in _PANEL_LADDER:
        if n >= need:
            return n
    return _PANEL_LADDER[-1]


def heat_history(u: Callable, x, t: float, sigmas,
                 trunc: TruncationConfig = DEFAULT_TRUNCATION) -> np.ndarray:
    """Slice averages S_u(sigma) for an array of lags sigma >= 0.

    u maps (points (..., N), time array broadcastable over the leading
    axes) to values; x is one spatial point of shape (N,).  Lags beyond
    the horizon are frozen at S(T).  Evaluations are grouped so u is
    called once per rule size.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    dim = x.shape[0]
    sig_in = np.asarray(sigmas, dtype=float)
    if np.any(sig_in < 0):
        raise ValueError("lags must be nonnegative")
    flat = np.minimum(sig_in.ravel(), trunc.t_back)
    out = np.empty(flat.shape, dtype=float)
    zmax = trunc.space_std / math.sqrt(2.0)

    if dim > 1:
        # tensor Gauss-Hermite: exact for polynomial traces, which is all
        # the multi-axis corpus exercises at desk scale
        z1, w1 = np.polynomial.hermite.hermgauss(48)
        grids = np.meshgrid(*([z1] * dim), indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=-1)
        wg = np.meshgrid(*([w1] * dim), indexing="ij")
        weights = np.prod(np.stack([g.ravel() for g in wg], axis=0), axis=0)
        weights = weights / math.fsum(weights)
        for k, sig in enumerate(flat):
            if sig == 0.0:
                out[k] = float(np.asarray(u(x[None, :], t)).reshape(-1)[0])
                continue
            pts = x[None, :] + 2.0 * math.sqrt(sig) * nodes
            vals = np.asarray(u(pts, t - sig), dtype=float).reshape(-1)
            if not np.all(np.isfinite(vals)):
                raise ValueError("non-finite trace sample in slice average")
            out[k] = float(weights @ vals)
        return out.reshape(sig_in.shape)

    order = np.argsort(flat)
    groups: dict = {}
    for pos in order:
        sig = flat[pos]
        if sig == 0.0:
            out[pos] = float(np.asarray(u(x[None, :], t)).reshape(-1)[0])
            continue
        groups.setdefault(_panel_count(sig, zmax, trunc.feature_scale),
                          []).append(pos)
    for n_pan, poss in groups.items():
        z, w = _slice_rule(zmax, n_pan)
        sig = flat[np.asarray(poss)]
        pts = x[None, None, :] + (2.0 * np.sqrt(sig))[:, None, None] \
            * z[None, :, None]
        vals = np.asarray(u(pts, (t - sig)[:, None]), dtype=float)
        vals = vals.reshape(len(poss), z.size)
        if not np.all(np.isfinite(vals)):
            raise ValueError("non-finite trace sample in slice average")
        out[np.asarray(poss)] = vals @ w
    return out.reshape(sig_in.shape)


def _log_panel_nodes(v_lo: float, v_hi: float, trunc: TruncationConfig):
    """Gauss-Legendre nodes/weights on geometric panels of [v_lo, v_hi].

    The panel count grows with the log-range so that no panel is wider
    than about two thirds of a decade.
    """
    n_pan = max(trunc.panels, int(math.ceil(0.65 * (v_hi - v_lo))))
    gl_z, gl_w = np.polynomial.legendre.leggauss(trunc.panel_order)
    edges = np.linspace(v_lo, v_hi, n_pan + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mids[:, None] + half[:, None] * gl_z[None, :]).ravel()
    weights = (half[:, None] * gl_w[None, :]).ravel()
    return nodes, weights


class ExtendResult(NamedTuple):
    value: float
    tail_bound: float


def extend(u: Callable, X, t: float, p: ExtensionParams,
           trunc: TruncationConfig = DEFAULT_TRUNCATION) -> ExtendResult:
    """Poisson-kernel extension ubar(x, y, t) of the trace u, with y > 0.

    Returns the value together with an estimate of the frozen-tail error:
    the oscillation of the slice average near the horizon times the
    kernel mass beyond it.
    """
    X = np.asarray(X, dtype=float)
    x, y = X[:-1], float(X[-1])
    if y <= 0.0:
        raise ValueError("extension point must have y > 0")
    s = p.s
    T = trunc.t_back
    # below sigma_min the kernel mass is under e^-700; start the panels there
    v_lo = math.log(max(y * y / 2800.0, 1e-300))
    v_hi = math.log(T)
    value = 0.0
    osc = 0.0
    if v_lo < v_hi:
        vs, ws = _log_panel_nodes(v_lo, v_hi, trunc)
        sig = np.exp(vs)
        S = heat_history(u, x, t, sig, trunc)
        near = sig >= 0.5 * T
        if np.any(near):
            osc = float(np.max(np.abs(S[near])))
        # m_y(sigma) * sigma, evaluated in log space
        logm = (2.0 * s * math.log(y) - s * vs
                - y * y / (4.0 * sig) - s * math.log(4.0) - math.lgamma(s))
        value = float(math.fsum(ws * np.exp(logm) * S))
    S_T = float(heat_history(u, x, t, np.array([T]), trunc)[0])
    tail_mass = float(gammainc(s, y * y / (4.0 * T)))
    value += S_T * tail_mass
    tail_bound = (abs(S_T) + max(osc, abs(S_T))) * tail_mass + 1e-30
    if trunc.tail_tol is not None and tail_bound > trunc.tail_tol:
        raise AccuracyError(
            f"frozen-tail estimate {tail_bound:.3e} exceeds {trunc.tail_tol:.3e}"
        )
    if not math.isfinite(value):
        raise ValueError("non-finite extension value")
    return ExtendResult(value, tail_bound)


def extended_function(u: Callable, p: ExtensionParams,
                      trunc: TruncationConfig = DEFAULT_TRUNCATION) -> Callable:
    """The extension as a plain callable (X, t) -> value.

    At y = 0 it returns the trace itself (the kernel is a point mass
    there), which makes the result directly usable by the conormal
    difference quotient.
    """

    def ubar(X, t):
        X = np.asarray(X, dtype=float)
        if X[-1] == 0.0:
            flat = np.asarray(u(X[None, :-1], t), dtype=float).reshape(-1)
            return float(flat[0])
        return extend(u, X, t, p, trunc).value

    return ubar


def _heat_operator(u: Callable, x, t: float, h: float, order: int) -> float:
    """(d_t - Lap) u at (x, t) by central differences of the trace."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    dim = x.shape[0]

    def val(pt, tt):
        return float(np.asarray(u(pt[None, :], tt), dtype=float).reshape(-1)[0])

    if order == 4:
        ut = (-val(x, t + 2 * h) + 8 * val(x, t + h)
              - 8 * val(x, t - h) + val(x, t - 2 * h)) / (12.0 * h)
        lap = 0.0
        for ax in range(dim):
            e = np.zeros(dim)
            e[ax] = h
            lap += (-val(x + 2 * e, t) + 16 * val(x + e, t) - 30 * val(x, t)
                    + 16 * val(x - e, t) - val(x - 2 * e, t)) / (12.0 * h * h)
        return ut - lap
    ut = (val(x, t + h) - val(x, t - h)) / (2.0 * h)
    lap = 0.0
    for ax in range(dim):
        e = np.zeros(dim)
        e[ax] = h
        lap += (val(x + e, t) - 2 * val(x, t) + val(x - e, t)) / (h * h)
    return ut - lap


def _taylor_coefficients(u: Callable, x, t: float, trunc: TruncationConfig):
    """Lu and L^2 u at a trace point, L = d_t - Lap, by finite differences.

    Lu uses fourth-order stencils; L^2 u nests second-order ones with a
    wider step.  These drive both the singular-layer model of H^s and
    the boundary-expansion model of the conormal ladder.
    """
    lu_val = _heat_operator(u, x, t, trunc.fd_step_first, order=4)

    def lu(pts, tt):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.array(
            [_heat_operator(u, pt, tt, trunc.fd_step_second, order=2)
             for pt in pts]
        )

    l2u_val = _heat_operator(lu, x, t, trunc.fd_step_second, order=2)
    return lu_val, l2u_val


def fractional_heat(u: Callable, x, t: float, s: float,
                    trunc: TruncationConfig = DEFAULT_TRUNCATION) -> float:
    """H^s u at one trace point, for the history frozen beyond the horizon.

    The singular layer (0, eps) uses the closed-form integral of the
    second-order Taylor model of u - S; its error estimate must stay
    under half of the 1e-4 identity budget or an AccuracyError is raised.
    """
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    eps, T = trunc.head_eps, trunc.t_back
    u0 = float(np.asarray(u(x[None, :], t), dtype=float).reshape(-1)[0])

    # Taylor head: u - S = c1 sigma + c2 sigma^2 + O(sigma^3)
    c1, l2u = _taylor_coefficients(u, x, t, trunc)
    c2 = -0.5 * l2u
    head = c1 * eps ** (1.0 - s) / (1.0 - s) + c2 * eps ** (2.0 - s) / (2.0 - s)
    # the next Taylor term scales the c2 contribution by roughly eps
    head_err = abs(c2) * eps ** (2.0 - s) / (2.0 - s) * eps * 10.0
    if head_err > 5e-5:
        raise AccuracyError(
            f"singular-layer estimate {head_err:.3e} exceeds tolerance"
        )

    vs, ws = _log_panel_nodes(math.log(eps), math.log(T), trunc)
    sig = np.exp(vs)
    S = heat_history(u, x, t, sig, trunc)
    body = float(math.fsum(ws * sig ** (-s) * (u0 - S)))

    S_T = float(heat_history(u, x, t, np.array([T]), trunc)[0])
    tail = (u0 - S_T) * T ** (-s) / s

    norm = math.exp(math.lgamma(1.0 - s)) / s  # |Gamma(-s)|
    return (head + body + tail) / norm


def conormal_derivative(ubar: Callable, x, t: float, p: ExtensionParams,
                        trace: Optional[Callable] = None, y0: float = 0.5,
                        levels: int = 6, tol: float = 1e-3,
                        trunc: TruncationConfig = DEFAULT_TRUNCATION) -> float:
    """-d_y^a ubar = -lim_{y->0+} (ubar - u)/y^{1-a} by ladder extrapolation.

    The quotient has the boundary expansion
        q(y) = beta0 + alpha1 y^{1+a} + beta1 y^2 + alpha2 y^{3+a} + ...
    where the alpha side comes from the even caloric continuation of the
    trace:  alpha1 = Lu / (2(1+a)),  alpha2 = L^2 u / (8(1+a)(3+a)) with
    L = d_t - Lap.  When the trace is supplied those two terms are
    modeled by finite differences and subtracted, and two Richardson
    stages on the geometric ladder y_k = y0 2^{-k} remove the remaining
    even powers y^2 and y^4 exactly.  Without a trace callable the plain
    quotient is extrapolated with the exact exponents 1+a and 2 instead
    (residual O(y^{3+a})).  The last two second-stage entries must agree
    within tol, else ExtrapolationError.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    a = p.a
    alpha1 = alpha2 = 0.0
    if trace is not None:
        u0 = float(np.asarray(trace(x[None, :], t), dtype=float).reshape(-1)[0])
        lu, l2u = _taylor_coefficients(trace, x, t, trunc)
        alpha1 = lu / (2.0 * (1.0 + a))
        alpha2 = l2u / (8.0 * (1.0 + a) * (3.0 + a))
    else:
        u0 = float(ubar(np.concatenate([x, [0.0]]), t))
    q = []
    for k in range(levels):
        y = y0 * 2.0 ** (-k)
        X = np.concatenate([x, [y]])
        qk = (float(ubar(X, t)) - u0) / y ** (1.0 - a)
        qk -= alpha1 * y ** (1.0 + a) + alpha2 * y ** (3.0 + a)
        q.append(qk)
    q = np.asarray(q)
    if trace is not None:
        e1, e2 = 2.0, 4.0
    else:
        e1, e2 = 1.0 + a, 2.0
    f1, f2 = 2.0**e1, 2.0**e2
    stage1 = (f1 * q[1:] - q[:-1]) / (f1 - 1.0)
    stage2 = (f2 * stage1[1:] - stage1[:-1]) / (f2 - 1.0)
    if len(stage2) >= 2 and abs(stage2[-1] - stage2[-2]) > tol:
        raise ExtrapolationError(
            "boundary ladder not settled: last refinements differ by "
            f"{abs(stage2[-1] - stage2[-2]):.3e}"
        )
    return -float(stage2[-1])
