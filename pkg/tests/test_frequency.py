"""Monotonicity functionals: heights, quotients, Weiss/Monneau, ACF.

Reference values come from closed forms of the weighted Gaussian
moments.  With E[x^2] = 2t, E[x^4] = 12t^2 and the orthogonality of the
scaled Hermite modes, the linear mode W = x has h(t) = 2t and every
quotient 1/2, the quadratic mode W = x^2 - 2t has h(t) = 8t^2 and
quotient 1, and a mixed field splits into a sum of pure-mode terms.
The potential drift and the Alt-Caffarelli-Friedman integral reduce to
one-dimensional Gamma-function integrals that are worked out in the
individual tests.
"""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gamma

from heatext.frequency import (ACF_DIRICHLET, ACF_NEUMANN, ACF_WHOLE,
                               CalibrationError, FieldHandle,
                               FrequencyProfile, GridHandle, PolyField,
                               acf_j, averaged, calibrate_constant,
                               default_rule, frequency_profile,
                               grid_min_radius, instant_energies, monneau,
                               phi_a, quotients, radius_ladder, t_sigma,
                               vanishing_order, weiss)
from heatext.gaussmeasure import ExtensionParams
from heatext.polynomials import XYTPoly, scaled_hermite_theta
from heatext.solver import (GridSpec, PotentialField, SmoothCutoff,
                            apply_cutoff, evaluate, solve_extension)
from heatext.spectral import SeparatedFunction

P = ExtensionParams.from_a(-0.5, 1)

PROFILE_COLUMNS = ("H", "D0", "D", "I", "N0", "ND", "NI",
                   "Phi", "Weiss", "Tsigma")


def _x():
    return XYTPoly.coordinate(1, "x", 0)


def _mode(n):
    """Scaled Hermite mode t^{n/2} H_n(x / sqrt t)."""
    return scaled_hermite_theta(1, 0, n)


def _mixed():
    """x + 0.3 (x^3 - 6xt): frequencies 1/2 and 3/2 in fixed proportion."""
    return _x() + _mode(3) * 0.3


# -- instants and averages on closed forms -------------------------------------

def test_instant_energies_linear_mode():
    W = PolyField(_x(), P)
    t = 0.3
    h, d0, d, i = instant_energies(W, t)
    assert h == pytest.approx(2.0 * t, rel=1e-12)
    assert d0 == pytest.approx(t, rel=1e-12)
    assert d == d0  # no potential: no drift subtracted
    assert i == pytest.approx(t, rel=1e-12)


def test_instant_energies_quadratic_mode():
    W = PolyField(_mode(2), P)
    t = 0.45
    h, d0, d, i = instant_energies(W, t)
    assert h == pytest.approx(8.0 * t * t, rel=1e-12)
    assert d0 == pytest.approx(8.0 * t * t, rel=1e-12)
    assert i == pytest.approx(8.0 * t * t, rel=1e-12)


@pytest.mark.parametrize("a", (-0.5, 0.3))
@pytest.mark.parametrize("r", (0.2, 0.35))
def test_quotients_pure_modes(a, r):
    p = ExtensionParams.from_a(a, 1)
    for poly, kappa in ((XYTPoly.constant(1, 1.0), 0.0),
                        (_x(), 0.5), (_mode(2), 1.0)):
        n0, nd, ni = quotients(PolyField(poly, p), r)
        assert n0 == pytest.approx(kappa, abs=1e-12)
        assert nd == pytest.approx(kappa, abs=1e-12)
        assert ni == pytest.approx(kappa, abs=1e-12)


def test_averaged_mixed_height():
    # orthogonal modes add in quadrature: H = r^2 + 0.09*48/4 * r^6
    W = PolyField(_mixed(), P)
    for r in (0.2, 0.5):
        H, D0, D, I = averaged(W, r)
        assert H == pytest.approx(r**2 + 1.08 * r**6, rel=1e-12)
        assert D == D0


def test_instant_requires_positive_time():
    W = PolyField(_x(), P)
    with pytest.raises(ValueError):
        instant_energies(W, 0.0)
    with pytest.raises(ValueError):
        instant_energies(W, -0.1)


def test_instant_rejects_singular_rule_variant():
    rule = default_rule(P).with_variant("dirichlet-mass")
    with pytest.raises(ValueError, match="plain measure"):
        instant_energies(PolyField(_x(), P), 0.3, rule)


def test_averaged_requires_positive_radius():
    with pytest.raises(ValueError):
        averaged(PolyField(_x(), P), 0.0)


def test_quotients_height_floor():
    tiny = PolyField(XYTPoly.constant(1, 1e-9), P)
    with pytest.raises(ValueError, match="height too small"):
        quotients(tiny, 0.3)


def test_default_rule_cached():
    assert default_rule(P) is default_rule(ExtensionParams.from_a(-0.5, 1))


@settings(max_examples=25, deadline=None)
@given(c0=st.floats(-2, 2), c1=st.floats(-2, 2), c2=st.floats(-2, 2),
       r=st.floats(0.15, 0.6))
def test_caloric_mix_height_and_derivative_identity(c0, c1, c2, r):
    # For W = c0 + c1 x + c2 (x^2 - 2t) the orthogonal modes give
    # H(r) = c0^2 + c1^2 r^2 + (8/3) c2^2 r^4 and r H'(r) = 4 I(r).
    W = PolyField(XYTPoly.constant(1, c0) + _x() * c1 + _mode(2) * c2, P)
    H, D0, D, I = averaged(W, r)
    want_h = c0**2 + c1**2 * r**2 + (8.0 / 3.0) * c2**2 * r**4
    want_i = 0.5 * c1**2 * r**2 + (8.0 / 3.0) * c2**2 * r**4
    assert H == pytest.approx(want_h, rel=1e-10, abs=1e-12)
    assert I == pytest.approx(want_i, rel=1e-10, abs=1e-12)


def test_height_derivative_matches_pairing():
    # dH/dr = 4 I / r, checked by central differences
    W = PolyField(_mode(2) + _x() * 3.0 + XYTPoly.constant(1, 1.0), P)
    for r in (0.3, 0.6):
        eps = 1e-5 * r
        fd = (averaged(W, r + eps)[0] - averaged(W, r - eps)[0]) / (2 * eps)
        I = averaged(W, r)[3]
        assert fd == pytest.approx(4.0 * I / r, rel=1e-8)


# -- potential drift and the solution identity ----------------------------------

@pytest.mark.parametrize("a", (-0.5, 0.3))
def test_potential_drift_closed_form(a):
    # For W = x and q = c the drift integral is the second moment of the
    # N(0, 2t) trace Gaussian times the trace prefactor:
    #   d0 - d = 2 c t^{2 - (1+a)/2} / (2^a Gamma((1+a)/2)).
    p = ExtensionParams.from_a(a, 1)
    c = 0.7
    W = PolyField(_x(), p, q=lambda xs, t: np.full_like(np.asarray(xs), c))
    for t in (0.25, 0.8):
        h, d0, d, i = instant_energies(W, t)
        want = 2.0 * c * t ** (2.0 - (1.0 + a) / 2.0) / (
            2.0**a * gamma((1.0 + a) / 2.0))
        assert d0 - d == pytest.approx(want, rel=1e-12)
        assert h == pytest.approx(2.0 * t, rel=1e-12)  # drift leaves h alone


@pytest.mark.parametrize("a", (-0.5, 0.3))
def test_solution_identity_with_forcing(a):
    # i = d + t int W F dmu_t whenever F is the field's heat residual
    p = ExtensionParams.from_a(a, 1)
    rule = default_rule(p)
    y = XYTPoly.coordinate(1, "y")
    for poly in (_x() * _x(), _x() * _x() + y * y):
        F = poly.weighted_heat_residual(a)
        W = PolyField(poly, p, forcing=F)
        for t in (0.3, 0.9):
            h, d0, d, i = instant_energies(W, t)
            X = math.sqrt(t) * rule.nodes
            wf = math.fsum(rule.weights * W.value(X, t) * W.forcing(X, t))
            assert i == pytest.approx(d + t * wf, rel=1e-12, abs=1e-13)


def test_forcing_defaults_to_zero():
    W = PolyField(_x(), P)
    vals = W.forcing(np.array([[0.3, 0.4], [0.1, 0.2]]), 0.5)
    assert vals.shape == (2,)
    assert np.all(vals == 0.0)


# -- Weiss, Monneau, T_sigma, Phi ------------------------------------------------

def test_weiss_vanishes_on_pure_modes():
    for poly, kappa in ((_x(), 0.5), (_mode(2), 1.0)):
        W = PolyField(poly, P)
        for r in (0.15, 0.3, 0.5):
            assert weiss(W, r, 2.0 * kappa) == pytest.approx(0.0, abs=1e-13)


def test_weiss_mixed_closed_form():
    # W = x + 0.3 (x^3 - 6xt) at sigma = 1: only the higher mode
    # contributes, D - H/2 = 0.09 * 48 * (kappa'-kappa)/... = 1.08 r^6,
    # so the Weiss energy is exactly 1.08 r^4 — positive, decreasing to
    # zero as r -> 0.
    W = PolyField(_mixed(), P)
    vals = []
    for r in (0.2, 0.35, 0.5):
        w = weiss(W, r, 1.0)
        assert w == pytest.approx(1.08 * r**4, rel=1e-12)
        vals.append(w)
    assert vals == sorted(vals)


def test_monneau_mixed_closed_form():
    # distance to the tangent mode x: H(W - x, r) = 1.08 r^6, kappa=1/2
    W = PolyField(_mixed(), P)
    for r in (0.2, 0.35, 0.5):
        m = monneau(W, _x(), r, kappa=0.5)
        assert m == pytest.approx(1.08 * r**4, rel=1e-12)


def test_monneau_requires_kappa_for_bare_polynomial():
    with pytest.raises(ValueError, match="kappa"):
        monneau(PolyField(_mixed(), P), _x(), 0.3)


def test_t_sigma_pure_modes():
    assert t_sigma(PolyField(_x(), P), 0.3, 1.0) == pytest.approx(
        1.0, rel=1e-12)
    assert t_sigma(PolyField(_mode(2), P), 0.3, 2.0) == pytest.approx(
        8.0 / 3.0, rel=1e-12)


def test_phi_matches_quotient_and_correction():
    W = PolyField(_mixed(), P)
    for r in (0.2, 0.4):
        _, _, ni = quotients(W, r)
        assert phi_a(W, r, 0.0) == pytest.approx(ni, abs=1e-14)
        C = 0.7
        bump = math.exp(C * r ** (1.0 - P.a))
        assert phi_a(W, r, C) == pytest.approx(bump * (ni + 1.0) - 1.0,
                                               rel=1e-14)


def test_functional_domain_checks():
    W = PolyField(_x(), P)
    with pytest.raises(ValueError):
        phi_a(W, 0.3, -1.0)
    with pytest.raises(ValueError):
        weiss(W, 0.3, 0.0)
    with pytest.raises(ValueError):
        t_sigma(W, 0.3, -2.0)


# -- Alt-Caffarelli-Friedman integral -------------------------------------------

@pytest.mark.parametrize("a", (-0.5, 0.3))
def test_acf_linear_mode_is_one(a):
    p = ExtensionParams.from_a(a, 1)
    U = PolyField(_x(), p)
    for t in (0.3, 1.0):
        assert acf_j(U, t) == pytest.approx(1.0, rel=1e-12)


def test_acf_constant_is_zero():
    U = PolyField(XYTPoly.constant(1, 3.0), P)
    assert acf_j(U, 0.5) == 0.0


@pytest.mark.parametrize("a", (-0.5, 0.3))
def test_acf_time_profile(a):
    # ((1+a)/2) t - y^2/4 has |grad|^2 = y^2/4, so J(t) = (1+a) t / 4
    p = ExtensionParams.from_a(a, 1)
    y, tt = XYTPoly.coordinate(1, "y"), XYTPoly.coordinate(1, "t")
    prof = tt * ((1.0 + a) / 2.0) - y * y * 0.25
    assert acf_j(PolyField(prof, p), 0.4) == pytest.approx(
        (1.0 + a) * 0.1, rel=1e-12)


@pytest.mark.parametrize("a,frozen", ((-0.5, 1.0139673601009269),
                                      (0.3, 0.84913744692406246)))
def test_acf_dirichlet_boundary_factor(a, frozen):
    # U = y^{1-a}: |grad U|^2 = (1-a)^2 y^{-2a} integrates to
    # (1-a) 4^{-a} Gamma((1-a)/2)/Gamma((1+a)/2) * t^{1-a}, so the
    # Dirichlet-normalized J is that constant at every t.
    p = ExtensionParams.from_a(a, 1)
    sep = SeparatedFunction(XYTPoly.constant(1, 1.0))
    want = (1.0 - a) * 4.0**(-a) * gamma((1.0 - a) / 2.0) / gamma(
        (1.0 + a) / 2.0)
    assert want == pytest.approx(frozen, rel=1e-13)
    for t in (0.3, 1.0):
        assert acf_j(sep, t, mode=ACF_DIRICHLET, params=p) == pytest.approx(
            want, rel=1e-12)


def test_acf_whole_space_exponent():
    # whole-space normalization t^{-min(1,1-a)}: for U = x the energy
    # integral is exactly t, so J = t^{a} for a > 0 and 1 otherwise
    U = PolyField(_x(), ExtensionParams.from_a(0.3, 1))
    for t in (0.4, 0.9):
        assert acf_j(U, t, mode=ACF_WHOLE) == pytest.approx(t**0.3,
                                                            rel=1e-12)
    U = PolyField(_x(), P)
    assert acf_j(U, 0.4, mode=ACF_WHOLE) == pytest.approx(1.0, rel=1e-12)


def test_acf_nondecreasing_on_global_fixtures():
    ts = (0.1, 0.2, 0.4, 0.8)
    y, tt = XYTPoly.coordinate(1, "y"), XYTPoly.coordinate(1, "t")
    fixtures = (PolyField(_x(), P),
                PolyField(tt * ((1.0 + P.a) / 2.0) - y * y * 0.25, P),
                PolyField(_mixed(), P))
    for U in fixtures:
        vals = [acf_j(U, t) for t in ts]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_acf_validation():
    with pytest.raises(ValueError, match="unknown mode"):
        acf_j(PolyField(_x(), P), 0.3, mode="robin")
    with pytest.raises(ValueError):
        acf_j(PolyField(_x(), P), 0.0)
    with pytest.raises(ValueError, match="params"):
        acf_j(_x(), 0.3)
    with pytest.raises(ValueError, match="params"):
        acf_j(SeparatedFunction(XYTPoly.constant(1, 1.0)), 0.3,
              mode=ACF_DIRICHLET)
    # bare polynomial with params routes through PolyField
    assert acf_j(_x(), 0.3, params=P) == pytest.approx(1.0, rel=1e-12)


# -- profiles and CSV -------------------------------------------------------------

def test_frequency_profile_columns_match_functionals():
    W = PolyField(_mixed(), P)
    radii = radius_ladder(0.4, 4)
    prof = frequency_profile(W, radii=radii, sigma=1.0, C=0.7)
    for k, r in enumerate(radii):
        H, D0, D, I = averaged(W, float(r))
        assert prof.columns["H"][k] == pytest.approx(H, rel=1e-14)
        assert prof.columns["D0"][k] == pytest.approx(D0, rel=1e-14)
        assert prof.columns["N0"][k] == pytest.approx(D0 / H, rel=1e-14)
        assert prof.columns["NI"][k] == pytest.approx(I / H, rel=1e-14)
        assert prof.columns["Phi"][k] == pytest.approx(
            phi_a(W, float(r), 0.7), rel=1e-14)
        assert prof.columns["Weiss"][k] == pytest.approx(
            weiss(W, float(r), 1.0), rel=1e-14)
        assert prof.columns["Tsigma"][k] == pytest.approx(
            t_sigma(W, float(r), 1.0), rel=1e-14)
    head = prof.header()
    assert head["a"] == P.a and head["C"] == 0.7 and head["p0"] == [0.0, 0.0]


def test_profile_validation():
    radii = radius_ladder(0.4, 5)
    cols = {name: np.ones_like(radii) for name in PROFILE_COLUMNS}
    FrequencyProfile(params=P, p0=(0.0, 0.0), sigma=1.0, constant=0.0,
                     radii=radii, columns=cols)
    with pytest.raises(ValueError, match="strictly decreasing"):
        FrequencyProfile(params=P, p0=(0.0, 0.0), sigma=1.0, constant=0.0,
                         radii=radii[::-1], columns=cols)
    short = dict(cols)
    del short["Weiss"]
    with pytest.raises(ValueError, match="missing column"):
        FrequencyProfile(params=P, p0=(0.0, 0.0), sigma=1.0, constant=0.0,
                         radii=radii, columns=short)
    ragged = dict(cols)
    ragged["I"] = np.ones(len(radii) - 1)
    with pytest.raises(ValueError, match="length mismatch"):
        FrequencyProfile(params=P, p0=(0.0, 0.0), sigma=1.0, constant=0.0,
                         radii=radii, columns=ragged)
    flat = dict(cols)
    flat["H"] = np.zeros_like(radii)
    with pytest.raises(ValueError, match="positive"):
        FrequencyProfile(params=P, p0=(0.0, 0.0), sigma=1.0, constant=0.0,
                         radii=radii, columns=flat)


def test_csv_round_trip_byte_identical(tmp_path):
    W = PolyField(_mixed(), P)
    prof = frequency_profile(W, radii=radius_ladder(0.4, 4), C=0.5)
    text = prof.to_csv(extra_header={"run": "fixture"})
    again = FrequencyProfile.from_csv(text)
    assert again.to_csv(extra_header={"run": "fixture"}) == text
    head = json.loads(text.splitlines()[0][1:])
    assert head["run"] == "fixture" and head["C"] == 0.5
    np.testing.assert_array_equal(again.radii, prof.radii)
    for name in PROFILE_COLUMNS:
        np.testing.assert_array_equal(again.columns[name],
                                      prof.columns[name])
    # writing to a path stores exactly the returned text
    out = tmp_path / "profile.csv"
    text2 = prof.to_csv(path=str(out))
    assert out.read_text() == text2


def test_from_csv_validation():
    with pytest.raises(ValueError, match="header"):
        FrequencyProfile.from_csv("r,H\n0.4,1.0\n")
    with pytest.raises(ValueError, match="column header"):
        FrequencyProfile.from_csv('# {"a": 0.0, "p0": [0,0], "sigma": 1,'
                                  ' "C": 0}\nr,bogus\n0.4,1.0\n')


def test_radius_ladder():
    r = radius_ladder(0.4, 5)
    np.testing.assert_allclose(r, 0.4 * 2.0 ** (-0.5 * np.arange(5)),
                               rtol=1e-15)
    trunc = radius_ladder(0.4, 12, min_radius=0.25)
    assert len(trunc) == 2 and trunc[-1] == pytest.approx(0.4 / math.sqrt(2))
    with pytest.raises(ValueError, match="ladder empty"):
        radius_ladder(0.4, 6, min_radius=0.5)


def test_grid_min_radius():
    assert grid_min_radius(GridSpec(a=-0.5)) == pytest.approx(0.25)


# -- vanishing order and calibration ----------------------------------------------

def test_vanishing_order_pure_modes():
    for poly, order in ((_x(), 1.0), (_mode(2), 2.0)):
        prof = frequency_profile(PolyField(poly, P),
                                 radii=radius_ladder(0.4, 8))
        vo = vanishing_order(prof)
        assert vo.estimate == pytest.approx(order, abs=1e-10)
        assert vo.half_width < 1e-8
        assert not vo.infinite_order_suspected
        np.testing.assert_allclose(vo.slopes, 2.0 * order, atol=1e-10)


def test_vanishing_order_flags_superpolynomial_decay():
    radii = radius_ladder(0.4, 10)
    cols = {name: np.ones_like(radii) for name in PROFILE_COLUMNS}
    cols["H"] = np.exp(-1.0 / radii)
    prof = FrequencyProfile(params=P, p0=(0.0, 0.0), sigma=1.0,
                            constant=0.0, radii=radii, columns=cols)
    vo = vanishing_order(prof)
    assert vo.infinite_order_suspected
    assert np.all(np.diff(vo.slopes) > 0)


def test_vanishing_order_needs_enough_radii():
    prof = frequency_profile(PolyField(_x(), P),
                             radii=radius_ladder(0.4, 4))
    with pytest.raises(ValueError, match="not enough radii"):
        vanishing_order(prof)


class _DecayHandle(FieldHandle):
    """W = x e^{-lam t}: the pairing quotient falls off linearly in t."""

    def __init__(self, params, lam):
        self.params = params
        self.lam = lam

    def value(self, X, t):
        return X[..., 0] * math.exp(-self.lam * t)

    def gradient(self, X, t):
        g = np.zeros_like(X)
        g[..., 0] = math.exp(-self.lam * t)
        return g

    def time_derivative(self, X, t):
        return -self.lam * X[..., 0] * math.exp(-self.lam * t)


def test_calibrate_constant_zero_for_global_solution():
    assert calibrate_constant(PolyField(_x(), P),
                              radius_ladder(0.4, 6), None) == 0.0


def test_calibrate_constant_grows_with_decay_rate():
    assert calibrate_constant(_DecayHandle(P, 1.0),
                              radius_ladder(0.4, 6), None) == 0.5
    assert calibrate_constant(_DecayHandle(P, 2.0),
                              radius_ladder(0.4, 6), None) == 1.0


def test_calibrate_constant_failure():
    with pytest.raises(CalibrationError, match="no constant"):
        calibrate_constant(_DecayHandle(P, 200.0),
                           radius_ladder(0.4, 6), None)


# -- lattice-backed handles -------------------------------------------------------

@pytest.fixture(scope="module")
def caloric_grid():
    spec = GridSpec(a=-0.5)
    fld = solve_extension(lambda x, y, t: x * x + 2.0 * t + 0.0 * y,
                          None, spec)
    return spec, fld


@pytest.fixture(scope="module")
def potential_grid():
    spec = GridSpec(a=-0.5)
    q = PotentialField.from_callable(
        lambda x, t: 0.5 * np.cos(x) * np.exp(-t), spec)
    fld = solve_extension(
        lambda x, y, t: np.sin(x) * np.exp(-0.25 * (x * x + y * y)),
        q, spec)
    cut_w, cut_f = apply_cutoff(fld, SmoothCutoff(1.0, 1.9))
    return spec, q, fld, cut_w, cut_f


def test_grid_handle_matches_closed_form(caloric_grid):
    # anchored at (0, 1), the lattice solution reads
    # W(X, t) = x^2 + 2(1 - t) = (x^2 - 2t) + 2, so h = 4 + 8t^2 and
    # d0 = i = 8t^2.  At t = 0.04 the Gaussian sits well inside the
    # lattice and the only errors are interpolation-sized.
    _, fld = caloric_grid
    gh = GridHandle(fld, (0.0, 1.0))
    t = 0.04
    h, d0, d, i = instant_energies(gh, t)
    assert h == pytest.approx(4.0 + 8.0 * t * t, abs=5e-3)
    assert d0 == pytest.approx(8.0 * t * t, abs=1e-9)
    assert d == d0
    assert i == pytest.approx(8.0 * t * t, abs=1e-4)


def test_grid_handle_value_matches_evaluate(caloric_grid):
    _, fld = caloric_grid
    gh = GridHandle(fld, (0.0, 1.0))
    pts = np.array([[0.37, 0.41], [-0.9, 0.13], [0.0, 0.77]])
    for t in (0.12, 0.5):
        direct = np.array([evaluate(fld, (pt[0], pt[1]), 1.0 - t)
                           for pt in pts])
        np.testing.assert_allclose(gh.value(pts, t), direct, atol=1e-12)


def test_grid_handle_outside_hull_is_zero(caloric_grid):
    _, fld = caloric_grid
    gh = GridHandle(fld, (0.0, 1.0))
    assert gh.value(np.array([[5.0, 0.1]]), 0.1)[0] == 0.0
    assert not gh.in_hull(np.array([[5.0, 0.1]]), 0.1)[0]


def test_grid_handle_anchor_validation(caloric_grid):
    _, fld = caloric_grid
    with pytest.raises(ValueError, match="anchor time"):
        GridHandle(fld, (0.0, 1.5))
    with pytest.raises(ValueError, match="anchor time"):
        GridHandle(fld, (0.0, 0.0))
    gh = GridHandle(fld, (0.0, 1.0))
    with pytest.raises(ValueError, match="time hull"):
        gh.value(np.array([[0.1, 0.1]]), 1.2)


def test_grid_handle_dropped_log(caloric_grid):
    _, fld = caloric_grid
    gh = GridHandle(fld, (0.0, 1.0))
    instant_energies(gh, 0.04)
    instant_energies(gh, 0.16)
    assert len(gh.dropped_log) == 2
    (t1, m1), (t2, m2) = gh.dropped_log
    assert (t1, t2) == (0.04, 0.16)
    # wider Gaussians push more quadrature mass off the lattice
    assert 0.0 <= m1 < m2 < 1e-3


def test_grid_profile_uses_anchor_and_min_radius(caloric_grid):
    spec, fld = caloric_grid
    gh = GridHandle(fld, (0.0, 1.0))
    prof = frequency_profile(gh, sigma=1.0)
    np.testing.assert_allclose(
        prof.radii, radius_ladder(min_radius=grid_min_radius(spec)),
        rtol=1e-15)
    assert prof.header()["p0"] == [0.0, 1.0]


def test_potential_trace_interpolates_lattice(potential_grid):
    spec, q, fld, _, _ = potential_grid
    gh = GridHandle(fld, (0.0, 1.0), q=q)
    # lattice-aligned point: bilinear interpolation is exact there
    val = gh.potential_trace(np.array([0.375]), 0.4)[0]
    assert val == pytest.approx(0.5 * math.cos(0.375) * math.exp(-0.6),
                                rel=1e-12)


def test_grid_solution_identity_with_potential(potential_grid):
    # i = d for the uncut lattice solution (forcing-free), up to
    # interpolation and marching error
    _, q, fld, _, _ = potential_grid
    gh = GridHandle(fld, (0.0, 1.0), q=q)
    t = 0.04
    h, d0, d, i = instant_energies(gh, t)
    assert d != d0  # the potential drift is active
    assert i == pytest.approx(d, rel=5e-3)


def test_grid_solution_identity_with_cutoff_forcing(potential_grid):
    # the cut field solves the equation with right-hand side F, so
    # i = d + t int W F dmu_t
    _, q, _, cut_w, cut_f = potential_grid
    gh = GridHandle(cut_w, (0.0, 1.0), f_field=cut_f, q=q)
    rule = default_rule(gh.params)
    t = 0.04
    h, d0, d, i = instant_energies(gh, t)
    X = math.sqrt(t) * rule.nodes
    wf = math.fsum(rule.weights * gh.value(X, t) * gh.forcing(X, t))
    assert i == pytest.approx(d + t * wf, rel=5e-3)
