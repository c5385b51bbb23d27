"""Configuration-driven command line for the extension-problem toolbox.

Subcommands wire the solver, frequency, and blow-up pipelines together
and expose the standalone spectral and extension checks.  One JSON
config document drives a run; a handful of flags override its fields.
Every artifact embeds the resolved config and the library version, and
identical configs produce byte-identical outputs.

Exit codes: 0 success, 2 config/validation failure, 3 numerical failure
(non-convergent extrapolation, frequency snap failure, calibration
failure).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .gaussmeasure import ExtensionParams
from .polynomials import XYTPoly, caloric_extension
from .spectral import (NEUMANN, EigenIndex, SeparatedFunction, all_indices,
                       eigenspace, eigenvalue, extremal_boundary,
                       extremal_x, gram_matrix, ou_residual,
                       poincare_constant, poincare_corpus, poincare_ratio,
                       theta_poly)
from .extension import (AccuracyError, conormal_constant,
                        conormal_derivative, extended_function,
                        fractional_heat)
from .solver import (GridSpec, PotentialField, SmoothCutoff, apply_cutoff,
                     discrete_mass, solve_extension)
from .frequency import (CalibrationError, GridHandle, PolyField,
                        calibrate_constant, frequency_profile,
                        grid_min_radius, radius_ladder)
from .blowup import (BlowupError, classify_nodal_point,
                     scan_nodal_candidates)

__all__ = ["main"]


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


# ---------------------------------------------------------------------------
# configuration plumbing
# ---------------------------------------------------------------------------

def _load_config(args) -> Dict:
    cfg: Dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError("cannot read config: %s" % exc)
        except json.JSONDecodeError as exc:
            raise ConfigError("config is not valid JSON: %s" % exc)
        if not isinstance(cfg, dict):
            raise ConfigError("config root must be a JSON object")
    params = cfg.setdefault("params", {})
    if args.a is not None:
        params["a"] = args.a
        params.pop("s", None)
    if args.s is not None:
        params["s"] = args.s
        params.pop("a", None)
    if args.N is not None:
        params["N"] = args.N
    if args.out is not None:
        cfg.setdefault("outputs", {})["dir"] = args.out
    if getattr(args, "p0", None) is not None:
        cfg.setdefault("analysis", {})["p0"] = _parse_p0(args.p0)
    if getattr(args, "seed", None) is not None:
        cfg.setdefault("analysis", {})["seed"] = args.seed
    return cfg


def _parse_p0(text) -> List[float]:
    if isinstance(text, (list, tuple)):
        vals = [float(v) for v in text]
    else:
        try:
            vals = [float(v) for v in str(text).split(",")]
        except ValueError:
            raise ConfigError("p0 must be 'x,t' with numeric entries")
    if len(vals) != 2:
        raise ConfigError("p0 must have exactly two entries x,t")
    return vals


def _resolve_params(cfg: Dict) -> ExtensionParams:
    params = cfg.get("params", {})
    has_a = "a" in params
    has_s = "s" in params
    if has_a == has_s:
        raise ConfigError("give exactly one of params.a or params.s")
    dim_n = int(params.get("N", 1))
    if dim_n < 1:
        raise ConfigError("N must be a positive integer")
    if has_a:
        a = float(params["a"])
        if not (-1.0 < a < 1.0):
            raise ConfigError("a must lie in (-1,1)")
        p = ExtensionParams.from_a(a, dim_n)
    else:
        s = float(params["s"])
        if not (0.0 < s < 1.0):
            raise ConfigError("s must lie in (0,1)")
        p = ExtensionParams.from_s(s, dim_n)
    cfg["params"] = {"a": p.a, "s": p.s, "N": p.dim_n}
    return p


def _resolve_grid(cfg: Dict, a: float) -> GridSpec:
    grid = cfg.get("grid")
    if not isinstance(grid, dict):
        raise ConfigError("this subcommand needs a grid section")
    try:
        spec = GridSpec(
            a=a,
            xmin=float(grid.get("xmin", -2.0)),
            xmax=float(grid.get("xmax", 2.0)),
            nx=int(grid["nx"]),
            ymax=float(grid.get("ymax", 2.0)),
            ny=int(grid["ny"]),
            t_final=float(grid["t_final"]),
            dt=float(grid["dt"]),
        )
    except KeyError as exc:
        raise ConfigError("grid section is missing %s" % exc)
    except ValueError as exc:
        raise ConfigError("invalid grid: %s" % exc)
    cfg["grid"] = {"xmin": spec.xmin, "xmax": spec.xmax, "nx": spec.nx,
                   "ymax": spec.ymax, "ny": spec.ny,
                   "t_final": spec.t_final, "dt": spec.dt,
                   "data": cfg.get("grid", {}).get("data", "sine-gaussian")}
    return spec


_DATA_PROFILES = {
    "sine-gaussian": lambda x, y, t: np.sin(0.5 * np.pi * x)
    * np.exp(-0.5 * y * y),
    "gaussian-bump": lambda x, y, t: np.exp(-(x * x + y * y) / 4.0),
    "cosine-gaussian": lambda x, y, t: np.cos(0.5 * np.pi * x)
    * np.exp(-0.5 * y * y),
}


def _resolve_data(cfg: Dict):
    name = cfg.get("grid", {}).get("data", "sine-gaussian")
    if name not in _DATA_PROFILES:
        raise ConfigError("unknown grid.data %r (choose from %s)"
                          % (name, sorted(_DATA_PROFILES)))
    return _DATA_PROFILES[name]


def _resolve_potential(cfg: Dict, spec: GridSpec) -> Optional[PotentialField]:
    pot = cfg.get("potential")
    if pot in (None, {}, "none"):
        cfg["potential"] = None
        return None
    if not isinstance(pot, dict):
        raise ConfigError("potential must be an object or null")
    kind = pot.get("kind")
    if kind == "cosine":
        amp = float(pot.get("amplitude", 0.5))
        cfg["potential"] = {"kind": "cosine", "amplitude": amp}
        return PotentialField.from_callable(
            lambda x, t: amp * np.cos(x) * math.exp(-t), spec)
    if kind == "constant":
        val = float(pot.get("value", 0.0))
        cfg["potential"] = {"kind": "constant", "value": val}
        return PotentialField.from_callable(lambda x, t: val + 0.0 * x, spec)
    raise ConfigError("unknown potential.kind %r" % kind)


def _field_poly(cfg: Dict, p: ExtensionParams) -> XYTPoly:
    """Closed-form field from config: eigenmode sum or trace polynomial."""
    field = cfg.get("field")
    if not isinstance(field, dict):
        raise ConfigError("this subcommand needs a field section")
    if "modes" in field:
        total = XYTPoly(p.dim_n, {})
        for term in field["modes"]:
            idx = EigenIndex(term.get("kind", NEUMANN),
                             tuple(int(v) for v in term["alpha"]),
                             int(term.get("m", 0)))
            coeff = float(term.get("coeff", 1.0))
            total = total + theta_poly(idx, p) * coeff
        return total
    if "trace" in field:
        coeffs = {}
        for mono in field["trace"]:
            powers = tuple(int(v) for v in mono["powers"])
            if len(powers) != p.dim_n:
                raise ConfigError("trace powers must have N entries")
            key = (powers, 0, int(mono.get("tpow", 0)))
            coeffs[key] = coeffs.get(key, 0.0) + float(mono["c"])
        return caloric_extension(XYTPoly(p.dim_n, coeffs), p.a)
    raise ConfigError("field needs 'modes' or 'trace'")


def _analysis(cfg: Dict) -> Dict:
    ana = dict(cfg.get("analysis", {}))
    ana.setdefault("sigma", 1.0)
    ana.setdefault("C", 0.0)
    ana.setdefault("p0", [0.0, 0.0])
    cfg["analysis"] = {k: ana[k] for k in sorted(ana)}
    return ana


def _ladder_from(ana: Dict, min_radius: float = 0.0) -> np.ndarray:
    radii = ana.get("radii")
    if isinstance(radii, list) and radii:
        arr = np.asarray([float(v) for v in radii])
        if np.any(np.diff(arr) >= 0):
            raise ConfigError("analysis.radii must be strictly decreasing")
        return arr
    opts = radii if isinstance(radii, dict) else {}
    return radius_ladder(r0=float(opts.get("r0", 0.4)),
                         levels=int(opts.get("levels", 12)),
                         min_radius=max(min_radius,
                                        float(opts.get("min", 0.0))))


def _out_path(cfg: Dict, name: str) -> str:
    outputs = cfg.get("outputs") or {}
    prefix = outputs.get("prefix", "heatext")
    out_dir = outputs.get("dir", ".")
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, "%s-%s" % (prefix, name))


def _report(cfg: Dict, body: Dict, path: Optional[str] = None) -> None:
    doc = {"version": __version__, "config": cfg}
    doc.update(body)
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)


def _grid_pipeline(cfg: Dict, p: ExtensionParams, ana: Dict):
    """solve -> cutoff -> handle, centered on the analysis point."""
    spec = _resolve_grid(cfg, p.a)
    data = _resolve_data(cfg)
    q = _resolve_potential(cfg, spec)
    field = solve_extension(data, q, spec)
    x0, t0 = ana["p0"]
    zeta = SmoothCutoff(center=float(x0))
    w_cut, f_cut = apply_cutoff(field, zeta)
    handle = GridHandle(w_cut, (float(x0), float(t0)), f_field=f_cut, q=q)
    return spec, field, handle


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_spectrum(args) -> int:
    cfg = _load_config(args)
    p = _resolve_params(cfg)
    body: Dict = {}
    if args.kappa is not None:
        kinds = cfg.get("analysis", {}).get("kinds", [NEUMANN])
        listing = []
        for kind in kinds:
            for idx in eigenspace(float(args.kappa), kind, p):
                listing.append({"kind": idx.kind, "alpha": list(idx.alpha),
                                "m": idx.m,
                                "eigenvalue": eigenvalue(idx, p)})
        body["kappa"] = float(args.kappa)
        body["indices"] = listing
    else:
        cap = int(cfg.get("analysis", {}).get("cap", 8))
        indices = all_indices(NEUMANN, p, cap)
        from .frequency import default_rule
        rule = default_rule(p)
        gram = gram_matrix(indices, rule)
        gram_err = float(np.max(np.abs(gram - np.eye(len(indices)))))
        ou_err = max(ou_residual(idx, rule) for idx in indices)
        body["cap"] = cap
        body["count"] = len(indices)
        body["indices"] = [{"alpha": list(i.alpha), "m": i.m,
                            "eigenvalue": eigenvalue(i, p)}
                           for i in indices]
        body["gram_max_error"] = gram_err
        body["ou_max_residual"] = float(ou_err)
    _report(cfg, body)
    return 0


def _cmd_poincare(args) -> int:
    cfg = _load_config(args)
    p = _resolve_params(cfg)
    ana = cfg.get("analysis", {})
    seed = int(ana.get("seed", 0))
    count = int(ana.get("count", 100))
    rng = np.random.default_rng(seed)
    from .frequency import default_rule
    rule = default_rule(p)
    polys = poincare_corpus(rng, p, count)
    corpora = {
        "whole-space":
            [("random-%03d" % i, f) for i, f in enumerate(polys)]
            + [("extremal-x", extremal_x(p)),
               ("extremal-boundary", extremal_boundary(p))],
        "dirichlet":
            [("random-%03d" % i, SeparatedFunction(f, odd_extension=False))
             for i, f in enumerate(polys)]
            + [("extremal-boundary",
                extremal_boundary(p, whole_space=False))],
    }
    body: Dict = {"seed": seed, "count": count, "table": {}}
    for kind, corpus in corpora.items():
        bound = poincare_constant(kind, p)
        best_name, best = None, -math.inf
        rows = []
        for name, f in corpus:
            ratio = poincare_ratio(f, kind, rule)
            rows.append({"name": name, "ratio": ratio})
            if ratio > best:
                best_name, best = name, ratio
        body["table"][kind] = {
            "bound": bound,
            "max_ratio": best,
            "argmax": best_name,
            "sharp": abs(best - bound) <= 1e-6,
            "rows": rows,
        }
    _report(cfg, body, _out_path(cfg, "poincare.json")
            if cfg.get("outputs") else None)
    return 0


_EXTENSION_FIXTURES = {
    "cosine": lambda x, t: np.cos(x[..., 0]),
    "gaussian-bump": lambda x, t: np.exp(-0.5 * x[..., 0] ** 2),
    "quadratic": lambda x, t: x[..., 0] ** 2 + 2.0 * t,
}


def _cmd_extension_check(args) -> int:
    cfg = _load_config(args)
    p = _resolve_params(cfg)
    if p.dim_n != 1:
        raise ConfigError("extension-check runs in one trace dimension")
    ana = cfg.get("analysis", {})
    names = ana.get("fixtures", sorted(_EXTENSION_FIXTURES))
    points = ana.get("points", [-1.0, -0.5, 0.0, 0.5, 1.0])
    t0 = float(ana.get("t0", 0.75))
    c_s = conormal_constant(p.s)
    body: Dict = {"conormal_constant": c_s, "t0": t0, "cases": []}
    worst = 0.0
    for name in names:
        if name not in _EXTENSION_FIXTURES:
            raise ConfigError("unknown fixture %r (choose from %s)"
                              % (name, sorted(_EXTENSION_FIXTURES)))
        u = _EXTENSION_FIXTURES[name]
        ubar = extended_function(u, p)
        errs = []
        for x in points:
            lhs = conormal_derivative(ubar, float(x), t0, p)
            rhs = c_s * fractional_heat(u, float(x), t0, p.s)
            errs.append(abs(lhs - rhs))
        case_err = max(errs)
        worst = max(worst, case_err)
        body["cases"].append({"fixture": name, "max_error": case_err,
                              "points": [float(v) for v in points]})
    body["max_error"] = worst
    _report(cfg, body, _out_path(cfg, "extension-check.json")
            if cfg.get("outputs") else None)
    return 0


def _cmd_solve(args) -> int:
    cfg = _load_config(args)
    p = _resolve_params(cfg)
    spec = _resolve_grid(cfg, p.a)
    data = _resolve_data(cfg)
    q = _resolve_potential(cfg, spec)
    field = solve_extension(data, q, spec)
    path = _out_path(cfg, "field.bin")
    field.to_binary(path)
    # fold the resolved run config into the sidecar
    with open(path + ".json") as fh:
        sidecar = json.load(fh)
    sidecar["version"] = __version__
    sidecar["config"] = cfg
    with open(path + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _report(cfg, {"artifact": path,
                  "final_mass": discrete_mass(field, spec.nt)})
    return 0


def _cmd_frequency(args) -> int:
    cfg = _load_config(args)
    p = _resolve_params(cfg)
    ana = _analysis(cfg)
    if "grid" in cfg and cfg["grid"] is not None:
        spec, _, handle = _grid_pipeline(cfg, p, ana)
        ladder = _ladder_from(ana, grid_min_radius(spec))
        W = handle
        p0 = tuple(float(v) for v in ana["p0"])
    else:
        poly = _field_poly(cfg, p)
        W = PolyField(poly, p)
        ladder = _ladder_from(ana)
        p0 = tuple(float(v) for v in ana["p0"])
        if p0 != (0.0, 0.0):
            from .blowup import recenter
            W = recenter(W, p0)
    C = ana["C"]
    if C == "auto":
        C = calibrate_constant(W, ladder)
        cfg["analysis"]["C"] = C
    profile = frequency_profile(W, radii=ladder, sigma=float(ana["sigma"]),
                                C=float(C), p0=p0)
    path = _out_path(cfg, "frequency.csv")
    text = profile.to_csv(path, extra_header={"version": __version__,
                                              "config": cfg})
    _report(cfg, {"artifact": path, "radii": [float(r) for r in
                                              profile.radii],
                  "N0": list(profile.columns["N0"]),
                  "NI": list(profile.columns["NI"])})
    return 0


def _cmd_blowup(args) -> int:
    cfg = _load_config(args)
    p = _resolve_params(cfg)
    ana = _analysis(cfg)
    points = ana.get("points")
    if points is None:
        points = [ana["p0"]]
    points = [_parse_p0(pt) for pt in points]
    results = []
    if "grid" in cfg and cfg["grid"] is not None:
        for pt in points:
            local = dict(ana)
            local["p0"] = pt
            spec, _, handle = _grid_pipeline(cfg, p, local)
            ladder = _ladder_from(ana, grid_min_radius(spec))
            cls = classify_nodal_point(handle, ladder=ladder)
            results.append(_classification_doc(pt, cls))
    else:
        poly = _field_poly(cfg, p)
        trace = XYTPoly(p.dim_n, {k: c for k, c in poly.coeffs.items()
                                  if k[1] == 0})  # restriction to y = 0
        ladder = _ladder_from(ana)
        for pt in points:
            cls = classify_nodal_point(trace, (pt[0], pt[1]), ladder=ladder,
                                       params=p)
            results.append(_classification_doc(pt, cls))
    path = _out_path(cfg, "blowup.json") if cfg.get("outputs") else None
    _report(cfg, {"points": results}, path)
    return 0


def _classification_doc(pt, cls) -> Dict:
    return {
        "p0": [float(np.asarray(pt[0]).ravel()[0]), float(pt[1])],
        "verdict": cls.verdict,
        "regular": bool(cls.regular),
        "kappa": float(cls.kappa),
        "spatial_dim": None if cls.spatial_dim is None
        else int(cls.spatial_dim),
        "gradient_norm": float(cls.gradient_norm),
        "consistent": bool(cls.consistent),
        "tangent": json.loads(cls.tangent.to_json()),
    }


def _cmd_nodal_scan(args) -> int:
    cfg = _load_config(args)
    p = _resolve_params(cfg)
    ana = _analysis(cfg)
    spec = _resolve_grid(cfg, p.a)
    data = _resolve_data(cfg)
    q = _resolve_potential(cfg, spec)
    field = solve_extension(data, q, spec)
    t0 = float(ana.get("t0", spec.t_final))
    candidates = scan_nodal_candidates(field, t0)
    results = []
    for x0 in candidates:
        zeta = SmoothCutoff(center=float(x0))
        try:
            w_cut, f_cut = apply_cutoff(field, zeta)
        except ValueError:
            results.append({"x": float(x0), "verdict": "unresolved",
                            "reason": "cutoff support leaves the domain"})
            continue
        handle = GridHandle(w_cut, (float(x0), t0), f_field=f_cut, q=q)
        ladder = _ladder_from(ana, grid_min_radius(spec))
        try:
            cls = classify_nodal_point(handle, ladder=ladder)
        except BlowupError as exc:
            results.append({"x": float(x0), "verdict": "unresolved",
                            "reason": str(exc)})
            continue
        results.append(_classification_doc((x0, t0), cls))
    path = _out_path(cfg, "nodal-scan.json") if cfg.get("outputs") else None
    _report(cfg, {"t0": t0, "candidates": [float(v) for v in candidates],
                  "points": results}, path)
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _add_common(sub, p0=False, seed=False, kappa=False):
    sub.add_argument("--config", help="JSON config path")
    sub.add_argument("--a", type=float, help="weight exponent in (-1,1)")
    sub.add_argument("--s", type=float, help="fractional order in (0,1)")
    sub.add_argument("--N", type=int, help="trace dimension (default 1)")
    sub.add_argument("--out", help="output directory")
    if p0:
        sub.add_argument("--p0", help="trace point as 'x,t'")
    if seed:
        sub.add_argument("--seed", type=int, help="corpus RNG seed")
    if kappa:
        sub.add_argument("--kappa", type=float,
                         help="list the eigenspace of this frequency")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heatext",
        description="extension-problem toolbox for the fractional heat "
                    "operator")
    parser.add_argument("--version", action="version",
                        version="heatext %s" % __version__)
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("spectrum",
                         help="eigenvalues, eigenspaces, Gram report")
    _add_common(sp, kappa=True)
    sp.set_defaults(fn=_cmd_spectrum)

    sp = subs.add_parser("poincare",
                         help="Poincare ratio corpus and sharpness verdict")
    _add_common(sp, seed=True)
    sp.set_defaults(fn=_cmd_poincare)

    sp = subs.add_parser("extension-check",
                         help="conormal-versus-kernel identity corpus")
    _add_common(sp)
    sp.set_defaults(fn=_cmd_extension_check)

    sp = subs.add_parser("solve",
                         help="run the lattice solver, write field binary")
    _add_common(sp)
    sp.set_defaults(fn=_cmd_solve)

    sp = subs.add_parser("frequency",
                         help="frequency profile CSV at a trace point")
    _add_common(sp, p0=True)
    sp.set_defaults(fn=_cmd_frequency)

    sp = subs.add_parser("blowup",
                         help="tangent map and classification at points")
    _add_common(sp, p0=True)
    sp.set_defaults(fn=_cmd_blowup)

    sp = subs.add_parser("nodal-scan",
                         help="find and classify trace zero crossings")
    _add_common(sp)
    sp.set_defaults(fn=_cmd_nodal_scan)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        sys.stderr.write("error: %s\n" % exc)
        return 2
    except (BlowupError, CalibrationError, AccuracyError) as exc:
        sys.stderr.write("numerical failure: %s\n" % exc)
        return 3
    except ValueError as exc:
        sys.stderr.write("error: %s\n" % exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
