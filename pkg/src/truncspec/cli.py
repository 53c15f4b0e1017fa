"""Config-driven command line front end.

Subcommands: airy-zeros, solve, sweep, predict, check, fit.  Configs are
TOML; reports are CSV and JSON with fixed float formatting, fixed orderings
and fixed seeds, so identical configs produce byte-identical outputs.  Exit
codes: 0 success, 2 config/validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - 3.10 fallback
    import tomli as tomllib

from .airy import ai_prime_zero, ai_zero
from .asymptotics import (
    AsymptoticBranch,
    branch_1d,
    branch_1d_perturbed,
    branch_pt2,
    branch_radial,
    branch_strong_coupling,
    corner_window_expansion,
    first_correction,
    model_nu_kappa,
)
from .eig import EigOptions, Spectrum, SpectrumEntry, solve_operator
from .expr import ParseError, PotentialExpr, parse
from .operator import OperatorSpec, RadialData, truncation_family
from .verify import check_gradient_condition, check_U_conditions, match_and_fit, pt_symmetry_defect

__all__ = ["entry", "ConfigError", "RunConfig", "load_config"]


class ConfigError(Exception):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    potential_text: str
    variable: str
    parameters: dict
    rule: str
    endpoints: tuple[float, float] | None
    bc: tuple[str, str]
    radial: RadialData | None
    left_pad: float
    sweep_parameter: str
    schedule: tuple[float, ...]
    ppw: float | None
    two_grid_tol: float | None
    dense_cap: int | None
    n_override: int | None
    target_modulus: float | None
    window_centers: tuple[complex, ...] | None
    window_radius: float | None
    locate_window_factor: float
    asym: dict
    window_factor: float
    out_dir: str
    formats: tuple[str, ...]
    check: dict


def _req(section: dict, name: str, key: str):
    if key not in section:
        raise ConfigError(f"[{name}] is missing required key {key!r}")
    return section[key]


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path!r} not found")
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"config file {path!r} is not valid TOML: {e}")

    pot = raw.get("potential", {})
    text = _req(pot, "potential", "expression")
    variable = pot.get("variable", "x")
    try:
        parse(text, variable)
    except ParseError as e:
        raise ConfigError(f"[potential] expression does not parse: {e}")
    parameters = dict(pot.get("parameters", {}))

    dom = raw.get("domain", {})
    rule = dom.get("rule", "symmetric")
    if rule not in ("symmetric", "fixed_left", "left_padded", "fixed"):
        raise ConfigError(f"[domain] unknown truncation rule {rule!r}")
    endpoints = dom.get("endpoints")
    if endpoints is not None:
        if len(endpoints) != 2 or not endpoints[0] < endpoints[1]:
            raise ConfigError("[domain] endpoints must be [a, b] with a < b")
        endpoints = (float(endpoints[0]), float(endpoints[1]))
    elif rule in ("fixed", "fixed_left"):
        raise ConfigError(f"[domain] rule {rule!r} needs endpoints")
    bc = dom.get("bc", ["dirichlet", "dirichlet"])
    if len(bc) != 2 or any(b not in ("dirichlet", "neumann") for b in bc):
        raise ConfigError("[domain] bc must be two of dirichlet|neumann")
    radial = None
    if "radial" in dom:
        r = dom["radial"]
        try:
            radial = RadialData(d=int(_req(r, "domain.radial", "d")), l=int(_req(r, "domain.radial", "l")), inner=float(r.get("inner", 1.0)))
        except ValueError as e:
            raise ConfigError(f"[domain.radial] {e}")

    sw = raw.get("sweep", {})
    sweep_parameter = sw.get("parameter", "s")
    if "values" in sw:
        schedule = tuple(float(v) for v in sw["values"])
    elif {"start", "stop", "step"} <= sw.keys():
        start, stop, step = float(sw["start"]), float(sw["stop"]), float(sw["step"])
        if step <= 0:
            raise ConfigError("[sweep] step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        schedule = tuple(start + i * step for i in range(count))
    else:
        schedule = ()
    if schedule and any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ConfigError("[sweep] schedule must be strictly increasing")

    sol = raw.get("solver", {})
    centers = sol.get("window_centers")
    if centers is not None:
        try:
            centers = tuple(complex(c[0], c[1]) for c in centers)
        except (TypeError, IndexError):
            raise ConfigError("[solver] window_centers must be a list of [re, im] pairs")

    out = raw.get("output", {})
    formats = tuple(out.get("formats", ["csv", "json"]))
    if any(f not in ("csv", "json") for f in formats):
        raise ConfigError("[output] formats must be csv and/or json")

    asym = dict(raw.get("asymptotics", {}))
    return RunConfig(
        potential_text=text,
        variable=variable,
        parameters=parameters,
        rule=rule,
        endpoints=endpoints,
        bc=(bc[0], bc[1]),
        radial=radial,
        left_pad=float(dom.get("left_pad", 40.0)),
        sweep_parameter=sweep_parameter,
        schedule=schedule,
        ppw=float(sol["ppw"]) if "ppw" in sol else None,
        two_grid_tol=float(sol["two_grid_tol"]) if "two_grid_tol" in sol else None,
        dense_cap=int(sol["dense_cap"]) if "dense_cap" in sol else None,
        n_override=int(sol["n"]) if "n" in sol else None,
        target_modulus=float(sol["target_modulus"]) if "target_modulus" in sol else None,
        window_centers=centers,
        window_radius=float(sol["window_radius"]) if "window_radius" in sol else None,
        locate_window_factor=float(sol.get("locate_window_factor", 0.75)),
        asym=asym,
        window_factor=float(asym.get("window_factor", 0.5)),
        out_dir=out.get("directory", "."),
        formats=formats,
        check=dict(raw.get("check", {})),
    )


# ---------------------------------------------------------------------------
# branch construction
# ---------------------------------------------------------------------------

def _parse_asym_expr(cfg: RunConfig, key_text: str, variable: str) -> PotentialExpr:
    try:
        return parse(key_text, variable)
    except ParseError as e:
        raise ConfigError(f"[asymptotics] expression {key_text!r} does not parse: {e}")


def build_branches(cfg: RunConfig) -> list[AsymptoticBranch]:
    a = cfg.asym
    if not a:
        return []
    family = a.get("family")
    ks = [int(k) for k in a.get("k", [1])]
    branches: list[AsymptoticBranch] = []

    if family in ("1d", "1d_perturbed"):
        U = _parse_asym_expr(cfg, _req(a, "asymptotics", "U"), cfg.variable)
        orientations = a.get("orientations", ["left", "right"])
        bc = a.get("bc", "dirichlet")
        U1 = None
        if family == "1d_perturbed":
            U1 = _parse_asym_expr(cfg, _req(a, "asymptotics", "U1"), cfg.variable)
        for k in ks:
            for o in orientations:
                if U1 is None:
                    br = branch_1d(U, k, bc, o, params=cfg.parameters)
                else:
                    br = branch_1d_perturbed(U, U1, k, bc, o, params=cfg.parameters)
                branches.append(br)
        if a.get("first_correction", False):
            window = corner_window_expansion(U, param_name="_cw")
            cache: dict[tuple[int, float], complex] = {}

            def corr_for(k: int, conjugated: bool):
                def fn(s: float) -> complex:
                    key = (k, float(s))
                    if key not in cache:
                        cache[key] = first_correction(k, window, params={**cfg.parameters, "_cw": float(s)})
                    c = cache[key]
                    return c.conjugate() if conjugated else c

                return fn

            branches = [br.with_correction(corr_for(br.k, br.conjugated)) for br in branches]
        return branches

    if family == "radial":
        if cfg.radial is None:
            raise ConfigError("[asymptotics] radial family needs [domain.radial]")
        U = _parse_asym_expr(cfg, _req(a, "asymptotics", "U"), cfg.variable)
        return [branch_radial(U, cfg.radial.d, cfg.radial.l, k, params=cfg.parameters) for k in ks]

    if family == "strong_coupling":
        kappa = float(_req(a, "asymptotics", "kappa"))
        conjugated = bool(a.get("conjugated", False))
        shift_expr = None
        if "shift" in a:
            shift_expr = _parse_asym_expr(cfg, a["shift"], cfg.sweep_parameter)
        h0 = a.get("h0_beta_order")
        rem = a.get("remainder_override")
        signed = bool(a.get("signed", False))
        for k in ks:
            if "nu" in a:
                nu = complex(a["nu"][0], a["nu"][1])
            else:
                nu = model_nu_kappa(kappa, k, signed=signed)
            shift_rule = None
            if shift_expr is not None:
                shift_rule = lambda g, e=shift_expr: e(float(g))
            branches.append(
                branch_strong_coupling(
                    kappa,
                    nu,
                    shift_rule,
                    k=k,
                    conjugated=conjugated,
                    h0_beta_order=None if h0 is None else float(h0),
                    remainder_override=None if rem is None else float(rem),
                )
            )
        return branches

    if family == "pt2":
        M = int(_req(a, "asymptotics", "M"))
        which = a.get("which", ["x3"])
        for k in ks:
            for w in which:
                branches.append(branch_pt2(M, w, k))
        return branches

    raise ConfigError(f"[asymptotics] unknown branch family {family!r}")


# ---------------------------------------------------------------------------
# solving
# ---------------------------------------------------------------------------

def _make_opts(cfg: RunConfig, ppw_flag: float | None) -> EigOptions:
    kw = {}
    if cfg.two_grid_tol is not None:
        kw["two_grid_tol"] = cfg.two_grid_tol
    if cfg.dense_cap is not None:
        kw["dense_cap"] = cfg.dense_cap
    if ppw_flag is not None:
        kw["ppw"] = float(ppw_flag)
    elif cfg.ppw is not None:
        kw["ppw"] = cfg.ppw
    return EigOptions(**kw)


def _specs_for_schedule(cfg: RunConfig) -> list[OperatorSpec]:
    potential = parse(cfg.potential_text, cfg.variable)
    template = OperatorSpec(
        potential=potential,
        interval=cfg.endpoints if cfg.endpoints is not None else (-1.0, 1.0),
        bc_left=cfg.bc[0],
        bc_right=cfg.bc[1],
        radial=cfg.radial,
        parameters=dict(cfg.parameters),
    )
    if not cfg.schedule:
        if cfg.endpoints is None:
            raise ConfigError("[domain] endpoints are required when there is no sweep")
        return [template]
    if cfg.rule == "fixed":
        out = []
        for s in cfg.schedule:
            params = dict(cfg.parameters)
            params[cfg.sweep_parameter] = s
            out.append(replace(template, parameters=params))
        return out
    return truncation_family(
        template, cfg.schedule, rule=cfg.rule, param_name=cfg.sweep_parameter, left_pad=cfg.left_pad
    )


def _cell_payload(cfg: RunConfig, spec: OperatorSpec, p: float, branches, opts: EigOptions) -> dict:
    if cfg.window_centers is not None:
        centers = list(cfg.window_centers)
        radius = cfg.window_radius
    elif branches and not math.isnan(p):
        centers = [br.leading(p) for br in branches]
        radius = cfg.window_radius
        if radius is None:
            radius = cfg.locate_window_factor * max(br.scale(p) for br in branches)
    else:
        centers, radius = None, None
    return {
        "parameter": p,
        "potential": cfg.potential_text,
        "variable": cfg.variable,
        "parameters": dict(spec.parameters),
        "interval": list(spec.interval),
        "bc": [spec.bc_left, spec.bc_right],
        "radial": None if spec.radial is None else [spec.radial.d, spec.radial.l, spec.radial.inner],
        "centers": None if centers is None else [[c.real, c.imag] for c in centers],
        "radius": radius,
        "target_modulus": cfg.target_modulus,
        "n": cfg.n_override,
        "opts": {"ppw": opts.ppw, "two_grid_tol": opts.two_grid_tol, "dense_cap": opts.dense_cap,
                 "qr_tol": opts.qr_tol, "max_sweeps": opts.max_sweeps, "refine_iters": opts.refine_iters},
    }


def _solve_cell(payload: dict) -> dict:
    try:
        radial = payload["radial"]
        spec = OperatorSpec(
            potential=parse(payload["potential"], payload["variable"]),
            interval=tuple(payload["interval"]),
            bc_left=payload["bc"][0],
            bc_right=payload["bc"][1],
            radial=None if radial is None else RadialData(d=radial[0], l=radial[1], inner=radial[2]),
            parameters=payload["parameters"],
        )
        opts = EigOptions(**payload["opts"])
        centers = payload["centers"]
        spectrum = solve_operator(
            spec,
            target_modulus=payload["target_modulus"],
            window_centers=None if centers is None else [complex(c[0], c[1]) for c in centers],
            window_radius=payload["radius"],
            n=payload["n"],
            opts=opts,
        )
        entries = [
            {
                "re": e.lam.real,
                "im": e.lam.imag,
                "residual": e.residual,
                "trusted": e.trusted,
                "match_distance": e.match_distance,
                "re_fine": None if e.lam_fine is None else e.lam_fine.real,
                "im_fine": None if e.lam_fine is None else e.lam_fine.imag,
                "re_richardson": None if e.lam_re is None else e.lam_re.real,
                "im_richardson": None if e.lam_re is None else e.lam_re.imag,
            }
            for e in spectrum.entries
        ]
        return {"parameter": payload["parameter"], "entries": entries,
                "h": spectrum.h, "n": spectrum.n}
    except Exception as e:  # partial-failure policy: record, let the sweep go on
        return {"parameter": payload["parameter"], "error": f"{type(e).__name__}: {e}"}


def _spectrum_from_cell(cell: dict) -> Spectrum:
    entries = [
        SpectrumEntry(
            lam=complex(d["re"], d["im"]),
            vector=None,
            residual=d["residual"],
            trusted=d["trusted"],
            lam_fine=None if d["re_fine"] is None else complex(d["re_fine"], d["im_fine"]),
            lam_re=None if d["re_richardson"] is None else complex(d["re_richardson"], d["im_richardson"]),
            match_distance=d["match_distance"],
        )
        for d in cell["entries"]
    ]
    return Spectrum(entries, h=cell["h"], n=cell["n"])


def _run_cells(cfg: RunConfig, branches, opts: EigOptions, jobs: int) -> list[dict]:
    specs = _specs_for_schedule(cfg)
    params = list(cfg.schedule) if cfg.schedule else [math.nan]
    payloads = [
        _cell_payload(cfg, spec, p, branches, opts) for spec, p in zip(specs, params)
    ]
    if jobs <= 1 or len(payloads) == 1:
        return [_solve_cell(pl) for pl in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_solve_cell, payloads))  # map keeps schedule order


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _out_dir(args, cfg: RunConfig | None) -> str:
    d = os.environ.get("TRUNCSPEC_OUT") or args.out or (cfg.out_dir if cfg else ".")
    os.makedirs(d, exist_ok=True)
    return d


def _formats(args, cfg: RunConfig | None) -> tuple[str, ...]:
    if args.format:
        return (args.format,)
    return cfg.formats if cfg else ("csv", "json")


def _spectrum_rows(cell: dict) -> list[list]:
    return [
        [d["re"], d["im"], d["residual"], d["trusted"], d["match_distance"],
         d["re_richardson"], d["im_richardson"]]
        for d in cell["entries"]
    ]


_SPECTRUM_HEADER = ["re_lambda", "im_lambda", "residual", "trusted", "match_distance",
                    "re_richardson", "im_richardson"]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_airy_zeros(args) -> int:
    kmax = args.kmax
    if kmax < 1:
        raise ConfigError("--kmax must be at least 1")
    rows = [[k, ai_zero(k), ai_prime_zero(k)] for k in range(1, kmax + 1)]
    if args.format == "json":
        obj = [{"k": k, "mu": mu, "mu_prime": mp_} for k, mu, mp_ in rows]
        sys.stdout.write(json.dumps(obj, sort_keys=True, indent=1) + "\n")
    else:
        sys.stdout.write("k,mu,mu_prime\n")
        for k, mu, mp_ in rows:
            sys.stdout.write(f"{k},{mu:.15g},{mp_:.15g}\n")
    return 0


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    if len(cfg.schedule) > 1:
        raise ConfigError("solve expects a single parameter value; use sweep for schedules")
    branches = build_branches(cfg)
    opts = _make_opts(cfg, args.ppw)
    cells = _run_cells(cfg, branches, opts, jobs=1)
    cell = cells[0]
    if "error" in cell:
        raise RuntimeError(f"solve failed: {cell['error']}")
    out = _out_dir(args, cfg)
    fmts = _formats(args, cfg)
    if "csv" in fmts:
        _write_csv(os.path.join(out, "solve.csv"), _SPECTRUM_HEADER, _spectrum_rows(cell))
    if "json" in fmts:
        _write_json(os.path.join(out, "solve.json"), cell)
    n_tr = sum(1 for d in cell["entries"] if d["trusted"])
    sys.stdout.write(f"solved: {len(cell['entries'])} eigenvalues, {n_tr} trusted, "
                     f"grid n={cell['n']} h={cell['h']:.6g}\n")
    return 0


def _branch_tag(i: int, br: AsymptoticBranch) -> str:
    return f"branch{i}_k{br.k}_{br.provenance}"


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if not cfg.schedule:
        raise ConfigError("[sweep] needs values or start/stop/step")
    branches = build_branches(cfg)
    opts = _make_opts(cfg, args.ppw)
    cells = _run_cells(cfg, branches, opts, jobs=args.jobs)
    good = [(c["parameter"], _spectrum_from_cell(c)) for c in cells if "error" not in c]
    failures = [{"parameter": c["parameter"], "error": c["error"]} for c in cells if "error" in c]
    report = match_and_fit(good, branches, window_factor=cfg.window_factor)

    out = _out_dir(args, cfg)
    fmts = _formats(args, cfg)
    slope_by_branch = {f.branch_index: f.slope for f in report.fits}
    rows = [
        [m.parameter, m.branch_k, m.lam_computed.real, m.lam_computed.imag,
         m.lam_pred.real, m.lam_pred.imag, abs(m.rho), slope_by_branch.get(m.branch_index)]
        for m in report.matches
    ]
    if "csv" in fmts:
        _write_csv(
            os.path.join(out, "report.csv"),
            ["parameter", "branch_k", "re_lambda", "im_lambda", "re_pred", "im_pred", "abs_rho", "slope"],
            rows,
        )
    obj = {
        "window_factor": report.window_factor,
        "schedule": list(cfg.schedule),
        "failures": failures,
        "matches": [
            {
                "parameter": m.parameter,
                "branch_index": m.branch_index,
                "branch_k": m.branch_k,
                "re_lambda": m.lam_computed.real,
                "im_lambda": m.lam_computed.imag,
                "re_pred": m.lam_pred.real,
                "im_pred": m.lam_pred.imag,
                "re_rho": m.rho.real,
                "im_rho": m.rho.imag,
            }
            for m in report.matches
        ],
        "unmatched": [
            {"parameter": p, "re_lambda": z.real, "im_lambda": z.imag} for p, z in report.unmatched
        ],
        "fits": [
            {
                "branch_index": f.branch_index,
                "branch_k": f.branch_k,
                "slope": None if math.isnan(f.slope) else f.slope,
                "intercept": None if math.isnan(f.intercept) else f.intercept,
                "r_squared": None if math.isnan(f.r_squared) else f.r_squared,
                "n_points": f.n_points,
                "predicted_exponent": None if math.isnan(f.predicted_exponent) else f.predicted_exponent,
            }
            for f in report.fits
        ],
        "pt_defect": [
            {"parameter": p, "defect": pt_symmetry_defect(spec)} for p, spec in good
        ],
    }
    if "json" in fmts:
        _write_json(os.path.join(out, "report.json"), obj)

    if args.plot_data:
        names = []
        for i, br in enumerate(branches):
            tag = _branch_tag(i, br)
            comp = [[m.parameter, m.lam_computed.real, m.lam_computed.imag]
                    for m in report.matches if m.branch_index == i]
            _write_csv(os.path.join(out, f"{tag}_computed.csv"),
                       ["parameter", "re_lambda", "im_lambda"], comp)
            lo, hi = cfg.schedule[0], cfg.schedule[-1]
            dense = np.linspace(lo, hi, 200)
            pred = [[p, br.leading(p).real, br.leading(p).imag] for p in dense]
            _write_csv(os.path.join(out, f"{tag}_predicted.csv"),
                       ["parameter", "re_pred", "im_pred"], pred)
            names.append(tag)
        _write_gnuplot(os.path.join(out, "plot.gp"), names)

    for f in report.fits:
        sys.stdout.write(
            f"branch {f.branch_index} (k={f.branch_k}): slope {_fmt(f.slope)} "
            f"predicted {_fmt(f.predicted_exponent)} over {f.n_points} points\n"
        )
    sys.stdout.write(f"matched {len(report.matches)}, unmatched-in-window {len(report.unmatched)}, "
                     f"failures {len(failures)}\n")
    return 0


def _write_gnuplot(path: str, tags: list[str]) -> None:
    lines = [
        "set size ratio -1",
        "set xlabel 'Re'",
        "set ylabel 'Im'",
        "plot \\",
    ]
    parts = []
    for tag in tags:
        parts.append(f"  '{tag}_computed.csv' u 2:3 w p pt 7 title '{tag}'")
        parts.append(f"  '{tag}_predicted.csv' u 2:3 w l lt -1 notitle")
    lines.append(", \\\n".join(parts))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_predict(args) -> int:
    cfg = load_config(args.config)
    if not cfg.schedule:
        raise ConfigError("[sweep] needs values or start/stop/step")
    branches = build_branches(cfg)
    if not branches:
        raise ConfigError("[asymptotics] section is required for predict")
    out = _out_dir(args, cfg)
    for i, br in enumerate(branches):
        rows = [[p, br.leading(p).real, br.leading(p).imag] for p in cfg.schedule]
        _write_csv(os.path.join(out, f"{_branch_tag(i, br)}.csv"),
                   ["parameter", "re_pred", "im_pred"], rows)
    sys.stdout.write(f"wrote {len(branches)} branch prediction files to {out}\n")
    return 0


def cmd_check(args) -> int:
    cfg = load_config(args.config)
    ck = cfg.check
    Q = parse(cfg.potential_text, cfg.variable)
    window = tuple(float(v) for v in ck.get("window", cfg.endpoints or (1.0, 30.0)))
    eps, M = check_gradient_condition(Q, window, params=cfg.parameters)
    obj = {
        "eps_nabla": eps,
        "M_nabla": M,
        "eps_below_critical": bool(eps < 2.0 - math.sqrt(2.0)),
        "window": list(window),
    }
    if "U" in ck:
        U = parse(ck["U"], cfg.variable)
        nu = float(ck.get("nu", -1.0))
        rep = check_U_conditions(U, nu, window, params=cfg.parameters)
        # empirical Upsilon decay rate from a log-log fit over the window tail
        from .expr import constant_fold, differentiate, evaluate

        dU = constant_fold(differentiate(U.root, U.variable))
        xs = np.linspace(0.5 * (window[0] + window[1]), window[1], 64)
        ups = []
        for x in xs:
            du = evaluate(dU, {**cfg.parameters, U.variable: float(x)})
            ups.append(float(x) ** nu / abs(du) ** (1.0 / 3.0))
        slope = np.polyfit(np.log(xs), np.log(ups), 1)[0]
        obj["U_report"] = {
            "eps_nabla_est": rep.eps_nabla_est,
            "M_nabla_est": rep.M_nabla_est,
            "nu_exponent": rep.nu_exponent,
            "upsilon_sup_tail": rep.upsilon_sup_tail,
            "upsilon_decay_exponent": float(slope),
            "monotone": rep.monotone,
            "du_control": rep.du_control,
            "du_constant": rep.du_constant,
            "d2u_control": rep.d2u_control,
            "d2u_constant": rep.d2u_constant,
            "left_dominance": rep.left_dominance,
            "delta0": None if math.isnan(rep.delta0) else rep.delta0,
            "fragile": rep.fragile,
        }
    out = _out_dir(args, cfg)
    if "json" in _formats(args, cfg):
        _write_json(os.path.join(out, "check.json"), obj)
    sys.stdout.write(json.dumps(obj, sort_keys=True, indent=1) + "\n")
    return 0


def cmd_fit(args) -> int:
    try:
        with open(args.report, "rb") as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"report file {args.report!r} not found")
    except json.JSONDecodeError as e:
        raise ConfigError(f"report file is not valid JSON: {e}")
    if "matches" not in obj:
        raise ConfigError("report file has no matches to fit")
    by_branch: dict[int, list[tuple[float, float]]] = {}
    ks: dict[int, int] = {}
    for m in obj["matches"]:
        rho = math.hypot(m["re_rho"], m["im_rho"])
        by_branch.setdefault(m["branch_index"], []).append((m["parameter"], rho))
        ks[m["branch_index"]] = m["branch_k"]
    params = sorted({m["parameter"] for m in obj["matches"]})
    cutoff = params[len(params) // 2] if params else 0.0
    rows = []
    for i in sorted(by_branch):
        pts = [(p, r) for p, r in by_branch[i] if p >= cutoff and r > 0]
        if len(pts) >= 2:
            lx = np.log([p for p, _ in pts])
            ly = np.log([r for _, r in pts])
            slope, intercept = np.polyfit(lx, ly, 1)
            pred = ly - (slope * lx + intercept)
            sst = float(np.sum((ly - ly.mean()) ** 2))
            r2 = 1.0 - float(np.sum(pred**2)) / sst if sst > 0 else 1.0
            rows.append([i, ks[i], float(slope), float(intercept), r2, len(pts)])
        else:
            rows.append([i, ks[i], math.nan, math.nan, math.nan, len(pts)])
    header = ["branch_index", "branch_k", "slope", "intercept", "r_squared", "n_points"]
    sys.stdout.write(",".join(header) + "\n")
    for row in rows:
        sys.stdout.write(",".join(_fmt(v) for v in row) + "\n")
    if args.out:
        out = _out_dir(args, None)
        _write_csv(os.path.join(out, "fit.csv"), header, rows)
    return 0


# ---------------------------------------------------------------------------
# entry
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="truncspec",
                                 description="truncated-spectra solver and branch verifier")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--out", default=None, help="output directory (env TRUNCSPEC_OUT overrides)")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="worker processes for sweep cells")
        p.add_argument("--ppw", type=float, default=None, help="override solver points-per-wavelength")
        p.add_argument("--format", choices=["csv", "json"], default=None,
                       help="restrict report format (default: config choice)")
        p.add_argument("--plot-data", action="store_true", help="emit per-branch plot CSVs")

    pz = sub.add_parser("airy-zeros", help="print the Airy zero tables")
    pz.add_argument("--kmax", type=int, default=10)
    pz.add_argument("--format", choices=["csv", "json"], default="csv")
    pz.set_defaults(func=cmd_airy_zeros)

    ps = sub.add_parser("solve", help="solve one truncated operator")
    common(ps)
    ps.set_defaults(func=cmd_solve)

    pw = sub.add_parser("sweep", help="run a truncation/coupling sweep and match branches")
    common(pw)
    pw.set_defaults(func=cmd_sweep)

    pp = sub.add_parser("predict", help="emit branch prediction curves")
    common(pp)
    pp.set_defaults(func=cmd_predict)

    pc = sub.add_parser("check", help="run assumption checkers on the configured potential")
    common(pc)
    pc.set_defaults(func=cmd_check)

    pf = sub.add_parser("fit", help="refit remainder slopes from a sweep report")
    pf.add_argument("report", help="path to report.json from a sweep")
    pf.add_argument("--out", default=None)
    pf.set_defaults(func=cmd_fit)
    return ap


def entry(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except ConfigError as e:
        sys.stderr.write(f"config error: {e}\n")
        return 2
    except ParseError as e:
        sys.stderr.write(f"expression error: {e}\n")
        return 2
    except Exception as e:
        sys.stderr.write(f"numerical failure: {type(e).__name__}: {e}\n")
        return 3


if __name__ == "__main__":
    sys.exit(entry())
