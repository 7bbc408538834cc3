"""Command line front end: one subcommand per data product.

Every command writes a single :class:`~cavitykc.tables.ResultTable` as CSV or
JSON.  Model parameters come from a flat JSON config (``--config``) whose
keys are the ``ModelParams`` field names; flags override file values.
Exit codes: 2 configuration, 3 non-convergence, 4 domain errors.  Errors are
reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError, ConvergenceError, DomainError
from .models import PARITY_SIGN, ModelParams, build_h1, build_h2, calibrate_parity_sign
from .spectra import cutoff_check, merge_cutoff_checks
from .tables import ResultTable

# flag name -> ModelParams field
PARAM_FLAGS = {
    "delta": "delta",
    "omega": "omega",
    "lambda1": "lambda1",
    "phi1": "phi1",
    "lambda2": "lambda2",
    "phi2": "phi2",
    "mu": "mu",
    "nmax": "n_max",
    "chain-n": "chain_length",
    "cavity-site": "cavity_site",
}
INT_FIELDS = {"n_max", "chain_length", "cavity_site"}
PARAM_FIELDS = {f.name for f in dataclasses.fields(ModelParams)}

CONVENTIONS = {
    "subsystem_order": "matter factors first, photon last",
    "sigma_z": "diag(-1, 1); index 0 is the '-' label",
    "parity_sign_s_P": PARITY_SIGN,
    "parity_definition": "P = s_P (2 n_LR - 1) for the outer Majorana pair",
    "wigner": "W(beta) = (2/pi) Tr[rho D(2 beta) (-1)^n], integral over d^2 beta = 1",
    "berry": "phi_B = i oint <GS|d_phi GS> dphi, wrapped to (-pi, pi]",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def parse_grid(text: str) -> np.ndarray:
    """``"a:b:n"`` (inclusive linspace) or a comma-separated list."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            g = np.linspace(float(a), float(b), int(n))
        else:
            g = np.array([float(x) for x in text.split(",") if x.strip()])
    except ValueError as exc:
        raise ConfigError(f"cannot parse grid {text!r}") from exc
    if g.size == 0:
        raise ConfigError("grid is empty")
    if not np.all(np.isfinite(g)):
        raise ConfigError("grid values must be finite")
    return g


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a flat JSON object")
    return doc


def resolve_params(args: argparse.Namespace, file_cfg: dict) -> ModelParams:
    vals = {}
    for k, v in file_cfg.items():
        if k in PARAM_FIELDS:
            vals[k] = v
    for flag, name in PARAM_FLAGS.items():
        v = getattr(args, flag.replace("-", "_"))
        if v is not None:
            vals[name] = v
    for name in list(vals):
        v = vals[name]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{name} must be a number")
        if name in INT_FIELDS:
            if float(v) != int(v):
                raise ConfigError(f"{name} must be an integer")
            vals[name] = int(v)
        else:
            vals[name] = float(v)
    return ModelParams(**vals)


def _option(args, cfg: dict, name: str, default, kind: Callable = float):
    """Command option from flag, then config file, then default."""
    v = getattr(args, name, None)
    if v is None:
        v = cfg.get(name, default)
    if kind is np.ndarray:
        if isinstance(v, str):
            return parse_grid(v)
        g = np.asarray(v, dtype=float).ravel()
        if g.size == 0 or not np.all(np.isfinite(g)):
            raise ConfigError(f"{name} must be a non-empty finite grid")
        return g
    try:
        out = kind(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {name}: {v!r}") from exc
    if isinstance(out, float) and not math.isfinite(out):
        raise ConfigError(f"{name} must be finite")
    return out


def _cutoff(builder, points: Sequence[ModelParams]) -> dict:
    return merge_cutoff_checks(cutoff_check(builder, q) for q in points)


# ------------------------------------------------------------------ commands


def cmd_spectrum(p, args, cfg):
    from .spectra import spectrum_table

    n_upto = _option(args, cfg, "n_upto", 2, int)
    t = spectrum_table(p, n_upto)
    t.meta["cutoff"] = _cutoff(build_h1, [p])
    return t


def cmd_phase_diagram(p, args, cfg):
    from .spectra import phase_diagram_sweep

    grid = _option(args, cfg, "lambda2_grid", "-8:8:33", np.ndarray)
    return phase_diagram_sweep(p, grid, check_cutoff=True)


def cmd_fusion_static(p, args, cfg):
    from .dynamics import fusion_static_map

    wg = _option(args, cfg, "omega_grid", "0.5:4:8", np.ndarray)
    lg = _option(args, cfg, "lambda_grid", "0:6:13", np.ndarray)
    t = fusion_static_map(p, wg, lg)
    corners = [p.replace(omega=float(w), lambda1=float(lam)) for w in (wg.min(), wg.max()) for lam in (lg.min(), lg.max())]
    t.meta["cutoff"] = _cutoff(build_h1, corners)
    return t


def cmd_fusion_ramp(p, args, cfg):
    from .dynamics import RampSchedule, fusion_ramp, static_correlator

    lam = _option(args, cfg, "lambda_max", 4.0)
    t_a = _option(args, cfg, "t_a", 200.0 / (2 * p.delta))
    samples = _option(args, cfg, "samples", 512, int)
    r = fusion_ramp(p, RampSchedule(lam, t_a), n_samples=samples)
    t = r.table()
    q = p.replace(lambda1=lam)
    t.meta.update(lambda_max=lam, t_a=t_a, P_static=static_correlator(q), cutoff=_cutoff(build_h1, [q]))
    return t


def cmd_berry(p, args, cfg):
    from .berry import berry_analytic, berry_analytic_printed, wilson_2x2, wilson_full

    method = _option(args, cfg, "method", "all", str)
    m = _option(args, cfg, "m_points", 256, int)
    grid = _option(args, cfg, "lambda2_grid", str(p.lambda2), np.ndarray)
    funcs = {
        "analytic": berry_analytic,
        "printed": berry_analytic_printed,
        "wilson2x2": lambda q: wilson_2x2(q, m),
        "wilson_full": lambda q: wilson_full(q, m),
    }
    if method == "all":
        names = ["analytic", "wilson2x2", "wilson_full"]
    elif method in funcs:
        names = [method]
    else:
        raise ConfigError(f"unknown Berry method {method!r}")
    rows, conv = [], {}
    for l2 in grid:
        q = p.replace(lambda2=float(l2))
        row = [float(l2)]
        for name in names:
            r = funcs[name](q)
            row.append(r.phase)
            conv[f"{name}@{l2:.6g}"] = {"converged": r.converged, "samples": r.samples}
        rows.append(row)
    t = ResultTable(["lambda2"] + names, rows, {"loop_convergence": conv})
    t.meta["cutoff"] = _cutoff(build_h2, [p.replace(lambda2=float(grid.max()))])
    return t


def cmd_braid_curve(p, args, cfg):
    from .berry import braid_curve

    grid = _option(args, cfg, "lambda1_grid", "3:6:13", np.ndarray)
    t = braid_curve(p, grid)
    t.meta["cutoff"] = _cutoff(build_h2, [p.replace(lambda1=float(grid.max()), lambda2=1.0)])
    return t


def cmd_parity_landscape(p, args, cfg):
    from .berry import parity_landscape

    lg = _option(args, cfg, "lambda2_grid", "0:4:9", np.ndarray)
    pg = _option(args, cfg, "phi2_grid", f"0:{2 * math.pi}:17", np.ndarray)
    ring = not getattr(args, "no_ring", False)
    t = parity_landscape(p, lg, pg, ring=ring)
    t.meta["parity_sign_calibrated"] = calibrate_parity_sign(p.lambda1, p.omega, p.delta, p.n_max)
    t.meta["cutoff"] = _cutoff(build_h2, [p.replace(lambda2=float(lg.max()))])
    return t


def cmd_cat_wigner(p, args, cfg):
    from .photonics import cat_analysis, wigner

    extent = _option(args, cfg, "extent", 4.0)
    points = _option(args, cfg, "points", 161, int)
    if points < 2 or extent <= 0:
        raise ConfigError("need extent > 0 and at least two points")
    ax = np.linspace(-extent, extent, points)
    ca = cat_analysis(p)
    states = {"full": ca.rho, "plus": ca.conditioned["+"], "minus": ca.conditioned["-"]}
    grids = {k: wigner(s, ax, ax) for k, s in states.items()}
    xx, pp = np.meshgrid(ax, ax)
    cols = [xx.ravel(), pp.ravel()]
    names = ["x", "p"]
    for k, g in grids.items():
        cols += [g.values.ravel(), g.leakage.ravel()]
        names += [f"W_{k}", f"leak_{k}"]
    w00 = {k: float(wigner(s, [0.0, 1.0], [0.0, 1.0]).values[0, 0]) for k, s in states.items()}
    meta = {
        "alpha": ca.alpha,
        "W00": w00,
        "W_min": {k: float(g.values.min()) for k, g in grids.items()},
        "integral": {k: g.integral() for k, g in grids.items()},
        "probability": {"plus": ca.probabilities["+"], "minus": ca.probabilities["-"]},
        "cat_fidelity": {"plus": ca.fidelities["+"], "minus": ca.fidelities["-"]},
        "photon_parity": {"plus": ca.parities["+"], "minus": ca.parities["-"]},
        "purity": ca.purity,
        "two_branch_norm": ca.two_branch_norm,
        "cutoff": _cutoff(build_h2, [p]),
    }
    return ResultTable(names, np.column_stack(cols), meta)


def cmd_gs_indicators(p, args, cfg):
    from .spectra import ground_state_indicators

    grid = _option(args, cfg, "lambda2_grid", "-6:6:25", np.ndarray)
    t = ground_state_indicators(p, grid)
    t.meta["cutoff"] = _cutoff(build_h2, [p.replace(lambda2=float(x)) for x in (grid.min(), grid.max())])
    return t


def cmd_oracle_check(p, args, cfg):
    from .oracle import ChainSpec, edge_mode_splitting, reduction_check

    ncav = _option(args, cfg, "cavity_sites", 1, int)
    if ncav not in (1, 2):
        raise ConfigError("cavity_sites must be 1 or 2")
    p.check_oracle(ncav)
    spec = ChainSpec.from_params(p, ncav)
    s = p.cavity_site
    couplings = [(s, p.lambda1, p.phi1)] + ([(s + 1, p.lambda2, p.phi2)] if ncav == 2 else [])
    rep = reduction_check(spec, couplings)
    full_near = [float(rep.full_levels[np.argmin(np.abs(rep.full_levels - e))]) for e in rep.reduced_levels]
    rows = [[k, e, f, abs(e - f)] for k, (e, f) in enumerate(zip(rep.reduced_levels, full_near))]
    builder = build_h1 if ncav == 1 else build_h2
    meta = {
        "block_error": rep.block_error,
        "leakage": rep.leakage,
        "spectator_shift": rep.shift,
        "max_level_error": rep.max_level_error,
        "edge_mode_splitting": edge_mode_splitting(spec),
        "cavity_sites": list(spec.cavity_sites),
        "cutoff": _cutoff(builder, [p]),
    }
    return ResultTable(["level", "E_reduced", "E_full", "abs_err"], rows, meta)


COMMANDS = {
    "spectrum": (cmd_spectrum, "1CK levels against the displaced-oscillator formula"),
    "phase-diagram": (cmd_phase_diagram, "2CK ground-state photon observables versus lambda2"),
    "fusion-static": (cmd_fusion_static, "static fusion correlator over omega and lambda"),
    "fusion-ramp": (cmd_fusion_ramp, "fusion correlator along a linear coupling ramp"),
    "berry": (cmd_berry, "Berry phase of the phi2 loop"),
    "braid-curve": (cmd_braid_curve, "lambda2* with a pi/4 Berry phase versus lambda1"),
    "parity-landscape": (cmd_parity_landscape, "ground-state parity over lambda2 e^{i phi2}"),
    "cat-wigner": (cmd_cat_wigner, "Wigner functions of the conditioned cat states"),
    "gs-indicators": (cmd_gs_indicators, "2CK ground-state energies and fidelities"),
    "oracle-check": (cmd_oracle_check, "full-chain versus reduced-model equivalence"),
}

# per-command options: (flag, dest, type, help)
COMMAND_OPTIONS = {
    "spectrum": [("--n-upto", "n_upto", int, "highest oscillator index")],
    "phase-diagram": [("--lambda2-grid", "lambda2_grid", str, "a:b:n or comma list")],
    "fusion-static": [
        ("--omega-grid", "omega_grid", str, "a:b:n or comma list"),
        ("--lambda-grid", "lambda_grid", str, "a:b:n or comma list"),
    ],
    "fusion-ramp": [
        ("--lambda-max", "lambda_max", float, "final coupling"),
        ("--t-a", "t_a", float, "annealing time"),
        ("--samples", "samples", int, "output samples"),
    ],
    "berry": [
        ("--method", "method", str, "analytic, printed, wilson2x2, wilson_full or all"),
        ("--m-points", "m_points", int, "loop points"),
        ("--lambda2-grid", "lambda2_grid", str, "a:b:n or comma list (default: --lambda2)"),
    ],
    "braid-curve": [("--lambda1-grid", "lambda1_grid", str, "a:b:n or comma list")],
    "parity-landscape": [
        ("--lambda2-grid", "lambda2_grid", str, "a:b:n or comma list"),
        ("--phi2-grid", "phi2_grid", str, "a:b:n or comma list"),
    ],
    "cat-wigner": [
        ("--extent", "extent", float, "half width of the square grid"),
        ("--points", "points", int, "points per axis"),
    ],
    "gs-indicators": [("--lambda2-grid", "lambda2_grid", str, "a:b:n or comma list")],
    "oracle-check": [("--cavity-sites", "cavity_sites", int, "1 (1CK) or 2 (2CK)")],
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat JSON file with ModelParams fields and command options")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=["csv", "json"], default=None)
    common.add_argument("--seed", type=int, default=None, help="reserved; recorded in the metadata")
    for flag in PARAM_FLAGS:
        kind = int if PARAM_FLAGS[flag] in INT_FIELDS else float
        common.add_argument(f"--{flag}", type=kind, default=None)
    parser = _Parser(prog="cavitykc", description="Cavity-coupled Kitaev chain calculations.")
    parser.add_argument("--version", action="version", version=f"cavitykc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, helptext) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=helptext, description=helptext)
        for flag, dest, kind, h in COMMAND_OPTIONS.get(name, []):
            sp.add_argument(flag, dest=dest, type=kind, default=None, help=h)
        if name == "parity-landscape":
            sp.add_argument("--no-ring", action="store_true", help="omit the lambda2* ring")
    return parser


def _join_grid_values(argv: list[str]) -> list[str]:
    """Let grid flags take values starting with '-' (e.g. ``-6:6:25``)."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok.endswith("-grid") and tok.startswith("--") and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def run(argv: Sequence[str] | None = None) -> ResultTable:
    """Parse arguments, run the command and write its table."""
    argv = _join_grid_values(list(sys.argv[1:] if argv is None else argv))
    args = build_parser().parse_args(argv)
    cfg = load_config(args.config)
    p = resolve_params(args, cfg)
    func = COMMANDS[args.command][0]
    table = func(p, args, cfg)
    cutoff = table.meta.get("cutoff")
    if cutoff is not None and cutoff.get("max_shift", cutoff.get("shift", 0.0)) > 1e-8:
        cutoff["converged"] = False
    table.meta.update(
        command=args.command,
        params=dataclasses.asdict(p),
        conventions=CONVENTIONS,
        version=__version__,
        seed=args.seed if args.seed is not None else cfg.get("seed"),
    )
    fmt = args.format or cfg.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown format {fmt!r}")
    text = table.to_csv() if fmt == "csv" else table.to_json() + "\n"
    out = args.out or cfg.get("out")
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return table


def _fail(exc: Exception, code: int) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    try:
        run(argv)
    except DomainError as exc:
        return _fail(exc, 4)
    except ConvergenceError as exc:
        return _fail(exc, 3)
    except (ConfigError, ValueError, TypeError) as exc:
        return _fail(exc, 2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
