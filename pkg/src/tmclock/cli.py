"""Command-line entry point: ``tmclock <command> [options]``.

Every output starts with a header that records the tool version, the full
resolved configuration, its SHA-256 and the digest of the catalog in use, so a
file can be regenerated from its own header. Files are written atomically.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from . import budget as bud
from . import catalog as cat
from . import fitting, magic, spin
from . import polarizability as pol
from .constants import kw_per_cm2, wavelength_nm_to_omega
from .errors import CatalogError, FitError, NoCrossingError, NoSignChangeError, ResonanceError

MODULE_ERRORS = (CatalogError, FitError, NoCrossingError, NoSignChangeError, ResonanceError, ValueError, KeyError, OSError)


class CLIError(Exception):
    pass


# ---------------------------------------------------------------- output helpers


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return "nan" if math.isnan(x) else repr(float(x))
    return str(x)


def config_record(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config", "out")}


def config_hash(record):
    return hashlib.sha256(json.dumps(record, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _meta(args, catalog=None):
    record = config_record(args)
    meta = {"tool": f"tmclock {__version__}", "config": record, "config_sha256": config_hash(record)}
    if catalog is not None:
        meta["catalog_sha256"] = catalog.digest()
        meta["catalog_policy"] = catalog.policy
    return meta


def _csv(meta, columns, rows, extra=()):
    out = [f"# {meta['tool']}"]
    out.extend(f"# {x}" for x in extra)
    out.append("# config: " + json.dumps(meta["config"], sort_keys=True))
    out.append(f"# config_sha256: {meta['config_sha256']}")
    if "catalog_sha256" in meta:
        out.append(f"# catalog_sha256: {meta['catalog_sha256']} ({meta['catalog_policy']})")
    out.append(",".join(columns))
    out.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(out) + "\n"


def _json(meta, payload):
    return json.dumps({"meta": meta, "result": payload}, indent=2, sort_keys=True, default=float) + "\n"


def write_atomic(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, text):
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- catalog access


def _load_catalog(args):
    if not (args.levels or args.calculated or args.experimental):
        return cat.bundled_catalog(args.policy)
    if not (args.levels and args.calculated):
        raise CLIError("custom catalogs need at least --levels and --calculated")
    levels = cat.parse_levels(Path(args.levels).read_text(encoding="utf-8"))
    calc = cat.parse_lines(Path(args.calculated).read_text(encoding="utf-8"), levels)
    exp = ()
    if args.experimental:
        exp = cat.parse_lines(Path(args.experimental).read_text(encoding="utf-8"), levels)
    return cat.merge_catalog(levels, calc, exp, args.policy)


def _cross_sections(args):
    return cat.bundled_cross_sections() if args.continuum else None


# ---------------------------------------------------------------- commands


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise CLIError("missing required option(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def cmd_catalog_validate(args):
    _need(args, "levels", "lines")
    levels = cat.parse_levels(Path(args.levels).read_text(encoding="utf-8"))
    lines = cat.parse_lines(Path(args.lines).read_text(encoding="utf-8"), levels, args.tolerance)
    catalog = cat.LineCatalog(levels, lines, tolerance=args.tolerance)
    payload = {"levels": len(levels), "lines": len(lines), "valid": True}
    _emit(args, _json(_meta(args, catalog), payload))


def cmd_catalog_merge(args):
    catalog = _load_catalog(args)
    meta = _meta(args, catalog)
    for w in catalog.warnings:
        print(f"warning: {w}", file=sys.stderr)
    header = [f"# {meta['tool']}", f"# config_sha256: {meta['config_sha256']}", f"# catalog_sha256: {meta['catalog_sha256']}"]
    header += [f"# warning: {w}" for w in catalog.warnings]
    _emit(args, "\n".join(header) + "\n" + cat.format_lines(catalog.lines))


def _floats(text):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _pair(text):
    parts = str(text).replace(",", ":").split(":")
    try:
        lo, hi = (float(x) for x in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    return [lo, hi]


def _grid(start, stop, step):
    if step <= 0 or stop < start:
        raise CLIError("grid needs --from <= --to and a positive --step")
    n = int(round((stop - start) / step))
    return start + step * np.arange(n + 1)


def cmd_polarizability_scan(args):
    catalog = _load_catalog(args)
    xs = _cross_sections(args)
    lam = _grid(args.start, args.stop, args.step)
    levels = [cat.LOWER_CLOCK_ID, cat.UPPER_CLOCK_ID] if args.level == "both" else [args.level]
    states = {cat.LOWER_CLOCK_ID: magic.LOWER_STATE, cat.UPPER_CLOCK_ID: magic.UPPER_STATE}
    columns = ["lambda_nm"]
    for lv in levels:
        columns += [f"{lv}_alpha_s_au", f"{lv}_alpha_t_au", f"{lv}_alpha_cont_au", f"{lv}_alpha_F{states[lv].F}m0_au"]
    rows = []
    for x in lam:
        row = [float(x)]
        omega = wavelength_nm_to_omega(x)
        for lv in levels:
            try:
                s = pol.sample(catalog, lv, omega, None if xs is None else xs[lv])
                row += [s.alpha_s, s.alpha_t, s.alpha_cont, s.total_for(states[lv].m, states[lv].F)]
            except ResonanceError:
                row += [math.nan] * 4
        rows.append(row)
    _emit(args, _csv(_meta(args, catalog), columns, rows))


def cmd_magic_find(args):
    catalog = _load_catalog(args)
    intensity = kw_per_cm2(args.intensity_kw_cm2)
    results = []
    for offset in args.offset:
        r = magic.find_magic(catalog, tuple(args.bracket), args.tolerance, offset)
        rec = r.as_record()
        omega = wavelength_nm_to_omega(r.lambda_magic)
        rec["trap_depth_uK"] = float(pol.trap_depth(r.alpha_lower, intensity) * 1e6)
        rec["scattering_lower_per_s"] = float(pol.scattering_rate_00(catalog, cat.LOWER_CLOCK_ID, 4, intensity, omega))
        rec["scattering_upper_per_s"] = float(pol.scattering_rate_00(catalog, cat.UPPER_CLOCK_ID, 3, intensity, omega))
        results.append(rec)
    meta = _meta(args, catalog)
    if args.format == "json":
        _emit(args, _json(meta, {"roots": results}))
        return
    lines = [f"# {meta['tool']}", f"# config_sha256: {meta['config_sha256']}", f"# catalog_sha256: {meta['catalog_sha256']}"]
    lines.append(f"{'offset (a.u.)':>14}{'lambda* (nm)':>14}{'detuning (nm)':>15}{'slope (a.u./nm)':>17}{'depth (uK)':>12}")
    for r in results:
        lines.append(
            f"{r['continuum_offset_au']:>14.2f}{r['lambda_magic_nm']:>14.4f}{r['detuning_nm']:>15.4f}"
            f"{r['slope_au_per_nm']:>17.3f}{r['trap_depth_uK']:>12.2f}"
        )
    _emit(args, "\n".join(lines) + "\n")


def cmd_hyper_scan(args):
    catalog = _load_catalog(args)
    lam = _grid(args.start, args.stop, args.step)
    intensity = kw_per_cm2(args.intensity_kw_cm2)
    columns = ["lambda_nm"]
    for lv in (cat.LOWER_CLOCK_ID, cat.UPPER_CLOCK_ID):
        columns += [f"{lv}_gamma_au", f"{lv}_shift_hz"]
    rows = []
    for x in lam:
        row = [float(x)]
        for lv in (cat.LOWER_CLOCK_ID, cat.UPPER_CLOCK_ID):
            try:
                g = magic.hyperpolarizability(catalog, lv, wavelength_nm_to_omega(x))
                row += [g, magic.hyper_shift_hz(g, intensity)]
            except ResonanceError:
                row += [math.nan, math.nan]
        rows.append(row)
    _emit(args, _csv(_meta(args, catalog), columns, rows))


def cmd_spin_sim(args):
    geometry = spin.lattice_geometry(args.atoms, args.spacing_nm)
    system = spin.build_hamiltonian(geometry, F=4, subspace=args.subspace, gF=args.gf)
    t = _grid(0.0, args.t_max_ms, args.dt_ms)
    trace = spin.evolve(system, t)
    meta = _meta(args)
    try:
        t_relax = spin.relaxation_time(t, trace.p0, args.threshold)
    except NoCrossingError:
        t_relax = None
    summary = {
        "dimension": system.dimension,
        "relaxation_time_ms": t_relax,
        "infinite_time_average_p0": spin.infinite_time_average(system),
    }
    columns = ["t_ms"] + [f"p_m{m:g}" for m in trace.m_values]
    rows = [[float(ti)] + list(map(float, p)) for ti, p in zip(t, trace.populations)]
    _emit(args, _csv(meta, columns, rows, ["summary: " + json.dumps(summary, sort_keys=True)]))


BUDGET_FLAGS = {
    "temp": "temperature",
    "dtemp": "dtemperature",
    "delta_alpha": "delta_alpha_au",
    "bias_mg": "bias_mG",
    "dbias_mg": "dbias_mG",
    "rin": "rin",
    "intensity_kw_cm2": "intensity_kw_cm2",
    "gamma_term_hz": "gamma_term_hz",
    "delta_gamma_au": "delta_gamma_au",
    "tensor_shift_mhz": "tensor_shift_mHz",
    "tensor_unc_mhz": "tensor_uncertainty_mHz",
    "c6_au": "C6_au",
    "quadrupole_au": "quadrupole_au",
    "separation_nm": "separation_nm",
}


def cmd_budget(args):
    config = bud.BudgetConfig(**{field: getattr(args, flag) for flag, field in BUDGET_FLAGS.items()})
    result = bud.assemble_budget(config)
    meta = _meta(args)
    if args.format == "json":
        _emit(args, _json(meta, result.as_record()))
        return
    lines = [f"# {meta['tool']}", f"# config_sha256: {meta['config_sha256']}"]
    lines.append(f"{'effect':<34}{'shift (mHz)':>14}{'unc. (mHz)':>14}{'unc. (1e-18)':>14}")
    for e in result.entries:
        lines.append(f"{e.name:<34}{e.shift:>14.3f}{e.uncertainty:>14.3f}{e.fractional * 1e18:>14.2f}")
    lines.append(
        f"{'total':<34}{result.total_shift:>14.3f}{result.total_uncertainty:>14.3f}{result.total_fractional * 1e18:>14.2f}"
    )
    n = result.notes
    lines.append(
        f"# BBR coefficient {n['bbr_coefficient_from_constants']:.4e} Hz/(a.u. K^4) from constants, "
        f"{n['bbr_coefficient_printed']:.3e} printed"
    )
    lines.append(f"# line pulling bound {n['line_pulling_bound_hz']:.3g} Hz (printed {n['line_pulling_printed_hz']} Hz)")
    _emit(args, "\n".join(lines) + "\n")


def cmd_fit_lifetime(args):
    _need(args, "input")
    trace = fitting.DecayTrace.from_csv(Path(args.input).read_text(encoding="utf-8"))
    result = fitting.fit_saturation(trace)
    _emit(args, _json(_meta(args), result.as_record()))


def cmd_fit_alpha(args):
    _need(args, "fa", "fr", "power", "lambda_nm")
    est = fitting.invert_polarizability(
        args.fa, args.fr, args.power, args.lambda_nm * 1e-9, df_a=args.dfa, df_r=args.dfr, dpower=args.dpower
    )
    _emit(args, _json(_meta(args), est.as_record()))


# ---------------------------------------------------------------- parser


def _catalog_options(p):
    p.add_argument("--levels", help="levels CSV (default: bundled fixture)")
    p.add_argument("--calculated", help="calculated lines CSV")
    p.add_argument("--experimental", help="experimental lines CSV")
    p.add_argument("--policy", choices=cat.POLICIES, default="calculation-first")


def _common(p):
    p.add_argument("--config", help="JSON file whose keys override option defaults")
    p.add_argument("--out", help="output path (written atomically); stdout if omitted")


def build_parser():
    parser = argparse.ArgumentParser(prog="tmclock", description="Tm lattice clock modelling toolkit")
    parser.add_argument("--version", action="version", version=f"tmclock {__version__}")
    sub = parser.add_subparsers(dest="command")
    leaves = {}

    p_cat = sub.add_parser("catalog", help="validate or merge line catalogs")
    cat_sub = p_cat.add_subparsers(dest="action")
    p = cat_sub.add_parser("validate", help="parse and check a levels/lines pair")
    p.add_argument("--levels")
    p.add_argument("--lines")
    p.add_argument("--tolerance", type=float, default=0.005)
    p.set_defaults(func=cmd_catalog_validate)
    leaves["catalog validate"] = p
    p = cat_sub.add_parser("merge", help="merge calculated and experimental lines")
    _catalog_options(p)
    p.set_defaults(func=cmd_catalog_merge)
    leaves["catalog merge"] = p

    p_pol = sub.add_parser("polarizability", help="dynamic polarizability scans")
    pol_sub = p_pol.add_subparsers(dest="action")
    p = pol_sub.add_parser("scan", help="scalar, tensor and continuum parts on a wavelength grid")
    _catalog_options(p)
    p.add_argument("--from", dest="start", type=float, default=250.0)
    p.add_argument("--to", dest="stop", type=float, default=1200.0)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--level", choices=("both", cat.LOWER_CLOCK_ID, cat.UPPER_CLOCK_ID), default="both")
    p.add_argument("--continuum", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_polarizability_scan)
    leaves["polarizability scan"] = p

    p_mag = sub.add_parser("magic", help="magic-wavelength search")
    mag_sub = p_mag.add_subparsers(dest="action")
    p = mag_sub.add_parser("find", help="bisect the differential polarizability")
    _catalog_options(p)
    p.add_argument("--bracket", type=_pair, default=[806.0, 807.05], help="LO:HI in nm")
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument(
        "--offset-au", dest="offset", type=_floats, default=[-1.0, 0.0, 1.0], help="comma-separated continuum offsets, e.g. --offset-au=-1,0,1"
    )
    p.add_argument("--format", choices=("text", "json"), default="json")
    p.add_argument("--intensity-kw-cm2", type=float, default=50.0)
    p.set_defaults(func=cmd_magic_find)
    leaves["magic find"] = p

    p_hyp = sub.add_parser("hyper", help="hyperpolarizability scans")
    hyp_sub = p_hyp.add_subparsers(dest="action")
    p = hyp_sub.add_parser("scan", help="gamma and its light shift on a wavelength grid")
    _catalog_options(p)
    p.add_argument("--from", dest="start", type=float, default=806.0)
    p.add_argument("--to", dest="stop", type=float, default=807.0)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--intensity-kw-cm2", type=float, default=50.0)
    p.set_defaults(func=cmd_hyper_scan)
    leaves["hyper scan"] = p

    p = sub.add_parser("spin-sim", help="dipolar relaxation of the central atom")
    p.add_argument("--atoms", type=int, default=2)
    p.add_argument("--subspace", choices=("full", "trunc", "truncated"), default="full")
    p.add_argument("--spacing-nm", type=float, default=spin.DEFAULT_SPACING_NM)
    p.add_argument("--gf", type=float, default=1.0)
    p.add_argument("--tmax-ms", "--t-max-ms", dest="t_max_ms", type=float, default=100.0)
    p.add_argument("--dt-ms", type=float, default=0.1)
    p.add_argument("--threshold", type=float, default=0.7)
    p.set_defaults(func=cmd_spin_sim)
    leaves["spin-sim"] = p

    d = bud.BudgetConfig()
    p = sub.add_parser("budget", help="systematic uncertainty budget")
    p.add_argument("--temp", type=float, default=d.temperature)
    p.add_argument("--dtemp", type=float, default=d.dtemperature)
    p.add_argument("--delta-alpha", type=float, default=d.delta_alpha_au)
    p.add_argument("--bias-mg", type=float, default=d.bias_mG)
    p.add_argument("--dbias-mg", type=float, default=d.dbias_mG)
    p.add_argument("--rin", type=float, default=d.rin)
    p.add_argument("--intensity-kw-cm2", type=float, default=d.intensity_kw_cm2)
    p.add_argument("--gamma-term-hz", type=float, default=d.gamma_term_hz)
    p.add_argument("--delta-gamma-au", type=float, default=d.delta_gamma_au)
    p.add_argument("--tensor-shift-mhz", type=float, default=d.tensor_shift_mHz)
    p.add_argument("--tensor-unc-mhz", type=float, default=d.tensor_uncertainty_mHz)
    p.add_argument("--c6-au", type=float, default=d.C6_au)
    p.add_argument("--quadrupole-au", type=float, default=d.quadrupole_au)
    p.add_argument("--separation-nm", type=float, default=d.separation_nm)
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_budget)
    leaves["budget"] = p

    p_fit = sub.add_parser("fit", help="experiment analysis")
    fit_sub = p_fit.add_subparsers(dest="action")
    p = fit_sub.add_parser("lifetime", help="saturation-recovery fit of a t_ms,n[,sigma] CSV")
    p.add_argument("--in", dest="input")
    p.set_defaults(func=cmd_fit_lifetime)
    leaves["fit lifetime"] = p
    p = fit_sub.add_parser("alpha", help="polarizability from parametric resonances")
    p.add_argument("--fa", type=float)
    p.add_argument("--dfa", type=float, default=0.0)
    p.add_argument("--fr", type=float)
    p.add_argument("--dfr", type=float, default=0.0)
    p.add_argument("--power", type=float)
    p.add_argument("--dpower", type=float, default=0.0)
    p.add_argument("--lambda-nm", type=float)
    p.set_defaults(func=cmd_fit_alpha)
    leaves["fit alpha"] = p

    for p in leaves.values():
        _common(p)
    return parser, leaves


def _apply_config(parser, leaves, argv, args):
    key = args.command if getattr(args, "action", None) is None else f"{args.command} {args.action}"
    leaf = leaves[key]
    data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise CLIError("config file must hold a JSON object")
    dests = {a.dest for a in leaf._actions if a.dest not in ("help", "config", "out", "func")}
    unknown = sorted(set(data) - dests)
    if unknown:
        raise CLIError(f"unknown config keys for '{key}': {unknown}")
    # config values become defaults, so explicit flags still win
    leaf.set_defaults(**data)
    return parser.parse_args(argv)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, leaves = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            args = _apply_config(parser, leaves, argv, args)
        args.func(args)
    except (CLIError, *MODULE_ERRORS) as exc:
        print(f"tmclock: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
