"""Batch experiment driver.

Single binary, subcommand style: each subcommand loads a JSON config naming
the rotation, roof or Hamiltonian system, and every tolerance explicitly
(no implicit defaults), runs the corresponding analysis, and writes
reproducible reports.  Identical configs and seeds produce byte-identical
output files.

Exit codes: 0 success, 1 a verified property failed, 2 malformed config,
3 precondition violated.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

from .cf_arith import CFContext
from .errors import (
    ConfigError,
    PreconditionError,
    SpecflowError,
    VerificationError,
)
from .fixtures import ham_preset, roof_preset
from .flowlab import correlation, dk_audit, qn_distribution, rects_from_config
from .hamlab import (
    Section,
    area_identity_check,
    section_profile,
    system_from_config,
)
from .ratner import constants, find_witness, verify_R_property, verify_witness
from .roof import (
    RoofPC,
    _as_modes,
    check_p1,
    coboundary_reduce,
    eigenvalue_criterion,
    roof_from_config,
    weak_mixing_verdict,
)
from .symreal import Basis

# -- config plumbing ------------------------------------------------------------------


def _load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _need(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"config field {key!r} is required")
    return cfg[key]


def _context(cfg: dict) -> CFContext:
    return CFContext.from_config(_need(cfg, "alpha"))


def _roof(cfg: dict, ctx: CFContext) -> RoofPC:
    spec = _need(cfg, "roof")
    if isinstance(spec, str):
        return roof_preset(spec, ctx)
    basis = Basis.from_config(ctx, cfg.get("basis"))
    return roof_from_config(basis, spec)


def _system(cfg: dict):
    spec = _need(cfg, "system")
    if isinstance(spec, str):
        return ham_preset(spec)
    return system_from_config(spec)


def _section(cfg: dict) -> Section:
    spec = _need(cfg, "section")
    return Section(float(_need(spec, "x0")), int(spec.get("orientation", -1)))


def _seed(cfg: dict, args) -> int:
    """Seeds are mandatory for stochastic subcommands; flag wins."""
    if args.seed is not None:
        return int(args.seed)
    if "seed" in cfg:
        return int(cfg["seed"])
    raise ConfigError("seed is required: config field 'seed' or --seed")


def _sym_json(v) -> dict:
    return {"coords": [str(c) for c in v.coords], "float": float(v)}


# -- handlers -------------------------------------------------------------------------
# Each returns (json_report, tables, figures) where tables is a list of
# (suffix_or_None, header, rows) and figures a list of (suffix, draw(path)).


def _cmd_check_props(cfg, args):
    ctx = _context(cfg)
    f = _roof(cfg, ctx)
    v = weak_mixing_verdict(f)
    report = {
        "p1": "holds" if v.p1.holds else "fails",
        "p2": (
            "skipped" if v.p2 is None else "holds" if v.p2.holds else "fails"
        ),
        "weak_mixing": v.verdict == "weakly_mixing",
        "verdict": v.verdict,
        "reason": v.reason,
        "detail": {
            "p1_witness": list(v.p1.witness) if v.p1.witness else None,
            "plateaus": f.p,
            "min_value": None if v.p2 is None else float(v.p2.min_value),
            "jumps": [_sym_json(d) for d in f.d],
        },
    }
    rows = [
        ["p1", report["p1"], json.dumps(report["detail"]["p1_witness"])],
        ["p2", report["p2"], ""],
        ["weak_mixing", str(report["weak_mixing"]).lower(), v.reason],
    ]
    figs = [("roof", lambda p: _figures().roof_plot(f, p))]
    return report, [(None, ["property", "verdict", "detail"], rows)], figs


def _cmd_birkhoff_audit(cfg, args):
    ctx = _context(cfg)
    f = _roof(cfg, ctx)
    n_max = int(_need(cfg, "n_max"))
    grid_size = int(_need(cfg, "grid_size"))
    rows = dk_audit(f, n_max, grid_size)
    for r in rows:
        if not r.float_consistent:
            raise VerificationError(
                f"float path disagrees with exact path at n={r.n}"
            )
    variation = float(f.variation)
    cocycle = None
    if "cocycle_checks" in cfg:
        checks = int(cfg["cocycle_checks"])
        import numpy as np

        rng = np.random.default_rng(_seed(cfg, args))
        for _ in range(checks):
            den = int(rng.integers(5, 10_000))
            x = f.basis.rational(Fraction(int(rng.integers(0, den)), den))
            m = int(rng.integers(1, 50))
            n = int(rng.integers(1, 50))
            tm = (x + f.basis.alpha.scale(m)).mod1()
            gap = f.birkhoff(x, m + n) - f.birkhoff(x, m) - f.birkhoff(tm, n)
            if not gap.is_zero():
                raise VerificationError("cocycle identity violated")
        cocycle = {"checks": checks, "max_residual": 0, "exact": True}
    report = {
        "variation": variation,
        "rows": [
            {
                "n": r.n,
                "q_n": r.qn,
                "max_deviation": _sym_json(r.max_deviation),
                "float_path_max": r.float_path_max,
                "bounded_by_variation": r.max_deviation_float <= variation,
                "unique_vectors": r.unique_vectors,
                "fixups": r.fixups,
            }
            for r in rows
        ],
        "cocycle": cocycle,
    }
    table_rows = [
        [r.n, r.qn, r.max_deviation_float, variation, r.float_path_max,
         str(r.float_consistent).lower()]
        for r in rows
    ]
    header = ["n", "q_n", "max_deviation", "variation_bound",
              "float_path_max", "consistent"]
    figs = [("dk", lambda p: _figures().dk_plot(rows, variation, p))]
    return report, [(None, header, table_rows)], figs


def _cmd_ratner_witness(cfg, args):
    ctx = _context(cfg)
    f = _roof(cfg, ctx)
    n_floor = int(_need(cfg, "n_floor"))
    if not check_p1(f).holds:
        raise PreconditionError(
            "the jump-lattice property fails; the constant-run witness "
            "requires independent jumps"
        )
    con = constants(f, ctx)
    pairs_cfg = cfg.get("pairs")
    if pairs_cfg is None:
        pairs_cfg = [{"x": _need(cfg, "x"), "y": _need(cfg, "y")}]
    entries = []
    table_rows = []
    last_rep = None
    for k, pair in enumerate(pairs_cfg):
        x = f.basis.parse(_need(pair, "x"))
        y = f.basis.parse(_need(pair, "y"))
        rep = find_witness(f, ctx, x, y, n_floor, consts=con)
        ver = verify_witness(f, ctx, x, y, rep)
        if not ver.ok:
            raise VerificationError(f"pair {k}: independent re-verification failed")
        entry = {
            "s": rep.s,
            "M": rep.M,
            "L": rep.L,
            "rho_coords": [str(c) for c in rep.rho.coords],
            "kappa_check": Fraction(rep.L, rep.M) >= rep.kappa,
            "N_check": rep.M >= rep.N and rep.L >= rep.N,
            "rho_float": float(rep.rho),
            "window": list(rep.window),
            "distance": rep.distance,
            "segments": len(rep.segments),
            "verified": ver.ok,
            "fixups": rep.fixups,
        }
        if not (entry["kappa_check"] and entry["N_check"]):
            raise VerificationError(f"pair {k}: witness bounds violated")
        entries.append(entry)
        table_rows.append(
            [k, rep.s, rep.M, rep.L, float(rep.rho), rep.distance,
             str(entry["kappa_check"]).lower(), str(entry["N_check"]).lower(),
             str(ver.ok).lower()]
        )
        last_rep = rep
    report = {
        "n_floor": n_floor,
        "kappa": str(last_rep.kappa),
        "pairs": entries,
    }
    header = ["pair", "s", "M", "L", "rho", "distance", "kappa_ok", "n_ok",
              "verified"]
    figs = [("delta", lambda p: _figures().delta_trace(last_rep, p))]
    return report, [(None, header, table_rows)], figs


def _cmd_r_property(cfg, args):
    ctx = _context(cfg)
    f = _roof(cfg, ctx)
    stats = verify_R_property(
        f,
        ctx,
        float(_need(cfg, "t0")),
        cfg.get("P"),
        float(_need(cfg, "eps")),
        int(_need(cfg, "n_floor")),
        int(_need(cfg, "trials")),
        _seed(cfg, args),
    )
    report = {
        "t0": stats.t0,
        "eps": stats.eps,
        "N": stats.N,
        "trials": stats.trials,
        "pass_count": stats.pass_count,
        "pass_fraction": stats.pass_fraction,
        "passed": stats.passed,
        "seed": stats.seed,
        "pairs": [
            {
                "s": p.s,
                "M": p.M_base,
                "L": p.L_base,
                "rho": p.rho,
                "flow_window": list(p.flow_window),
                "fraction": p.fraction,
                "passed": p.passed,
            }
            for p in stats.pairs
        ],
    }
    table_rows = [
        [k, p.s, p.M_base, p.L_base, p.rho, p.flow_window[0], p.flow_window[1],
         p.fraction, str(p.passed).lower()]
        for k, p in enumerate(stats.pairs)
    ]
    header = ["pair", "s", "M", "L", "rho", "window_lo", "window_hi",
              "fraction", "passed"]
    figs = [("pairs", lambda p: _figures().pair_scatter(stats, p))]
    if not stats.passed:
        _emit(args, "r-property", report, [(None, header, table_rows)], figs)
        raise VerificationError(
            f"shadowing failed: {stats.pass_count}/{stats.trials} pairs"
        )
    return report, [(None, header, table_rows)], figs


def _cmd_rigidity_scan(cfg, args):
    ctx = _context(cfg)
    f = _roof(cfg, ctx)
    n_values = [int(n) for n in _need(cfg, "n_values")]
    grid_size = int(_need(cfg, "grid_size"))
    scans = [qn_distribution(f, n, grid_size) for n in n_values]
    dist_rows = []
    for rep in scans:
        for atom in rep.atoms:
            dist_rows.append([rep.n, rep.qn, atom.value_float, str(atom.mass)])
    scan_json = [
        {
            "n": rep.n,
            "q_n": rep.qn,
            "t_n": rep.t_n,
            "u": str(rep.u),
            "t0": rep.t0,
            "d_set_size": rep.d_set_size,
            "atoms": [
                {"value": _sym_json(a.value), "mass": str(a.mass)}
                for a in rep.atoms
            ],
        }
        for rep in scans
    ]
    tables = [("qn_distribution", ["n", "q_n", "atom_value", "mass"], dist_rows)]
    corr_json = None
    if "correlation" in cfg:
        spec = cfg["correlation"]
        rep = scans[n_values.index(int(spec.get("n", n_values[-1])))]
        rects = rects_from_config(f.basis, _need(spec, "rect"))
        # probe at the heavy-atom return time t_n + t0, where the partial
        # rigidity estimate is sharp
        est = correlation(
            f, rects, rects, rep.t_n + rep.t0, int(_need(spec, "n_samples")),
            _seed(spec, args),
        )
        corr_json = {
            "t": est.t,
            "estimate": est.estimate,
            "radius": est.radius,
            "n_samples": est.n_samples,
            "seed": est.seed,
            "hits": est.hits,
        }
        tables.append(
            (
                "correlation",
                ["t", "estimate", "radius", "n_samples", "seed"],
                [[est.t, est.estimate, est.radius, est.n_samples, est.seed]],
            )
        )
    report = {"grid_size": grid_size, "scans": scan_json, "correlation": corr_json}
    last = scans[-1]
    figs = [("atoms", lambda p: _figures().atom_plot(last, p))]
    return report, tables, figs


def _cmd_eigen_test(cfg, args):
    ctx = _context(cfg)
    f = _roof(cfg, ctx)
    spec = _need(cfg, "r_values")
    if isinstance(spec, dict):
        max_p = int(_need(spec, "max_p"))
        max_q = int(_need(spec, "max_q"))
        rs = sorted(
            {
                Fraction(p, q)
                for q in range(1, max_q + 1)
                for p in range(-max_p, max_p + 1)
                if p != 0
            }
        )
    else:
        rs = [Fraction(str(r)) for r in spec]
    results = []
    table_rows = []
    entries = []
    for r in rs:
        rep = eigenvalue_criterion(f, r)
        results.append(
            {
                "r": str(r),
                "solvable": rep.solvable,
                "integral_clause": rep.integral_clause,
                "class_sums_integer": [c.scaled_is_integer for c in rep.clauses],
                "integral_image": _sym_json(rep.integral_image),
            }
        )
        table_rows.append(
            [str(r), str(rep.solvable).lower(),
             str(rep.integral_clause).lower(), len(rep.clauses)]
        )
        entries.append((str(r), rep.solvable))
    report = {"results": results}
    header = ["r", "solvable", "integral_clause", "n_clauses"]
    figs = [("verdicts", lambda p: _figures().eigen_plot(entries, p))]
    return report, [(None, header, table_rows)], figs


def _cmd_coboundary(cfg, args):
    ctx = _context(cfg)
    zeta = _need(cfg, "zeta")
    n_modes = int(_need(cfg, "n_modes"))
    grid_size = int(_need(cfg, "grid_size"))
    tolerance = float(_need(cfg, "tolerance"))
    rep = coboundary_reduce(zeta, ctx, n_modes, grid_size)
    report = {
        "residual_sup": rep.residual_sup,
        "tolerance": tolerance,
        "n_modes": rep.n_modes,
        "grid_size": rep.grid_size,
        "truncated_modes": list(rep.truncated_modes),
        "u_modes": {
            str(n): [z.real, z.imag] for n, z in sorted(rep.u_modes.items())
        },
    }
    table_rows = [
        [n, z.real, z.imag] for n, z in sorted(rep.u_modes.items())
    ]
    header = ["n", "u_real", "u_imag"]
    figs = [
        (
            "residual",
            lambda p: _figures().residual_plot(
                rep, _as_modes(zeta), ctx.alpha_float, p
            ),
        )
    ]
    if rep.residual_sup > tolerance:
        _emit(args, "coboundary", report, [(None, header, table_rows)], figs)
        raise VerificationError(
            f"residual {rep.residual_sup:.3e} exceeds tolerance {tolerance:.3e}"
        )
    return report, [(None, header, table_rows)], figs


def _cmd_ham_section(cfg, args):
    sys_h = _system(cfg)
    sec = _section(cfg)
    grid_size = int(_need(cfg, "grid_size"))
    tol = float(_need(cfg, "tol"))
    prof = section_profile(sys_h, sec, grid_size, tol)
    report = {
        "x0": prof.x0,
        "orientation": prof.orientation,
        "rotation_estimate": prof.rotation_estimate,
        "beta_hat": list(prof.beta_hat),
        "d_hat": list(prof.d_hat),
        "jump_count": prof.jump_count,
        "jump_sum": sum(prof.d_hat),
        "grid_size": prof.grid_size,
        "failures": [[j, msg] for j, msg in prof.failures],
        "transversality_floor": prof.transversality_floor,
    }
    table_rows = [
        [float(s), float(sr), float(rt)]
        for s, sr, rt in zip(prof.s, prof.s_return, prof.return_time)
    ]
    header = ["s", "s_return", "return_time"]
    figs = [
        ("portrait", lambda p: _figures().phase_portrait(sys_h, p)),
        ("profile", lambda p: _figures().profile_plot(prof, p)),
    ]
    return report, [(None, header, table_rows)], figs


def _cmd_ham_area(cfg, args):
    sys_h = _system(cfg)
    sec = _section(cfg)
    grid_size = int(_need(cfg, "grid_size"))
    tol = float(_need(cfg, "tol"))
    mc_samples = int(_need(cfg, "mc_samples"))
    tolerance = float(_need(cfg, "tolerance"))
    prof = section_profile(sys_h, sec, grid_size, tol, refine_jumps=False)
    rep = area_identity_check(sys_h, sec, prof, mc_samples, _seed(cfg, args))
    report = {
        "lhs_estimate": rep.lhs_estimate,
        "lhs_radius": rep.lhs_radius,
        "rhs_quadrature": rep.rhs_quadrature,
        "discrepancy": rep.discrepancy,
        "tolerance": tolerance,
        "ec_fraction": rep.ec_fraction,
        "trap_count": rep.trap_count,
        "n_samples": rep.n_samples,
        "seed": rep.seed,
    }
    header = ["lhs", "lhs_radius", "rhs", "discrepancy", "ec_fraction",
              "trap_count", "n_samples", "seed"]
    table_rows = [
        [rep.lhs_estimate, rep.lhs_radius, rep.rhs_quadrature, rep.discrepancy,
         rep.ec_fraction, rep.trap_count, rep.n_samples, rep.seed]
    ]
    figs = [("identity", lambda p: _figures().area_plot(rep, p))]
    if rep.discrepancy > tolerance:
        _emit(args, "ham-area", report, [(None, header, table_rows)], figs)
        raise VerificationError(
            f"area identity off by {rep.discrepancy:.3e} > {tolerance:.3e}"
        )
    return report, [(None, header, table_rows)], figs


# -- output ---------------------------------------------------------------------------


def _figures():
    from . import figures

    return figures


def _write_json(path: Path, obj) -> None:
    path.write_text(
        json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _emit(args, name: str, report, tables, figs) -> list[Path]:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if args.format == "json":
        path = out_dir / f"{name}.json"
        _write_json(path, report)
        written.append(path)
    else:
        for suffix, header, rows in tables:
            stem = name if suffix is None else f"{name}_{suffix}"
            path = out_dir / f"{stem}.csv"
            _write_csv(path, header, rows)
            written.append(path)
        if args.format == "svg":
            for suffix, draw in figs:
                written.append(draw(out_dir / f"{name}_{suffix}.svg"))
    return written


_COMMANDS = {
    "check-props": (_cmd_check_props, "decide the jump-lattice and value-span properties"),
    "birkhoff-audit": (_cmd_birkhoff_audit, "Birkhoff sums at denominator times vs the variation bound"),
    "ratner-witness": (_cmd_ratner_witness, "constant-run witness for a close pair, independently re-verified"),
    "r-property": (_cmd_r_property, "flow-time shadowing statistics over random close pairs"),
    "rigidity-scan": (_cmd_rigidity_scan, "deviation atoms at denominator times, optional correlation"),
    "eigen-test": (_cmd_eigen_test, "solvability of the multiplicative eigenvalue equation"),
    "coboundary": (_cmd_coboundary, "solve the additive transfer equation mode by mode"),
    "ham-section": (_cmd_ham_section, "first-return profile of a flow transversal"),
    "ham-area": (_cmd_ham_area, "Monte Carlo check of the weight-mass area identity"),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specflow",
        description="special-flow analysis toolkit: exact rotations, "
        "piecewise-constant roofs, Hamiltonian sections",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for cmd_name, (handler, help_text) in _COMMANDS.items():
        sp = sub.add_parser(cmd_name, help=help_text)
        sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--out", default=".", help="report directory")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
        sp.add_argument("--format", choices=("csv", "json", "svg"),
                        default="json",
                        help="json report, csv tables, or csv plus figures")
        sp.set_defaults(handler=handler, name=cmd_name)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_json(args.config)
        report, tables, figs = args.handler(cfg, args)
        written = _emit(args, args.name, report, tables, figs)
        names = ", ".join(p.name for p in written)
        print(f"{args.name}: ok ({names})")
        return 0
    except ConfigError as exc:
        print(f"specflow {args.name}: config error: {exc}", file=sys.stderr)
        return 2
    except VerificationError as exc:
        print(f"specflow {args.name}: verification failed: {exc}", file=sys.stderr)
        return 1
    except SpecflowError as exc:
        # preconditions, precision caps, digit supply, missing structure
        print(f"specflow {args.name}: precondition violated: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
