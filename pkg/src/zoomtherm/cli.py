"""Command-line entry point: ``zoomtherm <subcommand> [--config FILE] [--set key=value ...]``.

Exit codes: 0 success, 1 configuration or precondition error, 2 numerical
failure.  JSON output carries ``schema_version`` and is written with
sorted keys, so a fixed configuration always produces the same bytes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__
from . import equilibrium as eq
from .acceptance import plain, run_all
from .config import RunConfig, parse_text
from .dynamics import MapModel
from .errors import ConfigError, NumericalError, PreconditionError
from .inducing import (InducedScheme, condition_star_report, first_return_scheme,
                       prune_condition_star, verify_adapted, verify_markov)
from .intervals import Interval
from .nested import Hole, build_hole, nested_shrink, verify_nested
from .potentials import PotentialSpec
from .settings import SCHEMA_VERSION
from .thermo import gibbs_eigendata, gurevich_pressure, induced_potential, verify_conformal
from .zooming import detect_hyperbolic_times, hyperbolic_frequency

log = logging.getLogger("zoomtherm")

SUBCOMMANDS = ("hyp-times", "nest", "induce", "pressure", "equilibrium", "conformal", "escape",
               "selftest")

# flag -> config key
_FLAGS = {
    "map": "map.name", "potential": None, "base": "scheme.base", "cutoff": "scheme.cutoff",
    "nsym": "thermo.nsym", "depth": "thermo.depth", "nmax": "thermo.nmax", "tol": "thermo.tol",
}

AFFINE_FULL = ("doubling", "shift2", "tent")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="zoomtherm", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"zoomtherm {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
        p.add_argument("--out", help="write the artifact here instead of stdout")
        p.add_argument("--map")
        p.add_argument("--potential", help="zero | geometric:t=<v> | constant:c=<v>")
        p.add_argument("--base", help="'lo,hi', whole or nest")
        p.add_argument("--cutoff", type=int)
        p.add_argument("--nsym")
        p.add_argument("--depth", type=int)
        p.add_argument("--nmax", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def load_config(args: argparse.Namespace) -> RunConfig:
    pairs = {}
    if args.config:
        try:
            pairs.update(parse_text(Path(args.config).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    for item in args.set:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        pairs[key.strip()] = val.strip()
    for flag, key in _FLAGS.items():
        val = getattr(args, flag, None)
        if val is None or key is None:
            continue
        pairs[key] = str(val)
    if args.potential:
        spec = PotentialSpec.parse(args.potential)
        pairs["potential.kind"] = spec.kind
        pairs["potential.t"] = repr(spec.t)
        pairs["potential.c"] = repr(spec.value)
    return RunConfig.from_pairs(pairs)


def _interval(iv: Interval | None):
    return None if iv is None else [iv.lo, iv.hi]


def _nested(cfg: RunConfig, fmap: MapModel):
    con = cfg.contraction(fmap)
    return nested_shrink(fmap, cfg.balls, cfg.nest_epsilon, cfg.nest_cutoff, con,
                         max_preimages=cfg.max_preimages, tol=cfg.tol_inv)


def build_scheme(cfg: RunConfig, fmap: MapModel) -> InducedScheme:
    if cfg.base is None:
        scheme = eq.full_scheme(fmap)
    elif cfg.base == "nest":
        nc = _nested(cfg, fmap)
        base = nc.shrunken[cfg.scheme_ball]
        if base is None:
            raise PreconditionError(f"nested ball {cfg.scheme_ball} was excluded")
        hole = build_hole(nc, cfg.nest_hole) if cfg.nest_hole else None
        scheme = first_return_scheme(fmap, base, nc.contraction, cfg.scheme_cutoff, hole=hole,
                                     max_preimages=cfg.max_preimages, tol=cfg.tol_inv)
    else:
        con = cfg.contraction(fmap) if cfg.scheme_mode == "zooming" else None
        scheme = first_return_scheme(fmap, cfg.base_interval(fmap), con, cfg.scheme_cutoff,
                                     max_preimages=cfg.max_preimages, tol=cfg.tol_inv)
    if cfg.prune:
        scheme = prune_condition_star(scheme)
    return scheme


def _json(payload: dict, command: str) -> str:
    body = {"schema_version": SCHEMA_VERSION, "command": command}
    body.update(payload)
    return json.dumps(plain(body), sort_keys=True, indent=2) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def cmd_hyp_times(cfg: RunConfig, fmap: MapModel) -> str:
    rows = []
    for x0 in cfg.hyp_points:
        rec = detect_hyperbolic_times(fmap, x0, cfg.hyp_nmax, cfg.sigma, cfg.epsilon)
        times = set(rec.times)
        for n in range(1, cfg.hyp_nmax + 1):
            rows.append((x0, n, int(n in times), hyperbolic_frequency(rec, n)))
    return _csv(("x0", "n", "is_hyperbolic", "frequency"), rows)


def cmd_nest(cfg: RunConfig, fmap: MapModel) -> str:
    nc = _nested(cfg, fmap)
    rep = verify_nested(fmap, nc, max_preimages=cfg.max_preimages)
    payload = {"shrunken": [_interval(a) for a in nc.shrunken],
               "certificates": list(nc.certificates), "tail_bound": nc.tail_bound,
               "cutoff": nc.cutoff_order, "epsilon": nc.epsilon,
               "verification": {k: rep[k] for k in ("n_preimages", "n_linked_distinct_orders",
                                                    "n_same_order_overlaps", "passed")}}
    if cfg.nest_hole:
        hole = build_hole(nc, cfg.nest_hole)
        payload["hole"] = {"components": list(hole.components),
                           "region": [_interval(r) for r in hole.region],
                           "sandwich_ok": hole.sandwich_ok}
    return _json(payload, "nest")


def cmd_induce(cfg: RunConfig, fmap: MapModel) -> str:
    s = build_scheme(cfg, fmap)
    markov = verify_markov(s)
    star = condition_star_report(s)
    adapted = verify_adapted(s)
    payload = {
        "base": _interval(s.base), "mode": s.mode, "cutoff": s.cutoff_order,
        "elements": [{"endpoints": [e.interval.lo, e.interval.hi], "tau": e.tau,
                      "branch_word": list(e.branch_word)} for e in s.elements],
        "unresolved_mass": s.unresolved_mass, "removed": list(s.removed),
        "certificates": {
            "markov": {k: markov[k]["passed"] for k in
                       ("disjoint_interiors", "full_branch", "homeomorphic", "markov_images",
                        "generating")},
            "condition_star": {"passed": star["passed"], "violations": star["violations"]},
            "adapted": {"passed": adapted["passed"],
                        "violations": adapted.get("n_violations", 0)},
        },
    }
    return _json(payload, "induce")


def cmd_pressure(cfg: RunConfig, fmap: MapModel) -> str:
    s = build_scheme(cfg, fmap)
    phi = cfg.potential()
    pot = induced_potential(phi, s, depth=cfg.depth, n_sym=cfg.nsym)
    est = gurevich_pressure(pot, n_max=cfg.nmax, depth=cfg.depth)
    res = eq.pressure_solve(fmap, s, phi, tol=cfg.tol, n_sym=cfg.nsym, depth=cfg.depth, pot=pot)
    payload = {"potential": phi.label, "p_star": res.p_star, "bracket": list(res.bracket),
               "iterations": res.iterations, "truncation_sizes": list(res.truncation_sizes),
               "truncation_converged": res.truncation_converged,
               "induced": {"pressure_lower_bounds": list(est.lower_bounds),
                           "periodic": list(est.periodic), "diverged": est.diverged}}
    if est.finite:
        g = gibbs_eigendata(pot.shifted(res.p_star), depth=cfg.depth)
        payload.update(**{"lambda": g.lam,
                          "residuals": {"h": g.residual_h, "m": g.residual_m}})
    return _json(payload, "pressure")


def _t0_block(cfg: RunConfig, fmap: MapModel, s: InducedScheme, phi: PotentialSpec):
    if phi.kind != "geometric" or fmap.name not in AFFINE_FULL:
        return None
    h = eq.pressure_solve(fmap, s, PotentialSpec(), tol=cfg.tol).p_star
    t0 = eq.geometric_t0(fmap, [eq.GridMeasure.lebesgue(fmap, cfg.grid_depth)], entropy=h)
    return {"t0": t0, "below_t0": phi.t < t0}


def cmd_equilibrium(cfg: RunConfig, fmap: MapModel, cells: bool) -> str:
    s = build_scheme(cfg, fmap)
    phi = cfg.potential()
    r = eq.equilibrium(fmap, s, phi, n_sym=cfg.nsym, depth=cfg.depth,
                       grid_depth=cfg.grid_depth, tol=cfg.tol)
    if cells:
        return _cells_csv(r.projected)
    payload = {"potential": phi.label, "p_star": r.p_star, "entropy": r.entropy,
               "phi_integral": r.phi_integral, "phi_integral_direct": r.phi_integral_direct,
               "tau_integral": r.tau_integral, "tau_integral_finite": r.tau_integral_finite,
               "tau_tail_ratio": r.tau_tail_ratio, "induced_entropy": r.induced_entropy,
               "variational_gap": r.variational_gap,
               "variational_ok": abs(r.variational_gap) < cfg.tol_eq,
               "invariance_residual": r.invariance_residual,
               "grid_depth": r.projected.depth, "truncation_size":
               r.induced_gibbs.truncation_size, "t0": _t0_block(cfg, fmap, s, phi)}
    return _json(payload, "equilibrium")


def _cells_csv(mu: eq.GridMeasure) -> str:
    e = mu.edges
    return _csv(("lo", "hi", "mass"),
                ((float(e[i]), float(e[i + 1]), float(mu.masses[i])) for i in range(mu.masses.size)))


def cmd_conformal(cfg: RunConfig, fmap: MapModel, cells: bool) -> str:
    s = prune_condition_star(build_scheme(cfg, fmap))
    phi = cfg.potential()
    res = eq.pressure_solve(fmap, s, phi, tol=cfg.tol, n_sym=cfg.nsym)
    pot = induced_potential(phi, s, n_sym=cfg.nsym).shifted(res.p_star)
    g = gibbs_eigendata(pot)
    conf = verify_conformal(g.m, pot, g.log_lambda, tol=cfg.tol_meas)
    c = eq.spread_conformal(s, g, phi.shifted(res.p_star), depth=cfg.grid_depth,
                            exactness=cfg.exactness, tol=cfg.tol_meas)
    if cells:
        return _cells_csv(c.nu)
    payload = {"potential": phi.label, "p_star": res.p_star, "total_mass": c.total_mass,
               "finiteness_bound": c.finiteness_bound, "exactness_time": c.exactness_time,
               "pieces": len(c.pieces), "identical_pairs": c.identical_pairs,
               "max_disagreement": c.max_disagreement,
               "remaining_time_mismatches": c.remaining_time_mismatches,
               "overlaps_agree": c.overlaps_agree,
               "conformality_residual": c.conformality_residual,
               "induced_conformal": {"passed": conf["passed"],
                                     "max_relative_residual": conf["max_relative_residual"]}}
    if not c.overlaps_agree:
        raise NumericalError("spread masses disagree on identical pieces; "
                             f"max disagreement {c.max_disagreement:.3g}")
    return _json(payload, "conformal")


def cmd_escape(cfg: RunConfig, fmap: MapModel, series_csv: bool) -> str:
    hole = Hole.from_intervals([Interval(a, b, fmap.phase.period) for a, b in cfg.escape_hole])
    r = eq.escape_rate(fmap, hole, cfg.escape_nmax)
    if series_csv:
        rows = ((n, r.masses[n], r.per_n[n - 1]) for n in range(1, len(r.masses)))
        return _csv(("n", "mass", "rate_n"), rows)
    payload = {"hole": [list(h) for h in cfg.escape_hole], "rate": r.rate,
               "masses": list(r.masses), "per_n": list(r.per_n), "window": list(r.window)}
    return _json(payload, "escape")


def cmd_selftest() -> tuple[str, bool]:
    rows = run_all()
    lines = [r.line() for r in rows]
    ok = all(r.passed for r in rows)
    lines.append(f"{sum(r.passed for r in rows)}/{len(rows)} passed")
    return "\n".join(lines) + "\n", ok


def run(command: str, cfg: RunConfig | None) -> tuple[str, int]:
    """Produce the artifact text for ``command`` and the exit code."""
    if command == "selftest":
        text, ok = cmd_selftest()
        return text, 0 if ok else 2
    fmap = cfg.build_map()
    csv_out = cfg.output_format == "csv"
    if command == "hyp-times":
        text = cmd_hyp_times(cfg, fmap)
    elif command == "nest":
        text = cmd_nest(cfg, fmap)
    elif command == "induce":
        text = cmd_induce(cfg, fmap)
    elif command == "pressure":
        text = cmd_pressure(cfg, fmap)
    elif command == "equilibrium":
        text = cmd_equilibrium(cfg, fmap, csv_out)
    elif command == "conformal":
        text = cmd_conformal(cfg, fmap, csv_out)
    elif command == "escape":
        text = cmd_escape(cfg, fmap, csv_out)
    else:
        raise ConfigError(f"unknown subcommand {command!r}")
    return text, 0


def _destination(args, cfg: RunConfig | None, command: str) -> Path | None:
    if args.out:
        return Path(args.out)
    if cfg is not None and cfg.output_dir:
        ext = "csv" if command == "hyp-times" or cfg.output_format == "csv" else "json"
        if command == "selftest":
            ext = "txt"
        return Path(cfg.output_dir) / f"{command}.{ext}"
    return None


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = None
    try:
        cfg = load_config(args)
        text, code = run(args.command, cfg)
    except (ConfigError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, FloatingPointError, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    dest = _destination(args, cfg, args.command)
    if dest is None:
        sys.stdout.write(text)
    else:
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(text)
        log.info("wrote %s", dest)
    return code


if __name__ == "__main__":
    sys.exit(main())
