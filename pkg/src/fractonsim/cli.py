"""Command-line entry point: ``fractonsim <subcommand> [options]``.

Exit status is 0 on success, 2 on invalid input and 3 on a numerical
failure (non-convergence, threshold never crossed).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import NumericalError, ValidationError

log = logging.getLogger("fractonsim")


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--out", type=Path, default=None, metavar="DIR", help="output directory")
    p.add_argument("--paper-scale", action="store_true", help="use full ensemble sizes")
    p.add_argument("--workers", type=int, default=1, metavar="N", help="worker processes")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _state_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--state", help="initial spin string, e.g. 00+00+00")
    g.add_argument("--fractons", type=_ints, metavar="SITES", help="sites of + charges on a vacuum chain")
    p.add_argument("--L", type=int, help="chain length (with --fractons)")


def _initial(args):
    from .chain import SpinState
    if args.state is not None:
        return SpinState.from_string(args.state)
    if args.L is None:
        raise ValidationError("--fractons needs --L")
    return SpinState.fractons(args.L, args.fractons)


def _emit(text: str, out: Path | None, name: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)


def _dumps(obj) -> str:
    from .experiments import _clean
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# subcommands


def cmd_evolve(args) -> None:
    from .automaton import EvolutionConfig, geometric_schedule, run_ensemble
    state = _initial(args)
    R = args.realizations or (5000 if args.paper_scale else 500)
    times = geometric_schedule(args.steps, args.ratio) if args.snapshots == "geometric" else None
    cfg = EvolutionConfig(state, args.gate_width, args.steps, R, times, args.seed, args.window_start, args.window_every)
    res = run_ensemble(cfg, args.workers)
    if args.out is None:
        prof = res.window_profile if res.window_profile is not None else res.final()
        sys.stdout.write(prof.to_csv())
    else:
        res.save(args.out)
        log.info("wrote %s", args.out)


def cmd_enumerate(args) -> None:
    from .sectors import enumerate_sector, sector_mean_profile
    sector = enumerate_sector(args.L, (args.q, args.p))
    if len(sector) == 0:
        raise ValidationError(f"sector ({args.q}, {args.p}) is empty at L={args.L}")
    prof = sector_mean_profile(sector)
    _emit(prof.to_csv(), args.out, "sector_profile.csv")
    if args.out is not None:
        _emit(_dumps({"L": args.L, "q_tot": args.q, "p_tot": args.p, "sector_size": len(sector)}), args.out,
              "sector.json")
    log.info("sector size %d", len(sector))


def cmd_maxent(args) -> None:
    from .maxent import constraint_residuals, exact_profile, linearized_multipliers, solve_multipliers
    label = (args.q, args.p)
    m = solve_multipliers(args.L, label, tol=args.tol)
    lq, lp = linearized_multipliers(args.L, label, exact=True)
    rq, rp = constraint_residuals(args.L, label, m)
    info = {"L": args.L, "q_tot": args.q, "p_tot": args.p, "lambda_q": m.lambda_q, "lambda_p": m.lambda_p,
            "residuals": [rq, rp], "linearized": {"lambda_q": str(lq), "lambda_p": str(lp)}}
    prof = exact_profile(args.L, m)
    if args.out is None:
        sys.stdout.write(_dumps(info))
        sys.stdout.write(prof.to_csv())
    else:
        _emit(_dumps(info), args.out, "multipliers.json")
        _emit(prof.to_csv(), args.out, "maxent_profile.csv")


def cmd_blocks(args) -> None:
    from .blocks import equivalence_check, map_two_fracton, run_block_ensemble, run_two_tier_ensemble
    from .automaton import EvolutionConfig, geometric_schedule
    state = _initial(args)
    R = args.realizations or (5000 if args.paper_scale else 500)
    if args.compare:
        rep = equivalence_check(state.L, state, args.steps, R, args.seed, workers=args.workers)
        if args.out is not None:
            rep.automaton.save(args.out / "automaton")
            rep.blocks.save(args.out / "blocks")
        _emit(_dumps(rep.summary()), args.out, "equivalence.json")
        return
    times = geometric_schedule(args.steps, args.ratio)
    if args.piston:
        sites = [i + 1 for i, s in enumerate(state.sites) if s]
        if len(sites) != 2 or any(state.sites[i - 1] != 1 for i in sites):
            raise ValidationError("--piston needs exactly two + charges")
        tt = map_two_fracton(state.L, *sites)
        res, stats = run_two_tier_ensemble(tt, args.steps, R, args.seed, times, args.window_start, args.window_every,
                                           count_from=args.window_start or 0)
        rows = ["column,xi,occupation,ratio,ratio_err"]
        occ = [float(v) for v in stats.occupation()]
        for c in range(1, state.L - 1):
            if occ[c] > 0 and occ[c + 1] > 0:
                rows.append(f"{c},{c - (state.L - 1) / 2!r},{occ[c]!r},{stats.transition_ratio(c)!r},"
                            f"{stats.transition_ratio_error(c)!r}")
        _emit("\n".join(rows) + "\n", args.out, "piston.csv")
    else:
        cfg = EvolutionConfig(state, 3, args.steps, R, times, args.seed, args.window_start, args.window_every)
        res = run_block_ensemble(cfg, args.workers)
    if args.out is not None:
        res.save(args.out / "ensemble")
    else:
        sys.stdout.write(res.final().to_csv())


def cmd_analytic(args) -> None:
    from .analytic import (TwoFractonGeometry, boundary_charge, lattice_two_fracton_profile, peak_fwhm,
                           single_fracton_final, two_fracton_final_profile)
    if args.single is not None:
        L, p = args.single
        _emit(single_fracton_final(L, p).to_csv(), args.out, "single_final.csv")
        return
    if args.delta is None:
        raise ValidationError("give --delta (two fractons) or --single L p")
    geom = TwoFractonGeometry(args.L, args.delta)
    prof = lattice_two_fracton_profile(geom.n_sites(), *geom.fracton_sites()) if args.lattice else two_fracton_final_profile(geom)
    _emit(prof.to_csv(), args.out, "analytic_profile.csv")
    if args.out is not None:
        _emit(_dumps({"L": args.L, "delta": args.delta, "sites": geom.n_sites(), "fracton_sites": geom.fracton_sites(),
                      "boundary_charge": boundary_charge(geom), "piston_width": geom.piston_width,
                      "fwhm": peak_fwhm(geom)}), args.out, "analytic.json")


def cmd_krylov(args) -> None:
    from .chain import sector_of
    from .gates import build_class_table
    from .sectors import enumerate_sector, krylov_decompose
    if args.state is not None or args.fractons is not None:
        state = _initial(args)
        L, label = state.L, tuple(sector_of(state))
    else:
        if args.L is None or args.q is None or args.p is None:
            raise ValidationError("give --state, --fractons with --L, or --L --q --p")
        state, L, label = None, args.L, (args.q, args.p)
    dec = krylov_decompose(enumerate_sector(L, label), build_class_table(args.gate_width))
    info = dec.summary()
    if state is not None:
        cid = dec.component_containing(state)
        info["initial"] = str(state)
        info["initial_component_size"] = len(dec.components[cid])
    _emit(_dumps(info), args.out, "krylov.json")


def cmd_scaling(args) -> None:
    from .experiments import ExperimentSpec, run_experiment
    if args.kind == "single":
        params = {"sizes": args.scales} if args.scales else {}
        kind = "fig3_scaling"
    else:
        params = {"deltas": args.scales} if args.scales else {}
        params["ratio"] = args.ratio
        kind = "fig5_scaling"
    if args.realizations:
        params["n_realizations"] = args.realizations
    spec = ExperimentSpec(kind, params, args.seed, args.paper_scale)
    out = args.out or Path(f"out/{kind}")
    run_experiment(spec, out, args.workers)
    sys.stdout.write((out / "summary.json").read_text())


def cmd_reproduce(args) -> None:
    from .experiments import KINDS, ExperimentSpec, default_spec, run_experiment
    out = args.out or Path("out")
    specs = []
    if args.all:
        specs = [(k, default_spec(k, args.seed, args.paper_scale)) for k in KINDS]
    for kind in args.kind or []:
        specs.append((kind, default_spec(kind, args.seed, args.paper_scale)))
    for path in args.configs:
        spec = ExperimentSpec.load(path, args.paper_scale, args.seed if args.seed_given else None)
        specs.append((Path(path).stem, spec))
    if not specs:
        raise ValidationError("nothing to run: give config files, --kind or --all")
    for name, spec in specs:
        log.info("running %s", name)
        run_experiment(spec, out / name, args.workers)
        print(out / name)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="fractonsim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", parents=[common], help="automaton ensemble")
    _state_args(p)
    p.add_argument("--gate-width", type=int, default=3, choices=(3, 4))
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--realizations", type=int, default=None)
    p.add_argument("--snapshots", choices=("geometric", "final"), default="geometric")
    p.add_argument("--ratio", type=float, default=1.03, help="geometric snapshot ratio")
    p.add_argument("--window-start", type=int, default=None)
    p.add_argument("--window-every", type=int, default=1)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("enumerate", parents=[common], help="exact symmetry-sector average")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("maxent", parents=[common], help="maximum-entropy multipliers and profile")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_maxent)

    p = sub.add_parser("blocks", parents=[common], help="block-sliding and piston-gas ensembles")
    _state_args(p)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--realizations", type=int, default=None)
    p.add_argument("--ratio", type=float, default=1.03)
    p.add_argument("--window-start", type=int, default=None)
    p.add_argument("--window-every", type=int, default=1)
    p.add_argument("--piston", action="store_true", help="two-tier gas with an explicit piston")
    p.add_argument("--compare", action="store_true", help="compare against the automaton at matched times")
    p.set_defaults(func=cmd_blocks)

    p = sub.add_parser("analytic", parents=[common], help="closed-form stationary profiles")
    p.add_argument("--L", type=int, default=80, help="continuum length (chain has L + 1 sites)")
    p.add_argument("--delta", type=int, default=None)
    p.add_argument("--single", type=int, nargs=2, metavar=("L", "P"), default=None)
    p.add_argument("--lattice", action="store_true", help="exact lattice average instead of the continuum law")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("krylov", parents=[common], help="Krylov fragments of a sector")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--state")
    g.add_argument("--fractons", type=_ints, metavar="SITES")
    p.add_argument("--L", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--gate-width", type=int, default=3, choices=(3, 4))
    p.set_defaults(func=cmd_krylov)

    p = sub.add_parser("scaling", parents=[common], help="tau sweep and power-law fit")
    p.add_argument("--kind", choices=("single", "double"), required=True)
    p.add_argument("--scales", type=_ints, default=None, help="L (single) or Delta (double) values")
    p.add_argument("--ratio", type=float, default=0.5, help="Delta/L for double sweeps")
    p.add_argument("--realizations", type=int, default=None)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("reproduce", parents=[common], help="run experiment configs")
    p.add_argument("configs", nargs="*", type=Path, help="JSON experiment files")
    p.add_argument("--kind", action="append", help="run the default spec of this kind")
    p.add_argument("--all", action="store_true", help="run every figure pipeline")
    p.set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    args.seed_given = "--seed" in argv or any(a.startswith("--seed=") for a in argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
