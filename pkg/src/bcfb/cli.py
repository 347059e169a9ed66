"""Command-line front end.

Subcommands: ``region`` (frontier CSVs for selected regions), ``figure2``
(no-feedback vs closed-form feedback frontier sweeps for binary-symmetric
pairs), ``check`` (degradedness / less-noisy / improvement report), and
``simulate`` (block-length sweep of the Monte Carlo scheme).  All outputs
are deterministic given the flags and seed.

Exit codes: 0 success, 2 configuration error, 3 infeasible parameters or
codebook capacity exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .channels import (
    ChannelSpecError,
    Dmbc,
    check_less_noisy,
    enhance,
    is_physically_degraded,
    load_channel,
    make_bebc,
    make_bsbc,
)
from .regions import (
    AuxCoding,
    RateRegion,
    RegionError,
    UxStructure,
    backward_decoding_region,
    bsbc_family_nofb_frontier,
    bsbc_family_region,
    enhanced_region,
    find_dominating_enhanced,
    improve_boundary_point,
    no_feedback_region,
    sample_aux,
    sample_ux,
    sliding_window_region,
    sliding_window_region_capped,
    xor_alpha_sweep,
)
from .sim import SchemeError, estimate_error, rates_from_aux

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

REGION_TOKENS = ("nofb", "enh", "thm1", "cor1", "thm2", "bsbc-example")


class ConfigError(ValueError):
    pass


def parse_channel(arg: str) -> Dmbc:
    """Inline shorthand ``bsbc:p1,p2`` / ``bebc:d1,d2`` or a JSON file path."""
    if arg.startswith("bsbc:") or arg.startswith("bebc:"):
        kind, _, rest = arg.partition(":")
        try:
            a, b = (float(v) for v in rest.split(","))
        except ValueError as exc:
            raise ConfigError(f"bad channel shorthand {arg!r}: {exc}") from exc
        try:
            return make_bsbc(a, b) if kind == "bsbc" else make_bebc(a, b)
        except ChannelSpecError as exc:
            raise ConfigError(str(exc)) from exc
    path = Path(arg)
    if not path.exists():
        raise ConfigError(f"channel spec file {arg!r} not found")
    try:
        return load_channel(str(path))
    except (ChannelSpecError, json.JSONDecodeError, OSError) as exc:
        raise ConfigError(f"bad channel spec {arg!r}: {exc}") from exc


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def write_frontier_csv(path: Path, region: RateRegion) -> int:
    front = region.frontier()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("r1,r2\n")
        for a, b in front:
            fh.write(f"{_fmt(a)},{_fmt(b)}\n")
    return len(front)


def _plain_structures(ch: Dmbc, grid: int, seed: int):
    count = max(grid * grid, 16)
    structures = sample_ux(ch, count, seed=seed)
    if ch.nx == 2:
        structures += xor_alpha_sweep(np.linspace(0.0, 0.5, max(grid, 8)))
    return structures


def _compression_structures(ch: Dmbc, grid: int, seed: int):
    # superset of the plain pool so a zero budget collapses onto it exactly
    structures = _plain_structures(ch, grid, seed)
    structures += sample_aux(ch, max(grid * grid, 16), seed=seed + 1)
    if ch.nx == 2 and ch.ny1 == 2:
        alphas = np.linspace(0.0, 0.5, max(grid, 8))
        betas = np.linspace(0.0, 0.5, 9)
        structures += [AuxCoding.xor_family(a, b) for a in alphas for b in betas]
    return structures


def cmd_region(args) -> int:
    ch = parse_channel(args.channel)
    tokens = [t.strip() for t in args.regions.split(",") if t.strip()]
    unknown = [t for t in tokens if t not in REGION_TOKENS]
    if unknown:
        raise ConfigError(f"unknown region tokens {unknown}; choose from {REGION_TOKENS}")
    if args.rfb < 0:
        raise ConfigError("--rfb must be nonnegative")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    meta = {
        "channel": args.channel,
        "rfb": args.rfb,
        "grid": args.grid,
        "seed": args.seed,
        "regions": {},
    }
    plain = None
    fancy = None
    for token in tokens:
        if token == "bsbc-example":
            if not (args.channel.startswith("bsbc:")):
                raise ConfigError("bsbc-example needs an inline bsbc channel")
            _, _, rest = args.channel.partition(":")
            p1, p2 = (float(v) for v in rest.split(","))
            try:
                grid_pts = np.linspace(0.0, 0.5, max(args.grid, 8))
                region = bsbc_family_region(p1, p2, args.rfb, grid_pts, grid_pts)
            except RegionError as exc:
                print(f"infeasible: {exc}", file=sys.stderr)
                return EXIT_INFEASIBLE
        elif token in ("nofb", "enh"):
            if plain is None:
                plain = _plain_structures(ch, args.grid, args.seed)
            region = (
                no_feedback_region(ch, plain)
                if token == "nofb"
                else enhanced_region(ch, plain)
            )
        else:
            if fancy is None:
                fancy = _compression_structures(ch, args.grid, args.seed)
            fn = {
                "thm1": sliding_window_region,
                "cor1": sliding_window_region_capped,
                "thm2": backward_decoding_region,
            }[token]
            region = fn(ch, args.rfb, fancy)
        path = outdir / f"region_{token}.csv"
        npts = write_frontier_csv(path, region)
        meta["regions"][token] = {"file": path.name, "frontier_points": npts, "points": len(region)}
    with open(outdir / "region_meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def cmd_figure2(args) -> int:
    p1_list = [float(v) for v in args.p1.split(",")]
    p2 = args.p2
    for p1 in p1_list:
        if not 0.0 < p2 < p1 < 0.5:
            raise ConfigError(f"need 0 < p2 < p1 < 1/2, got p1={p1}, p2={p2}")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    grid_pts = np.linspace(0.0, 0.5, max(args.grid, 8))
    meta = {"p2": p2, "rfb": args.rfb, "grid": args.grid, "pairs": {}}
    for p1 in p1_list:
        nofb = bsbc_family_nofb_frontier(p1, p2, grid_pts)
        fb = bsbc_family_region(p1, p2, args.rfb, grid_pts, grid_pts)
        tag = _fmt(p1).replace(".", "p")
        f_nofb = outdir / f"fig2_p1_{tag}_nofb.csv"
        f_fb = outdir / f"fig2_p1_{tag}_fb.csv"
        write_frontier_csv(f_nofb, nofb)
        write_frontier_csv(f_fb, fb)
        meta["pairs"][_fmt(p1)] = {"nofb": f_nofb.name, "feedback": f_fb.name}
    with open(outdir / "fig2_meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def cmd_check(args) -> int:
    ch = parse_channel(args.channel)
    if args.tol <= 0:
        raise ConfigError("--tol must be positive")
    lines = []
    degraded = is_physically_degraded(ch, tol=args.tol)
    lines.append(f"physically degraded: {degraded}")
    report = check_less_noisy(ch, grid_resolution=args.grid, samples=args.samples, seed=args.seed)
    lines.append(
        f"less-noisy (receiver 2 vs 1): {report.verdict}"
        f" (max deficit {report.max_deficit:.3e},"
        f" min strict margin {report.min_strict_margin:.3e},"
        f" {report.samples_checked} structures)"
    )
    result_json = {
        "physically_degraded": degraded,
        "less_noisy": {
            "verdict": report.verdict,
            "max_deficit": report.max_deficit,
            "min_strict_margin": report.min_strict_margin,
            "samples_checked": report.samples_checked,
        },
    }
    if report.witness is not None:
        w = report.witness
        lines.append(
            f"  witness: I(U;Y1)={w.i_u_y1:.6f} > I(U;Y2)={w.i_u_y2:.6f}"
            f" with P(U)={np.array2string(w.p_u, precision=4)}"
            f" P(X|U)={np.array2string(w.p_x_given_u, precision=4)}"
        )
        result_json["less_noisy"]["witness"] = {
            "p_u": w.p_u.tolist(),
            "p_x_given_u": w.p_x_given_u.tolist(),
            "i_u_y1": w.i_u_y1,
            "i_u_y2": w.i_u_y2,
        }
    if report.verdict == "holds" and not degraded and ch.nx == 2 and args.rfb > 0:
        base = UxStructure.xor(args.alpha)
        cands = [UxStructure.xor(a) for a in np.linspace(0.01, args.alpha, 40, endpoint=False)]
        from .regions import ux_rates

        r1b, r2b, _, _ = ux_rates(ch, base)
        enh_ux = find_dominating_enhanced(ch, r1b, r2b, cands)
        if enh_ux is None:
            lines.append("improvement demo: no dominating enhanced structure found")
        else:
            res = improve_boundary_point(ch, base, enh_ux, args.rfb)
            lines.append(
                "improvement demo: "
                f"base=({res.base.r1:.6f},{res.base.r2:.6f}) "
                f"gamma={res.gamma:.6f} "
                f"improved=({res.improved.r1:.6f},{res.improved.r2:.6f}) "
                f"feasible={res.feasible}"
            )
            result_json["improvement"] = {
                "base": [res.base.r1, res.base.r2],
                "improved": [res.improved.r1, res.improved.r2],
                "gamma": res.gamma,
                "feasible": res.feasible,
                "rfb": res.rfb,
            }
    print("\n".join(lines))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(result_json, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def cmd_fm_demo(args) -> int:
    """Print the scheme's raw constraint system and its bin-rate projection."""
    from .fme import derive_rate_constraints, is_feasible, scheme_constraints
    from .regions import mi_terms

    ch = parse_channel(args.channel)
    if ch.nx != 2 or ch.ny1 != 2:
        raise ConfigError("the demo derives constraints for binary-input channels")
    aux = AuxCoding.xor_family(args.alpha, args.beta)
    cols = mi_terms(ch, aux)
    values = {
        "i_u_y1": float(cols[0]),
        "i_u_y2": float(cols[1]),
        "i_x_yty2_u": float(cols[2]),
        "i_yt_y1_uy2": float(cols[3]),
    }
    raw = scheme_constraints(values, args.rfb)
    projected = derive_rate_constraints(values, args.rfb)
    print("mutual-information values:")
    for k, v in values.items():
        print(f"  {k} = {v:.6f}")
    print("scheme constraints over (r1, r2, rt):")
    print(raw.pretty())
    print("after eliminating the bin rate rt:")
    print(projected.pretty())
    print(f"feasible: {is_feasible(projected)}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    ch = parse_channel(args.channel)
    if ch.nx != 2 or ch.ny1 != 2:
        raise ConfigError("the simulator front end drives binary-input channels")
    if not 0.0 < args.margin < 1.0:
        raise ConfigError("--margin must lie strictly between 0 and 1")
    n_values = [int(v) for v in args.n.split(",")]
    aux = AuxCoding.xor_family(args.alpha, args.beta)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    reports = []
    for n in n_values:
        params = rates_from_aux(
            ch,
            aux,
            rfb=args.rfb,
            margin=args.margin,
            n=n,
            blocks=args.blocks,
            epsilon=args.eps,
            seed=args.seed,
        )
        est = estimate_error(ch, aux, params, args.trials)
        rows.append((n, est.p_err, est.ci95))
        reports.append(est.to_dict())
    csv_path = outdir / "sim_results.csv"
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("n,p_err,ci95\n")
        for n, p_err, ci in rows:
            fh.write(f"{n},{_fmt(p_err)},{_fmt(ci)}\n")
    with open(outdir / "sim_report.json", "w", encoding="utf-8") as fh:
        json.dump(
            {
                "channel": args.channel,
                "alpha": args.alpha,
                "beta": args.beta,
                "margin": args.margin,
                "rfb": args.rfb,
                "trials": args.trials,
                "seed": args.seed,
                "sweeps": reports,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    for n, p_err, ci in rows:
        print(f"n={n}: p_err={_fmt(p_err)} (ci95 +/- {_fmt(ci)})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bcfb",
        description="rate regions and scheme simulation for broadcast channels "
        "with rate-limited feedback",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("region", help="write frontier CSVs for selected regions")
    p.add_argument("--channel", required=True, help="bsbc:p1,p2 | bebc:d1,d2 | spec.json")
    p.add_argument("--rfb", type=float, default=0.0, help="feedback rate (bits/use)")
    p.add_argument("--regions", default="nofb", help=f"comma list from {REGION_TOKENS}")
    p.add_argument("--grid", type=int, default=40, help="search resolution")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(fn=cmd_region)

    p = sub.add_parser("figure2", help="no-feedback vs feedback frontier sweep (bsbc)")
    p.add_argument("--p1", default="0.2,0.25,0.3", help="comma list of receiver-1 crossovers")
    p.add_argument("--p2", type=float, default=0.1)
    p.add_argument("--rfb", type=float, default=0.85)
    p.add_argument("--grid", type=int, default=201)
    p.add_argument("--out", default=".")
    p.set_defaults(fn=cmd_figure2)

    p = sub.add_parser("check", help="degradedness, less-noisy, and improvement report")
    p.add_argument("--channel", required=True)
    p.add_argument("--rfb", type=float, default=0.01, help="budget for the improvement demo")
    p.add_argument("--alpha", type=float, default=0.15, help="base-point family parameter")
    p.add_argument("--grid", type=int, default=20)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-9, help="degradedness tolerance per entry")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="", help="optional JSON report path")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("fm-demo", help="print the derived rate-constraint systems")
    p.add_argument("--channel", required=True)
    p.add_argument("--rfb", type=float, default=0.85)
    p.add_argument("--alpha", type=float, default=0.25, help="cloud-to-input flip rate")
    p.add_argument("--beta", type=float, default=0.35, help="compression noise")
    p.set_defaults(fn=cmd_fm_demo)

    p = sub.add_parser("simulate", help="Monte Carlo block-length sweep")
    p.add_argument("--channel", required=True)
    p.add_argument("--rfb", type=float, default=0.85)
    p.add_argument("--alpha", type=float, default=0.15, help="cloud-to-input flip rate")
    p.add_argument("--beta", type=float, default=0.05, help="compression noise")
    p.add_argument("--margin", type=float, default=0.8, help="fraction of the rate caps")
    p.add_argument("--n", default="200,400,800", help="comma list of block lengths")
    p.add_argument("--blocks", type=int, default=4, help="message blocks per trial")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--eps", type=float, default=0.35, help="typicality tolerance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(fn=cmd_simulate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RegionError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SchemeError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
