"""``axisfdr`` command line.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical or fit failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import DEFAULT_ALPHAS, PipelineConfig, analyze_statistic
from .errors import DataError, DomainError, NumericalError
from .pipeline import (
    SWEEP_SCHEMA,
    alpha_tag,
    config_hash,
    dump_json,
    expand_inputs,
    format_report,
    jsonable,
    load_config,
    load_groups,
    read_report,
    run_pipeline,
    write_table_csv,
)
from .simulator import SimulationSpec, box_region, simulate_volume_pair, sweep_statistic
from .spatial import GridGeometry, Mask, box_smooth, extract_clusters, shrink_mask
from .teststat import StatisticMap, statistic_map
from .volio import read_dvol, read_mvol, read_svol, write_dvol, write_mvol, write_svol

log = logging.getLogger("axisfdr")


def _odd(text):
    b = int(text)
    if b < 1 or b % 2 == 0:
        raise argparse.ArgumentTypeError(f"must be an odd positive integer, got {text}")
    return b


def _mkdir(path):
    try:
        Path(path).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"{path}: cannot create directory ({exc.strerror})") from exc
    return Path(path)


# ---------------------------------------------------------------- subcommands


def cmd_simulate(args):
    geom = GridGeometry(tuple(args.dims), tuple(args.spacing))
    signal = None
    if args.signal_box:
        *lo, size = args.signal_box
        signal = box_region(geom.dims, lo, size)
    spec = SimulationSpec(
        geom, n1=args.n1, n2=args.n2, kappa=args.kappa, signal=signal, delta_deg=args.delta, seed=args.seed
    )
    pair = simulate_volume_pair(spec)
    out = _mkdir(args.out)
    for name, group in (("group1", pair.group1), ("group2", pair.group2)):
        d = _mkdir(out / name)
        for k, vol in enumerate(group):
            write_dvol(d / f"subject_{k:02d}.dvol", vol)
    write_mvol(out / "truth.mvol", pair.truth)
    write_mvol(out / "mask.mvol", pair.mask)
    dump_json(
        out / "spec.json",
        {"dims": geom.dims, "spacing": geom.spacing, "n1": args.n1, "n2": args.n2, "kappa": args.kappa,
         "delta_deg": args.delta, "signal_box": args.signal_box, "seed": args.seed},
    )
    print(f"wrote {args.n1 + args.n2} direction volumes, mask and truth to {out}")
    return 0


def cmd_teststat(args):
    groups = [[read_dvol(p) for p in expand_inputs(g)] for g in (args.group1, args.group2)]
    mask = read_mvol(args.mask) if args.mask else Mask.full(groups[0][0].geometry)
    smap = statistic_map(groups, mask, target_df=None if args.raw else args.target_df)
    write_svol(args.out, smap.volume)
    out_mask = args.out_mask or str(Path(args.out).with_suffix("")) + "_mask.mvol"
    write_mvol(out_mask, smap.mask)
    print(f"{smap.mask.size} voxels, {len(smap.defects)} defects; df = ({smap.df_num}, {smap.df_den})")
    for v in smap.defects:
        print(f"defect {v[0]} {v[1]} {v[2]}")
    return 0


def cmd_smooth(args):
    vol = read_svol(args.input)
    sm = box_smooth(vol, args.smooth)
    write_svol(args.out, sm)
    if args.mask:
        shrunk = shrink_mask(read_mvol(args.mask), sm)
        out_mask = args.out_mask or str(Path(args.out).with_suffix("")) + "_mask.mvol"
        write_mvol(out_mask, shrunk)
        print(f"mask size {shrunk.size}")
    return 0


def _config_from_args(args, **extra):
    return load_config(
        getattr(args, "config", None),
        mask=getattr(args, "mask", None),
        target_df=args.target_df,
        bin_width=args.bin_width,
        fit_upper=args.fit_upper,
        b=args.smooth,
        alphas=tuple(args.alpha) if args.alpha else None,
        null=args.null,
        p0=args.p0,
        seed=args.seed,
        **extra,
    )


def cmd_fdr(args):
    vol = read_svol(args.input)
    mask = read_mvol(args.mask) if args.mask else Mask.full(vol.geometry)
    mask = Mask(mask.geometry, mask.data & np.isfinite(vol.data))
    cfg = _config_from_args(args)
    res = analyze_statistic(StatisticMap(vol, mask, [], 2, 20), cfg)
    out = _mkdir(args.out)
    with open(out / "fdr_curve.csv", "w") as fh:
        fh.write("u,R,fdr\n")
        c = res.curve
        for u, r, f in zip(c.thresholds, c.tail_counts, c.fdr_hat):
            fh.write(f"{float(u)!r},{int(r)},{float(f)!r}\n")
    dump_json(out / "fit.json", {"fit": None if res.fit is None else res.fit.as_dict(), "fit_error": res.fit_error,
                                 "p0_used": res.p0_used, "null": res.null_used.source})
    for r in res.per_alpha:
        sel = np.zeros(vol.geometry.dims, bool)
        if len(r.voxels):
            sel[tuple(r.voxels.T)] = True
        write_mvol(out / f"discoveries_alpha{alpha_tag(r.alpha)}.mvol", Mask(vol.geometry, sel))
        print(f"alpha={r.alpha:g} u_alpha={r.u_alpha} R={r.count}")
    return 0


def cmd_cluster(args):
    sel = read_mvol(args.input)
    cl = extract_clusters(sel.data, sel.geometry)
    summary = {"n_clusters": len(cl), "sizes": cl.sizes, "clusters": [c.tolist() for c in cl.clusters]}
    if args.out:
        dump_json(args.out, summary)
    print(f"{len(cl)} clusters; sizes {cl.sizes}")
    return 0


def cmd_pipeline(args):
    cfg = _config_from_args(args, out=args.out)
    if args.group1:
        cfg.group1 = list(args.group1)
    if args.group2:
        cfg.group2 = list(args.group2)
    if not cfg.group1 or not cfg.group2:
        raise DomainError("both --group1 and --group2 (or config entries) are required")
    result, report = run_pipeline(cfg)
    print(format_report(report))
    return 0


def cmd_sweep(args):
    base = _config_from_args(args)
    if args.group1:
        base.group1 = list(args.group1)
    if args.group2:
        base.group2 = list(args.group2)
    groups, mask = load_groups(base)
    smap = statistic_map(groups, mask, target_df=base.target_df)
    b_values = args.b or [1, 3, 5, 7, 9]
    alphas = list(base.alphas)
    rows = sweep_statistic(smap, b_values, alphas, target_df=base.target_df, bin_width=base.bin_width,
                           fit_upper=base.fit_upper, null=base.null, p0=base.p0)
    out = _mkdir(args.out)
    write_table_csv(out / "sweep.csv", rows)
    d = base.to_dict()
    d.pop("out", None)
    dump_json(out / "sweep.json", {"schema_version": SWEEP_SCHEMA, "provenance": {"config_hash": config_hash(base),
              "seed": base.seed, "version": __version__}, "b_values": b_values, "config": d, "rows": rows})
    print(format_report({"rows": jsonable(rows)}))
    return 0


def cmd_report(args):
    print(format_report(read_report(args.report)))
    return 0


# ---------------------------------------------------------------- parser


def _analysis_flags(p, with_groups=True):
    if with_groups:
        p.add_argument("--group1", nargs="+", help="directory or .dvol files of group 1")
        p.add_argument("--group2", nargs="+", help="directory or .dvol files of group 2")
    p.add_argument("--mask", help=".mvol search region (default: whole grid)")
    p.add_argument("--config", help="JSON file with PipelineConfig fields; flags override it")
    p.add_argument("--smooth", type=_odd, default=None, metavar="B", help="box size b (odd, default 1)")
    p.add_argument("--alpha", type=float, action="append", help=f"FDR level, repeatable (default {DEFAULT_ALPHAS})")
    p.add_argument("--null", choices=["theoretical", "empirical"])
    p.add_argument("--p0", choices=["fit", "one"])
    p.add_argument("--bin-width", type=float)
    p.add_argument("--fit-upper", type=float)
    p.add_argument("--target-df", type=float)
    p.add_argument("--seed", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="axisfdr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write synthetic direction volumes")
    p.add_argument("--dims", type=int, nargs=3, default=[16, 16, 16])
    p.add_argument("--spacing", type=float, nargs=3, default=[2.0, 2.0, 3.0])
    p.add_argument("--n1", type=int, default=6)
    p.add_argument("--n2", type=int, default=6)
    p.add_argument("--kappa", type=float, default=50.0)
    p.add_argument("--delta", type=float, default=0.0, help="angle between group means in the signal box (deg)")
    p.add_argument("--signal-box", type=int, nargs=4, metavar=("X", "Y", "Z", "SIZE"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("teststat", help="voxelwise Watson statistic map")
    p.add_argument("--group1", nargs="+", required=True)
    p.add_argument("--group2", nargs="+", required=True)
    p.add_argument("--mask")
    p.add_argument("--target-df", type=float, default=2.0)
    p.add_argument("--raw", action="store_true", help="keep the F scale (no chi-square transform)")
    p.add_argument("--out", required=True)
    p.add_argument("--out-mask")
    p.set_defaults(func=cmd_teststat)

    p = sub.add_parser("smooth", help="box-smooth a statistic volume")
    p.add_argument("--input", required=True)
    p.add_argument("--smooth", type=_odd, required=True, metavar="B")
    p.add_argument("--mask")
    p.add_argument("--out", required=True)
    p.add_argument("--out-mask")
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("fdr", help="empirical null, FDR curve and thresholds for a statistic volume")
    p.add_argument("--input", required=True)
    _analysis_flags(p, with_groups=False)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fdr)

    p = sub.add_parser("cluster", help="26-connected clusters of a selection mask")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("pipeline", help="end-to-end analysis")
    _analysis_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("sweep", help="results-table sweep over smoothing sizes")
    _analysis_flags(p)
    p.add_argument("--b", type=_odd, nargs="+", help="smoothing sizes (default 1 3 5 7 9)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="print a report or sweep summary")
    p.add_argument("report")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except DataError as exc:
        print(f"axisfdr {args.command}: data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        diag = getattr(exc, "diagnostics", None)
        extra = f" {json.dumps(jsonable(diag))}" if diag else ""
        print(f"axisfdr {args.command}: numerical failure: {exc}{extra}", file=sys.stderr)
        return 4
    except DomainError as exc:
        print(f"axisfdr {args.command}: usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
