"""File-level orchestration: load volumes, run the analysis, write reports."""

import csv
import hashlib
import json
import logging
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import PipelineConfig, analyze, theoretical_null
from .errors import DataError
from .spatial import Mask
from .volio import read_dvol, read_mvol, write_mvol, write_svol

log = logging.getLogger(__name__)

REPORT_SCHEMA = "axisfdr-report/1"
SWEEP_SCHEMA = "axisfdr-sweep/1"
TABLE_FIELDS = ["b", "N", "p0_hat", "a_hat", "nu_hat", "T90", "alpha", "u_alpha", "R", "n_clusters", "largest_sizes"]


def expand_inputs(items):
    """Directories expand to their sorted ``*.dvol`` files; files pass through."""
    paths = []
    for item in items:
        p = Path(item)
        if p.is_dir():
            found = sorted(p.glob("*.dvol"))
            if not found:
                raise DataError(f"{p}: no .dvol files")
            paths.extend(found)
        elif p.exists():
            paths.append(p)
        else:
            raise DataError(f"{p}: no such file or directory")
    return paths


def load_groups(config):
    groups = [[read_dvol(p) for p in expand_inputs(g)] for g in (config.group1, config.group2)]
    if config.mask is None:
        mask = Mask.full(groups[0][0].geometry)
    else:
        mask = read_mvol(config.mask)
    return groups, mask


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dump_json(path, obj):
    Path(path).write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")


def config_hash(config):
    d = config.to_dict()
    d.pop("out", None)
    blob = json.dumps(jsonable(d), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def alpha_tag(alpha):
    return f"{alpha:g}".replace(".", "p")


def build_report(result):
    cfg = result.config
    d = cfg.to_dict()
    d.pop("out", None)
    per_alpha = []
    for r in result.per_alpha:
        per_alpha.append(
            {
                "alpha": r.alpha,
                "u_alpha": r.u_alpha,
                "R": r.count,
                "n_clusters": len(r.cluster_sizes),
                "cluster_sizes": r.cluster_sizes,
                "discoveries_file": f"discoveries_alpha{alpha_tag(r.alpha)}.mvol",
            }
        )
    fit = None if result.fit is None else result.fit.as_dict()
    null = result.null_used
    return {
        "schema_version": REPORT_SCHEMA,
        "provenance": {"config_hash": config_hash(cfg), "seed": cfg.seed, "version": __version__},
        "config": d,
        "mask_size": result.mask.size,
        "defects": [list(v) for v in result.raw.defects],
        "fit": fit,
        "fit_error": result.fit_error,
        "null_used": {"source": null.source, "a": getattr(null, "a", getattr(null, "scale", None)),
                      "nu": getattr(null, "nu", getattr(null, "df", None))},
        "p0_used": result.p0_used,
        "histogram": {"bin_width": result.histogram.bin_width, "counts": result.histogram.counts},
        "per_alpha": per_alpha,
        "table": result.table_rows(),
        "warnings": result.warnings,
    }


def write_table_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_FIELDS + ["error"])
        for row in rows:
            w.writerow([_cell(row.get(k)) for k in TABLE_FIELDS] + [row.get("error", "")])


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return ";".join(str(x) for x in v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_histogram_csv(path, result):
    h = result.histogram
    edges = h.edges
    n, w = h.total, h.bin_width
    mid = h.midpoints
    tnull = theoretical_null(result.config.target_df, result.config.b)
    with np.errstate(all="ignore"):
        t_exp = n * w * np.nan_to_num(tnull.density(mid))
        e_exp = (n * w * result.fit.p0 * np.nan_to_num(result.fit.density(mid))) if result.fit else None
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["lower", "upper", "count", "theoretical_expected", "empirical_expected"])
        for i, c in enumerate(h.counts):
            wr.writerow([repr(float(edges[i])), repr(float(edges[i + 1])), int(c), repr(float(t_exp[i])),
                         "" if e_exp is None else repr(float(e_exp[i]))])


def write_fdr_csv(path, result):
    curves = result.curves
    theo = curves["theoretical"]
    emp = curves.get("empirical")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["u", "R", "fdr_theoretical", "fdr_empirical", "fdr_selected"])
        for i, u in enumerate(theo.thresholds):
            wr.writerow([repr(float(u)), int(theo.tail_counts[i]), repr(float(theo.fdr_hat[i])),
                         "" if emp is None else repr(float(emp.fdr_hat[i])), repr(float(result.curve.fdr_hat[i]))])


def write_peak_slice_csv(path, result):
    data = np.where(result.mask.data, result.statistic.data, np.nan)
    if not np.any(np.isfinite(data)):
        return
    z = int(np.unravel_index(np.nanargmax(data), data.shape)[2])
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["x", "y", "z", "value"])
        for x in range(data.shape[0]):
            for y in range(data.shape[1]):
                v = data[x, y, z]
                if np.isfinite(v):
                    wr.writerow([x, y, z, repr(float(v))])


def write_outputs(result, out):
    from .plotting import fdr_figure_svg

    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"{out}: cannot create output directory ({exc.strerror})") from exc
    report = build_report(result)
    dump_json(out / "report.json", report)
    write_table_csv(out / "table.csv", report["table"])
    write_histogram_csv(out / "histogram.csv", result)
    write_fdr_csv(out / "fdr_curve.csv", result)
    write_peak_slice_csv(out / "peak_slice.csv", result)
    write_svol(out / "statistic.svol", result.statistic)
    write_mvol(out / "mask_effective.mvol", result.mask)
    geom = result.mask.geometry
    for r, entry in zip(result.per_alpha, report["per_alpha"]):
        sel = np.zeros(geom.dims, bool)
        if len(r.voxels):
            sel[tuple(r.voxels.T)] = True
        write_mvol(out / entry["discoveries_file"], Mask(geom, sel))
    fdr_figure_svg(result, out / "fdr_plot.svg")
    return report


def run_pipeline(config):
    """Load inputs named in ``config``, analyze, and write outputs to ``config.out``."""
    groups, mask = load_groups(config)
    result = analyze(groups, mask, config)
    report = build_report(result) if config.out is None else write_outputs(result, config.out)
    return result, report


def load_config(path, **overrides):
    """PipelineConfig from a JSON file, with non-None keyword overrides applied."""
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise DataError(f"{path}: cannot read config ({exc})") from exc
        unknown = set(data) - set(PipelineConfig.__dataclass_fields__)
        if unknown:
            raise DataError(f"{path}: unknown config keys {sorted(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig(**data)


def read_report(path):
    try:
        report = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise DataError(f"{path}: cannot read report ({exc})") from exc
    if report.get("schema_version") not in (REPORT_SCHEMA, SWEEP_SCHEMA):
        raise DataError(f"{path}: unsupported schema {report.get('schema_version')!r}")
    return report


def format_report(report):
    """Human-readable results-table summary of a pipeline or sweep report."""
    rows = report.get("table") or report.get("rows") or []
    lines = []
    head = f"{'b':>3} {'N':>7} {'p0_hat':>7} {'a_hat':>7} {'nu_hat':>8} {'T90':>7} {'alpha':>6} {'u_alpha':>8} {'R':>6} {'#clust':>6}  clust sz"
    lines.append(head)
    for r in rows:
        if r.get("error") and r.get("N") is None:
            lines.append(f"{r['b']:>3} {'':>7} {'':>7} {'':>7} {'':>8} {'':>7} {r['alpha']:>6g}  error: {r['error']}")
            continue
        sizes = r.get("largest_sizes") or []
        more = "<= " if r.get("n_clusters", 0) > len(sizes) else ""
        lines.append(
            f"{r['b']:>3} {r['N']:>7} {_fmt(r.get('p0_hat'), 3):>7} {_fmt(r.get('a_hat'), 3):>7} "
            f"{_fmt(r.get('nu_hat'), 2):>8} {_fmt(r.get('T90'), 2):>7} {r['alpha']:>6g} "
            f"{_fmt(r.get('u_alpha'), 2):>8} {r['R']:>6} {r['n_clusters']:>6}  {more}{','.join(map(str, sizes))}"
        )
    for entry in report.get("per_alpha", []):
        if entry["R"] == 0:
            lines.append(f"alpha={entry['alpha']:g}: 0 interesting voxels")
        else:
            lines.append(
                f"alpha={entry['alpha']:g}: {entry['R']} interesting voxels in {entry['n_clusters']} clusters "
                f"(sizes {', '.join(map(str, entry['cluster_sizes']))})"
            )
    for w in report.get("warnings", []):
        lines.append(f"warning: {w}")
    return "\n".join(lines)


def _fmt(v, digits):
    return "-" if v is None else f"{v:.{digits}f}"
