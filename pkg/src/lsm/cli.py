"""Command-line pipeline: ingest, cleanse, profile, cluster, report,
compare, sweep, synth.

Exit codes: 0 success, 1 usage error, 2 data error. Option values resolve
as flag, then JSON config file (--config), then built-in default, and the
effective configuration is logged to stderr at startup so every run is
self-describing. Outputs carry no timestamps; reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import cleanse as cleanse_mod
from . import cluster as cluster_mod
from . import metrics, profiles, report, synth
from .errors import LoadShapeError
from .ingest import assemble_series, parse_csv
from .store import STATUS_RAW, MeterStore

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


class _Config:
    """Flag > config file > default resolution, logging each effective value."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file: dict = {}
        path = getattr(args, "config", None)
        if path:
            self.file = json.loads(Path(path).read_text(encoding="utf-8"))
            if not isinstance(self.file, dict):
                raise ValueError(f"{path}: config must be a JSON object")
        self.effective: dict = {}

    def get(self, name: str, default):
        value = getattr(self.args, name, None)
        if value is None:
            value = self.file.get(name, default)
        self.effective[name] = value
        return value

    def log(self, command: str):
        pairs = " ".join(f"{k}={v!r}" for k, v in sorted(self.effective.items()))
        logger.info("%s config: %s", command, pairs)


def _threads(cfg: _Config) -> int:
    value = cfg.get("threads", None)
    if value is None:
        value = os.environ.get("LSM_THREADS")
    if value is None:
        value = os.cpu_count() or 1
    threads = int(value)
    if threads < 1:
        raise ValueError("threads must be at least 1")
    return threads


def _cmd_ingest(args) -> int:
    cfg = _Config(args)
    cfg.effective.update(input=args.input, store=args.store)
    cfg.log("ingest")
    readings = parse_csv(args.input)
    series_list = assemble_series(readings)
    store = MeterStore(args.store)
    for series in series_list:
        store.save(series, status=STATUS_RAW)
    print(f"ingested {len(series_list)} accounts ({len(readings)} readings) "
          f"into {args.store}")
    return 0


def _cmd_cleanse(args) -> int:
    cfg = _Config(args)
    config = cleanse_mod.CleanseConfig(
        short_gap_max_hours=cfg.get("short_gap_max_hours", 6.0),
        est_run_threshold_slots=cfg.get("est_run_threshold", 12),
        est_long_max_hours=cfg.get("est_long_max_hours", 24.0),
        drop_quality_frac=cfg.get("drop_quality_frac", 0.20),
        zero_run_exempt=not cfg.get("no_zero_exempt", False),
    )
    threads = _threads(cfg)
    cfg.log("cleanse")
    store = MeterStore(args.store)
    result = cleanse_mod.cleanse_pipeline(store, config, threads=threads)
    dropped = result.dropped_accounts()
    print(f"cleansed {len(result.accounts)} accounts, dropped {len(dropped)}"
          + (f": {', '.join(dropped)}" if dropped else ""))
    return 0


def _filter_label(months: list[int], days: str, years: list[int] | None) -> str:
    parts = ["".join(f"m{m:02d}" for m in sorted(months)), days]
    if years:
        parts.append("".join(f"y{y}" for y in sorted(years)))
    return "-".join(parts)


def _cmd_profile(args) -> int:
    cfg = _Config(args)
    months = cfg.get("months", None)
    if not months:
        raise ValueError("--months is required")
    days = cfg.get("days", "all")
    years = cfg.get("years", None)
    normalize = not cfg.get("no_normalize", False)
    aggregate = not cfg.get("keep_15min", False)
    cfg.log("profile")
    day_kind = {"weekdays": profiles.WEEKDAYS,
                "weekends": profiles.WEEKENDS,
                "all": profiles.ALL_DAYS}[days]
    cal = profiles.CalendarFilter(
        months=frozenset(months),
        day_kind=day_kind,
        years=frozenset(years) if years else None,
        label=_filter_label(months, days, years),
    )
    store = MeterStore(args.store)
    pset = profiles.build_profiles(store, cal, normalize=normalize,
                                   aggregate=aggregate)
    if pset.N == 0:
        raise LoadShapeError("no account produced a profile under this filter")
    profiles.profiles_to_csv(pset, args.out)
    skipped = "" if not pset.skipped else f", skipped {len(pset.skipped)}"
    print(f"wrote {pset.N} profiles ({cal.label}) to {args.out}{skipped}")
    for account_id, reason in sorted(pset.skipped.items()):
        print(f"  skipped {account_id}: {reason}", file=sys.stderr)
    return 0


def _cmd_cluster(args) -> int:
    cfg = _Config(args)
    k = args.k
    if k is None or k < 1:
        raise ValueError("-k must be a positive integer")
    measure = metrics.Measure(cfg.get("measure", "euclidean"))
    config = cluster_mod.KMeansConfig(
        k=k,
        seed=cfg.get("seed", 0),
        restarts=cfg.get("restarts", 10),
        max_iter=cfg.get("max_iter", 300),
        tol=cfg.get("tol", 1e-6),
    )
    matrix_out = cfg.get("matrix_out", None)
    cfg.log("cluster")
    pset = profiles.profiles_from_csv(args.profiles)
    clustering = cluster_mod.kmeans(pset, config)
    payload = cluster_mod.clustering_to_dict(clustering)
    payload["measure"] = measure.value
    Path(args.out).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if matrix_out:
        metrics.matrix_to_csv(metrics.pairwise_matrix(pset, measure), matrix_out)
    sizes = sorted((clustering.members(c) for c in range(clustering.k)),
                   key=len, reverse=True)
    print(f"k={clustering.k} objective={clustering.objective!r} "
          f"iterations={clustering.iterations} "
          f"sizes={[len(m) for m in sizes]}")
    return 0


def _cmd_report(args) -> int:
    cfg = _Config(args)
    level = cfg.get("open_close_level", 0.5)
    z_threshold = cfg.get("z_threshold", 2.0)
    plots_dir = cfg.get("plots", None)
    cfg.log("report")
    clustering = cluster_mod.load_clustering(args.clusters)
    pset = profiles.profiles_from_csv(args.profiles)
    reports = report.cluster_means(pset, clustering)
    for rep in reports:
        rep.label = report.infer_open_close(rep.mean_profile, level=level).label
    deviations = report.deviation_scan(pset, clustering, z_threshold=z_threshold)
    if plots_dir:
        out_dir = Path(plots_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for rep in reports:
            report.emit_cluster_plot(pset, clustering, rep.cluster,
                                     out_dir / f"cluster_{rep.cluster:02d}.svg",
                                     level=level)
    report.emit_summary(reports, deviations, drift=None,
                        json_path=cfg.get("out", None))
    return 0


def _cmd_compare(args) -> int:
    cfg = _Config(args)
    cfg.effective.update(a=args.a, b=args.b)
    cfg.log("compare")
    drift = report.compare_periods(cluster_mod.load_clustering(args.a),
                                   cluster_mod.load_clustering(args.b))
    payload = {
        "common": drift.common,
        "relocated": drift.relocated,
        "matching": {str(k): v for k, v in sorted(drift.matching.items())},
        "flows": [{"a": f.a_cluster, "b": f.b_cluster, "count": f.count}
                  for f in drift.flows],
        "size_a": {str(k): v for k, v in sorted(drift.size_a.items())},
        "size_b": {str(k): v for k, v in sorted(drift.size_b.items())},
    }
    out = cfg.get("out", None)
    if out:
        Path(out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
    print(f"{drift.relocated} of {drift.common} common accounts relocated")
    for flow in drift.flows:
        moved = "" if drift.matching.get(flow.a_cluster) == flow.b_cluster \
            else " (moved)"
        print(f"  {flow.count} accounts: cluster {flow.a_cluster} -> "
              f"{flow.b_cluster}{moved}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _Config(args)
    k_min = args.k_min
    k_max = args.k_max
    if k_min < 1 or k_max < k_min:
        raise ValueError("need 1 <= --k-min <= --k-max")
    config = cluster_mod.KMeansConfig(
        k=1,
        seed=cfg.get("seed", 0),
        restarts=cfg.get("restarts", 10),
        max_iter=cfg.get("max_iter", 300),
        tol=cfg.get("tol", 1e-6),
    )
    cfg.log("sweep")
    pset = profiles.profiles_from_csv(args.profiles)
    print("k\tobjective")
    for point in cluster_mod.sweep_k(pset, range(k_min, k_max + 1), config):
        print(f"{point.k}\t{point.objective!r}")
    return 0


def _cmd_synth(args) -> int:
    cfg = _Config(args)
    if args.accounts < 1:
        raise ValueError("--accounts must be positive")
    if not 1 <= args.clusters <= len(synth.STANDARD_SHAPES):
        raise ValueError(f"--clusters must be in 1..{len(synth.STANDARD_SHAPES)}")
    rates = cfg.get("defect_rates", None) or [0.0, 0.0, 0.0]
    if len(rates) != 3:
        raise ValueError("--defect-rates takes three values: short,long,estimated")
    spec = synth.SynthSpec(
        account_count=args.accounts,
        shapes=synth.standard_shapes(args.clusters),
        noise_sigma=cfg.get("noise", 0.0),
        years=cfg.get("years", 1),
        months=tuple(cfg.get("months", None) or ()) or None,
        interval_minutes=cfg.get("interval", 60),
        short_gap_rate=rates[0],
        long_gap_rate=rates[1],
        est_run_rate=rates[2],
        seed=cfg.get("seed", 0),
    )
    cfg.log("synth")
    truth = synth.write_dataset(spec, args.out)
    print(f"wrote {spec.account_count} accounts ({len(truth.defects)} defects) "
          f"to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lsm", description=(
        "Mine smart-meter interval data: cleanse readings, build average "
        "daily load profiles, cluster accounts, and report peer groups."))
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", help="JSON file supplying defaults for flags")
        return p

    p = add("ingest", _cmd_ingest, "load a readings CSV into a meter store")
    p.add_argument("--input", required=True, help="CSV of account_id,timestamp,energy_kwh")
    p.add_argument("--store", required=True, help="store directory")

    p = add("cleanse", _cmd_cleanse, "fill gaps, resolve estimated reads, drop bad accounts")
    p.add_argument("--store", required=True)
    p.add_argument("--short-gap-max-hours", type=float, dest="short_gap_max_hours")
    p.add_argument("--est-run-threshold", type=int, dest="est_run_threshold")
    p.add_argument("--est-long-max-hours", type=float, dest="est_long_max_hours")
    p.add_argument("--drop-quality-frac", type=float, dest="drop_quality_frac")
    p.add_argument("--no-zero-exempt", action="store_true", default=None,
                   dest="no_zero_exempt")
    p.add_argument("--threads", type=int)

    p = add("profile", _cmd_profile, "build averaged, normalized daily profiles")
    p.add_argument("--store", required=True)
    p.add_argument("--months", type=_int_list, help="e.g. 6 or 9,10")
    p.add_argument("--days", choices=("weekdays", "weekends", "all"))
    p.add_argument("--years", type=_int_list)
    p.add_argument("--no-normalize", action="store_true", default=None,
                   dest="no_normalize")
    p.add_argument("--keep-15min", action="store_true", default=None,
                   dest="keep_15min")
    p.add_argument("--out", required=True)

    p = add("cluster", _cmd_cluster, "k-means over a profile CSV")
    p.add_argument("--profiles", required=True)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--measure", choices=[m.value for m in metrics.Measure])
    p.add_argument("--seed", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--tol", type=float)
    p.add_argument("--matrix-out", dest="matrix_out",
                   help="also write the pairwise distance matrix CSV")
    p.add_argument("--out", required=True)

    p = add("report", _cmd_report, "cluster means, labels, deviations, plots")
    p.add_argument("--clusters", required=True)
    p.add_argument("--profiles", required=True)
    p.add_argument("--plots", help="directory for per-cluster SVG plots")
    p.add_argument("--open-close-level", type=float, dest="open_close_level")
    p.add_argument("--z-threshold", type=float, dest="z_threshold")
    p.add_argument("--out", help="summary JSON path")

    p = add("compare", _cmd_compare, "cluster drift between two periods")
    p.add_argument("--a", required=True, help="period A clustering JSON")
    p.add_argument("--b", required=True, help="period B clustering JSON")
    p.add_argument("--out", help="drift JSON path")

    p = add("sweep", _cmd_sweep, "objective versus k table")
    p.add_argument("--profiles", required=True)
    p.add_argument("--k-min", type=int, required=True, dest="k_min")
    p.add_argument("--k-max", type=int, required=True, dest="k_max")
    p.add_argument("--seed", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--tol", type=float)

    p = add("synth", _cmd_synth, "generate a synthetic dataset with ground truth")
    p.add_argument("--accounts", type=int, required=True)
    p.add_argument("--clusters", type=int, required=True,
                   help=f"number of planted shapes (1..{len(synth.STANDARD_SHAPES)})")
    p.add_argument("--noise", type=float)
    p.add_argument("--defect-rates", type=_float_list, dest="defect_rates",
                   help="short,long,estimated probabilities per account-month")
    p.add_argument("--years", type=int)
    p.add_argument("--months", type=_int_list)
    p.add_argument("--interval", type=int, choices=(15, 60))
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)

    return parser


def run(argv=None) -> int:
    if not logging.getLogger().handlers:
        logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                            format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # our error() raises 1; --help raises 0
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"lsm {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except LoadShapeError as exc:
        print(f"lsm {args.command}: data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"lsm {args.command}: data error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
