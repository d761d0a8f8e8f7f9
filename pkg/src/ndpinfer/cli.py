"""Command-line front end.

Subcommands:

* ``infer``    -- run the weighted-simulation engine on a scenario or on
                  data + config files, evaluate queries, write a JSON
                  report, per-query weighted-sample CSVs, optional density
                  figures, and a run manifest.
* ``density``  -- smooth a weighted-sample CSV into a density curve (CSV +
                  JSON sidecar + SVG figure).
* ``oracle``   -- exact partition-enumeration posterior for small M.
* ``gamer``    -- pdf/cdf/sample/discretize of the gamer distribution.
* ``examples`` -- export the built-in scenario data and configs.

Exit codes: 0 success, 1 domain/validation error, 2 I/O error.  Reports
contain no timestamps and render floats with 17 significant digits, so a
repeated run with the same seed is byte-identical; timestamps live in the
manifest only.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import os
import sys

import numpy as np

from . import __version__
from .datasets import SCENARIO_NAMES, load_scenario
from .engine import EngineOptions, run_batch, trim_heaviest
from .errors import NdpError, ValidationError
from .gamer import GamerParams, cdf as gamer_cdf, discretize, pdf as gamer_pdf, sample as gamer_sample
from .kde import DEFAULT_GRID_POINTS, effective_count, kde, scott_bandwidth, scott_factor
from .model import (
    ModelConfig,
    dump_counts_csv,
    load_counts_csv,
    load_observations_csv,
    load_observations_json,
)
from .oracle import enumerate_posterior, exact_expectation
from .queries import (
    WeightedSampleLaw,
    estimate,
    law_of,
    parse_query,
)
from .serialize import dumps, format_float


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    args.argv = list(argv) if argv is not None else sys.argv[1:]
    try:
        return args.func(args)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:  # NdpError and malformed numeric/JSON input
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ndpinfer", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(required=True)

    pi = sub.add_parser("infer", help="run the weighted-simulation engine")
    _add_model_args(pi)
    pi.add_argument("--K", type=int, default=None, help="number of simulations")
    pi.add_argument("--seed", type=int, default=0)
    pi.add_argument("--log-scale", type=float, default=None, help="log scale factor")
    pi.add_argument("--trim", type=int, default=None, help="drop the n heaviest simulations")
    pi.add_argument("--threads", type=int, default=1)
    pi.add_argument("--query", action="append", default=[], help="query (repeatable)")
    pi.add_argument("--out", required=True, help="output directory")
    pi.add_argument("--plot", action="store_true", help="render a density figure per query")
    pi.set_defaults(func=cmd_infer)

    pd = sub.add_parser("density", help="kernel density estimate of a sample CSV")
    pd.add_argument("--samples", required=True, help="weighted-sample CSV (atom,weight)")
    pd.add_argument("--bandwidth", default="auto", help="'auto' (Scott) or a positive real")
    pd.add_argument("--points", type=int, default=DEFAULT_GRID_POINTS)
    pd.add_argument("--clip", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    pd.add_argument("--out", required=True, help="output directory")
    pd.set_defaults(func=cmd_density)

    po = sub.add_parser("oracle", help="exact posterior for small instances")
    _add_model_args(po)
    po.add_argument("--query", action="append", default=[])
    po.add_argument("--top", type=int, default=5, help="partitions to list in the report")
    po.add_argument("--out", required=True)
    po.set_defaults(func=cmd_oracle)

    pg = sub.add_parser("gamer", help="gamer distribution utilities")
    pg.add_argument("action", choices=["pdf", "cdf", "sample", "discretize"])
    pg.add_argument("--r", type=float, required=True)
    pg.add_argument("--c", type=float, required=True)
    pg.add_argument("--alpha", type=float, required=True)
    pg.add_argument("--L", type=int, default=500, help="cells for discretize")
    pg.add_argument("--n", type=int, default=1000, help="draws for sample")
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--x-min", type=float, default=None)
    pg.add_argument("--x-max", type=float, default=None)
    pg.add_argument("--points", type=int, default=512)
    pg.add_argument("--out", required=True, help="output CSV path")
    pg.set_defaults(func=cmd_gamer)

    pe = sub.add_parser("examples", help="built-in scenario data")
    pe.add_argument("action", choices=["export", "list"])
    pe.add_argument("--name", action="append", default=[], help="scenario to export")
    pe.add_argument("--out", default=".", help="output directory for export")
    pe.set_defaults(func=cmd_examples)
    return p


def _add_model_args(sp):
    sp.add_argument("--scenario", choices=SCENARIO_NAMES, default=None)
    sp.add_argument("--data", default=None, help="observation file")
    sp.add_argument(
        "--format",
        choices=["auto", "csv", "json", "counts"],
        default="auto",
        help="observation file format",
    )
    sp.add_argument("--config", default=None, help="model config JSON")


def _load_inputs(args):
    """Resolve (data, config, scenario) from CLI flags."""
    if args.scenario is not None:
        if args.data or args.config:
            raise ValidationError("--scenario excludes --data/--config")
        sc = load_scenario(args.scenario)
        return sc.data, sc.config, sc
    if not args.data or not args.config:
        raise ValidationError("either --scenario or both --data and --config are required")
    import json as _json

    with open(args.config, "r", encoding="utf-8") as fh:
        config = ModelConfig.from_dict(_json.load(fh))
    fmt = args.format
    if fmt == "auto":
        if args.data.endswith(".json"):
            fmt = "json"
        else:
            with open(args.data, "r", encoding="utf-8") as fh:
                header = fh.readline()
            fmt = "counts" if header.startswith("row_id,count_0") else "csv"
    if fmt == "json":
        data = load_observations_json(args.data, config.L)
    elif fmt == "counts":
        data = load_counts_csv(args.data, config.L)
    else:
        data = load_observations_csv(args.data, config.L)
    return data, config, None


def _config_digest(config: ModelConfig) -> str:
    return hashlib.sha256(dumps(config.to_dict()).encode()).hexdigest()


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_manifest(out_dir, argv, seed, K, trim, config, outputs, started):
    manifest = {
        "argv": argv,
        "package_version": __version__,
        "seed": seed,
        "K": K,
        "trim": trim,
        "config_sha256": _config_digest(config),
        "outputs": sorted(outputs),
        "started": started,
        "finished": _now(),
    }
    _write_text(os.path.join(out_dir, "manifest.json"), dumps(manifest))


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _query_slug(text: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in text.strip())


def _law_csv(law: WeightedSampleLaw) -> str:
    atoms, weights = law.all_atoms()
    lines = ["atom,weight"]
    for a, w in zip(atoms, weights):
        lines.append(f"{format_float(a)},{format_float(w)}")
    return "\n".join(lines) + "\n"


def cmd_infer(args) -> int:
    data, config, scenario = _load_inputs(args)
    K = args.K if args.K is not None else (scenario.K if scenario else 10_000)
    log_scale = (
        args.log_scale
        if args.log_scale is not None
        else (scenario.log_scale_factor if scenario else 0.0)
    )
    trim = args.trim if args.trim is not None else (scenario.trim if scenario else 0)
    started = _now()
    options = EngineOptions(K=K, seed=args.seed, log_scale_factor=log_scale, threads=args.threads)
    batch = run_batch(data, config, options)
    if trim:
        batch = trim_heaviest(batch, trim)
    queries = list(args.query)
    if not queries and scenario is not None:
        queries = [t.query for t in scenario.targets]
    os.makedirs(args.out, exist_ok=True)
    outputs = []
    query_reports = []
    for text in queries:
        f = parse_query(text)
        value, se = estimate(batch, f)
        law = law_of(batch, f)
        slug = _query_slug(text)
        csv_name = f"samples_{slug}.csv"
        _write_text(os.path.join(args.out, csv_name), _law_csv(law))
        outputs.append(csv_name)
        query_reports.append(
            {"query": text, "expectation": value, "se": se, "samples_csv": csv_name}
        )
        if args.plot:
            fig_name = f"density_{slug}.svg"
            _render_density_figure(law, os.path.join(args.out, fig_name), title=text)
            outputs.append(fig_name)
    report = {
        "scenario": scenario.name if scenario else None,
        "config": config.to_dict(),
        "K": batch.K,
        "seed": args.seed,
        "log_scale_factor": log_scale,
        "trimmed": batch.trimmed,
        "ess_prime": batch.ess_prime,
        "ess_double_prime": batch.ess_double_prime,
        "queries": query_reports,
    }
    _write_text(os.path.join(args.out, "report.json"), dumps(report))
    outputs.append("report.json")
    _write_manifest(args.out, args.argv, args.seed, batch.K, trim, config, outputs, started)
    print(f"wrote report.json and {len(outputs) - 1} artifact(s) to {args.out}")
    return 0


def _load_law_csv(path) -> WeightedSampleLaw:
    import csv as _csv

    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["atom", "weight"]:
            raise ValidationError("sample CSV must start with header 'atom,weight'")
        atoms, weights = [], []
        for rec in reader:
            if not rec:
                continue
            atoms.append(float(rec[0]))
            weights.append(float(rec[1]))
    if not atoms:
        raise ValidationError("sample CSV has no atoms")
    w = np.asarray(weights)
    if np.any(w < 0):
        raise ValidationError("sample CSV has negative weights")
    total = w.sum()
    if not total > 0:
        raise ValidationError("sample CSV weights sum to zero")
    return WeightedSampleLaw(atoms=np.asarray(atoms), weights=w / total)


def _render_density_figure(law, path, title="", bandwidth="scott", points=DEFAULT_GRID_POINTS):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    curve = kde(law, bandwidth=bandwidth, points=points)
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.plot(curve.grid, curve.values, lw=1.4)
    ax.set_xlabel("value")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title)
    ax.set_ylim(bottom=0)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return curve


def cmd_density(args) -> int:
    law = _load_law_csv(args.samples)
    bw = "scott" if args.bandwidth == "auto" else float(args.bandwidth)
    clip = tuple(args.clip) if args.clip else None
    curve = kde(law, bandwidth=bw, points=args.points, clip=clip)
    os.makedirs(args.out, exist_ok=True)
    lines = ["x,density"]
    for x, v in zip(curve.grid, curve.values):
        lines.append(f"{format_float(x)},{format_float(v)}")
    _write_text(os.path.join(args.out, "density.csv"), "\n".join(lines) + "\n")
    sidecar = {
        "bandwidth": curve.bandwidth,
        "scott_factor": scott_factor(law),
        "scott_bandwidth": scott_bandwidth(law),
        "n_eff": effective_count(law),
        "points": int(curve.grid.size),
        "grid_min": float(curve.grid[0]),
        "grid_max": float(curve.grid[-1]),
    }
    _write_text(os.path.join(args.out, "density.json"), dumps(sidecar))
    _render_density_figure(law, os.path.join(args.out, "density.svg"), bandwidth=bw, points=args.points)
    print(f"wrote density.csv, density.json, density.svg to {args.out}")
    return 0


def cmd_oracle(args) -> int:
    data, config, scenario = _load_inputs(args)
    posterior = enumerate_posterior(data, config)
    queries = list(args.query)
    if not queries and scenario is not None:
        queries = [t.query for t in scenario.targets]
    query_reports = []
    for text in queries:
        f = parse_query(text)
        query_reports.append({"query": text, "value": exact_expectation(posterior, f, data, config)})
    top = [
        {"blocks": blocks, "probability": prob} for blocks, prob in posterior.top(args.top)
    ]
    report = {
        "scenario": scenario.name if scenario else None,
        "config": config.to_dict(),
        "partition_count": posterior.partition_count,
        "top_partitions": top,
        "queries": query_reports,
    }
    os.makedirs(args.out, exist_ok=True)
    _write_text(os.path.join(args.out, "oracle.json"), dumps(report))
    print(f"wrote oracle.json to {args.out}")
    return 0


def cmd_gamer(args) -> int:
    params = GamerParams(r=args.r, c=args.c, alpha=args.alpha)
    lines = []
    if args.action in ("pdf", "cdf"):
        lo = args.x_min if args.x_min is not None else params.c / 100.0
        hi = args.x_max if args.x_max is not None else params.c * 100.0
        if not (0 <= lo < hi):
            raise ValidationError("need 0 <= x-min < x-max")
        if args.action == "pdf" and lo == 0:
            lo = hi / args.points  # pdf domain is x > 0
        xs = np.linspace(lo, hi, args.points)
        fn = gamer_pdf if args.action == "pdf" else gamer_cdf
        lines.append("x,value")
        for x in xs:
            lines.append(f"{format_float(x)},{format_float(float(fn(params, x)))}")
    elif args.action == "sample":
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(args.seed)))
        draws = gamer_sample(params, rng, size=args.n)
        lines.append("sample")
        lines.extend(format_float(x) for x in draws)
    else:  # discretize
        p = discretize(params, args.L)
        lines.append("state,p")
        lines.extend(f"{l},{format_float(v)}" for l, v in enumerate(p))
    parent = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(parent, exist_ok=True)
    _write_text(args.out, "\n".join(lines) + "\n")
    print(f"wrote {args.out}")
    return 0


def cmd_examples(args) -> int:
    if args.action == "list":
        for name in SCENARIO_NAMES:
            print(name)
        return 0
    names = args.name or list(SCENARIO_NAMES)
    os.makedirs(args.out, exist_ok=True)
    for name in names:
        sc = load_scenario(name)
        _write_text(os.path.join(args.out, f"{name}_counts.csv"), dump_counts_csv(sc.data))
        _write_text(os.path.join(args.out, f"{name}_config.json"), dumps(sc.config.to_dict()))
    print(f"exported {len(names)} scenario(s) to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
