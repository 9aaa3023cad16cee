"""Command-line entry point.

Verbs: ingest, run, serve, bench, analyze. Exit codes: 0 success,
2 config error, 3 data error, 4 upstream (embedding/LLM service) error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import TrendwatchError

log = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trendwatch", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="parse, segment and slice a corpus; print stats")
    p_ingest.add_argument("--input", required=True, help="JSON-lines corpus file")
    p_ingest.add_argument("--granularity-days", type=int, default=1)
    p_ingest.add_argument("--start", required=True, help="ISO date of the first slice")
    p_ingest.add_argument("--end", required=True, help="ISO date bounding the last slice (exclusive)")
    p_ingest.add_argument("--max-unit-chars", type=int, default=2000)
    p_ingest.add_argument("--out", help="write normalized units as JSON lines")

    p_run = sub.add_parser("run", help="run (or resume) the full pipeline")
    p_run.add_argument("--config", required=True, help="TOML run configuration")
    p_run.add_argument("--up-to-slice", type=int, default=None,
                       help="stop after this slice index (inclusive)")
    p_run.add_argument("--embedding-provider", choices=["precomputed-file", "http-service"],
                       help="override the configured embedding provider kind")
    p_run.add_argument("--embedding-location", help="override the provider path or URL")
    p_run.add_argument("--granularity-days", type=int, help="override [corpus] granularity_days")
    p_run.add_argument("--start", help="override [corpus] start")
    p_run.add_argument("--end", help="override [corpus] end")
    p_run.add_argument("--max-unit-chars", type=int, help="override [corpus] max_unit_chars")
    p_run.add_argument("--reduced-dim", type=int, help="override [extraction] reduced_dim")
    p_run.add_argument("--min-cluster-size", type=int, help="override [extraction] min_cluster_size")
    p_run.add_argument("--top-n-words", type=int, help="override [extraction] top_n_words")
    p_run.add_argument("--seed", type=int, help="override [extraction] seed")

    p_serve = sub.add_parser("serve", help="serve the HTTP API over a run directory")
    p_serve.add_argument("--out-dir", required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--config", help="TOML config (for the LLM endpoint)")
    p_serve.add_argument("--static-dir", help="directory with the dashboard build")

    p_bench = sub.add_parser("bench", help="synthetic benchmarks")
    bench_sub = p_bench.add_subparsers(dest="bench_command", required=True)
    p_bench_run = bench_sub.add_parser("run", help="generate a scenario, run it, score it")
    p_bench_run.add_argument("--scenario", required=True, help="scenario JSON file")
    p_bench_run.add_argument("--out", required=True, help="output directory")

    p_analyze = sub.add_parser("analyze", help="LLM interpretation of one topic")
    p_analyze.add_argument("--topic", type=int, required=True)
    p_analyze.add_argument("--out-dir", required=True, help="run directory with snapshots")
    p_analyze.add_argument("--config", help="TOML config (for the LLM endpoint)")
    p_analyze.add_argument("--up-to", default=None,
                           help="restrict the dossier: a slice index or an ISO date")
    p_analyze.add_argument("--output", help="write markdown here instead of stdout")
    p_analyze.add_argument("--max-excerpts", type=int, default=3)
    return parser


def cmd_ingest(args: argparse.Namespace) -> int:
    from .corpus import Granularity, ingest, parse_timestamp, preprocess, slice_units

    with open(args.input, "r", encoding="utf-8") as fh:
        result = ingest(fh)
    units = []
    for doc in result.documents:
        units.extend(preprocess(doc, args.max_unit_chars))
    slices = slice_units(
        units,
        Granularity(days=args.granularity_days),
        parse_timestamp(args.start),
        parse_timestamp(args.end),
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for sl in slices:
                for unit in sl.units:
                    fh.write(json.dumps({
                        "unit_id": unit.unit_id,
                        "parent_id": unit.parent_id,
                        "timestamp": unit.timestamp.isoformat(),
                        "slice_index": sl.slice_index,
                        "text": unit.text,
                    }) + "\n")
    summary = {
        "documents": len(result.documents),
        "skipped_malformed": result.skipped_malformed,
        "skipped_duplicate": result.skipped_duplicate,
        "units": len(units),
        "slices": len(slices),
        "units_per_slice": [len(sl.units) for sl in slices],
    }
    print(json.dumps(summary, indent=2))
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    import dataclasses

    from .config import load_config
    from .pipeline import run_pipeline

    cfg = load_config(args.config)
    if args.embedding_provider or args.embedding_location:
        cfg.embedding = dataclasses.replace(
            cfg.embedding,
            kind=args.embedding_provider or cfg.embedding.kind,
            location=args.embedding_location or cfg.embedding.location,
        )
    if args.granularity_days is not None:
        cfg.granularity_days = args.granularity_days
        cfg.engine = dataclasses.replace(cfg.engine, granularity_days=args.granularity_days)
    if args.start:
        cfg.corpus_start = args.start
    if args.end:
        cfg.corpus_end = args.end
    if args.max_unit_chars is not None:
        cfg.max_unit_chars = args.max_unit_chars
    extraction_overrides = {
        name: value
        for name, value in [
            ("reduced_dim", args.reduced_dim),
            ("min_cluster_size", args.min_cluster_size),
            ("top_n_words", args.top_n_words),
            ("seed", args.seed),
        ]
        if value is not None
    }
    if extraction_overrides:
        cfg.extraction = dataclasses.replace(cfg.extraction, **extraction_overrides)
    result = run_pipeline(cfg, up_to_slice=args.up_to_slice)
    print(
        json.dumps(
            {
                "out_dir": str(result.paths.out_dir),
                "processed_slices": result.processed_slices,
                "total_slices": result.total_slices,
            },
            indent=2,
        )
    )
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app

    llm = None
    if args.config:
        from .config import load_config

        llm = load_config(args.config).llm
    else:
        import os

        from .config import ENV_LLM_ENDPOINT, ENV_LLM_API_KEY
        from .interpret import LlmConfig

        endpoint = os.environ.get(ENV_LLM_ENDPOINT, "")
        if endpoint:
            llm = LlmConfig(endpoint=endpoint, model="default",
                            api_key=os.environ.get(ENV_LLM_API_KEY))
    app = create_app(args.out_dir, llm=llm, static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_bench_run(args: argparse.Namespace) -> int:
    from .bench import Scenario, generate, pipeline_config, score
    from .pipeline import load_snapshot, run_pipeline

    scenario = Scenario.load(args.scenario)
    out = Path(args.out)
    stream = generate(scenario, out / "data")
    cfg = pipeline_config(scenario, stream, out)
    result = run_pipeline(cfg)
    truth = json.loads(stream.truth_path.read_text(encoding="utf-8"))
    final = load_snapshot(result.paths.snapshot_file(result.paths.latest_snapshot_index()))
    metrics = score(truth, final["engine"], result.reports)
    metrics_path = out / "metrics.json"
    metrics_path.write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps(
        {
            "documents": stream.n_documents,
            "metrics": str(metrics_path),
            "label_accuracy": metrics["label_accuracy"],
            "false_weak_rate": metrics["false_weak_rate"],
        },
        indent=2,
    ))
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    from .engine import TrendEngine
    from .errors import ConfigError
    from .interpret import LlmClient, analyze_signal, build_dossier, summarize_evolution
    from .pipeline import RunPaths, load_snapshot, slice_periods_from_snapshots

    llm = None
    if args.config:
        from .config import load_config

        llm = load_config(args.config).llm
    else:
        import os

        from .config import ENV_LLM_API_KEY, ENV_LLM_ENDPOINT
        from .interpret import LlmConfig

        endpoint = os.environ.get(ENV_LLM_ENDPOINT, "")
        if endpoint:
            llm = LlmConfig(endpoint=endpoint, model="default",
                            api_key=os.environ.get(ENV_LLM_API_KEY))
    if llm is None:
        raise ConfigError("no LLM endpoint configured (config [llm] or TRENDWATCH_LLM_ENDPOINT)")

    paths = RunPaths(Path(args.out_dir))
    latest = paths.latest_snapshot_index()
    if latest is None:
        from .errors import DataError

        raise DataError(f"no snapshots in {paths.out_dir}")
    index = latest if args.up_to is None else min(latest, _resolve_up_to(args.up_to, paths))
    snap = load_snapshot(paths.snapshot_file(index))
    # engine params do not affect dossier assembly; defaults suffice
    from .engine import EngineParams

    engine = TrendEngine.from_state_dict(snap["engine"], EngineParams())
    dossier = build_dossier(
        engine,
        args.topic,
        max_excerpts_per_slice=args.max_excerpts,
        slice_periods=slice_periods_from_snapshots(paths),
    )
    client = LlmClient(llm)
    summary = summarize_evolution(dossier, client)
    analysis = analyze_signal(summary.markdown, client, topic_id=args.topic)
    markdown = summary.markdown + "\n\n---\n\n" + analysis.markdown
    if summary.warnings or analysis.warnings:
        for warning in summary.warnings + analysis.warnings:
            log.warning("%s", warning)
    if args.output:
        Path(args.output).write_text(markdown, encoding="utf-8")
    else:
        print(markdown)
    return 0


def _resolve_up_to(value: str, paths) -> int:
    """An --up-to value is either a slice index or an ISO date; a date maps
    to the last slice starting on or before it."""
    if str(value).isdigit():
        return int(value)
    from .corpus import parse_timestamp
    from .errors import DataError
    from .pipeline import slice_periods_from_snapshots

    cutoff = parse_timestamp(str(value))
    eligible = [
        s for s, (start, _) in slice_periods_from_snapshots(paths).items()
        if parse_timestamp(start) <= cutoff
    ]
    if not eligible:
        raise DataError(f"no processed slice starts on or before {value}")
    return max(eligible)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "ingest":
            return cmd_ingest(args)
        if args.command == "run":
            return cmd_run(args)
        if args.command == "serve":
            return cmd_serve(args)
        if args.command == "bench":
            return cmd_bench_run(args)
        if args.command == "analyze":
            return cmd_analyze(args)
        raise AssertionError(f"unhandled command {args.command}")
    except TrendwatchError as exc:
        log.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
