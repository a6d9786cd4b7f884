"""Command-line entry points: validate | record | run | report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import apply_overrides, load_run_config, validate_run_config
from .errors import AuthError, ConfigError, FxSentiBenchError, GatewayError
from .gateway import GenerationParams
from .pipeline import make_backend, run_pipeline
from .prompts import build_registry, load_template_overrides, lookup_template, plan_requests
from .reporting import render_text_report, write_run_outputs

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BACKEND = 3
EXIT_IO = 4


def _load_config(args) -> "RunConfig":
    config = load_run_config(args.config)
    return apply_overrides(
        config,
        prompts=getattr(args, "prompts", None),
        backend=getattr(args, "backend", None),
        parallelism=getattr(args, "parallelism", None),
        zero_policy=getattr(args, "zero_policy", None),
        output=getattr(args, "output", None),
    )


def cmd_validate(args) -> int:
    try:
        config = _load_config(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    problems = validate_run_config(config)
    if problems:
        for problem in problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    print("ok")
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        config = _load_config(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    problems = validate_run_config(config)
    if problems:
        for problem in problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        report, manifest = run_pipeline(config)
    except AuthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except GatewayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        paths = write_run_outputs(report, manifest, config.output_dir, figures=not args.no_figures)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"report written to {paths['report_json']}")
    return EXIT_OK


def cmd_record(args) -> int:
    try:
        config = _load_config(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    problems = [p for p in validate_run_config(config) if not p.startswith("backend.fixture_path")]
    if problems:
        for problem in problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    output = Path(args.output) if args.output else config.backend.fixture_path
    if output is None:
        print("error: no fixture output path (use --output or backend.fixture_path)", file=sys.stderr)
        return EXIT_VALIDATION
    from .corpus import load_corpus
    from .gateway import Fixture, prompt_hash, run_batch

    try:
        corpus = load_corpus(config.corpus_path, config.universe)
        overrides = (
            load_template_overrides(config.template_overrides_path)
            if config.template_overrides_path
            else None
        )
        templates = build_registry(overrides)
        backend = make_backend(config)
        fixture = Fixture()
        for prompt_id in config.prompts:
            template = lookup_template(templates, prompt_id)
            prompts = plan_requests(corpus, template)
            params = GenerationParams(config.backend.model_name, template.max_tokens, template.temperature)
            results = run_batch(
                backend, prompts, params,
                parallelism=config.parallelism, policy=config.retry, strict=True,
            )
            for prompt, item in zip(prompts, results):
                fixture.put(
                    prompt_hash(prompt.text, params),
                    item.response_text,
                    item.prompt_tokens,
                    item.completion_tokens,
                )
        fixture.save(output)
    except AuthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except GatewayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"fixture written to {output}")
    return EXIT_OK


def cmd_report(args) -> int:
    report_path = Path(args.run_dir) / "report.json"
    if not report_path.exists():
        print(f"error: no report.json under {args.run_dir}", file=sys.stderr)
        return EXIT_IO
    try:
        report = json.loads(report_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        print(f"error: corrupt report: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False))
    else:
        print(render_text_report(report), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fxsentibench",
        description="Benchmark zero-shot LLM prompts for forex news sentiment.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the JSON run config")
    common.add_argument("--prompts", help="comma-separated template ids (overrides config)")
    common.add_argument("--backend", choices=["replay", "live"], help="backend type override")
    common.add_argument("--parallelism", type=int, help="max in-flight requests")
    common.add_argument(
        "--zero-policy",
        dest="zero_policy",
        choices=["exclude", "count_wrong", "count_half"],
        help="how zero-sentiment days score in directional accuracy",
    )

    p_validate = sub.add_parser("validate", parents=[common], help="check a run config")
    p_validate.set_defaults(func=cmd_validate)

    p_run = sub.add_parser("run", parents=[common], help="execute the benchmark")
    p_run.add_argument("--output", help="output directory override")
    p_run.add_argument("--no-figures", action="store_true", help="skip PNG figure rendering")
    p_run.set_defaults(func=cmd_run)

    p_record = sub.add_parser("record", parents=[common], help="record a replay fixture")
    p_record.add_argument("--output", help="fixture file to write")
    p_record.set_defaults(func=cmd_record)

    p_report = sub.add_parser("report", help="render tables from a finished run")
    p_report.add_argument("run_dir", help="directory containing report.json")
    p_report.add_argument("--json", action="store_true", help="print machine-readable JSON instead")
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FxSentiBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
