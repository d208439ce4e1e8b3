"""Command-line entry point.

Subcommands: ``validate``, ``synth``, ``features``, ``evaluate``,
``correlate``. Every run is reproducible: outputs are a pure function of
the configuration file, flag overrides, and the seed (flags win over the
file, the file over defaults; BIOCOMP_SEED supplies the seed default).
Exit codes: 0 success, 1 internal error, 2 invalid input or configuration.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from pathlib import Path

from .config import PROTOCOLS, PipelineConfig, load_config
from .errors import BiocompError, ConfigError
from .ingest import validate_corpus
from .learn.correlation import kendall_tau
from .learn.evaluation import evaluate
from .pipeline import build_matrices, load_corpus
from .reports import (
    VALIDATION_JSON,
    write_best_table_csv,
    write_correlation_json,
    write_medians_csv,
    write_report_json,
    write_scatter_csv,
)
from .synth import GpaModel, ScheduleTemplate, generate_corpus, null_profiles, separable_profiles

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INVALID = 2


def _default_seed() -> int | None:
    raw = os.environ.get("BIOCOMP_SEED")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"BIOCOMP_SEED must be an integer, got {raw!r}") from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biocomp",
        description="Classify code vs. prose comprehension from biometric recordings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, default=None, help="TOML/JSON config file")
        p.add_argument("--corpus", type=Path, default=None, help="corpus root directory")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="master seed")
        p.add_argument("--jobs", type=int, default=None, help="parallel workers")

    p = sub.add_parser("validate", help="structurally check a corpus")
    p.add_argument("root", type=Path, nargs="?", default=None)
    common(p)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    common(p)
    p.add_argument("--n", type=int, default=None, help="number of participants")
    p.add_argument("--profiles", choices=["separable", "null"], default=None)
    p.add_argument("--gpa-link", action="store_true", default=None,
                   help="scale planted effects with GPA")

    p = sub.add_parser("features", help="write one feature CSV per signal configuration")
    common(p)
    p.add_argument("--configs", type=str, default=None,
                   help="comma-separated signal configurations")

    p = sub.add_parser("evaluate", help="train and evaluate all configuration/family pairs")
    common(p)
    p.add_argument("--configs", type=str, default=None)
    p.add_argument("--families", type=str, default=None)
    p.add_argument("--protocol", choices=list(PROTOCOLS), default=None)

    p = sub.add_parser("correlate", help="expertise analysis from a completed LORO report")
    common(p)
    return parser


def _effective_config(args) -> PipelineConfig:
    overrides: dict = {}
    if getattr(args, "corpus", None) is not None:
        overrides["corpus_root"] = str(args.corpus)
    if getattr(args, "out", None) is not None:
        overrides["output_dir"] = str(args.out)
    seed = args.seed if args.seed is not None else _default_seed()
    if seed is not None:
        overrides["seed"] = seed
    if getattr(args, "jobs", None) is not None:
        overrides["jobs"] = args.jobs
    if getattr(args, "configs", None):
        overrides["configs"] = tuple(s.strip() for s in args.configs.split(","))
    if getattr(args, "families", None):
        overrides["families"] = tuple(s.strip().upper() for s in args.families.split(","))
    if getattr(args, "protocol", None):
        overrides["protocol"] = args.protocol
    return load_config(args.config, overrides)


def _out_dir(config: PipelineConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_validate(args) -> int:
    config = _effective_config(args)
    root = args.root if args.root is not None else Path(config.corpus_root)
    if not root.is_dir():
        print(f"error: corpus root {root} is not a directory", file=sys.stderr)
        return EXIT_INVALID
    report = validate_corpus(root)
    out = _out_dir(config)
    (out / VALIDATION_JSON).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    n_sessions = len(report.sessions)
    if n_sessions == 0:
        print(f"no sessions found under {root}")
        return EXIT_INVALID
    print(
        f"{n_sessions} session(s), {report.n_errors} error(s); "
        f"{'analyzable' if report.analyzable else 'not analyzable'}"
    )
    for entry in report.sessions:
        for message in entry.errors:
            print(f"  error   {entry.path}: {message}")
        for message in entry.warnings:
            print(f"  warning {entry.path}: {message}")
    return EXIT_OK if report.analyzable else EXIT_INVALID


def _cmd_synth(args) -> int:
    config = _effective_config(args)
    settings = config.synth
    profile_set = args.profiles if args.profiles is not None else settings.profile_set
    profiles = null_profiles() if profile_set == "null" else separable_profiles()
    gpa_link = args.gpa_link if args.gpa_link is not None else settings.gpa_link
    n = args.n if args.n is not None else settings.n_participants
    destination = Path(args.out) if args.out is not None else Path(config.corpus_root)
    template = ScheduleTemplate(
        n_runs=settings.n_runs,
        code_per_run=settings.code_per_run,
        prose_per_run=settings.prose_per_run,
        unanswered_prob=settings.unanswered_prob,
        channels=settings.channels,
    )
    summary = generate_corpus(
        destination,
        n_participants=n,
        profiles=profiles,
        template=template,
        gpa_model=GpaModel(link_effects=gpa_link),
        seed=config.seed,
    )
    print(
        f"wrote {summary['n_participants']} participants, {summary['n_events']} events "
        f"({summary['n_answered']} answered) to {destination}"
    )
    return EXIT_OK


def _matrices(config: PipelineConfig):
    corpus = load_corpus(config.corpus_root)
    return build_matrices(
        corpus,
        config.signal_configs(),
        cvx_params=config.cvxeda,
        peak_params=config.peaks,
        jobs=config.jobs,
    )


def _cmd_features(args) -> int:
    config = _effective_config(args)
    out = _out_dir(config)
    matrices = _matrices(config)
    for name, matrix in matrices.items():
        filename = "features_" + name.replace("+", "_").lower() + ".csv"
        matrix.write_csv(out / filename)
        print(f"{filename}: {matrix.n_rows} rows x {len(matrix.feature_names)} features")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    config = _effective_config(args)
    out = _out_dir(config)
    matrices = _matrices(config)
    reports = {}
    for protocol in config.protocols():
        reports[protocol] = evaluate(
            matrices,
            config.families,
            protocol,
            seed=config.seed,
            repeats=config.holdout_repeats,
            jobs=config.jobs,
        )
    write_report_json(out, reports, config.seed)
    write_medians_csv(out, reports, list(config.configs), list(config.families))
    for protocol, report in reports.items():
        write_best_table_csv(out, protocol, report, list(config.configs), list(config.families))
    print(f"evaluated {len(config.configs)} configuration(s) x {len(config.families)} families "
          f"under {', '.join(config.protocols())}; outputs in {out}")
    return EXIT_OK


def _cmd_correlate(args) -> int:
    config = _effective_config(args)
    out = _out_dir(config)
    report_path = out / "report.json"
    if not report_path.is_file():
        print(f"error: {report_path} not found; run `biocomp evaluate` first", file=sys.stderr)
        return EXIT_INVALID
    payload = json.loads(report_path.read_text())
    loro = payload.get("protocols", {}).get("loro")
    if not loro or "per_participant_best" not in loro:
        print("error: report.json has no LORO results", file=sys.stderr)
        return EXIT_INVALID
    best = loro["per_participant_best"]

    gpa_by_pid: dict[str, float] = {}
    for session_dir in sorted(Path(config.corpus_root).iterdir()):
        manifest = session_dir / "manifest.json"
        if not manifest.is_file():
            continue
        raw = json.loads(manifest.read_text())
        participant = raw.get("participant", {})
        if participant.get("gpa") is not None:
            gpa_by_pid[str(participant["id"])] = float(participant["gpa"])

    rows = [
        (pid, gpa_by_pid[pid], bac)
        for pid, bac in sorted(best.items())
        if pid in gpa_by_pid
    ]
    if len(rows) < 2:
        print("error: fewer than two participants with both GPA and a best BAC",
              file=sys.stderr)
        return EXIT_INVALID
    result = kendall_tau([r[1] for r in rows], [r[2] for r in rows])
    write_scatter_csv(out, rows)
    write_correlation_json(out, result)
    print(f"tau = {result.tau:.4f}, p = {result.p_value:.4f}, n = {result.n}")
    return EXIT_OK


_COMMANDS = {
    "validate": _cmd_validate,
    "synth": _cmd_synth,
    "features": _cmd_features,
    "evaluate": _cmd_evaluate,
    "correlate": _cmd_correlate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (BiocompError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception:  # noqa: BLE001 - last-resort diagnostics
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
