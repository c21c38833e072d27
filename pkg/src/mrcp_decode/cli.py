"""Command-line surface: validate, onset, eval, sweep-p, pairwise, synth, report.

Exit codes are part of the contract: 0 success, 1 configuration error,
2 data error, 3 numeric failure. Every failure prints one machine-parsable
line to stderr of the form ``ERROR <kind>: <message>``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import TrialSet, extract_window, load_manifest, parse_manifest, \
    read_f32, save_dataset
from .errors import ConfigError, MrcpDecodeError
from .onset import TrajectoryRecord, decide_trial
from .pipeline import PipelineConfig, kfold_evaluate, p_sweep
from .report import matrix_csv, rerender_from_json, write_report_files
from .synth import SynthSpec, generate_synthetic, spec_from_dict

SEED_ENV = "MRCP_DECODE_SEED"


class CliParser(argparse.ArgumentParser):
    """argparse that reports bad usage as a ConfigError (exit code 1)."""

    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> CliParser:
    parser = CliParser(prog="mrcp-decode",
                       description="Low-frequency EEG movement decoding")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    validate = sub.add_parser("validate", help="check a dataset manifest")
    validate.add_argument("--manifest", required=True)

    onset = sub.add_parser("onset", help="locate movement onsets from trajectories")
    onset.add_argument("--manifest", required=True)
    onset.add_argument("--out", required=True)
    onset.add_argument("--cue-sample", type=int, default=None,
                       help="cue position inside every payload (overrides manifest)")
    onset.add_argument("--emit-manifest", action="store_true",
                       help="also write a manifest of accepted trials")

    evaluate = sub.add_parser("eval", help="run cross-validated decoding")
    _add_eval_options(evaluate)
    evaluate.add_argument("--dump-features", action="store_true",
                          help="export the full-dataset feature matrix as CSV")

    sweep = sub.add_parser("sweep-p", help="accuracy sweep over eigenvector count")
    _add_eval_options(sweep)
    sweep.add_argument("--p-range", default=None,
                       help="e.g. 1-11 or comma list; default 1..C")

    pairwise = sub.add_parser("pairwise", help="all-pairs binary accuracy table")
    _add_eval_options(pairwise)

    synth = sub.add_parser("synth", help="generate a synthetic dataset")
    synth.add_argument("--out", required=True)
    synth.add_argument("--spec", default=None, help="synth spec JSON file")
    synth.add_argument("--seed", type=int, default=None)

    report = sub.add_parser("report", help="re-render artifacts from report.json")
    report.add_argument("--in", dest="report_path", required=True)
    report.add_argument("--out", required=True)
    return parser


def _add_eval_options(sub) -> None:
    sub.add_argument("--manifest", required=True)
    sub.add_argument("--out", required=True)
    sub.add_argument("--config", default=None, help="pipeline config JSON")
    sub.add_argument("--variant", choices=("bstrca", "bfbtrca", "mstrca",
                                           "mfbtrca"), default=None)
    sub.add_argument("--p", type=int, default=None)
    sub.add_argument("--classifier", choices=("svm", "lda"), default=None)
    sub.add_argument("--c-reg", type=float, default=None)
    sub.add_argument("--banks", choices=("on", "off"), default=None)
    sub.add_argument("--k-grid", default=None, help="comma list, e.g. 5,10,20")
    sub.add_argument("--folds", type=int, default=None)
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--jobs", type=int, default=None)
    sub.add_argument("--window", default=None,
                     help="PRE,POST seconds around each trial's onset sample")


def _config_from(args) -> PipelineConfig:
    doc = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        known = {f.name for f in dataclasses.fields(PipelineConfig)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")

    overrides = {
        "variant": args.variant,
        "p": args.p,
        "classifier": args.classifier,
        "c_reg": args.c_reg,
        "folds": args.folds,
        "seed": args.seed,
        "jobs": args.jobs,
    }
    if args.banks is not None:
        overrides["banks"] = args.banks == "on"
    if args.k_grid is not None:
        try:
            overrides["k_grid"] = tuple(
                int(v) for v in args.k_grid.split(",") if v
            )
        except ValueError as exc:
            raise ConfigError(f"bad --k-grid value: {args.k_grid}") from exc
    doc.update({k: v for k, v in overrides.items() if v is not None})
    if doc.get("k_grid") is not None:
        doc["k_grid"] = tuple(doc["k_grid"])

    if "seed" not in doc:
        env = os.environ.get(SEED_ENV)
        if env is not None:
            try:
                doc["seed"] = int(env)
            except ValueError as exc:
                raise ConfigError(f"bad {SEED_ENV} value: {env}") from exc

    try:
        cfg = PipelineConfig(**doc)
    except TypeError as exc:
        raise ConfigError(f"invalid pipeline config: {exc}") from exc
    cfg.validate()
    return cfg


def _load_dataset(args) -> TrialSet:
    ds = load_manifest(args.manifest)
    window = getattr(args, "window", None)
    if window:
        try:
            pre, post = (float(v) for v in window.split(","))
        except ValueError as exc:
            raise ConfigError(f"bad --window value: {window}") from exc
        trials = []
        for i, trial in enumerate(ds.trials):
            if trial.onset_sample is None:
                raise ConfigError(
                    f"--window requires onset_sample on every trial "
                    f"(trial {i} has none)"
                )
            trials.append(
                extract_window(trial, trial.onset_sample, pre, post)
            )
        ds = TrialSet(trials=trials, channel_names=ds.channel_names,
                      class_names=ds.class_names, dataset_id=ds.dataset_id)
    return ds


def cmd_validate(args) -> int:
    ds = load_manifest(args.manifest)
    counts = np.bincount(ds.labels(), minlength=ds.n_classes)
    summary = ", ".join(
        f"{name}={int(c)}" for name, c in zip(ds.class_names, counts)
    )
    print(
        f"ok: {len(ds.trials)} trials, {len(ds.channel_names)} channels x "
        f"{ds.trials[0].n_samples} samples at {ds.sampling_rate:g} Hz; "
        f"classes: {summary}"
    )
    return 0


def cmd_onset(args) -> int:
    manifest_path = Path(args.manifest)
    manifest = parse_manifest(manifest_path)
    base = manifest_path.parent
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    decisions = []
    accepted_entries = []
    for i, entry in enumerate(manifest.trials):
        if entry.trajectory_file is None:
            raise ConfigError(
                f"trial {i} has no trajectory_file; onset localization "
                "needs trajectories"
            )
        series = read_f32(base / entry.trajectory_file)
        cue = args.cue_sample
        if cue is None:
            cue = entry.cue_sample if entry.cue_sample is not None else 0
        record = TrajectoryRecord(
            samples=series, sampling_rate=manifest.sampling_rate_hz,
            motion_class=entry.label, cue_sample=int(cue),
        )
        decision = decide_trial(record)
        decisions.append({
            "index": i,
            "file": entry.file,
            "trajectory_file": entry.trajectory_file,
            "motion": entry.label,
            "status": decision.status,
            "onset_sample": decision.onset_sample,
            "reason": decision.reason,
            "fit_params": list(decision.fit_params)
            if decision.fit_params else None,
        })
        if decision.accepted:
            accepted_entries.append((entry, decision.onset_sample))

    n_accepted = sum(1 for d in decisions if d["status"] == "accepted")
    report = {
        "manifest": str(manifest_path),
        "sampling_rate_hz": manifest.sampling_rate_hz,
        "n_trials": len(decisions),
        "n_accepted": n_accepted,
        "decisions": decisions,
    }
    (out / "onset_report.json").write_text(
        json.dumps(report, indent=2) + "\n", encoding="utf-8"
    )

    if args.emit_manifest:
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
        kept = []
        accepted_map = {id(e): onset for e, onset in accepted_entries}
        for entry, trial_doc in zip(manifest.trials, doc["trials"]):
            if id(entry) in accepted_map:
                trial_doc = dict(trial_doc)
                trial_doc["onset_sample"] = int(accepted_map[id(entry)])
                kept.append(trial_doc)
        doc["trials"] = kept
        (out / "manifest_onset.json").write_text(
            json.dumps(doc, indent=2) + "\n", encoding="utf-8"
        )
    print(f"onset: {n_accepted}/{len(decisions)} trials accepted")
    return 0


def cmd_eval(args) -> int:
    cfg = _config_from(args)
    ds = _load_dataset(args)
    report = kfold_evaluate(ds, cfg)
    paths = write_report_files(report, args.out)
    if args.dump_features:
        from .pipeline import extract_features

        matrix = extract_features(ds, cfg)
        (Path(args.out) / "features.csv").write_text(
            matrix.to_csv(), encoding="utf-8"
        )
    print(
        f"eval: {cfg.variant} accuracy "
        f"{report.mean_accuracy:.4f} +/- {report.std_accuracy:.4f} "
        f"({cfg.folds} folds); report at {paths['report']}"
    )
    return 0


def cmd_sweep_p(args) -> int:
    cfg = _config_from(args)
    ds = _load_dataset(args)
    p_range = None
    if args.p_range:
        text = args.p_range
        try:
            if "-" in text and "," not in text:
                lo, hi = text.split("-")
                p_range = tuple(range(int(lo), int(hi) + 1))
            else:
                p_range = tuple(int(v) for v in text.split(",") if v)
        except ValueError as exc:
            raise ConfigError(f"bad --p-range value: {text}") from exc
    curve = p_sweep(ds, cfg, p_range)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["p,mean_accuracy,std_accuracy"]
    lines += [
        f"{pt['p']},{pt['mean_accuracy']:.6f},{pt['std_accuracy']:.6f}"
        for pt in curve
    ]
    (out / "p_sweep.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out / "p_sweep.json").write_text(
        json.dumps({"config": cfg.echo(), "curve": curve}, indent=2) + "\n",
        encoding="utf-8",
    )
    best = max(curve, key=lambda pt: pt["mean_accuracy"])
    print(f"sweep-p: best P={best['p']} at {best['mean_accuracy']:.4f}")
    return 0


def cmd_pairwise(args) -> int:
    cfg = _config_from(args)
    ds = _load_dataset(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for a in range(ds.n_classes):
        for b in range(a + 1, ds.n_classes):
            pair_ds = ds.restrict_classes([a, b])
            acc = {}
            for variant in ("bfbtrca", "mfbtrca"):
                pair_cfg = dataclasses.replace(cfg, variant=variant, p=None)
                acc[variant] = kfold_evaluate(pair_ds, pair_cfg).mean_accuracy
            rows.append((ds.class_names[a], ds.class_names[b],
                         acc["bfbtrca"], acc["mfbtrca"]))

    lines = ["class_a,class_b,bfbtrca_accuracy,mfbtrca_accuracy"]
    lines += [f"{a},{b},{x:.6f},{y:.6f}" for a, b, x, y in rows]
    (out / "pairwise.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out / "pairwise.json").write_text(
        json.dumps({
            "config": cfg.echo(),
            "pairs": [
                {"class_a": a, "class_b": b, "bfbtrca": x, "mfbtrca": y}
                for a, b, x, y in rows
            ],
        }, indent=2) + "\n",
        encoding="utf-8",
    )
    print(f"pairwise: {len(rows)} pairs written to {out / 'pairwise.csv'}")
    return 0


def cmd_synth(args) -> int:
    if args.spec:
        path = Path(args.spec)
        if not path.is_file():
            raise ConfigError(f"spec file not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"spec file is not valid JSON: {exc}") from exc
        spec = spec_from_dict(doc)
    else:
        spec = SynthSpec(n_classes=4, trials_per_class=20)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    elif os.environ.get(SEED_ENV):
        spec = dataclasses.replace(spec, seed=int(os.environ[SEED_ENV]))

    ds = generate_synthetic(spec)
    manifest = save_dataset(ds, args.out)
    print(
        f"synth: {len(ds.trials)} trials ({ds.n_classes} classes) at "
        f"{manifest}"
    )
    return 0


def cmd_report(args) -> int:
    paths = rerender_from_json(args.report_path, args.out)
    print(f"report: artifacts rewritten under {Path(args.out)}")
    return 0


_COMMANDS = {
    "validate": cmd_validate,
    "onset": cmd_onset,
    "eval": cmd_eval,
    "sweep-p": cmd_sweep_p,
    "pairwise": cmd_pairwise,
    "synth": cmd_synth,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except MrcpDecodeError as exc:
        print(f"ERROR {exc.kind}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
