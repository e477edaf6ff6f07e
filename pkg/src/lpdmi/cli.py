"""Command-line harness for the whole pipeline.

Subcommands: synth | convert | dmi | features | train | eval | sweep.
Batch-only: every run is a pure function of its config file plus the
--seed/--jobs/--output overrides. Exit codes: 0 success, 2 configuration
error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import elm, report
from .config import PipelineConfig, default_config_text, load_config
from .depth_io import (
    CLASS_KINDS,
    SyntheticSpec,
    load_msr_depth_bin,
    save_sequence,
    synth_sequence,
    write_pgm,
)
from .errors import ConfigError, DataError, NumericError
from .evaluation import (
    descriptor_matrix,
    evaluate,
    fit_transforms,
    load_dataset,
    sequence_descriptor,
    sequence_pyramids,
    split,
)
from .features import minmax_apply, pca_apply, save_matrix, save_sidecar
from .projection import VIEWS, compute_dmi


def _config_from_args(args) -> PipelineConfig:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.output is not None:
        overrides["output"] = args.output
    if args.config is not None:
        return load_config(args.config, overrides)
    cfg = replace(PipelineConfig(), **overrides) if overrides else PipelineConfig()
    cfg.validate()
    return cfg


def _sequence_stem(seq) -> str:
    return f"a{seq.action_label:02d}_s{seq.subject_id:02d}_e{seq.repetition:02d}"


def cmd_synth(args) -> int:
    if args.seed < 0:
        raise ConfigError(f"seed must be non-negative, got {args.seed}")
    outdir = Path(args.output or "data")
    outdir.mkdir(parents=True, exist_ok=True)
    count = 0
    for label in range(1, args.classes + 1):
        kind = CLASS_KINDS[(label - 1) % len(CLASS_KINDS)]
        for subject in range(1, args.subjects + 1):
            for rep in range(1, args.reps + 1):
                child = int(np.random.SeedSequence(
                    [args.seed, label, subject, rep]).generate_state(1, np.uint64)[0])
                spec = SyntheticSpec(
                    class_kind=kind,
                    n_frames=args.frames,
                    width=args.size,
                    height=args.size,
                    blob_radius=args.radius,
                    noise_amplitude=args.noise,
                    seed=child,
                )
                seq = replace(synth_sequence(spec), subject_id=subject,
                              action_label=label, repetition=rep)
                save_sequence(seq, outdir / f"{_sequence_stem(seq)}.lpd")
                count += 1
    print(f"wrote {count} sequences to {outdir}")
    return 0


def cmd_convert(args) -> int:
    src = Path(args.input)
    paths = sorted(src.glob("*.bin")) if src.is_dir() else [src]
    if not paths:
        raise DataError(f"no .bin depth files under {src}")
    outdir = Path(args.output or "data")
    outdir.mkdir(parents=True, exist_ok=True)
    for path in paths:
        seq = load_msr_depth_bin(path)
        save_sequence(seq, outdir / (path.stem + ".lpd"))
    print(f"converted {len(paths)} files to {outdir}")
    return 0


def cmd_dmi(args) -> int:
    cfg = _config_from_args(args)
    seqs = load_dataset(cfg.dataset)
    outdir = Path(cfg.output) / "dmi"
    outdir.mkdir(parents=True, exist_ok=True)
    for seq in seqs:
        dmi = compute_dmi(seq, cfg.projection)
        stem = _sequence_stem(seq)
        for view in VIEWS:
            save_matrix(outdir / f"{stem}.{view}.bin", dmi[view])
            if args.pgm:
                write_pgm(dmi[view], outdir / f"{stem}.{view}.pgm")
        if args.pgm_levels:
            # Signed levels are affinely rescaled for display only.
            for view, pyr in sequence_pyramids(seq, cfg).items():
                for i, level in enumerate(pyr.levels, start=1):
                    write_pgm(level, outdir / f"{stem}.{view}.L{i}.pgm", signed=True)
    print(f"wrote DMI tensors for {len(seqs)} sequences to {outdir}")
    return 0


def cmd_features(args) -> int:
    cfg = _config_from_args(args)
    seqs = load_dataset(cfg.dataset)
    outdir = Path(cfg.output)
    outdir.mkdir(parents=True, exist_ok=True)
    matrix = descriptor_matrix(seqs, cfg, jobs=cfg.jobs)
    save_matrix(outdir / "features.bin", matrix)
    layout = sequence_descriptor(seqs[0], cfg).layout
    save_sidecar(outdir / "features.json", {
        "layout": layout,
        "rows": [
            {
                "subject_id": s.subject_id,
                "action_label": s.action_label,
                "repetition": s.repetition,
            }
            for s in seqs
        ],
        "config": cfg.to_flat(),
    })
    print(f"wrote {matrix.shape[0]}x{matrix.shape[1]} feature matrix to {outdir}")
    return 0


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    seqs = load_dataset(cfg.dataset)
    train_idx, _ = split(seqs, cfg.split)
    train_seqs = [seqs[i] for i in train_idx]
    x_train = descriptor_matrix(train_seqs, cfg, jobs=cfg.jobs)
    labels = np.array([s.action_label for s in train_seqs])

    scaler, pca = fit_transforms(x_train, cfg)
    z_train = pca_apply(pca, minmax_apply(scaler, x_train))
    model = elm.train(z_train, labels, hidden_count=cfg.elm_hidden,
                      activation=cfg.elm_activation, seed=cfg.seed)

    outdir = Path(cfg.output)
    outdir.mkdir(parents=True, exist_ok=True)
    save_matrix(outdir / "scaler.bin", np.vstack([scaler.mins, scaler.maxs]))
    save_matrix(outdir / "pca.mean.bin", pca.mean.reshape(1, -1))
    save_matrix(outdir / "pca.components.bin", pca.components)
    elm.save_model(model, outdir / "model")
    save_sidecar(outdir / "transforms.json", {
        "scaler": "scaler.bin rows: [mins, maxs]",
        "pca_mean": "pca.mean.bin",
        "pca_components": "pca.components.bin",
        "pca_k": pca.k,
        "model": "model.{weights,biases,beta}.bin + model.json",
        "train_count": len(train_idx),
        "config": cfg.to_flat(),
    })
    print(f"trained on {len(train_idx)} sequences; model written to {outdir}")
    return 0


def cmd_eval(args) -> int:
    cfg = _config_from_args(args)
    result = evaluate(cfg)
    paths = report.write_report(result, cfg.output)
    sys.stdout.write(report.report_text(result))
    print(f"report files in {Path(cfg.output).resolve()}: "
          + ", ".join(p.name for p in paths.values()))
    return 0


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    layers = sorted({int(v) for v in args.layers.split(",") if v.strip()}) \
        if args.layers else []
    kinds = [v.strip() for v in args.kinds.split(",") if v.strip()] \
        if args.kinds else [cfg.pyramid_kind]
    if not layers:
        raise ConfigError("sweep needs a non-empty --layers grid, e.g. --layers 2,3,4")

    outdir = Path(cfg.output)
    collected = []
    for kind in kinds:
        for level_count in layers:
            point = replace(cfg, pyramid_kind=kind, layers=level_count,
                            output=str(outdir / f"{kind}_L{level_count}"))
            point.validate()
            result = evaluate(point)
            report.write_report(result, point.output)
            collected.append((kind, level_count, result))
    rows = report.sweep_rows(collected)
    report.write_sweep(rows, outdir)
    sys.stdout.write(report.sweep_text(rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpdmi",
        description="Depth-video action recognition over multi-scale "
                    "motion-image features.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="pipeline config file (flat key = value)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--jobs", type=int, help="parallel feature-extraction workers")
        p.add_argument("--output", help="override the config output directory")

    p = sub.add_parser("synth", help="generate a deterministic synthetic dataset")
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--subjects", type=int, default=4)
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--frames", type=int, default=8)
    p.add_argument("--size", type=int, default=48, help="frame side, pixels")
    p.add_argument("--radius", type=int, default=6, help="blob radius, pixels")
    p.add_argument("--noise", type=int, default=0, help="depth noise amplitude")
    p.add_argument("--output", help="dataset directory (default: data)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("convert", help="convert MSR-style depth .bin files")
    p.add_argument("--input", required=True, help=".bin file or directory")
    p.add_argument("--output", help="dataset directory (default: data)")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("dmi", help="write per-view motion-image tensors")
    add_common(p)
    p.add_argument("--pgm", action="store_true", help="also dump PGM images")
    p.add_argument("--pgm-levels", action="store_true",
                   help="also dump per-level pyramid PGMs (display-rescaled)")
    p.set_defaults(func=cmd_dmi)

    p = sub.add_parser("features", help="write the raw descriptor matrix")
    add_common(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="fit scaler, PCA, and classifier on the train split")
    add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run the full experiment and write reports")
    add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid over pyramid layers and kinds")
    add_common(p)
    p.add_argument("--layers", help="comma list of level counts, e.g. 2,3,4")
    p.add_argument("--kinds", help="comma list of pyramid kinds (laplacian,gaussian)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("config", help="print a commented config template")
    p.set_defaults(func=lambda args: (sys.stdout.write(default_config_text()), 0)[1])

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        _diagnose(err)
        return 2
    except (DataError, OSError) as err:
        _diagnose(err)
        return 3
    except NumericError as err:
        _diagnose(err)
        return 4


def _diagnose(err) -> None:
    stage = getattr(err, "stage", None)
    prefix = f"[stage {stage}] " if stage else ""
    print(f"lpdmi: error: {prefix}{err}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
