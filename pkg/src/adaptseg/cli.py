"""Command-line entry point: synth, train, evaluate, report.

Typical flow:

    adaptseg synth    --config configs/desk.json --out data/synth
    adaptseg train    --config configs/desk.json --strategy uda --out runs/uda
    adaptseg evaluate --config configs/desk.json --run runs/uda --out runs/uda/eval
    adaptseg report   --run runs/uda/eval --out report

`train --folds K` cross-validates the target set instead of a single run.
The data root comes from --data-root, else $ADAPTSEG_DATA_ROOT, else the
config file.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import __version__
from .config import (
    DATA_ROOT_ENV,
    RunConfig,
    desk_run_config,
    load_run_config,
    run_config_to_dict,
    save_run_config,
)
from .data.cases import Case, DataError, DomainLabel
from .data.folds import make_folds, save_folds
from .data.io import load_dataset, write_synthetic_dataset
from .data.preprocess import zscore_normalize
from .data.synthetic import ConfigError, generate_synthetic
from .eval.aggregate import aggregate_metrics, format_table, write_aggregate_csv
from .eval.cv import CvExperiment, predict_case, run_cv
from .eval.metrics import (
    HD95_SENTINEL,
    evaluate_cases,
    filter_small_et,
    read_metrics_csv,
    write_metrics_csv,
)
from .eval.regions import compose_regions
from .eval.stats import significance_report
from .model.backbone import build_backbone
from .model.checkpoint import load_checkpoint
from .reporting import render_box_plots, write_summary_markdown
from .training.strategies import STRATEGY_NAMES, strategy_from_name
from .training.trainer import TrainingDivergedError, train

_HASH_BYTE_CAP = 2 << 30  # above this, hash names+sizes only


@dataclass
class RunManifest:
    run_id: str
    command: str
    config: dict
    dataset_hashes: dict[str, str]
    version: str
    outputs: list[str]

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(dataclasses.asdict(self), indent=1) + "\n")


def _hash_dir(root: Path) -> str:
    files = sorted(p for p in root.rglob("*") if p.is_file())
    total = sum(p.stat().st_size for p in files)
    h = hashlib.sha256()
    for p in files:
        h.update(str(p.relative_to(root)).encode())
        if total <= _HASH_BYTE_CAP:
            h.update(p.read_bytes())
        else:
            h.update(str(p.stat().st_size).encode())
    return h.hexdigest()


def _prepare_out(out: Path, force: bool) -> None:
    if out.exists() and any(out.iterdir()) and not force:
        raise ConfigError(f"output directory {out} is not empty (use --force to overwrite)")
    out.mkdir(parents=True, exist_ok=True)


def _load_config(path: str | None) -> RunConfig:
    if path is None:
        return desk_run_config()
    return load_run_config(path)


def _load_domain(root: Path, cfg: RunConfig, domain: DomainLabel) -> list[Case]:
    sub = root / domain.value
    cases = load_dataset(sub, cfg.layout, domain=domain)
    return [zscore_normalize(c) for c in cases]


def cmd_synth(args) -> int:
    cfg = _load_config(args.config)
    out = Path(args.out) if args.out else cfg.resolved_data_root(args.data_root)
    _prepare_out(out, args.force)
    source, target = generate_synthetic(cfg.synthetic)
    write_synthetic_dataset(source, out / "source")
    write_synthetic_dataset(target, out / "target")
    hashes = {"source": _hash_dir(out / "source"), "target": _hash_dir(out / "target")}
    RunManifest(
        run_id=f"synth-seed{cfg.synthetic.seed}",
        command="synth",
        config=run_config_to_dict(cfg),
        dataset_hashes=hashes,
        version=__version__,
        outputs=[str(out / "source"), str(out / "target")],
    ).write(out / "manifest.json")
    print(f"wrote {len(source)} source + {len(target)} target cases to {out}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, training=replace(cfg.training, seed=args.seed))
    strategy = strategy_from_name(args.strategy)

    root = cfg.resolved_data_root(args.data_root)
    source = _load_domain(root, cfg, DomainLabel.SOURCE)
    target = _load_domain(root, cfg, DomainLabel.TARGET)

    run_id = f"{args.strategy}-seed{cfg.training.seed}"
    out = Path(args.out) if args.out else Path("runs") / run_id
    if args.resume is None:
        _prepare_out(out, args.force)
    else:
        out.mkdir(parents=True, exist_ok=True)

    save_run_config(cfg, out / "resolved_config.json")
    hashes = {"data_root": _hash_dir(root)}

    if args.folds:
        folds = make_folds(target, args.folds, cfg.training.seed)
        save_folds(folds, out / "folds.json")
        experiment = CvExperiment(
            strategy=args.strategy,
            model_tag=args.strategy,
            backbone_cfg=cfg.backbone,
            classifier_cfg=cfg.classifier,
            optim_cfg=cfg.optim,
            alpha_schedule=cfg.alpha,
            loss_weights=cfg.loss,
            training_cfg=cfg.training,
            pretrained=args.pretrained,
            out_dir=out,
        )
        result = run_cv(experiment, source, target, folds)
        write_metrics_csv(result.records, out / "metrics.csv")
        write_aggregate_csv(result.table, out / "aggregate.csv")
        (out / "aggregate.txt").write_text(format_table(result.table) + "\n")
        outputs = ["folds.json", "metrics.csv", "aggregate.csv", "aggregate.txt"]
        print(format_table(result.table))
    else:
        result = train(
            strategy,
            source,
            target,
            backbone_cfg=cfg.backbone,
            classifier_cfg=cfg.classifier,
            optim_cfg=cfg.optim,
            alpha_schedule=cfg.alpha,
            loss_weights=cfg.loss,
            training_cfg=cfg.training,
            out_dir=out,
            pretrained=args.pretrained,
            resume_from=args.resume,
        )
        last = result.history.epochs[-1]
        outputs = ["history.csv", "history_steps.csv", "checkpoint_final.pt"]
        print(
            f"finished epoch {last.epoch}: l_total={last.loss.l_total:.4f} "
            f"l_seg={last.loss.l_seg:.4f} l_d={last.loss.l_d:.4f}"
        )

    RunManifest(
        run_id=run_id,
        command="train",
        config=run_config_to_dict(cfg),
        dataset_hashes=hashes,
        version=__version__,
        outputs=outputs,
    ).write(out / "manifest.json")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config(args.config)
    root = cfg.resolved_data_root(args.data_root)
    target = _load_domain(root, cfg, DomainLabel.TARGET)
    unlabeled = [c.id for c in target if c.labels is None]
    if unlabeled:
        raise DataError(f"evaluation needs reference labels; missing for {unlabeled}")

    run_dirs = [Path(r) for r in args.run]
    out = Path(args.out) if args.out else run_dirs[0] / "eval"
    _prepare_out(out, args.force)

    references = {c.id: compose_regions(c.labels) for c in target}
    spacing = {c.id: c.spacing for c in target}

    records = []
    for run_dir in run_dirs:
        ckpt_path = run_dir / "checkpoint_final.pt"
        if not ckpt_path.exists():
            raise DataError(f"missing checkpoint {ckpt_path}")
        ckpt = load_checkpoint(ckpt_path)
        backbone = build_backbone(ckpt.backbone_cfg)
        backbone.load_state_dict(ckpt.backbone_state)
        predictions = {c.id: predict_case(backbone, c) for c in target}
        records += evaluate_cases(
            predictions, references, spacing, model_tag=run_dir.name, sentinel=HD95_SENTINEL
        )

    write_metrics_csv(records, out / "metrics.csv")
    table = aggregate_metrics(records)
    write_aggregate_csv(table, out / "aggregate.csv")
    (out / "aggregate.txt").write_text(format_table(table) + "\n")
    outputs = ["metrics.csv", "aggregate.csv", "aggregate.txt"]
    print(format_table(table))

    if args.min_et is not None:
        ref_labels = {c.id: c.labels for c in target}
        kept = set(filter_small_et(sorted(ref_labels), ref_labels, args.min_et))
        filtered = [r for r in records if r.case_id in kept]
        if filtered:
            ftable = aggregate_metrics(filtered)
            write_aggregate_csv(ftable, out / f"aggregate_min_et_{args.min_et}.csv")
            (out / f"aggregate_min_et_{args.min_et}.txt").write_text(format_table(ftable) + "\n")
            outputs += [f"aggregate_min_et_{args.min_et}.csv", f"aggregate_min_et_{args.min_et}.txt"]
            print(f"\nfiltered to ET >= {args.min_et} voxels ({len(kept)} cases):")
            print(format_table(ftable))
        else:
            print(f"no cases retained by --min-et {args.min_et}; filtered table skipped")

    if len(run_dirs) > 1:
        rows = significance_report(records)
        with open(out / "significance.csv", "w") as fh:
            fh.write("model_a,model_b,region,metric,n,t,p,note\n")
            for r in rows:
                fh.write(
                    f"{r.model_a},{r.model_b},{r.region},{r.metric},{r.n},{r.t!r},{r.p!r},{r.note}\n"
                )
        outputs.append("significance.csv")

    RunManifest(
        run_id=f"evaluate-{'-'.join(d.name for d in run_dirs)}",
        command="evaluate",
        config=run_config_to_dict(cfg),
        dataset_hashes={"data_root": _hash_dir(root)},
        version=__version__,
        outputs=outputs,
    ).write(out / "manifest.json")
    return 0


def cmd_report(args) -> int:
    records = []
    for run in args.run:
        path = Path(run)
        csv_path = path if path.suffix == ".csv" else path / "metrics.csv"
        if not csv_path.exists():
            raise DataError(f"no metrics found at {csv_path}")
        records += read_metrics_csv(csv_path)
    out = Path(args.out) if args.out else Path("report")
    _prepare_out(out, args.force)

    paths, notices = render_box_plots(records, out)
    comparisons = significance_report(records) if len({r.model_tag for r in records}) > 1 else None
    write_summary_markdown(records, out / "summary.md", comparisons=comparisons, notices=notices)
    for n in notices:
        print(f"notice: {n}", file=sys.stderr)
    print(f"wrote {len(paths)} plots and summary.md to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptseg",
        description="Domain-adversarial 3D segmentation lab: synthesize data, "
        "train strategies, evaluate, and report.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_data=True):
        p.add_argument("--config", help="run config JSON (default: built-in desk preset)")
        p.add_argument("--force", action="store_true", help="overwrite non-empty output dirs")
        p.add_argument("--out", help="output directory")
        if needs_data:
            p.add_argument(
                "--data-root",
                help=f"dataset root (overrides ${DATA_ROOT_ENV} and the config)",
            )

    p_synth = sub.add_parser("synth", help="generate the two-domain synthetic dataset")
    add_common(p_synth)
    p_synth.set_defaults(func=cmd_synth)

    p_train = sub.add_parser("train", help="train one strategy (or cross-validate with --folds)")
    add_common(p_train)
    p_train.add_argument("--strategy", required=True, choices=list(STRATEGY_NAMES))
    p_train.add_argument("--seed", type=int, help="override training seed")
    p_train.add_argument("--folds", type=int, help="k-fold cross-validation over the target set")
    p_train.add_argument("--pretrained", help="checkpoint path (required for strategies 4-8)")
    p_train.add_argument("--resume", help="resume from a checkpoint file")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="evaluate trained run(s) on the target dataset")
    add_common(p_eval)
    p_eval.add_argument("--run", action="append", required=True, help="run directory (repeatable)")
    p_eval.add_argument("--min-et", type=int, help="also report a table over cases with ET >= N voxels")
    p_eval.set_defaults(func=cmd_evaluate)

    p_report = sub.add_parser("report", help="render box plots and a markdown summary")
    add_common(p_report, needs_data=False)
    p_report.add_argument(
        "--run", action="append", required=True, help="eval directory or metrics CSV (repeatable)"
    )
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataError, TrainingDivergedError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
