"""Command-line entry point: generate, train, sort, eval.

Every command writes a .manifest.json next to its output recording the
resolved arguments, seeds, input/output file hashes, and any metrics, so
a run can be replayed to byte-identical outputs. Outputs are
line-delimited JSON; metrics print with fixed 6-decimal formatting.

Exit codes: 0 success, 1 runtime or validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import data as data_mod
from . import ensemble as ensemble_mod
from . import metrics as metrics_mod
from . import npe as npe_mod
from . import pairwise as pairwise_mod
from . import unary as unary_mod
from .core import Permutation
from .errors import ParseError, StorySortError, UsageError, ValidationError
from .neural import TrainConfig, load_checkpoint_dict

TRAIN_DEFAULTS = {
    "unary": {"epochs": 30, "lr": 0.05, "batch_size": 32},
    "pairwise": {"epochs": 12, "lr": 0.05, "batch_size": 64},
    "npe": {"epochs": 40, "lr": 0.01, "batch_size": 16},
}

MODEL_LOADERS = {
    "unary": unary_mod.unary_from_dict,
    "pairwise": pairwise_mod.pairwise_from_dict,
    "npe": npe_mod.npe_from_dict,
}


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def _round6(value):
    if isinstance(value, float):
        return round(value, 6)
    if isinstance(value, dict):
        return {k: _round6(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_round6(v) for v in value]
    return value


def write_manifest(out_path: Path, command: str, args: dict,
                   inputs: list[Path], outputs: list[Path],
                   metrics: dict | None, started: float) -> Path:
    manifest = {
        "command": command,
        "args": args,
        "seed": args.get("seed"),
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
        "outputs": {str(p): _sha256(Path(p)) for p in outputs},
        "metrics": metrics,
        "duration_sec": round(time.monotonic() - started, 3),
    }
    manifest_path = Path(str(out_path) + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest_path


def argv_from_manifest(manifest: dict, overrides: dict | None = None) -> list[str]:
    """Rebuild the command line that reproduces a manifest's outputs."""
    args = dict(manifest["args"])
    if overrides:
        args.update(overrides)
    argv = [manifest["command"]]
    for key, value in args.items():
        flag = "--" + key.replace("_", "-")
        if value is None:
            continue
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        elif isinstance(value, list):
            for item in value:
                argv.extend([flag, str(item)])
        else:
            argv.extend([flag, str(value)])
    return argv


def _apply_config_file(args: argparse.Namespace) -> argparse.Namespace:
    """Apply key=value overrides from --config on top of parsed flags."""
    if not getattr(args, "config", None):
        return args
    path = Path(args.config)
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip().replace("-", "_")
        raw = raw.strip()
        if not hasattr(args, key):
            raise UsageError(f"{path}:{lineno}: unknown option {key!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        setattr(args, key, value)
    return args


def _resolved_args(args: argparse.Namespace, keys: list[str]) -> dict:
    return {k: getattr(args, k) for k in keys}


def cmd_generate(args: argparse.Namespace) -> int:
    started = time.monotonic()
    try:
        spec = data_mod.SyntheticSpec(
            story_count=args.stories,
            n=args.n,
            text_dim=args.text_dim,
            image_dim=args.image_dim,
            noise_sigma=args.noise,
            signal_mode=args.signal,
            seed=args.seed,
        )
    except StorySortError as e:
        raise UsageError(str(e)) from e
    stories = data_mod.generate_synthetic(spec)
    out = Path(args.out)
    data_mod.save_dataset(stories, out)
    resolved = _resolved_args(
        args, ["stories", "n", "text_dim", "image_dim", "noise", "signal", "seed", "out"]
    )
    write_manifest(out, "generate", resolved, [], [out], None, started)
    print(f"wrote {len(stories)} stories to {out}")
    return 0


def _dataset_report(model, stories) -> metrics_mod.MetricReport:
    if isinstance(model, unary_mod.UnaryModel):
        predict = unary_mod.predict
    elif isinstance(model, pairwise_mod.PairwiseModel):
        predict = pairwise_mod.predict
    else:
        predict = npe_mod.predict
    triples = [
        metrics_mod.score_story(predict(model, s), s.presented_gold()) for s in stories
    ]
    return metrics_mod.aggregate(triples)


def cmd_train(args: argparse.Namespace) -> int:
    started = time.monotonic()
    defaults = TRAIN_DEFAULTS[args.model]
    epochs = args.epochs if args.epochs is not None else defaults["epochs"]
    lr = args.lr if args.lr is not None else defaults["lr"]
    batch_size = args.batch_size if args.batch_size is not None else defaults["batch_size"]
    data_path = Path(args.data)
    stories = data_mod.load_dataset(data_path)
    inputs = [data_path]
    if args.val is not None:
        train_stories = stories
        val_stories = data_mod.load_dataset(Path(args.val))
        inputs.append(Path(args.val))
    else:
        if not 0 < args.val_frac < 1:
            raise UsageError(f"--val-frac must be in (0, 1), got {args.val_frac}")
        train_stories, val_stories, _ = data_mod.split_dataset(
            stories, (1.0 - args.val_frac, args.val_frac, 0.0), args.seed
        )
    cfg = TrainConfig(
        learning_rate=lr, epochs=epochs, batch_size=batch_size,
        seed=args.seed, l2=args.l2,
    )
    if args.model == "unary":
        model = unary_mod.train_unary(
            train_stories, cfg, use_image=args.use_image, hidden_units=args.hidden
        )
        unary_mod.save_unary(model, args.out)
    elif args.model == "pairwise":
        model = pairwise_mod.train_pairwise(
            train_stories, cfg, margin=args.margin, use_image=args.use_image,
            hidden_units=args.hidden,
        )
        pairwise_mod.save_pairwise(model, args.out)
    else:
        npe_cfg = npe_mod.NpeConfig(train=cfg, embed_dim=args.embed_dim, alpha=args.alpha)
        model = npe_mod.train_npe(
            train_stories, npe_cfg, use_image=args.use_image, hidden_units=args.hidden
        )
        npe_mod.save_npe(model, args.out)
    report = {
        "model": args.model,
        "train": _round6(_dataset_report(model, train_stories).to_json()),
        "val": _round6(_dataset_report(model, val_stories).to_json()) if val_stories else None,
    }
    print(json.dumps(report))
    out = Path(args.out)
    resolved = _resolved_args(
        args,
        ["model", "data", "val", "val_frac", "out", "seed", "l2", "hidden",
         "margin", "alpha", "embed_dim", "use_image"],
    )
    resolved.update({"epochs": epochs, "lr": lr, "batch_size": batch_size})
    write_manifest(out, "train", resolved, inputs, [out], report, started)
    return 0


def _load_model(path: Path):
    payload = load_checkpoint_dict(path)
    kind = payload["model_kind"]
    if kind not in MODEL_LOADERS:
        raise UsageError(f"unknown model_kind {kind!r} in {path}")
    return MODEL_LOADERS[kind](payload)


def cmd_sort(args: argparse.Namespace) -> int:
    started = time.monotonic()
    ckpt_paths = [Path(p) for p in args.ckpt]
    models = [_load_model(p) for p in ckpt_paths]
    stories = data_mod.load_dataset(Path(args.data))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        for story in stories:
            if len(models) == 1:
                if isinstance(models[0], unary_mod.UnaryModel):
                    pred = unary_mod.predict(models[0], story)
                elif isinstance(models[0], pairwise_mod.PairwiseModel):
                    pred = pairwise_mod.predict(models[0], story)
                else:
                    pred = npe_mod.predict(models[0], story)
            else:
                pred = ensemble_mod.ensemble_sort(models, story, k=args.topk)
            fh.write(json.dumps(
                {"story_id": story.story_id, "predicted_order": list(pred.positions)}
            ) + "\n")
    resolved = _resolved_args(args, ["data", "out", "topk", "seed"])
    resolved["ckpt"] = [str(p) for p in ckpt_paths]
    write_manifest(out, "sort", resolved,
                   ckpt_paths + [Path(args.data)], [out], None, started)
    print(f"wrote predictions for {len(stories)} stories to {out}")
    return 0


def load_predictions(path: Path) -> dict[str, list[int]]:
    preds = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                preds[str(record["story_id"])] = [int(x) for x in record["predicted_order"]]
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise ParseError(f"{path}:{lineno}: bad prediction record: {e}") from e
    return preds


def cmd_eval(args: argparse.Namespace) -> int:
    started = time.monotonic()
    pred_path = Path(args.pred)
    data_path = Path(args.data)
    preds = load_predictions(pred_path)
    stories = {s.story_id: s for s in data_mod.load_dataset(data_path)}
    missing = sorted(set(preds) - set(stories))
    if missing:
        raise ValidationError(f"predicted story_ids not in dataset: {', '.join(missing)}")
    pairs = []
    for story_id in preds:
        story = stories[story_id]
        pairs.append((Permutation(tuple(preds[story_id])), story.presented_gold()))
    report = metrics_mod.aggregate(
        [metrics_mod.score_story(p, g) for p, g in pairs]
    )
    conf = metrics_mod.confusion(pairs)
    print(json.dumps(_round6(report.to_json())))
    for row in conf.counts:
        print(" ".join(str(int(v)) for v in row))
    result = {
        "report": _round6(report.to_json()),
        "confusion": [[int(v) for v in row] for row in conf.counts],
    }
    outputs = []
    if args.out is not None:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(result) + "\n", encoding="utf-8")
        outputs.append(out)
        manifest_anchor = out
    else:
        manifest_anchor = pred_path
    resolved = _resolved_args(args, ["pred", "data", "out", "seed"])
    write_manifest(manifest_anchor, "eval", resolved,
                   [pred_path, data_path], outputs, result["report"], started)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="storysort",
        description="Order jumbled story elements with learned position and order models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="write a synthetic planted-signal dataset")
    p_gen.add_argument("--stories", type=int, required=True)
    p_gen.add_argument("--n", type=int, default=5)
    p_gen.add_argument("--text-dim", type=int, default=32)
    p_gen.add_argument("--image-dim", type=int, default=16)
    p_gen.add_argument("--noise", type=float, default=0.1)
    p_gen.add_argument("--signal", choices=data_mod.SIGNAL_MODES, default="monotone")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--config", default=None)
    p_gen.set_defaults(func=cmd_generate)

    p_train = sub.add_parser("train", help="train a model and write a checkpoint")
    p_train.add_argument("--model", choices=("unary", "pairwise", "npe"), required=True)
    p_train.add_argument("--data", required=True)
    p_train.add_argument("--val", default=None, help="separate validation dataset")
    p_train.add_argument("--val-frac", type=float, default=0.1)
    p_train.add_argument("--out", required=True)
    p_train.add_argument("--epochs", type=int, default=None)
    p_train.add_argument("--lr", type=float, default=None)
    p_train.add_argument("--batch-size", type=int, default=None)
    p_train.add_argument("--l2", type=float, default=0.0)
    p_train.add_argument("--hidden", type=int, default=64)
    p_train.add_argument("--margin", type=float, default=pairwise_mod.DEFAULT_MARGIN)
    p_train.add_argument("--alpha", type=float, default=npe_mod.DEFAULT_ALPHA)
    p_train.add_argument("--embed-dim", type=int, default=npe_mod.DEFAULT_EMBED_DIM)
    p_train.add_argument("--use-image", action="store_true")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--config", default=None)
    p_train.set_defaults(func=cmd_train)

    p_sort = sub.add_parser("sort", help="predict orders; several --ckpt flags vote")
    p_sort.add_argument("--ckpt", action="append", required=True)
    p_sort.add_argument("--data", required=True)
    p_sort.add_argument("--out", required=True)
    p_sort.add_argument("--topk", type=int, default=ensemble_mod.DEFAULT_TOP_K)
    p_sort.add_argument("--seed", type=int, default=0)
    p_sort.add_argument("--config", default=None)
    p_sort.set_defaults(func=cmd_sort)

    p_eval = sub.add_parser("eval", help="score predictions against gold orders")
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--out", default=None, help="also write report JSON here")
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--config", default=None)
    p_eval.set_defaults(func=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        args = _apply_config_file(args)
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except StorySortError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
