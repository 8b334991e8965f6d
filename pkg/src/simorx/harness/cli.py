"""Command line entry points.

Verbs map thinly onto the library: train-source, adapt, eval, sweep,
baseline, params.  Outputs (checkpoints, run logs, CSV curves, manifest)
land in --out; the resolved configuration is always echoed next to them.
"""

from __future__ import annotations

import argparse
import os
import sys

from ..channel.profiles import PACKAGED_PROFILES
from ..checkpoint import load_checkpoint, read_checkpoint, save_checkpoint
from ..errors import SimorxError
from ..phy.modulation import get_scheme
from ..training import train_source
from ..transfer import TECHNIQUES, AdaptConfig, adapt, count_params, reference_comparison
from .bler import GenieReceiver, NeuralReceiver, run_bler
from .results import emit_results
from .sweep import SweepConfig, sweep

PROFILE_CHOICES = PACKAGED_PROFILES + ("mixed_cdl",)


def _add_domain_args(p, default_modulation="qpsk"):
    p.add_argument("--scale", default="desk", choices=("desk", "full"))
    p.add_argument("--modulation", default=default_modulation, choices=("qpsk", "16qam", "64qam"))
    p.add_argument("--profile", default="cdl_c_like", choices=PROFILE_CHOICES)
    p.add_argument("--seed", type=int, default=0)


def _parse_ebno(text: str) -> tuple:
    return tuple(float(v) for v in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simorx", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("train-source", help="train a receiver from scratch")
    _add_domain_args(p)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--out", default="runs/source")

    p = sub.add_parser("adapt", help="adapt a source checkpoint to a target domain")
    p.add_argument("--source", required=True, help="source checkpoint file")
    p.add_argument("--technique", required=True, choices=TECHNIQUES)
    p.add_argument("--alpha", type=float, default=0.1)
    _add_domain_args(p, default_modulation="16qam")
    p.add_argument("--iterations", type=int, default=None, help="source-scale budget before alpha")
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--out", default="runs/adapt")

    p = sub.add_parser("eval", help="evaluate a checkpoint (BLER over Eb/No)")
    p.add_argument("--checkpoint", required=True)
    _add_domain_args(p)
    p.add_argument("--ebno", type=_parse_ebno, default=None, help="comma-separated dB values")
    p.add_argument("--max-blocks", type=int, default=None)
    p.add_argument("--name", default="eval")
    p.add_argument("--out", default="runs/eval")

    p = sub.add_parser("sweep", help="run a sweep described by a YAML config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="runs/sweep")

    p = sub.add_parser("baseline", help="genie-aided BLER curve (no model)")
    _add_domain_args(p)
    p.add_argument("--ebno", type=_parse_ebno, default=None)
    p.add_argument("--max-blocks", type=int, default=None)
    p.add_argument("--out", default="runs/baseline")

    p = sub.add_parser("params", help="parameter accounting report")
    p.add_argument("--scale", default="full", choices=("desk", "full"))
    p.add_argument("--modulation", default="qpsk", choices=("qpsk", "16qam", "64qam"))
    return parser


def _train_overrides(args) -> dict:
    out = {}
    if args.iterations is not None:
        out["iterations"] = args.iterations
    if args.batch is not None:
        out["batch"] = args.batch
    return out


def _eval_cfg(args, **extra):
    from ..config import make_eval_config

    over = dict(extra)
    if getattr(args, "ebno", None):
        over["ebno_grid_db"] = args.ebno
    if getattr(args, "max_blocks", None):
        over["max_blocks"] = args.max_blocks
    return make_eval_config(
        args.scale,
        modulation=args.modulation,
        profile=args.profile,
        seed=args.seed,
        **over,
    )


def _cmd_train_source(args) -> int:
    from ..config import dump_yaml, make_train_config

    cfg = make_train_config(
        args.scale,
        modulation=args.modulation,
        profile=args.profile,
        seed=args.seed,
        **_train_overrides(args),
    )
    os.makedirs(args.out, exist_ok=True)
    result = train_source(cfg)
    ckpt = os.path.join(args.out, "source.ckpt")
    save_checkpoint(result.checkpoint, ckpt)
    result.write_log(os.path.join(args.out, "source_log.csv"))
    dump_yaml(
        {"verb": "train-source", "scale": args.scale, **cfg.fingerprint(),
         "batch": cfg.batch, "iterations": cfg.iterations},
        os.path.join(args.out, "config_echo.yaml"),
    )
    print(f"checkpoint: {ckpt}")
    print(f"final L: {result.final_loss:.4f}")
    return 0


def _cmd_adapt(args) -> int:
    from ..config import dump_yaml, make_train_config

    target = make_train_config(
        args.scale,
        modulation=args.modulation,
        profile=args.profile,
        seed=args.seed,
        **_train_overrides(args),
    )
    cfg = AdaptConfig(args.technique, args.alpha, target)
    os.makedirs(args.out, exist_ok=True)
    result = adapt(args.source, cfg)
    name = f"{args.technique}_a{args.alpha}"
    ckpt = os.path.join(args.out, f"{name}.ckpt")
    save_checkpoint(result.checkpoint, ckpt)
    result.write_log(os.path.join(args.out, f"{name}_log.csv"))
    dump_yaml(
        {"verb": "adapt", "technique": args.technique, "alpha": args.alpha,
         "steps": result.steps, "scale": args.scale, **target.fingerprint()},
        os.path.join(args.out, "config_echo.yaml"),
    )
    for line in result.transplant_delta:
        print(line)
    print(f"checkpoint: {ckpt} ({result.steps} iterations)")
    return 0


def _cmd_eval(args) -> int:
    loaded = load_checkpoint(args.checkpoint, policy="strict")
    eval_cfg = _eval_cfg(args)
    receiver = NeuralReceiver(loaded.model, eval_cfg.grid, loaded.checkpoint.fingerprint_id)
    curve = run_bler(eval_cfg, receiver)
    curve.metadata.update(seed=args.seed, technique="eval")
    paths = emit_results(
        {args.name: curve},
        args.out,
        {"verb": "eval", "checkpoint": args.checkpoint, "scale": args.scale,
         "modulation": args.modulation, "profile": args.profile, "seed": args.seed,
         "ebno_grid_db": list(eval_cfg.ebno_grid_db), "max_blocks": eval_cfg.max_blocks},
        profiles={args.profile},
    )
    for p in paths:
        print(p)
    return 0


def _cmd_sweep(args) -> int:
    from ..config import load_yaml

    cfg = SweepConfig.from_dict(load_yaml(args.config))
    result = sweep(cfg, args.out)
    for p in result.curve_paths + [result.manifest_path]:
        print(p)
    return 0


def _cmd_baseline(args) -> int:
    eval_cfg = _eval_cfg(args)
    curve = run_bler(eval_cfg, GenieReceiver(get_scheme(args.modulation), eval_cfg.grid))
    curve.metadata.update(seed=args.seed, technique="genie")
    paths = emit_results(
        {"genie": curve},
        args.out,
        {"verb": "baseline", "scale": args.scale, "modulation": args.modulation,
         "profile": args.profile, "seed": args.seed,
         "ebno_grid_db": list(eval_cfg.ebno_grid_db), "max_blocks": eval_cfg.max_blocks},
        profiles={args.profile},
    )
    for p in paths:
        print(p)
    return 0


def _cmd_params(args) -> int:
    from ..config import make_train_config
    from ..receiver import ReceiverModel

    cfg = make_train_config(args.scale, modulation=args.modulation)
    model = ReceiverModel(cfg.model_spec())
    print(count_params(model).format())
    print()
    print(reference_comparison(cfg))
    return 0


_COMMANDS = {
    "train-source": _cmd_train_source,
    "adapt": _cmd_adapt,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "baseline": _cmd_baseline,
    "params": _cmd_params,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.verb](args)
    except SimorxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
