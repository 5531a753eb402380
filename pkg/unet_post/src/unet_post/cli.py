"""Command-line interface: train / apply / evaluate.

Flag style mirrors the simulator CLI; exit codes 0 success, 1 validation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .eitp import EitpError, PairRecord, read_pair, write_pair
from .evaluate import evaluate_checkpoint
from .model import NetworkSpec
from .train import TrainConfig, apply_network, load_checkpoint, train


def cmd_train(args) -> int:
    spec = NetworkSpec(
        base_channels=args.base_channels,
        residual_skip=args.residual,
        upsample=args.upsample,
    )
    cfg = TrainConfig(
        iterations=args.iterations,
        batch_size=args.batch,
        learning_rate=args.lr,
        val_fraction=args.val_fraction,
        seed=args.seed,
    )
    ck = train(args.data, cfg, spec, checkpoint_path=args.out)
    val = ck["val_curve"]
    print(f"trained {args.iterations} iterations on {ck['config']['n_train']} pairs")
    print(f"validation loss: {val[0][1]:.5g} (start) -> {val[-1][1]:.5g} (end)")
    print(f"checkpoint written to {args.out}")
    return 0


def cmd_apply(args) -> int:
    model, norm, _ = load_checkpoint(args.checkpoint)
    rec = read_pair(args.input)
    post = apply_network(model, norm, rec.recon)
    out_rec = PairRecord(
        truth=rec.truth,
        recon=post,
        m0_imag=rec.m0_imag,
        seed=rec.seed,
        radius=rec.radius,
        sigma_b=rec.sigma_b,
        style=rec.style,
    )
    write_pair(out_rec, args.out)
    print(f"post-processed image written to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    result = evaluate_checkpoint(args.checkpoint, args.data)
    for i, row in enumerate(result["rows"]):
        print(f"pair {i:04d} post: {row['post'].row()}  input: {row['input'].row()}")
    s = result["summary"]
    print(f"mean post : ssim {s['post']['ssim']:.4f}, rel_l1 {s['post']['rel_l1']:.2f}%, "
          f"rel_l2 {s['post']['rel_l2']:.2f}%")
    print(f"mean input: ssim {s['input']['ssim']:.4f}, rel_l1 {s['input']['rel_l1']:.2f}%, "
          f"rel_l2 {s['input']['rel_l2']:.2f}%")
    if args.out:
        Path(args.out).write_text(json.dumps(
            {"summary": s, "count": result["count"]}, indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="unet-post", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train the post-processor on EITP pairs")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--iterations", type=int, default=20_000)
    t.add_argument("--batch", type=int, default=16)
    t.add_argument("--lr", type=float, default=1e-4)
    t.add_argument("--val-fraction", type=float, default=0.05)
    t.add_argument("--base-channels", type=int, default=32)
    t.add_argument("--residual", action=argparse.BooleanOptionalAction, default=True)
    t.add_argument("--upsample", choices=["bilinear", "transpose"], default="bilinear")
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_train)

    a = sub.add_parser("apply", help="post-process one EITP file")
    a.add_argument("--checkpoint", required=True)
    a.add_argument("--input", required=True)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_apply)

    e = sub.add_parser("evaluate", help="score a checkpoint on a test directory")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (EitpError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
