"""Adapter command line: render, invert, perturb, run-eval."""

from __future__ import annotations

import argparse
import json
import sys

from .config import PipelineConfig
from .eval import DEFAULT_PRIMARY_CLI, read_prompts, run_eval
from .perturb import KINDS, perturb
from .pipeline import invert, render


def _backend(args):
    if args.backend == "fake":
        from .testing import EncodingBackend

        return EncodingBackend()
    from .pipeline import StableDiffusionBackend

    return StableDiffusionBackend(_config(args), scheduler_seed=args.seed)


def _config(args) -> PipelineConfig:
    kwargs = {}
    if args.model:
        kwargs["model_id"] = args.model
    if args.steps:
        kwargs["steps"] = args.steps
    if args.latent_shape:
        kwargs["latent_shape"] = tuple(int(v) for v in args.latent_shape.split(","))
    if args.image_size:
        kwargs["image_size"] = tuple(int(v) for v in args.image_size.split(","))
    return PipelineConfig(**kwargs)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="clwemark-adapter",
        description="Diffusion-model bridge: render watermark latents to images, "
        "invert images to latent estimates, and apply benign perturbations.",
    )
    parser.add_argument("--backend", choices=["diffusers", "fake"], default="diffusers")
    parser.add_argument("--model", default=None)
    parser.add_argument("--steps", type=int, default=None)
    parser.add_argument("--latent-shape", default=None, metavar="C,H,W")
    parser.add_argument("--image-size", default=None, metavar="W,H")
    parser.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="latent NPY -> image")
    p.add_argument("--prompt", required=True)
    p.add_argument("--latent", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("invert", help="image -> latent-estimate NPY")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("perturb", help="apply one image perturbation")
    p.add_argument("--image", required=True)
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--level", type=float, default=1.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("run-eval", help="prompts -> render/invert/extract AUC sweep")
    p.add_argument("--key", required=True, help="primary key file")
    p.add_argument("--prompts", required=True, help="text file, one prompt per line")
    p.add_argument("--limit", type=int, default=100, help="use only the first N prompts")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--primary-cli", default=None, help="override primary tool invocation")

    args = parser.parse_args(argv)
    try:
        if args.command == "render":
            render(_backend(args), args.prompt, args.latent, args.out, _config(args))
            print(f"wrote {args.out}")
        elif args.command == "invert":
            invert(_backend(args), args.image, args.out, _config(args))
            print(f"wrote {args.out}")
        elif args.command == "perturb":
            perturb(args.image, args.kind, args.level, args.out, seed=args.seed)
            print(f"wrote {args.out}")
        elif args.command == "run-eval":
            cli = tuple(args.primary_cli.split()) if args.primary_cli else DEFAULT_PRIMARY_CLI
            results = run_eval(
                _backend(args),
                args.key,
                read_prompts(args.prompts, args.limit),
                args.out,
                _config(args),
                primary_cli=cli,
                seed=args.seed,
            )
            print(json.dumps(results, indent=2))
        return 0
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
