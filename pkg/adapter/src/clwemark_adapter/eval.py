"""End-to-end evaluation driver: prompts -> render -> (perturb) -> invert -> detect.

All watermark operations go through the primary command-line tool as a
subprocess over NPY files; this module never imports it. Detection evidence is
the ``log_p`` field of the extract report (score = -log_p, the saturation-free
form), and per-perturbation ROC AUCs compare marked against unmarked runs that
went through the identical image path.
"""

from __future__ import annotations

import json
import subprocess
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .perturb import perturb
from .pipeline import LatentImageBackend, invert, relative_latent_error, render

DEFAULT_PRIMARY_CLI = ("clwemark",)


def read_prompts(path, limit: int | None = None) -> list[str]:
    """Prompts file: one prompt per line, blank lines skipped."""
    lines = [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines()]
    prompts = [line for line in lines if line]
    if not prompts:
        raise ValueError(f"{path}: no prompts found")
    return prompts[:limit] if limit else prompts


def _run_primary(cli, *args) -> subprocess.CompletedProcess:
    proc = subprocess.run([*cli, *map(str, args)], capture_output=True, text=True)
    if proc.returncode == 2:
        raise RuntimeError(f"primary tool failed: {' '.join(map(str, args))}\n{proc.stderr}")
    return proc


def mark_latent_file(cli, key_file, base_file, out_file, seed: int) -> None:
    _run_primary(cli, "--seed", seed, "mark", "--key", key_file, "--base", base_file,
                 "--out", out_file, "--force")


def extract_score(cli, key_file, latent_file) -> float:
    """-log p detection evidence from the primary extract report."""
    proc = _run_primary(cli, "extract", "--key", key_file, "--latent", latent_file)
    payload = json.loads(proc.stdout.strip().splitlines()[-1])
    log_p = payload["log_p"]
    return float("inf") if log_p is None else -float(log_p)


def roc_auc(pos, neg) -> float:
    pos, neg = np.asarray(pos, dtype=float), np.asarray(neg, dtype=float)
    wins = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
    return float(wins / (pos.size * neg.size))


def fid_or_none(marked_images, unmarked_images) -> float | None:
    """Best-effort FID between the two image sets; None when the stack is absent.

    Reported, never gated: magnitudes depend on the embedding model/version.
    """
    try:
        import torch
        from torchmetrics.image.fid import FrechetInceptionDistance
        from PIL import Image
    except ImportError:
        return None
    try:
        metric = FrechetInceptionDistance(feature=2048)
        for paths, real in ((unmarked_images, True), (marked_images, False)):
            batch = np.stack([np.asarray(Image.open(p).convert("RGB")) for p in paths])
            metric.update(torch.from_numpy(batch).permute(0, 3, 1, 2), real=real)
        return float(metric.compute())
    except Exception:
        return None


def run_eval(
    backend: LatentImageBackend,
    key_file,
    prompts: list[str],
    out_dir,
    config: PipelineConfig | None = None,
    perturbations: dict[str, float] | None = None,
    primary_cli=DEFAULT_PRIMARY_CLI,
    seed: int = 0,
) -> dict:
    """Evaluate recovery AUC per perturbation over marked/unmarked prompt pairs.

    Writes every intermediate artifact under ``out_dir`` plus a
    ``results.json`` with AUCs, inversion diagnostics, and full run metadata
    (config and perturbation levels included, since level conventions are
    implementation-defined).
    """
    config = config or PipelineConfig()
    if perturbations is None:
        perturbations = {"jpeg": 0.95, "brightness": 1.0, "crop": 0.9, "rotate": 30.0}
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    kinds = {"none": 0.0, **perturbations}
    scores: dict[str, dict[str, list[float]]] = {k: {"marked": [], "unmarked": []} for k in kinds}
    inversion_errors: list[float] = []
    image_paths: dict[str, list[Path]] = {"marked": [], "unmarked": []}

    for i, prompt in enumerate(prompts):
        work = out_dir / f"prompt_{i:03d}"
        work.mkdir(exist_ok=True)
        rng = np.random.default_rng([seed, i])
        base = rng.standard_normal(config.latent_shape)
        np.save(work / "unmarked.npy", base)
        mark_latent_file(primary_cli, key_file, work / "unmarked.npy", work / "marked.npy", seed=i)

        for variant in ("marked", "unmarked"):
            latent_file = work / f"{variant}.npy"
            image = render(backend, prompt, latent_file, work / f"{variant}.png", config)
            image_paths[variant].append(image)
            for kind, level in kinds.items():
                perturbed = perturb(image, kind, level, work / f"{variant}_{kind}.png", seed=i)
                estimate = invert(backend, perturbed, work / f"{variant}_{kind}_est.npy", config)
                scores[kind][variant].append(extract_score(primary_cli, key_file, estimate))
                if kind == "none":
                    inversion_errors.append(
                        relative_latent_error(np.load(latent_file), np.load(estimate))
                    )

    aucs = {kind: roc_auc(s["marked"], s["unmarked"]) for kind, s in scores.items()}
    results = {
        "prompts": len(prompts),
        "auc": aucs,
        "mean_inversion_relative_error": float(np.mean(inversion_errors)),
        "fid": fid_or_none(image_paths["marked"], image_paths["unmarked"]),
        "config": config.as_dict(),
        "perturbation_levels": kinds,
        "seed": seed,
    }
    (out_dir / "results.json").write_text(json.dumps(results, indent=2))
    return results
