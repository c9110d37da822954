"""Command-line surface.

Subcommands: ``keygen``, ``mark``, ``extract``, ``simulate detect-roc``,
``attack covariance``, ``attack average``, ``rose``. Every run with a fixed
``--seed`` is bit-reproducible. Exit codes: 0 success (or watermark detected),
1 watermark not detected (``extract``), 2 usage or runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import io as cio
from .attacks import AttackTrialConfig, averaging_attack, covariance_auc, roc_auc
from .clwe import ClweParams
from .engine import detection_score, extract_latent, latent_phases, mark_latent, setup
from .experiments import detection_auc_at_noise, marked_pair, random_latent, simulate_phase_sets
from .io import KeyFormatError, TensorFormatError
from .stats import derive_substream, rose_histogram
from .wavelet import BlockShape


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _fresh_seed() -> int:
    return int(np.random.SeedSequence().entropy) & ((1 << 63) - 1)


def _resolve_seed(args) -> int:
    seed = _pick(args, "seed")
    if seed is None:
        seed = _fresh_seed()
        print(f"seed={seed} (auto-generated; pass --seed to reproduce)", file=sys.stderr)
    return int(seed)


def _check_output(path, force: bool) -> None:
    if path and Path(path).exists() and not force:
        raise FileExistsError(f"{path} exists; pass --force to overwrite")


_CONFIG_CACHE: dict | None = None


def _pick(args, name, default=None):
    """Resolution order: explicit CLI value > config file > default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    if _CONFIG_CACHE and name in _CONFIG_CACHE:
        return _CONFIG_CACHE[name]
    return default


def _load_config(args, parser: argparse.ArgumentParser) -> None:
    global _CONFIG_CACHE
    _CONFIG_CACHE = None
    if getattr(args, "config", None) is None:
        return
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"--config {args.config}: {exc}")
    if not isinstance(cfg, dict):
        parser.error(f"--config {args.config}: top level must be a JSON object")
    known = {
        "seed", "threshold", "gamma", "beta", "block", "dims", "trials",
        "noise_grid", "n_grid", "m_grid", "gamma_grid", "samples", "bins",
        "noise_width",
    }
    unknown = set(cfg) - known
    if unknown:
        parser.error(f"--config {args.config}: unknown fields {sorted(unknown)}")
    for key in ("block", "dims"):
        if key in cfg:
            cfg[key] = tuple(int(v) for v in cfg[key])
    for key in ("noise_grid", "gamma_grid"):
        if key in cfg:
            cfg[key] = tuple(float(v) for v in cfg[key])
    for key in ("n_grid", "m_grid"):
        if key in cfg:
            cfg[key] = tuple(int(v) for v in cfg[key])
    _CONFIG_CACHE = cfg


def _key_params(args):
    gamma = float(_pick(args, "gamma", 2.0))
    beta = float(_pick(args, "beta", 0.001))
    block = BlockShape(*_pick(args, "block", (2, 4, 4)))
    dims = tuple(_pick(args, "dims", (4, 64, 64)))
    threshold = float(_pick(args, "threshold", 0.01))
    return ClweParams(n=block.n, gamma=gamma, beta=beta), block, dims, threshold


def _cmd_keygen(args) -> int:
    params, block, dims, threshold = _key_params(args)
    seed = _resolve_seed(args)
    _check_output(args.out, args.force)
    key = setup(derive_substream(seed, 0), params, block, dims, threshold)
    cio.write_key(key, args.out)
    print(f"wrote key: n={params.n} gamma={params.gamma} beta={params.beta} -> {args.out}")
    return 0


def _cmd_mark(args) -> int:
    key = cio.read_key(args.key)
    seed = _resolve_seed(args)
    rng = derive_substream(seed, 1)
    if args.base:
        base = cio.read_tensor(args.base)
    else:
        base = random_latent(rng, key.latent_dims)
    _check_output(args.out, args.force)
    if args.save_base:
        _check_output(args.save_base, args.force)
        cio.write_tensor(base, args.save_base)
    marked = mark_latent(base, key, rng)
    cio.write_tensor(marked, args.out)
    print(f"wrote marked latent {marked.shape} -> {args.out}")
    return 0


def _cmd_extract(args) -> int:
    key = cio.read_key(args.key)
    latent = cio.read_tensor(args.latent)
    threshold = _pick(args, "threshold")
    report = extract_latent(latent, key, None if threshold is None else float(threshold))
    payload = report.as_dict()
    for name, value in payload.items():
        print(f"{name}={str(value).lower() if isinstance(value, bool) else value}")
    if not np.isfinite(payload["log_p"]):
        payload["log_p"] = None  # strict JSON has no -Infinity
    print(json.dumps(payload))
    return 0 if report.decision else 1


def _cmd_simulate_detect_roc(args) -> int:
    params, block, dims, threshold = _key_params(args)
    seed = _resolve_seed(args)
    trials = int(_pick(args, "trials", 100))
    grid = _pick(args, "noise_grid", (0.0, 0.05, 0.1, 0.2, 0.4, 0.8))
    _check_output(args.out, args.force)
    key = setup(derive_substream(seed, 0), params, block, dims, threshold)
    rows = []
    for i, sigma in enumerate(grid):
        result = detection_auc_at_noise(key, float(sigma), trials, seed + 1000 * (i + 1))
        rows.append((float(sigma), result.auc, trials))
        print(f"noise_sigma={sigma} auc={result.auc:.4f} trials={trials}")
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["noise_sigma", "auc", "trials"])
        writer.writerows(rows)
    return 0


def _cmd_attack_covariance(args) -> int:
    seed = _resolve_seed(args)
    trials = int(_pick(args, "trials", 100))
    beta = float(_pick(args, "beta", 0.001))
    n_grid = _pick(args, "n_grid", (32,))
    m_grid = _pick(args, "m_grid", (1_000, 10_000, 100_000))
    gamma_grid = _pick(args, "gamma_grid", (1.0, 2.0, 4.0, 8.0))
    if max(m_grid) > 200_000 and not args.allow_large:
        raise ValueError(
            f"m={max(m_grid)} is a long run; pass --allow-large to confirm"
        )
    _check_output(args.out, args.force)
    table = []
    for n in n_grid:
        for gamma in gamma_grid:
            for m in m_grid:
                cfg = AttackTrialConfig(n=int(n), m=int(m), gamma=float(gamma), beta=beta, trials=trials, seed=seed)
                result = covariance_auc(cfg)
                for t in range(trials):
                    table.append((n, m, gamma, beta, t, "clwe", result.scores_positive[t]))
                    table.append((n, m, gamma, beta, t, "normal", result.scores_negative[t]))
                print(f"n={n} m={m} gamma={gamma} beta={beta} trials={trials} auc={result.auc:.4f}")
    cio.write_trial_table(args.out, table)
    return 0


def _cmd_attack_average(args) -> int:
    key = cio.read_key(args.key)
    pairs_dir = Path(args.pairs)
    seed = _resolve_seed(args)
    if args.generate:
        pairs_dir.mkdir(parents=True, exist_ok=True)
        for i in range(args.generate):
            base_path = pairs_dir / f"unmarked_{i:04d}.npy"
            marked_path = pairs_dir / f"marked_{i:04d}.npy"
            _check_output(base_path, args.force)
            _check_output(marked_path, args.force)
            rng = derive_substream(seed, 10_000 + i)
            base, marked = marked_pair(key, rng)
            cio.write_tensor(base, base_path)
            cio.write_tensor(marked, marked_path)
    marked_paths = sorted(pairs_dir.glob("marked_*.npy"))
    unmarked_paths = sorted(pairs_dir.glob("unmarked_*.npy"))
    if not marked_paths or len(marked_paths) != len(unmarked_paths):
        raise ValueError(
            f"{pairs_dir}: need matching marked_*.npy / unmarked_*.npy pairs, "
            f"found {len(marked_paths)} / {len(unmarked_paths)}"
        )
    marked = [cio.read_tensor(p) for p in marked_paths]
    unmarked = [cio.read_tensor(p) for p in unmarked_paths]
    mean_diff, cleaned = averaging_attack(marked, unmarked)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for path, tensor in zip(marked_paths, cleaned):
        target = out_dir / path.name.replace("marked_", "cleaned_")
        _check_output(target, args.force)
        cio.write_tensor(tensor, target)
    diffs = np.stack([m - u for m, u in zip(marked, unmarked)])
    se = diffs.std(axis=0, ddof=1) / np.sqrt(len(marked))
    pos = [detection_score(t, key) for t in cleaned]
    neg = [detection_score(t, key) for t in unmarked]
    auc = roc_auc(pos, neg)
    print(f"pairs={len(marked)}")
    print(f"max_abs_mean_diff={np.abs(mean_diff).max():.6g}")
    print(f"max_abs_mean_over_se={np.max(np.abs(mean_diff) / se):.4f}")
    print(f"post_attack_auc={auc:.4f}")
    return 0


def _cmd_rose(args) -> int:
    bins = int(_pick(args, "bins", 36))
    seed = _resolve_seed(args)
    _check_output(args.out, args.force)
    cases: dict[str, np.ndarray]
    if args.latent:
        if not args.key:
            raise ValueError("rose --latent requires --key")
        key = cio.read_key(args.key)
        latent = cio.read_tensor(args.latent)
        cases = {"latent": latent_phases(latent, key)}
    else:
        gamma = float(_pick(args, "gamma", 2.0))
        beta = float(_pick(args, "beta", 0.1))
        m = int(_pick(args, "samples", 10_000))
        noise_width = float(_pick(args, "noise_width", 0.2))
        params = ClweParams(n=32, gamma=gamma, beta=beta)
        cases = simulate_phase_sets(m, params, noise_width, derive_substream(seed, 2))
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case", "bin", "lo", "hi", "count"])
        for name, z in cases.items():
            hist = rose_histogram(z, bins)
            edges = hist.bin_edges
            for b in range(bins):
                writer.writerow([name, b, edges[b], edges[b + 1], hist.counts[b]])
    print(f"wrote {sum(len(z) for z in cases.values())} phases over {bins} bins -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clwemark",
        description="Pancake-structured latent watermarking: key management, "
        "marking, detection, and distinguishing-attack experiments.",
    )
    parser.add_argument("--seed", type=int, default=None, help="global random seed (bit-reproducible runs)")
    parser.add_argument("--threshold", type=float, default=None, help="detection p-value threshold")
    parser.add_argument("--config", default=None, help="JSON file with default parameter values")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_key_params(p):
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--block", type=_ints, default=None, metavar="BC,BH,BW")
        p.add_argument("--dims", type=_ints, default=None, metavar="C,H,W")

    p = sub.add_parser("keygen", help="generate a key file")
    add_key_params(p)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_keygen)

    p = sub.add_parser("mark", help="embed the watermark into a latent tensor")
    p.add_argument("--key", required=True)
    p.add_argument("--base", default=None, help="base latent NPY (default: draw from seed)")
    p.add_argument("--save-base", default=None, help="also write the base latent here")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_mark)

    p = sub.add_parser("extract", help="detect the watermark in a latent tensor")
    p.add_argument("--key", required=True)
    p.add_argument("--latent", required=True)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("simulate", help="statistical simulations")
    sim_sub = p.add_subparsers(dest="simulation", required=True)
    p = sim_sub.add_parser("detect-roc", help="detection AUC across latent noise levels")
    add_key_params(p)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--noise-grid", type=_floats, default=None, metavar="S0,S1,...")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_simulate_detect_roc)

    p = sub.add_parser("attack", help="distinguishing attacks")
    atk_sub = p.add_subparsers(dest="attack", required=True)

    p = atk_sub.add_parser("covariance", help="eigenvalue-deviation attack AUC grid")
    p.add_argument("--n-grid", type=_ints, default=None)
    p.add_argument("--m-grid", type=_ints, default=None)
    p.add_argument("--gamma-grid", type=_floats, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--allow-large", action="store_true", help="permit m beyond 2e5")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_attack_covariance)

    p = atk_sub.add_parser("average", help="mean-difference removal attack on latent pairs")
    p.add_argument("--key", required=True)
    p.add_argument("--pairs", required=True, help="directory of marked_*.npy / unmarked_*.npy")
    p.add_argument("--generate", type=int, default=0, metavar="N", help="synthesize N pairs first")
    p.add_argument("--out", required=True, help="directory for cleaned latents")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_attack_average)

    p = sub.add_parser("rose", help="phase histogram data (circular rose diagram)")
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--key", default=None)
    p.add_argument("--latent", default=None, help="compute phases of this latent instead of simulating")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--noise-width", type=float, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_rose)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _load_config(args, parser)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyFormatError, TensorFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
