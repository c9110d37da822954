"""Persistence: NPY v1.0 tensor files, textual key files, CSV trial tables.

Tensors travel as NPY version 1.0 exactly (magic ``\\x93NUMPY``, version byte
pair 1.0, little-endian header dict, C-contiguous payload) so that any NumPy
ecosystem tool — including the rendering adapter — reads and writes them
natively, while this module stays strict about what it accepts.
"""

from __future__ import annotations

import ast
import csv
from pathlib import Path

import numpy as np

from .clwe import ClweParams
from .engine import KEY_FORMAT_VERSION, SecretKey
from .wavelet import BlockShape

_MAGIC = b"\x93NUMPY"
_ACCEPTED_DESCR = {"<f8": np.dtype("<f8"), "<f4": np.dtype("<f4")}


class TensorFormatError(ValueError):
    """A tensor file violates the pinned NPY 1.0 contract."""


class KeyFormatError(ValueError):
    """A key file is malformed or fails a key invariant."""


def write_tensor(tensor, path) -> None:
    """Write a (channels, height, width) float64 tensor as NPY v1.0."""
    arr = np.ascontiguousarray(tensor, dtype="<f8")
    if arr.ndim != 3:
        raise TensorFormatError(f"tensor must have rank 3, got rank {arr.ndim}")
    header = "{'descr': '<f8', 'fortran_order': False, 'shape': %s, }" % (arr.shape,)
    # Pad so magic + version + length word + header is 64-byte aligned.
    prefix_len = len(_MAGIC) + 2 + 2
    pad = (-(prefix_len + len(header) + 1)) % 64
    header = header + " " * pad + "\n"
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(bytes((1, 0)))
        fh.write(len(header).to_bytes(2, "little"))
        fh.write(header.encode("latin1"))
        fh.write(arr.tobytes(order="C"))


def read_tensor(path) -> np.ndarray:
    """Read an NPY v1.0 tensor of shape (channels, height, width).

    Accepts little-endian 32- or 64-bit floats; returns float64. Anything
    else — wrong magic, other NPY versions, exotic dtypes, non-C order, wrong
    rank — is rejected with a descriptive error.
    """
    raw = Path(path).read_bytes()
    if raw[: len(_MAGIC)] != _MAGIC:
        raise TensorFormatError(f"{path}: bad magic, not an NPY file")
    if len(raw) < 10:
        raise TensorFormatError(f"{path}: truncated NPY header")
    major, minor = raw[6], raw[7]
    if (major, minor) != (1, 0):
        raise TensorFormatError(f"{path}: unsupported NPY version {major}.{minor}, need 1.0")
    hlen = int.from_bytes(raw[8:10], "little")
    header_end = 10 + hlen
    if len(raw) < header_end:
        raise TensorFormatError(f"{path}: truncated NPY header")
    try:
        header = ast.literal_eval(raw[10:header_end].decode("latin1"))
    except (ValueError, SyntaxError) as exc:
        raise TensorFormatError(f"{path}: unparseable NPY header ({exc})") from exc
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise TensorFormatError(f"{path}: malformed NPY header dict")
    descr = header["descr"]
    if descr not in _ACCEPTED_DESCR:
        raise TensorFormatError(
            f"{path}: dtype {descr!r} not supported (need little-endian '<f4' or '<f8')"
        )
    if header["fortran_order"]:
        raise TensorFormatError(f"{path}: Fortran-ordered payload not supported")
    shape = tuple(header["shape"])
    if len(shape) != 3:
        raise TensorFormatError(
            f"{path}: tensor must have rank 3 (channels, height, width), got shape {shape}"
        )
    dtype = _ACCEPTED_DESCR[descr]
    expected = int(np.prod(shape)) * dtype.itemsize
    payload = raw[header_end:]
    if len(payload) != expected:
        raise TensorFormatError(
            f"{path}: payload holds {len(payload)} bytes, header promises {expected}"
        )
    data = np.frombuffer(payload, dtype=dtype).reshape(shape)
    return data.astype(np.float64)


_KEY_FIELDS = (
    "format_version",
    "gamma",
    "beta",
    "block_shape",
    "latent_dims",
    "threshold",
    "direction",
)


def write_key(key: SecretKey, path) -> None:
    """Serialize a key as line-oriented ``field=value`` text.

    Fields appear in canonical order; floats use ``repr`` so they round-trip
    bit-exactly.
    """
    lines = [
        f"format_version={key.format_version}",
        f"gamma={key.params.gamma!r}",
        f"beta={key.params.beta!r}",
        f"block_shape={key.block_shape.bc},{key.block_shape.bh},{key.block_shape.bw}",
        f"latent_dims={key.latent_dims[0]},{key.latent_dims[1]},{key.latent_dims[2]}",
        f"threshold={key.threshold!r}",
        "direction=" + ",".join(repr(x) for x in key.direction.tolist()),
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_key(path) -> SecretKey:
    """Load and validate a key file; refuses anything violating key invariants."""
    fields: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="ascii").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if "=" not in line:
            raise KeyFormatError(f"{path}:{lineno}: expected field=value")
        name, _, value = line.partition("=")
        if name not in _KEY_FIELDS:
            raise KeyFormatError(f"{path}:{lineno}: unknown field {name!r}")
        if name in fields:
            raise KeyFormatError(f"{path}:{lineno}: duplicate field {name!r}")
        fields[name] = value
    missing = [f for f in _KEY_FIELDS if f not in fields]
    if missing:
        raise KeyFormatError(f"{path}: missing fields {missing}")

    try:
        version = int(fields["format_version"])
        gamma = float(fields["gamma"])
        beta = float(fields["beta"])
        threshold = float(fields["threshold"])
        block = tuple(int(v) for v in fields["block_shape"].split(","))
        dims = tuple(int(v) for v in fields["latent_dims"].split(","))
        direction = np.array([float(v) for v in fields["direction"].split(",")])
    except ValueError as exc:
        raise KeyFormatError(f"{path}: {exc}") from exc
    if version != KEY_FORMAT_VERSION:
        raise KeyFormatError(f"{path}: unsupported key format version {version}")
    if len(block) != 3 or len(dims) != 3:
        raise KeyFormatError(f"{path}: block_shape and latent_dims need 3 entries")
    norm_err = abs(np.linalg.norm(direction) - 1.0)
    if norm_err > 1e-9:
        raise KeyFormatError(f"{path}: direction is not unit length (|norm-1| = {norm_err:.3g})")
    try:
        return SecretKey(
            direction=direction,
            params=ClweParams(n=direction.size, gamma=gamma, beta=beta),
            block_shape=BlockShape(*block),
            latent_dims=dims,
            threshold=threshold,
            format_version=version,
        )
    except ValueError as exc:
        raise KeyFormatError(f"{path}: {exc}") from exc


def write_trial_table(path, rows) -> None:
    """Write covariance-attack trial rows with the documented header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "m", "gamma", "beta", "trial", "label", "score"])
        for row in rows:
            writer.writerow(row)
