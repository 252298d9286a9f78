"""File formats: raw binary matrices, PGM images, serialized operators,
flat config files, and metrics JSON.

The matrix container is 16 bytes of header (magic ``KBMT``, a one-byte
precision code, three reserved bytes, then little-endian uint32 row and
column counts) followed by the entries row-major in little-endian
IEEE floats.  Code 4 means float32, code 8 float64.
"""

from __future__ import annotations

import json
import math
import os
import struct

import numpy as np

from .exceptions import ValidationError
from .kronop import KroneckerSum
from .rearrange import BlockScheme

MTX_MAGIC = b"KBMT"
_PRECISION_CODES = {4: np.dtype("<f4"), 8: np.dtype("<f8")}
_CODES_BY_DTYPE = {np.dtype(np.float32): 4, np.dtype(np.float64): 8}


def write_mtx(path, mat: np.ndarray) -> None:
    """Write a float32/float64 matrix to the binary container."""
    mat = np.asarray(mat)
    if mat.ndim == 1:
        mat = mat.reshape(-1, 1)
    if mat.ndim != 2:
        raise ValidationError(f"write_mtx expects a matrix, got ndim={mat.ndim}")
    code = _CODES_BY_DTYPE.get(mat.dtype)
    if code is None:
        raise ValidationError(f"unsupported dtype {mat.dtype}; expected float32 or float64")
    header = MTX_MAGIC + struct.pack("<B3xII", code, mat.shape[0], mat.shape[1])
    body = np.ascontiguousarray(mat, dtype=_PRECISION_CODES[code]).tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)


def read_mtx(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != MTX_MAGIC:
            raise ValidationError(f"{path}: not a matrix container (bad magic)")
        code, rows, cols = struct.unpack("<B3xII", header[4:])
        dtype = _PRECISION_CODES.get(code)
        if dtype is None:
            raise ValidationError(f"{path}: unknown precision code {code}")
        body = fh.read(rows * cols * dtype.itemsize)
    if len(body) != rows * cols * dtype.itemsize:
        raise ValidationError(f"{path}: truncated matrix body")
    mat = np.frombuffer(body, dtype=dtype).reshape(rows, cols)
    return mat.astype(dtype.newbyteorder("="))


def write_pgm(path, image: np.ndarray, depth: int = 8) -> None:
    """Write an image with values in [0, 1] as binary PGM (P5).

    depth 8 writes one byte per pixel, depth 16 two big-endian bytes.
    Values are clipped to [0, 1] and scaled to the full range.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValidationError("write_pgm expects a 2-D image")
    if depth == 8:
        maxval, dtype = 255, np.dtype(">u1")
    elif depth == 16:
        maxval, dtype = 65535, np.dtype(">u2")
    else:
        raise ValidationError(f"depth must be 8 or 16, got {depth}")
    quantized = np.rint(np.clip(image, 0.0, 1.0) * maxval).astype(dtype)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{image.shape[1]} {image.shape[0]}\n{maxval}\n".encode("ascii"))
        fh.write(quantized.tobytes())


def _read_pgm_tokens(fh, count: int) -> list[bytes]:
    tokens = []
    while len(tokens) < count:
        chunk = fh.read(1)
        if not chunk:
            raise ValidationError("unexpected end of PGM header")
        if chunk.isspace():
            continue
        if chunk == b"#":
            while fh.read(1) not in (b"\n", b""):
                pass
            continue
        token = chunk
        while True:
            c = fh.read(1)
            if not c or c.isspace():
                break
            token += c
        tokens.append(token)
    return tokens


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM (P5) image, rescaled to floats in [0, 1]."""
    with open(path, "rb") as fh:
        magic = fh.read(2)
        if magic != b"P5":
            raise ValidationError(f"{path}: only binary PGM (P5) is supported")
        width, height, maxval = (int(t) for t in _read_pgm_tokens(fh, 3))
        if maxval < 1 or maxval > 65535:
            raise ValidationError(f"{path}: invalid maxval {maxval}")
        dtype = np.dtype(">u1") if maxval < 256 else np.dtype(">u2")
        body = fh.read(width * height * dtype.itemsize)
    if len(body) != width * height * dtype.itemsize:
        raise ValidationError(f"{path}: truncated PGM body")
    raw = np.frombuffer(body, dtype=dtype).reshape(height, width)
    return raw.astype(np.float64) / maxval


def save_kron_dir(op: KroneckerSum, dirpath, extra_meta: dict | None = None) -> None:
    """Serialize a KroneckerSum as a directory of term files plus metadata."""
    os.makedirs(dirpath, exist_ok=True)
    s = op.scheme
    meta = {
        "k": op.k,
        "scheme": {"m1": s.m1, "m2": s.m2, "n1": s.n1, "n2": s.n2},
    }
    if extra_meta:
        meta.update(extra_meta)
    with open(os.path.join(dirpath, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for i in range(op.k):
        write_mtx(os.path.join(dirpath, f"ax_{i + 1}.mtx"), op.ax[i])
        write_mtx(os.path.join(dirpath, f"ay_{i + 1}.mtx"), op.ay[i])


def load_kron_dir(dirpath) -> tuple[KroneckerSum, dict]:
    """Load a serialized KroneckerSum; returns (operator, metadata)."""
    meta_path = os.path.join(dirpath, "meta.json")
    with open(meta_path) as fh:
        meta = json.load(fh)
    try:
        k = int(meta["k"])
        sm = meta["scheme"]
        scheme = BlockScheme(int(sm["m1"]), int(sm["m2"]), int(sm["n1"]), int(sm["n2"]))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"{meta_path}: malformed operator metadata") from exc
    ax = [read_mtx(os.path.join(dirpath, f"ax_{i + 1}.mtx")) for i in range(k)]
    ay = [read_mtx(os.path.join(dirpath, f"ay_{i + 1}.mtx")) for i in range(k)]
    return KroneckerSum(ax=ax, ay=ay, scheme=scheme), meta


def read_config(path) -> dict[str, str]:
    """Parse a flat ``key = value`` file; '#' starts a comment."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValidationError(f"{path}:{lineno}: expected 'key = value', got {text!r}")
            key, value = text.split("=", 1)
            key = key.strip()
            if not key:
                raise ValidationError(f"{path}:{lineno}: empty key")
            out[key] = value.strip()
    return out


def jsonable(value):
    """Recursively convert metrics values to JSON-safe types.

    Infinities become the strings "infinite"/"-infinite" so downstream
    parsers never see float sentinels; NaN becomes null.
    """
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isinf(value):
            return "infinite" if value > 0 else "-infinite"
        if math.isnan(value):
            return None
        return value
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
