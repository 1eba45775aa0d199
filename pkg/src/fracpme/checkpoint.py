"""Checkpoint files: a JSON header line followed by raw complex coefficients.

Layout (see docs/checkpoint.md)::

    <one line of UTF-8 JSON, terminated by b"\\n">
    <prod(shape) little-endian complex128 values, C order>

The coefficients are the full ``fftn(values) / N`` array of a Field, i.e.
the ``coeffs`` of its SpectralField.  Header keys: ``format``
("fracpme-checkpoint"), ``version`` (1), ``manifold`` (ManifoldSpec.to_dict),
``config`` (PMEConfig.to_dict or null), ``time``, ``dtype`` ("<c16"),
``shape``.  Unknown header keys are ignored by readers, so later versions
may add keys without breaking version-1 readers.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .solver import PMEConfig
from .torus import Field, ManifoldSpec, SpectralField, forward_transform, inverse_transform

__all__ = ["Checkpoint", "save_checkpoint", "load_checkpoint", "checkpoint_bytes", "CHECKPOINT_FORMAT",
           "CHECKPOINT_VERSION"]

CHECKPOINT_FORMAT = "fracpme-checkpoint"
CHECKPOINT_VERSION = 1
_DTYPE = "<c16"


@dataclass(frozen=True)
class Checkpoint:
    coeffs: SpectralField
    time: float
    config: PMEConfig | None
    header: dict

    @property
    def field(self) -> Field:
        return inverse_transform(self.coeffs)


def checkpoint_bytes(u: Field | SpectralField, time: float = 0.0, config: PMEConfig | None = None) -> bytes:
    """Serialize ``u`` to the checkpoint layout (header line + raw coefficients)."""
    c = forward_transform(u) if isinstance(u, Field) else u
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "manifold": c.spec.to_dict(),
        "config": None if config is None else config.to_dict(),
        "time": float(time),
        "dtype": _DTYPE,
        "shape": list(c.coeffs.shape),
    }
    return json.dumps(header, sort_keys=True).encode() + b"\n" + np.ascontiguousarray(c.coeffs, dtype=_DTYPE).tobytes()


def save_checkpoint(path: str | os.PathLike, u: Field | SpectralField, time: float = 0.0,
                    config: PMEConfig | None = None) -> Path:
    """Write ``u`` atomically (temporary file + rename)."""
    path = Path(path)
    payload = checkpoint_bytes(u, time, config)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load_checkpoint(path: str | os.PathLike) -> Checkpoint:
    data = Path(path).read_bytes()
    nl = data.find(b"\n")
    if nl < 0:
        raise ValueError("not a checkpoint: missing header line")
    try:
        header = json.loads(data[:nl].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"not a checkpoint: bad header ({exc})") from None
    if header.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unexpected checkpoint format {header.get('format')!r}")
    if int(header.get("version", 0)) > CHECKPOINT_VERSION:
        raise ValueError(f"checkpoint version {header['version']} is newer than supported ({CHECKPOINT_VERSION})")
    if header.get("dtype") != _DTYPE:
        raise ValueError(f"unsupported dtype {header.get('dtype')!r}")
    spec = ManifoldSpec.from_dict(header["manifold"])
    shape = tuple(header["shape"])
    if shape != spec.shape:
        raise ValueError(f"shape {shape} does not match manifold grid {spec.shape}")
    body = data[nl + 1:]
    expected = int(np.prod(shape)) * 16
    if len(body) != expected:
        raise ValueError(f"checkpoint body has {len(body)} bytes, expected {expected}")
    coeffs = np.frombuffer(body, dtype=_DTYPE).reshape(shape).astype(complex)
    cfg = None if header.get("config") is None else PMEConfig.from_dict(header["config"])
    return Checkpoint(SpectralField(spec, coeffs), float(header["time"]), cfg, header)
