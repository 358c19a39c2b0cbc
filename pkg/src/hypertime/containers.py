"""Binary model containers.

Layout shared by both formats::

    magic (4 bytes) | header length (uint32 LE) | JSON header (UTF-8) | float64 LE payload

``INR1`` payload: per-channel offsets, gains, then the flat parameters.
``HYT1`` payload: encoder parameters then hypernet parameters.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .inr import MlpSpec, ParamVector

INR_MAGIC = b"INR1"
HYT_MAGIC = b"HYT1"
_F64 = np.dtype("<f8")


class ContainerError(ValueError):
    pass


def _spec_dict(spec: MlpSpec) -> dict:
    return {"widths": list(spec.layer_widths), "activation": spec.activation, "omega0": spec.omega0}


def _spec_from(d: dict) -> MlpSpec:
    return MlpSpec(tuple(d["widths"]), d["activation"], float(d["omega0"]))


def _write(path, magic: bytes, header: dict, arrays) -> None:
    head = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<I", len(head)))
        fh.write(head)
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype=_F64).tobytes())


def _read(path, magic: bytes):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != magic:
        raise ContainerError(f"{path}: bad magic {blob[:4]!r}, expected {magic!r}")
    if len(blob) < 8:
        raise ContainerError(f"{path}: truncated header")
    (n,) = struct.unpack("<I", blob[4:8])
    try:
        header = json.loads(blob[8 : 8 + n].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerError(f"{path}: unreadable header ({exc})") from None
    body = blob[8 + n :]
    if len(body) % _F64.itemsize:
        raise ContainerError(f"{path}: payload of {len(body)} bytes is not a whole number of float64")
    payload = np.frombuffer(body, dtype=_F64)
    return header, payload


def save_inr(path, params: ParamVector, offset=None, gain=None, meta: dict | None = None) -> None:
    c = params.spec.n_out
    offset = np.zeros(c) if offset is None else np.asarray(offset, dtype=np.float64)
    gain = np.ones(c) if gain is None else np.asarray(gain, dtype=np.float64)
    header = {"version": 1, "spec": _spec_dict(params.spec), "channels": c, "meta": meta or {}}
    _write(path, INR_MAGIC, header, [offset, gain, params.flat])


def load_inr(path):
    """Returns ``(ParamVector, offset, gain, meta)``."""
    header, payload = _read(path, INR_MAGIC)
    spec = _spec_from(header["spec"])
    c = header["channels"]
    if payload.shape[0] != 2 * c + spec.n_params:
        raise ContainerError(f"{path}: payload has {payload.shape[0]} floats, expected {2 * c + spec.n_params}")
    offset, gain, flat = payload[:c].copy(), payload[c : 2 * c].copy(), payload[2 * c :].copy()
    return ParamVector(flat, spec), offset, gain, header.get("meta", {})


def save_hypertime(path, model) -> None:
    header = {
        "version": 1,
        "encoder": _spec_dict(model.encoder.spec),
        "hyper": _spec_dict(model.hyper.spec),
        "hypo": _spec_dict(model.hypo_spec),
        "lambdas": list(model.lambdas),
        "omega0": model.hypo_spec.omega0,
        "meta": model.meta,
    }
    _write(path, HYT_MAGIC, header, [model.encoder.flat, model.hyper.flat])


def load_hypertime(path):
    from .hyper import HyperTimeModel

    header, payload = _read(path, HYT_MAGIC)
    enc_spec = _spec_from(header["encoder"])
    hyp_spec = _spec_from(header["hyper"])
    hypo_spec = _spec_from(header["hypo"])
    n_enc = enc_spec.n_params
    if payload.shape[0] != n_enc + hyp_spec.n_params:
        raise ContainerError(f"{path}: payload size does not match the stored specs")
    return HyperTimeModel(
        ParamVector(payload[:n_enc].copy(), enc_spec),
        ParamVector(payload[n_enc:].copy(), hyp_spec),
        hypo_spec,
        tuple(header["lambdas"]),
        header.get("meta", {}),
    )
