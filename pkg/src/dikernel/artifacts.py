"""Binary artifact files for trained maps and fitted predictors.

Layout::

    DIKERNEL-ARTIFACT 1\\n
    <one-line JSON header>\\n
    <payload: float64 little-endian, arrays concatenated in header order, row-major>

The header always carries ``kind`` and ``arrays`` (a list of
``{"name", "shape"}``). Map headers add ``d``, ``n`` or ``J``, the kernel
``family`` and ``gamma``; predictor headers add ``rho``.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .exceptions import DataFormatError
from .feature_maps import FourierMap, NystromMap
from .kernels import KernelConfig
from .predictors import KRRModel

MAGIC = b"DIKERNEL-ARTIFACT 1\n"


def write_artifact(path, header: dict, arrays: dict) -> None:
    header = dict(header)
    header["arrays"] = [{"name": k, "shape": list(np.shape(v))} for k, v in arrays.items()]
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for v in arrays.values():
            fh.write(np.ascontiguousarray(v, dtype="<f8").tobytes())


def read_artifact(path):
    """Return ``(header, {name: array})``."""
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise DataFormatError(f"{path}: not an artifact file")
    end = raw.index(b"\n", len(MAGIC))
    header = json.loads(raw[len(MAGIC):end])
    buf = memoryview(raw)[end + 1:]
    arrays, off = {}, 0
    for spec in header["arrays"]:
        count = int(np.prod(spec["shape"], dtype=np.int64))
        a = np.frombuffer(buf, dtype="<f8", count=count, offset=off * 8)
        arrays[spec["name"]] = a.reshape(spec["shape"]).astype(np.float64)
        off += count
    if off * 8 != len(buf):
        raise DataFormatError(f"{path}: payload size does not match header")
    return header, arrays


def save_map(path, fmap, kcfg: KernelConfig, **extra) -> None:
    head = {"family": kcfg.family, "gamma": kcfg.gamma, "d": fmap.d, **extra}
    if isinstance(fmap, NystromMap):
        head.update(kind="nystrom", n=fmap.n, rank_tol=fmap.rank_tol)
        write_artifact(path, head, {"X_r": fmap.X_r})
    else:
        head.update(kind="fourier", J=fmap.J)
        write_artifact(path, head, {"W_f": fmap.W_f, "b_f": fmap.b_f})


def load_map(path):
    """Return ``(map, kernel_config, header)``."""
    head, arrays = read_artifact(path)
    if head["kind"] not in ("nystrom", "fourier"):
        raise DataFormatError(f"{path}: artifact kind {head['kind']!r} is not a feature map")
    kcfg = KernelConfig(head["family"], head["gamma"])
    if head["kind"] == "nystrom":
        return NystromMap(arrays["X_r"], head.get("rank_tol")), kcfg, head
    return FourierMap(arrays["W_f"], arrays["b_f"]), kcfg, head


def save_model(path, model: KRRModel, **extra) -> None:
    write_artifact(path, {"kind": "krr", "rho": model.rho_used, **extra}, {"W": model.W, "b": model.b})


def load_model(path) -> KRRModel:
    head, arrays = read_artifact(path)
    if head["kind"] != "krr":
        raise DataFormatError(f"{path}: artifact kind {head['kind']!r} is not a KRR model")
    return KRRModel(arrays["W"], arrays["b"], head["rho"])
