"""
Binary files for discriminator features and fitted models.

FVEC1 (features), little-endian:
    b"FVEC1", uint32 count, uint32 dim, count x dim float32 rows

OCSV1 (model), little-endian:
    b"OCSV1", uint32 n_sv, uint32 dim, uint32 n_train, uint32 n_iter, uint8 converged,
    float64 nu, gamma, rho, calib_min_v, calib_max_v,
    float64 mean[dim], scale[dim], alphas[n_sv], support_vectors[n_sv x dim]

Every float of the model is stored as float64, so a round-trip is bit-exact.
Uncalibrated models store NaN calibration extremes.
"""

import os
import struct
from typing import Union

import numpy as np

from ferroscope.ocsvm.model import OcsvmModel
from ferroscope.utils.errors import FormatError
from ferroscope.utils.fileio import atomic_write_bytes

FVEC_MAGIC = b"FVEC1"
OCSV_MAGIC = b"OCSV1"
PathLike = Union[str, os.PathLike]

_OCSV_HEADER = struct.Struct("<IIIIB5d")


def encode_features(features: np.ndarray) -> bytes:
    rows = np.ascontiguousarray(np.asarray(features), dtype="<f4")
    if rows.ndim != 2:
        raise FormatError(f"Feature block must be 2-D, got shape {rows.shape}")
    return FVEC_MAGIC + struct.pack("<II", rows.shape[0], rows.shape[1]) + rows.tobytes()


def decode_features(payload: bytes) -> np.ndarray:
    if payload[:len(FVEC_MAGIC)] != FVEC_MAGIC:
        raise FormatError("Not an FVEC1 feature file (bad magic)")
    head = len(FVEC_MAGIC) + 8
    if len(payload) < head:
        raise FormatError("Truncated FVEC1 header")
    count, dim = struct.unpack("<II", payload[len(FVEC_MAGIC):head])
    expected = head + 4 * count * dim
    if len(payload) != expected:
        raise FormatError(f"FVEC1 size mismatch: expected {expected} bytes, got {len(payload)}")
    return np.frombuffer(payload, dtype="<f4", offset=head).reshape(count, dim).astype(np.float32)


def write_features(path: PathLike, features: np.ndarray) -> None:
    atomic_write_bytes(path, encode_features(features))


def read_features(path: PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_features(fh.read())


def encode_model(model: OcsvmModel) -> bytes:
    n_sv, dim = model.support_vectors.shape[0], model.dim
    header = _OCSV_HEADER.pack(
        n_sv,
        dim,
        model.n_train,
        model.n_iter,
        int(bool(model.converged)),
        model.nu,
        model.gamma,
        model.rho,
        model.calib_min_v,
        model.calib_max_v,
    )
    arrays = [model.mean, model.scale, model.alphas, model.support_vectors.reshape(n_sv * dim)]
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)
    return OCSV_MAGIC + header + body


def decode_model(payload: bytes) -> OcsvmModel:
    if payload[:len(OCSV_MAGIC)] != OCSV_MAGIC:
        raise FormatError("Not an OCSV1 model file (bad magic)")
    start = len(OCSV_MAGIC)
    end = start + _OCSV_HEADER.size
    if len(payload) < end:
        raise FormatError("Truncated OCSV1 header")
    n_sv, dim, n_train, n_iter, converged, nu, gamma, rho, low, high = _OCSV_HEADER.unpack(payload[start:end])
    sizes = [dim, dim, n_sv, n_sv * dim]
    if len(payload) != end + 8 * sum(sizes):
        raise FormatError("OCSV1 size mismatch")
    arrays = []
    offset = end
    for size in sizes:
        arrays.append(np.frombuffer(payload, dtype="<f8", count=size, offset=offset).astype(np.float64))
        offset += 8 * size
    mean, scale, alphas, sv = arrays
    return OcsvmModel(
        support_vectors=sv.reshape(n_sv, dim),
        alphas=alphas,
        rho=rho,
        gamma=gamma,
        nu=nu,
        mean=mean,
        scale=scale,
        n_train=n_train,
        calib_min_v=low,
        calib_max_v=high,
        converged=bool(converged),
        n_iter=n_iter,
    )


def write_model(path: PathLike, model: OcsvmModel) -> None:
    atomic_write_bytes(path, encode_model(model))


def read_model(path: PathLike) -> OcsvmModel:
    with open(path, "rb") as fh:
        return decode_model(fh.read())
