"""Volume file formats.

PMV1 is the native container: a single-line JSON header followed by a
newline and the raw little-endian payload, row-major with ny outermost.
Complex volumes are stored as interleaved float32 (re, im) pairs, real
volumes as float32. Real magnitude volumes and masks can also be exchanged
as uncompressed NIfTI-1 (.nii) for interoperability with external
brain-extraction tools.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

MAGIC = "PMV1"
_DTYPES = {"c64": 8, "f32": 4}


def write_pmv(path, vol, meta=None):
    """Write a 3D volume. Complex data becomes c64, real data f32."""
    vol = np.asarray(vol)
    if vol.ndim != 3:
        raise InvalidInputError(f"PMV volumes are 3D, got shape {vol.shape}")
    if np.iscomplexobj(vol):
        dtype = "c64"
        payload = np.ascontiguousarray(vol, dtype="<c8").tobytes()
    else:
        dtype = "f32"
        payload = np.ascontiguousarray(vol, dtype="<f4").tobytes()
    header = {
        "magic": MAGIC,
        "dtype": dtype,
        "dims": list(vol.shape),
        "endianness": "little",
        "meta": meta or {},
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)


def read_pmv(path, with_meta=False):
    """Read a PMV1 volume; returns complex64->complex128 or float32->float64."""
    with open(path, "rb") as fh:
        line = fh.readline()
        try:
            header = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"{path}: bad PMV header: {exc}") from exc
        if header.get("magic") != MAGIC:
            raise InvalidInputError(f"{path}: not a PMV1 file")
        dtype = header.get("dtype")
        if dtype not in _DTYPES:
            raise InvalidInputError(f"{path}: unknown dtype {dtype!r}")
        dims = tuple(int(d) for d in header["dims"])
        if len(dims) != 3:
            raise InvalidInputError(f"{path}: dims must be 3D, got {dims}")
        expect = int(np.prod(dims)) * _DTYPES[dtype]
        payload = fh.read()
        if len(payload) != expect:
            raise InvalidInputError(
                f"{path}: payload is {len(payload)} bytes, expected {expect}"
            )
    if dtype == "c64":
        vol = np.frombuffer(payload, dtype="<c8").reshape(dims).astype(np.complex128)
    else:
        vol = np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float64)
    if with_meta:
        return vol, header.get("meta", {})
    return vol


# -- minimal NIfTI-1 -----------------------------------------------------------

_NIFTI_HDR_SIZE = 348
_NIFTI_FLOAT32 = 16


def write_nifti(path, vol, voxel_mm=1.0):
    """Write a real volume as uncompressed single-file NIfTI-1 (float32)."""
    vol = np.asarray(vol, dtype=np.float32)
    if vol.ndim != 3:
        raise InvalidInputError(f"NIfTI export expects a 3D volume, got {vol.shape}")
    hdr = bytearray(_NIFTI_HDR_SIZE)
    struct.pack_into("<i", hdr, 0, _NIFTI_HDR_SIZE)  # sizeof_hdr
    struct.pack_into("<8h", hdr, 40, 3, *vol.shape, 1, 1, 1, 1)  # dim
    struct.pack_into("<h", hdr, 70, _NIFTI_FLOAT32)  # datatype
    struct.pack_into("<h", hdr, 72, 32)  # bitpix
    struct.pack_into("<8f", hdr, 76, 0.0, voxel_mm, voxel_mm, voxel_mm, 0, 0, 0, 0)  # pixdim
    struct.pack_into("<f", hdr, 108, 352.0)  # vox_offset
    struct.pack_into("<f", hdr, 112, 1.0)  # scl_slope
    struct.pack_into("<h", hdr, 252, 1)  # qform_code
    struct.pack_into("<f", hdr, 264, 1.0)  # quatern d=0 -> b=c=0, identity via pixdim[0]=0
    struct.pack_into("<4s", hdr, 344, b"n+1\0")
    with open(path, "wb") as fh:
        fh.write(bytes(hdr))
        fh.write(b"\0\0\0\0")  # extension flag
        fh.write(np.ascontiguousarray(vol.T, dtype="<f4").tobytes())  # x fastest


def read_nifti(path):
    """Read an uncompressed single-file NIfTI-1 volume (float types only)."""
    with open(path, "rb") as fh:
        hdr = fh.read(_NIFTI_HDR_SIZE)
        if len(hdr) < _NIFTI_HDR_SIZE:
            raise InvalidInputError(f"{path}: truncated NIfTI header")
        (sizeof_hdr,) = struct.unpack_from("<i", hdr, 0)
        if sizeof_hdr != _NIFTI_HDR_SIZE:
            raise InvalidInputError(f"{path}: not a little-endian NIfTI-1 file")
        dim = struct.unpack_from("<8h", hdr, 40)
        if dim[0] != 3:
            raise InvalidInputError(f"{path}: expected a 3D NIfTI, got ndim {dim[0]}")
        shape = dim[1:4]
        (datatype,) = struct.unpack_from("<h", hdr, 70)
        dtypes = {2: "<u1", 4: "<i2", 8: "<i4", 16: "<f4", 64: "<f8"}
        if datatype not in dtypes:
            raise InvalidInputError(f"{path}: unsupported NIfTI datatype {datatype}")
        (vox_offset,) = struct.unpack_from("<f", hdr, 108)
        fh.seek(int(vox_offset))
        data = np.frombuffer(fh.read(), dtype=dtypes[datatype])
    n = int(np.prod(shape))
    if data.size < n:
        raise InvalidInputError(f"{path}: payload smaller than header dims")
    vol = data[:n].reshape(shape[::-1]).T  # stored x fastest
    return np.ascontiguousarray(vol, dtype=np.float64)


def read_volume(path):
    """Dispatch on extension: .pmv or .nii."""
    suffix = Path(path).suffix.lower()
    if suffix == ".pmv":
        return read_pmv(path)
    if suffix == ".nii":
        return read_nifti(path)
    raise InvalidInputError(f"unknown volume format {suffix!r} for {path}")


def write_volume(path, vol, meta=None):
    suffix = Path(path).suffix.lower()
    if suffix == ".pmv":
        write_pmv(path, vol, meta=meta)
    elif suffix == ".nii":
        if np.iscomplexobj(vol):
            raise InvalidInputError("complex volumes must use the PMV container")
        write_nifti(path, vol)
    else:
        raise InvalidInputError(f"unknown volume format {suffix!r} for {path}")
