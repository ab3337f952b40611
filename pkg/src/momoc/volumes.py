"""Volume containers and rigid-pose parameters.

All 3D arrays in this package are ordered (ny, nz, nx): phase-encode y,
phase-encode z, readout x. Voxels are 1 mm isotropic, so translations in
voxels and millimetres coincide.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

# Rigid parameter vector layout used throughout:
#   [rx, ry, rz, ty, tz, tx]
# rx/ry/rz: rotations in degrees about the x, y and z voxel axes through the
# volume centre. ty/tz/tx: translations in voxels along the array axes
# (axis 0 = y, axis 1 = z, axis 2 = x).
PARAM_NAMES = ("rx", "ry", "rz", "ty", "tz", "tx")


def as_complex_volume(data, name="volume"):
    """Coerce to a finite complex128 3D array."""
    arr = np.asarray(data)
    if arr.ndim != 3:
        raise InvalidInputError(f"{name} must be 3D, got shape {arr.shape}")
    arr = np.ascontiguousarray(arr, dtype=np.complex128)
    if not np.all(np.isfinite(arr.view(np.float64))):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def as_real_volume(data, name="volume", mask=False):
    """Coerce to a finite float64 3D array; with mask=True entries must be 0/1."""
    arr = np.asarray(data)
    if arr.ndim != 3:
        raise InvalidInputError(f"{name} must be 3D, got shape {arr.shape}")
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    if mask and not np.all((arr == 0) | (arr == 1)):
        raise InvalidInputError(f"{name} must contain only 0 or 1")
    return arr


@dataclass
class CoilSet:
    """A stack of complex sensitivity maps, one per receive coil."""

    maps: np.ndarray  # (n_coils, ny, nz, nx) complex

    def __post_init__(self):
        arr = np.asarray(self.maps)
        if arr.ndim != 4 or arr.shape[0] < 1:
            raise InvalidInputError(
                f"coil maps must have shape (n_coils, ny, nz, nx), got {arr.shape}"
            )
        self.maps = np.ascontiguousarray(arr, dtype=np.complex128)
        if not np.all(np.isfinite(self.maps.view(np.float64))):
            raise InvalidInputError("coil maps contain non-finite entries")

    @property
    def n_coils(self):
        return self.maps.shape[0]

    @property
    def dims(self):
        return self.maps.shape[1:]


def coil_maps(coils) -> np.ndarray:
    """Accept a CoilSet or a raw (n_coils, ny, nz, nx) array."""
    if isinstance(coils, CoilSet):
        return coils.maps
    arr = np.asarray(coils, dtype=np.complex128)
    if arr.ndim != 4:
        raise InvalidInputError(
            f"coil maps must have shape (n_coils, ny, nz, nx), got {arr.shape}"
        )
    return arr


@dataclass
class RigidParams:
    """Six rigid-motion parameters: rotations in degrees, translations in voxels.

    rot_deg = (rx, ry, rz) rotates about the x, y, z voxel axes through the
    volume centre, composed as Rx @ Ry @ Rz. trans_vox = (ty, tz, tx) shifts
    along array axes 0, 1, 2. The all-zero vector is the identity pose.
    """

    rot_deg: np.ndarray = field(default_factory=lambda: np.zeros(3))
    trans_vox: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.rot_deg = np.asarray(self.rot_deg, dtype=np.float64).reshape(3)
        self.trans_vox = np.asarray(self.trans_vox, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(self.rot_deg)) and np.all(np.isfinite(self.trans_vox))):
            raise InvalidInputError("rigid parameters must be finite")

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def from_vector(cls, v):
        v = np.asarray(v, dtype=np.float64).reshape(6)
        return cls(rot_deg=v[:3], trans_vox=v[3:])

    def to_vector(self):
        return np.concatenate([self.rot_deg, self.trans_vox])

    @property
    def is_identity(self):
        return not (np.any(self.rot_deg) or np.any(self.trans_vox))


@dataclass(frozen=True)
class EncodeConfig:
    """Fixed conventions of the encoding operator."""

    rotation_interpolation: str = "trilinear"
    fft_normalization: str = "unitary"

    def __post_init__(self):
        if self.rotation_interpolation != "trilinear":
            raise InvalidInputError(
                f"unsupported rotation interpolation {self.rotation_interpolation!r}"
            )
        if self.fft_normalization != "unitary":
            raise InvalidInputError(
                f"unsupported fft normalization {self.fft_normalization!r}"
            )
