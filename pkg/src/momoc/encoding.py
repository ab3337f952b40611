"""Motion-aware multi-coil Cartesian encoding operator and its adjoint.

Forward model for one shot s with pose p:

    A_s(p) x = M_s F (S_c * T_p x)        per coil c

T_p rotates the object about the volume centre (trilinear resampling,
out-of-field voxels zero-filled) and then translates it through a k-space
phase ramp, so translations are exact with circular-shift semantics.
F is the unitary centred 3D DFT and M_s gathers the (ky, kz) lines the
sampling plan assigns to shot s, full readout per line.
"""

from __future__ import annotations

import numpy as np
import scipy.fft as sfft

from ._resample import resample_pull, resample_push
from .errors import InvalidInputError
from .volumes import RigidParams, coil_maps

# Array axis a holds voxel axis AXIS_OF[a]; xyz index of array axes (y, z, x).
_ARR_TO_XYZ = (1, 2, 0)


def _fft3c(vol):
    return sfft.fftshift(sfft.fftn(sfft.ifftshift(vol), norm="ortho", workers=-1))


def _ifft3c(ksp):
    return sfft.fftshift(sfft.ifftn(sfft.ifftshift(ksp), norm="ortho", workers=-1))


def fft3_centered(vol):
    """Unitary 3D DFT with the DC sample at index floor(n/2) on each axis."""
    vol = np.asarray(vol)
    if not np.all(np.isfinite(vol)):
        raise InvalidInputError("fft3_centered: input contains non-finite entries")
    return _fft3c(vol)


def ifft3_centered(ksp):
    """Exact inverse of fft3_centered."""
    ksp = np.asarray(ksp)
    if not np.all(np.isfinite(ksp)):
        raise InvalidInputError("ifft3_centered: input contains non-finite entries")
    return _ifft3c(ksp)


def rotation_matrix(rot_deg):
    """Object-rotation matrix in array-index space (axes y, z, x).

    Composed as Rx @ Ry @ Rz with right-handed rotations about the +x, +y,
    +z voxel axes.
    """
    rx, ry, rz = np.deg2rad(np.asarray(rot_deg, dtype=np.float64).reshape(3))
    cx, sx = np.cos(rx), np.sin(rx)
    cy, sy = np.cos(ry), np.sin(ry)
    cz, sz = np.cos(rz), np.sin(rz)
    mx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    my = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    mz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    m_xyz = mx @ my @ mz
    m_arr = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            m_arr[i, j] = m_xyz[_ARR_TO_XYZ[i], _ARR_TO_XYZ[j]]
    return m_arr


def _resample_rotation(img, m_arr):
    """out(r) = img(m_arr @ (r - c) + c) with trilinear interpolation, zero fill."""
    return resample_pull(img, m_arr)


def _resample_rotation_transpose(img, m_arr):
    """Exact transpose of _resample_rotation with the same matrix.

    The forward gathers each output voxel from the 8 neighbours of its
    source point (zero outside the grid); the transpose scatters each voxel
    back onto those neighbours with the same trilinear weights.
    """
    return resample_push(img, m_arr)


def _phase_ramp(shape, trans_vox, dtype=np.complex128):
    """exp(-2*pi*i * sum_a f_a * t_a) on the unshifted FFT frequency grid,
    built as an outer product of per-axis 1D ramps."""
    ramp = None
    for axis, t in enumerate(trans_vox):
        if t == 0.0:
            continue
        f = sfft.fftfreq(shape[axis])
        bshape = [1, 1, 1]
        bshape[axis] = shape[axis]
        axis_ramp = np.exp(np.asarray(-2j * np.pi * f * t, dtype=dtype)).reshape(bshape)
        ramp = axis_ramp if ramp is None else ramp * axis_ramp
    if ramp is None:
        return np.ones((1, 1, 1), dtype=dtype)
    return ramp


def translate(img, trans_vox):
    """Shift the object by trans_vox voxels (circular semantics, exact for integers)."""
    img = np.asarray(img)
    trans_vox = np.asarray(trans_vox, dtype=np.float64).reshape(3)
    if not np.any(trans_vox):
        return img.copy()
    ksp = sfft.fftn(img, workers=-1)
    ksp *= _phase_ramp(img.shape, trans_vox, dtype=ksp.dtype)
    return sfft.ifftn(ksp, workers=-1)


def _apply_rigid(img, p: RigidParams):
    if p.is_identity:
        return img.copy()
    out = img
    if np.any(p.rot_deg):
        m = rotation_matrix(p.rot_deg)
        out = _resample_rotation(out, m.T)  # affine matrix maps output -> input coords
    if np.any(p.trans_vox):
        out = translate(out, p.trans_vox)
    return out


def apply_rigid(img, p: RigidParams):
    """Move the image into pose p: rotate about the volume centre, then translate."""
    img = np.asarray(img, dtype=np.complex128)
    if not np.all(np.isfinite(img.view(np.float64))):
        raise InvalidInputError("apply_rigid: input contains non-finite entries")
    return _apply_rigid(img, p)


def _apply_rigid_adjoint(img, p: RigidParams):
    if p.is_identity:
        return img.copy()
    out = img
    if np.any(p.trans_vox):
        out = translate(out, -p.trans_vox)
    if np.any(p.rot_deg):
        m = rotation_matrix(p.rot_deg)
        out = _resample_rotation_transpose(out, m.T)
    return out


def apply_rigid_adjoint(img, p: RigidParams):
    """Exact adjoint of apply_rigid: undo the translation, then apply the
    transpose of the rotation resampler.

    The translation adjoint is the conjugate phase ramp (a shift by -t);
    the rotation adjoint scatters through the same trilinear weights the
    forward gathered with.
    """
    img = np.asarray(img, dtype=np.complex128)
    return _apply_rigid_adjoint(img, p)


def apply_rigid_inverse(img, p: RigidParams):
    """Resample the image out of pose p (inverse motion, interpolation-approximate)."""
    img = np.asarray(img, dtype=np.complex128)
    if p.is_identity:
        return img.copy()
    out = img
    if np.any(p.trans_vox):
        out = translate(out, -p.trans_vox)
    if np.any(p.rot_deg):
        m = rotation_matrix(p.rot_deg)
        out = _resample_rotation(out, m)
    return out


def _check_dims(img, maps, plan):
    dims = (plan.ny, plan.nz)
    if img.shape[:2] != dims:
        raise InvalidInputError(
            f"image phase-encode dims {img.shape[:2]} do not match plan {dims}"
        )
    if maps.shape[1:] != img.shape:
        raise InvalidInputError(
            f"coil map dims {maps.shape[1:]} do not match image dims {img.shape}"
        )


def encode_shot(img, coils, plan, shot, p: RigidParams):
    """Sample one shot of the motion-aware forward model.

    Returns an (n_coils, n_lines, nx) array holding, for each coil, the
    centred k-space values at the (ky, kz) lines the plan assigns to `shot`.
    """
    img = np.asarray(img, dtype=np.complex128)
    maps = coil_maps(coils)
    _check_dims(img, maps, plan)
    if not 0 <= shot < plan.n_shots:
        raise InvalidInputError(f"shot {shot} out of range for {plan.n_shots} shots")
    ky, kz = plan.shot_lines(shot)
    moved = apply_rigid(img, p)
    out = np.empty((maps.shape[0], len(ky), img.shape[2]), dtype=np.complex128)
    for c in range(maps.shape[0]):
        ksp = _fft3c(maps[c] * moved)
        out[c] = ksp[ky, kz, :]
    return out


def adjoint_shot(samples, coils, plan, shot, p: RigidParams):
    """Adjoint of encode_shot: scatter, inverse FFT, coil-conjugate sum, undo pose."""
    samples = np.asarray(samples, dtype=np.complex128)
    maps = coil_maps(coils)
    ky, kz = plan.shot_lines(shot)
    nx = maps.shape[3]
    if samples.shape != (maps.shape[0], len(ky), nx):
        raise InvalidInputError(
            f"samples shape {samples.shape} does not match "
            f"({maps.shape[0]}, {len(ky)}, {nx})"
        )
    acc = np.zeros(maps.shape[1:], dtype=np.complex128)
    grid = np.zeros(maps.shape[1:], dtype=np.complex128)
    for c in range(maps.shape[0]):
        grid[...] = 0.0
        grid[ky, kz, :] = samples[c]
        acc += np.conj(maps[c]) * _ifft3c(grid)
    return _apply_rigid_adjoint(acc, p)
