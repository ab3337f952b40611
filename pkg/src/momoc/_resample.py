"""Trilinear resampling kernels (gather and its exact transpose).

Both kernels share one weight computation so the push is the machine-exact
transpose of the pull. Sample points outside the grid contribute nothing,
matching zero-padding semantics. The pull parallelises over output rows;
the push stays serial because it scatters.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(parallel=True, fastmath=True)
def _pull(re, im, m, off, out_re, out_im):
    ny, nz, nx = re.shape
    for iy in prange(ny):
        for iz in range(nz):
            for ix in range(nx):
                qy = m[0, 0] * iy + m[0, 1] * iz + m[0, 2] * ix + off[0]
                qz = m[1, 0] * iy + m[1, 1] * iz + m[1, 2] * ix + off[1]
                qx = m[2, 0] * iy + m[2, 1] * iz + m[2, 2] * ix + off[2]
                if (
                    qy < 0.0 or qy > ny - 1.0
                    or qz < 0.0 or qz > nz - 1.0
                    or qx < 0.0 or qx > nx - 1.0
                ):
                    out_re[iy, iz, ix] = 0.0
                    out_im[iy, iz, ix] = 0.0
                    continue
                y0 = int(qy)
                z0 = int(qz)
                x0 = int(qx)
                y1 = min(y0 + 1, ny - 1)
                z1 = min(z0 + 1, nz - 1)
                x1 = min(x0 + 1, nx - 1)
                fy = qy - y0
                fz = qz - z0
                fx = qx - x0
                w000 = (1 - fy) * (1 - fz) * (1 - fx)
                w001 = (1 - fy) * (1 - fz) * fx
                w010 = (1 - fy) * fz * (1 - fx)
                w011 = (1 - fy) * fz * fx
                w100 = fy * (1 - fz) * (1 - fx)
                w101 = fy * (1 - fz) * fx
                w110 = fy * fz * (1 - fx)
                w111 = fy * fz * fx
                out_re[iy, iz, ix] = (
                    w000 * re[y0, z0, x0] + w001 * re[y0, z0, x1]
                    + w010 * re[y0, z1, x0] + w011 * re[y0, z1, x1]
                    + w100 * re[y1, z0, x0] + w101 * re[y1, z0, x1]
                    + w110 * re[y1, z1, x0] + w111 * re[y1, z1, x1]
                )
                out_im[iy, iz, ix] = (
                    w000 * im[y0, z0, x0] + w001 * im[y0, z0, x1]
                    + w010 * im[y0, z1, x0] + w011 * im[y0, z1, x1]
                    + w100 * im[y1, z0, x0] + w101 * im[y1, z0, x1]
                    + w110 * im[y1, z1, x0] + w111 * im[y1, z1, x1]
                )


@njit(fastmath=True)
def _push(re, im, m, off, out_re, out_im):
    ny, nz, nx = re.shape
    for iy in range(ny):
        for iz in range(nz):
            for ix in range(nx):
                qy = m[0, 0] * iy + m[0, 1] * iz + m[0, 2] * ix + off[0]
                qz = m[1, 0] * iy + m[1, 1] * iz + m[1, 2] * ix + off[1]
                qx = m[2, 0] * iy + m[2, 1] * iz + m[2, 2] * ix + off[2]
                if (
                    qy < 0.0 or qy > ny - 1.0
                    or qz < 0.0 or qz > nz - 1.0
                    or qx < 0.0 or qx > nx - 1.0
                ):
                    continue
                y0 = int(qy)
                z0 = int(qz)
                x0 = int(qx)
                y1 = min(y0 + 1, ny - 1)
                z1 = min(z0 + 1, nz - 1)
                x1 = min(x0 + 1, nx - 1)
                fy = qy - y0
                fz = qz - z0
                fx = qx - x0
                w000 = (1 - fy) * (1 - fz) * (1 - fx)
                w001 = (1 - fy) * (1 - fz) * fx
                w010 = (1 - fy) * fz * (1 - fx)
                w011 = (1 - fy) * fz * fx
                w100 = fy * (1 - fz) * (1 - fx)
                w101 = fy * (1 - fz) * fx
                w110 = fy * fz * (1 - fx)
                w111 = fy * fz * fx
                vr = re[iy, iz, ix]
                vi = im[iy, iz, ix]
                out_re[y0, z0, x0] += w000 * vr
                out_im[y0, z0, x0] += w000 * vi
                out_re[y0, z0, x1] += w001 * vr
                out_im[y0, z0, x1] += w001 * vi
                out_re[y0, z1, x0] += w010 * vr
                out_im[y0, z1, x0] += w010 * vi
                out_re[y0, z1, x1] += w011 * vr
                out_im[y0, z1, x1] += w011 * vi
                out_re[y1, z0, x0] += w100 * vr
                out_im[y1, z0, x0] += w100 * vi
                out_re[y1, z0, x1] += w101 * vr
                out_im[y1, z0, x1] += w101 * vi
                out_re[y1, z1, x0] += w110 * vr
                out_im[y1, z1, x0] += w110 * vi
                out_re[y1, z1, x1] += w111 * vr
                out_im[y1, z1, x1] += w111 * vi


def _as_pair(img):
    if np.iscomplexobj(img):
        real_dtype = np.float32 if img.dtype == np.complex64 else np.float64
        return (
            np.ascontiguousarray(img.real, dtype=real_dtype),
            np.ascontiguousarray(img.imag, dtype=real_dtype),
        )
    arr = np.ascontiguousarray(img)
    return arr, np.zeros_like(arr)


def _offset(shape, m):
    centre = (np.asarray(shape, dtype=np.float64) - 1.0) / 2.0
    return centre - m @ centre


def resample_pull(img, m):
    """out(r) = img(m @ (r - c) + c), trilinear, zero outside the grid."""
    re, im = _as_pair(img)
    m = np.ascontiguousarray(m, dtype=np.float64)
    off = _offset(img.shape, m)
    out_re = np.empty_like(re)
    out_im = np.empty_like(im)
    _pull(re, im, m, off, out_re, out_im)
    if np.iscomplexobj(img):
        return out_re + 1j * out_im
    return out_re


def resample_push(img, m):
    """Exact transpose of resample_pull with the same matrix."""
    re, im = _as_pair(img)
    m = np.ascontiguousarray(m, dtype=np.float64)
    off = _offset(img.shape, m)
    out_re = np.zeros_like(re)
    out_im = np.zeros_like(im)
    _push(re, im, m, off, out_re, out_im)
    if np.iscomplexobj(img):
        return out_re + 1j * out_im
    return out_re
