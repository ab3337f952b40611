"""Single-level orthonormal 3D Haar transform and its L1 functional."""

from __future__ import annotations

import numpy as np

_SQRT2 = np.sqrt(2.0)


def _pad_even(vol):
    pads = [(0, d % 2) for d in vol.shape]
    if any(p[1] for p in pads):
        return np.pad(vol, pads), vol.shape
    return vol, vol.shape


def haar3(vol):
    """Forward transform; odd axes are zero-padded to even first.

    Output has the (padded) input shape with the approximation band in the
    low-index half of each axis.
    """
    out, _ = _pad_even(np.asarray(vol))
    for axis in range(3):
        even = np.take(out, range(0, out.shape[axis], 2), axis=axis)
        odd = np.take(out, range(1, out.shape[axis], 2), axis=axis)
        out = np.concatenate(
            [(even + odd) / _SQRT2, (even - odd) / _SQRT2], axis=axis
        )
    return out


def ihaar3(coeffs, shape=None):
    """Inverse of haar3; crops back to `shape` when the input was padded."""
    out = np.asarray(coeffs)
    for axis in range(3):
        n = out.shape[axis]
        approx = np.take(out, range(0, n // 2), axis=axis)
        detail = np.take(out, range(n // 2, n), axis=axis)
        rec = np.empty_like(out)
        idx_even = [slice(None)] * 3
        idx_odd = [slice(None)] * 3
        idx_even[axis] = slice(0, n, 2)
        idx_odd[axis] = slice(1, n, 2)
        rec[tuple(idx_even)] = (approx + detail) / _SQRT2
        rec[tuple(idx_odd)] = (approx - detail) / _SQRT2
        out = rec
    if shape is not None and out.shape != tuple(shape):
        out = out[tuple(slice(0, s) for s in shape)]
    return out


def _complex_sign(z):
    return np.sign(z.real) + 1j * np.sign(z.imag)


def wavelet_l1(img):
    """L1 norm of the Haar coefficients (real and imaginary parts summed)
    and its subgradient W^H sign(W img)."""
    img = np.asarray(img, dtype=np.complex128)
    coeffs = haar3(img)
    value = float(np.sum(np.abs(coeffs.real)) + np.sum(np.abs(coeffs.imag)))
    subgrad = ihaar3(_complex_sign(coeffs), shape=img.shape)
    return value, subgrad
