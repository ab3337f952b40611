"""Deterministic 3D test phantoms and simulated coil sensitivities."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError

# Ellipsoids of the classic 3D head phantom: (value, a, b, c, x0, y0, z0, phi_deg).
# Semi-axes and centres in the [-1, 1] cube, phi rotates about the third axis.
_HEAD_ELLIPSOIDS = [
    (1.0, 0.69, 0.92, 0.81, 0.0, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.78, 0.0, -0.0184, 0.0, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.22, 0.0, 0.0, -18.0),
    (-0.2, 0.16, 0.41, 0.28, -0.22, 0.0, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.41, 0.0, 0.35, -0.15, 0.0),
    (0.1, 0.046, 0.046, 0.05, 0.0, 0.1, 0.25, 0.0),
    (0.1, 0.046, 0.046, 0.05, 0.0, -0.1, 0.25, 0.0),
    (0.1, 0.046, 0.023, 0.05, -0.08, -0.605, 0.0, 0.0),
    (0.1, 0.023, 0.023, 0.02, 0.0, -0.606, 0.0, 0.0),
    (0.1, 0.023, 0.046, 0.02, 0.06, -0.605, 0.0, 0.0),
]


def _shepp3d(dims):
    ny, nz, nx = dims
    u = np.linspace(-1.0, 1.0, ny).reshape(-1, 1, 1)
    v = np.linspace(-1.0, 1.0, nz).reshape(1, -1, 1)
    w = np.linspace(-1.0, 1.0, nx).reshape(1, 1, -1)
    vol = np.zeros(dims)
    for value, a, b, c, x0, y0, z0, phi in _HEAD_ELLIPSOIDS:
        p = np.deg2rad(phi)
        du = (u - x0) * np.cos(p) + (v - y0) * np.sin(p)
        dv = -(u - x0) * np.sin(p) + (v - y0) * np.cos(p)
        dw = w - z0
        vol += value * ((du / a) ** 2 + (dv / b) ** 2 + (dw / c) ** 2 <= 1.0)
    return np.clip(vol, 0.0, 1.0)


def _blobs(dims, seed):
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(dims)
    smooth = ndimage.gaussian_filter(noise, sigma=min(dims) / 12.0)
    lo, hi = smooth.min(), smooth.max()
    vol = (smooth - lo) / (hi - lo)
    # Ellipsoidal envelope keeps the object surrounded by air.
    u = np.linspace(-1.0, 1.0, dims[0]).reshape(-1, 1, 1)
    v = np.linspace(-1.0, 1.0, dims[1]).reshape(1, -1, 1)
    w = np.linspace(-1.0, 1.0, dims[2]).reshape(1, 1, -1)
    r2 = (u / 0.85) ** 2 + (v / 0.85) ** 2 + (w / 0.85) ** 2
    envelope = np.clip(1.15 - r2, 0.0, 1.0)
    envelope = np.minimum(envelope * 4.0, 1.0)
    return np.clip(vol * envelope, 0.0, 1.0)


def make_phantom(kind, dims, seed=0):
    """Deterministic piecewise-smooth phantom with values in [0, 1].

    kind "shepp3d" is an ellipsoid head phantom (seed ignored); "blobs" is
    smoothed random texture inside an ellipsoidal envelope.
    """
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or min(dims) < 16:
        raise ConfigurationError(f"phantom dims must be 3 axes of >= 16 voxels, got {dims}")
    if kind == "shepp3d":
        return _shepp3d(dims)
    if kind == "blobs":
        return _blobs(dims, seed)
    raise ConfigurationError(f"unknown phantom kind {kind!r}")


def make_coil_maps(dims, n_coils, seed=0):
    """Smooth complex sensitivity maps normalised so sum_c |S_c|^2 = 1.

    A single coil degenerates to the all-ones map.
    """
    dims = tuple(int(d) for d in dims)
    if n_coils < 1:
        raise ConfigurationError("need at least one coil")
    if n_coils == 1:
        return np.ones((1,) + dims, dtype=np.complex128)
    rng = np.random.default_rng(seed)
    grids = np.meshgrid(
        np.linspace(-1.0, 1.0, dims[0]),
        np.linspace(-1.0, 1.0, dims[1]),
        np.linspace(-1.0, 1.0, dims[2]),
        indexing="ij",
    )
    maps = np.empty((n_coils,) + dims, dtype=np.complex128)
    for c in range(n_coils):
        centre = rng.uniform(-1.0, 1.0, size=3)
        width = rng.uniform(1.0, 1.6)
        r2 = sum((g - c0) ** 2 for g, c0 in zip(grids, centre))
        mag = np.exp(-r2 / (2.0 * width**2))
        phase = rng.uniform(-np.pi, np.pi) + 0.5 * grids[c % 3] * rng.uniform(-1.0, 1.0)
        maps[c] = mag * np.exp(1j * phase)
    norm = np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))
    return maps / norm
