"""Reference-based and reference-free image quality metrics.

Reference-based scores (PSNR, SSIM, artifact power) expect the paired
preprocessing to have run: both volumes masked to the brain, each divided
by its own 99.9th in-mask percentile and clipped to [0, 1]. The
reference-free sharpness scores (Tenengrad, average edge strength) operate
on any real volume.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .encoding import apply_rigid, rotation_matrix, translate
from .errors import InvalidInputError, RegistrationError
from .volumes import RigidParams, as_real_volume

PSNR_CAP_DB = 100.0
SSIM_WINDOW = 7
AES_EDGE_PERCENTILE = 90.0
NORM_PERCENTILE = 99.9


def preprocess_pair(recon, ref, mask, share_ref_percentile=False):
    """Mask both volumes and normalise each to its 99.9th in-mask percentile.

    Values above 1 after division are clipped. With share_ref_percentile
    both volumes are divided by the reference's percentile instead.
    """
    recon = as_real_volume(recon, "recon")
    ref = as_real_volume(ref, "ref")
    mask = as_real_volume(mask, "mask", mask=True)
    if not recon.shape == ref.shape == mask.shape:
        raise InvalidInputError(
            f"shape mismatch: recon {recon.shape}, ref {ref.shape}, mask {mask.shape}"
        )
    inside = mask > 0
    if not np.any(inside):
        raise InvalidInputError("mask is empty")
    out = []
    p_ref = np.percentile((ref * mask)[inside], NORM_PERCENTILE)
    for vol in (recon, ref):
        masked = vol * mask
        p = p_ref if share_ref_percentile else np.percentile(masked[inside], NORM_PERCENTILE)
        if p <= 0:
            raise InvalidInputError("normalisation percentile is not positive")
        out.append(np.minimum(masked / p, 1.0))
    return out[0], out[1]


def transform_real(vol, p: RigidParams):
    """Resample a real magnitude volume into pose p (used after registration)."""
    moved = apply_rigid(np.asarray(vol, dtype=np.float64).astype(np.complex128), p)
    return np.clip(moved.real, 0.0, None)


def _ncc(a, b):
    a = a - a.mean()
    b = b - b.mean()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return -1.0
    return float(np.vdot(a, b).real / (na * nb))


def _downsample(vol, factor):
    if factor == 1:
        return vol
    return ndimage.zoom(vol, 1.0 / factor, order=1, prefilter=False)


def register_rigid(moving, fixed, levels=(4, 2, 1)):
    """Estimate the 6 rigid parameters aligning `moving` to `fixed`.

    Maximises normalised cross-correlation with coarse-to-fine coordinate
    descent; translations are searched in full-resolution voxels.
    """
    moving = as_real_volume(moving, "moving")
    fixed = as_real_volume(fixed, "fixed")
    if moving.shape != fixed.shape:
        raise InvalidInputError("moving and fixed volumes must share dims")
    if np.ptp(moving) == 0 or np.ptp(fixed) == 0:
        raise RegistrationError("flat image: registration undefined")

    params = np.zeros(6)
    # translation init from the intensity centres of mass
    com_m = np.array(ndimage.center_of_mass(np.abs(moving) + 1e-12))
    com_f = np.array(ndimage.center_of_mass(np.abs(fixed) + 1e-12))
    params[3:] = com_f - com_m

    max_rot = 20.0
    max_trans = max(moving.shape) / 3.0
    levels = [f for f in levels if min(moving.shape) // f >= 12]
    if not levels:
        levels = [1]
    for factor in levels:
        mov = _downsample(moving, factor)
        fix = _downsample(fixed, factor)

        def score(vec):
            p = RigidParams(rot_deg=vec[:3], trans_vox=vec[3:] / factor)
            return _ncc(transform_real(mov, p), fix)

        best = score(params)
        step_rot = 4.0
        step_trans = 4.0 if factor > 1 else 2.0
        while step_rot >= 0.125:
            improved = False
            for j in (3, 4, 5, 0, 1, 2):  # translations first, then rotations
                step = step_trans if j >= 3 else step_rot
                bound = max_trans if j >= 3 else max_rot
                for sign in (+1.0, -1.0):
                    trial = params.copy()
                    trial[j] += sign * step
                    s = score(trial)
                    while s > best + 1e-9 and abs(trial[j]) <= bound:
                        params, best = trial, s
                        improved = True
                        trial = params.copy()
                        trial[j] += sign * step
                        s = score(trial)
            if not improved:
                step_rot /= 2.0
                step_trans /= 2.0
    return RigidParams(rot_deg=params[:3], trans_vox=params[3:])


def psnr(x, ref):
    """Peak signal-to-noise ratio in dB against a fixed data range of 1."""
    x = as_real_volume(x, "x")
    ref = as_real_volume(ref, "ref")
    if x.shape != ref.shape:
        raise InvalidInputError("psnr: shape mismatch")
    mse = float(np.mean((x - ref) ** 2))
    if mse < 1e-10:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP_DB)


def ssim(x, ref, mask=None, window=SSIM_WINDOW, slicewise=False):
    """Structural similarity with a uniform cubic window, averaged over
    in-mask window centres. C1=(0.01)^2, C2=(0.03)^2 for data range 1."""
    x = as_real_volume(x, "x")
    ref = as_real_volume(ref, "ref")
    if x.shape != ref.shape:
        raise InvalidInputError("ssim: shape mismatch")
    if min(x.shape) < window:
        raise InvalidInputError(f"volume smaller than the {window}^3 ssim window")
    c1, c2 = 0.01**2, 0.03**2
    size = (1, window, window) if slicewise else window

    def f(v):
        return ndimage.uniform_filter(v, size=size, mode="reflect")

    mu_x, mu_r = f(x), f(ref)
    var_x = f(x * x) - mu_x**2
    var_r = f(ref * ref) - mu_r**2
    cov = f(x * ref) - mu_x * mu_r
    ssim_map = ((2 * mu_x * mu_r + c1) * (2 * cov + c2)) / (
        (mu_x**2 + mu_r**2 + c1) * (var_x + var_r + c2)
    )
    if mask is not None:
        mask = as_real_volume(mask, "mask", mask=True)
        inside = mask > 0
        if not np.any(inside):
            raise InvalidInputError("ssim: mask is empty")
        return float(ssim_map[inside].mean())
    return float(ssim_map.mean())


def artifact_power(x, ref):
    """Error energy relative to the reference energy.

    Not symmetric: the denominator is always the reference's energy.
    """
    x = as_real_volume(x, "x")
    ref = as_real_volume(ref, "ref")
    if x.shape != ref.shape:
        raise InvalidInputError("artifact_power: shape mismatch")
    den = float(np.sum(ref**2))
    if den == 0:
        raise InvalidInputError("artifact_power: reference has zero energy")
    return float(np.sum((x - ref) ** 2) / den)


def tenengrad(x):
    """Mean squared 3D Sobel gradient magnitude over interior voxels."""
    x = as_real_volume(x, "x")
    g2 = np.zeros_like(x)
    for axis in range(3):
        g = ndimage.sobel(x, axis=axis, mode="reflect")
        g2 += g * g
    interior = g2[1:-1, 1:-1, 1:-1]
    if interior.size == 0:
        return 0.0
    return float(interior.mean())


def average_edge_strength(x, mask=None):
    """Mean 2D Sobel gradient magnitude over edge voxels, slice-wise.

    Axial slices are (y, z) planes (fixed readout index). Edge voxels are
    those above the 90th percentile of the slice's in-mask gradient
    magnitudes; slices without edges are skipped. Returns 0 for flat input.
    """
    x = as_real_volume(x, "x")
    if mask is not None:
        mask = as_real_volume(mask, "mask", mask=True)
        if mask.shape != x.shape:
            raise InvalidInputError("aes: mask shape mismatch")
    per_slice = []
    for ix in range(x.shape[2]):
        sl = x[:, :, ix]
        gy = ndimage.sobel(sl, axis=0, mode="reflect")
        gz = ndimage.sobel(sl, axis=1, mode="reflect")
        gmag = np.sqrt(gy * gy + gz * gz)[1:-1, 1:-1]
        sel = gmag
        if mask is not None:
            inside = (mask[:, :, ix] > 0)[1:-1, 1:-1]
            if not np.any(inside):
                continue
            sel = gmag[inside]
        if sel.size == 0 or sel.max() <= 0:
            continue
        thresh = np.percentile(sel, AES_EDGE_PERCENTILE)
        # fall back to all positive gradients when >90% of the slice is flat
        edges = sel[sel >= thresh] if thresh > 0 else sel[sel > 0]
        if edges.size == 0:
            continue
        per_slice.append(float(edges.mean()))
    if not per_slice:
        return 0.0
    return float(np.mean(per_slice))
