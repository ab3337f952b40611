import numpy as np
import pytest

from momoc.errors import InvalidInputError, RegistrationError
from momoc.metrics import (
    artifact_power,
    average_edge_strength,
    preprocess_pair,
    psnr,
    register_rigid,
    ssim,
    tenengrad,
    transform_real,
)
from momoc.phantoms import make_phantom
from momoc.volumes import RigidParams


def ellipsoid_mask(dims, radius=0.8):
    grids = np.meshgrid(*[np.linspace(-1, 1, d) for d in dims], indexing="ij")
    return (sum(g**2 for g in grids) <= radius**2).astype(np.float64)


# -- preprocessing -------------------------------------------------------------

def test_preprocess_reference_against_itself():
    dims = (20, 20, 20)
    ref = make_phantom("blobs", dims, seed=0)
    mask = ellipsoid_mask(dims)
    a, b = preprocess_pair(ref, ref, mask)
    assert np.array_equal(a, b)


def test_preprocess_zeroes_outside_mask():
    dims = (16, 16, 16)
    rng = np.random.default_rng(1)
    x = rng.uniform(0.1, 2.0, dims)
    y = rng.uniform(0.1, 2.0, dims)
    mask = ellipsoid_mask(dims, radius=0.6)
    a, b = preprocess_pair(x, y, mask)
    outside = mask == 0
    assert np.all(a[outside] == 0)
    assert np.all(b[outside] == 0)
    assert a.max() <= 1.0 and b.max() <= 1.0


def test_preprocess_percentile_oracle():
    # in-mask values 1..1000: after dividing by the 99.9th percentile the
    # output's own 99.9th percentile must be 1
    vol = np.zeros((10, 10, 10))
    mask = np.zeros((10, 10, 10))
    vals = np.arange(1.0, 1001.0)
    vol.ravel()[:1000] = vals
    mask.ravel()[:1000] = 1.0
    a, _ = preprocess_pair(vol, vol, mask)
    inside = mask > 0
    assert abs(np.percentile(a[inside], 99.9) - 1.0) < 1e-6


def test_preprocess_empty_mask_rejected():
    vol = np.ones((8, 8, 8))
    with pytest.raises(InvalidInputError):
        preprocess_pair(vol, vol, np.zeros((8, 8, 8)))


def test_preprocess_background_invariance():
    # once masked, pre-mask background values cannot influence any metric
    dims = (16, 16, 16)
    ref = make_phantom("blobs", dims, seed=2)
    mask = ellipsoid_mask(dims, radius=0.6)
    noisy = ref + (1 - mask) * 17.0
    a1, b1 = preprocess_pair(ref, ref, mask)
    a2, b2 = preprocess_pair(noisy, ref, mask)
    assert np.allclose(a1, a2)
    assert psnr(a1, b1) == psnr(a2, b2)


# -- registration --------------------------------------------------------------

def test_register_identity():
    vol = make_phantom("blobs", (24, 24, 24), seed=3)
    p = register_rigid(vol, vol)
    assert np.all(np.abs(p.to_vector()) <= 0.1)


def test_register_recovers_translation():
    fixed = make_phantom("blobs", (32, 32, 32), seed=4)
    moving = transform_real(fixed, RigidParams(trans_vox=(0, 3, -2)))
    p = register_rigid(moving, fixed)
    # aligning moving onto fixed needs the opposite shift
    assert np.all(np.abs(p.trans_vox - (0, -3, 2)) <= 0.5)


def test_register_recovers_rotation():
    # needs a phantom with angular structure; isotropic blobs barely change
    # under a 4 degree rotation
    fixed = make_phantom("shepp3d", (32, 32, 32))
    moving = transform_real(fixed, RigidParams(rot_deg=(0, 0, 4.0)))
    p = register_rigid(moving, fixed)
    assert abs(p.rot_deg[2] + 4.0) <= 1.0
    assert np.all(np.abs(p.trans_vox) <= 0.5)


def test_register_flat_image_rejected():
    with pytest.raises(RegistrationError):
        register_rigid(np.ones((16, 16, 16)), np.ones((16, 16, 16)))


# -- psnr ------------------------------------------------------------------------

def test_psnr_cap_on_identical():
    vol = make_phantom("blobs", (16, 16, 16), seed=6)
    assert psnr(vol, vol) == 100.0


def test_psnr_closed_form():
    ref = np.full((10, 10, 10), 0.3)
    x = np.full((10, 10, 10), 0.4)  # mse = 0.01
    assert abs(psnr(x, ref) - 20.0) < 1e-9


def test_psnr_monotone_in_noise():
    rng = np.random.default_rng(7)
    ref = make_phantom("blobs", (16, 16, 16), seed=7)
    noise = rng.standard_normal(ref.shape)
    values = [psnr(np.clip(ref + s * noise, 0, 1), ref) for s in (0.01, 0.05, 0.1)]
    assert values[0] > values[1] > values[2]


# -- ssim ------------------------------------------------------------------------

def test_ssim_identity():
    vol = make_phantom("blobs", (16, 16, 16), seed=8)
    assert abs(ssim(vol, vol) - 1.0) < 1e-9


def test_ssim_symmetry():
    a = make_phantom("blobs", (16, 16, 16), seed=9)
    b = make_phantom("blobs", (16, 16, 16), seed=10)
    assert abs(ssim(a, b) - ssim(b, a)) < 1e-9


def test_ssim_inverted_below_one():
    vol = make_phantom("blobs", (16, 16, 16), seed=11)
    assert ssim(1.0 - vol, vol) < 1.0


def test_ssim_constant_closed_form():
    c1, c2 = 0.6, 0.3
    x = np.full((12, 12, 12), c1)
    ref = np.full((12, 12, 12), c2)
    k1 = 0.01**2
    expected = (2 * c1 * c2 + k1) / (c1**2 + c2**2 + k1)
    assert abs(ssim(x, ref) - expected) < 1e-9


def test_ssim_rejects_small_volume():
    with pytest.raises(InvalidInputError):
        ssim(np.ones((4, 4, 4)), np.ones((4, 4, 4)))


# -- artifact power ---------------------------------------------------------------

def test_artifact_power_cases():
    ref = make_phantom("blobs", (16, 16, 16), seed=12)
    assert artifact_power(ref, ref) == 0.0
    assert abs(artifact_power(np.zeros_like(ref), ref) - 1.0) < 1e-12
    assert abs(artifact_power(0.5 * ref, ref) - 0.25) < 1e-12


def test_artifact_power_zero_reference_rejected():
    with pytest.raises(InvalidInputError):
        artifact_power(np.ones((8, 8, 8)), np.zeros((8, 8, 8)))


# -- tenengrad --------------------------------------------------------------------

def test_tenengrad_constant_is_zero():
    assert tenengrad(np.full((12, 12, 12), 0.7)) == 0.0


def test_tenengrad_ramp_oracle():
    # 3D Sobel = derivative [-1,0,1] x smoothing [1,2,1] x [1,2,1]; on a ramp
    # of slope s the interior response is s*2*4*4, so TG = (32 s)^2
    s = 0.01
    idx = np.arange(20, dtype=np.float64)
    vol = np.broadcast_to(idx * s, (20, 20, 20)).copy()
    expected = (2 * 4 * 4 * s) ** 2
    assert abs(tenengrad(vol) - expected) < 1e-12


def test_tenengrad_blur_decreases_sharpness():
    from scipy import ndimage

    vol = make_phantom("shepp3d", (24, 24, 24))
    blurred = ndimage.uniform_filter(vol, size=3)
    assert tenengrad(blurred) < tenengrad(vol)


def test_tenengrad_integer_shift_invariance():
    vol = np.zeros((20, 20, 20))
    vol[6:12, 6:12, 6:12] = make_phantom("blobs", (16, 16, 16), seed=13)[:6, :6, :6]
    shifted = np.roll(vol, 2, axis=1)
    assert abs(tenengrad(vol) - tenengrad(shifted)) < 1e-6


# -- average edge strength ---------------------------------------------------------

def test_aes_constant_is_zero():
    assert average_edge_strength(np.full((12, 12, 12), 0.5)) == 0.0


def test_aes_step_edge_oracle():
    # a clean step of height h along y gives 2D Sobel magnitude 4h at the
    # two rows bracketing the edge; those are the only edge voxels
    h = 0.8
    vol = np.zeros((20, 20, 20))
    vol[10:, :, :] = h
    assert abs(average_edge_strength(vol) - 4 * h) < 1e-9


def test_aes_blur_decreases():
    from scipy import ndimage

    vol = np.zeros((20, 20, 20))
    vol[10:, :, :] = 1.0
    blurred = ndimage.uniform_filter(vol, size=3)
    assert average_edge_strength(blurred) < average_edge_strength(vol)


def test_aes_integer_shift_invariance():
    vol = np.zeros((20, 20, 20))
    vol[8:12, 8:12, 8:12] = 0.9
    shifted = np.roll(vol, 2, axis=0)
    assert abs(average_edge_strength(vol) - average_edge_strength(shifted)) < 1e-6


def test_ssim_slicewise_mode():
    vol = make_phantom("blobs", (16, 16, 16), seed=14)
    assert abs(ssim(vol, vol, slicewise=True) - 1.0) < 1e-9
    other = make_phantom("blobs", (16, 16, 16), seed=15)
    value = ssim(vol, other, slicewise=True)
    assert -1.0 <= value <= 1.0
