import json

import numpy as np
import pytest

from momoc.errors import InvalidInputError
from momoc.phantoms import make_phantom
from momoc.volio import (
    read_nifti,
    read_pmv,
    read_volume,
    write_nifti,
    write_pmv,
    write_volume,
)


def test_pmv_complex_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    vol = (rng.standard_normal((6, 5, 7)) + 1j * rng.standard_normal((6, 5, 7))).astype(
        np.complex64
    )
    path = tmp_path / "vol.pmv"
    write_pmv(path, vol, meta={"kind": "test"})
    back, meta = read_pmv(path, with_meta=True)
    assert back.shape == (6, 5, 7)
    assert meta == {"kind": "test"}
    assert np.allclose(back, vol)


def test_pmv_real_roundtrip(tmp_path):
    vol = make_phantom("shepp3d", (16, 16, 16))
    path = tmp_path / "vol.pmv"
    write_pmv(path, vol)
    back = read_pmv(path)
    assert np.allclose(back, vol, atol=1e-6)


def test_pmv_header_before_payload(tmp_path):
    vol = np.zeros((4, 4, 4), dtype=np.float32)
    path = tmp_path / "vol.pmv"
    write_pmv(path, vol)
    raw = path.read_bytes()
    header = json.loads(raw.split(b"\n", 1)[0])
    assert header["magic"] == "PMV1"
    assert header["dtype"] == "f32"
    assert header["dims"] == [4, 4, 4]
    assert len(raw.split(b"\n", 1)[1]) == 4 * 4 * 4 * 4


def test_pmv_rejects_bad_payload(tmp_path):
    vol = np.zeros((4, 4, 4), dtype=np.float32)
    path = tmp_path / "vol.pmv"
    write_pmv(path, vol)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(InvalidInputError):
        read_pmv(path)


def test_pmv_rejects_bad_magic(tmp_path):
    path = tmp_path / "vol.pmv"
    path.write_bytes(b'{"magic": "NOPE"}\n')
    with pytest.raises(InvalidInputError):
        read_pmv(path)


def test_nifti_roundtrip(tmp_path):
    vol = make_phantom("blobs", (16, 18, 20), seed=4)
    path = tmp_path / "vol.nii"
    write_nifti(path, vol)
    back = read_nifti(path)
    assert back.shape == vol.shape
    assert np.allclose(back, vol, atol=1e-6)


def test_read_volume_dispatch(tmp_path):
    vol = make_phantom("shepp3d", (16, 16, 16))
    write_volume(tmp_path / "a.pmv", vol)
    write_volume(tmp_path / "a.nii", vol)
    assert np.allclose(read_volume(tmp_path / "a.pmv"), read_volume(tmp_path / "a.nii"), atol=1e-6)
    with pytest.raises(InvalidInputError):
        read_volume(tmp_path / "a.xyz")


def test_nifti_rejects_complex(tmp_path):
    with pytest.raises(InvalidInputError):
        write_volume(tmp_path / "a.nii", np.zeros((4, 4, 4), dtype=complex))
