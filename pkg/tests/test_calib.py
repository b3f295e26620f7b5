import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import (
    dense_eigen,
    dense_pixel_operator,
    patch_matrix,
    principal_angle,
)
from vccrecon import (
    build_calib_matrix,
    calibrate,
    center_crop,
    eigen_maps,
    make_phantom,
    simulate_kspace,
    smoothstep,
    soft_weight,
)

rng = np.random.default_rng(11)


@pytest.fixture(scope="module")
def small_block():
    truth = make_phantom(32, 2, seed=7)
    ksp = simulate_kspace(truth).data.astype(np.complex128)
    return center_crop(ksp, (12, 12), axes=(0, 1))


@pytest.fixture(scope="module")
def small_subspace(small_block):
    return calibrate(small_block, kernel_size=4, threshold=1e-3)


# ---------------------------------------------------------- calibration matrix


def test_calib_matrix_matches_loop_oracle():
    block = rng.normal(size=(8, 7, 2)) + 1j * rng.normal(size=(8, 7, 2))
    k = 3
    mat = build_calib_matrix(block, k)
    ref = patch_matrix(block, k)
    assert mat.shape == ((8 - 2) * (7 - 2), k * k * 2)
    assert np.allclose(mat, ref)


def test_calib_matrix_validation():
    block = np.zeros((6, 6, 2), dtype=complex)
    with pytest.raises(ValueError):
        build_calib_matrix(block, 1)
    with pytest.raises(ValueError):
        build_calib_matrix(block, 7)


# ----------------------------------------------------------------- calibrate


def test_calibrate_threshold_rule(small_block):
    sub = calibrate(small_block, kernel_size=4, threshold=0.05)
    sv = sub.singular_values
    assert np.all(np.diff(sv) <= 1e-12)
    nkeep = sub.nkernels
    assert np.all(sv[:nkeep] >= 0.05 * sv[0])
    assert np.all(sv[nkeep:] < 0.05 * sv[0])


def test_calibrate_kernels_orthonormal(small_subspace):
    k = small_subspace.kernels
    flat = k.reshape(-1, k.shape[3])
    gram = flat.conj().T @ flat
    assert np.allclose(gram, np.eye(k.shape[3]), atol=1e-10)


def test_calibrate_kernels_span_signal(small_block, small_subspace):
    # Applying the calibration matrix to a retained kernel recovers its
    # singular value.
    mat = build_calib_matrix(small_block, 4)
    flat = small_subspace.kernels.reshape(-1, small_subspace.nkernels)
    for r in (0, small_subspace.nkernels - 1):
        sigma = np.linalg.norm(mat @ np.conj(flat[:, r]))
        assert np.isclose(sigma, small_subspace.singular_values[r], rtol=1e-8)


def test_calibrate_validation(small_block):
    with pytest.raises(ValueError):
        calibrate(small_block, threshold=0.0)
    with pytest.raises(ValueError):
        calibrate(small_block, threshold=1.5)
    with pytest.raises(ValueError):
        calibrate(np.zeros((8, 8, 2), dtype=complex))


# ---------------------------------------------------------------- eigen maps


def test_eigen_maps_match_dense_oracle(small_subspace):
    # The fast separable path must agree with the dense per-pixel operator
    # assembled through the slow transform and decomposed pixel by pixel.
    fast = eigen_maps(small_subspace, (16, 16), nsets=2)
    op = dense_pixel_operator(small_subspace.kernels, 4, (16, 16))
    vals, vecs = dense_eigen(op, nsets=2)
    assert np.max(np.abs(fast.eigenvalues.astype(np.float64) - vals)) < 1e-4
    worst = 0.0
    for i in range(16):
        for j in range(16):
            worst = max(
                worst, principal_angle(fast.maps[i, j, :, 0], vecs[i, j, :, 0])
            )
    assert worst < 1e-3


def test_eigen_maps_unit_norm_and_anchor(small_subspace):
    maps = eigen_maps(small_subspace, (16, 16), nsets=2)
    norms = np.sqrt(np.sum(np.abs(maps.maps.astype(np.complex128)) ** 2, axis=2))
    assert np.allclose(norms, 1.0, atol=1e-5)
    anchor = maps.maps[:, :, 0, :]
    big = np.abs(anchor) > 1e-3
    assert np.all(np.abs(np.angle(anchor[big])) < 1e-3)


def test_eigen_maps_eigenvalue_ordering(small_subspace):
    maps = eigen_maps(small_subspace, (16, 16), nsets=2)
    assert np.all(maps.eigenvalues[:, :, 0] >= maps.eigenvalues[:, :, 1])
    assert maps.eigenvalues.min() >= 0
    assert maps.eigenvalues.max() < 1.1


def test_eigen_maps_top_eigenvalue_near_one_on_support(smooth_ksp, smooth_truth):
    block = center_crop(smooth_ksp.data.astype(np.complex128), (24, 24), axes=(0, 1))
    sub = calibrate(block, kernel_size=6, threshold=1e-3)
    maps = eigen_maps(sub, (96, 96), nsets=1)
    lam1 = maps.eigenvalues[:, :, 0]
    on = lam1[smooth_truth.support]
    assert np.mean(on > 0.9) > 0.95
    assert lam1.max() < 1.05


def test_eigen_maps_invariant_to_global_scale(small_block):
    # A global complex factor on the data rescales singular values but leaves
    # the subspace, the operator and its eigenpairs untouched.
    a = calibrate(small_block, kernel_size=4, threshold=1e-3)
    b = calibrate(small_block * (0.37 - 1.9j), kernel_size=4, threshold=1e-3)
    assert a.nkernels == b.nkernels
    pa = a.kernels.reshape(-1, a.nkernels)
    pb = b.kernels.reshape(-1, b.nkernels)
    assert np.allclose(pa @ pa.conj().T, pb @ pb.conj().T, atol=1e-8)
    ma = eigen_maps(a, (16, 16), nsets=2)
    mb = eigen_maps(b, (16, 16), nsets=2)
    assert np.allclose(ma.eigenvalues, mb.eigenvalues, atol=1e-5)
    # eigenvectors are only well conditioned where the eigenvalues separate
    gap = ma.eigenvalues[:, :, 0] - ma.eigenvalues[:, :, 1]
    sel = gap > 0.1
    assert sel.sum() > 50
    assert np.allclose(ma.maps[sel][:, :, 0], mb.maps[sel][:, :, 0], atol=1e-4)


def test_eigen_maps_validation(small_subspace):
    with pytest.raises(ValueError):
        eigen_maps(small_subspace, (15, 16))
    with pytest.raises(ValueError):
        eigen_maps(small_subspace, (16, 16), nsets=0)
    with pytest.raises(ValueError):
        eigen_maps(small_subspace, (16, 16), nsets=5)


def test_chunking_does_not_change_result(small_subspace):
    a = eigen_maps(small_subspace, (16, 16), nsets=1, chunk=3)
    b = eigen_maps(small_subspace, (16, 16), nsets=1, chunk=64)
    assert np.allclose(a.eigenvalues, b.eigenvalues, atol=1e-6)
    assert np.allclose(a.maps, b.maps, atol=1e-5)


# ------------------------------------------------------------------ weights


def test_smoothstep_values():
    assert smoothstep(-1.0) == 0.0
    assert smoothstep(0.0) == 0.0
    assert smoothstep(1.0) == 1.0
    assert smoothstep(2.0) == 1.0
    assert np.isclose(smoothstep(0.5), 0.5)
    assert np.isclose(smoothstep(0.25), 0.15625)


@given(st.floats(0, 1), st.floats(0, 1))
def test_smoothstep_monotone(a, b):
    lo, hi = sorted((a, b))
    assert smoothstep(lo) <= smoothstep(hi) + 1e-12


def test_soft_weight_endpoints():
    assert soft_weight(np.array(0.85), crop=0.85) == 0.0
    assert soft_weight(np.array(1.0), crop=0.85) == 1.0
    assert soft_weight(np.array(0.2), crop=0.85) == 0.0
    with pytest.raises(ValueError):
        soft_weight(np.array(0.5), crop=1.0)


def test_weighted_maps_scale(small_subspace):
    maps = eigen_maps(small_subspace, (16, 16), nsets=2)
    w = soft_weight(maps.eigenvalues, 0.85)
    expected = maps.maps.astype(np.complex128) * w[:, :, None, :]
    assert np.allclose(maps.weighted(0.85), expected)
