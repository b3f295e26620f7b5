import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from vccrecon import (
    EspiritCalibration,
    SamplingPattern,
    SenseReconstruction,
    VccEspiritCalibration,
    apply_pattern,
    nrmse,
    synthesize_coil_images,
)


def test_get_set_params_roundtrip():
    est = VccEspiritCalibration(acs=32, kernel_size=8, nsets=2)
    params = est.get_params()
    assert params["acs"] == 32
    assert params["kernel_size"] == 8
    est.set_params(threshold=0.01)
    assert est.threshold == 0.01
    with pytest.raises(ValueError):
        est.set_params(bogus=1)


def test_clone_preserves_params():
    est = SenseReconstruction(mode="imag_penalty", lam=3e-4, max_iter=7)
    twin = clone(est)
    assert twin.get_params() == est.get_params()


def test_not_fitted_errors(smooth_ksp):
    with pytest.raises(NotFittedError):
        EspiritCalibration().transform(np.zeros((96, 96, 8), dtype=complex))
    with pytest.raises(NotFittedError):
        EspiritCalibration().score(np.zeros((96, 96, 8), dtype=complex))
    with pytest.raises(NotFittedError):
        SenseReconstruction(maps=np.ones((4, 4, 2, 1)), mask=np.ones((4, 4), bool)).coil_images()


def test_calibration_fit_attributes(smooth_ksp):
    est = EspiritCalibration().fit(smooth_ksp)
    assert est.grid_ == (96, 96)
    assert est.maps_.nsets == 1
    assert est.maps_.ncoils == 8
    assert est.n_kernels_ > 0
    assert est.singular_values_[0] > 0


def test_calibration_score_is_negative_residual(smooth_ksp, smooth_truth):
    est = EspiritCalibration().fit(smooth_ksp)
    score = est.score(smooth_truth.coil_images, support=smooth_truth.support)
    assert -0.05 < score <= 0


def test_calibration_transform_projects(smooth_ksp, smooth_truth):
    est = EspiritCalibration().fit(smooth_ksp)
    proj = est.transform(smooth_truth.coil_images)
    assert proj.shape == (96, 96, 8)
    close = nrmse(
        proj,
        smooth_truth.coil_images,
        np.broadcast_to(smooth_truth.support[:, :, None], (96, 96, 8)),
    )
    assert close < 0.05


def test_vcc_fit_attributes(hf_vcc1):
    est = hf_vcc1
    assert est.maps_.ncoils == 8
    assert est.vcc_maps_.ncoils == 16
    assert est.phase_.phi.shape == (96, 96, 1)
    assert 0 <= est.pairing_score_ < 1
    assert est.maps_.nsets == 1


def test_vcc_align_flag_changes_only_signs(hf_ksp):
    plain = VccEspiritCalibration(align=False).fit(hf_ksp)
    aligned = VccEspiritCalibration(align=True).fit(hf_ksp)
    assert np.allclose(np.abs(plain.maps_.maps), np.abs(aligned.maps_.maps), atol=1e-5)


def test_fit_does_not_mutate_params(smooth_ksp):
    est = VccEspiritCalibration(acs=24, nsets=1)
    before = est.get_params()
    est.fit(smooth_ksp)
    assert est.get_params() == before


def test_determinism_across_clones(smooth_ksp):
    a = VccEspiritCalibration(nsets=1)
    b = clone(a)
    a.fit(smooth_ksp)
    b.fit(smooth_ksp)
    assert np.array_equal(a.maps_.maps, b.maps_.maps)
    assert np.array_equal(a.maps_.eigenvalues, b.maps_.eigenvalues)


def test_sense_reconstruction_requires_configuration(hf_ksp):
    with pytest.raises(ValueError):
        SenseReconstruction().fit(hf_ksp)
    bad = SenseReconstruction(
        maps=np.ones((96, 96, 8, 1)), mask=np.ones((96, 96), bool), mode="bogus"
    )
    with pytest.raises(ValueError):
        bad.fit(hf_ksp)


def test_sense_reconstruction_end_to_end(hf_ksp, hf_vcc2, hf_truth, support3):
    pat = SamplingPattern(shape=(96, 96), accel=3, acs=24)
    und = apply_pattern(hf_ksp, pat)
    est = SenseReconstruction(
        maps=hf_vcc2.maps_.weighted(0.85), mask=pat.mask, mode="real_constrained"
    ).fit(und)
    assert est.image_.shape == (96, 96, 2)
    assert est.n_iter_ <= 100
    assert est.residuals_.size > 0
    syn = est.coil_images()
    assert syn.shape == (96, 96, 8)
    assert nrmse(syn, hf_truth.coil_images, support3) < 0.05
    again = est.predict(und)
    assert np.array_equal(again, est.image_)
