"""Estimator-style wrappers around the functional calibration/recon core.

These follow the scikit-learn convention: constructors stash hyperparameters
untouched, ``fit`` consumes data and exposes results as trailing-underscore
attributes, and ``get_params``/``set_params`` come from ``BaseEstimator`` so
the objects compose with parameter sweeps and cloning. The underlying numpy
pipeline stays importable on its own; this layer only adds state handling and
input validation.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .calib import SensitivityMaps, calibrate, eigen_maps
from .evaluate import direct_maps, project
from .ktensor import center_crop
from .recon import solve, synthesize_coil_images
from .validation import as_complex_array, check_kspace, check_mode
from .vcc import align_sign, center_phase, check_conjugate_pairing, make_vcc

__all__ = [
    "EspiritCalibration",
    "VccEspiritCalibration",
    "SenseReconstruction",
]


def _require_fitted(obj, attr):
    if not hasattr(obj, attr):
        raise NotFittedError(
            f"{type(obj).__name__} is not fitted yet; call fit() first"
        )


class EspiritCalibration(TransformerMixin, BaseEstimator):
    """Subspace calibration from the central k-space block.

    fit(X) expects fully sampled k-space (nx, ny, ncoils) or a KTensor; the
    ACS block is cropped internally. transform(X) projects coil images onto
    the span of the fitted maps and returns the projected images.

    Attributes after fit: maps_ (SensitivityMaps), subspace_ (CalibSubspace),
    n_kernels_, singular_values_.
    """

    def __init__(self, acs=24, kernel_size=6, threshold=1e-3, nsets=1, crop=0.85):
        self.acs = acs
        self.kernel_size = kernel_size
        self.threshold = threshold
        self.nsets = nsets
        self.crop = crop

    def _calibrate(self, arr):
        block = center_crop(arr, (self.acs, self.acs), axes=(0, 1))
        return calibrate(block, kernel_size=self.kernel_size, threshold=self.threshold)

    def fit(self, X, y=None):
        arr = check_kspace(X)
        self.grid_ = arr.shape[:2]
        self.subspace_ = self._calibrate(arr)
        self.maps_ = eigen_maps(self.subspace_, self.grid_, nsets=self.nsets)
        self.n_kernels_ = self.subspace_.nkernels
        self.singular_values_ = self.subspace_.singular_values
        return self

    def transform(self, X, mode="complex"):
        _require_fitted(self, "maps_")
        coil_images = as_complex_array(X, "coil_images", ndim=3)
        proj, _ = project(coil_images, self.maps_, mode=mode)
        return proj

    def score(self, X, mode="complex", support=None):
        """Negative relative projection residual of coil images X."""
        _require_fitted(self, "maps_")
        coil_images = as_complex_array(X, "coil_images", ndim=3)
        _, err = project(coil_images, self.maps_, mode=mode, support=support)
        return -err.scalar


class VccEspiritCalibration(EspiritCalibration):
    """Calibration on the conjugate-augmented coil stack with phase centering.

    fit(X) takes physical k-space (nx, ny, N); the virtual channels are
    appended internally, the doubled maps are calibrated as usual, and the
    result is split into an absolute-phase map set plus the per-pixel image
    phase. Signs are aligned against low-resolution direct maps so the
    remaining per-pixel ambiguity does not fragment into random flips.

    Attributes after fit: maps_ (absolute-phase, N coils), phase_ (PhaseMap),
    vcc_maps_ (raw doubled-coil maps), pairing_score_, plus the base-class
    calibration attributes.
    """

    def __init__(
        self,
        acs=24,
        kernel_size=6,
        threshold=1e-3,
        nsets=1,
        crop=0.85,
        valid_rel=1e-3,
        align=True,
    ):
        super().__init__(
            acs=acs,
            kernel_size=kernel_size,
            threshold=threshold,
            nsets=nsets,
            crop=crop,
        )
        self.valid_rel = valid_rel
        self.align = align

    def fit(self, X, y=None):
        arr = check_kspace(X)
        self.grid_ = arr.shape[:2]
        stack = make_vcc(arr)
        self.subspace_ = self._calibrate(stack.data)
        self.n_kernels_ = self.subspace_.nkernels
        self.singular_values_ = self.subspace_.singular_values
        self.vcc_maps_ = eigen_maps(self.subspace_, self.grid_, nsets=self.nsets)
        self.pairing_score_ = check_conjugate_pairing(self.vcc_maps_)
        self.phase_, maps = center_phase(self.vcc_maps_, valid_rel=self.valid_rel)
        if self.align:
            maps = align_sign(maps, direct_maps(arr, acs=min(self.acs, min(self.grid_))))
        self.maps_ = maps
        return self


class SenseReconstruction(BaseEstimator):
    """Iterative SENSE solver bound to a fixed map set and sampling mask.

    fit(X) runs conjugate gradients on the masked k-space X and stores the
    component images; predict(X) solves without storing state. mode selects
    the phase handling: unconstrained complex, strictly real components, or
    complex with a penalty on the imaginary part.
    """

    def __init__(
        self,
        maps=None,
        mask=None,
        mode="real_constrained",
        lam=1e-4,
        lam_imag=1e-2,
        max_iter=100,
        tol=1e-6,
    ):
        self.maps = maps
        self.mask = mask
        self.mode = mode
        self.lam = lam
        self.lam_imag = lam_imag
        self.max_iter = max_iter
        self.tol = tol

    def _check_ready(self):
        if self.maps is None or self.mask is None:
            raise ValueError("maps and mask must be set before solving")
        check_mode(self.mode)

    def _solve(self, X):
        self._check_ready()
        return solve(
            X,
            self.maps,
            self.mask,
            mode=self.mode,
            lam=self.lam,
            lam_imag=self.lam_imag,
            max_iter=self.max_iter,
            tol=self.tol,
        )

    def fit(self, X, y=None):
        result = self._solve(X)
        self.image_ = result.image
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        self.residuals_ = result.residuals
        return self

    def predict(self, X):
        return self._solve(X).image

    def coil_images(self):
        """Synthesized coil images of the fitted reconstruction."""
        _require_fitted(self, "image_")
        maps = self.maps.maps if isinstance(self.maps, SensitivityMaps) else self.maps
        return synthesize_coil_images(self.image_, np.asarray(maps))
