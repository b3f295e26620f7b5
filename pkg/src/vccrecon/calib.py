"""Subspace calibration of coil sensitivities from an autocalibration block.

The calibration matrix collects every sliding kernel-sized patch of the block.
Its leading right singular vectors span the signal subspace; transformed to the
image domain they define a per-pixel operator whose dominant eigenvectors are
the sensitivities, with eigenvalue close to one inside the object.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .ktensor import center_pad, ifftc
from .validation import as_complex_array, check_even_grid

__all__ = [
    "CalibSubspace",
    "SensitivityMaps",
    "build_calib_matrix",
    "calibrate",
    "eigen_maps",
    "smoothstep",
    "soft_weight",
]


def build_calib_matrix(block, kernel_size):
    """Rows are flattened (kernel, kernel, ncoils) patches of the block.

    Column order is (dx, dy, coil), C-contiguous, so a right singular vector
    reshapes directly to a (kernel, kernel, ncoils) convolution kernel.
    """
    nx, ny, nc = block.shape
    k = int(kernel_size)
    if k < 2:
        raise ValueError(f"kernel_size must be >= 2, got {kernel_size}")
    if k > nx or k > ny:
        raise ValueError(f"kernel {k} does not fit calibration block {nx}x{ny}")
    win = sliding_window_view(block, (k, k), axis=(0, 1))
    win = win.transpose(0, 1, 3, 4, 2)
    return win.reshape((nx - k + 1) * (ny - k + 1), k * k * nc)


@dataclass(frozen=True)
class CalibSubspace:
    """Signal subspace of the calibration matrix.

    kernels has shape (kernel, kernel, ncoils, nkernels); each slice along the
    last axis is the conjugate of one retained right singular vector, i.e. a
    row of V^H, reshaped to k-space kernel layout.
    """

    kernels: np.ndarray
    singular_values: np.ndarray
    kernel_size: int
    threshold: float

    @property
    def ncoils(self):
        return self.kernels.shape[2]

    @property
    def nkernels(self):
        return self.kernels.shape[3]


def calibrate(block, kernel_size=6, threshold=1e-3):
    """SVD of the calibration matrix, keeping sigma >= threshold * sigma_max."""
    block = as_complex_array(block, "calibration block", ndim=3)
    if not np.any(block):
        raise ValueError("calibration block is identically zero")
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    mat = build_calib_matrix(block, kernel_size)
    _, sv, vh = np.linalg.svd(mat, full_matrices=False)
    keep = sv >= threshold * sv[0]
    if not keep.any():
        raise ValueError("no singular values above threshold, subspace is empty")
    k = int(kernel_size)
    nc = block.shape[2]
    kernels = vh[keep].reshape(-1, k, k, nc).transpose(1, 2, 3, 0)
    return CalibSubspace(
        kernels=np.ascontiguousarray(kernels),
        singular_values=sv,
        kernel_size=k,
        threshold=float(threshold),
    )


@dataclass(frozen=True)
class SensitivityMaps:
    """Per-pixel eigenvectors (maps) and eigenvalues of the subspace operator.

    maps: complex64 (nx, ny, ncoils, nsets), unit norm along the coil axis,
    sets ordered by descending eigenvalue. eigenvalues: float32 (nx, ny, nsets).
    """

    maps: np.ndarray
    eigenvalues: np.ndarray

    @property
    def grid(self):
        return self.maps.shape[:2]

    @property
    def ncoils(self):
        return self.maps.shape[2]

    @property
    def nsets(self):
        return self.maps.shape[3]

    def weighted(self, crop=0.85):
        """Maps scaled by the eigenvalue S-curve; complex128 (nx,ny,nc,nsets)."""
        w = soft_weight(self.eigenvalues, crop)
        return self.maps.astype(np.complex128) * w[:, :, None, :]


def _fix_phase(maps):
    # Rotate each (pixel, set) vector so a reference coil is real and
    # non-negative. Coil 0 anchors unless it is negligibly small there.
    anchor = maps[:, :, 0, :]
    mag = np.abs(maps)
    tiny = np.abs(anchor) < 1e-8 * mag.max(axis=2)
    if tiny.any():
        idx = np.argmax(mag, axis=2)
        alt = np.take_along_axis(maps, idx[:, :, None, :], axis=2)[:, :, 0, :]
        anchor = np.where(tiny, alt, anchor)
    scale = np.abs(anchor)
    phase = np.where(scale > 0, anchor, 1.0) / np.where(scale > 0, scale, 1.0)
    return maps * np.conj(phase)[:, :, None, :]


def eigen_maps(subspace, grid, nsets=1, chunk=32):
    """Pixelwise eigendecomposition of the image-domain subspace operator.

    Each kernel is zero-padded to the grid and inverse-transformed with the
    centered unitary FFT; scaling by sqrt(nx*ny / kernel^2) makes the operator
    sum_r w_r w_r^H have top eigenvalue approximately one where the model
    holds. Returns SensitivityMaps with nsets eigenpairs per pixel.
    """
    nx, ny = check_even_grid(grid)
    nc = subspace.ncoils
    if not 1 <= nsets <= nc:
        raise ValueError(f"nsets must be in [1, {nc}], got {nsets}")
    kern = subspace.kernels.astype(np.complex128)
    k = subspace.kernel_size
    scale = np.sqrt(nx * ny / (k * k))
    op = np.zeros((nx, ny, nc, nc), dtype=np.complex128)
    for lo in range(0, subspace.nkernels, chunk):
        part = center_pad(kern[..., lo : lo + chunk], (nx, ny), axes=(0, 1))
        w = scale * ifftc(part, axes=(0, 1))
        op += np.einsum("xycr,xydr->xycd", w, np.conj(w))
    vals, vecs = np.linalg.eigh(op)
    order = np.arange(nc - 1, nc - 1 - nsets, -1)
    vals = np.maximum(vals[:, :, order], 0.0)
    maps = _fix_phase(vecs[:, :, :, order])
    return SensitivityMaps(
        maps=maps.astype(np.complex64),
        eigenvalues=vals.astype(np.float32),
    )


def smoothstep(t):
    """Cubic ramp 3t^2 - 2t^3 on [0, 1], clamped outside."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def soft_weight(eigenvalues, crop=0.85):
    """S-curve weight: 0 at the crop level, 1 at eigenvalue one."""
    if not 0 <= crop < 1:
        raise ValueError(f"crop must be in [0, 1), got {crop}")
    return smoothstep((np.asarray(eigenvalues, dtype=np.float64) - crop) / (1.0 - crop))
