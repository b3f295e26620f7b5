"""Input checking helpers shared by the array core and the estimator layer."""

import numpy as np

from .ktensor import KTensor

__all__ = [
    "as_complex_array",
    "check_even_grid",
    "check_kspace",
    "check_maps",
    "check_mask",
    "check_mode",
]

MODES = ("complex", "real_constrained", "imag_penalty")


def as_complex_array(x, name="array", ndim=None):
    """Return x as a contiguous complex128 ndarray, unwrapping KTensor."""
    if isinstance(x, KTensor):
        x = x.data
    arr = np.ascontiguousarray(np.asarray(x, dtype=np.complex128))
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must have {ndim} dimensions, got {arr.ndim}")
    if not np.all(np.isfinite(arr.view(np.float64))):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_even_grid(shape, name="grid"):
    nx, ny = shape[:2]
    if nx % 2 or ny % 2 or nx <= 0 or ny <= 0:
        raise ValueError(f"{name} extents must be positive and even, got {(nx, ny)}")
    return nx, ny


def check_kspace(ksp, name="kspace"):
    """Validate a (nx, ny, ncoils) k-space stack; returns complex128 array."""
    arr = as_complex_array(ksp, name, ndim=3)
    check_even_grid(arr.shape, name)
    if arr.shape[2] < 1:
        raise ValueError(f"{name} needs at least one coil")
    return arr


def check_maps(maps, name="maps"):
    """Validate (nx, ny, ncoils) or (nx, ny, ncoils, nsets) sensitivities.

    Returns a complex128 array with an explicit set axis.
    """
    if isinstance(maps, KTensor):
        maps = maps.data
    arr = np.asarray(maps)
    if arr.ndim == 3:
        arr = arr[:, :, :, None]
    arr = as_complex_array(arr, name, ndim=4)
    check_even_grid(arr.shape, name)
    if arr.shape[2] < 1 or arr.shape[3] < 1:
        raise ValueError(f"{name} needs at least one coil and one set")
    return arr


def check_mask(mask, shape, name="mask"):
    """Validate a boolean (nx, ny) sampling mask against a grid shape."""
    m = np.asarray(mask)
    if m.shape != tuple(shape[:2]):
        raise ValueError(f"{name} shape {m.shape} does not match grid {tuple(shape[:2])}")
    if m.dtype != bool:
        if not np.all((m == 0) | (m == 1)):
            raise ValueError(f"{name} must be boolean or 0/1 valued")
        m = m.astype(bool)
    if not m.any():
        raise ValueError(f"{name} selects no samples")
    return m


def check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return mode
