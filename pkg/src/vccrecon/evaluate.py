"""Validation machinery: projections onto map subspaces, error metrics, export.

The central tool is the pixelwise projection of coil images onto the span of
the calibrated maps, either with complex coefficients or restricted to real
ones. With maps that carry the absolute phase, the real projection residual
measures how much of the data a real-valued object cannot explain, so it
separates correct phase maps from phase-blind ones without running a full
reconstruction.
"""

from dataclasses import dataclass

import numpy as np
from scipy.signal.windows import tukey

from .calib import SensitivityMaps
from .ktensor import center_crop, center_pad, ifftc
from .validation import as_complex_array, check_kspace, check_maps, check_mode

__all__ = [
    "rss",
    "direct_maps",
    "ErrorMap",
    "project",
    "diff_image",
    "nrmse",
    "doubled_angle_error",
    "edge_sharpness",
    "export_error_image",
    "write_pgm",
]


def rss(x, axis=2):
    """Root sum of squares magnitude along a coil axis."""
    return np.sqrt(np.sum(np.abs(np.asarray(x)) ** 2, axis=axis))


def direct_maps(ksp, acs=24, alpha=0.25, valid_rel=1e-3):
    """Low resolution maps straight from the calibration region.

    Crops an acs x acs block around DC, tapers it with a Tukey window
    (raised cosine over the outer quarter), zero-pads back and
    inverse-transforms; each pixel is then normalized to unit coil norm. The
    result carries the smooth part of the image phase and serves as a
    sign/phase reference and as a sanity baseline.
    """
    arr = check_kspace(ksp)
    nx, ny, _ = arr.shape
    if not 2 <= acs <= min(nx, ny):
        raise ValueError(f"acs {acs} does not fit grid {(nx, ny)}")
    block = center_crop(arr, (acs, acs), axes=(0, 1))
    taper = np.outer(tukey(acs, alpha), tukey(acs, alpha))
    block = block * taper[:, :, None]
    smooth = ifftc(center_pad(block, (nx, ny), axes=(0, 1)), axes=(0, 1))
    norm = rss(smooth)
    valid = norm > valid_rel * norm.max()
    maps = np.where(valid[:, :, None], smooth, 0) / np.where(
        valid[:, :, None], norm[:, :, None], 1.0
    )
    return SensitivityMaps(
        maps=maps[:, :, :, None].astype(np.complex64),
        eigenvalues=valid[:, :, None].astype(np.float32),
    )


@dataclass(frozen=True)
class ErrorMap:
    """Per-coil residuals with their RSS combination and a relative scalar.

    combined is the root-sum-of-squares of per_coil over the coil axis; scalar
    is the relative RMS of combined over the region the producer aggregated.
    """

    per_coil: np.ndarray
    combined: np.ndarray
    scalar: float


def _error_map(per_coil, reference, support=None):
    # scalar = RMS of the combined residual relative to the RSS reference,
    # both restricted to the support when one is given.
    combined = rss(per_coil)
    sel = (
        np.ones(combined.shape, dtype=bool)
        if support is None
        else np.asarray(support, dtype=bool)
    )
    den = np.sqrt(np.sum(rss(reference)[sel] ** 2))
    num = np.sqrt(np.sum(combined[sel] ** 2))
    return ErrorMap(
        per_coil=per_coil,
        combined=combined,
        scalar=float(num / den) if den > 0 else 0.0,
    )


def project(coil_images, maps, mode="complex", support=None, zero_rel=1e-8):
    """Project coil images onto the span of the maps at every pixel.

    complex mode allows a complex coefficient per set; real_constrained
    restricts the coefficients to be real, which is only satisfiable without
    residual when the maps absorb the true image phase. With a single set this
    reduces to coefficient <m, y> / |m|^2 (real part thereof in real mode).
    With several sets the coefficients come from a per-pixel least-squares
    solve: when the sets are orthonormal eigenvector sets that is again the
    per-set formula, but it stays a true projection even for sets that lost
    orthogonality to phase centering, so adding a set never increases the
    residual. imag_penalty is not a projection and is rejected here.

    Returns (projected coil images, ErrorMap). The relative error aggregates
    over support when given, else over everything.
    """
    m = check_maps(maps.maps if isinstance(maps, SensitivityMaps) else maps)
    imgs = as_complex_array(coil_images, "coil_images", ndim=3)
    if imgs.shape != m.shape[:3]:
        raise ValueError(f"coil images {imgs.shape} do not match maps {m.shape}")
    check_mode(mode)
    if mode == "imag_penalty":
        raise ValueError("imag_penalty is not a projection; use complex or real_constrained")
    nx, ny, nc, nsets = m.shape
    gram = np.einsum("xycs,xyct->xyst", np.conj(m), m)
    rhs = np.einsum("xycs,xyc->xys", np.conj(m), imgs)
    if mode == "real_constrained":
        gram = np.real(gram)
        rhs = np.real(rhs)
    # The pseudo-inverse absorbs sets that became parallel after phase
    # centering; pixels whose maps are negligible overall project to zero.
    total = np.einsum("xyss->xy", np.real(gram))
    keep = total > zero_rel * total.max()
    ginv = np.linalg.pinv(gram, rcond=1e-8, hermitian=True) if total.max() > 0 else gram
    coef = np.einsum("xyst,xyt->xys", ginv, rhs) * keep[:, :, None]
    proj = np.einsum("xycs,xys->xyc", m, coef)
    return proj, _error_map(imgs - proj, imgs, support)


def diff_image(recon_coils, reference_coils, support=None):
    """Per-coil difference to a reference stack, combined by RSS."""
    a = as_complex_array(recon_coils, "recon_coils", ndim=3)
    b = as_complex_array(reference_coils, "reference_coils", ndim=3)
    if a.shape != b.shape:
        raise ValueError(f"shapes {a.shape} and {b.shape} differ")
    return _error_map(a - b, b, support)


def nrmse(est, ref, mask=None):
    """||est - ref|| / ||ref|| over the mask (or everywhere)."""
    est = np.asarray(est)
    ref = np.asarray(ref)
    if est.shape != ref.shape:
        raise ValueError(f"shapes {est.shape} and {ref.shape} differ")
    if mask is not None:
        sel = np.asarray(mask, dtype=bool)
        est = est[sel]
        ref = ref[sel]
    den = np.linalg.norm(ref)
    if den == 0:
        raise ValueError("reference has zero norm")
    return float(np.linalg.norm(est - ref) / den)


def doubled_angle_error(est, ref, axis=2):
    """Sign-insensitive pixelwise phase error between two map stacks.

    Squaring the coilwise correlation cancels any per-pixel sign flip, so the
    result is |2 * phase error| in radians, zero when the phases agree up to
    a global sign.
    """
    est = np.asarray(est)
    ref = np.asarray(ref)
    if est.shape != ref.shape:
        raise ValueError(f"shapes {est.shape} and {ref.shape} differ")
    corr = np.sum((est * np.conj(ref)) ** 2, axis=axis)
    return np.abs(np.angle(corr))


def edge_sharpness(img, axis=1, support=None, quantile=0.98):
    """Strength of the steepest edges along an axis.

    Mean magnitude of the top (1 - quantile) fraction of finite differences
    of |img|; blur from missing high frequencies along the axis lowers it.
    """
    mag = np.abs(np.asarray(img))
    grad = np.abs(np.diff(mag, axis=axis))
    if support is not None:
        sel = np.asarray(support, dtype=bool)
        lo = [slice(None)] * mag.ndim
        hi = [slice(None)] * mag.ndim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        grad = grad[sel[tuple(lo)] & sel[tuple(hi)]]
    grad = np.ravel(grad)
    if grad.size == 0:
        raise ValueError("no gradients to evaluate")
    cut = np.quantile(grad, quantile)
    top = grad[grad >= cut]
    return float(top.mean())


def export_error_image(path, err, peak, boost=5.0):
    """PGM export of a combined residual, amplified for display.

    Residuals are usually faint next to the image itself, so the export boosts
    them (five-fold by default) relative to ``peak``, the display peak of the
    reference image. Only the exported pixels are scaled; the ErrorMap values
    are untouched.
    """
    if boost <= 0 or peak <= 0:
        raise ValueError("peak and boost must be positive")
    write_pgm(path, err.combined, peak=peak / boost)


def write_pgm(path, img, peak=None):
    """8-bit binary PGM of |img|, scaled so peak (default max) maps to 255."""
    mag = np.abs(np.asarray(img, dtype=np.float64))
    if mag.ndim != 2:
        raise ValueError(f"need a 2d image, got shape {mag.shape}")
    if peak is None:
        peak = mag.max()
    scale = 255.0 / peak if peak > 0 else 0.0
    pix = np.clip(mag * scale, 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{pix.shape[1]} {pix.shape[0]}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())
