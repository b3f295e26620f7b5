"""Synthetic multi-coil phantom with controllable smooth and high-frequency phase.

The magnitude is a Shepp-Logan style ellipse composition, the smooth phase is a
band-limited low-order polynomial, and the optional high-frequency phase
consists of steep linear ramps confined to small discs. Coil
sensitivities are Gaussian-weighted low-order complex polynomials centered on a
circle around the field of view, so the ground truth satisfies the smoothness
assumptions of subspace calibration.
"""

from dataclasses import dataclass

import numpy as np

from .ktensor import KTensor, fftc, ifftc

__all__ = ["PhantomTruth", "make_phantom", "simulate_kspace"]

# (value, half-axis a, half-axis b, center x0, center y0, rotation in degrees).
# Derived from the classic head phantom; the two dark interior ellipses are
# lifted off zero so the object support carries signal everywhere.
_ELLIPSES = (
    (1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.80, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.15, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.15, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.10, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.10, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.10, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
    (0.10, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
)


@dataclass(frozen=True)
class PhantomTruth:
    """Ground truth for one synthetic slice.

    magnitude, smooth_phase and hf_phase are real (nx, ny) images (phases in
    radians); coils is the complex (nx, ny, ncoils) sensitivity stack; support
    is the boolean object mask.
    """

    magnitude: np.ndarray
    smooth_phase: np.ndarray
    hf_phase: np.ndarray
    coils: np.ndarray
    support: np.ndarray

    @property
    def image(self):
        """Complex object |rho| * exp(i * (smooth + high-frequency phase))."""
        return self.magnitude * np.exp(1j * (self.smooth_phase + self.hf_phase))

    @property
    def coil_images(self):
        """Per-coil images: image broadcast against the sensitivities."""
        return self.image[:, :, None] * self.coils

    @property
    def blob_mask(self):
        """Pixels carrying high-frequency phase."""
        return self.hf_phase != 0

    @property
    def phased_coils(self):
        """Sensitivities with the full image phase absorbed (the maps a
        phase-aware calibration should recover, up to sign)."""
        return np.exp(1j * (self.smooth_phase + self.hf_phase))[:, :, None] * self.coils


def _grid_coords(n):
    # Normalized coordinates in [-1, 1), index n//2 at 0.
    return (np.arange(n) - n // 2) / (n / 2)


def _ellipse_image(n):
    x = _grid_coords(n)[:, None]
    y = _grid_coords(n)[None, :]
    img = np.zeros((n, n))
    for value, a, b, x0, y0, deg in _ELLIPSES:
        phi = np.deg2rad(deg)
        xr = (x - x0) * np.cos(phi) + (y - y0) * np.sin(phi)
        yr = -(x - x0) * np.sin(phi) + (y - y0) * np.cos(phi)
        img += value * ((xr / a) ** 2 + (yr / b) ** 2 <= 1.0)
    return np.clip(img, 0.0, None)


def _support_mask(n):
    x = _grid_coords(n)[:, None]
    y = _grid_coords(n)[None, :]
    _, a, b, x0, y0, _ = _ELLIPSES[0]
    return ((x - x0) / a) ** 2 + ((y - y0) / b) ** 2 <= 1.0


def _smooth_phase(n, rng, amplitude, kcut=8, rolloff=2.0):
    # Low-order 2D polynomial background phase. The saddle term dominates by
    # construction so the extremes sit in the corners of the field of view,
    # outside the object; across the support itself the sweep stays gentle,
    # which is what separates this phase from the blob ramps downstream.
    x = _grid_coords(n)[:, None]
    y = _grid_coords(n)[None, :]
    c = rng.normal(0.0, 0.15, size=4)
    sign = -1.0 if rng.uniform() < 0.5 else 1.0
    poly = (
        sign * x * y
        + c[0] * (x**2 - y**2)
        + c[1] * x
        + c[2] * y
        + c[3] * (x**2 + y**2)
    )
    # A polynomial sampled on the grid is not periodic, so its spectrum has
    # slowly decaying wrap-around tails; a soft spectral gate confines the
    # field to the central calibration-sized block.
    kk = np.abs(np.arange(n) - n // 2)
    gate = np.exp(-np.maximum(kk - kcut, 0) ** 2 / (2 * rolloff**2))
    field = ifftc(fftc(poly) * gate[:, None] * gate[None, :]).real
    return field * (amplitude / np.abs(field).max())


def _place_blobs(n, rng, count, radius, support):
    # Rejection-sample non-touching disc centers well inside the object.
    centers = []
    margin = int(np.ceil(radius)) + 3
    interior = support.copy()
    interior[:margin, :] = False
    interior[-margin:, :] = False
    interior[:, :margin] = False
    interior[:, -margin:] = False
    candidates = np.argwhere(interior)
    min_dist = 2 * radius + 4.0
    for _ in range(10000):
        if len(centers) == count:
            break
        cx, cy = candidates[rng.integers(len(candidates))]
        if all((cx - px) ** 2 + (cy - py) ** 2 >= min_dist**2 for px, py in centers):
            centers.append((int(cx), int(cy)))
    if len(centers) < count:
        raise ValueError(f"could not place {count} separated blobs on the support")
    return centers


def _hf_phase(n, rng, count, radius, ramp, support):
    phase = np.zeros((n, n))
    if count == 0:
        return phase
    ix = np.arange(n)[:, None]
    iy = np.arange(n)[None, :]
    slope = ramp / (2.0 * radius)
    for cx, cy in _place_blobs(n, rng, count, radius, support):
        disc = (ix - cx) ** 2 + (iy - cy) ** 2 <= radius**2
        theta = rng.uniform(0, 2 * np.pi)
        ramp_img = slope * (np.cos(theta) * (ix - cx) + np.sin(theta) * (iy - cy))
        # Constant offset keeps the ramp away from exact zero inside the disc.
        phase[disc] = ramp_img[disc] + np.pi / 5.0
    return phase


def _coil_maps(n, rng, ncoils):
    x = _grid_coords(n)[:, None]
    y = _grid_coords(n)[None, :]
    ring_radius = 1.3
    sigma = 1.1
    coils = np.empty((n, n, ncoils), dtype=complex)
    for j in range(ncoils):
        angle = 2 * np.pi * j / ncoils + rng.uniform(-0.15, 0.15)
        cx = ring_radius * np.cos(angle)
        cy = ring_radius * np.sin(angle)
        u = x - cx
        v = y - cy
        p1 = 0.35 * (rng.standard_normal() + 1j * rng.standard_normal())
        p2 = 0.35 * (rng.standard_normal() + 1j * rng.standard_normal())
        poly = 1.0 + p1 * u + p2 * v
        profile = np.exp(-(u**2 + v**2) / (2 * sigma**2))
        coils[:, :, j] = np.exp(1j * rng.uniform(0, 2 * np.pi)) * poly * profile
    rss = np.sqrt(np.sum(np.abs(coils) ** 2, axis=-1))
    return coils / rss.max()


def make_phantom(
    grid=96,
    ncoils=8,
    hf_blobs=0,
    seed=42,
    phase_amplitude=np.pi / 2,
    blob_radius=2.9,
    blob_ramp=1.5 * np.pi,
):
    """Generate a deterministic PhantomTruth.

    Args:
        grid: even image extent (>= 32), used for both axes.
        ncoils: number of receive coils (>= 2).
        hf_blobs: number of small discs carrying steep linear phase ramps.
        seed: RNG seed; fixed seed gives identical output.
        phase_amplitude: peak |smooth phase| in radians over the grid.
        blob_radius: disc radius in pixels.
        blob_ramp: phase sweep across a disc in radians (>= pi for the
            second-eigenvalue effect).
    """
    if grid % 2 or grid < 32:
        raise ValueError(f"grid must be even and >= 32, got {grid}")
    if ncoils < 2:
        raise ValueError(f"need at least 2 coils, got {ncoils}")
    if hf_blobs < 0:
        raise ValueError("hf_blobs must be non-negative")
    rng = np.random.default_rng(seed)
    magnitude = _ellipse_image(grid)
    support = _support_mask(grid)
    smooth = _smooth_phase(grid, rng, phase_amplitude)
    hf = _hf_phase(grid, rng, hf_blobs, blob_radius, blob_ramp, support)
    coils = _coil_maps(grid, rng, ncoils)
    return PhantomTruth(
        magnitude=magnitude,
        smooth_phase=smooth,
        hf_phase=hf,
        coils=coils,
        support=support,
    )


def simulate_kspace(truth):
    """Multi-coil k-space of the truth: fftc of each coil image.

    Returns a KTensor with dims (x, y, coil).
    """
    return KTensor(fftc(truth.coil_images, axes=(0, 1)), ("x", "y", "coil"))
