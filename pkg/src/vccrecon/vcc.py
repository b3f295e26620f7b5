"""Virtual conjugate coils and recovery of the absolute image phase.

Conjugating k-space at negated coordinates yields a virtual channel whose
sensitivity is the conjugate of the physical one times the conjugated image
phase. Calibrating on the doubled coil stack therefore exposes the image phase
in the relation between each physical map and its virtual partner; centering
removes it and restricts back to the physical channels, leaving maps that
carry the absolute phase up to a global sign per pixel.
"""

from dataclasses import dataclass

import numpy as np

from .calib import SensitivityMaps
from .ktensor import KTensor
from .validation import as_complex_array, check_kspace

__all__ = [
    "VccKSpace",
    "PhaseMap",
    "conj_flip",
    "make_vcc",
    "center_phase",
    "align_sign",
    "check_conjugate_pairing",
]


def conj_flip(ksp, axes=(0, 1)):
    """conj(y(-k)) with k negated modulo the grid along the given axes.

    With the centered convention (DC at n//2) index negation is i -> (n - i)
    mod n, which keeps both DC and the Nyquist row fixed. Applying the
    operation twice returns the input exactly.
    """
    out = np.conj(ksp)
    for ax in axes:
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


@dataclass(frozen=True)
class VccKSpace:
    """Physical coils followed by their conjugate partners on the coil axis."""

    data: np.ndarray
    n_physical: int

    @property
    def physical(self):
        return self.data[:, :, : self.n_physical]

    @property
    def virtual(self):
        return self.data[:, :, self.n_physical :]

    def tensor(self):
        return KTensor(self.data, ("x", "y", "coil"))


def make_vcc(ksp):
    """Append the conjugate channel for every coil of an (nx, ny, nc) stack."""
    arr = check_kspace(ksp)
    virt = conj_flip(arr, axes=(0, 1))
    return VccKSpace(
        data=np.concatenate([arr, virt], axis=2),
        n_physical=arr.shape[2],
    )


@dataclass(frozen=True)
class PhaseMap:
    """Recovered image phase per set, principal branch (-pi/2, pi/2].

    valid_mask marks pixels where the physical/virtual pairing carried enough
    signal for the phase to mean anything.
    """

    phi: np.ndarray
    valid_mask: np.ndarray


def center_phase(maps, n_physical=None, valid_rel=1e-3):
    """Split doubled-coil maps into an absolute phase and physical maps.

    maps: SensitivityMaps calibrated on a VCC stack (2N coils). For each pixel
    and set, half the argument of sum_j m_j * m_{N+j} estimates the image
    phase modulo pi; the physical half is rotated by its negative and
    renormalized to unit coil norm.

    Returns (PhaseMap, SensitivityMaps) with the maps reduced to N coils. The
    remaining sign ambiguity is resolved separately by align_sign.
    """
    full = maps.maps.astype(np.complex128)
    nc = full.shape[2]
    if n_physical is None:
        if nc % 2:
            raise ValueError(f"coil count {nc} is odd, not a doubled stack")
        n_physical = nc // 2
    if not 0 < n_physical * 2 <= nc:
        raise ValueError(f"n_physical {n_physical} inconsistent with {nc} coils")
    phys = full[:, :, :n_physical, :]
    virt = full[:, :, n_physical : 2 * n_physical, :]
    pair = np.sum(phys * virt, axis=2)
    valid = np.abs(pair) > valid_rel * np.abs(pair).max()
    phi = np.where(valid, 0.5 * np.angle(pair), 0.0)
    centered = phys * np.exp(-1j * phi)[:, :, None, :]
    norm = np.sqrt(np.sum(np.abs(centered) ** 2, axis=2))
    centered = np.where(norm[:, :, None, :] > 0, centered, 0) / np.where(
        norm[:, :, None, :] > 0, norm[:, :, None, :], 1.0
    )
    return (
        PhaseMap(phi=phi, valid_mask=valid),
        SensitivityMaps(
            maps=centered.astype(np.complex64),
            eigenvalues=maps.eigenvalues.copy(),
        ),
    )


def align_sign(maps, reference):
    """Resolve the per-pixel sign of centered maps against reference maps.

    Flips the sign wherever the real part of the coilwise inner product with
    the reference is negative. A smooth reference (low resolution maps from
    the calibration region) fixes the sign globally on the object.
    """
    est = maps.maps.astype(np.complex128)
    ref = reference.maps if isinstance(reference, SensitivityMaps) else reference
    ref = np.asarray(ref, dtype=np.complex128)
    if ref.ndim == 3:
        ref = ref[:, :, :, None]
    if ref.shape[:3] != est.shape[:3]:
        raise ValueError(f"reference shape {ref.shape} does not match maps {est.shape}")
    score = np.real(np.sum(est * np.conj(ref), axis=2))
    sign = np.where(score < 0, -1.0, 1.0)
    return SensitivityMaps(
        maps=(est * sign[:, :, None, :]).astype(np.complex64),
        eigenvalues=maps.eigenvalues.copy(),
    )


def check_conjugate_pairing(maps, set_index=0, n_physical=None, support=None, valid_rel=1e-3):
    """Worst-case mismatch between virtual maps and conjugated physical maps.

    After phase centering the model predicts m_{N+j} = conj(m_j) exactly, so
    the score max_x ||m_{N+j}(x) - conj(m_j(x))|| / ||m(x)|| is a diagnostic
    for how well a doubled-coil map set obeys the conjugate-channel relation;
    0 is perfect. The centering rotation is applied internally (a no-op when
    the input is already centered), so raw eigenvector maps can be passed
    directly. The maximum runs over ``support`` when given, else over pixels
    where the physical/virtual pairing magnitude is significant.
    """
    full = as_complex_array(
        maps.maps if isinstance(maps, SensitivityMaps) else maps, "maps", ndim=4
    )
    nc = full.shape[2]
    if n_physical is None:
        if nc % 2:
            raise ValueError(f"coil count {nc} is odd, not a doubled stack")
        n_physical = nc // 2
    if not 0 < 2 * n_physical <= nc:
        raise ValueError(f"n_physical {n_physical} inconsistent with {nc} coils")
    sel = full[:, :, :, set_index]
    phys = sel[:, :, :n_physical]
    virt = sel[:, :, n_physical : 2 * n_physical]
    pair = np.sum(phys * virt, axis=2)
    rot = np.exp(-0.5j * np.angle(pair))
    phys = phys * rot[:, :, None]
    virt = virt * rot[:, :, None]
    num = np.sqrt(np.sum(np.abs(virt - np.conj(phys)) ** 2, axis=2))
    den = np.sqrt(np.sum(np.abs(sel) ** 2, axis=2))
    dev = np.where(den > 0, num, 0.0) / np.where(den > 0, den, 1.0)
    if support is None:
        support = np.abs(pair) > valid_rel * np.abs(pair).max()
    support = np.asarray(support, dtype=bool)
    if not support.any():
        raise ValueError("no pixels to evaluate the pairing score on")
    return float(dev[support].max())
