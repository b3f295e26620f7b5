"""Cartesian undersampling: uniform acceleration, centered ACS block, partial Fourier.

Acceleration runs along the first (x) dimension: every R-th x-line is kept.
Partial Fourier cuts the second (y) dimension, keeping the ``ceil(p * ny)``
highest-index positions so the retained half-space covers the k-space center
plus one full side; the centered ACS block must survive the cut.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .ktensor import KTensor

__all__ = ["SamplingPattern", "apply_pattern"]


def _as_fraction(pf):
    if isinstance(pf, str):
        return Fraction(pf)
    return Fraction(pf)


@dataclass(frozen=True)
class SamplingPattern:
    """Binary k-space mask over an (nx, ny) grid.

    Args:
        shape: grid extents (nx, ny), both even.
        accel: acceleration factor R; every R-th x-line is sampled.
        acs: extents of the centered fully-sampled block, an int or (wx, wy).
        partial_fourier: sampled fraction of the y axis, rational in (1/2, 1].
    """

    shape: tuple
    accel: int = 1
    acs: tuple = (0, 0)
    partial_fourier: Fraction = Fraction(1)

    def __post_init__(self):
        if len(self.shape) != 2:
            raise ValueError(f"pattern shape must be (nx, ny), got {self.shape}")
        nx, ny = self.shape
        if nx % 2 or ny % 2 or nx <= 0 or ny <= 0:
            raise ValueError(f"grid extents must be positive and even, got {self.shape}")
        if int(self.accel) != self.accel or self.accel < 1:
            raise ValueError(f"acceleration must be a positive integer, got {self.accel}")
        acs = self.acs
        if np.isscalar(acs):
            acs = (int(acs), int(acs))
        acs = (int(acs[0]), int(acs[1]))
        if acs[0] < 0 or acs[1] < 0 or acs[0] > nx or acs[1] > ny:
            raise ValueError(f"ACS block {acs} does not fit grid {self.shape}")
        pf = _as_fraction(self.partial_fourier)
        if not Fraction(1, 2) < pf <= 1:
            raise ValueError(f"partial Fourier fraction must be in (1/2, 1], got {pf}")
        if acs[1] > 0 and (ny - self._pf_keep(ny, pf)) > (ny - acs[1]) // 2:
            raise ValueError(
                f"partial Fourier {pf} cuts into the {acs} ACS block"
            )
        object.__setattr__(self, "shape", (int(nx), int(ny)))
        object.__setattr__(self, "accel", int(self.accel))
        object.__setattr__(self, "acs", acs)
        object.__setattr__(self, "partial_fourier", pf)

    @staticmethod
    def _pf_keep(ny, pf):
        return math.ceil(pf * ny)

    @cached_property
    def mask(self):
        """Boolean (nx, ny) array, True where k-space is sampled."""
        nx, ny = self.shape
        m = np.zeros((nx, ny), dtype=bool)
        m[:: self.accel, :] = True
        wx, wy = self.acs
        if wx and wy:
            x0 = (nx - wx) // 2
            y0 = (ny - wy) // 2
            m[x0 : x0 + wx, y0 : y0 + wy] = True
        cut = ny - self._pf_keep(ny, self.partial_fourier)
        if cut:
            m[:, :cut] = False
        return m

    @classmethod
    def from_spec(cls, spec, shape):
        """Parse a pattern description like ``"R=3,acs=24,pf=5/8"``."""
        accel, acs, pf = 1, 0, Fraction(1)
        for item in filter(None, (s.strip() for s in spec.split(","))):
            key, _, value = item.partition("=")
            key = key.strip().lower()
            if not value:
                raise ValueError(f"bad pattern item {item!r}")
            if key == "r":
                accel = int(value)
            elif key == "acs":
                acs = int(value)
            elif key == "pf":
                pf = Fraction(value)
            else:
                raise ValueError(f"unknown pattern key {key!r}")
        return cls(shape=tuple(shape), accel=accel, acs=acs, partial_fourier=pf)


def apply_pattern(ksp, pattern):
    """Zero unsampled k-space entries; the coil (and set) axes broadcast.

    ``ksp`` may be a KTensor or an array with leading (x, y) axes.
    """
    if isinstance(ksp, KTensor):
        if ksp.dims[:2] != ("x", "y"):
            raise ValueError(f"expected leading (x, y) dims, got {ksp.dims}")
        return ksp.with_data(apply_pattern(ksp.data, pattern))
    ksp = np.asarray(ksp)
    if ksp.shape[:2] != pattern.mask.shape:
        raise ValueError(
            f"k-space grid {ksp.shape[:2]} does not match pattern {pattern.mask.shape}"
        )
    mask = pattern.mask.reshape(pattern.mask.shape + (1,) * (ksp.ndim - 2))
    return ksp * mask
