"""Complex multi-dimensional tensors with named dims, centered FFTs, and KSP1 file I/O.

Conventions used throughout the package:

* dimension names are drawn from ``("x", "y", "coil", "set")`` and arrays are
  laid out in that order, i.e. k-space is ``(x, y, coil)``;
* the centered FFT is unitary (``norm="ortho"``) and puts DC at index ``n // 2``
  (zero-indexed) along every transformed axis, so that for a real-valued image
  the k-space satisfies ``y[-k] == conj(y[k])`` under index negation modulo the
  extent;
* tensors are stored in single complex precision (two 32-bit floats per value);
  heavy numerics upcast to double internally and cast back at the boundary.
"""

import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "KTensor",
    "KTensorFormatError",
    "BadMagicError",
    "TruncatedFileError",
    "ExtentOverflowError",
    "fftc",
    "ifftc",
    "center_crop",
    "center_pad",
    "read_ktensor",
    "write_ktensor",
]

DIM_NAMES = ("x", "y", "coil", "set")
_NAME_TO_TAG = {name: tag for tag, name in enumerate(DIM_NAMES)}
_TAG_TO_NAME = {tag: name for tag, name in enumerate(DIM_NAMES)}

STORAGE_DTYPE = np.complex64

MAGIC = b"KSP1"
_HEADER_DIM = struct.Struct("<BQ")

# Refuse to allocate absurd payloads declared by a (possibly corrupt) header.
MAX_ELEMENTS = 1 << 28


class KTensorFormatError(Exception):
    """Malformed KSP1 file."""


class BadMagicError(KTensorFormatError):
    """File does not start with the KSP1 magic bytes."""


class TruncatedFileError(KTensorFormatError):
    """File ends before the payload declared in the header."""


class ExtentOverflowError(KTensorFormatError):
    """Header declares extents whose product exceeds the supported size."""


def fftc(x, axes=(0, 1)):
    """Centered unitary forward FFT along ``axes`` (DC at index n//2)."""
    x = np.fft.ifftshift(x, axes=axes)
    x = np.fft.fftn(x, axes=axes, norm="ortho")
    return np.fft.fftshift(x, axes=axes)


def ifftc(x, axes=(0, 1)):
    """Centered unitary inverse FFT along ``axes``; exact inverse of :func:`fftc`."""
    x = np.fft.ifftshift(x, axes=axes)
    x = np.fft.ifftn(x, axes=axes, norm="ortho")
    return np.fft.fftshift(x, axes=axes)


def center_crop(x, sizes, axes=(0, 1)):
    """Extract the centered block of the given sizes along ``axes``.

    The block starts at ``(n - size) // 2``, matching the placement of the ACS
    region in sampling masks.
    """
    slices = [slice(None)] * x.ndim
    for ax, size in zip(axes, sizes):
        n = x.shape[ax]
        if size > n:
            raise ValueError(f"crop size {size} exceeds extent {n} on axis {ax}")
        lo = (n - size) // 2
        slices[ax] = slice(lo, lo + size)
    return x[tuple(slices)]


def center_pad(x, sizes, axes=(0, 1)):
    """Zero-pad along ``axes`` so the input sits in the centered block."""
    shape = list(x.shape)
    slices = [slice(None)] * x.ndim
    for ax, size in zip(axes, sizes):
        n = x.shape[ax]
        if size < n:
            raise ValueError(f"pad size {size} smaller than extent {n} on axis {ax}")
        lo = (size - n) // 2
        shape[ax] = size
        slices[ax] = slice(lo, lo + n)
    out = np.zeros(shape, dtype=x.dtype)
    out[tuple(slices)] = x
    return out


@dataclass(frozen=True)
class KTensor:
    """Immutable complex tensor with named dimensions.

    ``data`` is normalized to complex64 and frozen; ``dims`` names each axis
    with a unique entry of :data:`DIM_NAMES`.
    """

    data: np.ndarray
    dims: tuple

    def __post_init__(self):
        dims = tuple(self.dims)
        data = np.array(self.data, dtype=STORAGE_DTYPE, copy=True, order="C")
        if data.ndim != len(dims):
            raise ValueError(f"{data.ndim} axes but {len(dims)} dimension names")
        for name in dims:
            if name not in _NAME_TO_TAG:
                raise ValueError(f"unknown dimension name {name!r}")
        if len(set(dims)) != len(dims):
            raise ValueError(f"duplicate dimension names in {dims}")
        if not np.isfinite(data.view(np.float32)).all():
            raise ValueError("tensor values must be finite")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dims", dims)

    @property
    def shape(self):
        return self.data.shape

    def axis(self, name):
        """Axis index of the named dimension."""
        try:
            return self.dims.index(name)
        except ValueError:
            raise ValueError(f"tensor has no dimension {name!r}") from None

    def extent(self, name):
        return self.data.shape[self.axis(name)]

    def with_data(self, data):
        """New tensor with the same dims and different values."""
        return KTensor(data, self.dims)

    def fftc(self, dims=("x", "y")):
        """Centered unitary FFT along the named dims."""
        axes = tuple(self.axis(d) for d in dims)
        return self.with_data(fftc(self.data, axes=axes))

    def ifftc(self, dims=("x", "y")):
        """Inverse of :meth:`fftc` along the named dims."""
        axes = tuple(self.axis(d) for d in dims)
        return self.with_data(ifftc(self.data, axes=axes))


def _check_spatial_extents(dims, shape):
    for name, n in zip(dims, shape):
        if name in ("x", "y") and n % 2 != 0:
            raise KTensorFormatError(
                f"odd extent {n} for dimension {name!r}; spatial grids must be even"
            )


def write_ktensor(path, t):
    """Write a tensor as a KSP1 file.

    Layout (little-endian): magic ``KSP1``, u32 number of dims, per dim a u8
    name tag (0=x, 1=y, 2=coil, 3=set) and u64 extent, then the values as
    interleaved (real, imag) float32 pairs with the first dimension fastest.
    """
    if not isinstance(t, KTensor):
        raise TypeError("write_ktensor expects a KTensor")
    _check_spatial_extents(t.dims, t.shape)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", t.data.ndim))
        for name, n in zip(t.dims, t.shape):
            f.write(_HEADER_DIM.pack(_NAME_TO_TAG[name], n))
        f.write(t.data.astype("<c8", copy=False).tobytes(order="F"))


def read_ktensor(path):
    """Read a KSP1 file written by :func:`write_ktensor`; round-trip is bit-exact."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {raw[:4]!r}")
    if len(raw) < 8:
        raise TruncatedFileError(f"{path}: header cut short")
    (ndims,) = struct.unpack_from("<I", raw, 4)
    if ndims == 0 or ndims > len(DIM_NAMES):
        raise KTensorFormatError(f"{path}: unsupported dimension count {ndims}")
    offset = 8
    dims = []
    shape = []
    for _ in range(ndims):
        if offset + _HEADER_DIM.size > len(raw):
            raise TruncatedFileError(f"{path}: header cut short")
        tag, extent = _HEADER_DIM.unpack_from(raw, offset)
        offset += _HEADER_DIM.size
        if tag not in _TAG_TO_NAME:
            raise KTensorFormatError(f"{path}: unknown dimension tag {tag}")
        if extent == 0:
            raise KTensorFormatError(f"{path}: zero extent for tag {tag}")
        dims.append(_TAG_TO_NAME[tag])
        shape.append(extent)
    if len(set(dims)) != len(dims):
        raise KTensorFormatError(f"{path}: duplicate dimension tags")
    nelem = 1
    for extent in shape:
        nelem *= extent
        if nelem > MAX_ELEMENTS:
            raise ExtentOverflowError(f"{path}: {tuple(shape)} exceeds element limit")
    _check_spatial_extents(dims, shape)
    nbytes = nelem * 8
    if len(raw) - offset < nbytes:
        raise TruncatedFileError(
            f"{path}: payload has {len(raw) - offset} bytes, expected {nbytes}"
        )
    if len(raw) - offset > nbytes:
        raise KTensorFormatError(f"{path}: trailing bytes after payload")
    data = np.frombuffer(raw, dtype="<c8", count=nelem, offset=offset)
    data = data.reshape(tuple(shape), order="F")
    try:
        return KTensor(data, tuple(dims))
    except ValueError as exc:
        raise KTensorFormatError(f"{path}: {exc}") from exc
