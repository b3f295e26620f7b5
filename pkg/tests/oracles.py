"""Slow, independent reference implementations used to pin down the fast code.

Everything here favors transparency over speed: transforms are explicit
phase-factor sums, sampling masks come from enumerating index sets, and the
per-pixel calibration operator is assembled densely and decomposed with a
plain eigensolver. Test modules first check these oracles on hand-computable
cases, then hold the production code to them.
"""

import math
from fractions import Fraction

import numpy as np


def dft2_centered(x):
    """O(N^2) matrix form of the centered unitary 2D DFT, DC at index n // 2.

    X[k, l] = sum_{j, m} x[j, m] * exp(-2 pi i ((k - nx/2)(j - nx/2)/nx
                                              + (l - ny/2)(m - ny/2)/ny))
              / sqrt(nx * ny)
    Trailing axes ride along untouched.
    """
    x = np.asarray(x, dtype=np.complex128)
    nx, ny = x.shape[:2]
    fx = np.arange(nx) - nx // 2
    fy = np.arange(ny) - ny // 2
    ex = np.exp(-2j * np.pi * np.outer(fx, fx) / nx) / np.sqrt(nx)
    ey = np.exp(-2j * np.pi * np.outer(fy, fy) / ny) / np.sqrt(ny)
    return np.einsum("kj,jm...,lm->kl...", ex, x, ey)


def idft2_centered(x):
    """Inverse of :func:`dft2_centered` (conjugated phase factors)."""
    x = np.asarray(x, dtype=np.complex128)
    nx, ny = x.shape[:2]
    fx = np.arange(nx) - nx // 2
    fy = np.arange(ny) - ny // 2
    ex = np.exp(2j * np.pi * np.outer(fx, fx) / nx) / np.sqrt(nx)
    ey = np.exp(2j * np.pi * np.outer(fy, fy) / ny) / np.sqrt(ny)
    return np.einsum("kj,jm...,lm->kl...", ex, x, ey)


def enumerate_mask(shape, accel=1, acs=0, pf=Fraction(1)):
    """Sampling mask built by explicit enumeration of sampled index pairs.

    Keeps every accel-th x-line, adds the centered acs block, then drops the
    ceil(pf * ny) complement on the low-index side of y.
    """
    nx, ny = shape
    sampled = {(i, j) for i in range(0, nx, accel) for j in range(ny)}
    if acs:
        x0 = (nx - acs) // 2
        y0 = (ny - acs) // 2
        sampled |= {
            (i, j)
            for i in range(x0, x0 + acs)
            for j in range(y0, y0 + acs)
        }
    cut = ny - math.ceil(pf * ny)
    sampled = {(i, j) for (i, j) in sampled if j >= cut}
    mask = np.zeros((nx, ny), dtype=bool)
    for i, j in sampled:
        mask[i, j] = True
    return mask


def patch_matrix(block, k):
    """Calibration matrix by plain python loops over patch positions."""
    nx, ny, nc = block.shape
    rows = []
    for i in range(nx - k + 1):
        for j in range(ny - k + 1):
            rows.append(block[i : i + k, j : j + k, :].reshape(-1))
    return np.asarray(rows)


def dense_pixel_operator(kernels, kernel_size, grid):
    """Per-pixel operator G(x) = sum_r w_r(x) w_r(x)^H, assembled densely.

    kernels: (k, k, ncoils, nkernels) k-space kernels. Each one is placed in
    the centered block of the grid, transformed with the slow inverse DFT and
    scaled by sqrt(nx * ny / k^2); the outer products are then accumulated
    per pixel. Returns (nx, ny, nc, nc).
    """
    nx, ny = grid
    k = int(kernel_size)
    kern = np.asarray(kernels, dtype=np.complex128)
    nc, nkern = kern.shape[2], kern.shape[3]
    lo_x = (nx - k) // 2
    lo_y = (ny - k) // 2
    padded = np.zeros((nx, ny, nc, nkern), dtype=np.complex128)
    padded[lo_x : lo_x + k, lo_y : lo_y + k] = kern
    w = np.sqrt(nx * ny / (k * k)) * idft2_centered(padded)
    op = np.zeros((nx, ny, nc, nc), dtype=np.complex128)
    for r in range(nkern):
        wr = w[:, :, :, r]
        op += wr[:, :, :, None] * np.conj(wr)[:, :, None, :]
    return op


def dense_eigen(op, nsets=1):
    """Pixelwise eigenpairs of a dense operator stack, largest first.

    Loops over pixels and calls the dense eigensolver on each small matrix.
    Returns (eigenvalues (nx, ny, nsets), eigenvectors (nx, ny, nc, nsets)).
    """
    nx, ny, nc, _ = op.shape
    vals = np.zeros((nx, ny, nsets))
    vecs = np.zeros((nx, ny, nc, nsets), dtype=np.complex128)
    for i in range(nx):
        for j in range(ny):
            w, v = np.linalg.eigh(op[i, j])
            order = np.argsort(w)[::-1][:nsets]
            vals[i, j] = w[order]
            vecs[i, j] = v[:, order]
    return vals, vecs


def principal_angle(u, v):
    """Angle in radians between two vectors, insensitive to global phase."""
    u = np.asarray(u, dtype=np.complex128).ravel()
    v = np.asarray(v, dtype=np.complex128).ravel()
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("zero vector has no direction")
    c = np.abs(np.vdot(u, v)) / (nu * nv)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))
