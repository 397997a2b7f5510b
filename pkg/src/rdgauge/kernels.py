"""Block texture-energy kernels.

The hot loop of complexity analysis is a 32x32 orthonormal DCT over
every luma block of a frame (a 4K frame has 8100 blocks). Two
interchangeable backends compute the per-block AC magnitude sums:

* ``numba`` -- an @njit kernel, used by default when numba imports;
* ``numpy`` -- batched matrix multiplies, always available.

Set ``RDGAUGE_KERNEL=numpy`` (or ``numba``) to force a backend;
``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np

BLOCK = 32
ENV_FLAG = "RDGAUGE_KERNEL"


def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis matrix (D @ D.T == I)."""
    k = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    mat = np.cos(np.pi * (2 * j + 1) * k / (2 * n))
    mat[0] *= np.sqrt(1.0 / n)
    mat[1:] *= np.sqrt(2.0 / n)
    return np.ascontiguousarray(mat)


_DCT = dct_matrix(BLOCK)
_DCT_T = np.ascontiguousarray(_DCT.T)


def block_energies_numpy(plane: np.ndarray) -> np.ndarray:
    """Per-block sum of |AC coefficients| for a padded float64 plane.

    ``plane`` must have dimensions that are multiples of BLOCK. Returns
    a (rows, cols) grid of raw (unnormalised) energies. Constant blocks
    are exactly zero (no round-off residue from the transform).
    """
    nby = plane.shape[0] // BLOCK
    nbx = plane.shape[1] // BLOCK
    blocks = plane.reshape(nby, BLOCK, nbx, BLOCK).transpose(0, 2, 1, 3)
    coeffs = _DCT @ blocks @ _DCT_T
    mags = np.abs(coeffs)
    out = mags.sum(axis=(-2, -1)) - mags[..., 0, 0]
    flat = blocks.min(axis=(-2, -1)) == blocks.max(axis=(-2, -1))
    out[flat] = 0.0
    return out


try:
    import numba

    @numba.njit(cache=True)
    def _block_energies_njit(plane, dct, dct_t):  # pragma: no cover - jitted
        nby = plane.shape[0] // 32
        nbx = plane.shape[1] // 32
        out = np.empty((nby, nbx))
        for by in range(nby):
            for bx in range(nbx):
                block = plane[by * 32:(by + 1) * 32, bx * 32:(bx + 1) * 32].copy()
                if block.min() == block.max():  # flat: exactly zero texture
                    out[by, bx] = 0.0
                    continue
                coeffs = np.dot(np.dot(dct, block), dct_t)
                total = 0.0
                for i in range(32):
                    for j in range(32):
                        total += abs(coeffs[i, j])
                out[by, bx] = total - abs(coeffs[0, 0])
        return out

    def block_energies_numba(plane: np.ndarray) -> np.ndarray:
        return _block_energies_njit(plane, _DCT, _DCT_T)

    HAVE_NUMBA = True
except ImportError:  # pure-numpy environments
    block_energies_numba = None
    HAVE_NUMBA = False


def active_backend() -> str:
    """Backend name after applying the RDGAUGE_KERNEL override."""
    choice = os.environ.get(ENV_FLAG, "").strip().lower()
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("RDGAUGE_KERNEL=numba but numba is not installed")
        return "numba"
    if choice:
        raise RuntimeError(f"unknown {ENV_FLAG} value {choice!r}")
    return "numba" if HAVE_NUMBA else "numpy"


def block_energies(plane: np.ndarray) -> np.ndarray:
    """Dispatch to the active backend. See block_energies_numpy."""
    if active_backend() == "numba":
        return block_energies_numba(plane)
    return block_energies_numpy(plane)
