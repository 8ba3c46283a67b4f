"""Lossless real-vector encoding of a Hermitian state for network input."""

from __future__ import annotations

import numpy as np


def encode_state_observation(rho: np.ndarray) -> np.ndarray:
    """Flatten a 3x3 Hermitian state into 9 reals.

    Ordering: the three populations, then (Re, Im) of the upper off-diagonal
    entries (0,1), (0,2), (1,2).
    """
    return np.array(
        [
            rho[0, 0].real,
            rho[1, 1].real,
            rho[2, 2].real,
            rho[0, 1].real,
            rho[0, 1].imag,
            rho[0, 2].real,
            rho[0, 2].imag,
            rho[1, 2].real,
            rho[1, 2].imag,
        ]
    )


def decode_state_observation(vec: np.ndarray) -> np.ndarray:
    """Inverse of :func:`encode_state_observation`."""
    if vec.shape != (9,):
        raise ValueError(f"expected 9 entries, got shape {vec.shape}")
    rho = np.zeros((3, 3), dtype=complex)
    rho[0, 0], rho[1, 1], rho[2, 2] = vec[0], vec[1], vec[2]
    rho[0, 1] = vec[3] + 1j * vec[4]
    rho[0, 2] = vec[5] + 1j * vec[6]
    rho[1, 2] = vec[7] + 1j * vec[8]
    rho[1, 0] = rho[0, 1].conjugate()
    rho[2, 0] = rho[0, 2].conjugate()
    rho[2, 1] = rho[1, 2].conjugate()
    return rho
