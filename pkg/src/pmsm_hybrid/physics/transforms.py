"""Park transform of three coil flux waveforms (amplitude-invariant, coil 1 at theta = 0)."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError

_SHIFTS = 2.0 * np.pi / 3.0 * np.arange(3)


def park_transform(flux, theta):
    """Per-step (psi_d, psi_q) of coil fluxes ``flux[..., 3, n]`` at angles ``theta[n]``.

    psi_d = 2/3 sum_k psi_k cos(theta - 2 pi k / 3)
    psi_q = -2/3 sum_k psi_k sin(theta - 2 pi k / 3)
    """
    flux = np.asarray(flux, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    if flux.ndim < 2 or flux.shape[-2] != 3:
        raise ShapeError(f"expected (..., 3, n) coil fluxes, got {flux.shape}")
    if theta.ndim != 1 or flux.shape[-1] != theta.shape[0]:
        raise ShapeError(f"waveform length {flux.shape[-1]} does not match {theta.shape} angles")
    shifted = theta[None, :] - _SHIFTS[:, None]
    psi_d = (2.0 / 3.0) * np.sum(flux * np.cos(shifted), axis=-2)
    psi_q = -(2.0 / 3.0) * np.sum(flux * np.sin(shifted), axis=-2)
    return psi_d, psi_q


def dq_means(flux, theta):
    """Period-averaged (psi_d, psi_q)."""
    psi_d, psi_q = park_transform(flux, theta)
    return psi_d.mean(axis=-1), psi_q.mean(axis=-1)
