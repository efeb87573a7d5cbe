"""Amplitude recovery given estimated frequencies.

Two routes: a quadratic-form estimator reading amplitudes off the diagonal
of the pseudo-inverted Toeplitz lifting, and a direct least-squares fit to
the raw samples.  Both return amplitudes in the order of the supplied
frequencies.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import RankDeficiencyError
from .signal import SampleVector, fourier_matrix
from .subspace import ToeplitzOperator

_PINV_CUTOFF = 1e-12


def _pinv(phi: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudoinverse with relative cutoff 1e-12 * sigma_1.

    Raises :class:`RankDeficiencyError` if the column space collapses
    (numerically coincident frequencies).
    """
    u, sv, vh = scipy.linalg.svd(phi, full_matrices=False)
    if sv[0] <= 0:
        raise RankDeficiencyError("steering matrix is zero")
    keep = sv > _PINV_CUTOFF * sv[0]
    rank = int(np.count_nonzero(keep))
    if rank < phi.shape[1]:
        raise RankDeficiencyError(
            f"steering matrix rank {rank} < {phi.shape[1]} columns; "
            "frequencies are numerically coincident"
        )
    return (vh.conj().T / sv) @ u.conj().T


def quadratic_amplitudes(frequencies, T) -> np.ndarray:
    """a_hat = diag(Phi^+ T Phi^+*) for the lifted sample matrix T.

    Parameters
    ----------
    frequencies : array_like
        Estimated frequencies (radians); output stays in this order.
    T : ToeplitzOperator or ndarray
        Lifted (m x m) sample matrix, clean or noisy.

    Returns
    -------
    ndarray
        Complex amplitude estimates, one per frequency.
    """
    x = np.atleast_1d(np.asarray(frequencies, dtype=float))
    if isinstance(T, ToeplitzOperator):
        m = T.m
        apply_T = T.matmat
    else:
        Tm = np.asarray(T)
        if Tm.ndim != 2 or Tm.shape[0] != Tm.shape[1]:
            raise ValueError("T must be square")
        m = Tm.shape[0]
        apply_T = lambda B: Tm @ B
    if len(x) > m:
        raise ValueError("more frequencies than rows in the lifted matrix")
    phi = fourier_matrix(m, x)
    pinv = _pinv(phi)
    prod = apply_T(pinv.conj().T)        # T P*  (m x s)
    return np.einsum("jk,kj->j", pinv, prod)


def least_squares_amplitudes(frequencies, samples: SampleVector) -> np.ndarray:
    """Minimum-norm least-squares fit of the samples by the steering matrix.

    Solves min_u ||y - Phi(2m-1, x) u||_2 over the full sample index range.
    """
    x = np.atleast_1d(np.asarray(frequencies, dtype=float))
    phi = fourier_matrix(2 * samples.m - 1, x)
    sol, _, rank, _ = scipy.linalg.lstsq(phi, samples.values,
                                         cond=_PINV_CUTOFF)
    if rank < phi.shape[1]:
        raise RankDeficiencyError(
            f"steering matrix rank {rank} < {phi.shape[1]} columns"
        )
    return sol
