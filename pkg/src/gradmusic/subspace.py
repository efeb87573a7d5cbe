"""Toeplitz lifting, SVD kernels, sparsity detection, and subspace distances.

The square Toeplitz lifting T(v)[j,k] = v[j-k] is held as an operator that
applies products through a circulant FFT embedding, so large instances never
materialize the dense m x m matrix; ``dense()`` is available for small ones.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft
import scipy.linalg
import scipy.sparse.linalg as spsla

from .errors import (
    DegenerateDataError,
    IllPosedSubspaceError,
    NumericalInstabilityError,
    RankDeficiencyError,
)
from .signal import SampleVector

# Below this size dense LAPACK kernels are used outright; above it, top-k
# singular triplets come from ARPACK on the FFT-based operator.
DENSE_CUTOFF = 600

# Relative tie tolerance for sigma_s vs sigma_{s+1} (subspace uniqueness).
TIE_TOL = 1e-12

ORTHO_TOL = 1e-10


class ToeplitzOperator:
    """m x m Toeplitz matrix T(v)[j,k] = v[j-k] applied via FFT.

    ``v`` has length 2m-1 and is indexed k = -m+1..m-1 with the same offset
    convention as :class:`~gradmusic.signal.SampleVector`.
    """

    def __init__(self, values):
        v = np.atleast_1d(np.asarray(values, dtype=complex))
        if v.ndim != 1 or len(v) % 2 != 1:
            raise ValueError("Toeplitz lifting needs a vector of odd length 2m-1")
        self.m = (len(v) + 1) // 2
        self.values = v
        self.shape = (self.m, self.m)
        self.dtype = np.dtype(complex)
        self._L = scipy.fft.next_fast_len(2 * self.m - 1, real=False)
        self._fc = self._embed(v)
        # adjoint is the Toeplitz lifting of v*[d] = conj(v[-d])
        self._fc_adj = self._embed(np.conj(v[::-1]))

    def _embed(self, v) -> np.ndarray:
        m, L = self.m, self._L
        c = np.zeros(L, dtype=complex)
        c[:m] = v[m - 1:]          # diagonals 0..m-1
        c[L - (m - 1):] = v[:m - 1]  # diagonals -(m-1)..-1
        return scipy.fft.fft(c)

    def _apply(self, X, fc) -> np.ndarray:
        X = np.asarray(X, dtype=complex)
        single = X.ndim == 1
        if single:
            X = X[:, None]
        Xp = np.zeros((self._L, X.shape[1]), dtype=complex)
        Xp[: self.m] = X
        Y = scipy.fft.ifft(fc[:, None] * scipy.fft.fft(Xp, axis=0), axis=0)[: self.m]
        return Y[:, 0] if single else Y

    def matvec(self, x):
        return self._apply(x, self._fc)

    def rmatvec(self, x):
        return self._apply(x, self._fc_adj)

    def matmat(self, X):
        return self._apply(X, self._fc)

    def rmatmat(self, X):
        return self._apply(X, self._fc_adj)

    def entry(self, j: int, k: int) -> complex:
        """Entry (j, k) = v[j-k], for 0 <= j,k < m."""
        return complex(self.values[j - k + self.m - 1])

    def dense(self) -> np.ndarray:
        return scipy.linalg.toeplitz(self.values[self.m - 1:],
                                     self.values[self.m - 1::-1])

    def as_linear_operator(self) -> spsla.LinearOperator:
        return spsla.LinearOperator(
            shape=self.shape,
            dtype=self.dtype,
            matvec=self.matvec,
            rmatvec=self.rmatvec,
            matmat=self.matmat,
            rmatmat=self.rmatmat,
        )


def toeplitz(v) -> ToeplitzOperator:
    """Toeplitz lifting of a sample vector (or raw odd-length array)."""
    if isinstance(v, SampleVector):
        return ToeplitzOperator(v.values)
    return ToeplitzOperator(v)


@dataclass(frozen=True)
class SingularSpectrum:
    """Leading singular values (descending) with matching left vectors.

    ``complete`` marks whether the full spectrum is present or only the
    leading part computed iteratively.
    """

    values: np.ndarray
    left: np.ndarray
    complete: bool

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if len(v) > 1 and np.any(np.diff(v) > 1e-12 * max(float(v[0]), 1.0)):
            raise ValueError("singular values must be nonincreasing")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "left", np.asarray(self.left, dtype=complex))


def _arpack_start(m: int) -> np.ndarray:
    """Deterministic ARPACK start vector so iterative runs are reproducible."""
    rng = np.random.Generator(np.random.Philox(key=[0x5EED, m]))
    v0 = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    return v0 / np.linalg.norm(v0)


def _as_dense(T) -> np.ndarray:
    if isinstance(T, ToeplitzOperator):
        return T.dense()
    return np.asarray(T, dtype=complex)


def svd(T) -> SingularSpectrum:
    """Full SVD of a Toeplitz matrix (dense kernel; 1e-10 relative accuracy)."""
    A = _as_dense(T)
    try:
        U, s, _ = scipy.linalg.svd(A)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise NumericalInstabilityError(
            f"SVD did not converge on a {A.shape} matrix: {exc}"
        ) from exc
    return SingularSpectrum(values=s, left=U, complete=True)


def top_spectrum(T, k: int) -> SingularSpectrum:
    """Leading k singular triplets of a Toeplitz operator (or dense matrix).

    Small problems fall back to the dense kernel; large Toeplitz operators
    use ARPACK on the FFT-based product with a fixed start vector.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not isinstance(T, ToeplitzOperator):
        full = svd(T)
        if k >= len(full.values):
            return full
        return SingularSpectrum(values=full.values[:k], left=full.left[:, :k],
                                complete=False)
    m = T.m
    if m <= DENSE_CUTOFF or k >= m - 1:
        full = svd(T)
        if k >= m:
            return full
        return SingularSpectrum(values=full.values[:k], left=full.left[:, :k],
                                complete=False)
    if np.all(T.values == 0):
        raise DegenerateDataError("zero sample vector has no singular structure")
    try:
        U, s, _ = spsla.svds(T.as_linear_operator(), k=k, which="LM",
                             v0=_arpack_start(m))
    except spsla.ArpackNoConvergence as exc:  # pragma: no cover - rare
        raise NumericalInstabilityError(
            f"iterative SVD did not converge at m={m}, k={k}: {exc}"
        ) from exc
    order = np.argsort(s)[::-1]
    return SingularSpectrum(values=s[order], left=U[:, order], complete=False)


def operator_norm(T) -> float:
    """Largest singular value of a Toeplitz operator or dense matrix."""
    if isinstance(T, ToeplitzOperator):
        if np.all(T.values == 0):
            return 0.0
        if T.m <= DENSE_CUTOFF:
            return float(scipy.linalg.svdvals(T.dense())[0])
        return float(top_spectrum(T, 1).values[0])
    return float(scipy.linalg.svdvals(np.asarray(T))[0])


def detect_sparsity(spectrum: SingularSpectrum, gamma: float) -> int:
    """Largest k with sigma_k >= gamma * sigma_1.

    With the default threshold this recovers the true sparsity whenever the
    noise-to-gap ratio rho is at most 0.01, the frequencies are separated by
    8pi/m, and the amplitude spread is at most 10.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie strictly between 0 and 1")
    vals = spectrum.values
    if len(vals) == 0 or not np.isfinite(vals[0]) or vals[0] <= 0.0:
        raise DegenerateDataError("leading singular value is zero; no signal")
    threshold = gamma * vals[0]
    count = int(np.count_nonzero(vals >= threshold))
    if not spectrum.complete and count == len(vals):
        raise ValueError(
            "truncated spectrum does not resolve the threshold; "
            "recompute with more singular values"
        )
    return count


@dataclass(frozen=True)
class Subspace:
    """m x s orthonormal frame standing for a (possibly perturbed) subspace."""

    m: int
    s: int
    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=complex)
        if B.shape != (self.m, self.s):
            raise ValueError(f"basis must be {self.m} x {self.s}")
        if not 1 <= self.s < self.m:
            raise ValueError("need 1 <= s < m")
        gram = B.conj().T @ B
        if np.max(np.abs(gram - np.eye(self.s))) > ORTHO_TOL:
            raise ValueError("basis columns are not orthonormal to 1e-10")
        object.__setattr__(self, "basis", B)


def toeplitz_estimator(T, s: int, spectrum: SingularSpectrum | None = None) -> Subspace:
    """Orthonormal basis of the top-s left singular space of T.

    Refuses (ill-posed) when sigma_s and sigma_{s+1} are within 1e-12 of each
    other on the sigma_1 scale, since the subspace is then not unique.
    """
    if isinstance(T, ToeplitzOperator):
        m = T.m
    else:
        m = np.asarray(T).shape[0]
    if not 1 <= s < m:
        raise ValueError("need 1 <= s < m")
    if spectrum is None or len(spectrum.values) < s + 1:
        if isinstance(T, ToeplitzOperator) and m > DENSE_CUTOFF:
            spectrum = top_spectrum(T, s + 1)
        else:
            spectrum = svd(T)
    vals = spectrum.values
    if vals[0] <= 0.0:
        raise DegenerateDataError("zero matrix has no leading singular space")
    if vals[s - 1] - vals[s] <= TIE_TOL * vals[0]:
        raise IllPosedSubspaceError(
            f"sigma_{s} and sigma_{s + 1} coincide within tolerance "
            f"({vals[s - 1]:.3e} vs {vals[s]:.3e}); leading subspace not unique"
        )
    return Subspace(m=m, s=s, basis=spectrum.left[:, :s])


def adaptive_spectrum(T: ToeplitzOperator, gamma: float,
                      initial_k: int = 8) -> SingularSpectrum:
    """Enough of the leading spectrum to resolve the gamma threshold.

    Doubles k until the smallest computed singular value falls below
    gamma * sigma_1 (or the spectrum is complete), so
    :func:`detect_sparsity` is well defined on the result.
    """
    m = T.m
    if np.all(T.values == 0):
        raise DegenerateDataError("zero sample vector; nothing to detect")
    k = min(initial_k, m - 1)
    while True:
        spec = top_spectrum(T, k)
        if spec.complete or spec.values[-1] < gamma * spec.values[0]:
            return spec
        if k >= m - 1:
            return svd(T)
        k = min(2 * k, m - 1)


def sine_theta(V: Subspace, W: Subspace) -> float:
    """Sine-theta distance between equidimensional subspaces.

    Computes both characterizations — the projector difference norm
    ||VV* - WW*||_2 and the complement norm ||V_perp* W||_2 — and requires
    them to agree to 1e-8 before returning the former.
    """
    if V.m != W.m or V.s != W.s:
        raise ValueError("subspaces must share m and s")
    A, B = V.basis, W.basis
    if V.m <= DENSE_CUTOFF:
        proj_diff = float(scipy.linalg.svdvals(
            A @ A.conj().T - B @ B.conj().T)[0])
    else:
        # singular values of the projector difference are the sines of the
        # principal angles, so the norm is sqrt(1 - sigma_min(V*W)^2)
        cosines = scipy.linalg.svdvals(A.conj().T @ B)
        proj_diff = float(np.sqrt(max(0.0, 1.0 - float(cosines[-1]) ** 2)))
    residual = float(scipy.linalg.svdvals(B - A @ (A.conj().T @ B))[0])
    if abs(proj_diff - residual) > 1e-8:
        raise NumericalInstabilityError(
            f"sine-theta formulas disagree: {proj_diff:.3e} vs {residual:.3e}"
        )
    return proj_diff


def toeplitz_subspace_error(clean, noise_toeplitz, s: int) -> float:
    """Noise-to-spectral-gap ratio rho = 2 ||T(eta)||_2 / sigma_s(T(y))."""
    if not isinstance(clean, ToeplitzOperator):
        clean = ToeplitzOperator(np.asarray(clean))
    if s < 1 or s > clean.m:
        raise ValueError("s out of range")
    spec = top_spectrum(clean, min(s, clean.m))
    sigma_s = float(spec.values[s - 1])
    sigma_1 = float(spec.values[0])
    if sigma_1 == 0.0 or sigma_s <= 1e-12 * sigma_1:
        raise RankDeficiencyError(
            f"clean Toeplitz matrix is rank deficient at level {s}"
        )
    return 2.0 * operator_norm(noise_toeplitz) / sigma_s


def spectrum_to_csv(spectrum: SingularSpectrum, path) -> None:
    """Export singular values as CSV with header ``k,sigma`` (k is 1-based)."""
    with open(path, "w") as f:
        f.write("k,sigma\n")
        for i, sig in enumerate(spectrum.values, start=1):
            f.write(f"{i},{sig:.17g}\n")
