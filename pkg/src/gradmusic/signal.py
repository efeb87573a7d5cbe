"""Signal model on the torus.

Frequencies live on T = R/2piZ with canonical representative in [0, 2pi);
all comparisons go through the wrap-aware distance, never raw subtraction.
Samples of h(xi) = sum_j a_j e^{i x_j xi} are taken at the 2m-1 integers
k = -m+1, ..., m-1.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import SeparationUndefinedError

TWO_PI = 2.0 * np.pi


def wrap(t):
    """Canonical torus representative in [0, 2pi), elementwise."""
    return np.mod(t, TWO_PI)


def torus_distance(u, v):
    """Wrap-around distance min_n |u - v + 2pi n|, elementwise, in [0, pi]."""
    return np.abs(np.mod(np.asarray(u, dtype=float) - v + np.pi, TWO_PI) - np.pi)


def index_set(n: int):
    """The symmetric index set {-(n-1)/2, ..., (n-1)/2} with unit steps.

    For even ``n`` the entries are half-integers.
    """
    return np.arange(n, dtype=float) - (n - 1) / 2.0


def fourier_matrix(n: int, freqs) -> np.ndarray:
    """n x s matrix with entries e^{i k x_j}, k over the symmetric index set.

    Frequencies are canonicalized first so the matrix is well defined even
    for even ``n`` (half-integer exponents are sensitive to 2pi shifts).
    """
    x = wrap(np.atleast_1d(np.asarray(freqs, dtype=float)))
    return np.exp(1j * np.outer(index_set(n), x))


@dataclass(frozen=True)
class SignalParams:
    """Ground-truth frequency/amplitude pairs (x, a).

    Frequencies are stored canonicalized to [0, 2pi) and must be pairwise
    distinct; amplitudes are nonzero complex numbers.
    """

    frequencies: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        x = wrap(np.atleast_1d(np.asarray(self.frequencies, dtype=float)))
        a = np.atleast_1d(np.asarray(self.amplitudes, dtype=complex))
        if x.ndim != 1 or a.ndim != 1 or len(x) != len(a):
            raise ValueError("frequencies and amplitudes must be 1-d of equal length")
        if len(x) == 0:
            raise ValueError("at least one frequency/amplitude pair required")
        if np.any(np.abs(a) == 0.0):
            raise ValueError("amplitudes must be nonzero")
        if len(x) >= 2:
            d = torus_distance(x[:, None], x[None, :])
            np.fill_diagonal(d, np.inf)
            if d.min() == 0.0:
                raise ValueError("frequencies must be pairwise distinct")
        x.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "frequencies", x)
        object.__setattr__(self, "amplitudes", a)

    @property
    def s(self) -> int:
        return len(self.frequencies)

    @property
    def a_min(self) -> float:
        return float(np.abs(self.amplitudes).min())

    @property
    def a_max(self) -> float:
        return float(np.abs(self.amplitudes).max())

    @property
    def pairs(self):
        return list(zip(self.frequencies.tolist(), self.amplitudes.tolist()))


@dataclass(frozen=True)
class SampleVector:
    """2m-1 complex samples indexed k = -m+1, ..., m-1.

    Array position ``p`` holds the sample at ``k = p - (m-1)``; index 0 maps
    to position m-1.  This offset convention is defined here once and all
    other modules go through :meth:`at` or :meth:`k_range`.
    """

    m: int
    values: np.ndarray

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be a positive integer")
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 1 or len(v) != 2 * self.m - 1:
            raise ValueError(f"values must have length 2m-1 = {2 * self.m - 1}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def at(self, k: int) -> complex:
        """Sample at signed index k, |k| <= m-1."""
        if not -self.m < k < self.m:
            raise IndexError(f"index {k} outside [-(m-1), m-1]")
        return complex(self.values[k + self.m - 1])

    def k_range(self) -> np.ndarray:
        return np.arange(-self.m + 1, self.m)


def min_separation(freqs) -> float:
    """Minimum pairwise wrap-around distance of a frequency set."""
    x = wrap(np.atleast_1d(np.asarray(freqs, dtype=float)))
    if len(x) < 2:
        raise SeparationUndefinedError(
            "minimum separation needs at least two frequencies"
        )
    xs = np.sort(x)
    gaps = np.diff(xs)
    wrap_gap = TWO_PI - (xs[-1] - xs[0])
    return float(min(gaps.min(), wrap_gap))


def synthesize(params: SignalParams, m: int) -> SampleVector:
    """Noise-free samples y_k = sum_j a_j e^{i x_j k} for k = -m+1..m-1."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    k = np.arange(-m + 1, m, dtype=float)
    values = np.exp(1j * np.outer(k, params.frequencies)) @ params.amplitudes
    return SampleVector(m=m, values=values)


def matching_distance(x, xhat):
    """Optimal bottleneck matching between two equal-size frequency sets.

    Returns ``(perm, max_error)`` where ``perm[j]`` is the index in ``xhat``
    matched to ``x[j]`` and ``max_error`` is the largest wrap-around distance
    under that matching.  The permutation also induces the amplitude pairing.

    Uses circular-sorted alignment: an optimal bottleneck matching on a
    circle may be taken non-crossing, so it suffices to scan the s cyclic
    offsets between the two sorted orders.
    """
    x = wrap(np.atleast_1d(np.asarray(x, dtype=float)))
    xh = wrap(np.atleast_1d(np.asarray(xhat, dtype=float)))
    if len(x) != len(xh):
        raise ValueError("matching distance needs equal-cardinality sets")
    s = len(x)
    order_x = np.argsort(x, kind="stable")
    order_h = np.argsort(xh, kind="stable")
    xs = x[order_x]
    hs = xh[order_h]
    base = np.arange(s)
    best_err = np.inf
    best_shift = 0
    for c in range(s):
        err = torus_distance(xs, hs[(base + c) % s]).max()
        if err < best_err:
            best_err = err
            best_shift = c
    perm = np.empty(s, dtype=int)
    perm[order_x] = order_h[(base + best_shift) % s]
    return perm, float(best_err)


def reflect_extend(samples) -> SampleVector:
    """Conjugate-symmetric extension of samples at k = 0..2m-1.

    Under the real-amplitudes model the negative-index samples satisfy
    y_{-k} = conj(y_k), so the one-sided record of length 2m extends to the
    full symmetric record indexed -2m+1..2m-1 (a SampleVector with
    half-length parameter 2m).
    """
    v = np.atleast_1d(np.asarray(samples, dtype=complex))
    if v.ndim != 1 or len(v) % 2 != 0 or len(v) == 0:
        raise ValueError("input must be a nonempty even-length vector (k = 0..2m-1)")
    m2 = len(v)  # this is 2m, the half-length parameter of the output
    out = np.concatenate([np.conj(v[:0:-1]), v])
    return SampleVector(m=m2, values=out)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def save_samples(sv: SampleVector, path) -> None:
    """Write samples as CSV with header ``k,re,im``, one row per index."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["k", "re", "im"])
        for k, val in zip(sv.k_range(), sv.values):
            w.writerow([int(k), f"{val.real:.17g}", f"{val.imag:.17g}"])


def load_samples(path) -> SampleVector:
    """Read a ``k,re,im`` CSV written by :func:`save_samples`."""
    rows = []
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        if [c.strip().lower() for c in header[:3]] != ["k", "re", "im"]:
            raise ValueError(f"expected header 'k,re,im', got {header!r}")
        for row in r:
            if not row:
                continue
            rows.append((int(row[0]), float(row[1]), float(row[2])))
    if len(rows) % 2 != 1:
        raise ValueError("sample file must hold 2m-1 rows")
    m = (len(rows) + 1) // 2
    values = np.zeros(2 * m - 1, dtype=complex)
    seen = set()
    for k, re, im in rows:
        if not -m < k < m or k in seen:
            raise ValueError(f"bad or duplicate sample index {k}")
        seen.add(k)
        values[k + m - 1] = re + 1j * im
    return SampleVector(m=m, values=values)


def save_params(params: SignalParams, path) -> None:
    """Write ground-truth parameters as JSON (frequencies in radians)."""
    blob = {
        "frequencies": [float(f"{v:.17g}") for v in params.frequencies],
        "amplitudes": [
            [float(f"{a.real:.17g}"), float(f"{a.imag:.17g}")]
            for a in params.amplitudes
        ],
    }
    with open(path, "w") as f:
        json.dump(blob, f, indent=2)
        f.write("\n")


def load_params(path) -> SignalParams:
    with open(path) as f:
        blob = json.load(f)
    amps = [complex(re, im) for re, im in blob["amplitudes"]]
    return SignalParams(
        frequencies=np.asarray(blob["frequencies"], dtype=float),
        amplitudes=np.asarray(amps, dtype=complex),
    )
