"""Steering vectors, Dirichlet/Fejer kernels, and the landscape function.

The landscape of a subspace W is q_W(t) = 1 - ||W* phi(t)||^2 where phi(t)
is the normalized steering vector.  Derivatives are derived analytically
from this definition (via the coefficient vectors c_l = W* phi^(l)) and are
hard-validated against finite differences in the test suite.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.signal import CZT

from .errors import NumericalInstabilityError
from .signal import TWO_PI, index_set, wrap
from .subspace import Subspace

# Below |sin(t/2)| = 1e-6 the closed Dirichlet form loses accuracy to
# cancellation; switch to the exact finite sum there.
_NEAR_ZERO = 1e-6

# Direct steering-product evaluation is used for grids up to this size;
# larger uniform grids go through the chirp-z fast path.
_CZT_THRESHOLD = 4096

_CZT_CHUNK = 1 << 21


def _dirichlet_sum(m: int, t: np.ndarray, order: int) -> np.ndarray:
    """Exact finite sum (1/m) sum_k (ik)^l e^{ikt} over the symmetric set."""
    k = index_set(m)
    terms = (1j * k) ** order * np.exp(1j * np.outer(np.atleast_1d(t), k))
    return np.real(terms.sum(axis=1)) / m


def dirichlet(m: int, t, order: int = 0):
    """Normalized Dirichlet kernel d_m(t) = sin(mt/2)/(m sin(t/2)) or its
    derivatives of order 1..3.

    The removable singularity at t = 0 (mod 2pi) is resolved by evaluating
    the defining finite sum exactly near those points.
    """
    if order not in (0, 1, 2, 3):
        raise ValueError("order must be in {0, 1, 2, 3}")
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    half = 0.5 * t_arr
    sin_half = np.sin(half)
    near = np.abs(sin_half) < _NEAR_ZERO

    # closed form via the Leibniz recursion on d(t) * u(t) = g(t),
    # u = m sin(t/2), g = sin(mt/2)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = [m * 0.5 ** j * np.sin(half + j * np.pi / 2) for j in range(order + 1)]
        g = [(m / 2.0) ** j * np.sin(m * half + j * np.pi / 2)
             for j in range(order + 1)]
        d = [g[0] / u[0]]
        for ell in range(1, order + 1):
            acc = g[ell]
            for j in range(ell):
                acc = acc - _binom(ell, j) * d[j] * u[ell - j]
            d.append(acc / u[0])
    out = d[order]
    if np.any(near):
        out = np.where(near, 0.0, out)
        out[near] = _dirichlet_sum(m, t_arr[near], order)
    return out[0] if np.isscalar(t) or np.ndim(t) == 0 else out


def _binom(n: int, k: int) -> int:
    from math import comb
    return comb(n, k)


def fejer(m: int, t, order: int = 0):
    """Normalized Fejer kernel f_m = d_m^2 and derivatives of order 1..3."""
    if order == 0:
        d0 = dirichlet(m, t, 0)
        return d0 * d0
    if order == 1:
        return 2.0 * dirichlet(m, t, 0) * dirichlet(m, t, 1)
    if order == 2:
        d0, d1, d2 = (dirichlet(m, t, j) for j in range(3))
        return 2.0 * d1 * d1 + 2.0 * d0 * d2
    if order == 3:
        d0, d1, d2, d3 = (dirichlet(m, t, j) for j in range(4))
        return 6.0 * d1 * d2 + 2.0 * d0 * d3
    raise ValueError("order must be in {0, 1, 2, 3}")


def steering(m: int, t, order: int = 0) -> np.ndarray:
    """Normalized steering vector phi^(l)(t), entries (ik)^l e^{ikt}/sqrt(m).

    Scalar ``t`` gives shape (m,); an array of n points gives (m, n).
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    k = index_set(m)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    phases = np.exp(1j * np.outer(k, t_arr)) / np.sqrt(m)
    if order:
        phases = (1j * k[:, None]) ** order * phases
    return phases[:, 0] if np.ndim(t) == 0 else phases


class LandscapeHandle:
    """Evaluation context for q_W and its first two derivatives.

    The handle is immutable after construction; evaluations at distinct
    points are independent.  Each evaluation costs O(ms).
    """

    def __init__(self, subspace: Subspace):
        self.subspace = subspace
        self.m = subspace.m
        self.s = subspace.s
        self._Wc = subspace.basis.conj().T  # s x m
        self._k = index_set(subspace.m)
        self._sqrt_m = np.sqrt(subspace.m)

    def _coeffs(self, t, max_order: int):
        """Coefficient vectors c_l = W* phi^(l)(t) for l = 0..max_order."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        E = np.exp(1j * np.outer(self._k, t_arr)) / self._sqrt_m
        coeffs = [self._Wc @ E]
        scaled = E
        for _ in range(max_order):
            scaled = (1j * self._k[:, None]) * scaled
            coeffs.append(self._Wc @ scaled)
        return coeffs

    def value(self, t):
        """q(t) = 1 - ||W* phi(t)||^2, in [0, 1]."""
        (c0,) = self._coeffs(t, 0)
        out = 1.0 - np.sum(np.abs(c0) ** 2, axis=0)
        return float(out[0]) if np.ndim(t) == 0 else out

    def grad(self, t):
        """q'(t) = -2 Re <c_0, c_1>."""
        c0, c1 = self._coeffs(t, 1)
        out = -2.0 * np.real(np.sum(np.conj(c0) * c1, axis=0))
        return float(out[0]) if np.ndim(t) == 0 else out

    def second(self, t):
        """q''(t) = -2 ||c_1||^2 - 2 Re <c_0, c_2>."""
        c0, c1, c2 = self._coeffs(t, 2)
        out = -2.0 * np.sum(np.abs(c1) ** 2, axis=0) \
            - 2.0 * np.real(np.sum(np.conj(c0) * c2, axis=0))
        return float(out[0]) if np.ndim(t) == 0 else out

    def values_uniform(self, t0: float, spacing: float, count: int) -> np.ndarray:
        """q on the uniform grid t0 + spacing * (0..count-1).

        Large grids are evaluated with a chunked chirp-z transform per
        subspace column, which agrees with direct evaluation to machine
        precision but costs O((m + B) log(m + B)) per chunk instead of
        O(m s B).
        """
        if count < 1:
            raise ValueError("count must be >= 1")
        if spacing <= 0:
            raise ValueError("spacing must be positive")
        if count <= _CZT_THRESHOLD:
            return self.value(t0 + spacing * np.arange(count))
        out = np.empty(count)
        n_idx = np.arange(self.m)
        w = np.exp(1j * spacing)
        plans: dict[int, CZT] = {}  # one Bluestein plan per chunk length
        for start in range(0, count, _CZT_CHUNK):
            stop = min(start + _CZT_CHUNK, count)
            size = stop - start
            if size not in plans:
                plans[size] = CZT(n=self.m, m=size, w=w, a=1.0 + 0.0j)
            transform = plans[size]
            tb = t0 + spacing * start
            acc = np.zeros(size)
            base = np.exp(1j * n_idx * tb) / self._sqrt_m
            for col in range(self.s):
                x = np.conj(self.subspace.basis[:, col]) * base
                c = transform(x)
                acc += np.abs(c) ** 2
            out[start:stop] = 1.0 - acc
        return out


def locate_minimum(handle: LandscapeHandle, center: float, radius: float,
                   tol: float = 1e-12) -> float:
    """Locate the minimizer of q on [center - radius, center + radius].

    Guarded 1-d minimization followed by a few Newton polish steps; test
    scaffolding for landscape invariants, not pipeline code.
    """
    lo, hi = center - radius, center + radius
    res = minimize_scalar(lambda t: handle.value(t), bounds=(lo, hi),
                          method="bounded",
                          options={"xatol": max(tol / 10, 1e-14)})
    t_star = float(res.x)
    for _ in range(4):
        g = handle.grad(t_star)
        h = handle.second(t_star)
        if not np.isfinite(g) or not np.isfinite(h) or h <= 0:
            break
        step = g / h
        t_next = min(hi, max(lo, t_star - step))
        if abs(t_next - t_star) < tol / 10:
            t_star = t_next
            break
        t_star = t_next
    if not np.isfinite(handle.value(t_star)):
        raise NumericalInstabilityError("minimum location produced non-finite q")
    return wrap(t_star)
