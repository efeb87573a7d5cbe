"""Noise models: diagonal complex Gaussian draws, deterministic vectors,
l_p norms, and the Toeplitz operator-norm envelope check.

Draws are counter-based (Philox keyed by ``(seed, stream)``), so any trial
is reproducible in isolation without replaying earlier draws.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .signal import SampleVector, load_samples
from .subspace import operator_norm, toeplitz


@dataclass(frozen=True)
class GaussianDiagonal:
    """Independent complex Gaussian entries with variance sigma^2 (1+|k|)^{2r}.

    Real and imaginary parts are independent, each carrying half the
    variance.  ``r`` tilts the spectrum: negative r damps high harmonics,
    positive r amplifies them.
    """

    sigma: float
    r: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")


@dataclass(frozen=True)
class DeterministicNoise:
    """A fixed noise vector of length 2m-1 (index range -(m-1)..m-1)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=complex))
        if v.ndim != 1 or len(v) % 2 == 0:
            raise ValueError("noise vector must have odd length 2m-1")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


NoiseModel = Union[GaussianDiagonal, DeterministicNoise]


def variance_profile(model: GaussianDiagonal, m: int) -> np.ndarray:
    """Per-entry variances sigma^2 (1+|k|)^{2r} for k = -(m-1)..m-1."""
    k = np.arange(-(m - 1), m)
    return model.sigma ** 2 * (1.0 + np.abs(k)) ** (2.0 * model.r)


def draw(model: NoiseModel, m: int, seed: int, stream: int = 0) -> SampleVector:
    """One noise realization of length 2m-1.

    Parameters
    ----------
    model : NoiseModel
        Gaussian model (seeded draw) or deterministic vector (seed ignored,
        but the length must match m).
    m : int
        Bandwidth parameter; the vector covers indices -(m-1)..m-1.
    seed, stream : int
        Philox key; distinct (seed, stream) pairs give independent draws.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if isinstance(model, DeterministicNoise):
        if len(model.values) != 2 * m - 1:
            raise ValueError(
                f"deterministic noise has length {len(model.values)}, "
                f"expected {2 * m - 1}"
            )
        return SampleVector(m=m, values=model.values)
    mask = (1 << 64) - 1
    rng = np.random.Generator(np.random.Philox(key=[seed & mask, stream & mask]))
    scale = np.sqrt(variance_profile(model, m) / 2.0)
    z = rng.standard_normal((2, 2 * m - 1))
    return SampleVector(m=m, values=scale * (z[0] + 1j * z[1]))


def lp_norm(eta, p: float) -> float:
    """l_p norm of a noise vector; p must be >= 1 or inf."""
    v = eta.values if isinstance(eta, SampleVector) else np.asarray(eta)
    if p != np.inf and p < 1:
        raise ValueError("p must be at least 1 (or inf)")
    if p == np.inf:
        return float(np.max(np.abs(v))) if len(v) else 0.0
    return float(np.sum(np.abs(v) ** p) ** (1.0 / p))


class NormCheck(NamedTuple):
    lhs: float
    rhs: float
    passed: bool


def toeplitz_norm_check(eta: SampleVector, p: float) -> NormCheck:
    """Verify ||T(eta)||_2 <= 2 m^{1-1/p} ||eta||_p for one realization."""
    lhs = operator_norm(toeplitz(eta))
    exponent = 1.0 if p == np.inf else 1.0 - 1.0 / p
    rhs = 2.0 * eta.m ** exponent * lp_norm(eta, p)
    return NormCheck(lhs=lhs, rhs=rhs, passed=bool(lhs <= rhs))


def trace_sigma(model: GaussianDiagonal, m: int) -> float:
    """Trace of the covariance, sum_k sigma^2 (1+|k|)^{2r}."""
    if not isinstance(model, GaussianDiagonal):
        raise ValueError("trace is defined for the Gaussian model only")
    return float(np.sum(variance_profile(model, m)))


def tail_bound(model: GaussianDiagonal, m: int, t: float) -> float:
    """Upper bound P{||T(eta)||_2 >= t} <= 2m exp(-t^2 / (2 tr Sigma))."""
    tr = trace_sigma(model, m)
    if tr == 0:
        return 0.0 if t > 0 else 1.0
    return float(min(1.0, 2 * m * np.exp(-(t ** 2) / (2.0 * tr))))


def tail_level(model: GaussianDiagonal, m: int, prob: float) -> float:
    """The level t at which the tail bound equals ``prob``."""
    if not 0 < prob < 1:
        raise ValueError("prob must lie in (0, 1)")
    tr = trace_sigma(model, m)
    return float(np.sqrt(2.0 * tr * np.log(2.0 * m / prob)))


def noise_model_from_json(blob, base_dir: str | None = None) -> NoiseModel:
    """Parse a noise-model description.

    Accepts a dict or a JSON string with ``kind`` equal to
    ``"gaussian-diag"`` (fields sigma, r) or ``"deterministic"`` (field
    ``file`` pointing at a samples CSV, resolved against ``base_dir``).
    """
    if isinstance(blob, str):
        blob = json.loads(blob)
    if not isinstance(blob, dict) or "kind" not in blob:
        raise ValueError("noise model must be an object with a 'kind' field")
    kind = blob["kind"]
    if kind == "gaussian-diag":
        return GaussianDiagonal(sigma=float(blob["sigma"]),
                                r=float(blob.get("r", 0.0)))
    if kind == "deterministic":
        path = blob["file"]
        if base_dir is not None:
            import os
            path = os.path.join(base_dir, path)
        return DeterministicNoise(values=load_samples(path).values)
    raise ValueError(f"unknown noise model kind: {kind!r}")


def noise_model_to_json(model: NoiseModel) -> dict:
    if isinstance(model, GaussianDiagonal):
        return {"kind": "gaussian-diag", "sigma": model.sigma, "r": model.r}
    raise ValueError("only the Gaussian model serializes to JSON")
