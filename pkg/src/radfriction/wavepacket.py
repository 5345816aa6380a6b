"""Discrete samples of the atom's initial momentum distribution."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import ParameterError

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class MomentumWavepacket:
    """Momentum samples along +x with weights ``|f(p0)|^2 dp``.

    ``p0`` holds the x components only; the motion is fixed along the x axis.
    """

    p0: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        p0 = np.atleast_1d(np.asarray(self.p0, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if p0.ndim != 1 or p0.shape != w.shape or p0.size == 0:
            raise ParameterError("p0 and weights must be equal-length 1-d arrays")
        if np.any(w < 0) or not np.all(np.isfinite(w)) or not np.all(np.isfinite(p0)):
            raise ParameterError("weights must be finite and non-negative")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_vectors(cls, p_vecs, weights) -> "MomentumWavepacket":
        p_vecs = np.atleast_2d(np.asarray(p_vecs, dtype=float))
        if p_vecs.shape[1] != 3:
            raise ParameterError("momentum vectors must have three components")
        if np.any(p_vecs[:, 1:] != 0.0):
            raise ParameterError("initial momenta must lie along the x axis (y = z = 0)")
        return cls(p_vecs[:, 0], weights)

    def __len__(self) -> int:
        return self.p0.size

    @property
    def total_weight(self) -> float:
        return math.fsum(self.weights)

    @property
    def is_normalized(self) -> bool:
        return abs(self.total_weight - 1.0) <= WEIGHT_TOL

    def check_normalized(self) -> "MomentumWavepacket":
        if not self.is_normalized:
            raise ParameterError(
                f"wavepacket weights sum to {self.total_weight!r}, expected 1 within {WEIGHT_TOL}"
            )
        return self

    @property
    def mean_p(self) -> float:
        return math.fsum(self.weights * self.p0)

    @property
    def mean_vector(self) -> np.ndarray:
        return np.array([self.mean_p, 0.0, 0.0])

    @property
    def vectors(self) -> np.ndarray:
        out = np.zeros((self.p0.size, 3))
        out[:, 0] = self.p0
        return out


def gaussian_wavepacket(mean_p: float, rel_width: float = 0.1, n_samples: int = 7) -> MomentumWavepacket:
    """Gauss-Hermite samples of a Gaussian ``|f|^2`` with standard deviation
    ``rel_width * |mean_p|``.

    A zero width (or zero mean) collapses to a single sample.
    """
    if n_samples < 1:
        raise ParameterError("n_samples must be >= 1")
    if rel_width < 0:
        raise ParameterError("rel_width must be non-negative")
    sigma = rel_width * abs(mean_p)
    if sigma == 0.0 or n_samples == 1:
        return MomentumWavepacket(np.array([float(mean_p)]), np.array([1.0]))
    x, w = np.polynomial.hermite.hermgauss(n_samples)
    w = w / math.fsum(w)
    return MomentumWavepacket(mean_p + math.sqrt(2.0) * sigma * x, w)


def single_momentum(p0: float) -> MomentumWavepacket:
    return MomentumWavepacket(np.array([float(p0)]), np.array([1.0]))
