"""Dephasing channels induced by a random common phase.

Every run applies ``U(theta) = exp(-i theta H)`` for a random ``theta``, so the
averaged channel is a Schur product with the coherence mask
``M_jk = E[exp(-i theta (E_j - E_k))]``. ``M`` is a Gram matrix, hence positive
semidefinite, and its eigendecomposition gives diagonal Kraus operators.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .codes import DephasingGenerator
from .quantum import PSD_TOL, QuantumChannel


@dataclass(frozen=True)
class GaussianNoise:
    """``theta ~ N(0, sigma)``."""

    sigma: float

    def __post_init__(self) -> None:
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")

    def deficit(self, energies: np.ndarray) -> np.ndarray:
        """``1 - M`` evaluated without cancellation."""
        gaps = np.subtract.outer(energies, energies)
        return -np.expm1(-0.5 * self.sigma**2 * gaps**2)

    def mask(self, energies: np.ndarray) -> np.ndarray:
        gaps = np.subtract.outer(energies, energies)
        return np.exp(-0.5 * self.sigma**2 * gaps**2)

    def describe(self) -> dict:
        return {"model": "gaussian", "sigma": self.sigma}


@dataclass(frozen=True)
class TelegraphNoise:
    """Phase accumulated under a symmetric two-state fluctuator.

    The fluctuator switches between levels ``lambda_plus`` and
    ``lambda_minus`` at ``jump_rate`` in each direction, starting from its
    stationary (equal) populations. The defaults are artifact choices; the
    jump statistics of a real fluctuator have to be supplied by the user.
    """

    lambda_plus: float = 1.0
    lambda_minus: float = -1.0
    jump_rate: float = 1.0
    duration: float = 1.0
    samples: int = 10_000
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.jump_rate > 0:
            raise ValueError(f"jump_rate must be positive, got {self.jump_rate}")
        if not self.duration > 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if self.samples < 1:
            raise ValueError("samples must be at least 1")

    @property
    def bounds(self) -> tuple[float, float]:
        lo, hi = sorted((self.lambda_plus, self.lambda_minus))
        return self.duration * lo, self.duration * hi

    def sample(self, rng: np.random.Generator | None = None, size: int | None = None) -> np.ndarray:
        rng = rng if rng is not None else np.random.default_rng(self.seed)
        return sample_telegraph_phase(self, rng, self.samples if size is None else size)

    @functools.cached_property
    def thetas(self) -> np.ndarray:
        """The model's own seeded phase samples."""
        return self.sample()

    def deficit(self, energies: np.ndarray) -> np.ndarray:
        return empirical_deficit(energies, self.thetas)

    def mask(self, energies: np.ndarray) -> np.ndarray:
        return 1 - self.deficit(energies)

    def describe(self) -> dict:
        return {
            "model": "telegraph",
            "lambda_plus": self.lambda_plus,
            "lambda_minus": self.lambda_minus,
            "jump_rate": self.jump_rate,
            "duration": self.duration,
            "samples": self.samples,
            "seed": self.seed,
        }


NoiseModel = Union[GaussianNoise, TelegraphNoise]


def as_noise(noise: NoiseModel | float) -> NoiseModel:
    if isinstance(noise, (GaussianNoise, TelegraphNoise)):
        return noise
    return GaussianNoise(float(noise))


def channel_from_mask(mask: np.ndarray, tol: float = 1e-15) -> QuantumChannel:
    """Diagonal Kraus operators ``sqrt(l_k) diag(u_k)`` of a PSD coherence mask."""
    mask = np.asarray(mask, dtype=complex)
    vals, vecs = np.linalg.eigh((mask + mask.conj().T) / 2)
    if vals.min() < -PSD_TOL:
        raise ValueError(f"coherence mask is not positive semidefinite (min eigenvalue {vals.min():.3e})")
    keep = vals > tol * max(vals.max(), 1.0)
    ops = tuple(np.diag(np.sqrt(v) * vecs[:, k]) for k, v in zip(np.flatnonzero(keep), vals[keep]))
    return QuantumChannel(ops)


def gaussian_dephasing_channel(gen: DephasingGenerator, sigma: float) -> QuantumChannel:
    """``rho_jk -> exp(-sigma^2 (E_j - E_k)^2 / 2) rho_jk``."""
    return channel_from_mask(GaussianNoise(sigma).mask(gen.diagonal))


def sample_telegraph_phase(model: TelegraphNoise, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """``theta = int_0^t lambda(s) ds`` for a symmetric random telegraph process.

    Holding times are exponential with mean ``1 / jump_rate``; the initial
    level is drawn from the stationary distribution.
    """
    levels = np.array([model.lambda_plus, model.lambda_minus])
    state = rng.integers(0, 2, size=size)
    elapsed = np.zeros(size)
    theta = np.zeros(size)
    active = np.ones(size, dtype=bool)
    while active.any():
        idx = np.flatnonzero(active)
        hold = rng.exponential(1.0 / model.jump_rate, size=idx.size)
        step = np.minimum(hold, model.duration - elapsed[idx])
        theta[idx] += levels[state[idx]] * step
        elapsed[idx] += step
        state[idx] ^= 1
        active[idx] = elapsed[idx] < model.duration
    return theta


def _characteristic(energies: np.ndarray, thetas: Sequence[float], deficit: bool) -> np.ndarray:
    thetas = np.asarray(thetas, dtype=float)
    if thetas.size == 0:
        raise ValueError("need at least one phase sample")
    gaps = np.subtract.outer(energies, energies)
    unique, inverse = np.unique(gaps, return_inverse=True)
    phase = -1j * thetas[:, None] * unique[None, :]
    # 1 - e^{-ix} as -expm1(-ix) keeps small-angle precision
    values = np.mean(-np.expm1(phase) if deficit else np.exp(phase), axis=0)
    return values[inverse].reshape(gaps.shape)


def empirical_deficit(energies: np.ndarray, thetas: Sequence[float]) -> np.ndarray:
    """``1 - mean_s exp(-i theta_s (E_j - E_k))``."""
    return _characteristic(np.asarray(energies, dtype=float), thetas, deficit=True)


def empirical_mask(energies: np.ndarray, thetas: Sequence[float]) -> np.ndarray:
    """``mean_s exp(-i theta_s (E_j - E_k))``."""
    return _characteristic(np.asarray(energies, dtype=float), thetas, deficit=False)


def empirical_dephasing_channel(gen: DephasingGenerator, thetas: Sequence[float]) -> QuantumChannel:
    """Sample average of the unitary channels ``U(theta_s)``."""
    return channel_from_mask(empirical_mask(gen.diagonal, thetas))


def truncated_expansion_channel(gen: DephasingGenerator, sigma: float, order: int = 2):
    """Gaussian average of conjugation by a Taylor-truncated ``U(theta)``.

    Returns a callable on density matrices. With ``order=1`` the truncation is
    ``I - i theta H``; with ``order=2`` the ``-theta^2 H^2 / 2`` term is kept.
    Only the first and second moments of ``theta`` enter up to ``O(sigma^4)``.
    """
    h = gen.matrix()
    h2 = h @ h

    def apply(rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        out = rho + sigma**2 * (h @ rho @ h)
        if order >= 2:
            out = out - 0.5 * sigma**2 * (h2 @ rho + rho @ h2)
        return out

    return apply
