"""Reference strategies: a bare qubit and phase-flip repetition codes."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .noise import GaussianNoise, NoiseModel, as_noise, empirical_mask
from .quantum import QuantumChannel, StateVector, Z, kron

SUPPORTED_REPETITION = (3, 5)


def _plus_minus(n: int) -> tuple[np.ndarray, np.ndarray]:
    plus = np.full(2**n, 2 ** (-n / 2), dtype=complex)
    signs = np.array([(-1) ** bin(j).count("1") for j in range(2**n)])
    return plus, plus * signs


def z_string(n: int, qubits) -> np.ndarray:
    """``Z`` on each listed qubit (0-based, qubit 0 most significant)."""
    return kron(*(Z if k in set(qubits) else np.eye(2) for k in range(n)))


@dataclass(frozen=True, eq=False)
class RepetitionCode:
    """``|0_L> = |+>^n``, ``|1_L> = |->^n`` with majority-vote decoding.

    ``corrections`` lists the minimal-weight ``Z`` patterns, one per syndrome;
    syndrome ``S`` covers ``span{Z_S |0_L>, Z_S |1_L>}``.
    """

    n: int

    def __post_init__(self) -> None:
        if self.n % 2 == 0 or self.n < 1:
            raise ValueError(f"repetition code needs odd n, got {self.n}")
        if self.n > max(SUPPORTED_REPETITION):
            raise ValueError(f"repetition codes beyond n={max(SUPPORTED_REPETITION)} are not supported")

    @property
    def zero_logical(self) -> StateVector:
        return StateVector(_plus_minus(self.n)[0])

    @property
    def one_logical(self) -> StateVector:
        return StateVector(_plus_minus(self.n)[1])

    @property
    def encoder(self) -> np.ndarray:
        return np.column_stack(_plus_minus(self.n))

    @property
    def corrections(self) -> list[tuple[int, ...]]:
        t = self.n // 2
        return [s for w in range(t + 1) for s in itertools.combinations(range(self.n), w)]

    @property
    def subspace_bases(self) -> tuple[np.ndarray, ...]:
        w0 = self.encoder
        return tuple(z_string(self.n, s) @ w0 for s in self.corrections)

    def syndrome_projectors(self) -> list[np.ndarray]:
        return [w @ w.conj().T for w in self.subspace_bases]


def repetition_recovery(n: int) -> QuantumChannel:
    """Kraus set ``{C_s P_s}`` with ``C_s`` the majority-vote ``Z`` correction."""
    code = RepetitionCode(n)
    ops = []
    for s, proj in zip(code.corrections, code.syndrome_projectors()):
        ops.append(z_string(n, s) @ proj)
    return QuantumChannel(tuple(ops))


def physical_qubit_p(g: float, noise: NoiseModel | float) -> float:
    """Flip probability of the effective single-qubit phase channel.

    For Gaussian phases this is ``(1 - exp(-2 sigma^2 g^2)) / 2``; otherwise the
    coherence factor is estimated from the model's phase samples.
    """
    noise = as_noise(noise)
    if isinstance(noise, GaussianNoise):
        return float(-np.expm1(-2 * noise.sigma**2 * g**2) / 2)
    energies = np.array([g, -g], dtype=float)
    coherence = empirical_mask(energies, noise.thetas)[0, 1]
    return float((1 - coherence.real) / 2)
