"""Dense states, Kraus channels and channel metrics for small registers.

Everything here works on plain complex ``numpy`` arrays of dimension at most
``MAX_DIM``. Kraus representations are gauge dependent, so channel equality is
always judged on the superoperator.

Superoperators use row-major vectorisation: ``vec(A @ rho @ B) =
kron(A, B.T) @ vec(rho)``, hence ``S = sum_i kron(K_i, K_i.conj())``.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_DIM = 64

NORM_TOL = 1e-12
COMPLETENESS_TOL = 1e-10
PSD_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULIS = (I2, X, Y, Z)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


def _as_matrix(obj) -> np.ndarray:
    return np.asarray(getattr(obj, "matrix", obj), dtype=complex)


def kron(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of any number of operators, qubit 1 leftmost."""
    return functools.reduce(np.kron, ops, np.eye(1, dtype=complex))


def ket(bits: str) -> np.ndarray:
    """Computational basis vector from a bit string such as ``"01"``."""
    vec = np.zeros(2 ** len(bits), dtype=complex)
    vec[int(bits, 2)] = 1.0
    return vec


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state on ``n`` qubits."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        dim = amps.size
        if dim < 2 or dim & (dim - 1) or dim > MAX_DIM:
            raise ValueError(f"state dimension {dim} is not a power of two in [2, {MAX_DIM}]")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm {norm!r}); use StateVector.normalized")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @classmethod
    def normalized(cls, amplitudes: Sequence[complex] | np.ndarray) -> StateVector:
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amps / norm)

    @property
    def n(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density_matrix(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def inner(self, other: StateVector | np.ndarray) -> complex:
        """``<self|other>``."""
        other = np.asarray(getattr(other, "amplitudes", other), dtype=complex)
        return complex(np.vdot(self.amplitudes, other))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite operator."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        rho = np.asarray(self.matrix, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {rho.shape}")
        if rho.shape[0] > MAX_DIM:
            raise ValueError(f"dimension {rho.shape[0]} exceeds {MAX_DIM}")
        if np.max(np.abs(rho - rho.conj().T)) > NORM_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > NORM_TOL:
            raise ValueError(f"density matrix trace is {np.trace(rho).real!r}, expected 1")
        if np.linalg.eigvalsh(rho).min() < -PSD_TOL:
            raise ValueError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", _frozen(rho))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def fidelity_with(self, psi: StateVector | np.ndarray) -> float:
        """``<psi|rho|psi>`` for a pure reference state."""
        vec = np.asarray(getattr(psi, "amplitudes", psi), dtype=complex)
        return float(np.real(vec.conj() @ self.matrix @ vec))


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """Completely positive map in Kraus form.

    Trace preservation is enforced unless ``trace_preserving=False`` is passed,
    which is reserved for decoded logical maps where leakage out of the
    codespace is counted as loss.
    """

    kraus_ops: tuple[np.ndarray, ...]
    trace_preserving: bool = True
    _superop: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        ops = tuple(_frozen(np.atleast_2d(k)) for k in self.kraus_ops)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if shape[0] != shape[1] or shape[0] > MAX_DIM:
            raise ValueError(f"Kraus operators must be square with dimension <= {MAX_DIM}")
        if any(k.shape != shape for k in ops):
            raise ValueError("Kraus operators have inconsistent shapes")
        object.__setattr__(self, "kraus_ops", ops)
        if self.trace_preserving:
            gap = np.max(np.abs(self.completeness() - np.eye(shape[0])))
            if gap > COMPLETENESS_TOL:
                raise ValueError(f"Kraus set is not trace preserving (deviation {gap:.3e})")

    @classmethod
    def unitary(cls, u: np.ndarray) -> QuantumChannel:
        return cls((np.asarray(u, dtype=complex),))

    @classmethod
    def identity(cls, dim: int) -> QuantumChannel:
        return cls((np.eye(dim, dtype=complex),))

    @classmethod
    def from_superoperator(cls, superop: np.ndarray, tol: float = 1e-12) -> QuantumChannel:
        """Kraus decomposition of a superoperator via its Choi matrix."""
        superop = np.asarray(superop, dtype=complex)
        d = int(round(np.sqrt(superop.shape[0])))
        # Choi[(i,k),(j,l)] = S[(i,j),(k,l)]
        choi = superop.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)
        vals, vecs = np.linalg.eigh((choi + choi.conj().T) / 2)
        ops = [
            np.sqrt(val) * vecs[:, i].reshape(d, d)
            for i, val in enumerate(vals)
            if val > tol * max(1.0, vals.max())
        ]
        return cls(tuple(ops))

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    def completeness(self) -> np.ndarray:
        return sum(k.conj().T @ k for k in self.kraus_ops)

    @property
    def superoperator(self) -> np.ndarray:
        if self._superop is None:
            superop = sum(np.kron(k, k.conj()) for k in self.kraus_ops)
            superop.setflags(write=False)
            object.__setattr__(self, "_superop", superop)
        return self._superop

    def __call__(self, rho):
        return apply_channel(self, rho)


def apply_channel(channel: QuantumChannel, rho: DensityMatrix | np.ndarray) -> DensityMatrix:
    """Return ``sum_i K_i rho K_i^dagger``.

    Trace-decreasing channels return the bare output matrix instead of a
    ``DensityMatrix``.
    """
    mat = _as_matrix(rho)
    if mat.shape != (channel.dim, channel.dim):
        raise ValueError(f"channel dimension {channel.dim} does not match state shape {mat.shape}")
    out = sum(k @ mat @ k.conj().T for k in channel.kraus_ops)
    if not channel.trace_preserving:
        return out
    return DensityMatrix((out + out.conj().T) / 2)


def compose(a: QuantumChannel, b: QuantumChannel) -> QuantumChannel:
    """Channel that applies ``b`` first and then ``a``."""
    if a.dim != b.dim:
        raise ValueError(f"cannot compose channels of dimension {a.dim} and {b.dim}")
    ops = tuple(ka @ kb for ka, kb in itertools.product(a.kraus_ops, b.kraus_ops))
    return QuantumChannel(ops, trace_preserving=a.trace_preserving and b.trace_preserving)


def entanglement_fidelity(channel: QuantumChannel) -> float:
    """``F_e = sum_i |tr(K_i) / d|^2`` for a single-qubit channel."""
    if channel.dim != 2:
        raise ValueError(f"entanglement fidelity is defined here for qubit channels, got dim {channel.dim}")
    return float(sum(abs(np.trace(k) / 2) ** 2 for k in channel.kraus_ops))


def average_gate_fidelity(channel: QuantumChannel) -> float:
    d = channel.dim
    fe = float(sum(abs(np.trace(k) / d) ** 2 for k in channel.kraus_ops))
    return (d * fe + 1) / (d + 1)


def superoperator_distance(a: QuantumChannel, b: QuantumChannel) -> float:
    """Frobenius norm of the difference of the two superoperators."""
    if a.dim != b.dim:
        raise ValueError(f"channel dimensions differ: {a.dim} vs {b.dim}")
    return float(np.linalg.norm(a.superoperator - b.superoperator))


def pauli_basis(k: int) -> list[np.ndarray]:
    """Unnormalized ``k``-qubit Pauli strings in lexicographic I, X, Y, Z order."""
    return [kron(*ops) for ops in itertools.product(PAULIS, repeat=k)]


@dataclass(frozen=True, eq=False)
class PauliTransferMatrix:
    """``R_ij = tr(P_i E(P_j)) / 2^k`` in the normalized Pauli basis."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=float)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_channel(cls, channel: QuantumChannel) -> PauliTransferMatrix:
        return cls(_ptm_of(channel.kraus_ops, channel.dim))

    @property
    def max_offdiagonal(self) -> float:
        off = self.entries - np.diag(np.diag(self.entries))
        return float(np.max(np.abs(off)))


def _ptm_of(kraus_ops: Iterable[np.ndarray], dim: int) -> np.ndarray:
    k = dim.bit_length() - 1
    basis = pauli_basis(k)
    ops = list(kraus_ops)
    ptm = np.empty((len(basis), len(basis)))
    for j, pj in enumerate(basis):
        image = sum(op @ pj @ op.conj().T for op in ops)
        for i, pi in enumerate(basis):
            ptm[i, j] = np.real(np.trace(pi @ image)) / dim
    return ptm


def ptm_from_map(linear_map, dim: int = 2) -> np.ndarray:
    """PTM of an arbitrary linear map given as a Python callable on matrices."""
    k = dim.bit_length() - 1
    basis = pauli_basis(k)
    images = [linear_map(p) for p in basis]
    return np.array(
        [[np.real(np.trace(pi @ img)) / dim for img in images] for pi in basis]
    )


AXIS_STATES = tuple(
    StateVector.normalized(v)
    for v in ([1, 0], [0, 1], [1, 1], [1, -1], [1, 1j], [1, -1j])
)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(_as_matrix(a) - _as_matrix(b)))))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(dim: int, rng: np.random.Generator) -> StateVector:
    return StateVector.normalized(rng.standard_normal(dim) + 1j * rng.standard_normal(dim))


def remix_kraus(channel: QuantumChannel, unitary: np.ndarray) -> QuantumChannel:
    """Equivalent Kraus set ``L_i = sum_j u_ij K_j``."""
    ops = np.array(channel.kraus_ops)
    mixed = np.tensordot(np.asarray(unitary), ops, axes=(1, 0))
    return QuantumChannel(tuple(mixed), trace_preserving=channel.trace_preserving)


def phase_flip_channel(p: float) -> QuantumChannel:
    return QuantumChannel((np.sqrt(1 - p) * I2, np.sqrt(p) * Z))


def depolarizing_channel(p: float) -> QuantumChannel:
    """Equal X, Y and Z weights of ``p / 3``."""
    return QuantumChannel((np.sqrt(1 - p) * I2, *(np.sqrt(p / 3) * P for P in (X, Y, Z))))


def pauli_channel_diamond_distance(p: float) -> float | None:
    """Diamond distance to the identity of a single-Pauli flip channel.

    Only valid for ``p <= 1/2``; ``None`` otherwise.
    """
    return 2 * p if 0 <= p <= 0.5 else None
