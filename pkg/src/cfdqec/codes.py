"""Hardware-efficient codes for dephasing by a common fluctuator.

Given couplings ``g`` the register dephases under ``U(theta) = exp(-i theta H)``
with the diagonal generator ``H = sum_k g_k Z_k``. The codes built here satisfy
the Knill-Laflamme conditions for the error span ``{I, H, ..., H^q}`` with
``q = 2**(n-1) - 1``, which is the largest order ``n`` qubits can support.

Basis states are indexed with qubit 1 as the most significant bit, and
``Z|0> = |0>``, ``Z|1> = -|1>``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .quantum import QuantumChannel, StateVector, random_state

NULL_EIGENVALUE_TOL = 1e-9
PINV_RCOND = 1e-12
SINGULAR_BLOCK_TOL = 1e-8
MAX_QUBITS = 6


@dataclass(frozen=True, eq=False)
class CouplingVector:
    """Qubit-fluctuator couplings ``g_1 ... g_n``."""

    g: np.ndarray

    def __post_init__(self) -> None:
        g = np.array(self.g, dtype=float).ravel()
        if g.size < 1:
            raise ValueError("need at least one coupling")
        if not np.all(np.isfinite(g)):
            raise ValueError(f"couplings must be finite, got {g}")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @property
    def n(self) -> int:
        return self.g.size

    @property
    def q(self) -> int:
        return 2 ** (self.n - 1) - 1

    def __iter__(self):
        return iter(self.g)


def _couplings(g) -> CouplingVector:
    return g if isinstance(g, CouplingVector) else CouplingVector(g)


def order_for(n: int) -> int:
    """Correctable order ``q`` saturating ``n = ceil(1 + log2(q + 1))``."""
    return 2 ** (n - 1) - 1


def qubits_for_order(q: int) -> int:
    """Smallest register correcting ``{I, H, ..., H^q}``."""
    return math.ceil(1 + math.log2(q + 1))


@dataclass(frozen=True, eq=False)
class DephasingGenerator:
    """Diagonal of ``H = sum_k g_k Z_k`` in the computational basis."""

    diagonal: np.ndarray
    couplings: CouplingVector | None = None

    def __post_init__(self) -> None:
        diag = np.array(self.diagonal, dtype=float)
        diag.setflags(write=False)
        object.__setattr__(self, "diagonal", diag)

    @property
    def n(self) -> int:
        return self.diagonal.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.diagonal.size

    @property
    def scale(self) -> float:
        """Spectral norm ``max |E_j|`` (1 for the zero generator)."""
        top = float(np.max(np.abs(self.diagonal)))
        return top if top > 0 else 1.0

    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal).astype(complex)

    def unitary(self, theta: float) -> np.ndarray:
        return np.diag(np.exp(-1j * theta * self.diagonal))


def build_generator(g) -> DephasingGenerator:
    """Signed sums ``E_j = sum_k (-1)**bit_k(j) g_k``."""
    g = _couplings(g)
    n = g.n
    if n > MAX_QUBITS:
        raise ValueError(f"at most {MAX_QUBITS} qubits are supported, got {n}")
    idx = np.arange(2**n)
    bits = (idx[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    return DephasingGenerator((1 - 2 * bits) @ g.g, g)


@dataclass(frozen=True, eq=False)
class ConstructionWorkspace:
    """Intermediates of the construction: odd-moment matrix, null vector, weights."""

    V: np.ndarray
    u: np.ndarray | None = None
    z: np.ndarray | None = None


def build_v_matrix(gen: DephasingGenerator, q: int | None = None) -> ConstructionWorkspace:
    """Columns ``E_i**m`` for ``i = 0..q`` and odd ``m = 1, 3, ..., 2q - 1``."""
    expected = order_for(gen.n)
    q = expected if q is None else q
    if q != expected:
        raise ValueError(f"q={q} is inconsistent with n={gen.n} (expected {expected})")
    energies = gen.diagonal[: q + 1]
    powers = np.arange(1, 2 * q, 2)
    return ConstructionWorkspace(V=energies[:, None] ** powers[None, :])


def find_z(workspace: ConstructionWorkspace) -> ConstructionWorkspace:
    """Unit 1-norm vector orthogonal to every column of ``V``.

    Columns are rescaled to unit norm first; this leaves their span untouched
    but keeps high odd powers from swamping the pseudoinverse. Within a
    degenerate null space the vector with the largest trailing component is
    chosen, then the sign is fixed so the last nonzero entry is positive.
    """
    V = np.asarray(workspace.V, dtype=float)
    dim = V.shape[0]
    norms = np.linalg.norm(V, axis=0)
    Vs = V / np.where(norms > 0, norms, 1.0)
    # V V^+ equals U_r U_r^T for the retained left singular vectors; forming it
    # from the SVD avoids the cond(V) blow-up of the explicit product.
    left, sing, _ = np.linalg.svd(Vs, full_matrices=False)
    kept = left[:, sing > PINV_RCOND * sing.max()] if sing.size and sing.max() > 0 else left[:, :0]
    proj = np.eye(dim) - kept @ kept.T
    vals, vecs = np.linalg.eigh((proj + proj.T) / 2)
    null = vecs[:, vals > 1 - NULL_EIGENVALUE_TOL]
    if null.shape[1] == 0:
        raise RuntimeError("no unit-eigenvalue eigenvector found; V has full row rank")
    u = None
    for i in range(dim - 1, -1, -1):
        candidate = null @ null[i]
        if np.linalg.norm(candidate) > 1e-6:
            u = candidate
            break
    if u is None:
        raise RuntimeError("null-space basis is numerically zero")
    nonzero = np.flatnonzero(np.abs(u) > 1e-12 * np.max(np.abs(u)))
    if u[nonzero[-1]] < 0:
        u = -u
    z = u / np.sum(np.abs(u))
    return ConstructionWorkspace(V=V, u=u, z=z)


@dataclass(frozen=True)
class PhaseConvention:
    """Codeword phases; ``kind`` is ``"zero"`` or ``"theta"`` (two qubits only).

    The ``"theta"`` convention sets ``theta_0 = phi_1 + pi = -theta_2 =
    -phi_3 = vartheta``, which makes the syndrome operator a product of
    single-qubit factors.
    """

    kind: str = "zero"
    theta: float = 0.0

    def phases(self, n: int) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros(2**n)
        if self.kind == "theta":
            if n != 2:
                raise ValueError("the theta phase convention is only defined for n=2")
            t = self.theta
            # applied to both codewords; each index is occupied by only one of them
            return np.array([t, t - np.pi, -t, -t])
        raise ValueError(f"unknown phase convention {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "theta": self.theta}


def default_convention(n: int, theta: float = 0.0) -> PhaseConvention:
    return PhaseConvention("theta", theta) if n == 2 else PhaseConvention("zero")


@dataclass(frozen=True, eq=False)
class LogicalCode:
    zero_logical: StateVector
    one_logical: StateVector
    couplings: CouplingVector
    phases: PhaseConvention
    workspace: ConstructionWorkspace = field(repr=False)

    @property
    def n(self) -> int:
        return self.couplings.n

    @property
    def q(self) -> int:
        return order_for(self.n)

    @property
    def encoder(self) -> np.ndarray:
        """Isometry ``[|0_L>, |1_L>]`` of shape ``(2**n, 2)``."""
        return np.column_stack([self.zero_logical.amplitudes, self.one_logical.amplitudes])

    def encode(self, psi) -> StateVector:
        vec = np.asarray(getattr(psi, "amplitudes", psi), dtype=complex)
        return StateVector.normalized(self.encoder @ vec)

    def to_dict(self) -> dict:
        def pairs(state: StateVector) -> list[list[float]]:
            return [[float(a.real), float(a.imag)] for a in state.amplitudes]

        return {
            "n": self.n,
            "q": self.q,
            "g": [float(x) for x in self.couplings.g],
            "phase_convention": self.phases.to_dict(),
            "zero_logical": pairs(self.zero_logical),
            "one_logical": pairs(self.one_logical),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> LogicalCode:
        def state(pairs) -> StateVector:
            arr = np.asarray(pairs, dtype=float)
            return StateVector.normalized(arr[:, 0] + 1j * arr[:, 1])

        couplings = CouplingVector(doc["g"])
        if len(doc["zero_logical"]) != 2**couplings.n:
            raise ValueError("codeword length does not match the number of couplings")
        pc = doc.get("phase_convention", {})
        phases = PhaseConvention(pc.get("kind", "zero"), float(pc.get("theta", 0.0)))
        workspace = find_z(build_v_matrix(build_generator(couplings)))
        return cls(state(doc["zero_logical"]), state(doc["one_logical"]), couplings, phases, workspace)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> LogicalCode:
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_code(g, phase_convention: PhaseConvention | None = None) -> LogicalCode:
    """Construct ``|0_L>, |1_L>`` from the null vector ``z``.

    Each index pair ``(j, 2**n - 1 - j)`` with ``j <= q`` gets weight
    ``|z_j|``, placed on ``j`` in ``|0_L>`` when ``z_j < 0`` and on the mirror
    index otherwise, so the two codewords never share a basis state.
    """
    g = _couplings(g)
    if g.n < 2:
        raise ValueError("a code needs at least two qubits")
    gen = build_generator(g)
    workspace = find_z(build_v_matrix(gen))
    z = workspace.z
    dim = 2**g.n
    r = np.zeros(dim)
    for j, zj in enumerate(z):
        if zj >= 0:
            r[dim - 1 - j] = np.sqrt(zj)
        else:
            r[j] = np.sqrt(-zj)
    convention = phase_convention or default_convention(g.n)
    phases = convention.phases(g.n)
    zero = r * np.exp(1j * phases)
    one = r[::-1] * np.exp(1j * phases)
    return LogicalCode(
        StateVector.normalized(zero),
        StateVector.normalized(one),
        g,
        convention,
        workspace,
    )


@dataclass(frozen=True)
class KLReport:
    """Largest Knill-Laflamme residual over ``0 <= m <= 2q``.

    ``max_violation`` is measured with the generator rescaled to unit spectral
    norm, which leaves the conditions equivalent but keeps high powers on a
    common scale; ``max_violation_raw`` uses the bare generator.
    """

    max_violation: float
    max_violation_raw: float
    worst_order: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol


def verify_kl(code: LogicalCode, gen: DephasingGenerator | None = None, q: int | None = None, tol: float = 1e-9) -> KLReport:
    gen = gen or build_generator(code.couplings)
    q = code.q if q is None else q
    if gen.dim != code.zero_logical.dim:
        raise ValueError("generator and code act on different registers")
    a = code.zero_logical.amplitudes
    b = code.one_logical.amplitudes
    worst, worst_raw, worst_m = 0.0, 0.0, 0
    for scale, raw in ((gen.scale, False), (1.0, True)):
        energies = gen.diagonal / scale
        for m in range(2 * q + 1):
            hm = energies**m
            diag = abs(np.vdot(a, hm * a) - np.vdot(b, hm * b))
            off = abs(np.vdot(a, hm * b))
            v = max(diag, off)
            if raw:
                worst_raw = max(worst_raw, v)
            elif v > worst:
                worst, worst_m = v, m
    return KLReport(float(worst), float(worst_raw), worst_m, tol)


@dataclass(frozen=True, eq=False)
class RecoveryChannel:
    """Syndrome projection onto ``C_0 ... C_q`` followed by decoding.

    ``subspace_bases[m]`` is a ``(2**n, 2)`` isometry whose columns are the
    images of ``|0_L>`` and ``|1_L>`` in ``C_m``; the Kraus operator for
    outcome ``m`` is ``W_0 W_m^dagger``. Any part of the register left untiled
    is handled by an identity branch on the remainder projector.
    """

    subspace_bases: tuple[np.ndarray, ...]
    code: LogicalCode
    remainder: np.ndarray | None = None

    @property
    def kraus_ops(self) -> tuple[np.ndarray, ...]:
        w0 = self.subspace_bases[0]
        ops = tuple(w0 @ w.conj().T for w in self.subspace_bases)
        if self.remainder is not None:
            ops = ops + (self.remainder,)
        return ops

    @property
    def projectors(self) -> tuple[np.ndarray, ...]:
        return tuple(w @ w.conj().T for w in self.subspace_bases)

    def channel(self) -> QuantumChannel:
        return QuantumChannel(self.kraus_ops)


def _polar_isometry(block: np.ndarray) -> tuple[np.ndarray, float]:
    u, s, vh = np.linalg.svd(block, full_matrices=False)
    return u @ vh, float(s.min())


def build_recovery(code: LogicalCode, gen: DephasingGenerator | None = None, kl_tol: float = 1e-9) -> RecoveryChannel:
    """Canonical Knill-Laflamme recovery for ``{I, H, ..., H^q}``.

    Subspace ``C_m`` is spanned by the part of ``H^m W_0`` orthogonal to
    ``C_0 ... C_{m-1}``. This is generated as a block Krylov sequence
    (``H`` applied to the previous block, then fully reorthogonalized), which
    spans the same nested subspaces as the bare powers while staying well
    conditioned. A polar decomposition turns each block into an isometry.
    """
    gen = gen or build_generator(code.couplings)
    report = verify_kl(code, gen, tol=kl_tol)
    if not report.passed:
        raise ValueError(f"code violates the Knill-Laflamme conditions (max {report.max_violation:.3e})")
    energies = gen.diagonal / gen.scale
    w0 = code.encoder
    bases = [w0]
    dim = w0.shape[0]
    prev = w0
    for _ in range(code.q):
        block = energies[:, None] * prev
        for _ in range(2):
            for w in bases:
                block = block - w @ (w.conj().T @ block)
        iso, smin = _polar_isometry(block)
        if smin < SINGULAR_BLOCK_TOL:
            break
        bases.append(iso)
        prev = iso
    covered = sum(w @ w.conj().T for w in bases)
    remainder = None
    if len(bases) * 2 < dim:
        remainder = np.eye(dim) - covered
    return RecoveryChannel(tuple(bases), code, remainder)


def correctable_span_check(
    recovery: RecoveryChannel,
    gen: DephasingGenerator | None = None,
    q: int | None = None,
    trials: int = 100,
    rng: np.random.Generator | None = None,
) -> float:
    """Worst infidelity after a random span element ``sum_m c_m H^m`` and recovery."""
    code = recovery.code
    gen = gen or build_generator(code.couplings)
    q = code.q if q is None else q
    rng = rng or np.random.default_rng(0)
    channel = recovery.channel()
    energies = gen.diagonal / gen.scale
    worst = 0.0
    for _ in range(trials):
        coeffs = rng.standard_normal(q + 1)
        error = np.polynomial.polynomial.polyval(energies, coeffs)
        psi = code.encode(random_state(2, rng))
        damaged = error * psi.amplitudes
        norm = np.linalg.norm(damaged)
        if norm < 1e-12:
            continue
        damaged /= norm
        out = channel(np.outer(damaged, damaged.conj()))
        worst = max(worst, 1.0 - out.fidelity_with(psi))
    return worst


def degeneracy_gap(gen: DephasingGenerator) -> float:
    """Smallest separation between distinct ``|E_i|`` for ``i <= q``."""
    q = order_for(gen.n)
    mags = np.sort(np.abs(gen.diagonal[: q + 1]))
    return float(np.min(np.diff(mags))) if mags.size > 1 else math.inf


def coupling_sample(n: int, rng: np.random.Generator, guard: float = 0.0, max_tries: int = 1000) -> tuple[np.ndarray, int]:
    """Uniform draw from ``[0, 1]**n``, redrawing inside the degeneracy guard band.

    Returns the couplings and the number of rejected draws.
    """
    rejected = 0
    for _ in range(max_tries):
        g = rng.uniform(0.0, 1.0, size=n)
        if guard <= 0 or n < 2 or degeneracy_gap(build_generator(g)) >= guard:
            return g, rejected
        rejected += 1
    raise RuntimeError("could not draw couplings outside the degeneracy guard band")


def kl_diagonal_difference(amplitudes: Sequence[float], gen: DephasingGenerator, m: int) -> float:
    """``<0_L|H^m|0_L> - <1_L|H^m|1_L>`` for codewords built from mirrored ``r``."""
    r = np.asarray(amplitudes, dtype=float)
    hm = gen.diagonal**m
    return float(np.sum(r**2 * hm) - np.sum(r[::-1] ** 2 * hm))
