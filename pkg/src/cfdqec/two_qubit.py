"""Closed-form two-qubit code with a gate-level recovery.

With qubits labelled so that ``|g1| >= |g2|`` the codewords factor as
``|0_L> = |chi0>|0>`` and ``|1_L> = |chi1>|1>``. The phase knob ``vartheta``
fixes ``<chi0|chi1> = 0`` and makes the syndrome operator
``S = P_L - P_E = U_z (x) Z`` separable, so it can be measured with one
ancilla, a controlled ``U_z`` on qubit 1 and a controlled ``Z`` on qubit 2.

All matrices live in the canonical (relabelled) frame. ``to_input_frame``
maps register states back to the caller's qubit order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codes import CouplingVector, DephasingGenerator, build_generator
from .quantum import (
    I2,
    PAULIS,
    QuantumChannel,
    StateVector,
    H,
    Z,
    compose,
    entanglement_fidelity,
)

SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)


def controlled(u: np.ndarray, control: int, target: int, n: int = 3) -> np.ndarray:
    """``|0><0|_c (x) I + |1><1|_c (x) U_t`` on ``n`` qubits (0-based, MSB first)."""
    def embed(ops: dict[int, np.ndarray]) -> np.ndarray:
        out = np.eye(1, dtype=complex)
        for k in range(n):
            out = np.kron(out, ops.get(k, I2))
        return out

    return embed({control: P0}) + embed({control: P1, target: u})


def on_qubit(u: np.ndarray, target: int, n: int = 3) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for k in range(n):
        out = np.kron(out, u if k == target else I2)
    return out


@dataclass(frozen=True, eq=False)
class TwoQubitCode:
    chi0: StateVector
    chi1: StateVector
    theta_knob: float
    g: CouplingVector
    input_g: CouplingVector
    swapped: bool
    negated: bool

    @property
    def U_z(self) -> np.ndarray:
        a, b = self.chi0.amplitudes, self.chi1.amplitudes
        return np.outer(a, a.conj()) - np.outer(b, b.conj())

    @property
    def U_x(self) -> np.ndarray:
        a, b = self.chi0.amplitudes, self.chi1.amplitudes
        return np.outer(a, b.conj()) + np.outer(b, a.conj())

    @property
    def S(self) -> np.ndarray:
        return np.kron(self.U_z, Z)

    @property
    def zero_logical(self) -> np.ndarray:
        return np.kron(self.chi0.amplitudes, [1, 0])

    @property
    def one_logical(self) -> np.ndarray:
        return np.kron(self.chi1.amplitudes, [0, 1])

    @property
    def zero_error(self) -> np.ndarray:
        return np.kron(self.chi1.amplitudes, [1, 0])

    @property
    def one_error(self) -> np.ndarray:
        return np.kron(self.chi0.amplitudes, [0, 1])

    @property
    def encoder(self) -> np.ndarray:
        return np.column_stack([self.zero_logical, self.one_logical])

    @property
    def P_L(self) -> np.ndarray:
        w = self.encoder
        return w @ w.conj().T

    @property
    def P_E(self) -> np.ndarray:
        w = np.column_stack([self.zero_error, self.one_error])
        return w @ w.conj().T

    @property
    def generator(self) -> DephasingGenerator:
        """Noise generator in the canonical frame."""
        return build_generator(self.g)

    def to_input_frame(self, vec: np.ndarray) -> np.ndarray:
        """Register vector in the caller's qubit order."""
        return SWAP @ vec if self.swapped else np.asarray(vec)


def build_two_qubit_code(g, theta_knob: float = 0.0) -> TwoQubitCode:
    """Codewords from the closed-form amplitudes for two qubits.

    Qubits are swapped if needed so that ``|g1| >= |g2|``; a negative ``g1``
    is handled by flipping the sign of both couplings, which leaves the error
    span unchanged and only relabels the codewords.
    """
    input_g = g if isinstance(g, CouplingVector) else CouplingVector(g)
    if input_g.n != 2:
        raise ValueError(f"the two-qubit code needs exactly two couplings, got {input_g.n}")
    g1, g2 = input_g.g
    swapped = abs(g2) > abs(g1)
    if swapped:
        g1, g2 = g2, g1
    negated = g1 < 0
    if negated:
        g1, g2 = -g1, -g2
    minus, plus = abs(g1 - g2), abs(g1 + g2)
    if minus + plus == 0:
        raise ValueError("couplings must not all vanish")
    c = 1 / np.sqrt(minus + plus)
    t = theta_knob
    chi0 = c * np.array([np.sqrt(minus) * np.exp(1j * t), np.sqrt(plus) * np.exp(-1j * t)])
    chi1 = c * np.array([np.sqrt(plus) * np.exp(1j * (t - np.pi)), np.sqrt(minus) * np.exp(-1j * t)])
    return TwoQubitCode(
        StateVector.normalized(chi0),
        StateVector.normalized(chi1),
        float(t),
        CouplingVector([g1, g2]),
        input_g,
        bool(swapped),
        bool(negated),
    )


@dataclass(frozen=True)
class ErrorStateMap:
    zero_err: np.ndarray
    one_err: np.ndarray
    proportionality: complex
    proportionality_one: complex
    residual: float


def error_state_map(code: TwoQubitCode) -> ErrorStateMap:
    """``H|0_L> = s|0_E>`` and ``H|1_L> = s|1_E>`` with the same ``s``."""
    h = code.generator.diagonal
    img0 = h * code.zero_logical
    img1 = h * code.one_logical
    s0 = np.vdot(code.zero_error, img0)
    s1 = np.vdot(code.one_error, img1)
    residual = max(
        np.linalg.norm(img0 - s0 * code.zero_error),
        np.linalg.norm(img1 - s1 * code.one_error),
    )
    return ErrorStateMap(code.zero_error, code.one_error, complex(s0), complex(s1), float(residual))


def abstract_recovery(code: TwoQubitCode) -> QuantumChannel:
    """Kraus set ``{P_L, (U_x (x) I) P_E}``."""
    return QuantumChannel((code.P_L, np.kron(code.U_x, I2) @ code.P_E))


def recovery_gates(code: TwoQubitCode) -> list[dict]:
    """Ordered gate list of the syndrome circuit; qubits 0, 1 register, 2 ancilla."""
    return [
        {"name": "H", "targets": [2], "matrix": H},
        {"name": "cU_z", "controls": [2], "targets": [0], "matrix": code.U_z},
        {"name": "cZ", "controls": [2], "targets": [1], "matrix": Z},
        {"name": "H", "targets": [2], "matrix": H},
        {"name": "measure", "targets": [2]},
        {"name": "U_x", "targets": [0], "matrix": code.U_x, "condition": {"measured": 2, "value": 1}},
    ]


def _gate_unitary(gate: dict) -> np.ndarray:
    if "controls" in gate:
        return controlled(gate["matrix"], gate["controls"][0], gate["targets"][0])
    return on_qubit(gate["matrix"], gate["targets"][0])


def circuit_recovery(code: TwoQubitCode) -> QuantumChannel:
    """Register channel induced by the ancilla circuit.

    Both measurement branches are kept: outcome ``k`` contributes
    ``C_k (I (x) <k|) W (I (x) |0>)`` where ``W`` is the unitary part and
    ``C_1`` applies ``U_x`` to qubit 1.
    """
    gates = recovery_gates(code)
    unitary = np.eye(8, dtype=complex)
    corrections = {0: np.eye(4, dtype=complex), 1: np.eye(4, dtype=complex)}
    for gate in gates:
        if gate["name"] == "measure":
            continue
        if "condition" in gate:
            corrections[gate["condition"]["value"]] = np.kron(gate["matrix"], I2)
            continue
        unitary = _gate_unitary(gate) @ unitary
    prepare = np.kron(np.eye(4), np.array([[1], [0]], dtype=complex))
    ops = []
    for k in (0, 1):
        project = np.kron(np.eye(4), np.eye(2)[k : k + 1].astype(complex))
        ops.append(corrections[k] @ project @ unitary @ prepare)
    return QuantumChannel(tuple(ops))


def syndrome_statistics(code: TwoQubitCode, state: np.ndarray) -> dict[int, tuple[float, np.ndarray | None]]:
    """Ancilla outcome probabilities and the corrected register state for each."""
    channel = circuit_recovery(code)
    state = np.asarray(getattr(state, "amplitudes", state), dtype=complex)
    out = {}
    for k, op in enumerate(channel.kraus_ops):
        post = op @ state
        prob = float(np.vdot(post, post).real)
        out[k] = (prob, post / np.sqrt(prob) if prob > 1e-15 else None)
    return out


def encode(psi, code: TwoQubitCode) -> np.ndarray:
    """``c_2(U_x)_1`` applied to ``|chi0> (x) |psi>``."""
    psi = np.asarray(getattr(psi, "amplitudes", psi), dtype=complex)
    gate = np.kron(I2, P0) + np.kron(code.U_x, P1)
    return gate @ np.kron(code.chi0.amplitudes, psi)


def logical_operation(u: np.ndarray, code: TwoQubitCode) -> QuantumChannel:
    """Physical ``U`` on qubit 2 followed by a recovery."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not np.allclose(u.conj().T @ u, I2, atol=1e-12):
        raise ValueError("logical_operation needs a 2x2 unitary")
    return compose(abstract_recovery(code), QuantumChannel.unitary(np.kron(I2, u)))


def decoded_channel(channel: QuantumChannel, code: TwoQubitCode) -> QuantumChannel:
    """Restriction of a register channel to the codespace, in the logical basis."""
    w = code.encoder
    return QuantumChannel(tuple(w.conj().T @ k @ w for k in channel.kraus_ops), trace_preserving=False)


def logical_operation_fidelity(u: np.ndarray, code: TwoQubitCode) -> float:
    """Entanglement fidelity of the recipe against the intended ``U_L``."""
    u = np.asarray(u, dtype=complex)
    decoded = decoded_channel(logical_operation(u, code), code)
    undo = QuantumChannel(tuple(u.conj().T @ k for k in decoded.kraus_ops), trace_preserving=False)
    return entanglement_fidelity(undo)


def axis_angle(u: np.ndarray) -> tuple[np.ndarray, float]:
    """Rotation axis and angle of a single-qubit unitary, up to global phase."""
    u = np.asarray(u, dtype=complex)
    u = u / np.sqrt(np.linalg.det(u))
    coeffs = np.array([np.trace(p @ u) / 2 for p in PAULIS])
    # u = cos(a/2) I - i sin(a/2) n.sigma
    cos_half = coeffs[0].real
    vec = -coeffs[1:].imag
    sin_half = np.linalg.norm(vec)
    angle = 2 * np.arctan2(sin_half, cos_half)
    axis = vec / sin_half if sin_half > 1e-15 else np.array([0.0, 0.0, 1.0])
    return axis, float(angle)


def _encode_matrix(m: np.ndarray) -> list[list[list[float]]]:
    return [[[float(x.real), float(x.imag)] for x in row] for row in np.asarray(m, dtype=complex)]


def export_circuit(code: TwoQubitCode, path: str | Path | None = None) -> dict:
    """JSON document of the recovery circuit; entries are ``[re, im]`` pairs."""
    gates = []
    for gate in recovery_gates(code):
        entry = {k: v for k, v in gate.items() if k != "matrix"}
        if "matrix" in gate:
            entry["matrix"] = _encode_matrix(gate["matrix"])
        gates.append(entry)
    doc = {
        "qubits": {"register": [0, 1], "ancilla": 2},
        "g": [float(x) for x in code.g.g],
        "input_g": [float(x) for x in code.input_g.g],
        "swapped": code.swapped,
        "theta": code.theta_knob,
        "gates": gates,
    }
    if path is not None:
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")
    return doc
