import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfdqec.codes import (
    CouplingVector,
    LogicalCode,
    build_code,
    build_generator,
    build_recovery,
    build_v_matrix,
    correctable_span_check,
    coupling_sample,
    find_z,
    kl_diagonal_difference,
    order_for,
    qubits_for_order,
    verify_kl,
)
from cfdqec.quantum import StateVector, random_state, superoperator_distance
from cfdqec.two_qubit import abstract_recovery, build_two_qubit_code


def z_oracle(g):
    """Null vector from the Vandermonde cofactor formula, independent of any SVD."""
    q = order_for(len(g))
    e = build_generator(g).diagonal[: q + 1]
    w = np.array([1 / (e[i] * np.prod([e[i] ** 2 - e[j] ** 2 for j in range(q + 1) if j != i])) for i in range(q + 1)])
    w = w / np.sum(np.abs(w))
    return w if w[-1] > 0 else -w


def kl_residual(a, b, energies, m):
    hm = energies**m
    return max(abs(np.vdot(a, hm * a) - np.vdot(b, hm * b)), abs(np.vdot(a, hm * b)))


def test_sizing_formula():
    assert [order_for(n) for n in range(1, 7)] == [0, 1, 3, 7, 15, 31]
    assert [qubits_for_order(q) for q in (1, 2, 3, 4, 7, 8)] == [2, 3, 3, 4, 4, 5]


def test_generator_examples():
    assert np.allclose(build_generator([1, 0.5]).diagonal, [1.5, 0.5, -0.5, -1.5])
    assert np.allclose(build_generator([1, 1]).diagonal, [2, 0, 0, -2])
    assert build_generator([0.8, 0.5, 0.2]).diagonal[0b011] == pytest.approx(0.1)


def test_generator_matches_sum_of_z(rng):
    g = rng.uniform(0, 1, 3)
    z, i2 = np.diag([1.0, -1.0]), np.eye(2)
    dense = sum(gk * np.kron(np.kron(*(z if j == k else i2 for j in range(2))), z if k == 2 else i2) for k, gk in enumerate(g))
    assert np.allclose(build_generator(g).matrix(), dense)


def test_coupling_vector_validation():
    with pytest.raises(ValueError):
        CouplingVector([])
    with pytest.raises(ValueError):
        CouplingVector([1.0, np.nan])
    with pytest.raises(ValueError):
        build_generator(np.ones(7))


def test_v_matrix_examples():
    assert np.allclose(build_v_matrix(build_generator([1, 0.5]), 1).V, [[1.5], [0.5]])
    assert np.allclose(build_v_matrix(build_generator([1, 1]), 1).V, [[2], [0]])
    v = build_v_matrix(build_generator([0.9, 0.5, 0.2]), 3).V
    e = np.array([1.6, 1.2, 0.6, 0.2])
    assert v.shape == (4, 3)
    assert np.allclose(v, np.column_stack([e, e**3, e**5]))


def test_v_matrix_rejects_wrong_order():
    with pytest.raises(ValueError):
        build_v_matrix(build_generator([1, 0.5]), 2)


def test_find_z_examples():
    z = find_z(build_v_matrix(build_generator([1, 0.5]))).z
    assert np.allclose(z, [-0.25, 0.75], atol=1e-14)
    z = find_z(build_v_matrix(build_generator([1, 1]))).z
    assert np.allclose(z, [0, 1], atol=1e-14)
    ws = find_z(build_v_matrix(build_generator([0.9, 0.5, 0.2])))
    assert np.max(np.abs(ws.z @ ws.V)) < 1e-10
    assert np.sum(np.abs(ws.z)) == pytest.approx(1.0)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_find_z_matches_cofactor_formula(n, rng):
    for _ in range(20):
        g, _ = coupling_sample(n, rng, guard=1e-3)
        z = find_z(build_v_matrix(build_generator(g))).z
        assert np.allclose(z, z_oracle(g), atol=1e-9)


def test_build_code_two_qubit_example():
    code = build_code([1, 0.5])
    a, b = code.zero_logical.amplitudes, code.one_logical.amplitudes
    assert np.allclose(np.abs(a), [0.5, 0, np.sqrt(3) / 2, 0], atol=1e-12)
    assert np.allclose(np.abs(b), [0, np.sqrt(3) / 2, 0, 0.5], atol=1e-12)
    assert np.allclose(a, [0.5, 0, 0.86603, 0], atol=1e-5)


def test_build_code_dfs_limit():
    code = build_code([1, 1])
    assert np.allclose(np.abs(code.zero_logical.amplitudes), [0, 0, 1, 0])
    assert np.allclose(np.abs(code.one_logical.amplitudes), [0, 1, 0, 0])


def test_build_code_three_qubits():
    code = build_code([0.9, 0.5, 0.2])
    report = verify_kl(code)
    assert report.passed and code.q == 3
    e = build_generator([0.9, 0.5, 0.2]).diagonal
    a, b = code.zero_logical.amplitudes, code.one_logical.amplitudes
    assert max(kl_residual(a, b, e, m) for m in range(7)) < 1e-12


def test_build_code_needs_two_qubits():
    with pytest.raises(ValueError):
        build_code([1.0])


def test_codewords_are_orthonormal_with_disjoint_support(rng):
    for n in (2, 3, 4):
        g, _ = coupling_sample(n, rng, guard=1e-6)
        code = build_code(g)
        a, b = code.zero_logical.amplitudes, code.one_logical.amplitudes
        assert np.linalg.norm(a) == pytest.approx(1) and np.linalg.norm(b) == pytest.approx(1)
        assert not np.any((np.abs(a) > 0) & (np.abs(b) > 0))


def test_verify_kl_examples():
    code = build_code([1, 0.5])
    report = verify_kl(code)
    assert report.passed and report.max_violation < 1e-12
    a = code.zero_logical.amplitudes
    assert np.vdot(a, build_generator([1, 0.5]).diagonal * a) == pytest.approx(0, abs=1e-15)


def test_verify_kl_m0_is_normalization():
    code = build_code([0.7, 0.2])
    e = build_generator([0.7, 0.2]).diagonal
    a, b = code.zero_logical.amplitudes, code.one_logical.amplitudes
    assert kl_residual(a, b, e, 0) == pytest.approx(abs(np.vdot(a, b)), abs=1e-15)


def test_verify_kl_detects_corruption():
    code = build_code([1, 0.5])
    a = code.zero_logical.amplitudes.copy()
    a[[0, 2]] = a[[2, 0]]
    bad = LogicalCode(StateVector.normalized(a), code.one_logical, code.couplings, code.phases, code.workspace)
    report = verify_kl(bad)
    assert not report.passed and report.max_violation > 0.1


def test_code_json_round_trip(tmp_path):
    code = build_code([0.9, 0.5, 0.2])
    code.save(tmp_path / "code.json")
    back = LogicalCode.load(tmp_path / "code.json")
    assert np.allclose(back.encoder, code.encoder, atol=1e-15)
    assert verify_kl(back).passed


def test_recovery_matches_two_qubit_module():
    rec = build_recovery(build_code([1, 0.5]))
    assert superoperator_distance(rec.channel(), abstract_recovery(build_two_qubit_code([1, 0.5]))) < 1e-10


@pytest.mark.parametrize("g", [[1, 0.5], [1, 1], [0.9, 0.5, 0.2], [0.9, 0.6, 0.35, 0.1]])
def test_recovery_fixes_codespace(g):
    code = build_code(g)
    rec = build_recovery(code)
    out = rec.channel()(code.zero_logical.density_matrix())
    assert out.fidelity_with(code.zero_logical) == pytest.approx(1.0, abs=1e-12)
    projs = rec.projectors
    for i, p in enumerate(projs):
        for j, r in enumerate(projs):
            assert np.allclose(p @ r, p if i == j else 0, atol=1e-10)


def test_recovery_corrects_first_order_error():
    code = build_code([1, 0.5])
    gen = build_generator([1, 0.5])
    damaged = gen.diagonal * code.zero_logical.amplitudes
    # |H|0_L>| equals sqrt(g1^2 - g2^2)
    assert np.linalg.norm(damaged) == pytest.approx(np.sqrt(0.75), abs=1e-12)
    out = build_recovery(code).channel()(StateVector.normalized(damaged).density_matrix())
    assert out.fidelity_with(code.zero_logical) == pytest.approx(1.0, abs=1e-10)


def test_recovery_refuses_bad_code():
    code = build_code([1, 0.5])
    a = code.zero_logical.amplitudes.copy()
    a[[0, 2]] = a[[2, 0]]
    bad = LogicalCode(StateVector.normalized(a), code.one_logical, code.couplings, code.phases, code.workspace)
    with pytest.raises(ValueError):
        build_recovery(bad)


def test_span_check_identity_and_first_order(rng):
    code = build_code([1, 0.5])
    rec = build_recovery(code)
    ch = rec.channel()
    gen = build_generator([1, 0.5])
    psi = code.encode(random_state(2, rng))
    out = ch(psi.density_matrix())
    assert out.fidelity_with(psi) == pytest.approx(1.0, abs=1e-14)
    err = np.eye(4) - 0.3j * gen.matrix()
    damaged = StateVector.normalized(err @ psi.amplitudes)
    assert ch(damaged.density_matrix()).fidelity_with(psi) == pytest.approx(1.0, abs=1e-10)


def test_span_check_three_qubits():
    code = build_code([0.9, 0.5, 0.2])
    assert correctable_span_check(build_recovery(code), trials=100) < 1e-9


def test_span_check_fails_beyond_order(rng):
    code = build_code([1, 0.5])
    rec = build_recovery(code)
    # H^2 is outside the corrected span for two qubits
    assert correctable_span_check(rec, q=2, trials=50, rng=rng) > 1e-3


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=4))
def test_kl_holds_for_random_couplings(g):
    gen = build_generator(g)
    from cfdqec.codes import degeneracy_gap

    if degeneracy_gap(gen) < 1e-4:
        return
    assert verify_kl(build_code(g)).passed


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=5), st.integers(0, 2**32 - 1), st.integers(0, 6))
def test_reversal_ansatz_cancels_even_moments(g, seed, k):
    # X^n flips the sign of H, so reversed amplitudes see the same even moments
    gen = build_generator(g)
    r = np.random.default_rng(seed).uniform(size=gen.dim)
    r /= np.linalg.norm(r)
    assert abs(kl_diagonal_difference(r, gen, 2 * k)) < 1e-12 * max(1.0, gen.scale ** (2 * k))


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_recovery_subspaces_tile_register(n, rng):
    g, _ = coupling_sample(n, rng, guard=1e-3)
    rec = build_recovery(build_code(g))
    assert len(rec.subspace_bases) == order_for(n) + 1 and rec.remainder is None
    assert np.allclose(sum(rec.projectors), np.eye(2**n), atol=1e-10)
