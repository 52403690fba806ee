"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line; the lines are printed in a block at the
end of the module. ``python tests/test_acceptance.py`` runs the same checks
without pytest.
"""

import subprocess
import sys
import time

import numpy as np
import pytest
from scipy.integrate import quad

from cfdqec.codes import build_code, build_recovery, correctable_span_check, coupling_sample, verify_kl
from cfdqec.experiments import StrategySpec, fit_scaling_exponent, logical_error_probability, miscalibration_study, sweep
from cfdqec.quantum import Z, random_state, superoperator_distance
from cfdqec.two_qubit import abstract_recovery, build_two_qubit_code, circuit_recovery

RESULTS: list[str] = []

PHYS = StrategySpec("physical")
REP3 = StrategySpec("repetition", 3)
REP5 = StrategySpec("repetition", 5)
HE2 = StrategySpec("hardware_efficient", 2)
HE3 = StrategySpec("hardware_efficient", 3)


def record(number: int, name: str, ok: bool, detail: str) -> None:
    RESULTS.append(f"{'PASS' if ok else 'FAIL'} [{number:2d}] {name}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module", autouse=True)
def report(request):
    yield
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")
    write = (lambda s: reporter.write_line(s)) if reporter else print
    write("")
    write("acceptance summary")
    for line in RESULTS:
        write(line)


def test_01_kl_suite():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for n in (2, 3, 4, 5):
        for _ in range(200):
            g, _ = coupling_sample(n, rng, guard=1e-6)
            worst = max(worst, verify_kl(build_code(g)).max_violation)
    elapsed = time.perf_counter() - start
    record(1, "KL suite", worst < 1e-9 and elapsed < 60, f"max violation {worst:.2e} (< 1e-9), {elapsed:.1f} s (< 60 s)")


def test_02_closed_form_two_qubit():
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(100):
        g1, g2 = np.sort(rng.uniform(0, 1, 2))[::-1]
        code = build_code([g1, g2])
        c = 1 / np.sqrt(abs(g1 - g2) + abs(g1 + g2))
        a = np.abs(code.zero_logical.amplitudes)
        worst = max(worst, abs(a[0] - c * np.sqrt(g1 - g2)), abs(a[2] - c * np.sqrt(g1 + g2)))
    dfs = build_code([1, 1])
    dfs_ok = np.allclose(np.abs(dfs.zero_logical.amplitudes), [0, 0, 1, 0], atol=1e-12) and np.allclose(
        np.abs(dfs.one_logical.amplitudes), [0, 1, 0, 0], atol=1e-12
    )
    record(2, "closed-form n=2", worst < 1e-12 and dfs_ok, f"max amplitude error {worst:.2e} (< 1e-12), DFS pair {'ok' if dfs_ok else 'wrong'}")


def test_03_stabilizer_algebra():
    rng = np.random.default_rng(103)
    sep = square = sign = anti_l = 0.0
    anti_e = np.inf
    for _ in range(50):
        g = np.sort(rng.uniform(0.05, 1, 2))[::-1]
        code = build_two_qubit_code(g, rng.uniform(0, 2 * np.pi))
        s = code.P_L - code.P_E
        h = code.generator.matrix()
        sep = max(sep, np.max(np.abs(s - np.kron(code.U_z, Z))))
        square = max(square, np.max(np.abs(s @ s - np.eye(4))))
        psi_l = code.encoder @ random_state(2, rng).amplitudes
        psi_e = np.column_stack([code.zero_error, code.one_error]) @ random_state(2, rng).amplitudes
        sign = max(sign, np.linalg.norm(s @ psi_l - psi_l), np.linalg.norm(s @ psi_e + psi_e))
        anti = h @ s + s @ h
        anti_l = max(anti_l, np.linalg.norm(anti @ psi_l))
        if abs(g[0] - g[1]) > 1e-3:
            anti_e = min(anti_e, np.linalg.norm(anti @ psi_e))
    ok = sep < 1e-12 and square < 1e-12 and sign < 1e-12 and anti_l < 1e-10 and anti_e > 0
    record(3, "stabilizer algebra", ok, f"|S - U_z x Z| {sep:.1e}, |S^2 - I| {square:.1e}, eigen {sign:.1e}, {{H,S}} on C0 {anti_l:.1e}, min on C1 {anti_e:.1e}")


def test_04_circuit_equivalence():
    rng = np.random.default_rng(104)
    worst = 0.0
    for _ in range(50):
        code = build_two_qubit_code(rng.uniform(0, 1, 2), rng.uniform(0, 2 * np.pi))
        worst = max(worst, superoperator_distance(circuit_recovery(code), abstract_recovery(code)))
    record(4, "circuit equivalence", worst < 1e-10, f"max superoperator distance {worst:.2e} (< 1e-10)")


def test_05_correctable_span():
    rng = np.random.default_rng(105)
    worst = 0.0
    for n in (2, 3, 4):
        g, _ = coupling_sample(n, rng, guard=1e-6)
        worst = max(worst, correctable_span_check(build_recovery(build_code(g)), trials=100, rng=rng))
    record(5, "correctable span", worst < 1e-9, f"max infidelity {worst:.2e} (< 1e-9)")


def test_06_analytic_baseline():
    p = logical_error_probability(PHYS, [1.0], 0.1).p
    exact = quad(lambda g: -np.expm1(-2 * 0.05**2 * g**2) / 2, 0, 1, epsabs=1e-16)[0]
    row = sweep([PHYS], [0.05], g_samples=10_000, seed=0).lookup(PHYS, 0.05)
    # 0.00990066 is the closed form rounded to 8 decimals; 1e-10 applies to the closed form itself
    closed = (1 - np.exp(-2 * 0.1**2)) / 2
    ok = abs(p - closed) < 1e-10 and abs(p - 0.00990066) < 5e-9 and abs(row.mean_p - exact) < 3 * row.sem_p
    record(6, "analytic baseline", ok, f"p(1, 0.1) = {p:.13f}, |p - closed form| {abs(p - closed):.1e}; mean {row.mean_p:.4e} vs integral {exact:.4e} ({abs(row.mean_p - exact) / row.sem_p:.2f} SEM)")


def test_07_scaling_exponents():
    start = time.perf_counter()
    cases = [
        ("physical", PHYS, [1.0], (0.02, 0.1), 2.0, 0.1),
        ("rep3", REP3, [0.9, 0.5, 0.2], (0.02, 0.1), 4.0, 0.3),
        ("rep5", REP5, [0.9, 0.7, 0.5, 0.3, 0.1], (0.02, 0.1), 6.0, 0.5),
        ("he2", HE2, [1.0, 0.5], (0.02, 0.1), 4.0, 0.3),
        ("he3", HE3, [0.9, 0.5, 0.2], (0.05, 0.2), 8.0, 0.5),
    ]
    slopes = {name: fit_scaling_exponent(s, g, w) for name, s, g, w, _, _ in cases}
    elapsed = time.perf_counter() - start
    ok = all(abs(slopes[name] - target) <= tol for name, _, _, _, target, tol in cases) and elapsed < 300
    detail = ", ".join(f"{k} {v:.3f}" for k, v in slopes.items())
    record(7, "scaling exponents", ok, f"{detail}; {elapsed:.1f} s")


def test_08_ordering():
    res = sweep([PHYS, REP3, HE2, HE3], [0.05], g_samples=1000, seed=0)
    r = {s: res.lookup(s, 0.05) for s in (PHYS, REP3, HE2, HE3)}

    def margin(a, b):
        return (r[a].mean_p - r[b].mean_p) / np.hypot(r[a].sem_p, r[b].sem_p)

    m1, m2 = margin(PHYS, HE2), margin(REP3, HE3)
    record(8, "curve ordering", m1 > 3 and m2 > 3, f"physical - he2 = {m1:.1f} SEM, rep3 - he3 = {m2:.1f} SEM (> 3)")


def test_09_miscalibration():
    mis = miscalibration_study(None, [0.1], 0.1, samples=1000, seed=0, n=2)[0]
    phys = sweep([PHYS], [0.1], g_samples=1000, seed=0).lookup(PHYS, 0.1)
    margin = (phys.mean_p - mis.mean_p) / np.hypot(phys.sem_p, mis.sem_p)
    record(9, "miscalibration", margin > 3, f"he2(delta=0.1) {mis.mean_p:.3e} vs physical {phys.mean_p:.3e}: {margin:.1f} SEM")


def test_10_determinism(tmp_path):
    blobs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        cmd = [sys.executable, "-m", "cfdqec", "sweep", "--strategies", "physical,rep3,he2,he3",
               "--sigma-points", "6", "--g-samples", "200", "--seed", "11", "--out", str(out)]
        subprocess.run(cmd, check=True, capture_output=True)
        blobs.append(out.read_bytes())
    record(10, "determinism", blobs[0] == blobs[1], f"two CLI sweeps, {len(blobs[0])} bytes, identical: {blobs[0] == blobs[1]}")


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for fn in tests:
        try:
            fn(Path(tempfile.mkdtemp())) if fn is test_10_determinism else fn()
        except AssertionError:
            pass
    print("\n".join(RESULTS))
    sys.exit(0 if all(line.startswith("PASS") for line in RESULTS) else 1)
