"""Logical error probabilities, coupling-averaged sweeps and derived studies.

Every strategy is described by a ``Layout``: the register energies ``E`` of
the true couplings, the encoder ``W_0`` and the syndrome isometries ``W_k``
(``W_0`` included) whose decode maps are ``W_0 W_k^dagger``. For a dephasing
mask ``M = 1 - D`` the encode/noise/recover/decode map is exactly
``rho -> rho - Delta(rho)`` with

    Delta(rho) = sum_k W_k^dagger (D o (W_0 rho W_0^dagger)) W_k,

because the all-ones part of ``M`` is undone perfectly. Working with the
deficit ``D = -expm1(...)`` keeps the tiny error probabilities of high-order
codes free of ``1 - (1 - p)`` cancellation.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .baselines import RepetitionCode
from .codes import build_code, build_generator, build_recovery, coupling_sample
from .noise import GaussianNoise, NoiseModel, as_noise, channel_from_mask
from .quantum import (
    AXIS_STATES,
    PAULIS,
    QuantumChannel,
    entanglement_fidelity,
    pauli_channel_diamond_distance,
    trace_distance,
)

log = logging.getLogger(__name__)

P_FLOOR = 1e-14
DEGENERACY_GUARD = 1e-8
DEFAULT_SIGMAS = tuple(np.geomspace(0.02, 1.0, 24))
DEFAULT_G_SAMPLES = 1000
PTM_DIAGNOSTIC_SIGMA_MAX = 0.3

KIND_CODES = {"physical": 0, "repetition": 1, "hardware_efficient": 2}
SUPPORTED_N = {"physical": (1,), "repetition": (3, 5), "hardware_efficient": (2, 3, 4, 5)}


@dataclass(frozen=True)
class StrategySpec:
    kind: str
    n: int = 1

    def __post_init__(self) -> None:
        if self.kind not in KIND_CODES:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.n not in SUPPORTED_N[self.kind]:
            raise ValueError(f"{self.kind} supports n in {SUPPORTED_N[self.kind]}, got {self.n}")

    @classmethod
    def parse(cls, token: str) -> StrategySpec:
        """``physical``, ``rep3``/``repetition3`` or ``he2``/``hardware_efficient2``."""
        token = token.strip().lower().replace("-", "_").replace(":", "")
        if token in ("physical", "phys"):
            return cls("physical", 1)
        for prefix, kind in (("repetition", "repetition"), ("rep", "repetition"),
                             ("hardware_efficient", "hardware_efficient"), ("he", "hardware_efficient")):
            if token.startswith(prefix) and token[len(prefix):].isdigit():
                return cls(kind, int(token[len(prefix):]))
        raise ValueError(f"cannot parse strategy {token!r}")

    @property
    def label(self) -> str:
        return self.kind if self.kind == "physical" else f"{self.kind}{self.n}"

    @property
    def guard(self) -> float:
        return DEGENERACY_GUARD if self.kind == "hardware_efficient" else 0.0

    def layout(self, g, calibration=None) -> Layout:
        """Layout with noise from ``g`` and the code built from ``calibration``."""
        g = np.atleast_1d(np.asarray(g, dtype=float))
        if g.size != self.n:
            raise ValueError(f"{self.label} needs {self.n} couplings, got {g.size}")
        energies = build_generator(g).diagonal if self.n > 1 else np.array([g[0], -g[0]])
        if self.kind == "physical":
            eye = np.eye(2, dtype=complex)
            return Layout(energies, (eye,))
        if self.kind == "repetition":
            return Layout(energies, RepetitionCode(self.n).subspace_bases)
        cal = g if calibration is None else np.asarray(calibration, dtype=float)
        code = build_code(cal)
        recovery = build_recovery(code, build_generator(cal))
        return Layout(energies, recovery.subspace_bases)


@dataclass(frozen=True, eq=False)
class Layout:
    energies: np.ndarray
    bases: tuple[np.ndarray, ...]

    @property
    def encoder(self) -> np.ndarray:
        return self.bases[0]

    def overlap_gram(self) -> np.ndarray:
        """``G = sum_k b_k b_k^dagger`` with ``b_k = rowsum(W_0 o conj(W_k))``."""
        w0 = self.encoder
        b = np.array([np.sum(w0 * w.conj(), axis=1) for w in self.bases])
        return b.T @ b.conj()

    def deficit_map(self, deficit: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        w0 = self.encoder

        def apply(rho: np.ndarray) -> np.ndarray:
            damped = deficit * (w0 @ rho @ w0.conj().T)
            return sum(w.conj().T @ damped @ w for w in self.bases)

        return apply

    def error_probability(self, deficit: np.ndarray) -> float:
        """``1 - F_e`` of the decoded channel, as ``sum(D o G) / 4``."""
        return float(np.real(np.sum(deficit * self.overlap_gram())) / 4)

    def kraus_channel(self, mask: np.ndarray) -> QuantumChannel:
        """Decoded channel assembled from explicit Kraus operators."""
        noise = channel_from_mask(mask)
        w0 = self.encoder
        ops = tuple(
            w0.conj().T @ (w0 @ w.conj().T) @ k @ w0
            for w in self.bases
            for k in noise.kraus_ops
        )
        return QuantumChannel(ops, trace_preserving=False)


@dataclass(frozen=True, eq=False)
class LogicalErrorReport:
    p: float
    ptm_offdiag_max: float
    ptm: np.ndarray = field(repr=False)
    average_infidelity: float
    trace_distance_p: float
    diamond_distance: float | None


def logical_error_probability(strategy: StrategySpec, g, noise: NoiseModel | float, calibration=None) -> LogicalErrorReport:
    """Flip probability ``p = 1 - F_e`` of the decoded logical channel.

    Also reports the largest off-diagonal Pauli-transfer entry, the
    axis-state average infidelity and the largest axis-state trace distance,
    which for a single-Pauli flip channel equal ``2p/3`` and ``p``.
    """
    noise = as_noise(noise)
    layout = strategy.layout(g, calibration)
    deficit = noise.deficit(layout.energies)
    delta = layout.deficit_map(deficit)
    ptm_delta = np.array(
        [[np.real(np.trace(pi @ delta(pj))) / 2 for pj in PAULIS] for pi in PAULIS]
    )
    p = float(np.trace(ptm_delta) / 4)
    off = ptm_delta - np.diag(np.diag(ptm_delta))
    avg_inf = 0.0
    worst_td = 0.0
    for psi in AXIS_STATES:
        rho = np.outer(psi.amplitudes, psi.amplitudes.conj())
        lost = delta(rho)
        avg_inf += float(np.real(psi.amplitudes.conj() @ lost @ psi.amplitudes)) / len(AXIS_STATES)
        worst_td = max(worst_td, trace_distance(lost, np.zeros_like(lost)))
    offmax = float(np.max(np.abs(off)))
    sigma = getattr(noise, "sigma", None)
    if sigma is not None and sigma <= PTM_DIAGNOSTIC_SIGMA_MAX and offmax > 1e-6 * p + 1e-12:
        log.warning("%s: logical channel is not Pauli-diagonal (offdiag %.3e, p %.3e)", strategy.label, offmax, p)
    return LogicalErrorReport(
        p=p,
        ptm_offdiag_max=offmax,
        ptm=np.eye(4) - ptm_delta,
        average_infidelity=avg_inf,
        trace_distance_p=worst_td,
        diamond_distance=pauli_channel_diamond_distance(p),
    )


def logical_channel(strategy: StrategySpec, g, noise: NoiseModel | float, calibration=None) -> QuantumChannel:
    """Decoded logical channel built from Kraus operators (independent route)."""
    noise = as_noise(noise)
    layout = strategy.layout(g, calibration)
    return layout.kraus_channel(noise.mask(layout.energies))


def kraus_error_probability(strategy: StrategySpec, g, noise: NoiseModel | float) -> float:
    return 1.0 - entanglement_fidelity(logical_channel(strategy, g, noise))


# --- sweeps -----------------------------------------------------------------


def sample_rng(seed: int, strategy: StrategySpec, index: int, stream: int = 0) -> np.random.Generator:
    """Generator for one task, keyed by (seed, strategy, sample index)."""
    key = [seed, KIND_CODES[strategy.kind], strategy.n, index, stream]
    return np.random.default_rng(np.random.SeedSequence(key))


def draw_couplings(strategy: StrategySpec, seed: int, index: int) -> tuple[np.ndarray, int]:
    return coupling_sample(strategy.n, sample_rng(seed, strategy, index), guard=strategy.guard)


def _p_curve(energies: np.ndarray, gram: np.ndarray, sigmas: np.ndarray) -> np.ndarray:
    gaps2 = np.subtract.outer(energies, energies).ravel() ** 2
    weights = np.real(gram).ravel()
    deficits = -np.expm1(-0.5 * np.square(sigmas)[:, None] * gaps2[None, :])
    return deficits @ weights / 4


def _sample_task(args) -> tuple[np.ndarray, int]:
    strategy, seed, index, sigmas = args
    g, rejected = draw_couplings(strategy, seed, index)
    layout = strategy.layout(g)
    return _p_curve(layout.energies, layout.overlap_gram(), sigmas), rejected


def sample_p_matrix(strategy: StrategySpec, sigmas: Sequence[float], g_samples: int, seed: int, workers: int = 1) -> tuple[np.ndarray, int]:
    """Per-draw ``p`` for every ``sigma``: shape ``(g_samples, len(sigmas))``.

    Draw ``i`` uses the same couplings for every ``sigma``, so curves are
    smooth in ``sigma``. Results are gathered in index order, so the worker
    count never changes the output.
    """
    sigmas = np.asarray(sigmas, dtype=float)
    tasks = [(strategy, seed, i, sigmas) for i in range(g_samples)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sample_task, tasks, chunksize=max(1, g_samples // (4 * workers))))
    else:
        results = [_sample_task(t) for t in tasks]
    rejected = sum(r for _, r in results)
    if rejected:
        log.info("%s: redrew %d couplings inside the degeneracy guard band", strategy.label, rejected)
    return np.array([p for p, _ in results]), rejected


@dataclass(frozen=True)
class SweepRow:
    strategy: str
    n: int
    sigma: float
    mean_p: float
    sem_p: float
    samples: int
    seed: int

    @property
    def censored(self) -> bool:
        # rounding can leave a tiny negative mean; an exact zero is kept as is
        return self.mean_p != 0 and abs(self.mean_p) < P_FLOOR


@dataclass
class SweepResult:
    rows: list[SweepRow]
    metadata: dict = field(default_factory=dict)

    CSV_HEADER = ("strategy", "n", "sigma", "mean_p", "sem_p", "samples", "seed")

    def lookup(self, strategy: StrategySpec | str, sigma: float) -> SweepRow:
        label = strategy.label if isinstance(strategy, StrategySpec) else strategy
        for row in self.rows:
            if row.strategy == label and math.isclose(row.sigma, sigma, rel_tol=1e-12):
                return row
        raise KeyError((label, sigma))

    def csv_lines(self) -> list[list[str]]:
        lines = [list(self.CSV_HEADER)]
        for r in self.rows:
            if r.censored:
                mean, sem = f"<{P_FLOOR:g}", "nan"
            else:
                mean, sem = _fmt(r.mean_p), _fmt(r.sem_p)
            lines.append([r.strategy, str(r.n), _fmt(r.sigma), mean, sem, str(r.samples), str(r.seed)])
        return lines

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(self.csv_lines())

    def write_plot_data(self, path: str | Path) -> None:
        """Long format: one row per (strategy, sigma, quantity)."""
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["strategy", "n", "sigma", "quantity", "value"])
            for r in self.rows:
                lower = max(r.mean_p - r.sem_p, 0.0)
                for name, value in (("mean_p", r.mean_p), ("sem_p", r.sem_p),
                                    ("lower", lower), ("upper", r.mean_p + r.sem_p)):
                    out.writerow([r.strategy, r.n, _fmt(r.sigma), name, _fmt(value)])

    def write_metadata(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.metadata, indent=2, sort_keys=True) + "\n")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def sweep(
    strategies: Iterable[StrategySpec],
    sigmas: Sequence[float] = DEFAULT_SIGMAS,
    g_samples: int = DEFAULT_G_SAMPLES,
    seed: int = 0,
    workers: int = 1,
) -> SweepResult:
    """Coupling-averaged ``p`` with its standard error for each strategy and sigma."""
    if g_samples < 2:
        raise ValueError("g_samples must be at least 2 to form a standard error")
    sigmas = np.asarray(sigmas, dtype=float)
    if np.any(sigmas < 0):
        raise ValueError("sigma grid must be non-negative")
    rows: list[SweepRow] = []
    rejected: dict[str, int] = {}
    strategies = list(strategies)
    for strategy in strategies:
        ps, rejected[strategy.label] = sample_p_matrix(strategy, sigmas, g_samples, seed, workers)
        means = ps.mean(axis=0)
        sems = ps.std(axis=0, ddof=1) / np.sqrt(g_samples)
        for sigma, mean, sem in zip(sigmas, means, sems):
            rows.append(SweepRow(strategy.label, strategy.n, float(sigma), float(mean), float(sem), g_samples, seed))
    metadata = {
        "version": __version__,
        "noise": "gaussian phase, theta ~ N(0, sigma)",
        "coupling_distribution": "uniform on [0, 1]^n, fresh draw per sample, shared across sigma",
        "physical_qubit": "single qubit with coupling uniform on [0, 1]",
        "p_estimator": "1 - entanglement fidelity of the decoded logical channel",
        "degeneracy_guard": DEGENERACY_GUARD,
        "guard_redraws": rejected,
        "censor_floor": P_FLOOR,
        "sigmas": [float(s) for s in sigmas],
        "g_samples": g_samples,
        "seed": seed,
        "strategies": [s.label for s in strategies],
    }
    return SweepResult(rows, metadata)


# --- scaling, pseudothresholds, miscalibration -------------------------------


class UnderflowError(ValueError):
    """``p`` fell below the double-precision floor inside a fit window."""


def fit_scaling_exponent(strategy: StrategySpec, g, window: tuple[float, float] = (0.02, 0.1), points: int = 9) -> float:
    """Least-squares slope of ``log p`` against ``log sigma``."""
    sigmas = np.geomspace(window[0], window[1], points)
    layout = strategy.layout(g)
    ps = _p_curve(layout.energies, layout.overlap_gram(), sigmas)
    if np.any(ps <= P_FLOOR):
        raise UnderflowError(f"{strategy.label}: p below {P_FLOOR:g} in window {window}; move the window up")
    slope, _ = np.polyfit(np.log(sigmas), np.log(ps), 1)
    return float(slope)


class AveragedCurve:
    """Coupling-averaged ``p(sigma)`` with the draws fixed once."""

    def __init__(self, strategy: StrategySpec, g_samples: int = 200, seed: int = 0):
        self.strategy = strategy
        self.g_samples = g_samples
        self.seed = seed
        self._cache = []
        for i in range(g_samples):
            g, _ = draw_couplings(strategy, seed, i)
            layout = strategy.layout(g)
            self._cache.append((layout.energies, layout.overlap_gram()))

    def samples(self, sigma: float) -> np.ndarray:
        sig = np.array([sigma], dtype=float)
        return np.array([_p_curve(e, gram, sig)[0] for e, gram in self._cache])

    def mean(self, sigma: float) -> float:
        return float(self.samples(sigma).mean())

    def sem(self, sigma: float) -> float:
        return float(self.samples(sigma).std(ddof=1) / math.sqrt(self.g_samples))

    __call__ = mean


class FixedCurve:
    """``p(sigma)`` at fixed couplings."""

    def __init__(self, strategy: StrategySpec, g):
        self.strategy = strategy
        layout = strategy.layout(g)
        self._energies = layout.energies
        self._gram = layout.overlap_gram()

    def __call__(self, sigma: float) -> float:
        return float(_p_curve(self._energies, self._gram, np.array([sigma], dtype=float))[0])


class NoCrossingError(ValueError):
    """The two curves do not change order inside the bracket."""


def find_pseudothreshold(
    code_curve: Callable[[float], float],
    reference_curve: Callable[[float], float],
    bracket: tuple[float, float],
    rtol: float = 1e-3,
) -> float:
    """Bisect the crossing of two ``p(sigma)`` curves to relative width ``rtol``."""
    lo, hi = sorted(bracket)
    if lo <= 0:
        raise ValueError("bracket must be positive")
    f_lo = code_curve(lo) - reference_curve(lo)
    f_hi = code_curve(hi) - reference_curve(hi)
    if f_lo == 0 and f_hi == 0 or f_lo * f_hi > 0:
        raise NoCrossingError(f"no sign change of p_code - p_ref on [{lo}, {hi}]")
    while hi - lo > rtol * 0.5 * (hi + lo):
        mid = 0.5 * (lo + hi)
        f_mid = code_curve(mid) - reference_curve(mid)
        if f_mid == 0:
            return mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pseudothreshold(
    strategy: StrategySpec,
    bracket: tuple[float, float] = (0.05, 1.0),
    g_samples: int = 200,
    seed: int = 0,
    reference: StrategySpec = StrategySpec("physical"),
) -> float:
    """Noise strength where the averaged code and reference curves cross."""
    return find_pseudothreshold(
        AveragedCurve(strategy, g_samples, seed),
        AveragedCurve(reference, g_samples, seed),
        bracket,
    )


@dataclass(frozen=True)
class MiscalibrationRow:
    delta: float
    mean_p: float
    sem_p: float
    samples: int


def miscalibration_study(
    g_true,
    deltas: Sequence[float],
    sigma: float,
    samples: int = 200,
    seed: int = 0,
    n: int | None = None,
) -> list[MiscalibrationRow]:
    """Mean ``p`` when the code is built from ``g (1 + delta eps)``, ``eps ~ U[-1, 1]^n``.

    The noise always uses the true couplings. With ``g_true=None`` the true
    couplings are also redrawn uniformly for every sample (``n`` required).
    The same ``eps`` draws are reused for every ``delta``.
    """
    if any(d < 0 for d in deltas):
        raise ValueError("relative errors must be non-negative")
    if g_true is None and n is None:
        raise ValueError("pass n when g_true is None")
    n = len(g_true) if g_true is not None else n
    strategy = StrategySpec("hardware_efficient", n)
    noise = GaussianNoise(sigma)
    ps = np.zeros((samples, len(deltas)))
    for i in range(samples):
        rng = sample_rng(seed, strategy, i, stream=1)
        if g_true is None:
            g, _ = coupling_sample(n, rng, guard=strategy.guard)
        else:
            g = np.asarray(g_true, dtype=float)
        eps = rng.uniform(-1.0, 1.0, size=n)
        for j, delta in enumerate(deltas):
            layout = strategy.layout(g, calibration=g * (1 + delta * eps))
            ps[i, j] = layout.error_probability(noise.deficit(layout.energies))
    means = ps.mean(axis=0)
    sems = ps.std(axis=0, ddof=1) / math.sqrt(samples) if samples > 1 else np.zeros(len(deltas))
    return [MiscalibrationRow(float(d), float(m), float(s), samples) for d, m, s in zip(deltas, means, sems)]


def rows_as_dicts(rows: Iterable) -> list[dict]:
    return [asdict(r) for r in rows]
