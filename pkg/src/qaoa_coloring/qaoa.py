"""Level-p QAOA: ansatz, expectation estimators, gradients and optimisation.

Angle naming: ``beta[i]`` drives the cost evolution ``exp(-i beta H_c)`` and
``gamma[i]`` the transverse-field mixer ``exp(-i gamma sum_q X_q)``, applied
as ``RX(2 gamma)`` on every qubit.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numba
import numpy as np

from .hamiltonian import ColoringInstance, ZPolynomial, valid_mask
from .simulator import (
    RX,
    Circuit,
    H,
    Statevector,
    apply_gate_array,
    synthesize_phase_circuit,
)

FD_STEP = 1e-4
# amplitudes held at once by a batch of shifted states
_BATCH_AMPLITUDES = 1 << 22


class GradientMethod(str, enum.Enum):
    PARAMETER_SHIFT = "parameter_shift"
    FINITE_DIFFERENCE = "finite_difference"

    @classmethod
    def parse(cls, value: "str | GradientMethod") -> "GradientMethod":
        if isinstance(value, GradientMethod):
            return value
        key = value.strip().lower().replace("-", "_")
        aliases = {"parameter_shift": cls.PARAMETER_SHIFT, "parametershift": cls.PARAMETER_SHIFT,
                   "ps": cls.PARAMETER_SHIFT, "finite_difference": cls.FINITE_DIFFERENCE,
                   "finitedifference": cls.FINITE_DIFFERENCE, "fd": cls.FINITE_DIFFERENCE}
        if key not in aliases:
            raise ValueError(f"unknown gradient method {value!r}")
        return aliases[key]


@dataclass(frozen=True)
class ParameterSet:
    beta: tuple[float, ...]
    gamma: tuple[float, ...]

    def __post_init__(self):
        beta = tuple(float(b) for b in self.beta)
        gamma = tuple(float(g) for g in self.gamma)
        if len(beta) != len(gamma):
            raise ValueError(f"beta has {len(beta)} angles, gamma has {len(gamma)}")
        if not all(math.isfinite(t) for t in beta + gamma):
            raise ValueError("angles must be finite")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)

    @property
    def p(self) -> int:
        return len(self.beta)

    def to_vector(self) -> np.ndarray:
        return np.array(self.beta + self.gamma)

    @classmethod
    def from_vector(cls, v: Sequence[float]) -> "ParameterSet":
        v = np.asarray(v, dtype=float)
        if v.ndim != 1 or v.size % 2:
            raise ValueError("parameter vector must have even length 2p")
        p = v.size // 2
        return cls(tuple(v[:p]), tuple(v[p:]))

    @classmethod
    def zeros(cls, p: int) -> "ParameterSet":
        return cls((0.0,) * p, (0.0,) * p)


class Ansatz:
    """Cost polynomial plus level ``p``; caches the diagonal and term signs."""

    def __init__(self, cost: ZPolynomial, p: int):
        if p < 1:
            raise ValueError("QAOA level p must be at least 1")
        self.cost = cost
        self.p = int(p)
        self.num_qubits = cost.num_qubits
        self._diag: Optional[np.ndarray] = None
        self._signs: Optional[np.ndarray] = None

    @property
    def num_parameters(self) -> int:
        return 2 * self.p

    @property
    def diagonal(self) -> np.ndarray:
        if self._diag is None:
            self._diag = self.cost.diagonal()
        return self._diag

    @property
    def phase_diagonal(self) -> np.ndarray:
        # the constant only contributes a global phase
        return self.diagonal - self.cost.constant

    @property
    def term_signs(self) -> np.ndarray:
        """``(T, 2**N)`` int8 array of ``Z_S`` eigenvalues, one row per term."""
        if self._signs is None:
            n = self.num_qubits
            idx = np.arange(1 << n, dtype=np.int64)
            bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
            rows = np.empty((len(self.cost.terms), 1 << n), dtype=np.int8)
            for r, subset in enumerate(self.cost.terms):
                parity = np.zeros(1 << n, dtype=np.int64)
                for q in subset:
                    parity ^= bits[q]
                rows[r] = 1 - 2 * parity
            self._signs = rows
        return self._signs

    @property
    def term_coefficients(self) -> np.ndarray:
        return np.fromiter(self.cost.terms.values(), dtype=float, count=len(self.cost.terms))

    def check(self, theta: ParameterSet) -> None:
        if theta.p != self.p:
            raise ValueError(f"ansatz has level {self.p}, parameters have level {theta.p}")

    def level_circuit(self, beta: float, gamma: float) -> Circuit:
        circ = synthesize_phase_circuit(self.cost, beta)
        for q in range(self.num_qubits):
            circ.append(RX(2.0 * gamma, q))
        return circ

    def circuit(self, theta: ParameterSet) -> Circuit:
        """Full gate-level circuit: Hadamards, then ``p`` cost/mixer levels."""
        self.check(theta)
        circ = Circuit(self.num_qubits, [H(q) for q in range(self.num_qubits)])
        for b, g in zip(theta.beta, theta.gamma):
            circ.extend(self.level_circuit(b, g).gates)
        return circ


@numba.njit(cache=True, fastmath=True)
def _rx_all_qubits(v, c, s, n):
    # v: (batch, 2 * 2**n) float view of complex amplitudes, re/im interleaved;
    # applies RX on every qubit in place
    dim = v.shape[1] // 2
    for b in range(v.shape[0]):
        for q in range(n):
            stride = 1 << (n - 1 - q)
            for base in range(0, dim, 2 * stride):
                for j in range(base, base + stride):
                    x = 2 * j
                    y = 2 * (j + stride)
                    r0, i0, r1, i1 = v[b, x], v[b, x + 1], v[b, y], v[b, y + 1]
                    v[b, x] = c * r0 + s * i1
                    v[b, x + 1] = c * i0 - s * r1
                    v[b, y] = c * r1 + s * i0
                    v[b, y + 1] = c * i1 - s * r0


def _apply_mixer(psi: np.ndarray, gamma: float, n: int) -> None:
    if not psi.flags.c_contiguous:
        raise ValueError("mixer kernel needs a C-contiguous amplitude array")
    _rx_all_qubits(psi.reshape(-1, 1 << n).view(np.float64), np.cos(gamma), np.sin(gamma), n)


def _evolve(psi: np.ndarray, a: Ansatz, beta: Sequence[float], gamma: Sequence[float]) -> None:
    n = a.num_qubits
    for b, g in zip(beta, gamma):
        psi *= np.exp(-1j * b * a.phase_diagonal)
        _apply_mixer(psi, g, n)


def prepare_state(a: Ansatz, theta: ParameterSet, *, use_gates: bool = False) -> Statevector:
    """QAOA state ``prod_i U_mixer(gamma_i) U_cost(beta_i) |+>^N``.

    The default path multiplies by the precomputed cost diagonal; ``use_gates``
    runs the synthesised gate circuit instead (slower, for cross-checks).
    """
    a.check(theta)
    if use_gates:
        psi = np.zeros(1 << a.num_qubits, dtype=np.complex128)
        psi[0] = 1.0
        for g in a.circuit(theta).gates:
            apply_gate_array(psi, g, a.num_qubits)
        return Statevector(psi)
    psi = Statevector.plus(a.num_qubits).amplitudes
    _evolve(psi, a, theta.beta, theta.gamma)
    return Statevector(psi)


def exact_expectation(a: Ansatz, theta: ParameterSet) -> float:
    return float(prepare_state(a, theta).probabilities() @ a.diagonal)


def _shot_estimates(probs: np.ndarray, diag: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum(axis=-1, keepdims=True)
    counts = rng.multinomial(shots, probs)
    return counts @ diag / shots


def estimate_expectation(a: Ansatz, theta: ParameterSet, shots: int, seed=None) -> float:
    """Sample mean of the cost over ``shots`` measurements of the QAOA state."""
    if shots < 1:
        raise ValueError("shots must be at least 1; use exact_expectation for the exact value")
    probs = prepare_state(a, theta).probabilities()
    return float(_shot_estimates(probs, a.diagonal, shots, np.random.default_rng(seed)))


def _batched(rows: int, width: int) -> list[slice]:
    step = max(1, _BATCH_AMPLITUDES // width)
    return [slice(i, min(i + step, rows)) for i in range(0, rows, step)]


def _parameter_shift(a: Ansatz, theta: ParameterSet,
                     measure: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Per-gate parameter-shift gradient.

    A gate ``exp(-i s t P / 2)`` contributes ``s * (E(+) - E(-)) / 2`` where
    ``E(+/-)`` shifts that gate alone by ``+/- pi / (2 s)``, i.e. inserts
    ``(1 -/+ i P) / sqrt(2)`` next to it. Gates within one cost or mixer layer
    commute, so the insertion is done after the layer. By linearity the
    shifted circuit ends in ``(final -/+ i U_rest P psi) / sqrt(2)``, so only
    ``P psi`` has to be pushed through the remaining layers. ``measure`` maps
    a batch of final states to energies.
    """
    n, p = a.num_qubits, a.p
    dim = 1 << n
    beta, gamma = theta.beta, theta.gamma
    coeffs = a.term_coefficients
    signs = a.term_signs
    n_terms = coeffs.size
    final = prepare_state(a, theta).amplitudes
    grad = np.zeros(2 * p)
    psi = Statevector.plus(n).amplitudes
    root = 0.5**0.5

    def shifted_difference(moved: np.ndarray, start: int) -> np.ndarray:
        _evolve(moved, a, beta[start:], gamma[start:])
        plus = (final - 1j * moved) * root
        minus = (final + 1j * moved) * root
        e = measure(np.concatenate([plus, minus]))
        return e[: moved.shape[0]] - e[moved.shape[0]:]

    for i in range(p):
        psi *= np.exp(-1j * beta[i] * a.phase_diagonal)
        # cost gadget with rotation RZ(2 c beta): s = 2c, contribution c * (E+ - E-)
        diffs = np.empty(n_terms)
        for sl in _batched(n_terms, 2 * dim):
            moved = psi * signs[sl]
            _apply_mixer(moved, gamma[i], n)
            diffs[sl] = shifted_difference(moved, i + 1)
        grad[i] = float(coeffs @ diffs) if n_terms else 0.0

        _apply_mixer(psi, gamma[i], n)
        # mixer rotation RX(2 gamma): s = 2, contribution (E+ - E-)
        total = 0.0
        view = psi.reshape((2,) * n)
        for sl in _batched(n, 2 * dim):
            moved = np.stack([np.flip(view, axis=q).reshape(dim) for q in range(sl.start, sl.stop)])
            total += float(np.sum(shifted_difference(moved, i + 1)))
        grad[p + i] = total
    return grad


def _finite_difference(a: Ansatz, theta: ParameterSet, step: float = FD_STEP) -> np.ndarray:
    v = theta.to_vector()
    grad = np.empty_like(v)
    for j in range(v.size):
        up, down = v.copy(), v.copy()
        up[j] += step
        down[j] -= step
        grad[j] = (exact_expectation(a, ParameterSet.from_vector(up))
                   - exact_expectation(a, ParameterSet.from_vector(down))) / (2 * step)
    return grad


@dataclass
class OptimizerConfig:
    learning_rate: float = 0.05
    momentum: float = 0.9
    max_iterations: int = 500
    shots: int = 0
    gradient_method: GradientMethod = GradientMethod.PARAMETER_SHIFT
    seed: int = 0
    stop_gap: float = 0.75

    def __post_init__(self):
        self.gradient_method = GradientMethod.parse(self.gradient_method)
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")
        if self.shots < 0:
            raise ValueError("shots must be non-negative (0 means exact expectations)")
        if not self.stop_gap >= 0:
            raise ValueError("stop_gap must be non-negative")
        if self.shots and self.gradient_method is GradientMethod.FINITE_DIFFERENCE:
            raise ValueError("finite differences need exact expectations (shots = 0)")


def gradient(a: Ansatz, theta: ParameterSet, cfg: Optional[OptimizerConfig] = None,
             rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Gradient of the energy with respect to ``(beta_1..beta_p, gamma_1..gamma_p)``.

    With ``cfg.shots > 0`` every shifted circuit is measured ``shots`` times and
    the parameter-shift rule is applied to the sample means.
    """
    cfg = cfg or OptimizerConfig()
    a.check(theta)
    if cfg.gradient_method is GradientMethod.FINITE_DIFFERENCE:
        return _finite_difference(a, theta)
    diag = a.diagonal
    if cfg.shots:
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        return _parameter_shift(a, theta, lambda rows: _shot_estimates(np.abs(rows) ** 2, diag, cfg.shots, rng))
    return _parameter_shift(a, theta, lambda rows: (np.abs(rows) ** 2) @ diag)


def prob_valid(s: Statevector, inst: ColoringInstance, mask: Optional[np.ndarray] = None) -> float:
    """Probability that a measurement decodes to a complete proper coloring."""
    if s.num_qubits != inst.num_qubits:
        raise ValueError(f"state has {s.num_qubits} qubits, instance needs {inst.num_qubits}")
    mask = valid_mask(inst) if mask is None else mask
    return float(s.probabilities()[mask].sum())


@dataclass
class IterationRow:
    iter: int
    energy: float
    gap: float
    grad_norm: float
    prob_valid: float
    elapsed_ms: float


CSV_COLUMNS = ("iter", "energy", "gap", "grad_norm", "prob_valid", "elapsed_ms")


@dataclass
class RunRecord:
    rows: list[IterationRow]
    final_parameters: ParameterSet
    top_outcomes: list[tuple[str, float]]
    exact_min: float
    stop_gap: float
    metadata: dict = field(default_factory=dict)

    @property
    def final(self) -> IterationRow:
        return self.rows[-1]

    @property
    def converged(self) -> bool:
        return self.final.gap <= self.stop_gap

    @property
    def iterations_to_threshold(self) -> Optional[int]:
        return self.first_iteration_below(self.stop_gap)

    def first_iteration_below(self, threshold: float) -> Optional[int]:
        """First recorded iteration whose gap is at most ``threshold``, or None."""
        for r in self.rows:
            if r.gap <= threshold:
                return r.iter
        return None

    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.rows])

    def to_csv(self, include_elapsed: bool = True) -> str:
        buf = io.StringIO()
        for key, value in self.metadata.items():
            buf.write(f"# {key}={value}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r.iter, repr(r.energy), repr(r.gap), repr(r.grad_norm), repr(r.prob_valid),
                        f"{r.elapsed_ms:.3f}" if include_elapsed else "0"])
        return buf.getvalue()

    def write_csv(self, path: str | Path, include_elapsed: bool = True) -> None:
        Path(path).write_text(self.to_csv(include_elapsed))


def read_run_csv(path: str | Path) -> tuple[dict, list[IterationRow]]:
    meta: dict = {}
    body = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
        else:
            body.append(line)
    rows = [IterationRow(int(r["iter"]), float(r["energy"]), float(r["gap"]), float(r["grad_norm"]),
                         float(r["prob_valid"]), float(r["elapsed_ms"]))
            for r in csv.DictReader(body)]
    return meta, rows


def top_outcomes(s: Statevector, count: int = 16) -> list[tuple[str, float]]:
    probs = s.probabilities()
    order = np.argsort(-probs, kind="stable")[:count]
    return [(format(int(i), f"0{s.num_qubits}b"), float(probs[i])) for i in order]


def optimize(a: Ansatz, cfg: OptimizerConfig, instance: Optional[ColoringInstance] = None,
             initial: Optional[ParameterSet] = None,
             callback: Optional[Callable[[IterationRow], None]] = None) -> RunRecord:
    """Nesterov-momentum gradient descent on the QAOA energy.

    ``v <- mu v - eta grad E(theta + mu v)``, ``theta <- theta + v``. Angles
    start uniform in ``[0, 0.1)`` (seeded by ``cfg.seed``) unless ``initial``
    is given. Stops once ``energy - exact_min <= cfg.stop_gap`` or after
    ``cfg.max_iterations`` updates. The energy column is always the exact
    expectation; shots only affect the gradient.
    """
    init_seq, shot_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    shot_rng = np.random.default_rng(shot_seq)
    if initial is None:
        theta = np.random.default_rng(init_seq).uniform(0.0, 0.1, size=a.num_parameters)
    else:
        a.check(initial)
        theta = initial.to_vector()
    exact_min = float(a.diagonal.min())
    mask = valid_mask(instance) if instance is not None else None
    velocity = np.zeros_like(theta)
    rows: list[IterationRow] = []
    start = time.perf_counter()

    for it in range(cfg.max_iterations + 1):
        params = ParameterSet.from_vector(theta)
        state = prepare_state(a, params)
        energy = float(state.probabilities() @ a.diagonal)
        gap = energy - exact_min
        pv = float(state.probabilities()[mask].sum()) if mask is not None else float("nan")
        done = gap <= cfg.stop_gap or it == cfg.max_iterations
        if done:
            grad_norm = float("nan")
        else:
            lookahead = ParameterSet.from_vector(theta + cfg.momentum * velocity)
            g = gradient(a, lookahead, cfg, shot_rng)
            grad_norm = float(np.linalg.norm(g))
        row = IterationRow(it, energy, gap, grad_norm, pv, 1e3 * (time.perf_counter() - start))
        rows.append(row)
        if callback is not None:
            callback(row)
        if done:
            break
        velocity = cfg.momentum * velocity - cfg.learning_rate * g
        theta = theta + velocity

    final = ParameterSet.from_vector(theta)
    meta = {
        "num_qubits": a.num_qubits,
        "p": a.p,
        **{k: (v.value if isinstance(v, enum.Enum) else v) for k, v in asdict(cfg).items()},
    }
    if instance is not None:
        meta = {"encoding": instance.encoding.value, "k": instance.k, "n": instance.graph.n,
                "edges": ";".join(f"{u}-{v}" for u, v in instance.graph.edges), **meta}
    return RunRecord(rows, final, top_outcomes(prepare_state(a, final)), exact_min, cfg.stop_gap, meta)
