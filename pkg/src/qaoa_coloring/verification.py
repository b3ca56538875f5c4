"""Fast invariant checks behind ``qaoa-coloring verify``.

Each check returns ``(passed, detail)``. Encoders are looked up through the
``hamiltonian`` module at call time so a patched encoder is what gets checked.
"""

from __future__ import annotations

import time
from typing import Callable

import numpy as np

from . import hamiltonian
from .graphlib import Graph, all_graphs, conflict_counts
from .hamiltonian import ColoringInstance, Encoding, ZPolynomial
from .qaoa import Ansatz, GradientMethod, OptimizerConfig, ParameterSet, gradient
from .simulator import circuit_unitary, synthesize_phase_circuit


def onehot_direct_energy(g: Graph, k: int, bits: np.ndarray, C: float = 1.0, D: float = 1.0) -> np.ndarray:
    """Penalty function evaluated straight from its 0/1 definition, for every row of ``bits``."""
    x = bits.reshape(bits.shape[0], g.n, k).astype(np.int64)
    out = C * ((1 - x.sum(axis=2)) ** 2).sum(axis=1)
    for u, v in g.edges:
        out = out + D * (x[:, u, :] * x[:, v, :]).sum(axis=1)
    return out


def all_bitstrings(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.int8)


def binary_ground_states_match(g: Graph, k: int) -> bool:
    """Zero-energy states decode one-to-one onto proper colorings; the rest cost >= 1."""
    inst = ColoringInstance(g, k, Encoding.BINARY)
    diag = hamiltonian.encode_binary(inst).diagonal()
    zero = np.flatnonzero(np.abs(diag) < 1e-9)
    if np.any(np.delete(diag, zero) < 1.0 - 1e-9) or np.any(diag < -1e-9):
        return False
    decoder = inst.decoder()
    decoded = {decoder.decode_index(i) for i in zero}
    if len(decoded) != zero.size or any(c is None for col in decoded for c in col):
        return False
    counts = conflict_counts(g, k)
    proper = set()
    for i in np.flatnonzero(counts == 0):
        digits, r = [], int(i)
        for _ in range(g.n):
            r, d = divmod(r, k)
            digits.append(d)
        proper.add(tuple(reversed(digits)))
    return decoded == proper


def check_ground_states(max_n: int = 4, ks=(2, 3, 4)) -> tuple[bool, str]:
    total = 0
    for n in range(1, max_n + 1):
        for g in all_graphs(n):
            for k in ks:
                total += 1
                if not binary_ground_states_match(g, k):
                    return False, f"mismatch on n={n}, k={k}, edges={g.edges}"
    return True, f"{total} (graph, k) pairs"


def check_onehot_equivalence(max_n: int = 3, ks=(2, 3, 4)) -> tuple[bool, str]:
    total = 0
    for n in range(1, max_n + 1):
        for g in all_graphs(n):
            for k in ks:
                if n * k > 12:
                    continue
                diag = hamiltonian.encode_onehot(ColoringInstance(g, k, Encoding.ONEHOT)).diagonal()
                direct = onehot_direct_energy(g, k, all_bitstrings(n * k))
                if not np.array_equal(diag, direct.astype(float)):
                    return False, f"mismatch on n={n}, k={k}, edges={g.edges}"
                total += 1
    return True, f"{total} (graph, k) pairs"


def random_zpolynomial(rng: np.random.Generator, n: int, max_terms: int = 4) -> ZPolynomial:
    terms = {}
    for _ in range(int(rng.integers(1, max_terms + 1))):
        w = int(rng.integers(1, n + 1))
        subset = tuple(sorted(rng.choice(n, size=w, replace=False).tolist()))
        terms[subset] = float(rng.uniform(-1, 1))
    return ZPolynomial(n, terms, float(rng.uniform(-1, 1)))


def max_synthesis_error(h: ZPolynomial, angle: float) -> float:
    """Max entry error between the gate circuit and the exact diagonal, global phase removed."""
    u = circuit_unitary(synthesize_phase_circuit(h, angle))
    exact = np.diag(np.exp(-1j * angle * h.diagonal()))
    # align the global phase on the first diagonal entry
    phase = exact[0, 0] / u[0, 0]
    return float(np.abs(u * phase - exact).max())


def check_synthesis(trials: int = 50, seed: int = 7) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 5))
        worst = max(worst, max_synthesis_error(random_zpolynomial(rng, n), float(rng.uniform(-np.pi, np.pi))))
    return worst <= 1e-10, f"max entry error {worst:.2e} over {trials} circuits"


def check_gradients(trials: int = 20, seed: int = 11) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 7))
        p = int(rng.integers(1, 4))
        a = Ansatz(random_zpolynomial(rng, n, 5), p)
        theta = ParameterSet.from_vector(rng.uniform(-np.pi, np.pi, 2 * p))
        ps = gradient(a, theta, OptimizerConfig(gradient_method=GradientMethod.PARAMETER_SHIFT))
        fd = gradient(a, theta, OptimizerConfig(gradient_method=GradientMethod.FINITE_DIFFERENCE))
        worst = max(worst, float(np.abs(ps - fd).max()))
    return worst <= 1e-5, f"max |PS - FD| {worst:.2e} over {trials} points"


def check_prob_valid_uniform(max_n: int = 3, ks=(2, 4)) -> tuple[bool, str]:
    from .qaoa import prob_valid
    from .simulator import Statevector

    for n in range(1, max_n + 1):
        for g in all_graphs(n):
            for k in ks:
                inst = ColoringInstance(g, k, Encoding.BINARY)
                proper = int(np.count_nonzero(conflict_counts(g, k) == 0))
                got = prob_valid(Statevector.plus(inst.num_qubits), inst)
                if abs(got - proper / 2**inst.num_qubits) > 1e-12:
                    return False, f"n={n}, k={k}: {got} vs {proper}/{2**inst.num_qubits}"
    return True, "uniform state matches counting oracle"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "binary ground states = proper colorings (n<=4)": check_ground_states,
    "one-hot diagonal = direct penalty function": check_onehot_equivalence,
    "phase-gadget synthesis = exact exponential": check_synthesis,
    "parameter shift = finite difference": check_gradients,
    "prob_valid of |+> = counting oracle": check_prob_valid_uniform,
}


def run_checks(echo: Callable[[str], None] = print) -> bool:
    ok_all = True
    width = max(len(name) for name in CHECKS)
    for name, fn in CHECKS.items():
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        ok_all &= ok
        echo(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}  ({time.perf_counter() - t0:.1f}s)")
    return ok_all
