"""Dense statevector simulation and phase-gadget synthesis.

Amplitude index ``x`` is the big-endian bitstring of the basis state: qubit 0
is the most significant bit. Array kernels accept a leading batch axis so
several states can be pushed through the same gates at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .hamiltonian import MAX_QUBITS, ZPolynomial


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    theta: Optional[float] = None

    def __str__(self):
        if self.name in ("RZ", "RX"):
            return f"{self.name} {self.theta!r} {self.qubits[0]}"
        if self.name == "CX":
            return f"CX {self.qubits[0]} {self.qubits[1]}"
        return f"{self.name} {self.qubits[0]}"


def H(q: int) -> Gate:
    return Gate("H", (q,))


def RX(theta: float, q: int) -> Gate:
    return Gate("RX", (q,), float(theta))


def RZ(theta: float, q: int) -> Gate:
    return Gate("RZ", (q,), float(theta))


def CNOT(control: int, target: int) -> Gate:
    if control == target:
        raise ValueError("CNOT control and target must differ")
    return Gate("CX", (control, target))


@dataclass
class Circuit:
    num_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def append(self, gate: Gate) -> "Circuit":
        _check_qubits(gate, self.num_qubits)
        self.gates.append(gate)
        return self

    def extend(self, gates: Iterable[Gate]) -> "Circuit":
        for g in gates:
            self.append(g)
        return self

    def __len__(self):
        return len(self.gates)

    def count(self, name: str) -> int:
        return sum(g.name == name for g in self.gates)

    def depth(self) -> int:
        return circuit_depth(self)

    def dump(self) -> str:
        return "".join(f"{g}\n" for g in self.gates)


def parse_circuit(text: str, num_qubits: int) -> Circuit:
    c = Circuit(num_qubits)
    for line in text.splitlines():
        tok = line.split()
        if not tok:
            continue
        name = tok[0]
        if name in ("RZ", "RX"):
            c.append(Gate(name, (int(tok[2]),), float(tok[1])))
        elif name == "CX":
            c.append(CNOT(int(tok[1]), int(tok[2])))
        elif name == "H":
            c.append(H(int(tok[1])))
        else:
            raise ValueError(f"unknown gate {name!r}")
    return c


def _check_qubits(gate: Gate, n: int) -> None:
    for q in gate.qubits:
        if not 0 <= q < n:
            raise IndexError(f"{gate.name} acts on qubit {q}, circuit has {n} qubits")
    if len(set(gate.qubits)) != len(gate.qubits):
        raise ValueError(f"{gate.name} repeats a qubit")


class Statevector:
    """Normalised complex amplitudes over ``2**num_qubits`` basis states."""

    def __init__(self, amplitudes: np.ndarray):
        amp = np.asarray(amplitudes, dtype=np.complex128)
        n = int(amp.size).bit_length() - 1
        if amp.ndim != 1 or amp.size != 1 << n:
            raise ValueError("amplitude vector length must be a power of two")
        self.num_qubits = n
        self.amplitudes = amp

    @classmethod
    def zero(cls, n: int) -> "Statevector":
        return cls.basis(n, 0)

    @classmethod
    def basis(cls, n: int, index: int | str) -> "Statevector":
        _check_width(n)
        if isinstance(index, str):
            index = int(index, 2)
        amp = np.zeros(1 << n, dtype=np.complex128)
        amp[index] = 1.0
        return cls(amp)

    @classmethod
    def plus(cls, n: int) -> "Statevector":
        _check_width(n)
        return cls(np.full(1 << n, (1 << n) ** -0.5, dtype=np.complex128))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _check_width(n: int) -> None:
    if n > MAX_QUBITS:
        raise ValueError(
            f"{n} qubits need {16 * 2**n / 2**30:.1f} GiB of amplitudes; the simulator is capped at {MAX_QUBITS}"
        )


def _split(psi: np.ndarray, q: int, n: int) -> np.ndarray:
    return psi.reshape(-1, 1 << q, 2, 1 << (n - q - 1))


def apply_rx_inplace(psi: np.ndarray, theta: float, q: int, n: int) -> None:
    v = _split(psi, q, n)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    a0 = v[:, :, 0, :].copy()
    a1 = v[:, :, 1, :]
    v[:, :, 0, :] = c * a0 - 1j * s * a1
    v[:, :, 1, :] = c * a1 - 1j * s * a0


def apply_rz_inplace(psi: np.ndarray, theta: float, q: int, n: int) -> None:
    v = _split(psi, q, n)
    v[:, :, 0, :] *= np.exp(-0.5j * theta)
    v[:, :, 1, :] *= np.exp(0.5j * theta)


def apply_h_inplace(psi: np.ndarray, q: int, n: int) -> None:
    v = _split(psi, q, n)
    a0 = v[:, :, 0, :].copy()
    a1 = v[:, :, 1, :]
    v[:, :, 0, :] = (a0 + a1) * 0.5**0.5
    v[:, :, 1, :] = (a0 - a1) * 0.5**0.5


def apply_cnot_inplace(psi: np.ndarray, control: int, target: int, n: int) -> None:
    v = psi.reshape((-1,) + (2,) * n)
    sel0 = [slice(None)] * (n + 1)
    sel1 = [slice(None)] * (n + 1)
    sel0[control + 1] = sel1[control + 1] = 1
    sel0[target + 1], sel1[target + 1] = 0, 1
    sel0, sel1 = tuple(sel0), tuple(sel1)
    tmp = v[sel0].copy()
    v[sel0] = v[sel1]
    v[sel1] = tmp


def apply_gate_array(psi: np.ndarray, gate: Gate, n: int) -> None:
    """Apply ``gate`` in place to amplitudes of shape ``(..., 2**n)``."""
    _check_qubits(gate, n)
    if gate.name == "RX":
        apply_rx_inplace(psi, gate.theta, gate.qubits[0], n)
    elif gate.name == "RZ":
        apply_rz_inplace(psi, gate.theta, gate.qubits[0], n)
    elif gate.name == "H":
        apply_h_inplace(psi, gate.qubits[0], n)
    elif gate.name == "CX":
        apply_cnot_inplace(psi, gate.qubits[0], gate.qubits[1], n)
    else:
        raise ValueError(f"unknown gate {gate.name!r}")


def apply_gate(s: Statevector, g: Gate) -> Statevector:
    amp = s.amplitudes.copy()
    apply_gate_array(amp, g, s.num_qubits)
    return Statevector(amp)


def apply_circuit(s: Statevector, c: Circuit) -> Statevector:
    if c.num_qubits != s.num_qubits:
        raise ValueError(f"circuit has {c.num_qubits} qubits, state has {s.num_qubits}")
    amp = s.amplitudes.copy()
    for g in c.gates:
        apply_gate_array(amp, g, c.num_qubits)
    return Statevector(amp)


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of ``c``; only sensible for a handful of qubits."""
    dim = 1 << c.num_qubits
    cols = np.eye(dim, dtype=np.complex128)
    for g in c.gates:
        apply_gate_array(cols, g, c.num_qubits)
    # row j now holds U|j>
    return cols.T.copy()


def _gadget_levels(level: list[int], subset: tuple[int, ...]) -> list[int]:
    """Qubit levels after appending the gadget for ``subset`` (ASAP layering)."""
    level = list(level)
    pairs = list(zip(subset, subset[1:]))
    for a, b in pairs:
        level[a] = level[b] = max(level[a], level[b]) + 1
    level[subset[-1]] += 1
    for a, b in reversed(pairs):
        level[a] = level[b] = max(level[a], level[b]) + 1
    return level


def schedule_terms(h: ZPolynomial) -> list[tuple[int, ...]]:
    """Order the commuting terms of ``h`` greedily to keep the circuit shallow.

    At each step the term whose gadget would finish earliest is placed next;
    ties go to heavier terms, then to canonical order.
    """
    level = [0] * h.num_qubits
    remaining = list(h.terms)
    order = []
    while remaining:
        best_key, best_i, best_level = None, 0, level
        for i, subset in enumerate(remaining):
            after = _gadget_levels(level, subset)
            key = (max(after[q] for q in subset), -len(subset))
            if best_key is None or key < best_key:
                best_key, best_i, best_level = key, i, after
        order.append(remaining.pop(best_i))
        level = best_level
    return order


def synthesize_phase_circuit(h: ZPolynomial, angle: float, schedule: bool = True) -> Circuit:
    """Gate circuit for ``exp(-i * angle * (h - h.constant))``.

    Each term ``c * Z_{q1}...Z_{qw}`` becomes a CNOT ladder folding the parity
    of ``q1..qw`` onto ``qw``, an ``RZ(2 * angle * c)`` on ``qw`` and the
    mirrored ladder. The terms commute, so with ``schedule`` they are emitted
    in the shallow order of :func:`schedule_terms`; otherwise canonical order.
    """
    circ = Circuit(h.num_qubits)
    for subset in schedule_terms(h) if schedule else list(h.terms):
        coeff = h.terms[subset]
        ladder = [CNOT(subset[i], subset[i + 1]) for i in range(len(subset) - 1)]
        circ.extend(ladder)
        circ.append(RZ(2.0 * angle * coeff, subset[-1]))
        circ.extend(reversed(ladder))
    return circ


def apply_diagonal_phase(s: Statevector, h: ZPolynomial, angle: float) -> Statevector:
    if h.num_qubits != s.num_qubits:
        raise ValueError(f"polynomial has {h.num_qubits} qubits, state has {s.num_qubits}")
    return Statevector(s.amplitudes * np.exp(-1j * angle * h.diagonal()))


def expectation(s: Statevector, h: ZPolynomial) -> float:
    if h.num_qubits != s.num_qubits:
        raise ValueError(f"polynomial has {h.num_qubits} qubits, state has {s.num_qubits}")
    return float(s.probabilities() @ h.diagonal())


def sample_bitstrings(s: Statevector, shots: int, seed=None) -> np.ndarray:
    """Draw ``shots`` basis-state indices i.i.d. from the Born distribution."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    p = s.probabilities()
    p = p / p.sum()
    rng = np.random.default_rng(seed)
    return rng.choice(p.size, size=shots, p=p)


def index_to_bits(index: int, n: int) -> str:
    return format(int(index), f"0{n}b")


def circuit_depth(c: Circuit) -> int:
    """ASAP layer count: each gate lands one layer after the latest of its qubits."""
    level = [0] * c.num_qubits
    for g in c.gates:
        layer = max(level[q] for q in g.qubits) + 1
        for q in g.qubits:
            level[q] = layer
    return max(level, default=0)
