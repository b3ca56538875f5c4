"""Diagonal cost Hamiltonians for k-coloring as polynomials in Pauli-Z.

Bit/spin convention: a bit ``x_q = 1`` corresponds to the ``Z_q = -1``
eigenstate, so ``x_q = (1 - Z_q) / 2``. Qubit 0 is the most significant bit
of a basis-state index.
"""

from __future__ import annotations

import enum
import itertools
import math
import numbers
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .graphlib import Graph

MAX_QUBITS = 28
_PRUNE_TOL = 1e-12


class ZPolynomial:
    """Real linear combination of Pauli-Z products plus a constant.

    ``terms`` maps a sorted tuple of qubit indices to its coefficient. The form
    is canonical: equal subsets are merged and (near-)zero coefficients pruned.
    Instances are treated as immutable.
    """

    __slots__ = ("num_qubits", "terms", "constant")

    def __init__(self, num_qubits: int, terms: Optional[Mapping[Iterable[int], float]] = None,
                 constant: float = 0.0):
        if num_qubits < 0:
            raise ValueError("num_qubits must be non-negative")
        acc: dict[tuple[int, ...], float] = {}
        const = float(constant)
        for subset, coeff in (terms or {}).items():
            key = _reduce_subset(subset)
            for q in key:
                if not 0 <= q < num_qubits:
                    raise ValueError(f"qubit {q} out of range for {num_qubits} qubits")
            if not key:
                const += float(coeff)
            else:
                acc[key] = acc.get(key, 0.0) + float(coeff)
        self.num_qubits = int(num_qubits)
        self.terms = {s: c for s, c in sorted(acc.items(), key=lambda kv: (len(kv[0]), kv[0]))
                      if abs(c) > _PRUNE_TOL}
        self.constant = const if abs(const) > _PRUNE_TOL else 0.0

    @classmethod
    def identity(cls, num_qubits: int, coeff: float = 1.0) -> "ZPolynomial":
        return cls(num_qubits, constant=coeff)

    @classmethod
    def z(cls, num_qubits: int, *qubits: int, coeff: float = 1.0) -> "ZPolynomial":
        return cls(num_qubits, {qubits: coeff})

    @classmethod
    def bit(cls, num_qubits: int, q: int) -> "ZPolynomial":
        """The 0/1 variable ``x_q = (1 - Z_q) / 2``."""
        return cls(num_qubits, {(q,): -0.5}, 0.5)

    def __add__(self, other):
        if isinstance(other, numbers.Real):
            return ZPolynomial(self.num_qubits, self.terms, self.constant + other)
        self._check(other)
        terms = dict(self.terms)
        for s, c in other.terms.items():
            terms[s] = terms.get(s, 0.0) + c
        return ZPolynomial(self.num_qubits, terms, self.constant + other.constant)

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, numbers.Real):
            return ZPolynomial(self.num_qubits, {s: c * other for s, c in self.terms.items()},
                               self.constant * other)
        self._check(other)
        a = {(): self.constant, **self.terms}
        b = {(): other.constant, **other.terms}
        out: dict[tuple[int, ...], float] = {}
        for sa, ca in a.items():
            if ca == 0.0:
                continue
            for sb, cb in b.items():
                if cb == 0.0:
                    continue
                key = tuple(sorted(set(sa) ^ set(sb)))
                out[key] = out.get(key, 0.0) + ca * cb
        return ZPolynomial(self.num_qubits, out)

    __rmul__ = __mul__

    def __eq__(self, other):
        return (isinstance(other, ZPolynomial) and self.num_qubits == other.num_qubits
                and self.constant == other.constant and self.terms == other.terms)

    def __repr__(self):
        return f"ZPolynomial(num_qubits={self.num_qubits}, terms={len(self.terms)}, constant={self.constant})"

    def _check(self, other):
        if not isinstance(other, ZPolynomial):
            raise TypeError(f"cannot combine ZPolynomial with {type(other).__name__}")
        if other.num_qubits != self.num_qubits:
            raise ValueError("qubit counts differ")

    @property
    def degree(self) -> int:
        return max((len(s) for s in self.terms), default=0)

    def diagonal(self) -> np.ndarray:
        """Eigenvalues on all ``2**N`` basis states (big-endian indexing)."""
        n = self.num_qubits
        if n > MAX_QUBITS:
            raise ValueError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit cap")
        signs = _z_signs(n)
        out = np.full(1 << n, self.constant, dtype=np.float64)
        for subset, coeff in self.terms.items():
            out += coeff * _parity_sign(signs, subset)
        return out

    def term_signs(self, subset: Sequence[int]) -> np.ndarray:
        return _parity_sign(_z_signs(self.num_qubits), tuple(subset)).astype(np.float64)


def _reduce_subset(subset: Iterable[int]) -> tuple[int, ...]:
    # Z_q Z_q = 1, so repeated indices cancel in pairs
    odd: set[int] = set()
    for q in subset:
        odd ^= {int(q)}
    return tuple(sorted(odd))


def _z_signs(n: int) -> list[np.ndarray]:
    idx = np.arange(1 << n, dtype=np.int64)
    return [(1 - 2 * ((idx >> (n - 1 - q)) & 1)).astype(np.int8) for q in range(n)]


def _parity_sign(signs: list[np.ndarray], subset: tuple[int, ...]) -> np.ndarray:
    acc = signs[subset[0]].copy()
    for q in subset[1:]:
        acc *= signs[q]
    return acc


def eval_diagonal(h: ZPolynomial, x: Sequence[int] | str) -> float:
    """Eigenvalue of ``h`` on the computational basis state ``x``."""
    bits = [int(b) for b in x]
    if len(bits) != h.num_qubits:
        raise ValueError(f"bitstring has length {len(bits)}, polynomial acts on {h.num_qubits} qubits")
    total = h.constant
    for subset, coeff in h.terms.items():
        parity = sum(bits[q] for q in subset) & 1
        total += -coeff if parity else coeff
    return total


def to_qubo(h: ZPolynomial) -> tuple[np.ndarray, float]:
    """Symmetric ``Q`` and ``offset`` with ``x @ Q @ x + offset == eval_diagonal(h, x)``."""
    if h.degree > 2:
        raise ValueError(f"unsupported degree {h.degree}: QUBO form needs terms of weight <= 2")
    n = h.num_qubits
    q = np.zeros((n, n))
    offset = h.constant
    for subset, c in h.terms.items():
        offset += c
        if len(subset) == 1:
            (i,) = subset
            q[i, i] += -2.0 * c
        else:
            i, j = subset
            q[i, i] += -2.0 * c
            q[j, j] += -2.0 * c
            q[i, j] += 2.0 * c
            q[j, i] += 2.0 * c
    return q, offset


def format_zpolynomial(h: ZPolynomial) -> str:
    lines = [f"N {h.num_qubits}"]
    if h.constant:
        lines.append(repr(h.constant))
    for subset, coeff in h.terms.items():
        lines.append(" ".join([repr(coeff), *map(str, subset)]))
    return "\n".join(lines) + "\n"


def parse_zpolynomial(text: str) -> ZPolynomial:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or rows[0][0] != "N" or len(rows[0]) != 2:
        raise ValueError("expected header line 'N <num_qubits>'")
    n = int(rows[0][1])
    terms: dict[tuple[int, ...], float] = {}
    const = 0.0
    for row in rows[1:]:
        coeff = float(row[0])
        subset = tuple(int(t) for t in row[1:])
        if not subset:
            const += coeff
        else:
            if list(subset) != sorted(set(subset)):
                raise ValueError(f"qubit indices must be strictly ascending: {row}")
            terms[subset] = terms.get(subset, 0.0) + coeff
    return ZPolynomial(n, terms, const)


def save_zpolynomial(h: ZPolynomial, path: str | Path) -> None:
    Path(path).write_text(format_zpolynomial(h))


def load_zpolynomial(path: str | Path) -> ZPolynomial:
    return parse_zpolynomial(Path(path).read_text())


class Encoding(str, enum.Enum):
    ONEHOT = "onehot"
    BINARY = "binary"

    @classmethod
    def parse(cls, value: "str | Encoding") -> "Encoding":
        if isinstance(value, Encoding):
            return value
        key = value.strip().lower().replace("-", "").replace("_", "")
        aliases = {"onehot": cls.ONEHOT, "standard": cls.ONEHOT, "qubo": cls.ONEHOT,
                   "binary": cls.BINARY, "spaceefficient": cls.BINARY, "log": cls.BINARY}
        if key not in aliases:
            raise ValueError(f"unknown encoding {value!r}")
        return aliases[key]


def bits_per_node(k: int, encoding: Encoding) -> int:
    if k < 2:
        raise ValueError(f"need at least 2 colors, got k={k}")
    return k if Encoding.parse(encoding) is Encoding.ONEHOT else math.ceil(math.log2(k))


@dataclass(frozen=True)
class ColoringInstance:
    graph: Graph
    k: int
    encoding: Encoding = Encoding.BINARY
    weight_C: float = 1.0
    weight_D: float = 1.0
    weight_P: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "encoding", Encoding.parse(self.encoding))
        if self.k < 2:
            raise ValueError(f"need at least 2 colors, got k={self.k}")
        for name in ("weight_C", "weight_D", "weight_P"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def bits_per_node(self) -> int:
        return bits_per_node(self.k, self.encoding)

    @property
    def num_qubits(self) -> int:
        return self.graph.n * self.bits_per_node

    @classmethod
    def unit_excitation(cls, graph: Graph, k: int, encoding: "Encoding | str") -> "ColoringInstance":
        """Instance whose weights make every violated constraint cost exactly 1.

        One-hot already has this at ``C = D = 1``. The binary edge term costs
        ``4**m`` per monochromatic edge and the code penalty ``2**m`` per
        disallowed code, so those weights are scaled down accordingly.
        """
        C, D, P = unit_excitation_weights(k, encoding)
        return cls(graph, k, Encoding.parse(encoding), C, D, P)

    def with_encoding(self, encoding: "Encoding | str") -> "ColoringInstance":
        return ColoringInstance(self.graph, self.k, Encoding.parse(encoding),
                                self.weight_C, self.weight_D, self.weight_P)

    def hamiltonian(self) -> ZPolynomial:
        if self.encoding is Encoding.ONEHOT:
            return encode_onehot(self)
        return encode_binary(self)

    def decoder(self) -> "ColorDecoder":
        return ColorDecoder(self.encoding, self.graph.n, self.k)


def unit_excitation_weights(k: int, encoding: "Encoding | str") -> tuple[float, float, float]:
    if Encoding.parse(encoding) is Encoding.ONEHOT:
        return 1.0, 1.0, 1.0
    m = bits_per_node(k, Encoding.BINARY)
    return 1.0, 4.0**-m, 2.0**-m


def encode_onehot(inst: ColoringInstance) -> ZPolynomial:
    """Standard QUBO penalty Hamiltonian on ``n*k`` qubits.

    Qubit ``v*k + i`` is the indicator of node ``v`` taking color ``i``. The
    eigenvalue on bitstring ``x`` is
    ``C * sum_v (1 - sum_i x[v,i])**2 + D * sum_{(v,w) in E} sum_i x[v,i] x[w,i]``
    with every undirected edge counted once.
    """
    if inst.encoding is not Encoding.ONEHOT:
        raise ValueError("encode_onehot needs a one-hot instance")
    g, k = inst.graph, inst.k
    n_q = g.n * k
    x = [[ZPolynomial.bit(n_q, v * k + i) for i in range(k)] for v in range(g.n)]
    h = ZPolynomial(n_q)
    for v in range(g.n):
        slack = 1.0 - sum(x[v], ZPolynomial(n_q))
        h = h + inst.weight_C * (slack * slack)
    for v, w in g.edges:
        for i in range(k):
            h = h + inst.weight_D * (x[v][i] * x[w][i])
    return h


def _code_projector(n_q: int, qubits: Sequence[int], code: Sequence[int]) -> ZPolynomial:
    # prod_l (1 + (-1)^{a_l} Z_l): equals 2^m on the matching code, 0 elsewhere
    out = ZPolynomial.identity(n_q)
    for q, a in zip(qubits, code):
        out = out * ZPolynomial(n_q, {(q,): -1.0 if a else 1.0}, 1.0)
    return out


def encode_binary(inst: ColoringInstance) -> ZPolynomial:
    """Space-efficient Hamiltonian on ``n * ceil(log2 k)`` qubits.

    Node ``v`` owns qubits ``v*m .. v*m + m - 1`` read as a big-endian color
    code. Each edge contributes ``D * sum_a P_v(a) P_w(a)`` over every m-bit
    code ``a``, where ``P_v(a) = prod_l (1 + (-1)^{a_l} Z_{v,l})``; a
    monochromatic edge therefore costs ``4**m * D``. When ``k`` is not a power
    of two each node also gets ``P * sum_{a >= k} P_v(a)``, costing ``2**m * P``
    on a disallowed code (for ``k = 3`` this is ``P (1 - Z_{v,1})(1 - Z_{v,2})``).
    """
    if inst.encoding is not Encoding.BINARY:
        raise ValueError("encode_binary needs a binary instance")
    g, k = inst.graph, inst.k
    m = bits_per_node(k, Encoding.BINARY)
    n_q = g.n * m
    qubits = [list(range(v * m, (v + 1) * m)) for v in range(g.n)]
    codes = list(itertools.product((0, 1), repeat=m))

    # every edge shares the same polynomial shape; build it once on 2m qubits
    local = ZPolynomial(2 * m)
    for a in codes:
        local = local + _code_projector(2 * m, range(m), a) * _code_projector(2 * m, range(m, 2 * m), a)

    h = ZPolynomial(n_q)
    for v, w in g.edges:
        remap = qubits[v] + qubits[w]
        h = h + inst.weight_D * ZPolynomial(
            n_q, {tuple(remap[q] for q in s): c for s, c in local.terms.items()}, local.constant)

    disallowed = codes[k:]
    if disallowed:
        for v in range(g.n):
            pen = ZPolynomial(n_q)
            for a in disallowed:
                pen = pen + _code_projector(n_q, qubits[v], a)
            h = h + inst.weight_P * pen
    return h


@dataclass(frozen=True)
class ColorDecoder:
    """Maps bitstrings (or basis-state indices) to per-node colors.

    One-hot blocks decode to their single set position, anything else to
    ``None``. Binary blocks decode to their big-endian value when it is below
    ``k``, else ``None``.
    """

    encoding: Encoding
    n: int
    k: int
    m: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "encoding", Encoding.parse(self.encoding))
        object.__setattr__(self, "m", bits_per_node(self.k, self.encoding))

    @property
    def num_qubits(self) -> int:
        return self.n * self.m

    def decode(self, x: Sequence[int] | str) -> tuple[Optional[int], ...]:
        bits = [int(b) for b in x]
        if len(bits) != self.num_qubits:
            raise ValueError(f"expected {self.num_qubits} bits, got {len(bits)}")
        out: list[Optional[int]] = []
        for v in range(self.n):
            block = bits[v * self.m:(v + 1) * self.m]
            if self.encoding is Encoding.ONEHOT:
                out.append(block.index(1) if sum(block) == 1 else None)
            else:
                b = int("".join(map(str, block)), 2)
                out.append(b if b < self.k else None)
        return tuple(out)

    def decode_index(self, index: int) -> tuple[Optional[int], ...]:
        return self.decode(format(int(index), f"0{self.num_qubits}b"))

    def color_table(self) -> np.ndarray:
        """Per-node color of every basis state, ``-1`` for missing; shape ``(2**N, n)``."""
        n_q = self.num_qubits
        if n_q > MAX_QUBITS:
            raise ValueError(f"{n_q} qubits exceeds the {MAX_QUBITS}-qubit cap")
        idx = np.arange(1 << n_q, dtype=np.int64)
        table = np.empty((idx.size, self.n), dtype=np.int16)
        for v in range(self.n):
            block = (idx >> (n_q - (v + 1) * self.m)) & ((1 << self.m) - 1)
            if self.encoding is Encoding.ONEHOT:
                # bit i of the block (from the left) is color i
                onehot = (block & (block - 1)) == 0
                onehot &= block != 0
                pos = self.m - 1 - np.log2(np.maximum(block, 1)).astype(np.int64)
                table[:, v] = np.where(onehot, pos, -1)
            else:
                table[:, v] = np.where(block < self.k, block, -1)
        return table


def valid_mask(inst: ColoringInstance) -> np.ndarray:
    """Boolean mask over basis states that decode to a complete proper coloring."""
    table = inst.decoder().color_table()
    ok = np.all(table >= 0, axis=1)
    for u, v in inst.graph.edges:
        ok &= table[:, u] != table[:, v]
    return ok
