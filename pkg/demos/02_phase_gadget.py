"""Compiling exp(-i t Z0 Z1 Z2 Z3) into CNOTs and one RZ.

A weight-w Pauli-Z term needs a CNOT ladder that folds the parity onto the last
qubit, a single RZ and the mirrored ladder. The script prints the circuit, its
depth, and its distance from the exact diagonal unitary.
"""

import numpy as np

from qaoa_coloring.hamiltonian import ZPolynomial
from qaoa_coloring.simulator import circuit_unitary, synthesize_phase_circuit

t = 0.37
term = ZPolynomial.z(4, 0, 1, 2, 3, coeff=1.0)
circuit = synthesize_phase_circuit(term, t)
print(circuit.dump())
print(f"CNOTs: {circuit.count('CX')}, RZ: {circuit.count('RZ')}, depth: {circuit.depth()}")

exact = np.diag(np.exp(-1j * t * term.diagonal()))
print(f"max entry error vs exact exponential: {np.abs(circuit_unitary(circuit) - exact).max():.1e}")

# a whole cost Hamiltonian is one gadget per term
mixed = ZPolynomial(4, {(0,): 0.5, (1, 3): -1.2, (0, 1, 2, 3): 0.8}, 3.0)
full = synthesize_phase_circuit(mixed, t)
exact = np.diag(np.exp(-1j * t * (mixed.diagonal() - mixed.constant)))
print(f"\n3-term polynomial: {len(full)} gates, depth {full.depth()}, "
      f"error {np.abs(circuit_unitary(full) - exact).max():.1e}")
