"""Two ways to put a 3-coloring problem on qubits.

Builds the 4-node reference graph, encodes it once with one indicator qubit per
(node, color) pair and once with a binary color code per node, and checks that
the zero-energy states of each Hamiltonian are exactly the proper colorings.
"""

import numpy as np

from qaoa_coloring.graphlib import Graph, proper_colorings, reference_instance
from qaoa_coloring.hamiltonian import ColoringInstance, Encoding, format_zpolynomial

graph, k = reference_instance("A")
print(f"graph A: {graph.n} nodes, edges {graph.edges}, k = {k}")
print(f"proper colorings by enumeration: {len(proper_colorings(graph, k))}\n")

for encoding in Encoding:
    inst = ColoringInstance.unit_excitation(graph, k, encoding)
    h = inst.hamiltonian()
    diag = h.diagonal()
    ground = np.flatnonzero(diag == diag.min())
    decoded = sorted(inst.decoder().decode_index(i) for i in ground)
    print(f"{encoding.value:>7}: {inst.num_qubits} qubits, {len(h.terms)} Pauli-Z terms, degree {h.degree}")
    print(f"         {ground.size} ground states at energy {diag.min():g}, "
          f"first excitation at {np.unique(diag)[1]:g}")
    print(f"         ground states decode to the proper colorings: {decoded == proper_colorings(graph, k)}")

# the binary Hamiltonian for a single edge with four colors, written out term by term
edge = ColoringInstance(Graph(2, ((0, 1),)), 4)
print("\nsingle edge, k = 4, binary encoding (coefficient then qubits):")
print(format_zpolynomial(edge.hamiltonian()))
