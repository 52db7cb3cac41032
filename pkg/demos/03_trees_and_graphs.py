#!/usr/bin/env python3
"""The combinatorial backbone: reduced labelled trees and stable graphs.

Reduced trees (no unary vertices, leaves labelled bijectively) index the
free operad; stable genus-decorated graphs index the free modular
operad.  Both are enumerated up to isomorphism with automorphism data.
"""

from operad_forge import (
    enumerate_stable_graphs,
    enumerate_trees,
    graph_automorphisms,
    modular_dimension,
)

for n in range(1, 6):
    print(f"reduced trees with {n} labelled leaves: {len(enumerate_trees(n))}")

print("\nthe four shapes on three leaves:")
for t in enumerate_trees(3):
    print("  vertices with valences", t.vertex_valences())

print("\nstable graphs by (genus, legs):")
for (g, l) in [(0, 3), (0, 4), (1, 1), (1, 2), (0, 5), (2, 0)]:
    graphs = enumerate_stable_graphs(g, l)
    auts = [len(graph_automorphisms(gr)) for gr in graphs]
    print(f"  ({g},{l})  modular dimension {modular_dimension(g, l)}: "
          f"{len(graphs)} graphs, |Aut| up to {max(auts)}")

print("\ngenus-1 one-leg graphs in full:")
for gr in enumerate_stable_graphs(1, 1):
    print(f"  genera={gr.genera} edges={gr.edges} "
          f"|Aut|={len(graph_automorphisms(gr))}")
