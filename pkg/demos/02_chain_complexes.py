#!/usr/bin/env python3
"""Chain complexes: homology, shifts, cones, truncations, tensors,
homotopy solving.

The running conventions: differentials lower degree by one, shifts
twist the differential by (-1)^n, and the mapping cone of eta: B -> A
is A_i + B_{i-1} with d(a, b) = (d a + eta b, -d b).
"""

from fractions import Fraction

from operad_forge import (
    ChainComplex,
    ChainMap,
    Matrix,
    canonical_truncation,
    check_homotopy,
    homology_dims,
    homotopy_solve,
    mapping_cone,
    shift,
    tensor,
)

# 0 -> Q -> Q -> 0 with d = multiplication by 2: exact, so no homology
doubling = ChainComplex({1: 1, 0: 1}, {1: Matrix.from_rows([[2]])})
print("homology of (Q --2--> Q):", homology_dims(doubling))

circleish = ChainComplex({1: 2, 0: 1})
print("zero differential keeps everything:", homology_dims(circleish))

cone, incl, proj = mapping_cone(ChainMap.identity(circleish))
print("cone of the identity is acyclic:", homology_dims(cone))

print("shift by 1 twists the sign:", shift(doubling, 1).d(2).to_lists())

trunc, inclusion = canonical_truncation(doubling, 1)
print("truncating the exact complex at its top degree kills it:",
      trunc.is_zero())

square = tensor(circleish, circleish)
print("tensor square dims (Kunneth):", dict(sorted(square.dims.items())))

# homotopy solving: null-homotopic maps produce explicit h with
# f - g = dh + hd, rechecked exactly
f = ChainMap(doubling, doubling,
             {1: Matrix.from_rows([[2]]), 0: Matrix.from_rows([[2]])})
zero = ChainMap.zero_map(doubling, doubling)
h = homotopy_solve(f, zero)
print("homotopy blocks:", {d: m.to_lists() for d, m in h.items()})
print("identity f = dh + hd holds:", check_homotopy(f, zero, h))
