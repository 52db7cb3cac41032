#!/usr/bin/env python3
"""Exact rational linear algebra: the kernel everything else runs on.

Echelon forms, kernels, exact solving, characteristic polynomials and
the primary decomposition over Q.  Irreducible factors of degree >= 2
are never split; their primary components are pooled into a residual.
"""

from fractions import Fraction

from operad_forge import Matrix, char_poly, kernel, rational_eigen_split, rref, solve

m = Matrix.from_rows([[1, 2, 1], [2, 4, 0], [0, 0, 3]])
red, pivots, rk = rref(m)
print("matrix:", m.to_lists())
print("rref:", red.to_lists())
print("pivots:", pivots, "rank:", rk)

print("\nkernel of [[1, 1]]:", kernel(Matrix.from_rows([[1, 1]])).basis.to_lists())
print("solve 2x = 3 exactly:", solve(Matrix.from_rows([[2]]), (3,)))

rot = Matrix.from_rows([[0, -1], [1, 0]])
print("\ncharacteristic polynomial of a rotation:", char_poly(rot))
split = rational_eigen_split(rot)
print("rational eigenvalues:", [(str(lam), s.dim) for lam, s in split.pairs])
print("residual dimension (t^2 + 1 has no rational root):",
      split.residual.dim)

jordan = Matrix.from_rows([[3, 1], [0, 3]])
split = rational_eigen_split(jordan)
print("\nJordan block J_2(3): generalized eigenspace dims:",
      [(str(lam), s.dim) for lam, s in split.pairs])

mixed = Matrix.from_rows([[2, 0, 0], [0, 0, -1], [0, 1, 0]])
split = rational_eigen_split(mixed)
print("mixed matrix: rational part",
      [(str(lam), s.dim) for lam, s in split.pairs],
      "residual dim", split.residual.dim)
