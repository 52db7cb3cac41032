"""Shared test utilities: random complexes and small oracles."""

import random
from fractions import Fraction

from operad_forge.chain import ChainComplex, ChainMap
from operad_forge.qlinalg import F0, F1, Matrix


def random_invertible(rng, n, bound=2):
    """Random invertible integer matrix (unit upper x unit lower triangular)."""
    upper = [[F1 if i == j else (Fraction(rng.randint(-bound, bound)) if j > i else F0)
              for j in range(n)] for i in range(n)]
    lower = [[F1 if i == j else (Fraction(rng.randint(-bound, bound)) if j < i else F0)
              for j in range(n)] for i in range(n)]
    return Matrix(n, n, upper) * Matrix(n, n, lower)


def random_complex(rng, degree_span=(0, 3), max_cells=3):
    """Random finite complex: spheres and disks in a random basis.

    Built as a sum of elementary summands, then conjugated by a random
    invertible change of basis per degree, so d*d = 0 holds exactly
    while the matrices look generic.
    """
    lo, hi = degree_span
    dims = {}
    pieces = []  # (kind, degree): sphere contributes degree; disk degrees (k+1, k)
    for _ in range(rng.randint(1, max_cells)):
        k = rng.randint(lo, hi - 1)
        if rng.random() < 0.5:
            pieces.append(("sphere", rng.randint(lo, hi)))
        else:
            pieces.append(("disk", k))
    for kind, k in pieces:
        dims[k] = dims.get(k, 0) + 1
        if kind == "disk":
            dims[k + 1] = dims.get(k + 1, 0) + 1
    diff = {}
    offsets = {}
    counters = {k: 0 for k in dims}
    spots = {}
    for idx, (kind, k) in enumerate(pieces):
        spots[idx] = {}
        spots[idx][k] = counters[k]
        counters[k] += 1
        if kind == "disk":
            spots[idx][k + 1] = counters[k + 1]
            counters[k + 1] += 1
    for i in sorted(dims):
        rows, cols = dims.get(i - 1, 0), dims[i]
        if rows and cols:
            grid = [[F0] * cols for _ in range(rows)]
            for idx, (kind, k) in enumerate(pieces):
                if kind == "disk" and k + 1 == i:
                    grid[spots[idx][k]][spots[idx][k + 1]] = F1
            diff[i] = Matrix(rows, cols, grid)
    basis = {i: random_invertible(rng, n) for i, n in dims.items()}
    inv = {i: invert(basis[i]) for i in dims}
    newdiff = {}
    for i, m in diff.items():
        newdiff[i] = inv[i - 1] * m * basis[i]
    return ChainComplex(dims, newdiff)


def invert(m):
    from operad_forge.qlinalg import solve_matrix
    out = solve_matrix(m, Matrix.identity(m.rows))
    if out is None:
        raise ValueError("matrix not invertible")
    return out


def random_chain_map(rng, src, dst, bound=2):
    """A random chain map src -> dst (solves the commuting constraints)."""
    from operad_forge.chain import homotopy_solve
    # build as d h + h d for random h (these are always chain maps,
    # null homotopic ones), plus optionally identity-like block when the
    # complexes coincide.
    blocks = {}
    for i in src.dims:
        rows, cols = dst.dim(i + 1), src.dim(i)
        if rows and cols:
            blocks[i] = Matrix(rows, cols,
                               [[Fraction(rng.randint(-bound, bound))
                                 for _ in range(cols)] for _ in range(rows)])
    out = {}
    for i in set(src.dims) | set(dst.dims):
        acc = Matrix.zeros(dst.dim(i), src.dim(i))
        if i in blocks:
            acc = acc + dst.d(i + 1) * blocks[i]
        if i - 1 in blocks:
            acc = acc + blocks[i - 1] * src.d(i)
        out[i] = acc
    return ChainMap(src, dst, out)
