"""Exact linear algebra over the rational numbers.

Everything downstream (chain complexes, group actions, operads, weight
decompositions) reduces to solving, kernels, images and eigenspace
splittings of matrices with ``fractions.Fraction`` entries.  All
arithmetic is exact; no floating point is ever introduced.

Matrices are immutable (tuple-of-rows) and hashable.  Subspaces carry a
canonical reduced-echelon basis so equality of subspaces is syntactic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

F0 = Fraction(0)
F1 = Fraction(1)


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


class Matrix:
    """Dense rational matrix; rows*cols may be zero."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows, cols, data):
        if rows < 0 or cols < 0:
            raise ValueError("negative matrix dimensions")
        data = tuple(tuple(_frac(x) for x in row) for row in data)
        if len(data) != rows or any(len(row) != cols for row in data):
            raise ValueError(f"matrix data does not match shape {rows}x{cols}")
        self.rows = rows
        self.cols = cols
        self.data = data

    # -- constructors ----------------------------------------------------

    @classmethod
    def zeros(cls, rows, cols):
        row = (F0,) * cols
        return cls(rows, cols, (row,) * rows)

    @classmethod
    def identity(cls, n):
        return cls(n, n, tuple(tuple(F1 if i == j else F0 for j in range(n))
                               for i in range(n)))

    @classmethod
    def diagonal(cls, entries):
        entries = [_frac(x) for x in entries]
        n = len(entries)
        return cls(n, n, tuple(tuple(entries[i] if i == j else F0 for j in range(n))
                               for i in range(n)))

    @classmethod
    def from_rows(cls, rows):
        rows = [list(r) for r in rows]
        ncols = len(rows[0]) if rows else 0
        return cls(len(rows), ncols, rows)

    @classmethod
    def from_cols(cls, cols, rows=None):
        cols = [list(c) for c in cols]
        if rows is None:
            if not cols:
                raise ValueError("from_cols with no columns needs explicit row count")
            rows = len(cols[0])
        return cls(rows, len(cols),
                   [[cols[j][i] for j in range(len(cols))] for i in range(rows)])

    @classmethod
    def column(cls, vec):
        return cls(len(vec), 1, [[x] for x in vec])

    # -- basics -----------------------------------------------------------

    def __eq__(self, other):
        return (isinstance(other, Matrix) and self.rows == other.rows
                and self.cols == other.cols and self.data == other.data)

    def __hash__(self):
        return hash((self.rows, self.cols, self.data))

    def __repr__(self):
        return f"Matrix({self.rows}x{self.cols})"

    def __getitem__(self, idx):
        i, j = idx
        return self.data[i][j]

    def is_zero(self):
        return all(x == 0 for row in self.data for x in row)

    def col(self, j):
        return tuple(row[j] for row in self.data)

    def row(self, i):
        return self.data[i]

    def columns(self):
        return [self.col(j) for j in range(self.cols)]

    def transpose(self):
        return Matrix(self.cols, self.rows,
                      tuple(tuple(self.data[i][j] for i in range(self.rows))
                            for j in range(self.cols)))

    def __neg__(self):
        return Matrix(self.rows, self.cols,
                      tuple(tuple(-x for x in row) for row in self.data))

    def __add__(self, other):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch in matrix addition")
        return Matrix(self.rows, self.cols,
                      tuple(tuple(a + b for a, b in zip(r1, r2))
                            for r1, r2 in zip(self.data, other.data)))

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = _frac(c)
        return Matrix(self.rows, self.cols,
                      tuple(tuple(c * x for x in row) for row in self.data))

    def __mul__(self, other):
        if isinstance(other, Matrix):
            if self.cols != other.rows:
                raise ValueError(
                    f"shape mismatch {self.rows}x{self.cols} * {other.rows}x{other.cols}")
            out = [[F0] * other.cols for _ in range(self.rows)]
            odata = other.data
            for i, row in enumerate(self.data):
                orow = out[i]
                for k, a in enumerate(row):
                    if a == 0:
                        continue
                    brow = odata[k]
                    for j, b in enumerate(brow):
                        if b != 0:
                            orow[j] += a * b
            return Matrix(self.rows, other.cols, out)
        return self.scale(other)

    __rmul__ = scale

    def apply(self, vec):
        """Matrix times column vector, as a tuple."""
        if len(vec) != self.cols:
            raise ValueError("vector length mismatch")
        out = [F0] * self.rows
        for k, x in enumerate(vec):
            if x == 0:
                continue
            x = _frac(x)
            for i in range(self.rows):
                a = self.data[i][k]
                if a != 0:
                    out[i] += a * x
        return tuple(out)

    def hstack(self, other):
        if self.rows != other.rows:
            raise ValueError("row mismatch in hstack")
        return Matrix(self.rows, self.cols + other.cols,
                      tuple(r1 + r2 for r1, r2 in zip(self.data, other.data)))

    def vstack(self, other):
        if self.cols != other.cols:
            raise ValueError("column mismatch in vstack")
        return Matrix(self.rows + other.rows, self.cols, self.data + other.data)

    def submatrix(self, row_idx, col_idx):
        return Matrix(len(row_idx), len(col_idx),
                      tuple(tuple(self.data[i][j] for j in col_idx) for i in row_idx))

    def to_lists(self):
        return [list(row) for row in self.data]


def block_matrix(blocks):
    """Assemble a matrix from a 2d list of Matrix blocks (shapes must agree)."""
    rows = []
    for brow in blocks:
        height = brow[0].rows
        if any(b.rows != height for b in brow):
            raise ValueError("inconsistent block heights")
        for i in range(height):
            row = []
            for b in brow:
                row.extend(b.data[i])
            rows.append(tuple(row))
    ncols = len(rows[0]) if rows else sum(b.cols for b in blocks[0])
    return Matrix(len(rows), ncols, rows)


def rref(m: Matrix):
    """Reduced row echelon form.

    Returns ``(R, pivots, rank)`` where ``pivots`` is the tuple of pivot
    column indices.
    """
    data = [list(row) for row in m.data]
    pivots = []
    r = 0
    for c in range(m.cols):
        pivot_row = None
        for i in range(r, m.rows):
            if data[i][c] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        data[r], data[pivot_row] = data[pivot_row], data[r]
        pv = data[r][c]
        if pv != 1:
            inv = F1 / pv
            data[r] = [x * inv for x in data[r]]
        for i in range(m.rows):
            if i != r and data[i][c] != 0:
                f = data[i][c]
                row_r = data[r]
                data[i] = [a - f * b for a, b in zip(data[i], row_r)]
        pivots.append(c)
        r += 1
        if r == m.rows:
            break
    return Matrix(m.rows, m.cols, data), tuple(pivots), r


def rank(m: Matrix) -> int:
    return rref(m)[2]


@dataclass(frozen=True)
class Subspace:
    """Subspace of Q^n with a canonical reduced-echelon basis.

    ``basis`` is an ``ambient_dim x dim`` matrix whose columns are the
    basis vectors; two equal subspaces have identical bases.
    """

    ambient_dim: int
    basis: Matrix

    @classmethod
    def from_spanning(cls, ambient_dim, vectors):
        """Canonicalize a spanning set (an iterable of length-n vectors)."""
        vecs = [tuple(v) for v in vectors]
        if not vecs:
            return cls(ambient_dim, Matrix.zeros(ambient_dim, 0))
        red, pivots, rk = rref(Matrix.from_rows(vecs))
        cols = [tuple(red.data[i][j] for j in range(ambient_dim)) for i in range(rk)]
        return cls(ambient_dim, Matrix.from_cols(cols, rows=ambient_dim))

    @classmethod
    def zero(cls, ambient_dim):
        return cls(ambient_dim, Matrix.zeros(ambient_dim, 0))

    @classmethod
    def full(cls, ambient_dim):
        return cls(ambient_dim, Matrix.identity(ambient_dim))

    @property
    def dim(self):
        return self.basis.cols

    def contains(self, vec):
        return solve(self.basis, vec) is not None

    def coordinates(self, vec):
        return solve(self.basis, vec)

    def sum(self, other):
        if self.ambient_dim != other.ambient_dim:
            raise ValueError("ambient dimension mismatch")
        return Subspace.from_spanning(
            self.ambient_dim, self.basis.columns() + other.basis.columns())


def kernel(m: Matrix) -> Subspace:
    """Null space of m, with canonical basis."""
    red, pivots, rk = rref(m)
    pivot_set = set(pivots)
    free = [j for j in range(m.cols) if j not in pivot_set]
    vecs = []
    for fcol in free:
        v = [F0] * m.cols
        v[fcol] = F1
        for r, pcol in enumerate(pivots):
            v[pcol] = -red.data[r][fcol]
        vecs.append(tuple(v))
    return Subspace.from_spanning(m.cols, vecs)


def image(m: Matrix) -> Subspace:
    """Column space of m, with canonical basis."""
    return Subspace.from_spanning(m.rows, m.columns())


def solve(m: Matrix, b):
    """Solve m x = b exactly; return a solution tuple or None.

    ``None`` means b is not in the image of m (used upstream as the
    "obstruction is nonzero" signal).
    """
    b = tuple(_frac(x) for x in b)
    if len(b) != m.rows:
        raise ValueError("right-hand side has wrong length")
    aug = m.hstack(Matrix.column(b))
    red, pivots, rk = rref(aug)
    if pivots and pivots[-1] == m.cols:
        return None
    x = [F0] * m.cols
    for r, pcol in enumerate(pivots):
        x[pcol] = red.data[r][m.cols]
    return tuple(x)


def solve_matrix(m: Matrix, b: Matrix):
    """Solve m X = b columnwise; return X or None if any column fails."""
    if b.rows != m.rows:
        raise ValueError("shape mismatch in solve_matrix")
    aug = m.hstack(b)
    red, pivots, rk = rref(aug)
    if pivots and pivots[-1] >= m.cols:
        return None
    # any pivot beyond m.cols signals inconsistency
    for p in pivots:
        if p >= m.cols:
            return None
    cols = []
    for j in range(b.cols):
        x = [F0] * m.cols
        for r, pcol in enumerate(pivots):
            x[pcol] = red.data[r][m.cols + j]
        cols.append(tuple(x))
    return Matrix.from_cols(cols, rows=m.cols)


# -- characteristic polynomial and primary decomposition -------------------


def char_poly(m: Matrix):
    """Characteristic polynomial det(t*I - m) by Faddeev-LeVerrier.

    Returned as a tuple of coefficients, lowest degree first; monic of
    degree n.
    """
    if m.rows != m.cols:
        raise ValueError("characteristic polynomial of a non-square matrix")
    n = m.rows
    coeffs = [F0] * (n + 1)
    coeffs[n] = F1
    mk = Matrix.zeros(n, n)
    ident = Matrix.identity(n)
    for k in range(1, n + 1):
        mk = m * mk + ident.scale(coeffs[n - k + 1])
        am = m * mk
        tr = sum((am.data[i][i] for i in range(n)), F0)
        coeffs[n - k] = -tr / k
    return tuple(coeffs)


def poly_eval(coeffs, x):
    acc = F0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def poly_eval_matrix(coeffs, m: Matrix) -> Matrix:
    n = m.rows
    acc = Matrix.zeros(n, n)
    ident = Matrix.identity(n)
    for c in reversed(coeffs):
        acc = m * acc + ident.scale(c)
    return acc


def _poly_divide_linear(coeffs, root):
    """Divide polynomial by (t - root); requires root to be a root."""
    n = len(coeffs) - 1
    out = [F0] * n
    acc = F0
    for k in range(n, 0, -1):
        acc = coeffs[k] + acc * root
        out[k - 1] = acc
    rem = coeffs[0] + acc * root
    if rem != 0:
        raise ValueError("not a root")
    return out


def _divisors(n):
    n = abs(n)
    out = set()
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.add(d)
            out.add(n // d)
        d += 1
    return sorted(out)


def rational_roots(coeffs):
    """All rational roots of the polynomial with multiplicities.

    Classical p/q divisor test on the cleared-denominator polynomial.
    Returns a dict root -> multiplicity.
    """
    coeffs = [(_frac(c)) for c in coeffs]
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    roots = {}
    # strip t^e
    zero_mult = 0
    while coeffs and coeffs[0] == 0 and len(coeffs) > 1:
        coeffs.pop(0)
        zero_mult += 1
    if zero_mult:
        roots[F0] = zero_mult
    if len(coeffs) <= 1:
        return roots
    denom = lcm(*[c.denominator for c in coeffs]) if len(coeffs) > 1 else 1
    ints = [int(c * denom) for c in coeffs]
    candidates = set()
    lead = ints[-1]
    const = ints[0]
    for p in _divisors(const):
        for q in _divisors(lead):
            candidates.add(Fraction(p, q))
            candidates.add(Fraction(-p, q))
    for cand in sorted(candidates):
        while len(coeffs) > 1 and poly_eval(coeffs, cand) == 0:
            coeffs = _poly_divide_linear(coeffs, cand)
            roots[cand] = roots.get(cand, 0) + 1
    return roots


@dataclass(frozen=True)
class EigenSplit:
    """Primary decomposition over Q.

    ``pairs`` lists (rational eigenvalue, generalized eigenspace); the
    primary components of irreducible factors of degree >= 2 are pooled
    into ``residual``.
    """

    pairs: tuple
    residual: Subspace


def rational_eigen_split(m: Matrix) -> EigenSplit:
    if m.rows != m.cols:
        raise ValueError("eigen split of a non-square matrix")
    n = m.rows
    poly = list(char_poly(m))
    roots = rational_roots(poly)
    ident = Matrix.identity(n)
    pairs = []
    remaining = list(poly)
    for lam in sorted(roots):
        mult = roots[lam]
        shifted = m - ident.scale(lam)
        power = ident
        for _ in range(mult):
            power = power * shifted
        space = kernel(power)
        pairs.append((lam, space))
        for _ in range(mult):
            remaining = _poly_divide_linear(remaining, lam)
    if len(remaining) == 1:
        residual = Subspace.zero(n)
    else:
        residual = kernel(poly_eval_matrix(remaining, m))
    total = sum(s.dim for _, s in pairs) + residual.dim
    if total != n:
        raise AssertionError("primary components do not fill the ambient space")
    return EigenSplit(tuple(pairs), residual)
