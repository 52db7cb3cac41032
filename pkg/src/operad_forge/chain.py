"""Finite-type chain complexes of rational vector spaces.

Complexes have a differential of degree -1 and finite support; d*d = 0
is checked at construction time.  Tensor products follow the Koszul
sign rule, and mapping cones use d(a, b) = (d a + eta b, -d b).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .qlinalg import (
    F0,
    F1,
    Matrix,
    Subspace,
    image,
    kernel,
    rank,
    solve,
    solve_matrix,
)


class ChainComplex:
    """Graded rational vector space with a degree -1 differential.

    ``dims`` maps degree -> dimension (only nonzero degrees stored);
    ``diff`` maps degree i -> matrix of d_i : degree i -> degree i-1.
    Zero differentials may be omitted from ``diff``.
    """

    __slots__ = ("dims", "diff")

    def __init__(self, dims, diff=None, check=True):
        self.dims = {int(k): int(v) for k, v in dims.items() if v}
        diff = diff or {}
        self.diff = {}
        for i, m in diff.items():
            i = int(i)
            if m.is_zero():
                continue
            if m.cols != self.dims.get(i, 0) or m.rows != self.dims.get(i - 1, 0):
                raise ValueError(f"differential at degree {i} has wrong shape")
            self.diff[i] = m
        if check:
            for i in list(self.diff):
                if i - 1 in self.diff:
                    if not (self.diff[i - 1] * self.diff[i]).is_zero():
                        raise ValueError(f"d*d != 0 at degree {i}")

    # -- basics -----------------------------------------------------------

    @classmethod
    def zero(cls):
        return cls({})

    @classmethod
    def concentrated(cls, degree, dim):
        return cls({degree: dim})

    def dim(self, i):
        return self.dims.get(i, 0)

    @property
    def support(self):
        return tuple(sorted(self.dims))

    @property
    def total_dim(self):
        return sum(self.dims.values())

    def is_zero(self):
        return not self.dims

    def d(self, i):
        """Differential leaving degree i, zero-filled."""
        if i in self.diff:
            return self.diff[i]
        return Matrix.zeros(self.dim(i - 1), self.dim(i))

    def __eq__(self, other):
        return (isinstance(other, ChainComplex) and self.dims == other.dims
                and self.diff == other.diff)

    def __hash__(self):
        return hash((tuple(sorted(self.dims.items())),
                     tuple(sorted(self.diff.items()))))

    def __repr__(self):
        dims = ", ".join(f"{i}:{n}" for i, n in sorted(self.dims.items()))
        return f"ChainComplex({{{dims}}})"


class ChainMap:
    """Degreewise linear map commuting with the differentials."""

    __slots__ = ("src", "dst", "blocks")

    def __init__(self, src, dst, blocks, check=True):
        self.src = src
        self.dst = dst
        self.blocks = {}
        for i, m in blocks.items():
            i = int(i)
            if m.cols != src.dim(i) or m.rows != dst.dim(i):
                raise ValueError(f"chain map block at degree {i} has wrong shape")
            if not m.is_zero():
                self.blocks[i] = m
        if check:
            self.assert_chain()

    def assert_chain(self):
        for i in set(self.src.dims) | set(self.dst.dims):
            lhs = self.dst.d(i) * self.block(i)
            rhs = self.block(i - 1) * self.src.d(i)
            if lhs != rhs:
                raise ValueError(f"map does not commute with d at degree {i}")

    @classmethod
    def identity(cls, c):
        return cls(c, c, {i: Matrix.identity(n) for i, n in c.dims.items()},
                   check=False)

    @classmethod
    def zero_map(cls, src, dst):
        return cls(src, dst, {}, check=False)

    def block(self, i):
        if i in self.blocks:
            return self.blocks[i]
        return Matrix.zeros(self.dst.dim(i), self.src.dim(i))

    def compose(self, other):
        """self o other."""
        if other.dst is not self.src and other.dst != self.src:
            raise ValueError("composition mismatch")
        blocks = {}
        for i in set(other.blocks) | set(self.blocks):
            blocks[i] = self.block(i) * other.block(i)
        return ChainMap(other.src, self.dst, blocks, check=False)

    def __add__(self, other):
        blocks = {i: self.block(i) + other.block(i)
                  for i in set(self.blocks) | set(other.blocks)}
        return ChainMap(self.src, self.dst, blocks, check=False)

    def __sub__(self, other):
        blocks = {i: self.block(i) - other.block(i)
                  for i in set(self.blocks) | set(other.blocks)}
        return ChainMap(self.src, self.dst, blocks, check=False)

    def scale(self, c):
        return ChainMap(self.src, self.dst,
                        {i: m.scale(c) for i, m in self.blocks.items()}, check=False)

    def __neg__(self):
        return self.scale(-1)

    def __eq__(self, other):
        if not isinstance(other, ChainMap):
            return NotImplemented
        if self.src != other.src or self.dst != other.dst:
            return False
        for i in set(self.blocks) | set(other.blocks):
            if self.block(i) != other.block(i):
                return False
        return True

    def __hash__(self):
        return hash((self.src, self.dst, tuple(sorted(self.blocks.items()))))

    def is_zero(self):
        return not self.blocks

    def is_iso(self):
        for i in set(self.src.dims) | set(self.dst.dims):
            if self.src.dim(i) != self.dst.dim(i):
                return False
            if rank(self.block(i)) != self.src.dim(i):
                return False
        return True

    def __repr__(self):
        return f"ChainMap({self.src!r} -> {self.dst!r})"


# -- homology ---------------------------------------------------------------


@dataclass
class HomologyRecord:
    """Homology of a complex with chosen cycle data.

    Per degree: the cycle and boundary subspaces, a canonical list of
    representative cycles (the reduced-echelon lift of a basis of
    Z/B), and the projection matrix sending cycle-basis coordinates to
    homology coordinates.
    """

    complex: ChainComplex
    dims: dict
    cycles: dict
    boundaries: dict
    representatives: dict
    projections: dict

    def dim(self, i):
        return self.dims.get(i, 0)

    def rep_matrix(self, i):
        """Ambient x dim(H_i) matrix of representative cycles."""
        reps = self.representatives.get(i, [])
        return Matrix.from_cols(reps, rows=self.complex.dim(i))

    def classify(self, i, vec):
        """Homology coordinates of an ambient cycle; None if not a cycle."""
        z = self.cycles[i].basis if i in self.cycles else Matrix.zeros(self.complex.dim(i), 0)
        coords = solve(z, vec)
        if coords is None:
            return None
        proj = self.projections.get(i)
        if proj is None:
            return ()
        return proj.apply(coords)

    def classify_matrix(self, i):
        """Matrix H_i <- ambient_i on cycles (zero columns off Z would be wrong;
        only apply to cycle vectors)."""
        n = self.complex.dim(i)
        cols = []
        for j in range(n):
            e = [F0] * n
            e[j] = F1
            c = self.classify(i, tuple(e))
            cols.append(c if c is not None else (F0,) * self.dim(i))
        return Matrix.from_cols(cols, rows=self.dim(i))

    def homology_complex(self):
        return ChainComplex({i: d for i, d in self.dims.items()})


def homology(c: ChainComplex) -> HomologyRecord:
    dims, cycles, boundaries, reps, projections = {}, {}, {}, {}, {}
    for i in c.support:
        z = kernel(c.d(i))
        b = image(c.d(i + 1)) if c.dim(i + 1) else Subspace.zero(c.dim(i))
        cycles[i] = z
        boundaries[i] = b
        h = z.dim - b.dim
        if h < 0:
            raise AssertionError("boundaries exceed cycles")
        dims[i] = h
        if h == 0:
            continue
        # choose representatives: echelon-greedy cycles independent mod B
        chosen = []
        current = b.basis
        rk = current.cols
        for j in range(z.dim):
            cand = z.basis.col(j)
            trial = current.hstack(Matrix.column(list(cand)))
            if rank(trial) > rk:
                chosen.append(cand)
                current = trial
                rk += 1
            if len(chosen) == h:
                break
        reps[i] = chosen
        # projection on cycle coordinates: solve [B | R] (x, y) = z
        br = b.basis.hstack(Matrix.from_cols(chosen, rows=c.dim(i)))
        proj_cols = []
        for j in range(z.dim):
            sol = solve(br, z.basis.col(j))
            proj_cols.append(tuple(sol[b.dim:]))
        projections[i] = Matrix.from_cols(proj_cols, rows=h)
    dims = {i: d for i, d in dims.items() if d}
    return HomologyRecord(c, dims, cycles, boundaries, reps, projections)


def homology_dims(c: ChainComplex) -> dict:
    return dict(homology(c).dims)


def induced_map(f: ChainMap, hsrc: HomologyRecord = None, hdst: HomologyRecord = None):
    """Induced map on homology, as degree -> matrix."""
    hsrc = hsrc or homology(f.src)
    hdst = hdst or homology(f.dst)
    out = {}
    for i in set(hsrc.dims) | set(hdst.dims):
        cols = []
        for rep in hsrc.representatives.get(i, []):
            img = f.block(i).apply(rep)
            cls = hdst.classify(i, img)
            if cls is None:
                raise AssertionError("chain map sent a cycle to a non-cycle")
            cols.append(cls)
        out[i] = Matrix.from_cols(cols, rows=hdst.dim(i)) if cols else \
            Matrix.zeros(hdst.dim(i), 0)
    return out


def is_weak_equivalence(f: ChainMap) -> bool:
    hs, hd = homology(f.src), homology(f.dst)
    if hs.dims != hd.dims:
        return False
    ind = induced_map(f, hs, hd)
    return all(m.rows == m.cols and rank(m) == m.rows for m in ind.values())


# -- functors ---------------------------------------------------------------


def shift(c: ChainComplex, n: int) -> ChainComplex:
    """Degree shift: result_i = c_{i-n}, differential scaled by (-1)^n."""
    sign = F1 if n % 2 == 0 else -F1
    return ChainComplex(
        {i + n: d for i, d in c.dims.items()},
        {i + n: m.scale(sign) for i, m in c.diff.items()},
        check=False)


def shift_map(f: ChainMap, n: int) -> ChainMap:
    return ChainMap(shift(f.src, n), shift(f.dst, n),
                    {i + n: m for i, m in f.blocks.items()}, check=False)


def mapping_cone(eta: ChainMap):
    """Mapping cone of eta : B -> A.

    Returns (cone, inclusion of A, projection onto B[1]); the cone in
    degree i is A_i + B_{i-1} with d(a, b) = (d a + eta b, -d b).
    """
    a, b = eta.dst, eta.src
    degrees = set(a.dims) | {i + 1 for i in b.dims}
    dims = {i: a.dim(i) + b.dim(i - 1) for i in degrees}
    diff = {}
    for i in degrees | {i + 1 for i in degrees}:
        rows = dims.get(i - 1, 0)
        cols = dims.get(i, 0)
        if rows == 0 or cols == 0:
            continue
        blocks_top = []
        blocks_bot = []
        blocks_top.append(a.d(i))
        blocks_top.append(eta.block(i - 1))
        blocks_bot.append(Matrix.zeros(b.dim(i - 2), a.dim(i)))
        blocks_bot.append(b.d(i - 1).scale(-1))
        from .qlinalg import block_matrix
        diff[i] = block_matrix([blocks_top, blocks_bot])
    cone = ChainComplex(dims, diff)
    incl = ChainMap(a, cone, {
        i: Matrix.identity(a.dim(i)).vstack(Matrix.zeros(b.dim(i - 1), a.dim(i)))
        for i in a.dims}, check=False)
    bshift = shift(b, 1)
    proj = ChainMap(cone, bshift, {
        i: Matrix.zeros(b.dim(i - 1), a.dim(i)).hstack(Matrix.identity(b.dim(i - 1)))
        for i in degrees if b.dim(i - 1)}, check=False)
    incl.assert_chain()
    proj.assert_chain()
    return cone, incl, proj


def canonical_truncation(c: ChainComplex, n: int):
    """Subcomplex: cycles in degree n, everything above, zero below.

    Returns (truncated complex, inclusion).
    """
    z = kernel(c.d(n))
    dims = {i: d for i, d in c.dims.items() if i > n}
    if z.dim:
        dims[n] = z.dim
    diff = {}
    blocks = {}
    for i, d in dims.items():
        if i > n:
            blocks[i] = Matrix.identity(d)
        else:
            blocks[i] = z.basis
    for i in dims:
        if i - 1 in dims:
            if i - 1 == n:
                m = solve_matrix(z.basis, c.d(i) * blocks[i])
                if m is None:
                    raise AssertionError("differential does not land in cycles")
                diff[i] = m
            else:
                diff[i] = c.d(i)
    trunc = ChainComplex(dims, diff)
    incl = ChainMap(trunc, c, blocks)
    return trunc, incl


def direct_sum(complexes):
    """Direct sum with inclusion and projection chain maps."""
    degrees = set()
    for c in complexes:
        degrees |= set(c.dims)
    dims = {i: sum(c.dim(i) for c in complexes) for i in degrees}
    offsets = {i: [] for i in degrees}
    for i in degrees:
        off = 0
        for c in complexes:
            offsets[i].append(off)
            off += c.dim(i)
    diff = {}
    for i in degrees:
        rows, cols = dims.get(i - 1, 0), dims[i]
        if rows == 0 or cols == 0:
            continue
        grid = [[F0] * cols for _ in range(rows)]
        for k, c in enumerate(complexes):
            m = c.d(i)
            if i - 1 not in offsets:
                continue
            ro, co = offsets[i - 1][k], offsets[i][k]
            for r in range(m.rows):
                for cc in range(m.cols):
                    grid[ro + r][co + cc] = m.data[r][cc]
        diff[i] = Matrix(rows, cols, grid)
    total = ChainComplex(dims, diff, check=False)
    incls, projs = [], []
    for k, c in enumerate(complexes):
        ib, pb = {}, {}
        for i in c.dims:
            n = c.dim(i)
            off = offsets[i][k]
            rowsel = list(range(off, off + n))
            ib[i] = Matrix(dims[i], n,
                           [[F1 if (r in rowsel and r - off == j) else F0
                             for j in range(n)] for r in range(dims[i])])
            pb[i] = ib[i].transpose()
        incls.append(ChainMap(c, total, ib, check=False))
        projs.append(ChainMap(total, c, pb, check=False))
    return total, incls, projs


# -- tensor products --------------------------------------------------------


class TensorData:
    """Tensor product of several complexes with explicit basis labels.

    The basis in total degree n is the list of tuples
    ((d_1, k_1), ..., (d_m, k_m)) with sum d_j = n, ordered
    lexicographically; this ordering is the contract other modules rely
    on for composition tables.
    """

    __slots__ = ("factors", "complex", "_basis", "_index")

    def __init__(self, factors):
        self.factors = tuple(factors)
        self._basis = {}
        self._index = {}
        if any(f.is_zero() for f in self.factors):
            self.complex = ChainComplex.zero()
            return
        per_factor = []
        for f in self.factors:
            pairs = [(d, k) for d in sorted(f.dims) for k in range(f.dim(d))]
            per_factor.append(pairs)
        if not per_factor:
            # empty tensor product: the unit, one dimensional in degree 0
            self._basis[0] = [()]
            self._index[()] = (0, 0)
            self.complex = ChainComplex({0: 1})
            return
        for combo in itertools.product(*per_factor):
            n = sum(d for d, _ in combo)
            self._basis.setdefault(n, []).append(combo)
        for n, items in self._basis.items():
            items.sort()
            for pos, label in enumerate(items):
                self._index[label] = (n, pos)
        dims = {n: len(items) for n, items in self._basis.items()}
        diff = {}
        for n, items in self._basis.items():
            rows = len(self._basis.get(n - 1, []))
            if rows == 0:
                continue
            grid = [[F0] * len(items) for _ in range(rows)]
            for colpos, label in enumerate(items):
                sign = F1
                for j, (d, k) in enumerate(label):
                    fac = self.factors[j]
                    dm = fac.d(d)
                    if not dm.is_zero():
                        for r in range(dm.rows):
                            coef = dm.data[r][k]
                            if coef == 0:
                                continue
                            newlabel = label[:j] + ((d - 1, r),) + label[j + 1:]
                            _, rowpos = self._index[newlabel]
                            grid[rowpos][colpos] += sign * coef
                    if d % 2:
                        sign = -sign
            diff[n] = Matrix(rows, len(items), grid)
        self.complex = ChainComplex(dims, diff)

    def basis(self, degree):
        return self._basis.get(degree, [])

    def index(self, label):
        """(total degree, position) of a basis label."""
        return self._index[label]

    def pair_index(self, degree_pairs):
        return self._index[tuple(degree_pairs)]


def tensor_data(factors) -> TensorData:
    return TensorData(factors)


def tensor(x: ChainComplex, y: ChainComplex) -> ChainComplex:
    return TensorData((x, y)).complex


def koszul_reorder_sign(degrees, perm_images):
    """Sign for reordering tensor factors.

    ``perm_images[p]`` is the target position (0-based) of factor p; the
    sign is the product of (-1)^(deg_p * deg_q) over inverted pairs.
    """
    sign = 1
    m = len(degrees)
    for p in range(m):
        for q in range(p + 1, m):
            if perm_images[p] > perm_images[q] and degrees[p] % 2 and degrees[q] % 2:
                sign = -sign
    return F1 if sign == 1 else -F1


def reorder_map(td: TensorData, perm_images):
    """Chain map permuting tensor factors with Koszul signs.

    Factor p of the source goes to slot ``perm_images[p]`` (0-based) of
    the target tensor product.
    """
    m = len(td.factors)
    target_factors = [None] * m
    for p in range(m):
        target_factors[perm_images[p]] = td.factors[p]
    target = TensorData(tuple(target_factors))
    blocks = {}
    for n, items in td._basis.items():
        rows = len(target.basis(n))
        grid = [[F0] * len(items) for _ in range(rows)]
        for colpos, label in enumerate(items):
            degrees = [d for d, _ in label]
            sign = koszul_reorder_sign(degrees, perm_images)
            newlabel = [None] * m
            for p, entry in enumerate(label):
                newlabel[perm_images[p]] = entry
            _, rowpos = target.index(tuple(newlabel))
            grid[rowpos][colpos] = sign
        blocks[n] = Matrix(rows, len(items), grid)
    return target, ChainMap(td.complex, target.complex, blocks)


def tensor_symmetry(x: ChainComplex, y: ChainComplex) -> ChainMap:
    """The braiding x (x) y -> y (x) x with the Koszul sign."""
    td = TensorData((x, y))
    _, f = reorder_map(td, (1, 0))
    return f


# -- homotopies --------------------------------------------------------------


def homotopy_solve(f: ChainMap, g: ChainMap):
    """Find h with f - g = d h + h d, or None.

    ``h`` is returned as a dict degree -> matrix, h_i : X_i -> Y_{i+1}.
    None is a legitimate outcome: the maps are not chain homotopic.
    """
    if f.src != g.src or f.dst != g.dst:
        raise ValueError("homotopy between maps with different endpoints")
    x, y = f.src, f.dst
    hdegrees = sorted(i for i in x.dims if y.dim(i + 1))
    hoffsets = {}
    total = 0
    for i in hdegrees:
        hoffsets[i] = total
        total += x.dim(i) * y.dim(i + 1)
    rows = []
    rhs = []
    for i in set(x.dims) | set(y.dims):
        target = f.block(i) - g.block(i)
        ni, mi = y.dim(i), x.dim(i)
        if ni == 0 or mi == 0:
            if not target.is_zero():
                return None
            continue
        dy = y.d(i + 1)
        dx = x.d(i)
        for r in range(ni):
            for c in range(mi):
                row = [F0] * total
                # (d h_i)[r, c] = sum_k dy[r, k] h_i[k, c]
                if i in hoffsets:
                    base = hoffsets[i]
                    yk = y.dim(i + 1)
                    for k in range(yk):
                        if dy.data[r][k] != 0:
                            row[base + k * mi + c] += dy.data[r][k]
                # (h_{i-1} d)[r, c] = sum_k h_{i-1}[r, k] dx[k, c]
                if i - 1 in hoffsets:
                    base = hoffsets[i - 1]
                    mk = x.dim(i - 1)
                    for k in range(mk):
                        if dx.data[k][c] != 0:
                            row[base + r * mk + k] += dx.data[k][c]
                rows.append(row)
                rhs.append(target.data[r][c])
    if total == 0:
        return {} if all(v == 0 for v in rhs) else None
    system = Matrix(len(rows), total, rows)
    sol = solve(system, rhs)
    if sol is None:
        return None
    h = {}
    for i in hdegrees:
        base = hoffsets[i]
        mi, ni1 = x.dim(i), y.dim(i + 1)
        grid = [[sol[base + r * mi + c] for c in range(mi)] for r in range(ni1)]
        m = Matrix(ni1, mi, grid)
        if not m.is_zero():
            h[i] = m
    return h


def check_homotopy(f: ChainMap, g: ChainMap, h) -> bool:
    """Verify f - g = d h + h d exactly."""
    x, y = f.src, f.dst
    for i in set(x.dims) | set(y.dims):
        target = f.block(i) - g.block(i)
        acc = Matrix.zeros(y.dim(i), x.dim(i))
        if i in h:
            acc = acc + y.d(i + 1) * h[i]
        if i - 1 in h:
            acc = acc + h[i - 1] * x.d(i)
        if acc != target:
            return False
    return True
