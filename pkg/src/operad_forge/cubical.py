"""Cubic chains of finite cubical sets.

Cubes are combinatorial: a cubical set provides its p-cubes, face
assignments c |-> c o delta_i^eps, and degeneracy flags; chains are
rational combinations of cubes with degenerate cubes identified with
zero (normalized on read).  Product sets carry the coordinate
permutation action by precomposition, which is all the alternating
operator needs; consequently the symmetrized cross product
kappa(c, d) = alt(c x d) is defined on products of symmetric sets.

The permutation bijection sending (tau, r, i) to the unique sigma with
sigma o delta_i^eps = delta_r^eps o tau is implemented directly on
index maps, together with its sign identity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from .chain import ChainComplex
from .qlinalg import F0, F1, Matrix
from .sigma import Permutation, all_permutations


# -- index maps I^m -> I^n -----------------------------------------------------


def delta_map(n, i, eps):
    """The face map I^{n-1} -> I^n inserting eps at coordinate i."""
    out = []
    for j in range(1, n + 1):
        if j == i:
            out.append(("const", eps))
        elif j < i:
            out.append(("in", j))
        else:
            out.append(("in", j - 1))
    return tuple(out)


def perm_map(sigma: Permutation):
    """The coordinate permutation map: output j reads input sigma^{-1}(j)."""
    inv = sigma.inverse()
    return tuple(("in", inv(j)) for j in range(1, sigma.n + 1))


def compose_maps(outer, inner):
    """outer o inner as index maps (inner feeds outer)."""
    out = []
    for entry in outer:
        if entry[0] == "const":
            out.append(entry)
        else:
            out.append(inner[entry[1] - 1])
    return tuple(out)


def cycle_up(r, n):
    """The cycle r -> r+1 -> ... -> n -> r, fixing 1..r-1."""
    images = []
    for k in range(1, n + 1):
        if k < r:
            images.append(k)
        elif k < n:
            images.append(k + 1)
        else:
            images.append(r)
    return Permutation(tuple(images))


def sigma_tau_r_i(tau: Permutation, r: int, i: int) -> Permutation:
    """The unique permutation with sigma o delta_i^eps = delta_r^eps o tau.

    tau lives in Sigma_{n-1}; r, i in 1..n; the composition is of
    coordinate maps I^{n-1} -> I^n.  Satisfies the sign identity
    (-1)^{|sigma| + i} = (-1)^{|tau| + r}.
    """
    n = tau.n + 1
    if not (1 <= r <= n and 1 <= i <= n):
        raise ValueError("face indices out of range")
    tau_bar = Permutation(tuple(list(tau.images) + [n]))
    return cycle_up(r, n).compose(tau_bar).compose(cycle_up(i, n).inverse())


def face_permutation_decomposition(sigma: Permutation, i: int):
    """Write sigma o delta_i^eps as delta_r^eps o tau; returns (r, tau).

    This is the inverse direction of the bijection (tau, r, i) ->
    (sigma, i)."""
    n = sigma.n
    composite = compose_maps(perm_map(sigma), delta_map(n, i, 0))
    r = next(j + 1 for j, e in enumerate(composite) if e[0] == "const")
    images = []
    for j, e in enumerate(composite):
        if e[0] == "in":
            pos = j + 1
            target = pos if pos < r else pos - 1
            images.append((e[1], target))
    images.sort()
    tau = [0] * (n - 1)
    for src, tgt in images:
        tau[src - 1] = tgt
    return r, Permutation(tuple(tau))


# -- cubical sets --------------------------------------------------------------


class FiniteCubicalSet:
    """Finite table of cubes with explicit faces and degeneracy flags.

    ``cube_table``: dict p -> list of hashable cube names;
    ``face_table``: dict (cube, i, eps) -> cube of one dimension lower;
    ``degenerate``: set of cube names.  The cubical identities
    c o delta_i o delta_j = c o delta_{j+1} o delta_i (i <= j) are
    validated at construction.
    """

    def __init__(self, cube_table, face_table, degenerate=(), check=True):
        self.cube_table = {p: list(cs) for p, cs in cube_table.items() if cs}
        self.face_table = dict(face_table)
        self.degenerate = set(degenerate)
        if check:
            self._validate()

    def _validate(self):
        for p, cs in self.cube_table.items():
            if p == 0:
                continue
            for c in cs:
                for i in range(1, p + 1):
                    for eps in (0, 1):
                        if (c, i, eps) not in self.face_table:
                            raise ValueError(f"missing face ({c}, {i}, {eps})")
        for p, cs in self.cube_table.items():
            if p < 2:
                continue
            for c in cs:
                for j in range(1, p):
                    for i in range(1, j + 1):
                        for eps, eta in itertools.product((0, 1), repeat=2):
                            left = self.face(self.face(c, i, eps), j, eta)
                            right = self.face(self.face(c, j + 1, eta), i, eps)
                            if left != right:
                                raise ValueError(
                                    f"cubical identity fails at {c}")

    def dims(self):
        return sorted(self.cube_table)

    def cubes(self, p):
        return self.cube_table.get(p, [])

    def dim_of(self, cube):
        for p, cs in self.cube_table.items():
            if cube in cs:
                return p
        raise KeyError(cube)

    def face(self, cube, i, eps):
        return self.face_table[(cube, i, eps)]

    def is_degenerate(self, cube):
        return cube in self.degenerate

    def act(self, cube, sigma: Permutation):
        """Right action by coordinate permutation; only trivial here."""
        if sigma.is_identity():
            return cube, 1
        raise ValueError("this cubical set carries no symmetry structure")


def point() -> FiniteCubicalSet:
    return FiniteCubicalSet({0: ["*"]}, {})


def interval() -> FiniteCubicalSet:
    """The unit interval: two endpoints, the identity 1-cube, and the
    two degenerate constant 1-cubes."""
    cubes = {0: ["0", "1"], 1: ["id", "c0", "c1"]}
    faces = {("id", 1, 0): "0", ("id", 1, 1): "1",
             ("c0", 1, 0): "0", ("c0", 1, 1): "0",
             ("c1", 1, 0): "1", ("c1", 1, 1): "1"}
    return FiniteCubicalSet(cubes, faces, degenerate={"c0", "c1"})


def torus() -> FiniteCubicalSet:
    """The square with all sides glued: one vertex, two loops, one
    square; H has dimensions 1, 2, 1."""
    cubes = {0: ["v"], 1: ["a", "b"], 2: ["s"]}
    faces = {("a", 1, 0): "v", ("a", 1, 1): "v",
             ("b", 1, 0): "v", ("b", 1, 1): "v",
             ("s", 1, 0): "a", ("s", 1, 1): "a",
             ("s", 2, 0): "b", ("s", 2, 1): "b"}
    return FiniteCubicalSet(cubes, faces)


class ProductCubicalSet:
    """Product of two cubical sets, closed under coordinate permutations.

    A p-cube is (a, b, S) where S is the sorted tuple of coordinate
    positions feeding a; this is the smallest cube collection containing
    the products a x b and stable under faces and the permutation
    action.
    """

    def __init__(self, left, right):
        self.left = left
        self.right = right

    def dims(self):
        return sorted({p + q for p in self.left.dims()
                       for q in self.right.dims()})

    def cubes(self, p):
        out = []
        for pa in self.left.dims():
            pb = p - pa
            if pb < 0 or pb not in self.right.dims():
                continue
            for a in self.left.cubes(pa):
                for b in self.right.cubes(pb):
                    for S in itertools.combinations(range(1, p + 1), pa):
                        out.append((a, b, S))
        return out

    def dim_of(self, cube):
        a, b, S = cube
        return self.left.dim_of(a) + self.right.dim_of(b)

    def is_degenerate(self, cube):
        a, b, _ = cube
        return self.left.is_degenerate(a) or self.right.is_degenerate(b)

    def face(self, cube, i, eps):
        a, b, S = cube
        if i in S:
            k = S.index(i) + 1
            a2 = self.left.face(a, k, eps)
            S2 = tuple(s - 1 if s > i else s for s in S if s != i)
            return (a2, b, S2)
        comp = [j for j in range(1, self.dim_of(cube) + 1) if j not in S]
        k = comp.index(i) + 1
        b2 = self.right.face(b, k, eps)
        S2 = tuple(s - 1 if s > i else s for s in S)
        return (a, b2, S2)

    def act(self, cube, sigma: Permutation):
        """Right action by precomposition: coordinate j of the result
        reads coordinate sigma^{-1}(j)... the new cube reads its a-part
        at the positions sigma^{-1}(S), reordered inside each factor."""
        a, b, S = cube
        p = self.dim_of(cube)
        if sigma.n != p:
            raise ValueError("permutation has the wrong size")
        inv = sigma.inverse()
        new_positions = [inv(s) for s in S]
        order = sorted(range(len(S)), key=lambda k: new_positions[k])
        S2 = tuple(new_positions[k] for k in order)
        tau_a = Permutation(tuple(k + 1 for k in order))
        comp = [j for j in range(1, p + 1) if j not in S]
        new_comp = [inv(s) for s in comp]
        order_b = sorted(range(len(comp)), key=lambda k: new_comp[k])
        tau_b = Permutation(tuple(k + 1 for k in order_b))
        a2, sa = self.left.act(a, tau_a)
        b2, sb = self.right.act(b, tau_b)
        return (a2, b2, S2), sa * sb


def interval_power(n: int):
    """n-fold product of intervals (n >= 1), fully symmetric."""
    x = interval()
    for _ in range(n - 1):
        x = ProductCubicalSet(x, interval())
    return x


# -- cubic chains --------------------------------------------------------------


@dataclass
class CubicChain:
    """Formal rational combination of cubes of one dimension.

    Degenerate cubes are identified with zero; normalization happens on
    construction."""

    space: object
    dim: int
    coeffs: dict

    def __post_init__(self):
        clean = {}
        for cube, coeff in self.coeffs.items():
            coeff = Fraction(coeff)
            if coeff == 0 or self.space.is_degenerate(cube):
                continue
            clean[cube] = clean.get(cube, F0) + coeff
        self.coeffs = {c: x for c, x in clean.items() if x != 0}

    @classmethod
    def of_cube(cls, space, cube):
        return cls(space, space.dim_of(cube), {cube: F1})

    def is_zero(self):
        return not self.coeffs

    def __add__(self, other):
        if other.dim != self.dim or other.space is not self.space:
            raise ValueError("chain mismatch")
        coeffs = dict(self.coeffs)
        for cube, x in other.coeffs.items():
            coeffs[cube] = coeffs.get(cube, F0) + x
        return CubicChain(self.space, self.dim, coeffs)

    def scale(self, c):
        return CubicChain(self.space, self.dim,
                          {cube: Fraction(c) * x
                           for cube, x in self.coeffs.items()})

    def __sub__(self, other):
        return self + other.scale(-1)

    def __eq__(self, other):
        return (isinstance(other, CubicChain) and self.dim == other.dim
                and self.coeffs == other.coeffs)


def boundary(chain: CubicChain) -> CubicChain:
    """d(c) = sum over (i, eps) of (-1)^{i+eps} c o delta_i^eps."""
    out = {}
    space = chain.space
    for cube, coeff in chain.coeffs.items():
        for i in range(1, chain.dim + 1):
            for eps in (0, 1):
                sign = -1 if (i + eps) % 2 else 1
                f = space.face(cube, i, eps)
                out[f] = out.get(f, F0) + sign * coeff
    return CubicChain(space, chain.dim - 1, out)


def cross(cx: CubicChain, cy: CubicChain, product=None) -> CubicChain:
    """Cartesian concatenation of cubes, bilinearly extended."""
    if product is None:
        product = ProductCubicalSet(cx.space, cy.space)
    p = cx.dim
    out = {}
    for a, xa in cx.coeffs.items():
        for b, xb in cy.coeffs.items():
            cube = (a, b, tuple(range(1, p + 1)))
            out[cube] = out.get(cube, F0) + xa * xb
    return CubicChain(product, cx.dim + cy.dim, out)


def act(chain: CubicChain, sigma: Permutation) -> CubicChain:
    out = {}
    for cube, coeff in chain.coeffs.items():
        newcube, sgn = chain.space.act(cube, sigma)
        out[newcube] = out.get(newcube, F0) + sgn * coeff
    return CubicChain(chain.space, chain.dim, out)


def alt(chain: CubicChain) -> CubicChain:
    """The alternating projector (1/n!) sum of (-1)^{|sigma|} c o sigma."""
    n = chain.dim
    if n <= 1:
        return chain
    total = None
    for sigma in all_permutations(n):
        term = act(chain, sigma).scale(sigma.sign())
        total = term if total is None else total + term
    return total.scale(Fraction(1, factorial(n)))


def kappa(cx: CubicChain, cy: CubicChain, product=None) -> CubicChain:
    """The symmetrized cross product alt(c x d)."""
    return alt(cross(cx, cy, product))


def chain_complex(space, p_max=None) -> ChainComplex:
    """Boundary complex on the nondegenerate cubes up to p_max."""
    dims_avail = space.dims()
    if p_max is None:
        p_max = max(dims_avail)
    basis = {}
    for p in dims_avail:
        if p > p_max:
            continue
        cubes = [c for c in space.cubes(p) if not space.is_degenerate(c)]
        if cubes:
            basis[p] = cubes
    dims = {p: len(cs) for p, cs in basis.items()}
    diff = {}
    for p in dims:
        if p - 1 not in dims:
            continue
        index = {c: k for k, c in enumerate(basis[p - 1])}
        grid = [[F0] * dims[p] for _ in range(dims[p - 1])]
        for col, cube in enumerate(basis[p]):
            bd = boundary(CubicChain.of_cube(space, cube))
            for f, coeff in bd.coeffs.items():
                grid[index[f]][col] += coeff
        diff[p] = Matrix(dims[p - 1], dims[p], grid)
    return ChainComplex(dims, diff)
