"""Symmetric groups acting on chain complexes.

Actions are stored on adjacent transpositions only; the defining
relations are validated once and arbitrary permutations act through a
cached word decomposition.  Right-action convention: matrices satisfy
R(p o q) = R(q) * R(p).

Coinvariants are computed with the averaging idempotent (1/|G|) sum(g),
legitimate because the ground field has characteristic zero.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .chain import ChainComplex, ChainMap
from .qlinalg import F0, F1, Matrix, image, solve_matrix


@dataclass(frozen=True)
class Permutation:
    """Bijection of {1..n}; images[k] is the image of k+1."""

    images: tuple

    def __post_init__(self):
        if sorted(self.images) != list(range(1, len(self.images) + 1)):
            raise ValueError(f"not a permutation of 1..{len(self.images)}: {self.images}")

    @classmethod
    def identity(cls, n):
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def transposition(cls, n, i, j=None):
        """The transposition (i j); (i i+1) if j is omitted."""
        if j is None:
            j = i + 1
        imgs = list(range(1, n + 1))
        imgs[i - 1], imgs[j - 1] = j, i
        return cls(tuple(imgs))

    @classmethod
    def cycle_to_front(cls, n, q):
        """Sends 1 -> q and shifts 2..q down; fixes q+1..n."""
        imgs = [q] + list(range(1, q)) + list(range(q + 1, n + 1))
        return cls(tuple(imgs))

    @property
    def n(self):
        return len(self.images)

    def __call__(self, k):
        return self.images[k - 1]

    def compose(self, other):
        """self o other: apply other first."""
        if self.n != other.n:
            raise ValueError("size mismatch")
        return Permutation(tuple(self(other(k)) for k in range(1, self.n + 1)))

    def inverse(self):
        inv = [0] * self.n
        for k in range(1, self.n + 1):
            inv[self(k) - 1] = k
        return Permutation(tuple(inv))

    def sign(self):
        seen = [False] * self.n
        sign = 1
        for k in range(self.n):
            if seen[k]:
                continue
            length = 0
            j = k
            while not seen[j]:
                seen[j] = True
                j = self.images[j] - 1
                length += 1
            if length % 2 == 0:
                sign = -sign
        return sign

    def is_identity(self):
        return all(self(k) == k for k in range(1, self.n + 1))

    def adjacent_word(self):
        """Indices j with self = s_{j1} o s_{j2} o ... (function composition)."""
        imgs = list(self.images)
        word = []
        # bubble sort imgs back to the identity; each swap of positions
        # (j, j+1) multiplies by s_j on the right, so collecting the
        # swaps in order gives self = s_{j_1} o ... o s_{j_k} reversed.
        swaps = []
        changed = True
        while changed:
            changed = False
            for j in range(self.n - 1):
                if imgs[j] > imgs[j + 1]:
                    imgs[j], imgs[j + 1] = imgs[j + 1], imgs[j]
                    swaps.append(j + 1)
                    changed = True
        # imgs sorted: self o s_{k_1} o ... o s_{k_m} = id, so
        # self = s_{k_m} o ... o s_{k_1}
        return list(reversed(swaps))


def all_permutations(n):
    return [Permutation(p) for p in itertools.permutations(range(1, n + 1))]


def permutation_matrix(p: Permutation) -> Matrix:
    """Right-action matrix on the regular-ish basis e_1..e_n: e_k -> e_{p^{-1}(k)}.

    Chosen so that word evaluation matches R(p o q) = R(q) R(p).
    """
    n = p.n
    grid = [[F0] * n for _ in range(n)]
    for k in range(1, n + 1):
        grid[k - 1][p(k) - 1] = F1
    return Matrix(n, n, grid)


class GroupAction:
    """Right action of Sigma_n on a chain complex, stored on generators.

    ``generators[j]`` is the chain map by which the adjacent
    transposition s_{j+1} = (j+1, j+2) acts.
    """

    __slots__ = ("n", "complex", "generators", "_cache")

    def __init__(self, n, complex, generators, check=True):
        self.n = n
        self.complex = complex
        self.generators = tuple(generators)
        if len(self.generators) != max(n - 1, 0):
            raise ValueError(f"expected {max(n - 1, 0)} generators for arity {n}")
        self._cache = {}
        if check:
            report = self.validate()
            if report:
                raise ValueError("; ".join(report))

    @classmethod
    def trivial(cls, n, complex):
        ident = ChainMap.identity(complex)
        return cls(n, complex, [ident] * max(n - 1, 0), check=False)

    def validate(self):
        violations = []
        gens = self.generators
        ident = ChainMap.identity(self.complex)
        for j, g in enumerate(gens):
            try:
                g.assert_chain()
            except ValueError as exc:
                violations.append(f"s_{j + 1} is not a chain map: {exc}")
            if g.compose(g) != ident:
                violations.append(f"s_{j + 1} squared is not the identity")
        for j in range(len(gens) - 1):
            a, b = gens[j], gens[j + 1]
            if a.compose(b).compose(a) != b.compose(a).compose(b):
                violations.append(f"braid relation fails at s_{j + 1}, s_{j + 2}")
        for j in range(len(gens)):
            for k in range(j + 2, len(gens)):
                a, b = gens[j], gens[k]
                if a.compose(b) != b.compose(a):
                    violations.append(
                        f"commutation fails at s_{j + 1}, s_{k + 1}")
        return violations

    def action(self, perm: Permutation) -> ChainMap:
        """Chain map by which ``perm`` acts; R(p o q) = R(q) R(p)."""
        if perm.n != self.n:
            raise ValueError("permutation arity mismatch")
        key = perm.images
        if key in self._cache:
            return self._cache[key]
        word = perm.adjacent_word()
        acc = ChainMap.identity(self.complex)
        # perm = s_{w0} o s_{w1} o ...  =>  R(perm) = R(s_{w_last}) ... R(s_{w0})
        for j in word:
            acc = self.generators[j - 1].compose(acc)
        self._cache[key] = acc
        return acc

    def average(self) -> ChainMap:
        """The idempotent (1/n!) sum over the group."""
        total = None
        count = 0
        for p in all_permutations(self.n):
            m = self.action(p)
            total = m if total is None else total + m
            count += 1
        return total.scale(Fraction(1, count))


class _IndexedModule:
    """Family of chain complexes with group actions, keyed by index."""

    def __init__(self, components, check=True):
        self.components = dict(components)
        if check:
            for key, ga in self.components.items():
                if not isinstance(ga, GroupAction):
                    raise TypeError(f"component {key} is not a GroupAction")

    def keys(self):
        return sorted(self.components)

    def component(self, key) -> ChainComplex:
        if key in self.components:
            return self.components[key].complex
        return ChainComplex.zero()

    def group_action(self, key) -> GroupAction:
        return self.components[key]

    def action(self, key, perm) -> ChainMap:
        if key not in self.components:
            zero = ChainComplex.zero()
            return ChainMap.zero_map(zero, zero)
        return self.components[key].action(perm)

    def dim(self, key, degree):
        return self.component(key).dim(degree)

    def is_zero(self):
        return all(ga.complex.is_zero() for ga in self.components.values())

    def validate_action(self):
        """Generator relations and chain-map property of every action."""
        report = []
        for key in self.keys():
            for v in self.components[key].validate():
                report.append(f"component {key}: {v}")
        return report


class SigmaModule(_IndexedModule):
    """Arity-indexed chain complexes with right symmetric-group actions."""

    def __init__(self, components, check=True):
        super().__init__(components, check=check)
        for key, ga in self.components.items():
            if ga.n != key:
                raise ValueError(f"component {key} carries a Sigma_{ga.n} action")

    @property
    def arities(self):
        return self.keys()

    @classmethod
    def trivial_single(cls, arity, complex):
        return cls({arity: GroupAction.trivial(arity, complex)})


def modular_dimension(g, l):
    """Induction grading for modular truncations: 3g - 3 + l."""
    return 3 * g - 3 + l


def is_stable(g, l):
    return g >= 0 and l >= 0 and 2 * g - 2 + l > 0


def stable_pairs_with_dimension(n):
    """All stable (g, l) with modular dimension exactly n."""
    out = []
    g = 0
    while True:
        l = n + 3 - 3 * g
        if l < 0:
            break
        if is_stable(g, l):
            out.append((g, l))
        g += 1
    return out


def stable_pairs_up_to(n):
    out = []
    for k in range(0, n + 1):
        out.extend(stable_pairs_with_dimension(k))
    return sorted(out)


class ModularSigmaModule(_IndexedModule):
    """(g, l)-indexed chain complexes, stable indices only."""

    def __init__(self, components, check=True):
        super().__init__(components, check=check)
        for (g, l), ga in self.components.items():
            if not is_stable(g, l):
                raise ValueError(f"unstable index ({g}, {l})")
            if ga.n != l:
                raise ValueError(f"component ({g}, {l}) carries a Sigma_{ga.n} action")

    @property
    def indices(self):
        return self.keys()


def validate_action(module) -> list:
    """Generator relations and chain-map property; empty report = ok."""
    return module.validate_action()


def equivariance_report(src, dst, maps) -> list:
    """Check f(l) o s = s o f(l) for all generators; empty report = ok.

    ``maps`` is a dict key -> ChainMap between the components of two
    modules with matching supports.
    """
    report = []
    keys = set(src.keys()) | set(dst.keys()) | set(maps)
    for key in sorted(keys):
        f = maps.get(key)
        if f is None:
            if not src.component(key).is_zero() and not dst.component(key).is_zero():
                report.append(f"component {key}: missing map")
            continue
        ga_src = src.components.get(key)
        ga_dst = dst.components.get(key)
        n_gens = len(ga_src.generators) if ga_src else 0
        for j in range(n_gens):
            lhs = f.compose(ga_src.generators[j])
            rhs = ga_dst.generators[j].compose(f) if ga_dst else None
            if rhs is None or lhs != rhs:
                report.append(f"component {key}: not equivariant at s_{j + 1}")
    return report


@dataclass
class Coinvariants:
    """Coinvariant complex with the projection and a canonical inclusion."""

    complex: ChainComplex
    projection: ChainMap
    inclusion: ChainMap


def close_group(generators, max_size=100000):
    """Multiplicative closure of a list of chain maps (finite groups only)."""
    if not generators:
        return []
    ident = ChainMap.identity(generators[0].src)
    elements = {ident: True}
    frontier = [ident]
    while frontier:
        new = []
        for g in generators:
            for h in frontier:
                prod = g.compose(h)
                if prod not in elements:
                    elements[prod] = True
                    new.append(prod)
                    if len(elements) > max_size:
                        raise ValueError("group closure exceeded bound")
        frontier = new
    return list(elements)

def coinvariants(complex: ChainComplex, generators) -> Coinvariants:
    """Image of the averaging idempotent, with projection and inclusion.

    ``generators`` must generate a finite group of chain maps; over the
    rationals the coinvariants of a finite group action are canonically
    the invariants, and we return that subcomplex.
    """
    elements = close_group(list(generators))
    if not elements:
        return Coinvariants(complex, ChainMap.identity(complex),
                            ChainMap.identity(complex))
    avg = None
    for m in elements:
        avg = m if avg is None else avg + m
    avg = avg.scale(Fraction(1, len(elements)))
    dims = {}
    basis = {}
    for i in complex.dims:
        im = image(avg.block(i))
        if im.dim:
            dims[i] = im.dim
            basis[i] = im.basis
    diff = {}
    for i in dims:
        if i - 1 in dims:
            m = solve_matrix(basis[i - 1], complex.d(i) * basis[i])
            if m is None:
                raise AssertionError("averaging image is not a subcomplex")
            diff[i] = m
    sub = ChainComplex(dims, diff)
    incl = ChainMap(sub, complex, {i: basis[i] for i in dims}, check=False)
    proj_blocks = {}
    for i in dims:
        m = solve_matrix(basis[i], avg.block(i))
        if m is None:
            raise AssertionError("projection failed")
        proj_blocks[i] = m
    proj = ChainMap(complex, sub, proj_blocks, check=False)
    incl.assert_chain()
    proj.assert_chain()
    return Coinvariants(sub, proj, incl)
