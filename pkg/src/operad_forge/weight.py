"""Weight decompositions, purity, and formality certificates.

A weight function is carried by a rational base alpha (not 0 or a root
of unity, which over Q means alpha not in {0, 1, -1}) with w(alpha^n)
= n.  A chain endomorphism is pure of weight 0 when every eigenvalue of
H_i(f) equals alpha^i exactly; pure endomorphisms split a complex into
weight subcomplexes, and the functor keeping the canonical truncation
tau_{>= n} of the weight-n part realizes a zigzag of weak equivalences
between the complex and its homology.  Applied componentwise to an
operad with a pure endomorphism this certifies formality; the converse
search lifts a grading automorphism through the minimal model and
reports Inconclusive when some obstruction system has no solution
(non-formality is never certified).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .chain import (
    ChainComplex,
    ChainMap,
    HomologyRecord,
    canonical_truncation,
    homology,
    induced_map,
)
from .minimal import (
    ObstructionError,
    endomorphism_with_prescribed_homology,
    minimal_model,
)
from .operad import (
    DGOperad,
    ModularOperad,
    OperadMorphism,
    homology_operad,
    weak_equivalence_test,
)
from .qlinalg import (
    F0,
    Matrix,
    Subspace,
    rational_eigen_split,
    solve,
    solve_matrix,
)


class PurityError(ValueError):
    """Raised when an endomorphism fails the purity check; carries the
    per-component failure report."""

    def __init__(self, failures):
        super().__init__("; ".join(failures[:5]))
        self.failures = failures


@dataclass(frozen=True)
class WeightFunction:
    """w(alpha^n) = n on the cyclic group generated by alpha."""

    base: Fraction

    def __post_init__(self):
        alpha = Fraction(self.base)
        object.__setattr__(self, "base", alpha)
        if alpha in (0, 1, -1):
            raise ValueError("weight base must not be 0 or a root of unity")

    def weight_of(self, value, bound):
        """The integer n with alpha^n = value, or None."""
        value = Fraction(value)
        if value == 0:
            return None
        for n in range(-bound, bound + 1):
            if self.base ** n == value:
                return n
        return None


def _degree_bound(complexes):
    span = 0
    for c in complexes:
        for d in c.dims:
            span = max(span, abs(d))
    return span + 4


@dataclass
class WeightDecomposition:
    """Per-degree splitting into pure weight subspaces and a residual.

    ``pure[n][d]`` and ``residual[d]`` are ambient-column basis
    matrices; each weight part and the residual are subcomplexes.
    """

    complex: ChainComplex
    endomorphism: ChainMap
    weight_function: WeightFunction
    pure: dict
    residual: dict

    def weights(self):
        return sorted(self.pure)

    def pure_dim(self, n, d):
        mat = self.pure.get(n, {}).get(d)
        return mat.cols if mat is not None else 0

    def residual_dim(self, d):
        mat = self.residual.get(d)
        return mat.cols if mat is not None else 0

    def subcomplex(self, basis_by_degree):
        """(complex, inclusion) spanned by ambient basis matrices."""
        dims = {d: m.cols for d, m in basis_by_degree.items() if m.cols}
        diff = {}
        for d in dims:
            if d - 1 in dims:
                sol = solve_matrix(basis_by_degree[d - 1],
                                   self.complex.d(d) * basis_by_degree[d])
                if sol is None:
                    raise AssertionError("weight part is not a subcomplex")
                diff[d] = sol
        sub = ChainComplex(dims, diff)
        incl = ChainMap(sub, self.complex,
                        {d: basis_by_degree[d] for d in dims})
        return sub, incl

    def weight_part(self, n):
        return self.subcomplex(self.pure.get(n, {}))

    def residual_part(self):
        return self.subcomplex(self.residual)


def weight_decompose(c: ChainComplex, f: ChainMap,
                     w: WeightFunction) -> WeightDecomposition:
    """Primary decomposition of each degree, bucketed by weight.

    Eigenvalues alpha^n land in the weight-n part; all other rational
    eigenvalues and the irrational residual are pooled into the
    non-pure part C.  Both are subcomplexes (checked).
    """
    if f.src is not c and f.src != c:
        raise ValueError("endomorphism must live on the complex")
    bound = _degree_bound([c])
    pure = {}
    residual = {}
    for d in c.support:
        split = rational_eigen_split(f.block(d))
        res_cols = list(split.residual.basis.columns())
        for lam, space in split.pairs:
            n = w.weight_of(lam, bound)
            if n is None:
                res_cols.extend(space.basis.columns())
            else:
                pure.setdefault(n, {})[d] = space.basis
        if res_cols:
            residual[d] = Subspace.from_spanning(c.dim(d), res_cols).basis
    decomp = WeightDecomposition(c, f, w, pure, residual)
    # the parts must be subcomplexes; building them verifies it
    for n in decomp.weights():
        decomp.weight_part(n)
    decomp.residual_part()
    return decomp


def grading_automorphism(c: ChainComplex, alpha) -> ChainMap:
    """alpha^i times the identity in degree i (zero differential only)."""
    if c.diff:
        raise ValueError("grading automorphism requires a zero differential")
    alpha = Fraction(alpha)
    return ChainMap(c, c, {
        d: Matrix.identity(c.dim(d)).scale(alpha ** d) for d in c.dims},
        check=False)


def operad_grading_automorphism(op, alpha) -> OperadMorphism:
    """The grading automorphism of an operad with zero differentials."""
    keys = op.indices if isinstance(op, ModularOperad) else op.arities
    maps = {}
    for key in keys:
        comp = op.component(key)
        if comp.is_zero():
            continue
        maps[key] = grading_automorphism(comp, alpha)
    return OperadMorphism(op, op, maps)


@dataclass
class PureEndomorphism:
    """Certificate that H_i(f) is pure of weight i in every component."""

    subject: object
    endomorphism: object
    weight_function: WeightFunction
    homology_eigenvalues: dict


def _component_items(p, f):
    if isinstance(f, ChainMap):
        return [(None, p, f)]
    keys = p.indices if isinstance(p, ModularOperad) else p.arities
    return [(key, p.component(key), f.block(key)) for key in keys
            if not p.component(key).is_zero()]


def purity_check(p, f, w: WeightFunction) -> PureEndomorphism:
    """Verify H_i(f) has all eigenvalues equal to alpha^i, exactly.

    ``p`` is a complex or an operad, ``f`` a matching endomorphism.
    Raises PurityError with a report naming component, degree and the
    offending eigenvalue or irrational factor.
    """
    if isinstance(f, OperadMorphism):
        bad = f.validate()
        if bad:
            raise PurityError([f"endomorphism is not an operad map: {m}"
                               for m in bad])
    failures = []
    eigen_table = {}
    for key, comp, block in _component_items(p, f):
        where = f"component {key}: " if key is not None else ""
        hrec = homology(comp)
        ind = induced_map(block, hrec, hrec)
        bound = _degree_bound([comp])
        for d, m in ind.items():
            if m.rows == 0:
                continue
            split = rational_eigen_split(m)
            if split.residual.dim:
                failures.append(f"{where}degree {d}: irrational eigenvalue "
                                "factor on homology")
            expected = w.base ** d
            for lam, space in split.pairs:
                if lam != expected:
                    failures.append(f"{where}degree {d}: eigenvalue {lam} "
                                    f"is not {w.base}^{d}")
            eigen_table.setdefault(key, {})[d] = [lam for lam, _ in split.pairs]
    if failures:
        raise PurityError(failures)
    return PureEndomorphism(p, f, w, eigen_table)


@dataclass
class TFunctorResult:
    """The weight-truncation subcomplex with its two weak equivalences."""

    complex: ChainComplex
    inclusion: ChainMap
    projection: ChainMap       # onto the homology complex (zero differential)
    homology: HomologyRecord
    weight_tags: dict          # degree -> tuple of weights per basis column


def t_functor(c: ChainComplex, f: ChainMap, w: WeightFunction) -> TFunctorResult:
    """Sum over n of the canonical truncations tau_{>= n} of the
    weight-n subcomplexes.

    Requires (c, f) pure of weight 0; both returned arrows are weak
    equivalences (certified by construction and checked in tests).
    """
    purity_check(c, f, w)
    decomp = weight_decompose(c, f, w)
    hrec = homology(c)
    basis = {}
    tags = {}
    for n in decomp.weights():
        part, incl = decomp.weight_part(n)
        trunc, tincl = canonical_truncation(part, n)
        for d in trunc.dims:
            cols = (incl.block(d) * tincl.block(d)).columns()
            basis.setdefault(d, []).extend(cols)
            tags.setdefault(d, []).extend([n] * len(cols))
    dims = {d: len(cols) for d, cols in basis.items() if cols}
    mats = {d: Matrix.from_cols(cols, rows=c.dim(d))
            for d, cols in basis.items() if cols}
    diff = {}
    for d in dims:
        if d - 1 in dims:
            sol = solve_matrix(mats[d - 1], c.d(d) * mats[d])
            if sol is None:
                raise AssertionError("weight truncation is not a subcomplex")
            diff[d] = sol
    tp = ChainComplex(dims, diff)
    inclusion = ChainMap(tp, c, mats)
    hcomplex = hrec.homology_complex()
    proj_blocks = {}
    for d in dims:
        cols = []
        for col in range(dims[d]):
            if tags[d][col] == d:
                cls = hrec.classify(d, mats[d].col(col))
                if cls is None:
                    raise AssertionError("truncation vector is not a cycle")
                cols.append(cls)
            else:
                cols.append((F0,) * hcomplex.dim(d))
        proj_blocks[d] = Matrix.from_cols(cols, rows=hcomplex.dim(d))
    projection = ChainMap(tp, hcomplex, proj_blocks)
    return TFunctorResult(tp, inclusion, projection, hrec, tags)


def leibniz_containment(cx, fx, cy, fy, w) -> bool:
    """Products of the weight truncations land in the truncation of the
    tensor product (the monoidality containment), checked exactly."""
    from .chain import TensorData
    tx, ty = t_functor(cx, fx, w), t_functor(cy, fy, w)
    td = TensorData((cx, cy))
    tensor_f_blocks = {}
    for n in td.complex.dims:
        dim = td.complex.dim(n)
        grid = [[F0] * dim for _ in range(dim)]
        for col, label in enumerate(td.basis(n)):
            (d1, k1), (d2, k2) = label
            colx = fx.block(d1).col(k1)
            coly = fy.block(d2).col(k2)
            for r1, a in enumerate(colx):
                if a == 0:
                    continue
                for r2, b in enumerate(coly):
                    if b == 0:
                        continue
                    row = td.index(((d1, r1), (d2, r2)))[1]
                    grid[row][col] += a * b
        tensor_f_blocks[n] = Matrix(dim, dim, grid)
    tensor_f = ChainMap(td.complex, td.complex, tensor_f_blocks)
    tt = t_functor(td.complex, tensor_f, w)
    for n in td.complex.dims:
        span = Subspace.from_spanning(
            td.complex.dim(n),
            tt.inclusion.block(n).columns()) if tt.complex.dim(n) else \
            Subspace.zero(td.complex.dim(n))
        for d1 in tx.complex.dims:
            d2 = n - d1
            if ty.complex.dim(d2) == 0:
                continue
            for k1 in range(tx.complex.dim(d1)):
                v1 = tx.inclusion.block(d1).col(k1)
                for k2 in range(ty.complex.dim(d2)):
                    v2 = ty.inclusion.block(d2).col(k2)
                    prod = [F0] * td.complex.dim(n)
                    for r1, a in enumerate(v1):
                        if a == 0:
                            continue
                        for r2, b in enumerate(v2):
                            if b == 0:
                                continue
                            prod[td.index(((d1, r1), (d2, r2)))[1]] += a * b
                    if any(x != 0 for x in prod) and not span.contains(prod):
                        return False
    return True


@dataclass
class FormalityWitness:
    """A zigzag of weak equivalences connecting an operad to its
    homology, optionally with the lifted automorphism that produced it."""

    arrows: list               # list of (label, OperadMorphism)
    t_operad: object
    automorphism: object = None

    def verify(self):
        for label, arrow in self.arrows:
            ok, _ = weak_equivalence_test(arrow)
            if not ok:
                return False
        return True


def _suboperad_from_components(p, components):
    """Suboperad spanned by given ambient bases; rejects non-closure.

    ``components``: key -> dict degree -> ambient basis Matrix.
    Returns (operad, inclusion morphism).
    """
    from .operad import CompTable, ContrTable
    from .sigma import GroupAction, ModularSigmaModule, Permutation, SigmaModule
    modular = isinstance(p, ModularOperad)
    keys = p.indices if modular else p.arities
    complexes = {}
    incl_blocks = {}
    for key, basis in components.items():
        dims = {d: m.cols for d, m in basis.items() if m.cols}
        if not dims:
            continue
        diff = {}
        for d in dims:
            if d - 1 in dims:
                sol = solve_matrix(basis[d - 1],
                                   p.component(key).d(d) * basis[d])
                if sol is None:
                    raise AssertionError(
                        f"candidate suboperad not d-closed at {key}")
                diff[d] = sol
        complexes[key] = (ChainComplex(dims, diff), basis)
    actions = {}
    for key, (sub, basis) in complexes.items():
        n = key[1] if isinstance(key, tuple) else key
        gens = []
        ga = p.group_action(key)
        for j in range(1, n):
            sigma = Permutation.transposition(n, j)
            act = ga.action(sigma)
            blocks = {}
            for d in sub.dims:
                sol = solve_matrix(basis[d], act.block(d) * basis[d])
                if sol is None:
                    raise AssertionError(
                        f"candidate suboperad not action-closed at {key}")
                blocks[d] = sol
            gens.append(ChainMap(sub, sub, blocks, check=False))
        actions[key] = GroupAction(n, sub, gens, check=False)
    comp = {}
    for trip in p.comp_keys():
        key1, i, key2 = trip
        tkey = p.comp_target(*trip)
        if key1 not in complexes or key2 not in complexes \
                or tkey not in complexes:
            # compositions into a vanished component must vanish
            if key1 in complexes and key2 in complexes:
                c1, b1 = complexes[key1]
                c2, b2 = complexes[key2]
                for d1 in c1.dims:
                    for k1 in range(c1.dim(d1)):
                        for d2 in c2.dims:
                            for k2 in range(c2.dim(d2)):
                                img = p.compose(key1, i, key2, d1,
                                                b1[d1].col(k1), d2,
                                                b2[d2].col(k2))
                                if any(x != 0 for x in img):
                                    raise AssertionError(
                                        "suboperad closure fails "
                                        f"at {trip}")
            continue
        c1, b1 = complexes[key1]
        c2, b2 = complexes[key2]
        ct, bt = complexes[tkey]
        table = CompTable()
        for d1 in c1.dims:
            for k1 in range(c1.dim(d1)):
                v1 = b1[d1].col(k1)
                for d2 in c2.dims:
                    for k2 in range(c2.dim(d2)):
                        v2 = b2[d2].col(k2)
                        img = p.compose(key1, i, key2, d1, v1, d2, v2)
                        if all(x == 0 for x in img):
                            continue
                        if d1 + d2 not in bt:
                            raise AssertionError(
                                f"suboperad closure fails at {trip}")
                        sol = solve(bt[d1 + d2], img)
                        if sol is None:
                            raise AssertionError(
                                f"suboperad closure fails at {trip}")
                        for row, coeff in enumerate(sol):
                            table.add(d1, k1, d2, k2, row, coeff)
        if not table.is_zero():
            comp[trip] = table
    if modular:
        contr = {}
        for (key, i, j) in p.contr_keys():
            tkey = (key[0] + 1, key[1] - 2)
            if key not in complexes:
                continue
            c1, b1 = complexes[key]
            table = ContrTable()
            for d in c1.dims:
                for k in range(c1.dim(d)):
                    img = p.contract(key, i, j, d, b1[d].col(k))
                    if all(x == 0 for x in img):
                        continue
                    if tkey not in complexes or d not in complexes[tkey][1]:
                        raise AssertionError(
                            f"suboperad closure fails at xi {key}")
                    sol = solve(complexes[tkey][1][d], img)
                    if sol is None:
                        raise AssertionError(
                            f"suboperad closure fails at xi {key}")
                    for row, coeff in enumerate(sol):
                        table.add(d, k, row, coeff)
            if table.entries:
                contr[(key, i, j)] = table
        sub_op = ModularOperad(ModularSigmaModule(actions, check=False),
                               comp, contr, p.max_dim, cut=p.cut)
    else:
        sub_op = DGOperad(SigmaModule(actions, check=False), comp,
                          p.max_arity, cut=p.cut)
    incl = OperadMorphism(sub_op, p, {
        key: ChainMap(complexes[key][0], p.component(key),
                      complexes[key][1], check=False)
        for key in complexes})
    return sub_op, incl


def formality_witness_from_pure(p, f: OperadMorphism,
                                w: WeightFunction) -> FormalityWitness:
    """Apply the weight truncation componentwise to a pure endomorphism.

    Returns the zigzag p <- TP -> HP; closure of TP under the structure
    maps is a hard error (it would contradict monoidality and indicates
    an upstream bug), and both arrows are certified weak equivalences.
    """
    purity_check(p, f, w)
    modular = isinstance(p, ModularOperad)
    keys = p.indices if modular else p.arities
    components = {}
    projections = {}
    for key in keys:
        comp = p.component(key)
        if comp.is_zero():
            continue
        res = t_functor(comp, f.block(key), w)
        components[key] = {d: res.inclusion.block(d)
                           for d in res.complex.dims}
        projections[key] = res
    tp, incl = _suboperad_from_components(p, components)
    h_transfer = homology_operad(p)
    hp = h_transfer.operad
    proj_maps = {}
    for key in components:
        res = projections[key]
        sub = incl.block(key).src
        proj_maps[key] = ChainMap(sub, hp.component(key), res.projection.blocks,
                                  check=False)
        proj_maps[key].assert_chain()
    proj = OperadMorphism(tp, hp, proj_maps)
    bad = proj.validate()
    if bad:
        raise AssertionError("projection onto homology is not an operad "
                             "morphism: " + bad[0])
    bad = incl.validate()
    if bad:
        raise AssertionError("inclusion is not an operad morphism: " + bad[0])
    ok_incl, _ = weak_equivalence_test(incl)
    ok_proj, _ = weak_equivalence_test(proj)
    if not (ok_incl and ok_proj):
        raise AssertionError("weight-truncation arrows are not weak "
                             "equivalences")
    return FormalityWitness([("inclusion", incl), ("projection", proj)], tp,
                            automorphism=f)


def formality_check(p, up_to=None, alpha=Fraction(2), seed=0):
    """Search for a formality witness through the minimal model.

    Computes the minimal model M -> p, attempts to lift the grading
    automorphism of HM to an automorphism f of M by levelwise
    obstruction solving, and on success certifies the zigzag
    p <- M <- TM -> HM.  Returns None (Inconclusive) when an
    obstruction system has no solution inside the window;
    non-formality is NOT certified.
    """
    w = WeightFunction(Fraction(alpha))
    mm = minimal_model(p, up_to, seed=seed)
    m_op = mm.operad
    modular = isinstance(m_op, ModularOperad)
    keys = m_op.indices if modular else m_op.arities
    h_target = {}
    for key in keys:
        comp = m_op.component(key)
        if comp.is_zero():
            continue
        hrec = homology(comp)
        h_target[key] = {
            d: Matrix.identity(hrec.dim(d)).scale(w.base ** d)
            for d in hrec.dims}
    try:
        f = endomorphism_with_prescribed_homology(mm, h_target, seed=seed)
    except ObstructionError:
        return None
    if not f.is_iso():
        # weak equivalence between minimal operads must be an iso
        raise AssertionError("lifted automorphism is not invertible")
    purity_check(m_op, f, w)
    witness = formality_witness_from_pure(m_op, f, w)
    arrows = [("model", mm.morphism)] + witness.arrows
    return FormalityWitness(arrows, witness.t_operad, automorphism=f)
