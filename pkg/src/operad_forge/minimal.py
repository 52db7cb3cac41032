"""Principal extensions and minimal models.

The inductive algorithm follows the canonical tower: at each level
(arity for operads, modular dimension for modular operads) the cone of
the current quasi-morphism supplies new generators, an equivariant
section of cycles onto homology supplies the attachment map, and the
tower step is a principal extension.  All arbitrary choices (sections,
generator bases) are drawn from a seeded deterministic source; seed 0
means plain reduced-echelon choices.

Lifting along weak equivalences solves one linear system per level in
the new generator images: the extension condition d g = f xi plus
agreement of induced homology with the prescribed map.  Over a field of
characteristic zero two chain maps are homotopic exactly when they agree
on homology, so the returned componentwise homotopy certificates exist
whenever the system was solvable.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .chain import (
    ChainComplex,
    ChainMap,
    homology,
    homotopy_solve,
    induced_map,
    mapping_cone,
)
from .free import (
    FreeModularBuilder,
    FreeOperadBuilder,
    evaluate_graph_basis,
    evaluate_tree_basis,
    extend_freely,
    morphism_from_generators,
)
from .operad import (
    DGOperad,
    ModularOperad,
    OperadMorphism,
    truncate,
)
from .qlinalg import F0, F1, Matrix, kernel, solve
from .sigma import (
    GroupAction,
    ModularSigmaModule,
    Permutation,
    SigmaModule,
    all_permutations,
    modular_dimension,
    stable_pairs_with_dimension,
)


class ObstructionError(RuntimeError):
    """An extension/lifting system had no solution.

    For lifts along genuine weak equivalences this signals an internal
    inconsistency; formality checks treat it as Inconclusive.
    """


class NotIsomorphicError(RuntimeError):
    """Minimal models with different generator dimensions."""


# -- helpers ------------------------------------------------------------------


def _is_modular(op):
    return isinstance(op, ModularOperad)


def _level_keys(op, n):
    return stable_pairs_with_dimension(n) if _is_modular(op) else [n]


def _key_arity(key):
    return key[1] if isinstance(key, tuple) else key


def _make_builder(op, gens, window):
    if _is_modular(op):
        return FreeModularBuilder(gens, window)
    return FreeOperadBuilder(gens, max(window, 2))


def _window(op):
    return op.max_dim if _is_modular(op) else op.max_arity


def _evaluate_component(builder, dst, images, key, modular, skip_summand=None):
    """Evaluation matrices (degree -> Matrix) of a free component in dst.

    ``skip_summand`` leaves the columns of one summand zero (used for
    the corolla while its generator images are still unknown).
    """
    layout = builder.layouts[key]
    target = dst.component(key)
    blocks = {}
    for deg in layout.dims:
        blocks[deg] = [[F0] * layout.dim(deg)
                       for _ in range(target.dim(deg))]
    if modular:
        for s, (graph, td, coin) in enumerate(builder.summands[key]):
            if s == skip_summand:
                continue
            cc = coin.complex
            for deg in cc.dims:
                for col in range(cc.dim(deg)):
                    lifted = builder._lift_component_basis(key, s, deg, col)
                    res = evaluate_graph_basis(dst, graph, images, lifted)
                    gcol = layout.offset(s, deg) + col
                    for d, vec in res.items():
                        for r, x in enumerate(vec):
                            blocks[d][r][gcol] = x
    else:
        for s, (tree, td) in enumerate(builder.summands[key]):
            if s == skip_summand:
                continue
            for deg in td.complex.dims:
                for col in range(td.complex.dim(deg)):
                    label = td.basis(deg)[col]
                    d, vec = evaluate_tree_basis(dst, tree, images, label)
                    gcol = layout.offset(s, deg) + col
                    for r, x in enumerate(vec):
                        blocks[d][r][gcol] = x
    return {d: Matrix(target.dim(d), layout.dim(d), g)
            for d, g in blocks.items()}


def _diagonal_action(n, cone, a_action, b_action, a_complex, b_complex):
    """Sigma_n action on a mapping cone A + B[1] (diagonal blocks)."""
    gens = []
    for j in range(1, n):
        sigma = Permutation.transposition(n, j)
        ra = a_action.action(sigma) if a_action else None
        rb = b_action.action(sigma) if b_action else None
        blocks = {}
        for i in cone.dims:
            na, nb = a_complex.dim(i), b_complex.dim(i - 1)
            grid = [[F0] * (na + nb) for _ in range(na + nb)]
            if na:
                mat = ra.block(i) if ra else Matrix.identity(na)
                for r in range(na):
                    for c in range(na):
                        grid[r][c] = mat.data[r][c]
            if nb:
                mat = rb.block(i - 1) if rb else Matrix.identity(nb)
                for r in range(nb):
                    for c in range(nb):
                        grid[na + r][na + c] = mat.data[r][c]
            blocks[i] = Matrix(na + nb, na + nb, grid)
        gens.append(ChainMap(cone, cone, blocks, check=False))
    return GroupAction(n, cone, gens, check=False)


def _random_unimodular(rng, n, bound=1):
    upper = [[F1 if i == j else (Fraction(rng.randint(-bound, bound)) if j > i
                                 else F0) for j in range(n)] for i in range(n)]
    lower = [[F1 if i == j else (Fraction(rng.randint(-bound, bound)) if j < i
                                 else F0) for j in range(n)] for i in range(n)]
    return Matrix(n, n, upper) * Matrix(n, n, lower)


def _equivariant_section(cone_action: GroupAction, hrec, rng=None):
    """Equivariant section V = H(C) -> cycles of C.

    Starts from the reduced-echelon representatives, optionally applies
    a seeded boundary perturbation and a seeded change of basis on V,
    then averages g . s0 . g^{-1} over the group by the coset recursion
    avg(Sigma_k) = avg(Sigma_{k-1}) o avg over the transpositions (j k),
    which costs O(arity^2) sparse matrix products instead of a factorial
    sum.  Returns (section blocks, V GroupAction); the section
    classifies to the identity of V in its (possibly mixed) basis.
    """
    cone = cone_action.complex
    n = cone_action.n
    hdims = dict(hrec.dims)
    s0 = {}
    for d, h in hdims.items():
        mat = hrec.rep_matrix(d)
        if rng is not None:
            pert = Matrix(cone.dim(d + 1), h,
                          [[Fraction(rng.randint(-1, 1)) for _ in range(h)]
                           for _ in range(cone.dim(d + 1))])
            mat = mat + cone.d(d + 1) * pert
        s0[d] = mat
    # induced V action from the cone action (in the echelon basis)
    v_complex = ChainComplex(hdims)
    v_gens = []
    for j in range(1, n):
        sigma = Permutation.transposition(n, j)
        blocks = induced_map(cone_action.action(sigma), hrec, hrec)
        v_gens.append(ChainMap(v_complex, v_complex, blocks, check=False))
    mix = None
    if rng is not None:
        from .qlinalg import solve_matrix
        mix = {d: _random_unimodular(rng, h) for d, h in hdims.items()}
        inv = {d: solve_matrix(m, Matrix.identity(m.rows))
               for d, m in mix.items()}
        s0 = {d: s0[d] * mix[d] for d in s0}
        v_gens = [ChainMap(v_complex, v_complex,
                           {d: inv[d] * gmap.block(d) * mix[d] for d in hdims},
                           check=False)
                  for gmap in v_gens]
    v_action = GroupAction(n, v_complex, v_gens, check=False)
    section = {}
    for d, h in hdims.items():
        x = s0[d]
        for k in range(n, 1, -1):
            acc = x  # j = k term: the identity
            for j in range(1, k):
                t = Permutation.transposition(n, j, k)
                rc = cone_action.action(t).block(d)
                rv = v_action.action(t).block(d)
                acc = acc + rc * (x * rv)
            x = acc.scale(Fraction(1, k))
        section[d] = x
    # sanity: cycles, classification, and generator equivariance
    for d, h in hdims.items():
        if not (cone.d(d) * section[d]).is_zero():
            raise AssertionError("section does not land in cycles")
        expected = mix[d] if mix is not None else Matrix.identity(h)
        for col in range(h):
            cls = hrec.classify(d, section[d].col(col))
            if cls is None or list(cls) != list(expected.col(col)):
                raise AssertionError("section is not a section")
        for j in range(1, n):
            sigma = Permutation.transposition(n, j)
            lhs = cone_action.action(sigma).block(d) * section[d]
            rhs = section[d] * v_action.action(sigma).block(d)
            if lhs != rhs:
                raise AssertionError("section is not equivariant")
    return section, v_action


# -- principal extensions ------------------------------------------------------


@dataclass
class PrincipalExtension:
    """Result of attaching generators V along xi: V[-1] -> P_level."""

    base: object
    level: int
    generators: dict          # key -> GroupAction (zero differential)
    attachment: dict          # key -> dict degree -> Matrix into base component
    result: object


def _truncated_with_cone(p, level, generators, xi):
    """t_level(p) with the level component replaced by the cone of xi."""
    modular = _is_modular(p)
    tr = truncate(p, level)
    actions = dict(tr.module.components)
    cone_offsets = {}
    for key, v_act in generators.items():
        pc = p.component(key)
        vc = v_act.complex
        xi_blocks = xi.get(key, {})
        shifted = ChainComplex({d - 1: n for d, n in vc.dims.items()},
                               check=False)
        eta = ChainMap(shifted, pc,
                       {d - 1: xi_blocks[d] for d in xi_blocks},
                       check=True)
        cone, _, _ = mapping_cone(eta)
        n = _key_arity(key)
        shifted_action = GroupAction(
            n, shifted,
            [ChainMap(shifted, shifted,
                      {d - 1: g.block(d) for d in vc.dims}, check=False)
             for g in v_act.generators], check=False)
        actions[key] = _diagonal_action(
            n, cone, p.group_action(key), shifted_action, pc, shifted)
        cone_offsets[key] = pc
    # compositions: the old tables, targets at the level embedded into
    # the cone (the P-part sits first)
    comp = dict(tr.comp)
    if modular:
        contr = dict(tr.contr)
        out = ModularOperad(ModularSigmaModule(actions, check=False), comp,
                            contr, max_dim=level, cut=level)
    else:
        out = DGOperad(SigmaModule(actions, check=False), comp,
                       max_arity=level, cut=level)
    return out


def principal_extension(p, level, generators, xi, window=None,
                        strict=True) -> PrincipalExtension:
    """Attach generators at the given level along xi and complete freely.

    ``generators``: dict key -> GroupAction concentrated at the level
    (zero differential); ``xi``: dict key -> dict degree -> Matrix
    sending V_degree into cycles of the base component in degree-1,
    equivariantly.  The result is t_!(truncation-with-cone) within the
    window.
    """
    modular = _is_modular(p)
    window = window if window is not None else _window(p)
    for key, v_act in generators.items():
        lv = modular_dimension(*key) if modular else key
        if lv != level:
            raise ValueError("generators not concentrated at the level")
        if v_act.complex.diff:
            raise ValueError("generators must carry the zero differential")
        pc = p.component(key)
        n = _key_arity(key)
        for d, m in xi.get(key, {}).items():
            if m.rows != pc.dim(d - 1) or m.cols != v_act.complex.dim(d):
                raise ValueError("attachment block has the wrong shape")
            if not (pc.d(d - 1) * m).is_zero():
                raise ValueError("attachment is not a chain map into cycles")
        base_action = p.group_action(key)
        for j in range(1, n):
            sigma = Permutation.transposition(n, j)
            rp = base_action.action(sigma) if base_action else None
            for d, m in xi.get(key, {}).items():
                lhs = (rp.block(d - 1) if rp else
                       Matrix.identity(pc.dim(d - 1))) * m
                rhs = m * v_act.action(sigma).block(d)
                if lhs != rhs:
                    raise ValueError("attachment is not equivariant")
    x = _truncated_with_cone(p, level, generators, xi)
    result = extend_freely(x, window, strict=strict)
    if strict:
        lower = truncate(p, level - 1) if level > (0 if modular else 2) else None
        if lower is not None:
            got = truncate(result, level - 1)
            if got.total_dims() != lower.total_dims():
                raise AssertionError("principal extension changed the "
                                     "lower truncation")
        for key, v_act in generators.items():
            pc, rc = p.component(key), result.component(key)
            for d in set(pc.dims) | set(v_act.complex.dims):
                if rc.dim(d) != pc.dim(d) + v_act.complex.dim(d):
                    raise AssertionError("cone dimensions violated at the level")
    return PrincipalExtension(p, level, generators, xi, result)


def cone_completion(lam: ChainMap, mu: ChainMap, eta: ChainMap,
                    zeta: ChainMap):
    """Complete a commutative square through the cones.

    Input: eta: B -> A, mu: A -> Y, zeta: Y -> X, lam: B -> (C zeta)[-1]
    with -p_Y lam = mu eta.  Returns (nu: C eta -> X, homotopy h) where
    the central square commutes exactly and the right square commutes up
    to h: incl_X nu - lam[1] proj_B = d h + h d.
    """
    b, a = eta.src, eta.dst
    y, x = zeta.src, zeta.dst
    czeta, incl_x, proj_y1 = mapping_cone(zeta)
    # p_Y at shifted degrees: lam lands in (C zeta)[-1]_i = X_{i+1} + Y_i
    for i in set(b.dims):
        if lam.src.dim(i) != b.dim(i):
            raise ValueError("lambda has the wrong source")
        if lam.dst.dim(i) != czeta.dim(i + 1):
            raise ValueError("lambda must land in the shifted cone")
    # check -p_Y lam = mu eta
    for i in b.dims:
        lam_i = lam.block(i)
        py = Matrix.zeros(y.dim(i), x.dim(i + 1)).hstack(
            Matrix.identity(y.dim(i)))
        lhs = py * lam_i
        rhs = mu.block(i) * eta.block(i)
        if lhs.scale(-1) != rhs:
            raise ValueError("input square does not commute")
    ceta, incl_a, proj_b1 = mapping_cone(eta)
    nu_blocks = {}
    for i in ceta.dims:
        na, nb = a.dim(i), b.dim(i - 1)
        left = zeta.block(i) * mu.block(i)
        lam_x = lam.block(i - 1).submatrix(range(x.dim(i)), range(b.dim(i - 1)))
        nu_blocks[i] = left.hstack(lam_x) if nb else left
    nu = ChainMap(ceta, x, nu_blocks)
    # homotopy h(a, b) = (0, mu(a)) : (C eta)_i -> (C zeta)_{i+1}
    h = {}
    for i in ceta.dims:
        rows = czeta.dim(i + 1)
        if rows == 0:
            continue
        na, nb = a.dim(i), b.dim(i - 1)
        grid = [[F0] * (na + nb) for _ in range(rows)]
        mu_i = mu.block(i)
        for r in range(y.dim(i)):
            for c in range(na):
                grid[x.dim(i + 1) + r][c] = mu_i.data[r][c]
        h[i] = Matrix(rows, na + nb, grid)
    # verify the right square commutes up to h: lam[1] o proj_b sends
    # (C eta)_i onto B_{i-1} and through lam into (C zeta)_i
    lp_blocks = {}
    for i in ceta.dims:
        na, nb = a.dim(i), b.dim(i - 1)
        rows = czeta.dim(i)
        grid = [[F0] * (na + nb) for _ in range(rows)]
        lam_im1 = lam.block(i - 1)
        for r in range(min(rows, lam_im1.rows)):
            for c in range(nb):
                grid[r][na + c] = lam_im1.data[r][c]
        lp_blocks[i] = Matrix(rows, na + nb, grid)
    f1 = incl_x.compose(nu)
    shifted = ChainComplex({i + 1: n for i, n in czeta.dims.items()},
                           {i + 1: m.scale(-1) for i, m in czeta.diff.items()},
                           check=False)
    ok = True
    for i in ceta.dims:
        target = f1.block(i) - lp_blocks[i]
        acc = Matrix.zeros(czeta.dim(i), ceta.dim(i))
        if i in h:
            acc = acc + czeta.d(i + 1) * h[i]
        if i - 1 in h:
            acc = acc + h[i - 1] * ceta.d(i)
        if acc != target:
            ok = False
    if not ok:
        raise AssertionError("cone completion homotopy identity failed")
    return nu, h


# -- minimal models -----------------------------------------------------------


@dataclass
class LevelRecord:
    level: int
    generator_dims: dict     # key -> dict degree -> dim
    attachments: dict        # key -> dict degree -> Matrix


@dataclass
class MinimalModel:
    operad: object
    morphism: OperadMorphism
    tower: list
    seed: int

    @property
    def generator_dims(self):
        out = {}
        for rec in self.tower:
            for key, dims in rec.generator_dims.items():
                out[key] = dict(dims)
        return out


def minimal_model(p, up_to=None, seed=0) -> MinimalModel:
    """Inductive minimal model of a dg (modular) operad.

    Levels run over arities 2..up_to (operads) or modular dimensions
    0..up_to (modular operads); each step is a principal extension whose
    generators are the homology of the cone of the current morphism.
    Deterministic for a fixed seed.
    """
    modular = _is_modular(p)
    window = _window(p)
    up_to = up_to if up_to is not None else window
    if up_to > window:
        raise ValueError("requested window exceeds the operad's support")
    gens = {}
    attachments = {}
    images = {}
    tower = []
    levels = range(0, up_to + 1) if modular else range(2, up_to + 1)
    for n in levels:
        builder = _make_builder(p, gens, n)
        rec = LevelRecord(n, {}, {})
        for key in _level_keys(p, n):
            pc = p.component(key)
            layout = builder.layouts.get(key)
            m_complex = builder.component_complex(key, attachments) \
                if layout is not None else ChainComplex.zero()
            arity = _key_arity(key)
            if m_complex.is_zero():
                m_action = GroupAction.trivial(arity, m_complex)
                rho_blocks = {}
            else:
                m_action = GroupAction(
                    arity, m_complex,
                    [builder.action_generator(key, j, m_complex)
                     for j in range(1, arity)], check=False)
                rho_blocks = _evaluate_component(builder, p, images, key,
                                                 modular)
            rho_map = ChainMap(m_complex, pc, rho_blocks, check=True)
            cone, _, _ = mapping_cone(rho_map)
            if cone.is_zero():
                continue
            cone_action = _diagonal_action(
                arity, cone, p.group_action(key), m_action, pc, m_complex)
            hrec = homology(cone)
            if not hrec.dims:
                continue
            rng = random.Random(f"{seed}:{n}:{key}") if seed else None
            section, v_action = _equivariant_section(cone_action, hrec, rng)
            # split the section into its P and M parts; degrees shift:
            # V_d sits in cone degree d = P_d + M_{d-1}
            xi_blocks = {}
            img_blocks = {}
            for d, h in hrec.dims.items():
                na = pc.dim(d)
                top = section[d].submatrix(range(na), range(h))
                bottom = section[d].submatrix(
                    range(na, na + m_complex.dim(d - 1)), range(h))
                img_blocks[d] = top
                if not bottom.is_zero():
                    xi_blocks[d] = bottom.scale(-1)
            gens[key] = v_action
            if xi_blocks:
                attachments[key] = xi_blocks
            images[key] = ChainMap(v_action.complex, pc, img_blocks,
                                   check=False)
            rec.generator_dims[key] = dict(hrec.dims)
            rec.attachments[key] = dict(xi_blocks)
        tower.append(rec)
    final_builder = _make_builder(p, gens, up_to)
    m_op = final_builder.finish(attachments)
    rho = morphism_from_generators(m_op, p, images, check=True)
    return MinimalModel(m_op, rho, tower, seed)


def is_minimal(op):
    """Minimality via the tower: free on zero-differential generators
    with decomposable attachment maps.

    Returns (True, None) or (False, witness level).  Requires the operad
    to carry tower bookkeeping (built by the free constructions here).
    """
    if op.tower is None or op.free is None:
        raise ValueError("operad carries no tower bookkeeping")
    modular = _is_modular(op)
    builder = op.free
    for key, ga in op.tower.gen_actions.items():
        lv = modular_dimension(*key) if modular else key
        if ga.complex.diff:
            return False, lv
        att = op.tower.attachments.get(key)
        if not att:
            continue
        corolla = None
        for s, item in enumerate(builder.summands[key]):
            obj = item[0]
            nverts = (obj.n_vertices if modular else len(obj.vertices()))
            if nverts == 1:
                corolla = s
                break
        if corolla is None:
            continue
        layout = builder.layouts[key]
        comp_of_summand = builder.summands[key][corolla][1].complex if not modular \
            else builder.summands[key][corolla][2].complex
        for d, m in att.items():
            off = layout.offset(corolla, d - 1)
            span = comp_of_summand.dim(d - 1)
            for r in range(off, off + span):
                if any(m.data[r][c] != 0 for c in range(m.cols)):
                    return False, lv
    return True, None


# -- lifting ------------------------------------------------------------------


def _extended_classify(hrec, degree):
    """Linear extension of the cycle-classifying map to the whole space."""
    c = hrec.complex
    n = c.dim(degree)
    h = hrec.dim(degree)
    if h == 0 or n == 0:
        return Matrix.zeros(h, n)
    z = hrec.cycles[degree].basis
    # complement of Z inside the ambient space
    from .qlinalg import rank as _rank
    chosen = []
    cur = z
    rk = z.cols
    for j in range(n):
        e = [F0] * n
        e[j] = F1
        trial = cur.hstack(Matrix.column(e))
        if _rank(trial) > rk:
            chosen.append(tuple(e))
            cur = trial
            rk += 1
    stacked = z.hstack(Matrix.from_cols(chosen, rows=n)) if chosen else z
    proj = hrec.projections.get(degree)
    cols = []
    for j in range(n):
        e = [F0] * n
        e[j] = F1
        sol = solve(stacked, e)
        zcoords = sol[:z.cols]
        cols.append(tuple(proj.apply(zcoords)))
    return Matrix.from_cols(cols, rows=h)


def _corolla_layout(builder, key, modular):
    for s, item in enumerate(builder.summands[key]):
        obj = item[0]
        nverts = obj.n_vertices if modular else len(obj.vertices())
        if nverts == 1:
            return s
    return None


def _count_type_vertices(builder, ckey, gen_key, modular):
    """Max count of gen_key-typed vertices over the summands of ckey."""
    worst = 0
    for item in builder.summands.get(ckey, []):
        obj = item[0]
        if modular:
            count = sum(1 for v in range(obj.n_vertices)
                        if obj.vertex_type(v) == gen_key)
        else:
            count = sum(1 for v in obj.vertices()
                        if len(v.children) == gen_key)
        worst = max(worst, count)
    return worst


def _assign_c_keys(op, gen_keys):
    """Attach every nonzero component to the generator key that owns its
    homology condition.

    The owner is the last-processed generator key whose images actually
    appear in the component (so the condition rows are nonconstant
    there); components no generator can move are attached to the last
    admissible key as a pure consistency check."""
    modular = _is_modular(op)
    builder = op.free
    keys = op.indices if modular else op.arities
    order = {k: pos for pos, k in enumerate(gen_keys)}
    lv = {k: (modular_dimension(*k) if modular else k) for k in gen_keys}
    out = {k: [] for k in gen_keys}
    for ckey in keys:
        if op.component(ckey).is_zero():
            continue
        clevel = modular_dimension(*ckey) if modular else ckey
        candidates = [k for k in gen_keys if lv[k] <= clevel]
        if not candidates:
            continue
        movers = [k for k in candidates
                  if k == ckey
                  or _count_type_vertices(builder, ckey, k, modular) >= 1]
        pool = movers or candidates
        owner = max(pool, key=lambda k: order[k])
        out[owner].append(ckey)
    return out


def _solve_level(mm, q_operad, post_maps, prescribed, key, images_so_far,
                 r_hom, c_keys, seed=0):
    """Solve for the generator images at one key of the tower.

    Conditions: (a) d_Q g = phi_prev(xi), (b) equivariance, and (c) for
    every component in c_keys: the induced homology map, composed with
    the post map, equals the prescribed matrix.  The (c) rows are
    assembled by unit perturbations of g, legitimate because every
    passed component is linear in g (at most one key-typed vertex per
    summand; checked by the caller).  Returns the blocks of g.
    """
    op = mm.operad
    modular = _is_modular(op)
    builder = op.free
    v_act = op.tower.gen_actions[key]
    vc = v_act.complex
    qc = q_operad.component(key)
    arity = _key_arity(key)
    m_complex = op.component(key)
    corolla = _corolla_layout(builder, key, modular)
    # phi_prev on the decomposable part: evaluation with known images
    prev_eval = _evaluate_component(builder, q_operad, images_so_far, key,
                                    modular, skip_summand=corolla) \
        if images_so_far else {}

    def prev_matrix(deg):
        if deg in prev_eval:
            return prev_eval[deg]
        return Matrix.zeros(qc.dim(deg), m_complex.dim(deg))

    # unknown layout: g[deg][r][k]
    offsets = {}
    total = 0
    for d in sorted(vc.dims):
        offsets[d] = total
        total += qc.dim(d) * vc.dim(d)

    def var(d, r, k):
        return offsets[d] + r * vc.dim(d) + k

    rows, rhs = [], []
    xi = op.tower.attachments.get(key, {})
    # (a) d_Q g = phi_prev o xi
    for d in sorted(vc.dims):
        nv, nq = vc.dim(d), qc.dim(d)
        dq = qc.d(d)
        target = prev_matrix(d - 1) * xi[d] if d in xi else \
            Matrix.zeros(qc.dim(d - 1), nv)
        for r in range(qc.dim(d - 1)):
            for k in range(nv):
                row = [F0] * total
                for rr in range(nq):
                    if dq.data[r][rr] != 0:
                        row[var(d, rr, k)] += dq.data[r][rr]
                rows.append(row)
                rhs.append(target.data[r][k])
    # (b) equivariance: g R_V(s) = R_Q(s) g
    q_ga = q_operad.group_action(key)
    for j in range(1, arity):
        sigma = Permutation.transposition(arity, j)
        rv = v_act.action(sigma)
        rq = q_ga.action(sigma) if q_ga else None
        for d in sorted(vc.dims):
            nv, nq = vc.dim(d), qc.dim(d)
            rvb = rv.block(d)
            rqb = rq.block(d) if rq else Matrix.identity(nq)
            for r in range(nq):
                for k in range(nv):
                    row = [F0] * total
                    for kk in range(nv):
                        if rvb.data[kk][k] != 0:
                            row[var(d, r, kk)] += rvb.data[kk][k]
                    for rr in range(nq):
                        if rqb.data[r][rr] != 0:
                            row[var(d, rr, k)] -= rqb.data[r][rr]
                    rows.append(row)
                    rhs.append(F0)
    # (c) homology conditions, assembled by unit perturbations of g
    units = [(d, r, k) for d in sorted(vc.dims)
             for r in range(qc.dim(d)) for k in range(vc.dim(d))]
    zero_g = ChainMap(vc, qc, {}, check=False)
    for ckey in c_keys:
        mc = op.component(ckey)
        if mc.is_zero() or ckey not in r_hom:
            continue
        hm = homology(mc)
        if not hm.dims:
            continue
        base_images = dict(images_so_far)
        base_images[key] = zero_g
        base_eval = _evaluate_component(builder, q_operad, base_images, ckey,
                                        modular)
        deltas = {}
        for (d, r, k) in units:
            unit_images = dict(images_so_far)
            unit_images[key] = _unit_g_map(vc, qc, d, r, k)
            ev = _evaluate_component(builder, q_operad, unit_images, ckey,
                                     modular)
            delta = {deg: ev[deg] - base_eval[deg] for deg in ev
                     if not (ev[deg] - base_eval[deg]).is_zero()}
            if delta:
                deltas[(d, r, k)] = delta
        post = post_maps.get(ckey)
        hr = r_hom[ckey]
        presc = prescribed.get(ckey, {})
        qcc = q_operad.component(ckey)
        for d in sorted(hm.dims):
            reps = hm.rep_matrix(d)
            ext = _extended_classify(hr, d)
            post_block = post.block(d) if post else Matrix.identity(qcc.dim(d))
            lam = ext * post_block
            for col in range(hm.dim(d)):
                z = reps.col(col)
                fixed = lam.apply(base_eval[d].apply(z)) if d in base_eval \
                    else (F0,) * hr.dim(d)
                want = presc[d].col(col) if d in presc else (F0,) * hr.dim(d)
                contribs = {}
                for u, dmat in deltas.items():
                    if d in dmat:
                        c_vec = lam.apply(dmat[d].apply(z))
                        if any(x != 0 for x in c_vec):
                            contribs[u] = c_vec
                for hrow in range(hr.dim(d)):
                    row = [F0] * total
                    for (du, ru, ku), c_vec in contribs.items():
                        if c_vec[hrow] != 0:
                            row[var(du, ru, ku)] += c_vec[hrow]
                    rows.append(row)
                    rhs.append(want[hrow] - fixed[hrow])
    system = Matrix(len(rows), total, rows) if rows else Matrix.zeros(0, total)
    sol = solve(system, rhs) if rows else (F0,) * total
    if sol is None:
        raise ObstructionError(f"obstruction system unsolvable at {key}")
    if seed:
        rng = random.Random(f"{seed}:lift:{key}")
        ker = kernel(system)
        if ker.dim:
            extra = [F0] * total
            for j in range(ker.dim):
                c = Fraction(rng.randint(-1, 1))
                if c:
                    colv = ker.basis.col(j)
                    extra = [a + c * b for a, b in zip(extra, colv)]
            sol = tuple(a + b for a, b in zip(sol, extra))
    blocks = {}
    for d in sorted(vc.dims):
        nv, nq = vc.dim(d), qc.dim(d)
        grid = [[sol[var(d, r, k)] for k in range(nv)] for r in range(nq)]
        m = Matrix(nq, nv, grid)
        if not m.is_zero():
            blocks[d] = m
    return ChainMap(vc, qc, blocks, check=False)


def _unit_g_map(vc, qc, d, r, k):
    grid = [[F0] * vc.dim(d) for _ in range(qc.dim(d))]
    grid[r][k] = F1
    return ChainMap(vc, qc, {d: Matrix(qc.dim(d), vc.dim(d), grid)},
                    check=False)


def _ordered_gen_keys(op):
    modular = _is_modular(op)
    return sorted(op.tower.gen_actions,
                  key=lambda k: ((modular_dimension(*k), k) if modular
                                 else (k,)))


def _linear_c_keys(op, gen_key, candidates):
    """Drop components whose dependence on gen_key images is nonlinear
    (more than one gen_key-typed vertex in some summand); their homology
    conditions are then only checked post hoc."""
    modular = _is_modular(op)
    builder = op.free
    out = []
    for ckey in candidates:
        if _count_type_vertices(builder, ckey, gen_key, modular) <= 1:
            out.append(ckey)
    return out


def lift(rho: OperadMorphism, psi: OperadMorphism, mm: MinimalModel,
         seed=0, certify=True):
    """Lift psi: M -> R through the weak equivalence rho: Q -> R.

    Returns (phi: M -> Q, certificates) with rho o phi componentwise
    chain homotopic to psi, certified by explicit homotopies.
    """
    op = mm.operad
    if psi.src is not op:
        raise ValueError("psi must start at the minimal model's operad")
    q_operad, r_operad = rho.src, rho.dst
    modular = _is_modular(op)
    r_hom = {}
    prescribed = {}
    keys = op.indices if modular else op.arities
    for key in keys:
        if key not in op.tower.gen_actions and op.component(key).is_zero():
            continue
        hr = homology(r_operad.component(key))
        r_hom[key] = hr
        hm = homology(op.component(key))
        ind = induced_map(psi.block(key), hm, hr)
        prescribed[key] = ind
    gen_keys = _ordered_gen_keys(op)
    assignments = _assign_c_keys(op, gen_keys)
    images = {}
    for key in gen_keys:
        c_keys = _linear_c_keys(op, key, assignments[key])
        images[key] = _solve_level(mm, q_operad, rho.maps, prescribed,
                                   key, images, r_hom, c_keys, seed=seed)
    phi = morphism_from_generators(op, q_operad, images, check=True)
    certificates = {}
    if certify:
        comp = rho.compose(phi)
        for key in keys:
            f = comp.block(key)
            g = psi.block(key)
            h = homotopy_solve(f, g)
            if h is None:
                raise ObstructionError(
                    f"lift certificate failed at {key}: composite is not "
                    "homotopic to psi (is rho a weak equivalence?)")
            certificates[key] = h
    return phi, certificates


def endomorphism_with_prescribed_homology(mm: MinimalModel, h_target,
                                          seed=0):
    """Endomorphism f of the minimal model with H(f) prescribed.

    ``h_target``: dict key -> dict degree -> Matrix on H(M_key).
    Raises ObstructionError when some level system has no solution.
    """
    op = mm.operad
    modular = _is_modular(op)
    keys = op.indices if modular else op.arities
    r_hom = {key: homology(op.component(key)) for key in keys
             if not op.component(key).is_zero()}
    prescribed = {}
    for key, hr in r_hom.items():
        prescribed[key] = {d: h_target[key][d] for d in hr.dims} \
            if key in h_target else {}
    gen_keys = _ordered_gen_keys(op)
    assignments = _assign_c_keys(op, gen_keys)
    images = {}
    post_maps = {}
    for key in gen_keys:
        c_keys = _linear_c_keys(op, key, assignments[key])
        images[key] = _solve_level(mm, op, post_maps, prescribed, key,
                                   images, r_hom, c_keys, seed=seed)
    f = morphism_from_generators(op, op, images, check=True)
    return f


def iso_between_minimal(mm1: MinimalModel, mm2: MinimalModel, seed=0):
    """An isomorphism between two minimal models of the same operad.

    Lifts mm1's quasi-morphism through mm2's and certifies the result is
    a levelwise isomorphism.  Raises NotIsomorphicError when generator
    dimensions differ.
    """
    dims1, dims2 = mm1.generator_dims, mm2.generator_dims
    if dims1 != dims2:
        raise NotIsomorphicError(
            f"generator dimensions differ: {dims1} vs {dims2}")
    if mm1.operad is mm2.operad:
        return OperadMorphism.identity(mm1.operad)
    phi, _ = lift(mm2.morphism, mm1.morphism, mm1, seed=seed)
    if not phi.is_iso():
        raise AssertionError("lift between minimal models is not an "
                             "isomorphism (weak equivalence violated?)")
    return phi
