import itertools

import pytest

from operad_forge.chain import ChainComplex
from operad_forge.sigma import GroupAction, Permutation, SigmaModule
from operad_forge.trees import (
    ConcreteGraph,
    PlanarNode,
    StableGraph,
    Tree,
    concrete_from_canonical,
    enumerate_stable_graphs,
    enumerate_trees,
    expand_vertex,
    graft_graphs,
    graph_automorphisms,
    graph_isomorphisms,
    graph_space,
    leaf,
    match_graph,
    node,
    normalize_planar,
    planar_substitute_leaf,
    relabel_legs,
    self_glue,
    tree_space,
    tree_to_planar,
)


# -- oracles ------------------------------------------------------------------


def oracle_trees(n):
    """Recursive generation by root valence without canonical forms,
    deduplicated by exhaustive isomorphism testing."""

    def gen(labels):
        labels = tuple(labels)
        if len(labels) == 1:
            return [("leaf", labels[0])]
        out = []
        # choose the block containing the smallest label for each part
        def partitions(items):
            if not items:
                yield []
                return
            first, rest = items[0], list(items[1:])
            for k in range(len(rest) + 1):
                for block_rest in itertools.combinations(rest, k):
                    block = [first] + list(block_rest)
                    remaining = [x for x in rest if x not in block_rest]
                    for others in partitions(remaining):
                        yield [block] + others
        for part in partitions(list(labels)):
            if len(part) < 2:
                continue
            choices = [gen(tuple(b)) for b in part]
            for combo in itertools.product(*choices):
                out.append(("node", tuple(combo)))
        return out

    def iso(t1, t2):
        if t1[0] != t2[0]:
            return False
        if t1[0] == "leaf":
            return t1[1] == t2[1]
        c1, c2 = list(t1[1]), list(t2[1])
        if len(c1) != len(c2):
            return False
        if not c2:
            return True
        used = [False] * len(c2)

        def backtrack(i):
            if i == len(c1):
                return True
            for j in range(len(c2)):
                if not used[j] and iso(c1[i], c2[j]):
                    used[j] = True
                    if backtrack(i + 1):
                        return True
                    used[j] = False
            return False

        return backtrack(0)

    classes = []
    for t in gen(tuple(range(1, n + 1))):
        if not any(iso(t, c) for c in classes):
            classes.append(t)
    return classes


def oracle_stable_graphs(g, l):
    """Adjacency-matrix generation + pairwise isomorphism dedup."""
    classes = []
    vmax = max(1, 2 * g - 2 + l)
    for nv in range(1, vmax + 1):
        for genera in itertools.product(range(g + 1), repeat=nv):
            e_needed = g - sum(genera) + nv - 1
            if e_needed < 0:
                continue
            cells = [(a, b) for a in range(nv) for b in range(a, nv)]
            for counts in itertools.product(range(e_needed + 1), repeat=len(cells)):
                if sum(counts) != e_needed:
                    continue
                edges = []
                for (a, b), c in zip(cells, counts):
                    edges.extend([(a, b)] * c)
                for legs in itertools.product(range(nv), repeat=l):
                    cand = StableGraph(genera, legs, tuple(edges))
                    if not cand.is_connected() or not cand.is_stable():
                        continue
                    if not any(next(graph_isomorphisms(cand, c), None)
                               for c in classes):
                        classes.append(cand)
    return classes


# -- trees --------------------------------------------------------------------


class TestEnumerateTrees:
    def test_small_counts(self):
        assert len(enumerate_trees(1)) == 0
        assert len(enumerate_trees(2)) == 1
        assert len(enumerate_trees(3)) == 4
        assert len(enumerate_trees(4)) == 26

    def test_against_oracle(self):
        for n in (2, 3, 4):
            assert len(enumerate_trees(n)) == len(oracle_trees(n))

    def test_pairwise_distinct_canonical(self):
        for n in (2, 3, 4):
            trees = enumerate_trees(n)
            assert len(set(trees)) == len(trees)

    def test_three_leaf_shapes(self):
        trees = enumerate_trees(3)
        corollas = [t for t in trees if len(t.vertices()) == 1]
        binaries = [t for t in trees if len(t.vertices()) == 2]
        assert len(corollas) == 1 and len(binaries) == 3

    def test_leaves_and_valences(self):
        for t in enumerate_trees(4):
            assert sorted(t.leaves()) == [1, 2, 3, 4]
            assert all(v >= 2 for v in t.vertex_valences())


class TestNormalize:
    def test_roundtrip_canonical(self):
        for t in enumerate_trees(4):
            match = normalize_planar(tree_to_planar(t))
            assert match.tree == t
            assert match.factor_order == tuple(range(len(t.vertices())))
            assert all(p.is_identity() for p in match.input_perms.values())

    def test_swapped_children(self):
        # planar node with children out of canonical order
        p = PlanarNode(0, (PlanarNode(1, (2, 3)), 1))
        match = normalize_planar(p)
        assert match.tree == node([leaf(1), node([leaf(2), leaf(3)])])
        assert match.input_perms[0] == Permutation((2, 1))

    def test_substitution_grafts(self):
        corolla = enumerate_trees(2)[0]
        p = tree_to_planar(corolla)
        sub = tree_to_planar(corolla, factor_offset=1, relabel={1: 2, 2: 3})
        grafted = planar_substitute_leaf(p, 2, sub)
        match = normalize_planar(grafted)
        assert match.tree == node([leaf(1), node([leaf(2), leaf(3)])])


class TestTreeSpace:
    def setup_method(self):
        self.module = SigmaModule({
            2: GroupAction.trivial(2, ChainComplex({0: 1})),
            3: GroupAction.trivial(3, ChainComplex({1: 1})),
        })

    def test_single_vertex(self):
        corolla = enumerate_trees(2)[0]
        assert tree_space(corolla, self.module).dims == {0: 1}

    def test_degree_additivity(self):
        deg1 = SigmaModule({2: GroupAction.trivial(2, ChainComplex({1: 1}))})
        two_vertex = node([leaf(1), node([leaf(2), leaf(3)])])
        assert tree_space(two_vertex, deg1).dims == {2: 1}

    def test_unsupported_valence_gives_zero(self):
        four = enumerate_trees(4)[0:1][0]
        # corolla with 4 inputs is not in the module support
        corolla4 = [t for t in enumerate_trees(4) if len(t.vertices()) == 1][0]
        assert tree_space(corolla4, self.module).is_zero()


# -- stable graphs ------------------------------------------------------------


class TestEnumerateGraphs:
    def test_zero_three(self):
        graphs = enumerate_stable_graphs(0, 3)
        assert len(graphs) == 1
        g = graphs[0]
        assert g.n_vertices == 1 and g.genera == (0,) and g.edges == ()

    def test_one_one(self):
        graphs = enumerate_stable_graphs(1, 1)
        assert len(graphs) == 2
        kinds = sorted((g.genera, len(g.edges)) for g in graphs)
        assert kinds == [((0,), 1), ((1,), 0)]

    def test_zero_four(self):
        graphs = enumerate_stable_graphs(0, 4)
        assert len(graphs) == 4
        two_vertex = [g for g in graphs if g.n_vertices == 2]
        assert len(two_vertex) == 3

    def test_against_oracle(self):
        for (g, l) in [(0, 3), (0, 4), (1, 1), (1, 2), (0, 5)]:
            assert len(enumerate_stable_graphs(g, l)) == len(oracle_stable_graphs(g, l))

    def test_genus_and_stability_recomputed(self):
        for (g, l) in [(0, 4), (1, 1), (1, 2), (2, 0)]:
            for gr in enumerate_stable_graphs(g, l):
                assert gr.genus == g
                assert gr.n_legs == l
                assert gr.is_stable() and gr.is_connected()

    def test_unstable_rejected(self):
        with pytest.raises(ValueError):
            enumerate_stable_graphs(0, 2)


class TestAutomorphisms:
    def test_loop_swap(self):
        loop = [g for g in enumerate_stable_graphs(1, 1) if g.edges][0]
        auts = graph_automorphisms(loop)
        assert len(auts) == 2
        for _, slot_map in auts:
            assert slot_map[("leg", 1)] == ("leg", 1)

    def test_two_vertex_trivial(self):
        for g in enumerate_stable_graphs(0, 4):
            if g.n_vertices == 2:
                assert len(graph_automorphisms(g)) == 1

    def test_banana_has_edge_swap(self):
        graphs = enumerate_stable_graphs(1, 2)
        bananas = [g for g in graphs
                   if g.n_vertices == 2 and len(g.edges) == 2 and
                   all(a != b for a, b in g.edges)]
        assert len(bananas) == 1
        assert len(graph_automorphisms(bananas[0])) == 2

    def test_automorphisms_fix_graph(self):
        for (g, l) in [(1, 1), (1, 2), (0, 4)]:
            for gr in enumerate_stable_graphs(g, l):
                for perm, _ in graph_automorphisms(gr):
                    assert gr.permuted(perm).canonical_key() == gr.canonical_key()


class TestConcreteOperations:
    def test_graft_two_corollas(self):
        c03 = enumerate_stable_graphs(0, 3)[0]
        a = concrete_from_canonical(c03)
        b = concrete_from_canonical(c03)
        grafted = graft_graphs(a, 2, b)
        assert grafted.as_stable_graph().genus == 0
        assert len(grafted.legs) == 4
        match = match_graph(grafted, enumerate_stable_graphs(0, 4))
        target = enumerate_stable_graphs(0, 4)[match.index]
        assert target.n_vertices == 2

    def test_self_glue_gives_loop(self):
        c03 = concrete_from_canonical(enumerate_stable_graphs(0, 3)[0])
        glued = self_glue(c03, 2, 3)
        sg = glued.as_stable_graph()
        assert sg.genus == 1 and sg.n_legs == 1
        match = match_graph(glued, enumerate_stable_graphs(1, 1))
        assert enumerate_stable_graphs(1, 1)[match.index].edges

    def test_relabel_legs(self):
        c03 = concrete_from_canonical(enumerate_stable_graphs(0, 3)[0])
        out = relabel_legs(c03, Permutation((2, 3, 1)))
        assert out.as_stable_graph().n_legs == 3
        # slots still enumerate all legs
        assert sorted(out.slot_orders[0]) == [("leg", 1), ("leg", 2), ("leg", 3)]

    def test_expand_vertex(self):
        # substitute the 2-vertex (0,4) graph into the (0,4) corolla slot
        corolla = [g for g in enumerate_stable_graphs(0, 4) if g.n_vertices == 1][0]
        twov = [g for g in enumerate_stable_graphs(0, 4) if g.n_vertices == 2][0]
        host = concrete_from_canonical(corolla)
        out = expand_vertex(host, 0, concrete_from_canonical(twov))
        sg = out.as_stable_graph()
        assert sg.n_vertices == 2 and sg.genus == 0 and sg.n_legs == 4
        match = match_graph(out, enumerate_stable_graphs(0, 4))

    def test_match_identity(self):
        for gr in enumerate_stable_graphs(1, 2):
            match = match_graph(concrete_from_canonical(gr),
                                enumerate_stable_graphs(1, 2))
            assert enumerate_stable_graphs(1, 2)[match.index] == gr


class TestGraphSpace:
    def test_single_vertex_space(self):
        from operad_forge.sigma import ModularSigmaModule
        mod = ModularSigmaModule({
            (0, 3): GroupAction.trivial(3, ChainComplex({0: 2})),
        })
        corolla = enumerate_stable_graphs(0, 3)[0]
        assert graph_space(corolla, mod).dims == {0: 2}

    def test_self_loop_space_dims(self):
        from operad_forge.sigma import ModularSigmaModule
        mod = ModularSigmaModule({
            (0, 3): GroupAction.trivial(3, ChainComplex({0: 3})),
        })
        loop = [g for g in enumerate_stable_graphs(1, 1) if g.edges][0]
        # legs of the loop are inputs of the same vertex
        assert graph_space(loop, mod).dims == {0: 3}

    def test_two_vertex_tensor(self):
        from operad_forge.sigma import ModularSigmaModule
        mod = ModularSigmaModule({
            (0, 3): GroupAction.trivial(3, ChainComplex({0: 2})),
        })
        twov = [g for g in enumerate_stable_graphs(0, 4) if g.n_vertices == 2][0]
        assert graph_space(twov, mod).dims == {0: 4}
