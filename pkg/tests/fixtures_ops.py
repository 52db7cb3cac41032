"""Shared operad fixtures for the test suite."""

from fractions import Fraction

from operad_forge.chain import ChainComplex, ChainMap
from operad_forge.operad import CompTable, DGOperad
from operad_forge.qlinalg import Matrix
from operad_forge.sigma import GroupAction, SigmaModule


def commutative_style_operad(max_arity):
    """One-dimensional trivial component in every arity, compositions the
    canonical isomorphisms."""
    actions = {l: GroupAction.trivial(l, ChainComplex({0: 1}))
               for l in range(2, max_arity + 1)}
    comp = {}
    for l in range(2, max_arity + 1):
        for m in range(2, max_arity + 1):
            if l + m - 1 > max_arity:
                continue
            for i in range(1, l + 1):
                table = CompTable()
                table.add(0, 0, 0, 0, 0, Fraction(1))
                comp[(l, i, m)] = table
    return DGOperad(SigmaModule(actions), comp, max_arity)


def one_dim_operad_with_acyclic_component(max_arity=3):
    """Commutative-style operad with an acyclic two-term summand glued
    into the arity-2 component; compositions vanish on the extra part."""
    base = commutative_style_operad(max_arity)
    c2 = ChainComplex({0: 2, 1: 1},
                      {1: Matrix.from_rows([[0], [1]])})
    actions = dict(base.module.components)
    actions[2] = GroupAction.trivial(2, c2)
    comp = {}
    for key, table in base.comp.items():
        comp[key] = table
    return DGOperad(SigmaModule(actions), comp, max_arity)


def acyclic_operad():
    """Single arity-2 component which is exact: Q -> Q with d = id."""
    c = ChainComplex({1: 1, 0: 1}, {1: Matrix.from_rows([[1]])})
    actions = {2: GroupAction.trivial(2, c)}
    return DGOperad(SigmaModule(actions), {}, 2)
