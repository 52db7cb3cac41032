#!/usr/bin/env python3
"""Free (modular) operads, the endomorphism modular operad, and the
truncation functors t_n, t_* (extend by zero), t_! (extend freely).

The free operad on a one-dimensional binary generator has tree-counted
components; dividing the free extension by the kernel of the evaluation
back onto a truncation recovers the relations, e.g. the commutative
operad from its arity-3 truncation.
"""

from operad_forge import (
    ChainComplex,
    GroupAction,
    Matrix,
    ModularSigmaModule,
    SigmaModule,
    endomorphism_modular_operad,
    extend_by_zero,
    extend_freely,
    free_modular_operad,
    free_operad,
    truncate,
    validate,
)

binary = SigmaModule({2: GroupAction.trivial(2, ChainComplex({0: 1}))})
gamma = free_operad(binary, 5)
print("free operad on one binary generator, dims by arity:")
for n in gamma.arities:
    print(f"  Gamma(V)({n}):", dict(gamma.component(n).dims))
print("axioms validate:", validate(gamma) == [])

mod = ModularSigmaModule({(0, 3): GroupAction.trivial(3, ChainComplex({0: 1}))})
mgamma = free_modular_operad(mod, 2)
print("\nfree modular operad on one (0,3) generator:")
for key in mgamma.indices:
    comp = mgamma.component(key)
    if not comp.is_zero():
        print(f"  M(V)(({key[0]},{key[1]})):", dict(comp.dims))

E = endomorphism_modular_operad(ChainComplex({0: 2}),
                                Matrix.from_rows([[0, 1], [1, 0]]), 1)
print("\nendomorphism modular operad on a 2-dim space, dims are 2^legs:")
for key in E.indices:
    print(f"  E[V](({key[0]},{key[1]})):", dict(E.component(key).dims))
print("E[V] validates:", validate(E) == [])

# truncation adjunctions
t3 = truncate(gamma, 3)
print("\ntruncate at 3, extend by zero to window 5: arity 4 becomes",
      extend_by_zero(t3, window=5).component(4).dims or "zero")
ext = extend_freely(t3, 4)
print("extend freely instead: arity 4 reappears with dims",
      dict(ext.component(4).dims), "matching the free operad:",
      ext.component(4).dims == gamma.component(4).dims)
