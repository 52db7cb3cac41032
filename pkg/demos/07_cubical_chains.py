#!/usr/bin/env python3
"""Cubic chains, the alternating operator, and the symmetrized product.

The cross product of cubes is concatenation; it fails commutativity on
the nose, but over Q the alternating operator fixes it: kappa(c, d) =
alt(c x d) is symmetric up to the Koszul sign and associative.  The
combinatorics behind alt being a chain map is the unique factorization
sigma o delta_i = delta_r o tau, exercised here explicitly.
"""

from operad_forge import (
    CubicChain,
    alt,
    boundary,
    chain_complex,
    cross,
    homology_dims,
    interval,
    interval_power,
    kappa,
    sigma_tau_r_i,
    torus,
)
from operad_forge.sigma import Permutation, all_permutations

I = interval()
edge = CubicChain.of_cube(I, "id")
print("boundary of the interval:", boundary(edge).coeffs)

square = cross(edge, edge)
print("the product square has boundary with",
      len(boundary(square).coeffs), "signed edges")
print("d(d(square)) = 0:", boundary(boundary(square)).is_zero())

sym = kappa(edge, edge)
print("kappa antisymmetrizes:", {k[2]: str(v) for k, v in sym.coeffs.items()})

X = interval_power(3)
cube = next(c for c in X.cubes(3) if not X.is_degenerate(c))
ch = CubicChain.of_cube(X, cube)
print("\nalt is a chain map:", boundary(alt(ch)) == alt(boundary(ch)))
print("alt is idempotent:", alt(alt(ch)) == alt(ch))

print("\nhomology of the interval:", homology_dims(chain_complex(I)))
print("homology of the square torus model:",
      homology_dims(chain_complex(torus())))

tau = Permutation((2, 1, 3))
sigma = sigma_tau_r_i(tau, r=2, i=4)
print("\nsigma for (tau=(2,1,3), r=2, i=4):", sigma.images)
print("sign identity (-1)^{|sigma|+i} = (-1)^{|tau|+r}:",
      sigma.sign() * (-1) ** 4 == tau.sign() * (-1) ** 2)
count = len({(sigma_tau_r_i(t, r, i).images, i)
             for t in all_permutations(3)
             for r in range(1, 5) for i in range(1, 5)})
print("the map (tau, r, i) -> (sigma, i) is bijective for n = 4:",
      count == 24 * 4)
