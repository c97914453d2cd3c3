"""Exponent of H_n of the kernel of CC(R) -> C^lambda(R) against n! for a few small rings."""

import math

from prociso.algebra import dual_numbers, matrix_ring, zmod_ring
from prociso.hochschild import connes_kernel_homology, cyclic_package

RINGS = {"Z/4": zmod_ring(4), "Z/9": zmod_ring(9), "F_2[e]": dual_numbers(2),
         "Mat_2(F_2)": matrix_ring(zmod_ring(2), 2)}

for name, R in RINGS.items():
    P = cyclic_package(R, 5)
    for n in range(5):
        H = connes_kernel_homology(P, n)
        print(f"{name:11} n={n}  H = {str(H):28} exponent {H.exponent():>2} | {math.factorial(n)}")
