"""Reduced homology of small Volodin complexes."""

from prociso.algebra import zmod_ring
from prociso.volodin import acyclicity_check, volodin_complex

F2 = zmod_ring(2)
print("X_2(F_2):       H~_1 =", volodin_complex(2, F2, (), 2).reduced_homology(1))
print("X_3(F_2):       H~_1 =", acyclicity_check(3, F2, 1).reduced)
print("X_1(Z/4, (2)):  H_1  =", volodin_complex(1, zmod_ring(4), [[2]], 2).homology(1))
