"""Level groups of a rank-two Lie ring over Z_3 and their mod-3 homology.

The Lie ring has [x, y] = 3y.  For each level the group g/3^i g with the
Campbell-Hausdorff product is built, and its F_3 homology dimensions are
compared with those of Lambda(h) (x) Gamma(h) in low degrees.
"""

from prociso.algebra import LieRing
from prociso.lazard import BarComplex, h_module, level_group

g = LieRing(3 ** 8, 2, [[0, 1, 1, 3], [1, 0, 1, -3]], p=3, precision=8)
h = h_module(g)
for i in (1, 2):
    G = level_group(g, 1, i)
    bar = BarComplex(G)
    dims = [bar.homology(n, 3).rank_mod(3) for n in range(2)]
    print(f"level {i}: order {G.order}, dim H_0, H_1 = {dims}, expected {[h.finite_level_dim(n) for n in range(2)]}")
