"""Smoke test for the mfree_py extension: run with `python smoke_test.py`."""

from fractions import Fraction as F
import math

import mfree_py as mf

assert mf.catalan(4) == 14
assert len(mf.nc_pair_partitions(3)) == 5

one = mf.BlockModel([[1]], [1])
assert one.tracial_moments(8) == [1, 0, 1, 0, 2, 0, 5, 0, 14]
assert one.standard_moments(8) == [1, 0, 1, 0, 2, 0, 5, 0, 14]
assert one.fock_limit(6) == 5

m = mf.BlockModel([["13/10", "2/5"], ["9/7", "3/4"]], ["1/4", "3/4"])
fam = m.limit_family(8)
assert fam["mu"] == m.tracial_moments(8)
assert fam["mu0"] == m.standard_moments(8)
mix = [F(1, 4) * a + F(3, 4) * b for a, b in zip(*fam["mu_j"])]
assert mix == fam["mu"]
report = m.cross_check(8)
assert report["passed"], report
assert m.fock_limit(4, "vacuum", "strong") == fam["mu0"][4]
finite = m.fock_moments(8, 4)
assert finite[0] == 1 and finite[2] > 0

b = m.b()
assert mf.walk_moments(b, [(0, 0), (1, 1)], 8) == fam["mu0"]

s1 = mf.Law.semicircle(1, 8)
assert s1.free(s1).moments()[2:7:2] == [2, 8, 40]
assert s1.boolean(s1).moments()[:7] == [1, 0, 2, 0, 6, 0, 20]
assert s1.orthogonal(s1).boolean(s1).moments() == s1.monotone(s1).moments()

rho = one.density("mu", [0.0])[0]
assert abs(rho - 1 / math.pi) < 1e-2, rho

try:
    mf.BlockModel([[1, 1], [1, 1]], ["1/2", "1/3"])
except ValueError as e:
    assert "Tr(D) = 1" in str(e)
else:
    raise AssertionError("bad proportions accepted")

print("mfree_py smoke test passed")
