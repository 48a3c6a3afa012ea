"""Exponent bookkeeping: which (q, r, s) triples the theory admits.

Admissibility of an instance is a condition on the conjugate exponents
p = q', s' and the dimension, split into cells by whether s' < r and
whether the diffusion matrix is constant.  The workhorse is

    kappa_bar(rt, pt) = rt pt (1 + d) / (d - rt (pt - 1)),

infinite above the critical line pt = 1 + d/rt.  In the constant-diffusion
cell with s' >= r the condition is equivalent to the existence of some
rt in (1, r] with kappa_bar(rt, min(p, s'/rt)) >= p, and the classifier
finds the maximizing rt by scanning a fine grid.
"""

import json

import numpy as np

from mfgcontrols import classify_exponents, uniform_instance, HypothesisViolation
from mfgcontrols.grid import Grid
from mfgcontrols.model import ProblemSpec, case_2b_condition, kappa_bar, search_rtilde_2b

print("== the canonical quadratic instance ==")
info = classify_exponents(uniform_instance(nx=8, nt=4))
print(json.dumps(info.to_dict(), indent=2))

print("\n== kappa_bar landscape for s' = 2, p = 2, d = 1 ==")
rts = np.array([1.05, 1.2, 1.5, 1.8, 2.0])
for rt in rts:
    pt = min(2.0, 2.0 / rt)
    print(f"  rt = {rt:4.2f}: kappa_bar = {float(kappa_bar(rt, pt, 1)):10.2f}")
print("the scan picks rt near 1 where the gain blows up")

print("\n== a rejected triple ==")
# s' = 1.2 with p = 2 in two dimensions: the marginal inequality fails
g2 = Grid(d=2, nx=4, nt=2, T=1.0)
bad = ProblemSpec(grid=g2, q=2.0, r=2.0, s=6.0, m0=np.ones((4, 4)))
try:
    classify_exponents(bad)
except HypothesisViolation as exc:
    print(f"rejected: {exc}")

print("\n== closed-form condition vs exhaustive scan ==")
rng = np.random.default_rng(0)
agree = 0
for _ in range(200):
    sp = float(rng.uniform(1.05, 4.0))
    p = float(rng.uniform(1.05, 4.0))
    d = int(rng.integers(1, 4))
    direct = case_2b_condition(sp, p, d)
    scanned = search_rtilde_2b(sp, p, sp, d) is not None
    agree += int(direct == scanned)
print(f"agreement on 200 random (s', p, d) triples: {agree}/200")
