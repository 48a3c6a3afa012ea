"""Sobolev-type regularity of the equilibrium, measured not assumed.

The theory bounds ||m^(q/2-1) Dm|| and controls finite space/time shifts of
the solution quadratically in the shift.  The constants are not effective,
so the testable content is (a) the shift sums scale like the square of the
shift, and (b) the space norm stays bounded as the grid is refined.  Both
are measured here on the bump instance.
"""

import numpy as np

from mfgcontrols import (
    SolverOptions,
    bump_instance,
    solve_primal_dual,
    space_regularity,
    space_shift_sum,
    time_shift_sum,
)

spec = bump_instance()
sol, log = solve_primal_dual(spec, SolverOptions(max_iter=60000, tol_gap=1e-6))
print(f"solved: gap {log.gap[-1]:.1e}")

print("\n== time-shift coercivity sum ==")
eps_list = [0.02, 0.04, 0.08]
sums = [time_shift_sum(sol, spec, e) for e in eps_list]
for e, s in zip(eps_list, sums):
    print(f"  eps = {e:4.2f}: sum = {s:.6e}")
slope = float(np.polyfit(np.log(eps_list), np.log(sums), 1)[0])
print(f"log-log slope = {slope:.3f}  (quadratic scaling predicts 2)")

print("\n== space-shift coercivity sum ==")
g = spec.grid
deltas = [g.hx, 2 * g.hx, 4 * g.hx]
ssums = [space_shift_sum(sol, spec, d) for d in deltas]
for d, s in zip(deltas, ssums):
    print(f"  delta = {d:.4f}: sum = {s:.6e}, sum/delta^2 = {s / d**2:.2f}")

print("\n== boundedness of the space norm under refinement ==")
norms = []
for nx in (16, 32, 64):
    s = bump_instance(nx=nx, nt=nx)
    so, lg = solve_primal_dual(s, SolverOptions(max_iter=60000, tol_gap=1e-6))
    nm, nj = space_regularity(so, s)
    norms.append(nm)
    print(f"  Nx = {nx:2d}: ||m^(q/2-1) Dm|| = {nm:.4f}   ||m^1/2 D j1(Du)|| = {nj:.4f}")
spread = (max(norms) - min(norms)) / min(norms)
print(f"relative spread across resolutions: {spread:.1%}")
