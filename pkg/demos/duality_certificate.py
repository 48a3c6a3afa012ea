"""The duality gap as a computable optimality certificate.

The discrete primal cost B(m, w) and dual cost D(u, P, gamma) are exact
conjugates of each other on the lattice, so B + D >= 0 always, with
equality exactly at the equilibrium.  The solver therefore knows how far
from optimal it is at every iteration, without knowing the solution.

This demo runs the gaussian-bump instance (off-center crowd, cosine
terminal cost, expensive control) and prints the certified gap as it
decays, then the final residual report.
"""

from mfgcontrols import SolverOptions, bump_instance, solve_primal_dual, weak_solution_report

spec = bump_instance()
print(f"grid: {spec.grid.nx} x {spec.grid.nt}, horizon {spec.grid.T}")
print(f"initial density range: [{spec.m0.min():.3f}, {spec.m0.max():.3f}]")

sol, log = solve_primal_dual(spec, SolverOptions(max_iter=20000, tol_gap=1e-3))
print(f"\nconverged: {log.converged} after {log.iterations} iterations")
print("\n  iter          B            B + D      transport residual")
marks = [1, 10, 50, 100, 250, 500, 1000, 1500, log.iterations]
for mark in marks:
    if mark <= log.iterations:
        i = mark - 1
        print(f"  {log.iters[i]:5d}   {log.B[i]:+.6f}   {log.gap[i]:+.3e}   {log.fp_res[i]:.3e}")

print("\nrunning minimum of |B + D| is non-increasing by construction;")
print("the final iterate is certified within tol * (1 + |B|) of optimal.")

report, verdict = weak_solution_report(sol, spec, tol=5e-3)
print(f"\nweak-solution verdict at tol 5e-3: {verdict}")
for name, value in report.to_dict().items():
    print(f"  {name:18s} {value:+.3e}")

print(f"\nequilibrium density range: [{sol.m.min():.3f}, {sol.m.max():.3f}]")
print(f"price path range:          [{sol.P.min():+.4f}, {sol.P.max():+.4f}]")
print("the off-center bump gives the price a visible, asymmetric profile.")
