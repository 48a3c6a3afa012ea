"""Damped fixed-point solver for the coupled system, used as a cross-check.

One outer sweep maps (m, P) to (m+, P+) through four stages: a backward
explicit pass for the value function with a monotone (Osher-Sethian type)
upwind Hamiltonian, pointwise feedback evaluation, a forward conservative
upwind pass for the density, and the price update.  Each explicit pass
subcycles its grid intervals with enough internal substeps to satisfy the
CFL bound computed from the current wave speeds; forcing ``substeps=1`` on
a violating configuration raises CFLViolation with the admissible step.

Nothing here shares machinery with the saddle-point path beyond the grid
stencils, so agreement of the two solvers is a meaningful uniqueness check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CFLViolation
from .grid import diffusion_values
from .model import ProblemSpec
from .varsolve import Solution


@dataclass
class PicardOptions:
    damping: float = 0.5
    max_outer: int = 200
    tol_fixed_point: float = 1e-9
    cfl_safety: float = 0.5
    max_substeps: int = 4096

    def __post_init__(self):
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError("cfl_safety must lie in (0, 1]")


@dataclass
class PicardResult:
    solution: Solution
    iterations: int
    converged: bool
    residuals: list


def _upwind_ham_parts(spec: ProblemSpec, u_slice: np.ndarray, g_shift: np.ndarray):
    """One-sided slope selection for the shifted Hamiltonian argument.

    Returns (xi_sq, xi) where xi_sq is the Osher-Sethian squared magnitude
    sum_i max(D^-_i u + g_i, 0)^2 + min(D^+_i u + g_i, 0)^2 and xi the
    signed selected vector used by the feedback.
    """
    g = spec.grid
    hx = g.hx
    xi_sq = np.zeros_like(u_slice)
    xi = np.zeros((g.d, *g.space_shape))
    for i in range(g.d):
        dp = (np.roll(u_slice, -1, axis=i) - u_slice) / hx
        dm = (u_slice - np.roll(u_slice, 1, axis=i)) / hx
        a = np.maximum(dm + g_shift[i], 0.0)
        b = np.minimum(dp + g_shift[i], 0.0)
        xi_sq += a * a + b * b
        xi[i] = a + b
    return xi_sq, xi


def _diffusion_cfl(spec: ProblemSpec) -> float:
    """Stability contribution of the explicit centered diffusion stencil."""
    g = spec.grid
    A = spec.A
    s = 2.0 * float(np.trace(A)) / g.hx**2
    off = float(np.sum(np.abs(A)) - np.trace(np.abs(A)))
    return s + 2.0 * off / g.hx**2


def solve_hjb(m: np.ndarray, P: np.ndarray, spec: ProblemSpec, opts: PicardOptions | None = None,
              substeps: int | None = None) -> np.ndarray:
    """Backward explicit sweep for the value function given (m, P).

    m is the full (nt+1)-slotted density, P the full price path; the output
    u is slotted at the left interval endpoints with u[nt] = u_T.  Substeps
    per interval are chosen from the CFL bound unless forced.
    """
    opts = opts or PicardOptions()
    g = spec.grid
    if np.min(m) < -1e-12:
        raise ValueError("solve_hjb requires m >= 0")
    u = np.empty(g.scalar_shape)
    u[g.nt] = spec.uT
    fm = spec.coupling_f(np.maximum(m, 0.0))
    diff_rate = _diffusion_cfl(spec)
    for j in range(g.nt - 1, -1, -1):
        g_shift = spec.phi_transpose_price(P[j])
        rhs = fm[j + 1]
        n_sub = 1 if substeps is None else substeps
        while True:
            dt = g.ht / n_sub
            cur = u[j + 1].copy()
            ok = True
            for _ in range(n_sub):
                xi_sq, xi = _upwind_ham_parts(spec, cur, g_shift)
                norm = np.sqrt(xi_sq)
                speed = float(np.max(spec.c * np.where(norm > 0.0, norm ** (spec.r - 1.0), 0.0)))
                rate = g.d * speed / g.hx + diff_rate
                if dt * rate > opts.cfl_safety * (1.0 + 1e-12):
                    ok = False
                    break
                ham = spec.c * xi_sq ** (spec.r / 2.0) / spec.r
                cur = cur + dt * (diffusion_values(g, spec.A, cur) - ham + rhs)
            if ok:
                break
            if substeps is not None or n_sub >= opts.max_substeps:
                admissible = opts.cfl_safety / max(rate, 1e-300)
                raise CFLViolation(
                    f"explicit value sweep needs ht <= {admissible:.3e} (interval {j + 1})",
                    admissible_ht=admissible,
                )
            n_sub = min(2 * n_sub, opts.max_substeps)
        u[j] = cur
    return u


def feedback(u: np.ndarray, P: np.ndarray, spec: ProblemSpec) -> np.ndarray:
    """Optimal drift v = -dH(x, Du + phi^T P) with the same one-sided slopes."""
    g = spec.grid
    v = np.empty(g.vector_shape)
    for j in range(g.nt + 1):
        g_shift = spec.phi_transpose_price(P[j])
        _, xi = _upwind_ham_parts(spec, u[j], g_shift)
        v[j] = -spec.dH(xi)
    return v


def solve_fp(v: np.ndarray, spec: ProblemSpec, opts: PicardOptions | None = None,
             substeps: int | None = None) -> np.ndarray:
    """Forward conservative upwind sweep for the density from m0.

    Interval n is driven by the drift slice v[n-1]; mass is conserved
    exactly by the flux form and nonnegativity holds under the CFL bound
    (for diagonally dominant A).
    """
    opts = opts or PicardOptions()
    g = spec.grid
    m = np.empty(g.scalar_shape)
    m[0] = spec.m0
    diff_rate = _diffusion_cfl(spec)
    for n in range(1, g.nt + 1):
        drift = v[n - 1]
        speed = float(np.max(np.abs(drift)))
        rate = g.d * speed / g.hx + diff_rate
        needed = max(1, int(np.ceil(rate * g.ht / max(opts.cfl_safety, 1e-300) - 1e-12)))
        n_sub = needed if substeps is None else substeps
        if n_sub < needed or n_sub > opts.max_substeps:
            admissible = opts.cfl_safety / max(rate, 1e-300)
            raise CFLViolation(
                f"explicit transport sweep needs ht <= {admissible:.3e} (interval {n})",
                admissible_ht=admissible,
            )
        dt = g.ht / n_sub
        cur = m[n - 1].copy()
        for _ in range(n_sub):
            flux_div = np.zeros_like(cur)
            for i in range(g.d):
                v_face = 0.5 * (drift[i] + np.roll(drift[i], -1, axis=i))
                flux = np.maximum(v_face, 0.0) * cur + np.minimum(v_face, 0.0) * np.roll(cur, -1, axis=i)
                flux_div += (flux - np.roll(flux, 1, axis=i)) / g.hx
            cur = cur - dt * flux_div + dt * diffusion_values(g, spec.A, cur)
        m[n] = cur
    return m


def update_price(m: np.ndarray, v: np.ndarray, spec: ProblemSpec) -> np.ndarray:
    """Price path P_j = Psi(int phi v_j m_j dx) per time node."""
    g = spec.grid
    P = np.empty((g.nt + 1, spec.k))
    for j in range(g.nt + 1):
        P[j] = spec.Psi(spec.aggregate_kernel(v[j] * m[j]))
    return P


def picard_iterate(spec: ProblemSpec, opts: PicardOptions | None = None) -> PicardResult:
    """Damped fixed-point loop on (m, P); packages w = m v and gamma = f(m)."""
    opts = opts or PicardOptions()
    g = spec.grid
    m = np.broadcast_to(spec.m0, g.scalar_shape).copy()
    P = np.zeros((g.nt + 1, spec.k))
    lam = opts.damping
    residuals = []
    converged = False
    u = solve_hjb(m, P, spec, opts)
    v = feedback(u, P, spec)
    n_outer = 0
    for n_outer in range(1, opts.max_outer + 1):
        m_new = solve_fp(v, spec, opts)
        P_new = update_price(m_new, v, spec)
        res = float(np.max(np.abs(m_new - m))) + float(np.max(np.abs(P_new - P)))
        residuals.append(res)
        m = (1.0 - lam) * m + lam * m_new
        P = (1.0 - lam) * P + lam * P_new
        u = solve_hjb(m, P, spec, opts)
        v = feedback(u, P, spec)
        if res <= opts.tol_fixed_point:
            converged = True
            break

    w = np.zeros(g.vector_shape)
    w[1:] = m[1:, None] * v[:-1]
    gamma = spec.coupling_f(np.maximum(m, 0.0))
    sol = Solution(grid=g, u=u, m=m, w=w, P=P, gamma=gamma)
    return PicardResult(solution=sol, iterations=n_outer, converged=converged, residuals=residuals)
