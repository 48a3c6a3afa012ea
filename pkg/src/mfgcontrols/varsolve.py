"""Primal functional, dual functional, and the first-order saddle-point solver.

The discrete problem minimizes

    B(m, w) = sum_n ht < m_n H*(x, -w_n/m_n) + F(x, m_n) >
            + sum_n ht Phi(int phi w_n) + < u_T, m_Nt >

over the transport constraint

    (m_n - m_{n-1})/ht - A_ij d_ij m_n + div w_n = 0,   m_0 = m0,

with the perspective convention at m = 0.  Interval n carries its m, w and
gamma values at the right time node n and its dual u, P values at the left
node n-1; with the exact adjoint pair of the grid module this makes the
discrete duality

    min B = -min D,   D(u, P, gamma) = -<u(0), m0> + sum ht Phi*(P) + sum ht <F*(gamma)>

an exact finite-dimensional identity, so the duality gap of the iterates is
a genuine optimality certificate.

The iteration is the standard primal-dual hybrid gradient loop: a plain
shift step on the transport multiplier u, the radial conjugate-potential
prox on the price P, and the exact pointwise prox of kinetic + congestion
on (m, w), with over-relaxed extrapolation.  Step sizes obey
tau * sigma * L^2 <= 1 with L estimated by power iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StepSizeViolation
from .grid import Grid, div_values, diffusion_values, grad_values
from .model import ProblemSpec
from .prox import prox_kinetic_congestion, prox_Phi_star


@dataclass(frozen=True)
class Solution:
    """Fields of one candidate equilibrium on the lattice.

    u, m, gamma: (nt+1, *space); w: (nt+1, d, *space); P: (nt+1, k).
    Slice 0 of w is identically zero (no interval ends at t = 0) and slice
    nt of u equals the terminal cost.
    """

    grid: Grid
    u: np.ndarray = field(repr=False)
    m: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    P: np.ndarray = field(repr=False)
    gamma: np.ndarray = field(repr=False)

    def __post_init__(self):
        g = self.grid
        for name, arr, shape in (
            ("u", self.u, g.scalar_shape),
            ("m", self.m, g.scalar_shape),
            ("w", self.w, g.vector_shape),
            ("gamma", self.gamma, g.scalar_shape),
        ):
            arr = np.asarray(arr, dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
            object.__setattr__(self, name, arr)
        P = np.asarray(self.P, dtype=float)
        if P.ndim != 2 or P.shape[0] != g.nt + 1:
            raise ValueError(f"P has shape {P.shape}, expected ({g.nt + 1}, k)")
        object.__setattr__(self, "P", P)


@dataclass
class SolverOptions:
    """Step sizes and termination for the saddle-point loop.

    tau / sigma_step default to the balanced choice 0.99/L from the power
    iteration estimate; explicit values are checked against
    tau * sigma * L^2 <= 1.
    """

    tau: float | None = None
    sigma_step: float | None = None
    max_iter: int = 20000
    tol_gap: float = 1e-6
    over_relaxation: float = 1.0
    newton_tol: float = 1e-12
    newton_max: int = 60
    step_ratio: float = 1.0
    power_iters: int = 50


@dataclass
class ConvergenceLog:
    """Per-iteration history of the saddle-point run."""

    iters: list = field(default_factory=list)
    B: list = field(default_factory=list)
    D: list = field(default_factory=list)
    gap: list = field(default_factory=list)
    fp_res: list = field(default_factory=list)
    price_res: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    m_min: float = np.inf
    operator_norm: float = np.nan

    def append(self, it, B, D, gap, fp_res, price_res):
        self.iters.append(it)
        self.B.append(B)
        self.D.append(D)
        self.gap.append(gap)
        self.fp_res.append(fp_res)
        self.price_res.append(price_res)

    def rows(self):
        for i in range(len(self.iters)):
            yield (self.iters[i], self.B[i], self.D[i], self.gap[i], self.fp_res[i], self.price_res[i])


# -- functionals ---------------------------------------------------------------


def kinetic_energy_values(spec: ProblemSpec, m: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Pointwise perspective cost m H*(x, -w/m); +inf where m = 0 and w != 0."""
    g = spec.grid
    rp = spec.r_prime
    wnorm = np.sqrt(np.sum(w * w, axis=w.ndim - g.d - 1))
    cp = spec.c ** (1.0 - rp)
    m_pos = np.where(m > 0.0, m, 1.0)
    interior = cp * wnorm**rp * m_pos ** (1.0 - rp) / rp
    return np.where(m > 0.0, interior, np.where(wnorm > 0.0, np.inf, 0.0))


def eval_B(m: np.ndarray, w: np.ndarray, spec: ProblemSpec) -> float:
    """Primal cost on full (nt+1)-slotted fields; +inf on m < 0 or convention breach."""
    g = spec.grid
    if np.min(m) < 0.0:
        return np.inf
    kin = kinetic_energy_values(spec, m[1:], w[1:])
    if np.any(np.isinf(kin)):
        return np.inf
    body = kin + spec.F(m[1:])
    total = float(np.sum(body) * g.ht * g.cell_volume)
    if not spec.price_free:
        z = aggregate_flux(w, spec)[1:]
        total += float(np.sum(spec.Phi(z)) * g.ht)
    total += float(np.sum(spec.uT * m[g.nt]) * g.cell_volume)
    return total


def eval_D(u: np.ndarray, P: np.ndarray, gamma: np.ndarray, spec: ProblemSpec) -> float:
    """Dual cost on full (nt+1)-slotted fields (interval slots as documented)."""
    g = spec.grid
    total = -float(np.sum(u[0] * spec.m0) * g.cell_volume)
    total += float(np.sum(spec.Phi_star(P[: g.nt])) * g.ht)
    total += float(np.sum(spec.F_star(gamma[1:])) * g.ht * g.cell_volume)
    return total


def aggregate_flux(w: np.ndarray, spec: ProblemSpec) -> np.ndarray:
    """Aggregated control flux z_n = int phi(x) w_n(x) dx per time node -> (nt+1, k)."""
    g = spec.grid
    phi_flat = spec.phi.reshape(spec.k, g.d, g.n_space)
    w_flat = w.reshape(w.shape[0], g.d, g.n_space)
    return np.einsum("kds,tds->tk", phi_flat, w_flat) * g.cell_volume


def fp_constraint(m: np.ndarray, w: np.ndarray, spec: ProblemSpec) -> np.ndarray:
    """Transport residual, (nt+1)-slotted: slice 0 is m_0 - m0, slice n the interval residual."""
    g = spec.grid
    out = np.empty(g.scalar_shape)
    out[0] = m[0] - spec.m0
    out[1:] = (m[1:] - m[:-1]) / g.ht - diffusion_values(g, spec.A, m[1:]) + div_values(g, w[1:])
    return out


def fp_adjoint(U: np.ndarray, spec: ProblemSpec):
    """Adjoint of fp_constraint in the plain Euclidean pairing.

    U is slotted like the constraint output (slot 0: initial-slice
    multiplier, slot n: interval-n multiplier).  Returns (gm, gw) with
    <fp_constraint(m, w), U> = <gm, m> + <gw, w> - <U[0], m0>, the last term
    being the data boundary term.
    """
    g = spec.grid
    gm = np.zeros(g.scalar_shape)
    gw = np.zeros(g.vector_shape)
    u = U[1:]
    gm[0] = U[0] - u[0] / g.ht
    gm[1:] = u / g.ht - diffusion_values(g, spec.A, u)
    gm[1:-1] -= u[1:] / g.ht
    gw[1:] = -grad_values(g, u)
    return gm, gw


# -- internal interval-variable operators --------------------------------------


def _constraint(spec, m, w):
    """R[i]: residual of interval i+1 from interval variables m, w (nt, ...)."""
    g = spec.grid
    R = np.empty_like(m)
    R[0] = (m[0] - spec.m0) / g.ht
    R[1:] = (m[1:] - m[:-1]) / g.ht
    R -= diffusion_values(g, spec.A, m)
    R += div_values(g, w)
    return R

def _adjoint_m(spec, u):
    g = spec.grid
    gm = u / g.ht - diffusion_values(g, spec.A, u)
    gm[:-1] -= u[1:] / g.ht
    return gm

def _adjoint_w(spec, u):
    return -grad_values(spec.grid, u)

def _aggregate(spec, w):
    return aggregate_flux(w, spec)

def _agg_adjoint(spec, p):
    return np.einsum("kd...,tk->td...", spec.phi, p)


def estimate_operator_norm(spec: ProblemSpec, iters: int = 50, seed: int = 0, include_price: bool = True) -> float:
    """Power iteration for the constraint-plus-aggregation operator norm.

    Uses the weighted inner products (ht hx^d on fields, ht on price paths)
    in which the prox steps are pointwise.
    """
    g = spec.grid
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((g.nt, *g.space_shape))
    w = rng.standard_normal((g.nt, g.d, *g.space_shape))
    lam2 = 0.0
    vol = g.cell_volume
    for _ in range(iters):
        R = _constraint_linear(spec, m, w)
        Z = _aggregate(spec, w) if include_price else None
        gm = _adjoint_m(spec, R)
        gw = _adjoint_w(spec, R)
        if include_price:
            gw = gw + _agg_adjoint(spec, Z)
        ny2 = float(np.sum(R * R)) * g.ht * vol
        if include_price:
            ny2 += float(np.sum(Z * Z)) * g.ht
        nx2 = (float(np.sum(m * m)) + float(np.sum(w * w))) * g.ht * vol
        lam2 = ny2 / nx2
        nrm = np.sqrt((float(np.sum(gm * gm)) + float(np.sum(gw * gw))) * g.ht * vol)
        m, w = gm / nrm, gw / nrm
    return float(np.sqrt(lam2))


def _constraint_linear(spec, m, w):
    """Linear part of _constraint (drops the m0 data term)."""
    g = spec.grid
    R = np.empty_like(m)
    R[0] = m[0] / g.ht
    R[1:] = (m[1:] - m[:-1]) / g.ht
    R -= diffusion_values(g, spec.A, m)
    R += div_values(g, w)
    return R


def dual_gamma(spec: ProblemSpec, u_int: np.ndarray, p_int: np.ndarray) -> np.ndarray:
    """Dual-feasible congestion multiplier from (u, P) interval variables.

    gamma_i = -(u_{i+1} - u_i)/ht - A_ij d_ij u_i + H(x, Du_i + phi^T P_i)
    with the terminal ghost u_nt = u_T.  Evaluating D here yields a valid
    lower bound on -B at every iterate.
    """
    g = spec.grid
    xi = grad_values(g, u_int) + _agg_adjoint(spec, p_int)
    gam = spec.hamiltonian(xi) - diffusion_values(g, spec.A, u_int)
    gam[:-1] += (u_int[:-1] - u_int[1:]) / g.ht
    gam[-1] += (u_int[-1] - spec.uT) / g.ht
    return gam


def _full_fields(spec, m, w):
    g = spec.grid
    m_full = np.concatenate([spec.m0[None], m], axis=0)
    w_full = np.concatenate([np.zeros((1, g.d, *g.space_shape)), w], axis=0)
    return m_full, w_full


def _finalize(spec, m, w, u_cp, p) -> Solution:
    g = spec.grid
    m_full, w_full = _full_fields(spec, m, w)
    u_full = np.concatenate([-u_cp, spec.uT[None]], axis=0)
    z_last = spec.aggregate_kernel(w[-1])
    P_full = np.concatenate([p, spec.Psi(z_last)[None]], axis=0)
    gamma = spec.coupling_f(np.maximum(m_full, 0.0))
    return Solution(grid=g, u=u_full, m=m_full, w=w_full, P=P_full, gamma=gamma)


def default_init(spec: ProblemSpec):
    """Deterministic start: stationary density, zero momentum and duals."""
    g = spec.grid
    m = np.broadcast_to(spec.m0, (g.nt, *g.space_shape)).copy()
    w = np.zeros((g.nt, g.d, *g.space_shape))
    u = np.zeros((g.nt, *g.space_shape))
    p = np.zeros((g.nt, spec.k))
    return m, w, u, p


def solve_primal_dual(spec: ProblemSpec, opts: SolverOptions | None = None, init: Solution | None = None,
                      include_price: bool = True):
    """Run the saddle-point iteration; returns (Solution, ConvergenceLog).

    Terminates when |B + D| <= tol_gap * (1 + |B|) and the transport
    residual is below tol_gap; otherwise stops at max_iter with the last
    iterate and converged = False in the log.  ``include_price=False``
    drops the aggregation rows from the operator entirely (classical
    congestion game); with kappa_phi = 0 the price prox pins P to zero
    instead, which is the same optimum through a different operator.
    """
    opts = opts or SolverOptions()
    g = spec.grid

    L = estimate_operator_norm(spec, iters=opts.power_iters, include_price=include_price)
    if opts.tau is None or opts.sigma_step is None:
        tau = 0.99 * opts.step_ratio / L
        sigma = 0.99 / (opts.step_ratio * L)
    else:
        tau, sigma = opts.tau, opts.sigma_step
        if tau * sigma * L * L > 1.0 + 1e-9:
            raise StepSizeViolation(f"tau*sigma*L^2 = {tau * sigma * L * L:.3f} > 1 (L = {L:.3f})")

    if init is None:
        m, w, u, p = default_init(spec)
    else:
        m = init.m[1:].copy()
        w = init.w[1:].copy()
        u = -init.u[: g.nt].copy()
        p = init.P[: g.nt].copy()

    mb, wb = m.copy(), w.copy()
    theta_pd = opts.over_relaxation
    uT_shift = tau * spec.uT / g.ht
    log = ConvergenceLog(operator_norm=L)
    log.m_min = float(np.min(m))
    vol = g.cell_volume

    for it in range(1, opts.max_iter + 1):
        # dual ascent at the extrapolated primal point
        u += sigma * _constraint(spec, mb, wb)
        if include_price:
            p = prox_Phi_star(p + sigma * _aggregate(spec, wb), sigma, spec.kappa_phi, spec.s,
                              opts.newton_tol, opts.newton_max)
        else:
            p.fill(0.0)

        # primal descent with the joint kinetic + congestion prox
        gm = m - tau * _adjoint_m(spec, u)
        gw = w - tau * (_adjoint_w(spec, u) + (_agg_adjoint(spec, p) if include_price else 0.0))
        gm[-1] -= uT_shift
        m_new, w_new = prox_kinetic_congestion(
            gm, np.moveaxis(gw, 1, 0), tau, spec.c, spec.r, spec.theta, spec.q,
            opts.newton_tol, opts.newton_max,
        )
        w_new = np.moveaxis(w_new, 0, 1)
        mb = m_new + theta_pd * (m_new - m)
        wb = w_new + theta_pd * (w_new - w)
        m, w = m_new, w_new

        # certificates
        log.m_min = min(log.m_min, float(np.min(m)))
        m_full, w_full = _full_fields(spec, m, w)
        Bv = eval_B(m_full, w_full, spec)
        gam = dual_gamma(spec, -u, p)
        Dv = float(np.sum(u[0] * spec.m0) * vol)  # = -<u_paper(0), m0>
        Dv += float(np.sum(spec.Phi_star(p)) * g.ht) if include_price else 0.0
        Dv += float(np.sum(spec.F_star(gam)) * g.ht * vol)
        gap = Bv + Dv
        R = _constraint(spec, m, w)
        fp_res = float(np.sum(np.abs(R)) * g.ht * vol)
        if include_price:
            Z = _aggregate(spec, w)
            price_res = float(np.sum(np.linalg.norm(p - spec.Psi(Z), axis=-1)) * g.ht)
        else:
            price_res = 0.0
        log.append(it, Bv, Dv, gap, fp_res, price_res)
        if np.isfinite(Bv) and abs(gap) <= opts.tol_gap * (1.0 + abs(Bv)) and fp_res <= opts.tol_gap:
            log.converged = True
            break

    log.iterations = log.iters[-1] if log.iters else 0
    return _finalize(spec, m, w, u, p), log
