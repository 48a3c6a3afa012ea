"""Uniform periodic space-time lattice and its discrete calculus.

The domain is the flat torus in d = 1 or 2 dimensions crossed with [0, T].
Space is discretized with Nx nodes per axis (mesh width hx = 1/Nx, periodic
indexing), time with Nt intervals (step ht = T/Nt, Nt + 1 node slices).

The differential operators form an exact adjoint pair: ``gradient`` is the
forward difference per axis and ``divergence`` the backward difference, so

    <gradient(u), w>_Q + <u, divergence(w)>_Q = 0

holds to rounding error, not merely to discretization order.  Discrete
integration by parts, mass conservation and the duality identities used by
the solvers all rest on this.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotPSD

PSD_TOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice on the unit torus times [0, T].

    Parameters
    ----------
    d : int
        Spatial dimension, 1 or 2.
    nx : int
        Nodes per spatial axis (>= 4).
    nt : int
        Time intervals (>= 2); fields carry nt + 1 time slices.
    T : float
        Horizon (> 0).
    """

    d: int
    nx: int
    nt: int
    T: float

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"d must be 1 or 2, got {self.d}")
        if self.nx < 4:
            raise ValueError(f"nx must be >= 4, got {self.nx}")
        if self.nt < 2:
            raise ValueError(f"nt must be >= 2, got {self.nt}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")

    @property
    def hx(self) -> float:
        return 1.0 / self.nx

    @property
    def ht(self) -> float:
        return self.T / self.nt

    @property
    def space_shape(self) -> tuple:
        return (self.nx,) * self.d

    @property
    def n_space(self) -> int:
        return self.nx**self.d

    @property
    def cell_volume(self) -> float:
        return self.hx**self.d

    @property
    def scalar_shape(self) -> tuple:
        return (self.nt + 1, *self.space_shape)

    @property
    def vector_shape(self) -> tuple:
        return (self.nt + 1, self.d, *self.space_shape)

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.nt + 1)

    def axis_coords(self) -> np.ndarray:
        """Node coordinates along one axis: 0, hx, ..., 1 - hx."""
        return np.arange(self.nx) / self.nx

    def meshgrid(self) -> tuple:
        """Tuple of d coordinate arrays of shape ``space_shape``."""
        axes = [self.axis_coords() for _ in range(self.d)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def space_axes(self, time_stacked: bool = True, vector: bool = False) -> tuple:
        """Indices of the spatial axes in a field array."""
        off = (1 if time_stacked else 0) + (1 if vector else 0)
        return tuple(range(off, off + self.d))


@dataclass(frozen=True)
class ScalarField:
    """Real value per (time node, space node); houses u, m, gamma."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.scalar_shape:
            raise ValueError(f"scalar field shape {v.shape} != {self.grid.scalar_shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("scalar field has non-finite entries")
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.scalar_shape, float(value)))


@dataclass(frozen=True)
class VectorField:
    """d-vector per (time node, space node), component axis first; houses w, v."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.vector_shape:
            raise ValueError(f"vector field shape {v.shape} != {self.grid.vector_shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("vector field has non-finite entries")
        object.__setattr__(self, "values", v)

    @classmethod
    def zero(cls, grid: Grid) -> "VectorField":
        return cls(grid, np.zeros(grid.vector_shape))


@dataclass(frozen=True)
class PricePath:
    """k-vector per time node; houses the price P(t)."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != self.grid.nt + 1:
            raise ValueError(f"price path shape {v.shape} != ({self.grid.nt + 1}, k)")
        if not np.all(np.isfinite(v)):
            raise ValueError("price path has non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def k(self) -> int:
        return self.values.shape[1]


# -- raw-array stencils; the spatial axes are the trailing d axes ------------


def grad_values(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Forward-difference gradient, periodic wrap; adds a component axis.

    Input has arbitrary leading axes followed by the d spatial axes; the
    output prepends one axis of length d in front of the spatial axes...
    concretely for time-stacked scalars (nt+1, *space) -> (nt+1, d, *space).
    """
    lead = u.ndim - grid.d
    out = np.empty(u.shape[:lead] + (grid.d,) + u.shape[lead:])
    for i in range(grid.d):
        ax = lead + i
        sl = (slice(None),) * lead + (i,)
        out[sl] = (np.roll(u, -1, axis=ax) - u) / grid.hx
    return out


def div_values(grid: Grid, w: np.ndarray) -> np.ndarray:
    """Backward-difference divergence, the exact negative adjoint of grad.

    Input carries the component axis immediately before the spatial axes,
    e.g. (nt+1, d, *space) -> (nt+1, *space).
    """
    lead = w.ndim - grid.d - 1
    out = np.zeros(w.shape[:lead] + w.shape[lead + 1 :])
    for i in range(grid.d):
        ax = lead + i  # spatial axis i in the output layout
        sl = (slice(None),) * lead + (i,)
        wi = w[sl]
        out += (wi - np.roll(wi, 1, axis=ax)) / grid.hx
    return out


def check_psd(A: np.ndarray, d: int) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.shape != (d, d):
        raise ValueError(f"A must be {d}x{d}, got {A.shape}")
    if np.max(np.abs(A - A.T)) > PSD_TOL:
        raise NotPSD("A is not symmetric")
    if np.min(np.linalg.eigvalsh(0.5 * (A + A.T))) < -PSD_TOL:
        raise NotPSD("A has a negative eigenvalue")
    return A


def diffusion_values(grid: Grid, A: np.ndarray, u: np.ndarray) -> np.ndarray:
    """A_ij d_ij u with centered second differences (constant A).

    Self-adjoint on the periodic lattice; with constant coefficients the same
    routine serves both the second-order term of the backward equation and
    its formal adjoint in the transport equation.
    """
    A = check_psd(A, grid.d)
    lead = u.ndim - grid.d
    out = np.zeros_like(u, dtype=float)
    hx2 = grid.hx**2
    for i in range(grid.d):
        ai = lead + i
        if A[i, i] != 0.0:
            out += A[i, i] * (np.roll(u, -1, ai) - 2.0 * u + np.roll(u, 1, ai)) / hx2
        for j in range(i + 1, grid.d):
            if A[i, j] != 0.0:
                aj = lead + j
                cross = (
                    np.roll(np.roll(u, -1, ai), -1, aj)
                    - np.roll(np.roll(u, -1, ai), 1, aj)
                    - np.roll(np.roll(u, 1, ai), -1, aj)
                    + np.roll(np.roll(u, 1, ai), 1, aj)
                ) / (4.0 * hx2)
                out += 2.0 * A[i, j] * cross
    return out


def integrate_space_values(grid: Grid, f: np.ndarray) -> np.ndarray:
    """hx^d-weighted sum over the trailing d spatial axes."""
    axes = tuple(range(f.ndim - grid.d, f.ndim))
    return f.sum(axis=axes) * grid.cell_volume


# -- typed wrappers ----------------------------------------------------------


def gradient(u: ScalarField) -> VectorField:
    """Forward-difference spatial gradient of a scalar field."""
    return VectorField(u.grid, grad_values(u.grid, u.values))


def divergence(w: VectorField) -> ScalarField:
    """Backward-difference divergence; exact negative adjoint of gradient."""
    return ScalarField(w.grid, div_values(w.grid, w.values))


def diffusion_apply(A: np.ndarray, u: ScalarField) -> ScalarField:
    """Apply the constant-coefficient second-order operator A_ij d_ij."""
    return ScalarField(u.grid, diffusion_values(u.grid, A, u.values))


def integrate_space(f: ScalarField, t_index: int) -> float:
    """Torus integral of one time slice (unit volume torus)."""
    return float(integrate_space_values(f.grid, f.values[t_index]))


def integrate_Q(f: ScalarField) -> float:
    """Space-time integral; trapezoidal rule in time."""
    slices = integrate_space_values(f.grid, f.values)
    return float(np.trapezoid(slices, dx=f.grid.ht))


def inner_Q(grid: Grid, a: np.ndarray, b: np.ndarray) -> float:
    """Space-time inner product with uniform ht * hx^d weights.

    The gradient/divergence and diffusion adjoint identities hold exactly
    per time slice, hence in this pairing (or any time quadrature).
    """
    return float(np.sum(a * b) * grid.ht * grid.cell_volume)
