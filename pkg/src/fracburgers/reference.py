"""Independent numerical reference for the symbolic solver.

Two tools validate the series pipeline from a completely different
direction:

* an explicit finite-difference solver for the diffusion branch
  (0 < alpha <= 1) that discretises the Caputo derivative with the
  standard piecewise-linear memory weights b_k = (k+1)^(1-a) - k^(1-a)
  and the space operators with second-order central differences, and
* a brute-force quadrature of the Caputo integral for a single power of
  t (or a smooth callable), using substitutions that absorb the
  endpoint singularities and a composite midpoint rule with refinement.

Neither path shares code with the closed-form gamma-ratio rules beyond
the gamma function itself, so agreement is meaningful evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .expressions import evaluate_many
from .fractional import gamma
from .series import BurgersProblem, FracPoly, evaluate_grid

__all__ = [
    "GridSpec",
    "GridField",
    "ErrorReport",
    "StabilityError",
    "DivergenceError",
    "QuadratureError",
    "l1_weights",
    "stability_margin",
    "solve_fd",
    "caputo_quadrature",
    "compare",
]

BOUNDARY_KINDS = ("dirichlet", "periodic")


class StabilityError(RuntimeError):
    """The explicit scheme would be unstable on the requested grid."""

    def __init__(self, margin):
        super().__init__(
            f"stability margin {margin:.6g} exceeds 1; refine dt or coarsen dx"
        )
        self.margin = margin


class DivergenceError(RuntimeError):
    """A non-finite value appeared during time stepping."""

    def __init__(self, step):
        super().__init__(f"solution diverged at time step {step}")
        self.step = step


class QuadratureError(RuntimeError):
    """Successive quadrature refinements failed to settle."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform space-time grid.

    ``boundary`` selects how the spatial stencil closes: 'dirichlet'
    freezes the endpoint values at the initial profile, 'periodic'
    wraps the stencil around.
    """

    x_min: float
    x_max: float
    nx: int
    t_max: float
    nt: int
    boundary: str = "dirichlet"

    def __post_init__(self):
        if self.x_min >= self.x_max:
            raise ValueError("x_min must be below x_max")
        if self.nx < 3:
            raise ValueError("nx must be at least 3")
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if self.nt < 2:
            raise ValueError("nt must be at least 2")
        if self.boundary not in BOUNDARY_KINDS:
            raise ValueError(f"boundary must be one of {BOUNDARY_KINDS}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dt(self) -> float:
        return self.t_max / (self.nt - 1)

    def x_values(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    def t_values(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.nt)


@dataclass
class GridField:
    """Sampled solution values[i, j] ~ u(x_i, t_j) with its grid."""

    grid: GridSpec
    values: np.ndarray
    stability_margin: Optional[float] = None

    def __post_init__(self):
        expected = (self.grid.nx, self.grid.nt)
        if self.values.shape != expected:
            raise ValueError(f"values shape {self.values.shape} != {expected}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")


@dataclass
class ErrorReport:
    """Grid-restricted difference between a series and a field."""

    max_error: float
    rms_error: float
    x_at_max: float
    t_at_max: float
    t_cut: float
    n_points: int
    notes: dict = field(default_factory=dict)


def l1_weights(alpha: float, n: int) -> np.ndarray:
    """Memory weights b_k = (k+1)^(1-alpha) - k^(1-alpha), k = 0..n-1.

    b_0 is exactly 1; the sequence is positive and strictly decreasing
    for 0 < alpha < 1, and collapses to [1, 0, 0, ...] at alpha = 1
    (the classical, memoryless derivative).
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if n < 1:
        raise ValueError("n must be positive")
    k = np.arange(n, dtype=float)
    out = (k + 1.0) ** (1.0 - alpha) - k ** (1.0 - alpha)
    out[0] = 1.0  # avoid 0**0 at alpha=1
    return out


def stability_margin(alpha: float, grid: GridSpec) -> float:
    """Explicit-scheme margin dt^alpha * (2/dx^2) / Gamma(2-alpha);
    values above 1 are rejected by :func:`solve_fd`."""
    return grid.dt**alpha * (2.0 / grid.dx**2) / gamma(2.0 - alpha)


def solve_fd(problem: BurgersProblem, grid: GridSpec) -> GridField:
    """Explicit time stepping with the L1 Caputo memory sum.

    Only the diffusion branch (0 < alpha <= 1) is supported.  Space uses
    second-order central differences for u_xx and a central difference
    for the advective u_x (no upwinding: intended for short, smooth
    runs).  Row j=0 is exactly the initial profile.
    """
    if problem.m != 1:
        raise ValueError("the finite-difference reference covers 0 < alpha <= 1 only")
    alpha = problem.alpha
    margin = stability_margin(alpha, grid)
    if margin > 1.0:
        raise StabilityError(margin)
    history_bytes = 2 * grid.nt * grid.nx * 8
    if history_bytes > 2**30:
        raise ValueError(
            f"the memory sum needs the full step history ({history_bytes / 2**30:.1f} "
            f"GiB for nt={grid.nt}, nx={grid.nx}); coarsen the grid"
        )

    nx, nt = grid.nx, grid.nt
    dx, dt = grid.dx, grid.dt
    xs = grid.x_values()
    weights = l1_weights(alpha, nt)
    gain = gamma(2.0 - alpha) * dt**alpha

    u = np.empty((nt, nx))
    u[0] = evaluate_many(problem.g, xs)
    deltas = np.zeros((nt, nx))  # deltas[m] = u[m] - u[m-1]

    periodic = grid.boundary == "periodic"
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, nt):
            prev = u[step - 1]
            if periodic:
                left = np.roll(prev, 1)
                right = np.roll(prev, -1)
                lap = (right - 2.0 * prev + left) / dx**2
                adv = (right - left) / (2.0 * dx)
                rhs = lap + problem.A * prev**problem.p * adv
            else:
                rhs = np.zeros(nx)
                lap = (prev[2:] - 2.0 * prev[1:-1] + prev[:-2]) / dx**2
                adv = (prev[2:] - prev[:-2]) / (2.0 * dx)
                rhs[1:-1] = lap + problem.A * prev[1:-1] ** problem.p * adv
            if step > 1:
                memory = np.tensordot(
                    weights[1:step], deltas[step - 1:0:-1], axes=(0, 0)
                )
            else:
                memory = 0.0
            new = prev - memory + gain * rhs
            if not periodic:
                new[0] = u[0, 0]
                new[-1] = u[0, -1]
            if not np.all(np.isfinite(new)):
                raise DivergenceError(step)
            u[step] = new
            deltas[step] = new - prev
    return GridField(grid, u.T.copy(), stability_margin=margin)


def _midpoint(fn: Callable[[np.ndarray], np.ndarray], a: float, b: float, n: int) -> float:
    nodes = a + (b - a) * (np.arange(n) + 0.5) / n
    return float(np.sum(fn(nodes))) * (b - a) / n


def _vectorized(f: Callable[[float], float]):
    def wrapped(values: np.ndarray) -> np.ndarray:
        return np.fromiter((f(float(v)) for v in values), dtype=float, count=len(values))

    return wrapped


def _power_mth_derivative(mu: float, m: int):
    """Coefficient and exponent of d^m/dt^m [t^mu] for mu > m-1 or
    integer mu; integer mu below m gives the zero function."""
    if abs(mu - round(mu)) < 1e-12 and round(mu) < m:
        return 0.0, 0.0
    coeff = 1.0
    for k in range(m):
        coeff *= mu - k
    return coeff, mu - m


def caputo_quadrature(
    f: Union[float, Callable[[float], float]],
    alpha: float,
    t: float,
    n: int = 2000,
    rtol: float = 1e-6,
) -> float:
    """Brute-force Caputo derivative at time t.

    ``f`` is either an exponent mu (the power function t^mu) or a
    callable assumed smooth on [0, t].  The defining integral

        D^alpha f (t) = 1/Gamma(m - alpha) *
                        integral_0^t f^(m)(tau) (t - tau)^(m-alpha-1) dtau

    with m = ceil(alpha) is evaluated by a composite midpoint rule after
    substitutions that absorb the endpoint singularities; the result at
    panel counts n and 2n must agree to ``rtol`` or
    :class:`QuadratureError` is raised.  Integer alpha short-circuits to
    the classical derivative.
    """
    if not 0.0 < alpha < 2.0 + 1e-12:
        raise ValueError("alpha must lie in (0, 2]")
    if t <= 0.0:
        raise ValueError("t must be positive")
    if n < 100:
        raise ValueError("n must be at least 100")
    m = math.ceil(alpha - 1e-12)
    is_power = not callable(f)

    if abs(alpha - round(alpha)) < 1e-12:
        # classical derivative of integer order
        if is_power:
            coeff, expo = _power_mth_derivative(float(f), m)
            return coeff * t**expo
        h = 1e-5 * max(t, 1.0)
        if m == 1:
            return (f(t + h) - f(t - h)) / (2.0 * h)
        h = 1e-4 * max(t, 1.0)
        return (f(t + h) - 2.0 * f(t) + f(t - h)) / h**2

    fvec = None if is_power else _vectorized(f)

    beta = m - alpha  # kernel (t-tau)^(beta-1), 0 < beta < 1
    norm = 1.0 / gamma(beta)

    if is_power:
        mu = float(f)
        if mu <= -1.0:
            raise ValueError("power exponent must exceed -1")
        coeff, expo = _power_mth_derivative(mu, m)
        if coeff == 0.0:
            return 0.0
        if expo <= -1.0:
            raise ValueError(
                f"Caputo integral of t^{mu} diverges for alpha={alpha} "
                "(derivative order removes too much smoothness)"
            )
        deriv = lambda tau: coeff * tau**expo  # noqa: E731
    else:
        h = 1e-5 * max(t, 1.0)
        if m == 1:
            deriv = lambda tau: (fvec(tau + h) - fvec(tau - h)) / (2.0 * h)  # noqa: E731
        else:
            h = 1e-4 * max(t, 1.0)
            deriv = lambda tau: (  # noqa: E731
                fvec(tau + h) - 2.0 * fvec(tau) + fvec(tau - h)
            ) / h**2

    def left_part(panels: int) -> float:
        # tau in [0, t/2]: for powers, expand the kernel binomially in
        # tau/t (|tau/t| <= 1/2, geometric convergence); this absorbs any
        # admissible endpoint exponent without a change of variable
        if is_power:
            total = 0.0
            ck = 1.0
            ratio = 0.5  # (tau/t) at the split point
            for k in range(400):
                term = ck * ratio ** (expo + k + 1.0) / (expo + k + 1.0)
                total += term
                if abs(term) <= 1e-17 * abs(total):
                    break
                ck *= (k + 1.0 - beta) / (k + 1.0)
            return coeff * t ** (beta + expo) * total

        def fn(tau):
            return deriv(tau) * (t - tau) ** (beta - 1.0)

        return _midpoint(fn, 0.0, t / 2.0, panels)

    def right_part(panels: int) -> float:
        # tau in [t/2, t]: substitute tau = t - w^g with g = 2/beta > 2,
        # which absorbs the kernel singularity at tau = t
        g = 2.0 / beta
        top = (t / 2.0) ** (1.0 / g)

        def fn(w):
            return deriv(t - w**g) * w ** (g * beta - 1.0)

        return g * _midpoint(fn, 0.0, top, panels)

    coarse = norm * (left_part(n) + right_part(n))
    fine = norm * (left_part(2 * n) + right_part(2 * n))
    if abs(fine - coarse) > max(rtol * abs(fine), 1e-9):
        raise QuadratureError(
            f"refinement gap {abs(fine - coarse):.3e} exceeds tolerance "
            f"(n={n}, alpha={alpha}, t={t})"
        )
    return fine


def compare(series: FracPoly, fd: GridField, t_cut: float) -> ErrorReport:
    """Max-norm and RMS difference between a truncated series and a
    finite-difference field over grid points with t <= t_cut."""
    if t_cut > fd.grid.t_max + 1e-12:
        raise ValueError("t_cut exceeds the field's time range")
    xs = fd.grid.x_values()
    ts = fd.grid.t_values()
    mask = ts <= t_cut
    approx = evaluate_grid(series, xs, ts[mask])
    diff = np.abs(approx - fd.values[:, mask])
    flat = int(np.argmax(diff))
    i, j = np.unravel_index(flat, diff.shape)
    return ErrorReport(
        max_error=float(diff[i, j]),
        rms_error=float(np.sqrt(np.mean(diff**2))),
        x_at_max=float(xs[i]),
        t_at_max=float(ts[mask][j]),
        t_cut=float(t_cut),
        n_points=int(diff.size),
        notes={"boundary": fd.grid.boundary, "stability_margin": fd.stability_margin},
    )
