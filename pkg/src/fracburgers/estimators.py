"""Estimator-style front ends for the two solvers.

Both classes follow the scikit-learn protocol: hyperparameters are
stored verbatim in ``__init__`` (so ``get_params``/``set_params`` and
``clone`` work), all computation happens in ``fit``, fitted state lives
in trailing-underscore attributes, and ``predict`` maps an (n, 2) array
of (x, t) points to solution values.  There is no training data; ``X``
and ``y`` in ``fit`` are accepted and ignored so the objects compose
with generic tooling.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .expressions import evaluate_many
from .reference import GridSpec, solve_fd
from .series import BurgersProblem, vim_solve

__all__ = ["VariationalIterationSolver", "L1ReferenceSolver"]


def _as_points(X):
    X = check_array(X, ensure_2d=True, dtype=float)
    if X.shape[1] != 2:
        raise ValueError(f"expected (n, 2) array of (x, t) points, got {X.shape}")
    if np.any(X[:, 1] < 0):
        raise ValueError("t must be non-negative")
    return X


class VariationalIterationSolver(BaseEstimator):
    """Truncated-series solver for D_t^alpha u = u_xx + A u^p u_x.

    Parameters
    ----------
    alpha : fractional order in (0, 2].
    A, p : coupling and integer power of the nonlinear term.
    g : initial value u(x, 0), an expression string or tree.
    h : initial rate u_t(x, 0); required iff 1 < alpha <= 2.
    n_iter : number of correction steps (the truncated series keeps
        n_iter + 1 correction levels).

    Attributes (after fit)
    ----------------------
    problem_ : the validated problem definition.
    iterates_ : list of fractional polynomials u_0 .. u_{n_iter}.
    series_ : the final iterate, used by predict.
    """

    def __init__(self, alpha=0.5, A=-1.0, p=1, g="sin(pi*x)", h=None, n_iter=2):
        self.alpha = alpha
        self.A = A
        self.p = p
        self.g = g
        self.h = h
        self.n_iter = n_iter

    def fit(self, X=None, y=None):
        if not isinstance(self.n_iter, int) or self.n_iter < 0:
            raise ValueError("n_iter must be a non-negative integer")
        self.problem_ = BurgersProblem(
            alpha=self.alpha, A=self.A, p=self.p, g=self.g, h=self.h
        )
        self.iterates_ = vim_solve(self.problem_, self.n_iter)
        self.series_ = self.iterates_[-1]
        return self

    def predict(self, X):
        check_is_fitted(self, "series_")
        X = _as_points(X)
        out = np.zeros(len(X))
        for exponent, coeff in self.series_.terms.items():
            value = exponent.value(self.series_.alpha)
            out += evaluate_many(coeff, X[:, 0]) * X[:, 1] ** value
        return out


class L1ReferenceSolver(BaseEstimator):
    """Finite-difference reference on a fixed grid (0 < alpha <= 1).

    ``fit`` runs the explicit scheme over the configured grid; ``predict``
    interpolates the stored field linearly at the requested (x, t)
    points (which must lie inside the grid).
    """

    def __init__(
        self,
        alpha=0.8,
        A=-1.0,
        p=1,
        g="sin(pi*x)",
        x_min=0.0,
        x_max=1.0,
        nx=51,
        t_max=0.1,
        nt=201,
        boundary="dirichlet",
    ):
        self.alpha = alpha
        self.A = A
        self.p = p
        self.g = g
        self.x_min = x_min
        self.x_max = x_max
        self.nx = nx
        self.t_max = t_max
        self.nt = nt
        self.boundary = boundary

    def fit(self, X=None, y=None):
        problem = BurgersProblem(alpha=self.alpha, A=self.A, p=self.p, g=self.g)
        grid = GridSpec(
            self.x_min, self.x_max, self.nx, self.t_max, self.nt, self.boundary
        )
        self.problem_ = problem
        self.field_ = solve_fd(problem, grid)
        self.stability_margin_ = self.field_.stability_margin
        self._interpolator_ = RegularGridInterpolator(
            (grid.x_values(), grid.t_values()), self.field_.values
        )
        return self

    def predict(self, X):
        check_is_fitted(self, "field_")
        return self._interpolator_(_as_points(X))
