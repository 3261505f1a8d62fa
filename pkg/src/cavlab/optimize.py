"""Bound-constrained, feasibility-preserving, nonmonotone quasi-Newton minimizer.

Iterates stay inside the lower bounds and inside the set accepted by a
user supplied feasibility oracle. Strict nonlinear constraints such as
``det > v`` are never handed to the optimizer explicitly; the objective is
expected to blow up at their boundary and trial points outside are cut back
by step halving.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .models import InfeasibleError

log = logging.getLogger(__name__)

ARMIJO_C = 1e-4
MAX_HALVINGS = 60


@dataclass
class OptProblem:
    objective: Callable[[np.ndarray], tuple[float, np.ndarray]]
    x0: np.ndarray
    lower_bounds: np.ndarray | None = None
    feasibility: Callable[[np.ndarray], bool] | None = None
    # optional positive diagonal approximating the Hessian, used as H0
    precond: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float).copy()
        if self.lower_bounds is None:
            self.lower_bounds = np.full(self.x0.shape, -np.inf)
        else:
            self.lower_bounds = np.asarray(self.lower_bounds, dtype=float)
        if self.lower_bounds.shape != self.x0.shape:
            raise ValueError("lower_bounds and x0 have different shapes")

    @property
    def dim(self) -> int:
        return self.x0.size

    def is_feasible(self, x) -> bool:
        if np.any(x < self.lower_bounds):
            return False
        return self.feasibility is None or bool(self.feasibility(x))


@dataclass
class OptReport:
    x_final: np.ndarray
    f_final: float
    iterations: int
    f_history: list = field(default_factory=list)
    converged: bool = False
    stop_reason: str = "max_iter"
    grad_norm: float = np.nan


def _project(x, lb):
    return np.maximum(x, lb)


def _projected_gradient(x, g, lb):
    return _project(x - g, lb) - x


def _two_loop(g, s_list, y_list, dinv=None):
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(s_list), reversed(y_list)):
        rho = 1.0 / np.dot(y, s)
        a = rho * np.dot(s, q)
        alphas.append((rho, a))
        q -= a * y
    if dinv is not None:
        if s_list:
            s, y = s_list[-1], y_list[-1]
            q *= dinv * (np.dot(s, y) / np.dot(y, dinv * y))
        else:
            q *= dinv
    elif s_list:
        s, y = s_list[-1], y_list[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y), (rho, a) in zip(zip(s_list, y_list), reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return q


def minimize(problem: OptProblem, max_iter=50000, grad_tol=1e-8, step_tol=1e-12,
             memory=10, nonmonotone_window=10, callback=None) -> OptReport:
    """Minimize ``problem.objective`` from ``problem.x0``.

    Search directions come from the L-BFGS two-loop recursion applied to
    the gradient restricted to the free variables (those not held at a
    bound by a positive gradient). A trial step is projected onto the
    bounds and halved until the feasibility oracle accepts it, then halved
    further until the nonmonotone Armijo test against the maximum of the
    last ``nonmonotone_window`` objective values holds.

    Stops when the infinity norm of the projected gradient falls below
    ``grad_tol`` (``"gradient_tol"``), when the accepted step is shorter
    than ``step_tol`` or the line search gives up (``"step_tol"``), or
    after ``max_iter`` iterations.
    """
    lb = problem.lower_bounds
    x = _project(problem.x0, lb)
    if not np.array_equal(x, problem.x0) or not problem.is_feasible(x):
        raise ValueError("initial point violates the bounds or the feasibility oracle")
    try:
        f, g = problem.objective(x)
    except InfeasibleError as exc:
        raise ValueError(f"objective undefined at the initial point: {exc}") from exc
    if not np.isfinite(f):
        raise ValueError("objective is not finite at the initial point")

    s_list: deque = deque(maxlen=memory)
    y_list: deque = deque(maxlen=memory)
    recent = deque([f], maxlen=max(1, nonmonotone_window))
    history = [f]
    report = OptReport(x_final=x, f_final=f, iterations=0, f_history=history)

    for it in range(1, max_iter + 1):
        pg = _projected_gradient(x, g, lb)
        pg_norm = np.max(np.abs(pg)) if pg.size else 0.0
        report.grad_norm = pg_norm
        if pg_norm < grad_tol:
            report.converged, report.stop_reason = True, "gradient_tol"
            break

        # variables held at their bound by the gradient stay fixed
        free = ~((x <= lb) & (g > 0))
        gf = np.where(free, g, 0.0)
        dinv = None
        if problem.precond is not None:
            dinv = 1.0 / problem.precond(x)
        d = -_two_loop(gf, list(s_list), list(y_list), dinv)
        d[~free] = 0.0
        slope = np.dot(gf, d)
        if not slope < 0:
            s_list.clear()
            y_list.clear()
            d = -gf if dinv is None else -dinv * gf
            slope = np.dot(gf, d)
        if not s_list and dinv is None:
            # first step (or after a reset): unit length in the max norm
            d *= min(1.0, 1.0 / np.max(np.abs(d)))

        f_ref = max(recent)
        t = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS):
            xt = _project(x + t * d, lb)
            if problem.is_feasible(xt):
                try:
                    ft, gt = problem.objective(xt)
                except InfeasibleError:
                    ft = np.inf
                if np.isfinite(ft) and ft <= f_ref + ARMIJO_C * np.dot(g, xt - x):
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            report.stop_reason = "step_tol"
            break

        s = xt - x
        y = gt - g
        sy = np.dot(s, y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            s_list.append(s)
            y_list.append(y)
        x, f, g = xt, ft, gt
        recent.append(f)
        history.append(f)
        report.iterations = it
        if callback is not None:
            callback(x, f)
        if np.max(np.abs(s)) < step_tol:
            report.stop_reason = "step_tol"
            break

    report.x_final, report.f_final = x, f
    report.f_history = history
    return report


def grad_check(objective, x, fd_step=1e-4, feasibility=None, abs_floor=1e-10) -> float:
    """Largest componentwise relative error of the analytic gradient.

    Fourth-order central differences (five-point stencil) with step
    ``fd_step`` scaled by ``max(1, |x_i|)``. If a stencil point is infeasible
    the step is halved, at most 8 times.
    """
    x = np.asarray(x, dtype=float)
    _, g = objective(x)
    fd = np.empty_like(x)
    for i in range(x.size):
        step = fd_step * max(1.0, abs(x[i]))
        for _ in range(9):
            pts = []
            for k in (-2, -1, 1, 2):
                xk = x.copy()
                xk[i] += k * step
                pts.append(xk)
            if feasibility is None or all(feasibility(p) for p in pts):
                try:
                    fm2, fm1, fp1, fp2 = (objective(p)[0] for p in pts)
                    break
                except InfeasibleError:
                    pass
            step *= 0.5
        else:
            raise ValueError(f"finite-difference stencil infeasible at component {i}")
        fd[i] = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * step)
    err = np.abs(fd - g) / np.maximum(np.maximum(np.abs(fd), np.abs(g)), abs_floor)
    return float(np.max(err))
