"""Self-contained equality/inequality constrained NLP solver.

Sequential quadratic approximation with an augmented-Lagrangian treatment of
constraints: the outer loop updates multipliers and the penalty weight, the
inner loop takes damped (Gauss-)Newton steps on the augmented Lagrangian with
an Armijo backtracking line search.  Everything is dense numpy and fully
deterministic: identical inputs produce bitwise-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["NlpProblem", "NlpResult", "solve_nlp"]


@dataclass
class NlpProblem:
    """Problem data as callables over the flat decision vector z.

    cost(z) -> (f, grad, hess) with hess a dense PSD approximation.
    eq(z)   -> (c, J) equality constraints c(z) = 0.
    ineq(z) -> (g, J) inequality constraints g(z) <= 0.
    Either constraint callable may be None.
    """

    n: int
    cost: Callable[[np.ndarray], tuple[float, np.ndarray, np.ndarray]]
    eq: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None
    ineq: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None


@dataclass
class NlpResult:
    z: np.ndarray
    cost: float
    max_violation: float
    stationarity: float
    iterations: int
    converged: bool
    nu: np.ndarray
    lam: np.ndarray


def _empty(n: int):
    return np.zeros(0), np.zeros((0, n))


def solve_nlp(
    problem: NlpProblem,
    z0: np.ndarray,
    max_iter: int = 100,
    tol_feas: float = 1e-7,
    tol_stat: float = 1e-5,
    rho0: float = 10.0,
    rho_max: float = 1e9,
    warm_nu: np.ndarray | None = None,
    warm_lam: np.ndarray | None = None,
) -> NlpResult:
    """Minimize cost subject to eq(z) = 0 and ineq(z) <= 0.

    ``max_iter`` caps the total number of Newton iterations across all outer
    multiplier updates; the best feasible iterate is returned if the cap hits.
    """
    z = np.array(z0, dtype=float)
    n = problem.n
    eq_fn = problem.eq or (lambda _z: _empty(n))
    in_fn = problem.ineq or (lambda _z: _empty(n))

    c, _ = eq_fn(z)
    g, _ = in_fn(z)
    nu = np.zeros(len(c)) if warm_nu is None or len(warm_nu) != len(c) else np.array(warm_nu, dtype=float)
    lam = np.zeros(len(g)) if warm_lam is None or len(warm_lam) != len(g) else np.array(warm_lam, dtype=float)
    rho = rho0

    def violation(c_val, g_val) -> float:
        v = 0.0
        if len(c_val):
            v = float(np.max(np.abs(c_val)))
        if len(g_val):
            v = max(v, float(np.max(np.maximum(g_val, 0.0))))
        return v

    def al_value(z_):
        f, _, _ = problem.cost(z_)
        c_, _ = eq_fn(z_)
        g_, _ = in_fn(z_)
        val = f
        if len(c_):
            val += nu @ c_ + 0.5 * rho * (c_ @ c_)
        if len(g_):
            act = np.maximum(0.0, lam / rho + g_)
            val += 0.5 * rho * (act @ act) - 0.5 / rho * (lam @ lam)
        return val

    def al_grad_hess(z_):
        f, grad_f, hess_f = problem.cost(z_)
        c_, Jc = eq_fn(z_)
        g_, Jg = in_fn(z_)
        grad = grad_f.copy()
        H = hess_f.copy()
        if len(c_):
            grad += Jc.T @ (nu + rho * c_)
            H += rho * (Jc.T @ Jc)
        if len(g_):
            y_in = np.maximum(0.0, lam + rho * g_)
            grad += Jg.T @ y_in
            active = y_in > 0
            if np.any(active):
                Ja = Jg[active]
                H += rho * (Ja.T @ Ja)
        return grad, H

    it = 0
    inner_tol = max(tol_stat, 1e-3)
    feas_target = 1e-3
    best = None
    identity = np.eye(n)

    for _outer in range(60):
        # ----- inner: damped Newton with Armijo line search -----
        stalled = False
        while it < max_iter:
            grad, H = al_grad_hess(z)
            if float(np.max(np.abs(grad), initial=0.0)) <= inner_tol:
                break
            tau = 1e-8 * max(1.0, float(np.trace(H)) / max(n, 1))
            step = None
            for _ in range(12):
                try:
                    cand = np.linalg.solve(H + tau * identity, -grad)
                except np.linalg.LinAlgError:
                    cand = None
                if cand is not None and grad @ cand < 0:
                    step = cand
                    break
                tau = max(tau * 10.0, 1e-6)
            if step is None:
                step = -grad

            al0 = al_value(z)
            slope = grad @ step
            alpha, accepted = 1.0, False
            for _ in range(30):
                z_try = z + alpha * step
                if al_value(z_try) <= al0 + 1e-4 * alpha * slope:
                    z, accepted = z_try, True
                    break
                alpha *= 0.5
            it += 1
            if not accepted:
                stalled = True
                break

        # ----- outer: convergence test and multiplier/penalty update -----
        c, Jc = eq_fn(z)
        g, Jg = in_fn(z)
        viol = violation(c, g)
        f, grad_f, _ = problem.cost(z)
        grad_lag = grad_f.copy()
        if len(c):
            grad_lag += Jc.T @ (nu + rho * c)
        if len(g):
            grad_lag += Jg.T @ np.maximum(0.0, lam + rho * g)
        stat = float(np.max(np.abs(grad_lag), initial=0.0))

        if best is None or (viol, stat) < (best[0], best[1]):
            best = (viol, stat, z.copy(), nu.copy(), lam.copy(), f)

        if viol <= tol_feas and stat <= tol_stat:
            return NlpResult(z, f, viol, stat, it, True, nu.copy(), lam.copy())
        if it >= max_iter:
            break

        if viol <= feas_target:
            if len(c):
                nu = nu + rho * c
            if len(g):
                lam = np.maximum(0.0, lam + rho * g)
            inner_tol = max(tol_stat, inner_tol * 0.2)
            feas_target = max(tol_feas, feas_target * 0.2)
        else:
            if rho >= rho_max and stalled:
                break
            rho = min(rho * 10.0, rho_max)

    viol, stat, z_best, nu_b, lam_b, f_best = best
    return NlpResult(z_best, f_best, viol, stat, it, False, nu_b, lam_b)
