"""Derivative-free minimization, nonlinear equation solving, quadrature,
polynomial roots and fixed-step linear simulation.

Everything here is a pure function of its inputs; no module state. The two
solvers return a :class:`SolverReport` so callers can re-check convergence
claims independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


@dataclass
class BoxBounds:
    """Per-coordinate box for a decision vector."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.lower.shape != self.upper.shape:
            raise ValueError("bounds must have matching shapes")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass
class SolverReport:
    """Outcome of a solver run.

    ``fval`` is the best objective for the simplex minimizer and the final
    residual infinity-norm for the equation solver.  ``history`` records the
    best value after each iteration (monotone for the simplex).
    """

    solution: np.ndarray
    fval: float
    iterations: int
    evaluations: int
    converged: bool
    history: list = field(default_factory=list)


def _check_finite(x, what):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{what} contains non-finite entries")
    return x


def nelder_mead_minimize(f, x0, bounds: BoxBounds | None = None,
                         tol: float = 1e-8, max_evals: int = 20000) -> SolverReport:
    """Nelder-Mead simplex minimization with optional box constraints.

    Box handling: candidate vertices are clamped onto the box and an
    additive penalty proportional to the clamp distance is applied, so the
    returned solution always lies inside the bounds.

    Terminates when both the objective spread and the simplex diameter fall
    below ``tol``, or when ``max_evals`` is exhausted (``converged=False``).
    """
    x0 = _check_finite(x0, "x0")
    n = x0.size
    if bounds is not None and not bounds.contains(x0):
        raise ValueError("x0 violates the supplied bounds")

    evals = 0

    def feval(x):
        nonlocal evals
        evals += 1
        if bounds is None:
            v = f(x)
        else:
            xc = bounds.clip(x)
            v = f(xc) + 1e3 * float(np.linalg.norm(x - xc))
        return float(v) if np.isfinite(v) else 1e30

    f0 = feval(x0)
    if f0 >= 1e30:
        raise ValueError("objective is not finite at x0")

    # fminsearch-style initial simplex: 5% perturbation, absolute floor
    verts = [x0.astype(float)]
    for i in range(n):
        v = x0.astype(float).copy()
        v[i] = v[i] * 1.05 if v[i] != 0.0 else 0.00025
        verts.append(v)
    verts = np.array(verts)
    fvals = np.array([f0] + [feval(v) for v in verts[1:]])

    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    history = []
    iters = 0
    converged = False
    while evals < max_evals:
        order = np.argsort(fvals, kind="stable")
        verts, fvals = verts[order], fvals[order]
        history.append(float(fvals[0]))
        spread = fvals[-1] - fvals[0]
        diam = np.max(np.abs(verts[1:] - verts[0]))
        if spread <= tol and diam <= tol:
            converged = True
            break
        iters += 1

        centroid = verts[:-1].mean(axis=0)
        xr = centroid + alpha * (centroid - verts[-1])
        fr = feval(xr)
        if fr < fvals[0]:
            xe = centroid + gamma * (xr - centroid)
            fe = feval(xe)
            if fe < fr:
                verts[-1], fvals[-1] = xe, fe
            else:
                verts[-1], fvals[-1] = xr, fr
        elif fr < fvals[-2]:
            verts[-1], fvals[-1] = xr, fr
        else:
            if fr < fvals[-1]:
                xc = centroid + rho * (xr - centroid)
            else:
                xc = centroid + rho * (verts[-1] - centroid)
            fc = feval(xc)
            if fc < min(fr, fvals[-1]):
                verts[-1], fvals[-1] = xc, fc
            else:
                for i in range(1, n + 1):
                    verts[i] = verts[0] + sigma * (verts[i] - verts[0])
                    fvals[i] = feval(verts[i])

    order = np.argsort(fvals, kind="stable")
    best = verts[order[0]]
    if bounds is not None:
        best = bounds.clip(best)
    return SolverReport(solution=best, fval=float(fvals[order[0]]),
                        iterations=iters, evaluations=evals,
                        converged=converged, history=history)


def finite_difference_jacobian(F, x, fx=None, rel_step: float = 1e-6):
    """Forward-difference Jacobian with step rel_step*max(1, |x_i|)."""
    x = np.asarray(x, dtype=float)
    if fx is None:
        fx = np.asarray(F(x), dtype=float)
    m, n = fx.size, x.size
    J = np.empty((m, n))
    for i in range(n):
        h = rel_step * max(1.0, abs(x[i]))
        xp = x.copy()
        xp[i] += h
        J[:, i] = (np.asarray(F(xp), dtype=float) - fx) / h
    return J, fx


def dogleg_solve(F, x0, tol: float = 1e-10, max_iters: int = 200,
                 radius0: float = 1.0, radius_floor: float = 1e-14) -> SolverReport:
    """Powell trust-region dogleg for square (or overdetermined) F(x)=0.

    The Jacobian comes from forward differences.  Steps combine the Cauchy
    point and the Gauss-Newton step inside the trust radius; steps are
    accepted only when the actual residual norm decreases, so the accepted
    iterates have monotone non-increasing ||F||.  Convergence means
    ||F||_inf <= tol.  A radius collapse below ``radius_floor`` gives up
    with ``converged=False`` and the best point found.
    """
    x = _check_finite(x0, "x0").copy()
    evals = 0

    def call(z):
        nonlocal evals
        evals += 1
        v = np.asarray(F(z), dtype=float)
        return v

    fx = call(x)
    if not np.all(np.isfinite(fx)):
        raise ValueError("residual is not finite at x0")
    norm = np.linalg.norm(fx)
    best_x, best_f, best_norm = x.copy(), fx.copy(), norm
    radius = radius0
    history = [float(np.max(np.abs(fx)))]
    converged = bool(np.max(np.abs(fx)) <= tol)

    it = 0
    while not converged and it < max_iters and radius > radius_floor:
        it += 1
        def wrapped(z):
            nonlocal evals
            evals += z.size * 0  # counted in finite_difference_jacobian below
            return F(z)
        J, _ = finite_difference_jacobian(call, x, fx)
        if not np.all(np.isfinite(J)):
            radius *= 0.25
            history.append(float(np.max(np.abs(fx))))
            continue
        g = J.T @ fx  # gradient of 0.5*||F||^2
        gn = np.linalg.lstsq(J, -fx, rcond=None)[0]

        gnorm = np.linalg.norm(g)
        if gnorm == 0.0:
            break
        Jg = J @ g
        t = gnorm ** 2 / (np.linalg.norm(Jg) ** 2 + 1e-300)
        cauchy = -t * g

        if np.linalg.norm(gn) <= radius:
            p = gn
        elif np.linalg.norm(cauchy) >= radius:
            p = -radius / gnorm * g
        else:
            d = gn - cauchy
            a = d @ d
            b = 2.0 * cauchy @ d
            c = cauchy @ cauchy - radius ** 2
            s = (-b + np.sqrt(max(b * b - 4 * a * c, 0.0))) / (2 * a)
            p = cauchy + s * d

        f_new = call(x + p)
        ok = np.all(np.isfinite(f_new))
        norm_new = np.linalg.norm(f_new) if ok else np.inf
        pred = 0.5 * norm ** 2 - 0.5 * np.linalg.norm(fx + J @ p) ** 2
        actual = 0.5 * norm ** 2 - 0.5 * norm_new ** 2
        ratio = actual / pred if pred > 0 else -1.0

        if ok and norm_new < norm:
            x = x + p
            fx, norm = f_new, norm_new
            if norm < best_norm:
                best_x, best_f, best_norm = x.copy(), fx.copy(), norm
        if ratio < 0.25:
            radius = 0.25 * max(np.linalg.norm(p), radius * 0.25)
        elif ratio > 0.75 and np.linalg.norm(p) >= 0.99 * radius:
            radius = min(2.0 * radius, 1e6)
        history.append(float(np.max(np.abs(fx))))
        converged = bool(np.max(np.abs(fx)) <= tol)

    return SolverReport(solution=best_x, fval=float(np.max(np.abs(best_f))),
                        iterations=it, evaluations=evals,
                        converged=converged, history=history)


def trapezoid_integral(samples, dt: float) -> float:
    """Composite trapezoid rule over uniformly spaced samples."""
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        raise ValueError("need at least two samples")
    if dt <= 0:
        raise ValueError("dt must be positive")
    return float(dt * (samples[0] / 2 + samples[1:-1].sum() + samples[-1] / 2))


def polynomial_roots(coeffs) -> np.ndarray:
    """Roots of a real polynomial (descending powers), companion eigenvalues."""
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    nz = np.flatnonzero(np.abs(c) > 0.0)
    if nz.size == 0:
        raise ValueError("all-zero polynomial has no defined roots")
    c = c[nz[0]:]
    if c.size < 2:
        raise ValueError("degree must be at least 1")
    return np.roots(c)


def rk4_simulate(A, B, C, D, u, dt: float, stiffness_cap: float = 0.1) -> np.ndarray:
    """Classical fixed-step RK4 simulation of x' = Ax + Bu, y = Cx + Du.

    Zero initial state; the input is sampled at step dt and held linearly
    between samples for the RK4 stage evaluations.  Rejects systems whose
    fastest mode violates |lambda_max| * dt > stiffness_cap since the fixed
    step cannot resolve it -- reduce dt (or discretize exactly, see
    :func:`zoh_simulate`).
    """
    u = np.asarray(u, dtype=float)
    if dt <= 0:
        raise ValueError("dt must be positive")
    A = np.atleast_2d(np.asarray(A, dtype=float)) if np.size(A) else np.zeros((0, 0))
    n = A.shape[0]
    if n == 0:
        return float(D) * u
    B = np.asarray(B, dtype=float).reshape(n)
    C = np.asarray(C, dtype=float).reshape(n)
    lam_max = np.max(np.abs(np.linalg.eigvals(A)))
    if lam_max * dt > stiffness_cap:
        raise ValueError(
            f"dt={dt:g} too large for stiffest mode |lambda|={lam_max:.3g}; "
            f"reduce dt below {stiffness_cap / lam_max:.3g}")

    x = np.zeros(n)
    y = np.empty(u.size)
    y[0] = C @ x + D * u[0]
    for k in range(u.size - 1):
        u0, u1 = u[k], u[k + 1]
        um = 0.5 * (u0 + u1)
        k1 = A @ x + B * u0
        k2 = A @ (x + 0.5 * dt * k1) + B * um
        k3 = A @ (x + 0.5 * dt * k2) + B * um
        k4 = A @ (x + dt * k3) + B * u1
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        y[k + 1] = C @ x + D * u[k + 1]
    return y


def zoh_simulate(A, B, C, D, u, dt: float) -> np.ndarray:
    """Exact zero-order-hold discretization of x' = Ax + Bu, y = Cx + Du.

    Matrix-exponential discretization is exact for inputs held constant over
    each step, which covers the step/disturbance signals used throughout.
    Handles arbitrarily stiff A where RK4 would need a far smaller step.
    """
    u = np.asarray(u, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float)) if np.size(A) else np.zeros((0, 0))
    n = A.shape[0]
    if n == 0:
        return float(D) * u
    B = np.asarray(B, dtype=float).reshape(n, 1)
    C = np.asarray(C, dtype=float).reshape(1, n)
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = A * dt
    M[:n, n:] = B * dt
    E = scipy.linalg.expm(M)
    Ad, Bd = E[:n, :n], E[:n, n]

    x = np.zeros(n)
    y = np.empty(u.size)
    y[0] = float(C @ x) + D * u[0]
    for k in range(u.size - 1):
        x = Ad @ x + Bd * u[k]
        y[k + 1] = float(C @ x) + D * u[k + 1]
    return y
