"""Dense primal-dual interior-point solver for linear matrix inequalities.

Solves ``maximize c . y + c0`` subject to ``G(y) = G0 + sum_k y_k G_k >= 0``
where every ``G_k`` is a 0/1 pattern of matrix positions and patterns are
disjoint. In standard conic form this is the dual problem

    max b.y   s.t.   Z = C - sum_k y_k A_k >= 0

with ``C = G0`` and ``A_k = -G_k``; the paired primal is
``min <C, X>`` s.t. ``<A_k, X> = b_k``, ``X >= 0``. Iterates follow the
HKM search direction with Mehrotra's predictor-corrector. The duality gap
``<X, Z>`` bounds the distance of the reported value from the optimum.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ..errors import InfeasibleDetected, NotConverged

log = logging.getLogger(__name__)

try:  # the Schur complement dominates the cost; numba makes it ~20x faster
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None


@dataclass(frozen=True, eq=False)
class LmiProblem:
    size: int
    rows: np.ndarray  # ordered positions (p, q) of every free entry
    cols: np.ndarray
    var: np.ndarray  # variable index of each position
    n_vars: int
    const: np.ndarray  # G0
    c: np.ndarray
    c0: float = 0.0

    def __post_init__(self):
        order = np.argsort(self.var, kind="stable")
        for name in ("rows", "cols", "var"):
            object.__setattr__(self, name, np.ascontiguousarray(getattr(self, name)[order]))
        start = np.searchsorted(self.var, np.arange(self.n_vars + 1))
        object.__setattr__(self, "start", start.astype(np.int64))
        object.__setattr__(self, "flat", self.rows * self.size + self.cols)

    def matrix(self, y: np.ndarray) -> np.ndarray:
        out = self.const.astype(float).copy()
        out.flat[self.flat] += y[self.var]
        return out

    def adjoint(self, mat: np.ndarray) -> np.ndarray:
        """``[<G_k, mat>]_k``."""
        return np.bincount(self.var, weights=mat.flat[self.flat], minlength=self.n_vars)


@dataclass(frozen=True, eq=False)
class SdpSolution:
    gamma: np.ndarray
    value: float
    upper_bound: float
    psd_violation: float
    affine_violation: float
    gap: float
    iterations: int
    status: str
    y: np.ndarray | None = None

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "upper_bound": self.upper_bound,
            "psd_violation": self.psd_violation,
            "affine_violation": self.affine_violation,
            "gap": self.gap,
            "iterations": self.iterations,
            "status": self.status,
        }


def _schur_numpy(X, Zi, rows, cols, start, n_vars):
    # M[i, j] = sum_{(p,q) in i, (r,s) in j} X[q, r] * Zi[s, p]
    var = np.repeat(np.arange(n_vars), np.diff(start))
    M = np.zeros((n_vars, n_vars))
    Xc = X[cols]
    Zr = Zi[rows]
    chunk = max(1, 4_000_000 // max(len(rows), 1))
    for lo in range(0, len(rows), chunk):
        hi = min(lo + chunk, len(rows))
        K = Xc[:, rows[lo:hi]] * Zr[:, cols[lo:hi]]
        acc = np.add.reduceat(K, start[:-1], axis=0)
        np.add.at(M.T, var[lo:hi], acc.T)
    return M


if njit is not None:

    @njit(cache=True)
    def _schur_kernel(X, Zi, rows, cols, start, n_vars):  # pragma: no cover - compiled
        M = np.empty((n_vars, n_vars))
        for i in range(n_vars):
            for j in range(i, n_vars):
                s = 0.0
                for t in range(start[i], start[i + 1]):
                    xq = X[cols[t]]
                    zp = Zi[rows[t]]  # Zi is symmetric; rows keep memory access contiguous
                    for u in range(start[j], start[j + 1]):
                        s += xq[rows[u]] * zp[cols[u]]
                M[i, j] = s
                M[j, i] = s
        return M

else:  # pragma: no cover
    _schur_kernel = None


def schur_complement(problem: LmiProblem, X, Zi, backend: str = "auto") -> np.ndarray:
    if backend == "numpy" or (backend == "auto" and _schur_kernel is None):
        return _schur_numpy(X, Zi, problem.rows, problem.cols, problem.start, problem.n_vars)
    return _schur_kernel(
        np.ascontiguousarray(X), np.ascontiguousarray(Zi),
        problem.rows, problem.cols, problem.start, problem.n_vars,
    )


def _max_step(S: np.ndarray, dS: np.ndarray) -> float:
    """Largest ``a`` with ``S + a dS`` still positive semidefinite."""
    L = linalg.cholesky(S, lower=True, check_finite=False)
    Li = linalg.solve_triangular(L, np.eye(len(S)), lower=True)
    lam = np.linalg.eigvalsh(Li @ dS @ Li.T).min()
    return np.inf if lam >= 0 else -1.0 / lam


def _sym(a):
    return (a + a.T) / 2


def solve_lmi(
    problem: LmiProblem,
    tolerance: float = 1e-7,
    max_iterations: int = 100,
    backend: str = "auto",
) -> SdpSolution:
    """Solve ``problem`` until relative gap and both infeasibilities fall below
    ``tolerance``. The returned ``gamma`` is the affine image of the best dual
    iterate, so it meets every equality exactly; ``psd_violation`` reports how
    far it is from the cone (zero at an interior dual iterate).
    """
    n, k = problem.size, problem.n_vars
    C = problem.const.astype(float)
    b = problem.c.astype(float)
    if k == 0:
        ev = float(np.linalg.eigvalsh(C).min())
        return SdpSolution(C, problem.c0, problem.c0, max(0.0, -ev), 0.0, 0.0, 0, "trivial", np.zeros(0))

    def A(mat):  # <A_k, mat>
        return -problem.adjoint(mat)

    def At(y):  # sum_k y_k A_k
        out = np.zeros((n, n))
        out.flat[problem.flat] = -y[problem.var]
        return out

    norm_b = np.linalg.norm(b)
    norm_C = np.linalg.norm(C)
    counts = np.diff(problem.start).astype(float)
    ratio = (1 + np.abs(b)) / (1 + np.sqrt(counts))
    xi = max(10.0, np.sqrt(n), n * ratio.max())
    eta = max(10.0, np.sqrt(n), np.sqrt(counts.max()), norm_C)
    X = xi * np.eye(n)
    Z = eta * np.eye(n)
    y = np.zeros(k)

    best = None
    best_merit = np.inf
    stalled = 0
    status = "max_iterations"
    for it in range(1, max_iterations + 1):
        try:
            Lz = linalg.cholesky(Z, lower=True, check_finite=False)
        except linalg.LinAlgError:
            status = "numerical_failure"
            break
        Lzi = linalg.solve_triangular(Lz, np.eye(n), lower=True)
        Zi = Lzi.T @ Lzi
        Rp = b - A(X)
        Rd = C - Z - At(y)
        mu = np.sum(X * Z) / n
        pobj = float(np.sum(C * X))
        dobj = float(b @ y)
        gap = abs(pobj - dobj)
        rel_gap = gap / (1 + abs(pobj) + abs(dobj))
        pinf = np.linalg.norm(Rp) / (1 + norm_b)
        dinf = np.linalg.norm(Rd) / (1 + norm_C)
        log.debug("it %d pobj %.12f dobj %.12f gap %.2e pinf %.2e dinf %.2e",
                  it, pobj, dobj, rel_gap, pinf, dinf)
        merit = max(rel_gap, pinf, dinf)
        if merit < best_merit:
            best = (y.copy(), X, pobj, dobj, rel_gap, pinf, dinf, it)
            stalled = 0
            best_merit = merit
        else:
            stalled += 1
        if merit < tolerance:
            status = "optimal"
            break
        if stalled >= 5:
            status = "stalled"
            break
        if np.abs(y).max(initial=0) > 1e12 or np.abs(X).max() > 1e14:
            raise InfeasibleDetected("iterates diverged; the problem looks infeasible or unbounded")

        M = schur_complement(problem, X, Zi, backend)
        try:
            factor = linalg.cho_factor(M, lower=True, check_finite=False)
        except linalg.LinAlgError:
            log.debug("Schur complement not positive definite; regularizing")
            M[np.diag_indices(k)] += 1e-12 * max(1.0, np.trace(M) / k)
            try:
                factor = linalg.cho_factor(M, lower=True, check_finite=False)
            except linalg.LinAlgError:
                status = "numerical_failure"
                break

        XRdZi = X @ Rd @ Zi
        base_rhs = b + A(XRdZi)

        def direction(sigma, K):
            rhs = base_rhs - sigma * mu * A(Zi)
            if K is not None:
                rhs = rhs + A(K)
            dy = linalg.cho_solve(factor, rhs, check_finite=False)
            dy += linalg.cho_solve(factor, rhs - M @ dy, check_finite=False)
            dZ = Rd - At(dy)
            dX = sigma * mu * Zi - X - X @ dZ @ Zi
            if K is not None:
                dX = dX - K
            return dy, _sym(dX), _sym(dZ)

        try:
            dy, dX, dZ = direction(0.0, None)
            ap = min(1.0, _max_step(X, dX))
            ad = min(1.0, _max_step(Z, dZ))
            mu_aff = np.sum((X + ap * dX) * (Z + ad * dZ)) / n
            sigma = min(1.0, (mu_aff / mu) ** 3)
            dy, dX, dZ = direction(sigma, dX @ dZ @ Zi)
            gamma = 0.9 if it < 3 else 0.98
            ap = min(1.0, gamma * _max_step(X, dX))
            ad = min(1.0, gamma * _max_step(Z, dZ))
        except linalg.LinAlgError:
            status = "numerical_failure"
            break
        X = _sym(X + ap * dX)
        y = y + ad * dy
        Z = _sym(Z + ad * dZ)

    y, X, pobj, dobj, rel_gap, pinf, dinf, it = best
    gamma = problem.matrix(y)
    ev = float(np.linalg.eigvalsh(gamma).min())
    solution = SdpSolution(
        gamma=gamma,
        value=float(b @ y) + problem.c0,
        upper_bound=pobj + problem.c0,
        psd_violation=max(0.0, -ev),
        affine_violation=0.0,
        gap=rel_gap,
        iterations=it,
        status=status,
        y=y,
    )
    if status != "optimal":
        raise NotConverged(
            f"solver stopped ({status}) with gap {rel_gap:.2e}, "
            f"primal {pinf:.2e}, dual {dinf:.2e}",
            solution,
        )
    return solution
