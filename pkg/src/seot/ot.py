"""Entropic optimal transport via Sinkhorn iterations.

The solver minimizes <C, gamma> - eps * H(gamma) over couplings of two
discrete measures, where H(gamma) = -sum gamma_ij log gamma_ij. The default
log-domain mode keeps the scaling vectors as log-potentials and updates them
with log-sum-exp reductions, so small regularization (down to 1e-4 on
standardized features) does not underflow. The plain scaling mode is kept for
cross-checks at large eps only.

A converged plan ends on a row update: row marginals match the source measure
to machine precision, column marginals to within `tol` in L1 norm.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidInput,
    NumericalError,
    OracleTooLarge,
    ShapeError,
    UnsupportedByOracle,
)
from .measures import CostMatrix, DiscreteMeasure


@dataclass(frozen=True)
class SinkhornConfig:
    """Solver knobs: regularization, iteration cap, marginal L1 tolerance."""

    epsilon: float = 1e-2
    max_iter: int = 10_000
    tol: float = 1e-8
    log_domain: bool = True

    def __post_init__(self):
        if self.epsilon <= 0:
            raise InvalidInput(f"epsilon must be > 0, got {self.epsilon}")
        if self.tol <= 0:
            raise InvalidInput(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise InvalidInput(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class TransportPlan:
    """Coupling matrix with solver diagnostics.

    `gamma` has the source measure on rows and the target on columns.
    `marginal_error` is the max of the two L1 marginal deviations actually
    achieved; `converged` is False when the iteration cap was hit first, in
    which case `gamma` is the best iterate.
    """

    gamma: np.ndarray
    cost: float
    iterations: int
    marginal_error: float
    epsilon: float
    converged: bool = True
    potentials: tuple[np.ndarray, np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )

    @property
    def shape(self) -> tuple[int, int]:
        return self.gamma.shape


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    """Log-sum-exp that tolerates -inf entries (zero-mass rows/columns)."""
    m = np.max(a, axis=axis)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    s = np.exp(a - np.expand_dims(m_safe, axis)).sum(axis=axis)
    with np.errstate(divide="ignore"):
        return m_safe + np.log(s)


def _logsumexp_into(ws, axis):
    """Log-sum-exp of `ws` over `axis`, clobbering `ws` (no large temporaries)."""
    m = ws.max(axis=axis)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    np.subtract(ws, np.expand_dims(m_safe, axis), out=ws)
    np.exp(ws, out=ws)
    s = ws.sum(axis=axis)
    with np.errstate(divide="ignore"):
        return m_safe + np.log(s)


def _sinkhorn_log(mu, nu, C, cfg, init):
    eps, tol = cfg.epsilon, cfg.tol
    log_kernel = -C / eps
    with np.errstate(divide="ignore"):
        log_mu = np.log(mu)
        log_nu = np.log(nu)
    nu_pos = nu > 0
    if init is not None:
        u, v = np.array(init[0]), np.array(init[1])
    else:
        u = np.zeros(mu.shape[0])
        v = np.zeros(nu.shape[0])

    ws = np.empty_like(log_kernel)
    all_nu_positive = bool(nu_pos.all())
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        np.add(log_kernel, v[None, :], out=ws)
        u = log_mu - _logsumexp_into(ws, axis=1)
        np.add(log_kernel, u[:, None], out=ws)
        v_next = log_nu - _logsumexp_into(ws, axis=0)
        # Column sums of the current plan are nu_j * exp(v_j - v_next_j), so
        # the feasibility check costs nothing beyond the update itself; a NaN
        # anywhere in the potentials surfaces in this scalar.
        diff = v - v_next if all_nu_positive else np.where(nu_pos, v - v_next, 0.0)
        col_err = float(np.dot(nu, np.abs(np.expm1(diff))))
        if col_err != col_err:
            raise NumericalError(f"NaN in potentials at iteration {it}")
        if col_err <= tol:
            converged = True
            break
        if it < cfg.max_iter:
            v = v_next

    # u was computed from this v, so the materialized plan always has exact
    # row marginals; column deviation is what marginal_error reports.
    np.add(log_kernel, u[:, None], out=ws)
    np.add(ws, v[None, :], out=ws)
    gamma = np.exp(ws)
    return gamma, it, converged, (u, v)


def _sinkhorn_scaling(mu, nu, C, cfg, init):
    kernel = np.exp(-C / cfg.epsilon)
    if init is not None:
        u, v = np.array(init[0]), np.array(init[1])
    else:
        u = np.ones(mu.shape[0])
        v = np.ones(nu.shape[0])

    converged = False
    it = 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for it in range(1, cfg.max_iter + 1):
            u = mu / (kernel @ v)
            if not np.all(np.isfinite(u)):
                raise NumericalError(f"non-finite row scaling at iteration {it}")
            u[mu == 0] = 0.0
            kt_u = kernel.T @ u
            col_err = float(np.abs(v * kt_u - nu).sum())
            if col_err <= cfg.tol:
                converged = True
                break
            if it < cfg.max_iter:
                v = nu / kt_u
                if not np.all(np.isfinite(v)):
                    raise NumericalError(
                        f"non-finite column scaling at iteration {it}"
                    )
                v[nu == 0] = 0.0

    gamma = u[:, None] * kernel * v[None, :]
    return gamma, it, converged, (u, v)


def sinkhorn(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    C: CostMatrix,
    cfg: SinkhornConfig = SinkhornConfig(),
    init_potentials: tuple[np.ndarray, np.ndarray] | None = None,
) -> TransportPlan:
    """Solve entropic OT between `mu` (rows) and `nu` (columns).

    Returns the best iterate with `converged=False` when the marginal
    tolerance is not reached within `cfg.max_iter`; raises NumericalError if
    the iteration produces NaN (possible in plain scaling mode at small eps).
    `init_potentials` warm-starts the scaling vectors, useful when re-solving
    a slightly perturbed problem.
    """
    a, b = mu.weights, nu.weights
    cost = C.values
    if cost.shape != (a.shape[0], b.shape[0]):
        raise ShapeError(
            f"cost is {cost.shape}, measures are ({a.shape[0]}, {b.shape[0]})"
        )
    solver = _sinkhorn_log if cfg.log_domain else _sinkhorn_scaling
    gamma, iterations, converged, pots = solver(a, b, cost, cfg, init_potentials)

    row_err = float(np.abs(gamma.sum(axis=1) - a).sum())
    col_err = float(np.abs(gamma.sum(axis=0) - b).sum())
    return TransportPlan(
        gamma=gamma,
        cost=float((cost * gamma).sum()),
        iterations=iterations,
        marginal_error=max(row_err, col_err),
        epsilon=cfg.epsilon,
        converged=converged,
        potentials=pots,
    )


def entropy(plan: TransportPlan | np.ndarray) -> float:
    """Shannon entropy -sum gamma_ij log gamma_ij, with 0 log 0 taken as 0."""
    gamma = plan.gamma if isinstance(plan, TransportPlan) else np.asarray(plan)
    pos = gamma[gamma > 0]
    return float(-(pos * np.log(pos)).sum())


def transport_cost(plan: TransportPlan | np.ndarray, C: CostMatrix) -> float:
    """Frobenius inner product of the cost matrix with the coupling."""
    gamma = plan.gamma if isinstance(plan, TransportPlan) else np.asarray(plan)
    if gamma.shape != C.values.shape:
        raise ShapeError(f"plan is {gamma.shape}, cost is {C.values.shape}")
    return float((C.values * gamma).sum())


ORACLE_MAX_SIZE = 8


def exact_ot_oracle(
    mu: DiscreteMeasure, nu: DiscreteMeasure, C: CostMatrix
) -> TransportPlan:
    """Exact unregularized OT for uniform equal-size marginals.

    With both measures uniform on n points, an optimal coupling is a
    permutation matrix scaled by 1/n (Birkhoff extreme point), so the optimum
    is found by enumerating all n! permutations. Intended as a ground-truth
    reference for tests; capped at n = 8.
    """
    n = len(mu)
    if len(nu) != n:
        raise UnsupportedByOracle("oracle requires equal-size measures")
    if n > ORACLE_MAX_SIZE:
        raise OracleTooLarge(f"n = {n} exceeds oracle cap {ORACLE_MAX_SIZE}")
    uniform = np.full(n, 1.0 / n)
    if (
        np.abs(mu.weights - uniform).max() > 1e-9
        or np.abs(nu.weights - uniform).max() > 1e-9
    ):
        raise UnsupportedByOracle("oracle requires uniform weights")
    cost = C.values
    if cost.shape != (n, n):
        raise ShapeError(f"cost is {cost.shape}, expected ({n}, {n})")

    rows = np.arange(n)
    best_cost = math.inf
    best_perm = None
    for perm in itertools.permutations(range(n)):
        c = cost[rows, perm].sum() / n
        if c < best_cost:
            best_cost = c
            best_perm = perm
    gamma = np.zeros((n, n))
    gamma[rows, best_perm] = 1.0 / n
    return TransportPlan(
        gamma=gamma,
        cost=float(best_cost),
        iterations=math.factorial(n),
        marginal_error=0.0,
        epsilon=0.0,
        converged=True,
    )
