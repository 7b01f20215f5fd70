"""Free-support labeled barycenter of the source domains.

The barycenter minimizes the weighted sum of entropic transport costs to all
sources over both its atom locations and the plans, by alternating (a)
entropic OT solves from the current atoms to each source and (b) moving every
atom to its barycentric projection, the plan-weighted mean of the samples it
transports to. Atoms inherit labels by majority of transported class mass, so
the result can act as a labeled surrogate training domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidInput, UnsupportedCost
from .measures import DiscreteMeasure, LabeledDomain, cost_matrix, squared_distances
from .ot import SinkhornConfig, TransportPlan, entropy, sinkhorn

KMEANS_PP = "kmeans++"
RANDOM_SUBSET = "random-subset"


@dataclass(frozen=True)
class BarycenterConfig:
    """Barycenter fitting knobs.

    `n_atoms=None` defaults to the size of the smallest source domain and
    `source_weights=None` to uniform mixing. The outer loop stops when the
    largest atom displacement falls below `support_tol`.
    """

    n_atoms: int | None = None
    source_weights: np.ndarray | None = None
    max_outer_iter: int = 100
    support_tol: float = 1e-5
    init: str = KMEANS_PP
    seed: int | None = None

    def __post_init__(self):
        if self.n_atoms is not None and self.n_atoms < 1:
            raise InvalidInput(f"n_atoms must be >= 1, got {self.n_atoms}")
        if self.max_outer_iter < 1:
            raise InvalidInput("max_outer_iter must be >= 1")
        if self.support_tol <= 0:
            raise InvalidInput("support_tol must be > 0")
        if self.init not in (KMEANS_PP, RANDOM_SUBSET):
            raise InvalidInput(f"unknown init scheme {self.init!r}")
        if self.source_weights is not None:
            w = np.asarray(self.source_weights, dtype=np.float64).ravel()
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
                raise InvalidInput("source_weights must lie on the simplex")
            object.__setattr__(self, "source_weights", w)


@dataclass(frozen=True)
class Barycenter:
    """Fitted barycenter: atoms, labels, and the plans to every domain.

    `objective_trace` records the quantity the alternating scheme minimizes,
    the weighted sum of entropic objectives <C, gamma> - eps * H(gamma), and
    is non-increasing across outer iterations. `transport_cost_trace` is the
    weighted sum of plain transport costs; it tracks the objective closely
    but can tick upward when a re-solve trades linear cost for entropy.
    """

    support: np.ndarray
    weights: np.ndarray
    atom_labels: np.ndarray
    plans_to_sources: tuple[TransportPlan, ...]
    source_weights: np.ndarray
    objective_trace: np.ndarray
    transport_cost_trace: np.ndarray
    plan_to_target: TransportPlan | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def n_atoms(self) -> int:
        return self.support.shape[0]

    def measure(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.support, self.weights)


def _kmeans_pp_indices(points: np.ndarray, k: int, rng: np.random.Generator):
    """D^2-sampling seeding: k distinct row indices of `points`."""
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = squared_distances(points, points[chosen[-1]][None, :]).ravel()
    for _ in range(k - 1):
        total = d2.sum()
        if total <= 0:
            # all remaining points coincide with a chosen one; fill uniformly
            remaining = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(remaining))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        chosen.append(idx)
        d2 = np.minimum(d2, squared_distances(points, points[idx][None, :]).ravel())
    return np.asarray(chosen)


def _init_support(pooled, n_atoms, scheme, rng):
    if scheme == RANDOM_SUBSET:
        idx = rng.choice(pooled.shape[0], size=n_atoms, replace=False)
    else:
        idx = _kmeans_pp_indices(pooled, n_atoms, rng)
    return pooled[idx].copy()


def _transported_class_mass(plans, sources, source_weights, n_classes):
    """mass[k, c] = sum_i w_i * sum_{j: y_j = c} plan_i[k, j]."""
    n_atoms = plans[0].gamma.shape[0]
    mass = np.zeros((n_atoms, n_classes))
    for w, plan, src in zip(source_weights, plans, sources):
        onehot = np.zeros((len(src), n_classes))
        onehot[np.arange(len(src)), src.labels] = 1.0
        mass += w * (plan.gamma @ onehot)
    return mass


def _labels_from_mass(mass, support, sources, diagnostics):
    """Argmax of transported class mass; ties go to the smaller class id.

    Atoms that received no mass at all fall back to the label of the nearest
    pooled source sample; those atom indices are recorded in diagnostics.
    """
    labels = np.argmax(mass, axis=1).astype(np.int64)
    dead = np.flatnonzero(mass.sum(axis=1) == 0)
    if dead.size:
        pooled = np.vstack([s.points for s in sources])
        pooled_labels = np.concatenate([s.labels for s in sources])
        nearest = np.argmin(squared_distances(support[dead], pooled), axis=1)
        labels[dead] = pooled_labels[nearest]
        diagnostics.setdefault("label_fallback_atoms", []).extend(dead.tolist())
    return labels


def assign_atom_labels(
    bary: Barycenter,
    sources: list[LabeledDomain],
    diagnostics: dict | None = None,
) -> np.ndarray:
    """Class id per atom by weighted transported-mass vote over the sources."""
    if len(bary.plans_to_sources) != len(sources):
        raise InvalidInput(
            f"{len(sources)} sources for {len(bary.plans_to_sources)} plans"
        )
    if any(s.labels is None for s in sources):
        raise InvalidInput("all sources must be labeled")
    n_classes = int(max(s.labels.max() for s in sources)) + 1
    mass = _transported_class_mass(
        bary.plans_to_sources, sources, bary.source_weights, n_classes
    )
    diag = diagnostics if diagnostics is not None else {}
    return _labels_from_mass(mass, bary.support, sources, diag)


def fit_barycenter(
    sources: list[LabeledDomain],
    cfg: BarycenterConfig = BarycenterConfig(),
    ot_cfg: SinkhornConfig = SinkhornConfig(),
    cost_p: float = 2.0,
) -> Barycenter:
    """Alternating free-support barycenter of the labeled sources.

    Each outer iteration solves one entropic OT problem per source (warm
    started from the previous potentials) and moves atom k to
    sum_i w_i * n_atoms * (plan_i @ X_i)_k, the squared-Euclidean barycentric
    projection under the uniform atom weights. The stored support is always
    the one the stored plans were solved against.
    """
    if not sources:
        raise InvalidInput("need at least one source domain")
    if cost_p != 2.0:
        raise UnsupportedCost(
            "barycentric projection requires squared-Euclidean cost (p=2), "
            f"got p={cost_p}"
        )
    if any(s.labels is None for s in sources):
        raise InvalidInput("all sources must be labeled")
    dims = {s.dim for s in sources}
    if len(dims) > 1:
        raise InvalidInput(f"sources disagree on feature dim: {sorted(dims)}")

    n_atoms = cfg.n_atoms if cfg.n_atoms is not None else min(len(s) for s in sources)
    pooled = np.vstack([s.points for s in sources])
    if n_atoms > pooled.shape[0]:
        raise InvalidInput(
            f"n_atoms={n_atoms} exceeds the {pooled.shape[0]} pooled source samples"
        )
    n_classes = int(max(s.labels.max() for s in sources)) + 1
    if n_atoms < n_classes:
        raise InvalidInput(f"n_atoms={n_atoms} below the class count {n_classes}")
    if cfg.source_weights is not None:
        if cfg.source_weights.shape[0] != len(sources):
            raise InvalidInput("one source weight per source required")
        src_w = cfg.source_weights
    else:
        src_w = np.full(len(sources), 1.0 / len(sources))

    rng = np.random.default_rng(cfg.seed if cfg.seed is not None else 0)
    support = _init_support(pooled, n_atoms, cfg.init, rng)
    mu_b = np.full(n_atoms, 1.0 / n_atoms)

    warm = [None] * len(sources)
    trace = []
    cost_trace = []
    plans: list[TransportPlan] = []
    converged = False
    outer = 0
    for outer in range(1, cfg.max_outer_iter + 1):
        bary_measure = DiscreteMeasure(support, mu_b)
        plans = []
        for i, src in enumerate(sources):
            plan = sinkhorn(
                bary_measure,
                src.measure,
                cost_matrix(support, src.points, 2.0),
                ot_cfg,
                init_potentials=warm[i],
            )
            warm[i] = plan.potentials
            plans.append(plan)
        cost_trace.append(float(sum(w * p.cost for w, p in zip(src_w, plans))))
        trace.append(
            float(
                sum(
                    w * (p.cost - ot_cfg.epsilon * entropy(p))
                    for w, p in zip(src_w, plans)
                )
            )
        )

        projected = np.zeros_like(support)
        for w, plan, src in zip(src_w, plans, sources):
            projected += w * n_atoms * (plan.gamma @ src.points)
        displacement = float(
            np.sqrt(((projected - support) ** 2).sum(axis=1)).max()
        )
        if displacement < cfg.support_tol:
            converged = True
            break
        if outer == cfg.max_outer_iter:
            break
        support = projected

    diagnostics = {
        "outer_iterations": outer,
        "converged": converged,
        "sinkhorn_converged": [p.converged for p in plans],
    }
    mass = _transported_class_mass(plans, sources, src_w, n_classes)
    labels = _labels_from_mass(mass, support, sources, diagnostics)
    return Barycenter(
        support=support,
        weights=mu_b,
        atom_labels=labels,
        plans_to_sources=tuple(plans),
        source_weights=src_w,
        objective_trace=np.asarray(trace),
        transport_cost_trace=np.asarray(cost_trace),
        plan_to_target=None,
        diagnostics=diagnostics,
    )


def attach_target(
    bary: Barycenter,
    target: LabeledDomain,
    ot_cfg: SinkhornConfig = SinkhornConfig(),
    cost_p: float = 2.0,
) -> Barycenter:
    """Solve OT from the barycenter atoms to the target and store the plan.

    Returns a new Barycenter value; calling again simply overwrites the
    target plan, the source plans and the support are untouched.
    """
    if target.dim != bary.support.shape[1]:
        raise InvalidInput(
            f"target dim {target.dim} != barycenter dim {bary.support.shape[1]}"
        )
    plan = sinkhorn(
        bary.measure(),
        target.measure,
        cost_matrix(bary.support, target.points, cost_p),
        ot_cfg,
    )
    return replace(bary, plan_to_target=plan)
