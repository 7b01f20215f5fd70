"""End-to-end adaptation runs: standardize, align, embed, classify.

Multi-source flow: pooled standardization, fit the labeled barycenter of the
sources, attach the target via one more OT solve, assemble the star graph,
embed the normalized Laplacian, pick the dimension by eigengap (unless
fixed), then train the classifier head on the barycenter rows and predict
the target rows. The two-domain flow can skip the barycenter entirely and
work on the bipartite plan graph, training on the source rows.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace

import numpy as np

from . import barycenter as bc
from . import classify, graph, measures, spectral
from .errors import InvalidInput, SeotError, StageError
from .measures import LabeledDomain
from .ot import SinkhornConfig, sinkhorn
from .seeding import substream_seed

K_AUTO = "auto"
GAP_MARGIN = 5


@dataclass(frozen=True)
class SeotConfig:
    """Every knob of an adaptation run.

    `k=None` selects the embedding dimension by eigengap over
    [k_min, k_max] (defaults: n_classes up to n_classes + 10, capped by the
    graph size); an integer fixes it. All randomness flows from `seed`
    through named substreams, so runs are reproducible bit for bit.
    """

    n_classes: int
    ot: SinkhornConfig = SinkhornConfig()
    bary: bc.BarycenterConfig = bc.BarycenterConfig()
    classifier: classify.ClassifierConfig = classify.ClassifierConfig()
    prune_threshold: float = graph.DEFAULT_PRUNE
    k: int | None = None
    k_min: int | None = None
    k_max: int | None = None
    row_normalize: bool = True
    cost_p: float = 2.0
    standardize: bool = True
    train_on_sources_too: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n_classes < 2:
            raise InvalidInput(f"n_classes must be >= 2, got {self.n_classes}")
        if self.k is not None and self.k < 1:
            raise InvalidInput(f"fixed k must be >= 1, got {self.k}")
        if self.prune_threshold < 0:
            raise InvalidInput("prune_threshold must be >= 0")
        if self.cost_p < 1:
            raise InvalidInput("cost_p must be >= 1")


@dataclass(frozen=True)
class SeotRun:
    """Everything produced by one adaptation run."""

    barycenter: bc.Barycenter | None
    graph: graph.CrossDomainGraph
    embedding: spectral.SpectralEmbedding
    chosen_k: int
    gaps: np.ndarray
    class_gap: float
    predictions: np.ndarray
    report: classify.EvalReport | None
    timings: dict = field(compare=False)
    diagnostics: dict = field(compare=False)


@contextmanager
def _stage(name: str, timings: dict, diagnostics: dict):
    t0 = time.perf_counter()
    try:
        yield
    except SeotError as exc:
        if isinstance(exc, StageError):
            raise
        raise StageError(name, exc, diagnostics) from exc
    finally:
        timings[name] = time.perf_counter() - t0


def _resolve_k_range(cfg: SeotConfig, n_nodes: int) -> tuple[int, int]:
    k_min = cfg.k_min if cfg.k_min is not None else cfg.n_classes
    k_max = cfg.k_max if cfg.k_max is not None else cfg.n_classes + 10
    k_max = min(k_max, n_nodes - 2)
    if k_max < k_min:
        raise InvalidInput(
            f"gap search range [{k_min}, {k_max}] is empty for {n_nodes} nodes"
        )
    return k_min, k_max


def _eigendecompose(cfg: SeotConfig, cross_graph, timings, diagnostics):
    """Laplacian, eigenpairs, gap-based or fixed k, and the embedding."""
    with _stage("laplacian", timings, diagnostics):
        op = spectral.laplacian(cross_graph, spectral.SELF_LOOP)
        diagnostics["isolated_nodes"] = int(cross_graph.isolated_nodes().size)

    eig_seed = substream_seed(cfg.seed, "eigensolver-start")
    with _stage("eigensolve", timings, diagnostics):
        if cfg.k is None:
            _, k_max = _resolve_k_range(cfg, cross_graph.n_nodes)
            m = min(cross_graph.n_nodes - 1, k_max + GAP_MARGIN)
        else:
            if cfg.k >= cross_graph.n_nodes:
                raise InvalidInput(
                    f"fixed k={cfg.k} must be below the {cross_graph.n_nodes} nodes"
                )
            m = min(cross_graph.n_nodes - 1, cfg.k + GAP_MARGIN)
        eigenvalues, vectors = spectral.smallest_eigenpairs(op, m, seed=eig_seed)

    with _stage("select-k", timings, diagnostics):
        if cfg.k is None:
            k_min, k_max = _resolve_k_range(cfg, cross_graph.n_nodes)
            sel = spectral.select_k(eigenvalues, cfg.n_classes, k_min, k_max)
            chosen_k, gaps, class_gap = sel.k, sel.gaps, sel.class_gap
        else:
            chosen_k = cfg.k
            gaps = np.array([])
            nc = cfg.n_classes
            class_gap = (
                float(eigenvalues[nc] - eigenvalues[nc - 1])
                if eigenvalues.shape[0] > nc
                else float("nan")
            )
        F = vectors[:, :chosen_k]
        features = spectral.row_normalize_rows(F) if cfg.row_normalize else F
        embedding = spectral.SpectralEmbedding(
            vectors=F,
            features=features,
            eigenvalues=eigenvalues,
            k=chosen_k,
            row_normalized=cfg.row_normalize,
        )
    return embedding, chosen_k, gaps, class_gap


def _classify_rows(cfg, embedding, cross_graph, train_ids, train_labels, timings, diagnostics):
    with _stage("classify", timings, diagnostics):
        target_range = cross_graph.range_of("target")
        rows = embedding.features
        train_rows = rows[train_ids]
        test_rows = rows[target_range.indices]
        clf_seed = substream_seed(cfg.seed, "classifier-init")
        preds = classify.fit_predict(
            cfg.classifier, train_rows, train_labels, test_rows, seed=clf_seed
        )
    return preds


def run_seot(
    sources: list[LabeledDomain],
    target: LabeledDomain,
    cfg: SeotConfig,
) -> SeotRun:
    """Multi-source adaptation through the labeled barycenter star graph."""
    if not sources:
        raise InvalidInput("need at least one labeled source domain")
    if target is None or len(target) == 0:
        raise InvalidInput("target domain is empty")
    timings: dict = {}
    diagnostics: dict = {}

    with _stage("standardize", timings, diagnostics):
        if cfg.standardize:
            scaled = measures.standardize(list(sources) + [target])
            sources_s, target_s = scaled[:-1], scaled[-1]
        else:
            sources_s, target_s = list(sources), target

    with _stage("barycenter", timings, diagnostics):
        bary_cfg = cfg.bary
        if cfg.bary.seed is None:
            bary_cfg = replace(cfg.bary, seed=substream_seed(cfg.seed, "barycenter-init"))
        bary = bc.fit_barycenter(sources_s, bary_cfg, cfg.ot, cost_p=cfg.cost_p)
        diagnostics["barycenter"] = dict(bary.diagnostics)

    with _stage("attach-target", timings, diagnostics):
        bary = bc.attach_target(bary, target_s, cfg.ot, cost_p=cfg.cost_p)
        diagnostics["target_plan_converged"] = bary.plan_to_target.converged

    with _stage("graph", timings, diagnostics):
        cross_graph = graph.star_graph(
            bary, len(sources_s), len(target_s), cfg.prune_threshold
        )
        diagnostics["graph_nnz"] = cross_graph.nnz
        diagnostics["graph_nodes"] = cross_graph.n_nodes

    embedding, chosen_k, gaps, class_gap = _eigendecompose(
        cfg, cross_graph, timings, diagnostics
    )

    bary_range = cross_graph.range_of("barycenter")
    train_ids = bary_range.indices
    train_labels = bary.atom_labels
    if cfg.train_on_sources_too:
        extra_ids = np.concatenate(
            [cross_graph.range_of(f"source:{i}").indices for i in range(len(sources_s))]
        )
        extra_labels = np.concatenate([s.labels for s in sources_s])
        train_ids = np.concatenate([train_ids, extra_ids])
        train_labels = np.concatenate([train_labels, extra_labels])

    predictions = _classify_rows(
        cfg, embedding, cross_graph, train_ids, train_labels, timings, diagnostics
    )

    report = None
    if target.labels is not None:
        with _stage("evaluate", timings, diagnostics):
            report = classify.evaluate(
                predictions, target.labels, n_classes=cfg.n_classes
            )

    return SeotRun(
        barycenter=bary,
        graph=cross_graph,
        embedding=embedding,
        chosen_k=chosen_k,
        gaps=gaps,
        class_gap=class_gap,
        predictions=predictions,
        report=report,
        timings=timings,
        diagnostics=diagnostics,
    )


def run_two_domain(
    source: LabeledDomain,
    target: LabeledDomain,
    cfg: SeotConfig,
    skip_barycenter: bool = True,
) -> SeotRun:
    """Single-source adaptation on the bipartite plan graph.

    With `skip_barycenter`, the plan between source and target is the graph
    and the classifier trains on the embedded source rows; otherwise the run
    delegates to the barycenter pipeline with one source.
    """
    if source.labels is None:
        raise InvalidInput("source must be labeled")
    if target is None or len(target) == 0:
        raise InvalidInput("target domain is empty")
    if not skip_barycenter:
        return run_seot([source], target, cfg)

    timings: dict = {}
    diagnostics: dict = {}
    with _stage("standardize", timings, diagnostics):
        if cfg.standardize:
            source_s, target_s = measures.standardize([source, target])
        else:
            source_s, target_s = source, target

    with _stage("transport", timings, diagnostics):
        plan = sinkhorn(
            source_s.measure,
            target_s.measure,
            measures.cost_matrix(source_s.points, target_s.points, cfg.cost_p),
            cfg.ot,
        )
        diagnostics["plan_converged"] = plan.converged
        diagnostics["plan_iterations"] = plan.iterations

    with _stage("graph", timings, diagnostics):
        cross_graph = graph.bipartite_graph(plan, cfg.prune_threshold)
        diagnostics["graph_nnz"] = cross_graph.nnz
        diagnostics["graph_nodes"] = cross_graph.n_nodes

    embedding, chosen_k, gaps, class_gap = _eigendecompose(
        cfg, cross_graph, timings, diagnostics
    )

    train_ids = cross_graph.range_of("source:0").indices
    predictions = _classify_rows(
        cfg, embedding, cross_graph, train_ids, source_s.labels, timings, diagnostics
    )

    report = None
    if target.labels is not None:
        with _stage("evaluate", timings, diagnostics):
            report = classify.evaluate(
                predictions, target.labels, n_classes=cfg.n_classes
            )

    return SeotRun(
        barycenter=None,
        graph=cross_graph,
        embedding=embedding,
        chosen_k=chosen_k,
        gaps=gaps,
        class_gap=class_gap,
        predictions=predictions,
        report=report,
        timings=timings,
        diagnostics=diagnostics,
    )
