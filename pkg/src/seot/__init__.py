"""seot: domain adaptation by spectral embedding of optimal transport plans.

Entropic transport plans between a labeled barycenter of the source domains
and every domain are read as the adjacency of one cross-domain graph; the
spectral embedding of its normalized Laplacian gives domain-invariant node
features on which a classifier trained on the barycenter rows labels the
target rows.
"""

from .barycenter import (
    Barycenter,
    BarycenterConfig,
    assign_atom_labels,
    attach_target,
    fit_barycenter,
)
from .classify import (
    ClassifierConfig,
    EmbeddedDataset,
    EvalReport,
    SoftmaxModel,
    evaluate,
    knn_predict,
    softmax_predict,
    softmax_train,
    source_only_baseline,
)
from .errors import (
    DegenerateGraph,
    InvalidInput,
    InvalidState,
    IterativeSolverError,
    NumericalError,
    OracleTooLarge,
    SeotError,
    ShapeError,
    StageError,
    UnsupportedByOracle,
    UnsupportedCost,
)
from .graph import (
    CrossDomainGraph,
    NodeRange,
    bipartite_graph,
    components,
    star_graph,
    write_edge_list,
)
from .measures import (
    CostMatrix,
    DiscreteMeasure,
    LabeledDomain,
    cost_matrix,
    standardize,
    uniform_measure,
)
from .ot import (
    SinkhornConfig,
    TransportPlan,
    entropy,
    exact_ot_oracle,
    sinkhorn,
    transport_cost,
)
from .pipeline import SeotConfig, SeotRun, run_seot, run_two_domain
from .spectral import (
    GapSelection,
    LaplacianOperator,
    SpectralEmbedding,
    embed,
    laplacian,
    select_k,
    smallest_eigenpairs,
)
from .synth import SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "Barycenter",
    "BarycenterConfig",
    "ClassifierConfig",
    "CostMatrix",
    "CrossDomainGraph",
    "DegenerateGraph",
    "DiscreteMeasure",
    "EmbeddedDataset",
    "EvalReport",
    "GapSelection",
    "InvalidInput",
    "InvalidState",
    "IterativeSolverError",
    "LabeledDomain",
    "LaplacianOperator",
    "NodeRange",
    "NumericalError",
    "OracleTooLarge",
    "SeotConfig",
    "SeotError",
    "SeotRun",
    "ShapeError",
    "SinkhornConfig",
    "SoftmaxModel",
    "SpectralEmbedding",
    "StageError",
    "SynthSpec",
    "TransportPlan",
    "UnsupportedByOracle",
    "UnsupportedCost",
    "assign_atom_labels",
    "attach_target",
    "bipartite_graph",
    "components",
    "cost_matrix",
    "embed",
    "entropy",
    "evaluate",
    "exact_ot_oracle",
    "fit_barycenter",
    "generate",
    "knn_predict",
    "laplacian",
    "run_seot",
    "run_two_domain",
    "select_k",
    "sinkhorn",
    "smallest_eigenpairs",
    "softmax_predict",
    "softmax_train",
    "source_only_baseline",
    "standardize",
    "star_graph",
    "transport_cost",
    "uniform_measure",
    "write_edge_list",
]
