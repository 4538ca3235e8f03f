"""Learning planar and outer-planar Ising models with exact Kac-Ward inference."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BadDims,
    BadValue,
    EmbeddingMismatch,
    InfiniteDivergence,
    InvalidTargets,
    MissingEdge,
    NonPlanar,
    NonZeroField,
    NotRealizable,
    NumericalFailure,
    PlanarIsingError,
    TooLarge,
)
from .graph import (  # noqa: E402
    Graph,
    PlanarEmbedding,
    candidate_edges,
    draw,
    greedy_planar_augmentation,
    is_outer_planar,
    is_planar,
    planar_embedding,
    straight_line_drawing,
    turning_angle,
)
from .ising import (  # noqa: E402
    IsingModel,
    MomentSet,
    PairwiseModel,
    empirical_moments,
    extend_moments,
    extend_zero_field,
    moments_to_marginals,
    pair_divergence,
    pairwise_to_ising,
    restrict_extended,
)
from .kacward import brute_force_inference, build_kacward, edge_moments, hessian, infer, log_partition  # noqa: E402
from .fit import FitConfig, FitResult, average_log_likelihood, fit_parameters, objective  # noqa: E402
from .learn import (  # noqa: E402
    LearnConfig,
    LearnResult,
    LearnTrace,
    StopRule,
    greedy_planar_select,
    learn,
    learn_mixed,
    learn_outer_planar,
    score_candidates,
)
from .sampling import SampleConfig, gen_model, gibbs_sample  # noqa: E402
