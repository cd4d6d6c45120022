"""Teacher-student lab for one-convolution-layer graph networks.

Synthesizes node-level (one graph, label per node) and graph-level (many
graphs, scalar labels) datasets from a ground-truth network, trains a student
by preconditioned approximate gradient descent with per-step renormalization
of the transition matrix, and evaluates the convergence theory's constants
and confinement checks alongside the run.
"""

from .activation import (
    RELU, SIGMOID, SOFTPLUS, SWISH, TANH, ActivationKind, apply, leaky_relu,
    parse_kind,
)
from .errors import (
    ConfigError, DegenerateUpdate, Diverged, GnnLabError, IllConditioned,
    InvalidAggregation, InvalidNoise, InvalidSize, NonFiniteInput, ShapeError,
)
from .graph import (
    ConvOperator, Graph, avg_inv_degree, conv_operator, er_graph,
    from_adjacency, load_edge_list, save_edge_list,
)
from .model import (
    Aggregation, Params, ggnn_forward, make_aggregation, ngnn_forward,
)
from .teacher import (
    GgnnDataset, NgnnDataset, load_dataset, sample_teacher, save_dataset,
    synth_ggnn, synth_ngnn,
)
from .theory import (
    ErrorTerms, SampleCondition, TheoryConstants, check_confinement, constants,
    error_terms, gamma1_alpha_root, sample_condition,
)
from .trainer import (
    TrainConfig, TrainResult, TrajectoryRecord, draw_init, grad_v, grad_w,
    init_params, save_trajectory, step, train, trajectory_to_csv,
)
from .xi import XiOperator, estimate_xi_ggnn, estimate_xi_ngnn, save_xi_csv, solve_inverse

__version__ = "0.1.0"
