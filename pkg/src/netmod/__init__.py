"""Effect-modifier testing for treatments on social networks.

Build a network from edge/covariate files (or simulate one), declare a
causal DAG and a set of hypothesized modifiers (unit covariates, neighbor
summaries, network patterns), then run the heterogeneity test to learn which
hypotheses the data supports.
"""

from .dag import CausalDag, backdoor_set, d_separated, load_dag, parse_dag_text, screen_modifiers
from .errors import InputError, NetmodError, PositivityError
from .estimation import (CdePosterior, EstimatorConfig, UnitTable,
                         build_unit_table, estimate_ade, estimate_cde,
                         log_risk_ratio)
from .graph import (CovariateTable, EgoNetwork, SocialNetwork, ego_subgraph,
                    load_network, neighbors, validate, write_covariates,
                    write_edge_list)
from .heterogeneity import (Hypothesis, NeighborSummary, PatternHypothesis,
                            ProjectionConfig, ProjectionModel, TestReport,
                            UnitCovariate, delta_sq, gen_hyp_vector, iota_sq,
                            load_hypotheses, project, run_test)
from .patterns import (NetworkPattern, builtin_pattern, check_pattern,
                       check_pattern_all, enumerate_isomorphisms,
                       pattern_from_spec)
from .simulate import (SimConfig, SimDataset, ba_graph, simulate_trial,
                       sweep_noise, sweep_units, trial_dag, trial_hypotheses,
                       write_dataset)
from .summaries import SummarySpec, summarize_all, summarize_unit

__version__ = "0.1.0"

__all__ = [
    "CausalDag", "CdePosterior", "CovariateTable", "EgoNetwork",
    "EstimatorConfig", "Hypothesis", "InputError", "NeighborSummary",
    "NetmodError", "NetworkPattern", "PatternHypothesis", "PositivityError",
    "ProjectionConfig", "ProjectionModel", "SimConfig", "SimDataset",
    "SocialNetwork", "SummarySpec", "TestReport", "UnitCovariate", "UnitTable",
    "ba_graph", "backdoor_set", "build_unit_table", "builtin_pattern",
    "check_pattern", "check_pattern_all", "d_separated", "delta_sq",
    "ego_subgraph", "enumerate_isomorphisms", "estimate_ade", "estimate_cde",
    "gen_hyp_vector", "iota_sq", "load_dag", "load_hypotheses", "load_network",
    "log_risk_ratio", "neighbors", "parse_dag_text", "pattern_from_spec",
    "project", "run_test", "screen_modifiers", "simulate_trial", "summarize_all",
    "summarize_unit", "sweep_noise", "sweep_units", "trial_dag",
    "trial_hypotheses", "validate", "write_covariates", "write_dataset",
    "write_edge_list",
]
