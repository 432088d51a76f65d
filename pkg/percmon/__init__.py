from percmon.builtin import builtin_graphs, load_graph, apollo_obstacle, apollo_temporal_graph, fig2_example, egomotion_example
from percmon.config import RunConfig, ScenarioConfig
from percmon.dataset import Dataset, DatasetSample, generate_dataset
from percmon.diagnosability import (
    DiagnosabilityReport, brute_force_kappa, kappa_report, sufficient_kappa, pac_bound, pac_confidence, pac_curve,
    empirical_hamming, hamming,
)
from percmon.errors import *
from percmon.evaluation import MetricsReport, baseline_all_active, baseline_reliability, detect, metrics
from percmon.export import GnnExportGraph, gnn_export
from percmon.factorgraph import (
    Factor, FactorGraph, FactorGraphTemplate, brute_force_posterior, max_product, sum_product, to_factor_graph,
)
from percmon.graph import DiagnosticGraph, TemporalDiagnosticGraph, build_graph, stack_temporal
from percmon.identifiers import make_identifier
from percmon.learning import LearnedParams, fit_params
from percmon.solver import SolveResult, enumerate_feasible, solve_min_cardinality, solve_weaker_or
from percmon.types import ACTIVE, FAIL, INACTIVE, PASS

# vim: set et sw=4 ts=4:
