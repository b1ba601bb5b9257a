"""Link sign prediction by signed subgraph encoding with linear-optimization likelihoods."""

from .encoder import (EncoderConfig, benchmark_beta, encode_edge, encode_edges, global_lo_scores,
                      importance_scores, likelihood_matrices, neumann_likelihood, order_and_prune,
                      reweight)
from .errors import DataError, NumericError, ParseError, SeloError, UndefinedMetricError
from .experiment import RunConfig, run_ablation, run_experiment, scan
from .graph import (EdgeSplit, SignedDigraph, load_edge_list, neighborhood, read_edge_list,
                    split_edges, undirected_distances)
from .metrics import Metrics, auc, f1_suite
from .subgraph import EnclosingSubgraph, extract

__version__ = "0.1.0"
