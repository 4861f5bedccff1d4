"""Structured sparse subspace clustering (S3C) and its constrained variant (CS3C)."""

from .admm import AdmmParams, AdmmResult, AdmmState, compute_scale, solve
from .core import (affinity_from_coefficients, as_data_matrix, encode_side_info, shrink,
                   structure_from_hard, structure_from_soft, structured_norm)
from .errors import (DataError, DegenerateAffinityError, DegenerateScaleError,
                     DivergenceError, EigendecompositionError,
                     InconsistentSideInfoError, NumericalError, S3CError)
from .metrics import (clustering_error, clustering_error_bruteforce, connectivity,
                      evaluate, subspace_preserving_rate)
from .pipeline import ClusterResult, S3cConfig, run_s3c, run_ssc, schedule_weights
from .spectral import cluster, kmeans, normalized_laplacian, spectral_embedding
from .synth import SynthSpec, generate, sample_side_info

__version__ = "0.1.0"
