"""nbrmask: neighborhood-resampling disclosure limitation for mixed microdata.

Masks record-level data by resampling each selected record's variables
independently from its eps-neighborhood (or k nearest neighbors) under a
weighted Euclidean metric on scaled/one-hot-encoded data, and ships the
operational evaluation loop: regression/PCA drift reports, rare-record fate
tracking, presence-disclosure checks, and a Monte Carlo harness for the
shrinking-neighborhood limit.
"""

from .dataset import (CATEGORICAL, CONTINUOUS, ColumnSpec, Dataset,
                      EncodedMatrix, EncodingError, ParseError, SchemaError,
                      encode, load_csv, schema_from_json, schema_to_json,
                      to_csv_text, write_csv)
from .metric import WeightError, WeightSpec, distance, expand_weights
from .neighbors import (EpsBall, Knn, NeighborhoodMode, NeighborIndex,
                        build_index, eps_ball, knn)
from .masker import (MaskedDataset, MaskingParams, MaskSummary, ParamError,
                     RecordFate, load_audit, mask, params_from_json,
                     validate_params)
from .utility import (ModelError, OLSFit, PCAComparison, RankDeficientError,
                      RegressionSpec, UtilityReport, compare_pca,
                      compare_regression, fit_ols)
from .risk import (Condition, PredicateError, PresenceReport, RecordPredicate,
                   RiskReport, presence_check, query, track)
from .convergence import (BivariateNormal, ConvergenceRow, DiscretePair,
                          GeneratorError, MixedNormalBinary, SyntheticSpec,
                          generate, joint_cdf_distance,
                          pairwise_distance_quantiles, quantile_grid,
                          run_convergence)

__version__ = "0.1.0"
