"""Hierarchical correlation reconstruction on the unit cube.

Fits a density on [0,1]^d as a linear combination of tensor-product
orthonormal functions, each coefficient independently averaged over the
records that know its support coordinates, then answers conditional,
imputation, and likelihood queries against the fit.
"""
from .basis1d import Family1D, discrete, gauss_nodes, legendre, trig
from .dataset import (CategoryGrid, ColumnSpec, Dataset, EmpiricalCDF,
                      Identity, Logistic, Rescale, column_specs,
                      fit_empirical_cdf, fit_transform, load_table,
                      parse_schema, transform_from_tokens, write_table)
from .density import (CLUSTER_SPLIT, EXPECTED, TOP_MODE, Cluster, Completion,
                      ConditionalSlice, SliceMoments, clamp, conditional_slice,
                      evaluate, evaluate_points, impute, marginalize)
from .errors import (HcrError, MissingCoordinateError, NonpositiveMassError,
                     PositivityError, TableError)
from .estimator import (NO_EVIDENCE, UNCERTAINTY_UNDEFINED, Model, adapt,
                        fit, lambda_schedule, prune)
from .likelihood import (REDUCE_LARGEST, RESCALE_ALL, RefineConfig, TraceStep,
                         find_negative_witness, gradient, log_likelihood,
                         refine, repair_negative)
from .model_io import load_model, save_model
from .tensor_basis import BasisSpec, build_full, build_sparse, canonical_key, support

__version__ = "0.1.0"

__all__ = [
    "Family1D", "legendre", "trig", "discrete", "gauss_nodes",
    "Dataset", "load_table", "write_table", "fit_empirical_cdf",
    "Identity", "Rescale", "Logistic", "EmpiricalCDF", "CategoryGrid",
    "ColumnSpec", "parse_schema", "column_specs", "fit_transform",
    "transform_from_tokens",
    "BasisSpec", "build_full", "build_sparse", "support", "canonical_key",
    "Model", "fit", "adapt", "prune", "lambda_schedule",
    "NO_EVIDENCE", "UNCERTAINTY_UNDEFINED",
    "evaluate", "evaluate_points", "clamp", "marginalize", "conditional_slice",
    "ConditionalSlice", "SliceMoments", "Cluster", "Completion", "impute",
    "EXPECTED", "TOP_MODE", "CLUSTER_SPLIT",
    "RefineConfig", "TraceStep", "log_likelihood", "gradient", "refine",
    "repair_negative", "find_negative_witness", "RESCALE_ALL", "REDUCE_LARGEST",
    "save_model", "load_model",
    "HcrError", "TableError", "MissingCoordinateError", "NonpositiveMassError",
    "PositivityError",
]
