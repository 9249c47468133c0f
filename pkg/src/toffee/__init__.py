"""Temporal network embedding by t-product tensor factorization."""

from .embed import EmbeddingMatrix, edge_feature, embeddings
from .errors import ToffeeError
from .factorize import Factorization, ToffeeConfig, rescal_fit, toffee_fit, tsvd
from .ingest import EdgeListFormat, SnapshotSpec, TemporalGraph, bin_timestamps, parse_edge_list
from .linkpred import run_link_prediction
from .tensor import fft_mode3, ifft_mode3, tproduct, ttranspose

__version__ = "0.1.0"

__all__ = [
    "EdgeListFormat",
    "EmbeddingMatrix",
    "Factorization",
    "SnapshotSpec",
    "TemporalGraph",
    "ToffeeConfig",
    "ToffeeError",
    "bin_timestamps",
    "edge_feature",
    "embeddings",
    "fft_mode3",
    "ifft_mode3",
    "parse_edge_list",
    "rescal_fit",
    "run_link_prediction",
    "tproduct",
    "toffee_fit",
    "tsvd",
    "ttranspose",
]
