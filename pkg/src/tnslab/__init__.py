"""Exact-arithmetic lab for tensor network states on 2 x N grids."""

from .exact import DEFAULT_PRIME, SparseMatrix, rank
from .netgraph import TNGraph, WeightProfile, build_open_grid, build_torus_grid, min_cut, min_cut_weighted
from .tensor import Axis, SparseTensor, contract_pair, flatten, network_contract

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_PRIME",
    "Axis",
    "SparseMatrix",
    "SparseTensor",
    "TNGraph",
    "WeightProfile",
    "build_open_grid",
    "build_torus_grid",
    "contract_pair",
    "flatten",
    "min_cut",
    "min_cut_weighted",
    "network_contract",
    "rank",
]
