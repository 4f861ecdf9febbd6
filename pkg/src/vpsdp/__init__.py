"""Vectorized positive-semidefinite penalty method for binary quadratic programs."""
from .core import (PenaltyState, QuadraticInstance, SolverConfig, binary_distance,
                   build_hp, eval_f, eval_h, eval_h_cached, grad_h,
                   project_box)
from .driver import SolveReport, solve
from .instances import (WeightedGraph, gen_random, load, maxcut_to_ubqp, parse_graph,
                        parse_orlib, parse_sparse, serialize_sparse)
from .oracle import brute_force, gap_pct

__version__ = "0.1.0"
