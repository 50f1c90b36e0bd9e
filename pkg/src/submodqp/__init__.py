"""submodqp: exact sparse and robust MRF inference via submodular minimization.

The package solves convex quadratic minimization problems with indicator
variables (l*z <= x <= u*z, z binary) whose Hessian is a Stieltjes matrix.
Such problems cover Gaussian-MRF denoising with an L0 sparsity prior and the
outlier-trimming robust variant; their value functions are submodular, so the
combinatorial part reduces to binary submodular minimization, accelerated by
an O(n^3) parametric evaluation of whole value chains.

Typical use:

    >>> import submodqp as sq
    >>> inst, truth = sq.generate("chain", 20, outlier_fraction=0.1, mode="robust", seed=1)
    >>> result = sq.solve_full(sq.compile_instance(inst), engine="mnp")
    >>> result.discarded
    [...]
"""

from .exceptions import InputError, NumericalError
from .model import (
    Graph,
    IndicatorProblem,
    ProblemInstance,
    QuadraticForm,
    chain_graph,
    compile_instance,
    compile_robust,
    compile_sparse,
    generate,
    grid_graph_2d,
    grid_graph_3d,
    load_instance,
    save_instance,
)
from .lattice import (
    BinaryCost,
    SignSplitMap,
    bounds_for_binary,
    check_lattice_membership,
    check_submodular_zeroth,
    split,
)
from .boxqp import BoxQpSolution, kkt_residual
from .boxqp import solve as solve_boxqp
from .boxqp import value_function
from .pathtrace import PathState, ValueChain, chain_general, chain_nonnegative, lovasz, trace_path
from .sfm import (
    FunctionOracle,
    IndicatorOracle,
    SfmResult,
    SubmodularOracle,
    greedy_subgradient,
    minimize_exhaustive,
    minimize_mnp,
    solve_full,
)
from .oracle import InstanceSampler, brute_force, replay_witness, run_property_suite

__version__ = "0.1.0"

__all__ = [
    "BinaryCost",
    "BoxQpSolution",
    "FunctionOracle",
    "Graph",
    "IndicatorOracle",
    "IndicatorProblem",
    "InputError",
    "InstanceSampler",
    "NumericalError",
    "PathState",
    "ProblemInstance",
    "QuadraticForm",
    "SfmResult",
    "SignSplitMap",
    "SubmodularOracle",
    "ValueChain",
    "bounds_for_binary",
    "brute_force",
    "chain_general",
    "chain_graph",
    "chain_nonnegative",
    "check_lattice_membership",
    "check_submodular_zeroth",
    "compile_instance",
    "compile_robust",
    "compile_sparse",
    "generate",
    "greedy_subgradient",
    "grid_graph_2d",
    "grid_graph_3d",
    "kkt_residual",
    "load_instance",
    "lovasz",
    "minimize_exhaustive",
    "minimize_mnp",
    "replay_witness",
    "run_property_suite",
    "save_instance",
    "solve_boxqp",
    "solve_full",
    "split",
    "trace_path",
    "value_function",
]
