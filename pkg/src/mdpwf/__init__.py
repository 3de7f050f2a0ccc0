"""Solver library for MDPs with per-principal discount factors: exact
strategy evaluation, welfare-optimal counting-strategy synthesis, brute
force oracles, instance generators, and scaling benchmarks."""

from .bench import run_rq1, run_rq2, run_rq3, steps_until_action, sweep_discounts
from .errors import (
    CapExceededError,
    CertificationError,
    ConvergenceError,
    DisabledActionError,
    FormatError,
    HorizonExceededError,
    LoadError,
    MdpwfError,
)
from .evaluate import eval_counting, eval_positional, eval_stationary_mixed
from .generators import (
    BUILTIN_NAMES,
    CnfFormula,
    RandomMdpConfig,
    badly_spaced,
    builtin,
    decode_assignment,
    parse_dimacs,
    random_mdp,
    sat_reduction,
    small_formula_representatives,
    truth_table_satisfiable,
    zero_sum_variant,
)
from .model import (
    AsymMdp,
    Mdp,
    Principal,
    dumps,
    load,
    loads,
    merge_equal_discounts,
    save,
    spacing_report,
    validate,
)
from .numeric import EXACT, FLOAT, NumericMode, as_fraction
from .oracle import (
    canonical_trim,
    enumerate_counting,
    enumerate_positional,
    threshold_decide_positional,
)
from .solve import optimal_action_set, solve_discounted
from .strategies import (
    CountingStrategy,
    MixedStationaryStrategy,
    positional_from_names,
    positional_names,
)
from .welfare import advantages, find_kappa, kappa_estimate, long_term, optimize

__version__ = "0.1.0"
