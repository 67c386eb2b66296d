"""Simulation lab for dX = phi(X-) dZ driven by a one-sided stable subordinator.

Three constructions of the solution live side by side and validate each
other statistically: the exact event-driven solve on truncated drivers, the
time-change representation through an additive clock, and the degenerate
x**beta counterexample where uniqueness genuinely fails.
"""

from .driver import (
    GridPath,
    JumpPath,
    StableParams,
    laplace_exponent,
    levy_tail_mass,
    path_value,
    sample_exact_increment,
    sample_grid_path,
    sample_truncated_path,
    thin_path,
)
from .phi import (
    ConstantPhi,
    MonotonePhi,
    PiecewiseLinearPhi,
    PowerPhi,
    ShiftedArctanPhi,
    SingularClockError,
    SoftRampPhi,
    parse_phi,
)
from .stats import KSReport, SampleSet, ecdf_eval, ks_two_sample, mc_band
from .timechange import (
    BEYOND_HORIZON,
    Clock,
    build_clock,
    build_forward_clock,
    clock_eval,
    clock_roundtrip_residual,
    invert_clock,
    solve_time_change,
)
from .truncation import (
    Ladder,
    SolutionPath,
    build_ladder,
    coupled_pair_distance,
    ladder_violations,
    monotone_limit_estimate,
    solve_truncated,
    sup_gap,
)
from .counterexample import (
    CounterexampleRun,
    SamplerIntegrityError,
    divergence_check,
    driver_law_check,
    nonuniqueness_demo,
    run_counterexample,
    scaling_law_check,
)
from .seeding import derive_seed, replicate_rng, splitmix64
from .harness import ExperimentConfig, load_config, parse_config_text, run_experiment

__version__ = "0.1.0"
