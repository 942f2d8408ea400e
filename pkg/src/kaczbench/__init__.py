"""Kaczmarz-family solvers for dense overdetermined systems.

Sequential cyclic/randomized Kaczmarz, the averaging variant and its block
version, threaded shared-memory implementations, message-passing
implementations over a simulated transport, and a seeded benchmark
harness (system generation, iteration measurement, timed replay, traces).
"""

from .cgls import cgls_solve
from .distributed import (
    DistPartition,
    LatencyModel,
    SimTransport,
    make_partition,
    run_distributed_solve,
    run_ranks,
    solve_rka_dist,
    solve_rkab_dist,
)
from .errors import (
    ConvergenceError,
    DegenerateRowError,
    DimensionMismatchError,
    EmptyRangeError,
    SpectralConvergenceError,
    SystemFormatError,
    TransportProtocolError,
    UnsupportedVersionError,
)
from .harness import (
    MeasureResult,
    Protocol,
    ReplayResult,
    bench,
    measure_iterations,
    plateau_error,
    run_solver,
    timed_replay,
    trace_run,
)
from .linalg import RowNormCache, axpy_row, dot, row_norm_cache
from .parallel import (
    Instrumentation,
    solve_rk_block_sequential,
    solve_rka_parallel,
    solve_rkab_parallel,
)
from .reports import RunReport, TraceRecord
from .sampling import Prng, RowSampler, make_sampler, partition_bounds, sample, worker_rng
from .solvers import (
    SolverConfig,
    SpectralStats,
    kaczmarz_step,
    optimal_alpha,
    partial_alphas,
    resolve_alphas,
    rka_combined_step,
    rkab_worker_block,
    solve_ck,
    solve_rk,
    solve_rka_seq,
    solve_rkab_seq,
    spectral_stats,
)
from .sysgen import (
    GeneratorConfig,
    LinearSystem,
    crop,
    generate_mother,
    load_system,
    make_inconsistent,
    save_system,
)

__version__ = "0.1.0"
