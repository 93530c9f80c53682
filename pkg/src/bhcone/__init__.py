"""Exact desk-scale verification of transport light cones in lattice boson
models.

The package builds small fixed-number sectors of generalized Bose-Hubbard
Hamiltonians, evolves them exactly, and measures the observables that
certify a maximal transport speed: smooth radial front weights, the
near-projectors built from them, their Heisenberg derivatives, and the
scaling of all the error terms with the front width.  The ``bhcone``
command line runs the bundled verification experiments from an INI
configuration.
"""

from .config import ConfigError, RunConfig, load_config
from .cutoffs import (
    CutoffFunction,
    ScaledCutoff,
    antiderivative_normalized,
    make_admissible,
    make_plateau_step,
    make_smooth_step,
    plateau_majorant,
    rescale_class,
    widened_step,
)
from .dynamics import (
    ModelSpec,
    assemble_hamiltonian,
    commutator_with_diagonal,
    evolve,
    expectation,
    heisenberg_derivative,
)
from .experiments import (
    Check,
    ExperimentReport,
    FitResult,
    expansion_remainder,
    exp_commutator_expansion,
    exp_heisenberg_bound,
    exp_hopping_moments,
    exp_lightcone,
    exp_monotonicity,
    fit_power_law,
    run_experiments,
    write_reports,
)
from .fock import (
    DiagonalObservable,
    FockSector,
    SparseHermitian,
    StateVector,
    apply_function,
    enumerate_sector,
    local_number,
    mott_state,
    second_quantize,
    second_quantize_diagonal,
    spectral_projector,
    transfer_operator,
)
from .front import (
    ConeConditionError,
    FrontFamily,
    SandwichReport,
    build_front_observable,
    check_sandwich,
)
from .hopping import (
    HoppingMatrix,
    LightConeParams,
    choose_epsilon,
    hopping_moment,
    iterated_commutator_matrix,
    lightcone_params,
    max_speed,
    nearest_neighbor,
    one_particle_norm,
    power_law,
    schur_bound,
)
from .lattice import (
    EmbeddedLattice,
    Region,
    chain,
    region_distance,
    smallest_enclosing_ball,
)

__version__ = "0.1.0"
