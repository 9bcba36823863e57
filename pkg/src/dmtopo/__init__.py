"""Lindbladian dynamics of fermionic Gaussian states and density-matrix topology."""

__version__ = "0.1.0"

from .algebra import (  # noqa: E402
    EigenSystem2,
    PauliForm,
    eigensystem,
    hermitian_log,
    pauli_compose,
    pauli_decompose,
    propagator,
)
from .dynamics import (  # noqa: E402
    CorrelationField,
    InitialStateSpec,
    Trajectory,
    evolve_bloch_ode,
    evolve_propagator,
    evolve_realspace_oracle,
    evolve_spectral,
    initial_state,
    steady_direction,
)
from .model import (  # noqa: E402
    BlochBlock,
    ChiralFrame,
    GlobalPT,
    LatticeModel,
    PTLabel,
    bloch_blocks,
    build_ssh_model,
    chiral_axis,
    kgrid,
    pt_classify,
    pt_decompose,
    real_space_damping,
)
from .phasemap import classify_point, find_uc, sweep  # noqa: E402
from .topology import (  # noqa: E402
    check_chiral,
    correlation_from_modular,
    modular_from_correlation,
    nk_nc_antiparallel_check,
    transition_scan,
    winding_number,
)
