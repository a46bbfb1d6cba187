"""Numerical laboratory for interacting vortex rings.

Layers, bottom up: complete elliptic integrals (`elliptic`), loop vector
potentials and the singular current (`potential`), the ring Hamiltonian and
reduced invariants (`hamiltonian`), ODE integration of the ring system and
its planar limit (`dynamics`), two-ring phase-plane analysis (`portrait`),
discrete complex fields and vortex diagnostics (`field`), Gross-Pitaevskii
time stepping (`gp`), and a scenario-driven command line (`cli`).
"""

from .elliptic import EllipticPair, elliptic_derivatives, elliptic_pair
from .potential import (
    RingConfig,
    RingPoint,
    SingularityError,
    energy_outside_cores,
    singular_current,
    stream_function,
    vector_potential,
    vector_potential_grad,
)
from .hamiltonian import (
    HamiltonianParams,
    ReducedConfig,
    gamma_constant,
    hamiltonian,
    hamiltonian_grad,
    momentum,
    reduced_invariants,
)
from .dynamics import (
    IntegratorSettings,
    Trajectory,
    integrate_lf,
    integrate_lf_eps,
    lift,
    rescale_to_plane,
    trajectory_distance,
)
from .portrait import ReducedPair, classify, find_period, h_on_level, reduce_pair
from .field import (
    ComplexField,
    Grid,
    Profile,
    build_reference_field,
    jacobian_field,
    localization_metric,
    momentum_eps,
    read_snapshot,
    solve_profile,
    track_vortices,
    weighted_energy,
    write_snapshot,
)
from .gp import GpSettings, continuity_residual, gp_simulate, gp_step

__version__ = "0.1.0"
