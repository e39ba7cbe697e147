"""Geometry and dynamics of split Kleinian groups acting on CP^N.

The groups are semidirect products R^N x| R acting by complex affine
maps ``z -> A(t) z + b`` with ``A(t) = exp(tM)`` and ``M`` hyperbolic,
together with their lattices Z^N x|_B Z for hyperbolic ``B`` in SL(N, Z).
"""

from .errors import *  # noqa: F401,F403
from .linalg import (
    IntMatrix,
    RealLogarithm,
    SpectrumReport,
    eigen_split,
    expm,
    logm,
    operator_norm,
    solve_lyapunov,
)
from .group import (
    GroupContext,
    GroupElement,
    LatticeElement,
    LieAlgebraElement,
    LiftElement,
    ProjectivePoint,
    act_affine,
    act_projective,
    adjoint_matrix,
    chart,
    compose,
    identity,
    inverse,
    nilradical_test,
    rho,
    unchart,
)
from .regions import (
    HyperbolicSplitting,
    LyapunovMetric,
    RegionLabel,
    build_splitting,
    classify,
    classify_detailed,
    divergence_witness,
    induced_sphere_map,
    psi_minus,
    psi_minus_inv,
    psi_plus,
    psi_plus_inv,
    time_to_sphere,
    time_to_unstable_sphere,
)
from .dynamics import (
    DensityReport,
    FixedPointRecord,
    LatticeSpec,
    affine_orbit_approx,
    check_hyperbolic_toral,
    check_lattice_condition,
    density_report,
    fixed_point,
    fixed_point_sweep,
    generic_point,
    norm_bound_scan,
    torus_orbit,
)

__version__ = "0.1.0"
