"""Residue currents on projective curves and their Radon / Fantappie transforms."""
from .errors import (
    BranchPointError,
    EmptyCycleError,
    GeometryError,
    InputError,
    NearIncidenceError,
    NotHomogeneous,
    NotStabilizedError,
    ResRadonError,
    SingularPointError,
    UnsupportedBasisError,
    UnsupportedGeometryError,
)
from .geometry import (
    CurveParam,
    Cycle,
    DomainSpec,
    Location,
    boundary_cycle,
    contains,
    dual_contains,
    eta_map,
    exhaust,
)
from .polyalg import DiscStencil, HomPoly, Poly, cauchy_derivative, eval_poly, grad_poly, homogeneity_of
from .residues import (
    AdmissibleSchedule,
    PolydiscRegion,
    ResidualFormSpec,
    VarietySpec,
    fibered_residue,
    grothendieck_residue,
    leray_residue_density,
    residue_pairing,
    transformation_law_check,
    tube_integral,
)
from .transforms import (
    BoundaryResidue,
    Covector1Form,
    Martineau,
    PointMass,
    RadonSetup,
    euler_contraction,
    fantappie_potential,
    fantappie_transform,
    martineau_invert,
    radon_potential_batch,
    radon_transform,
    verify_system,
)

__version__ = "0.1.0"
