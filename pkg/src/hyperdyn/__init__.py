"""Covering-based hyperspace calculus and set-valued dynamics on grids."""

from .coverings import (
    AdmissibleFamily,
    ChainFamily,
    ConvergenceDiagnostic,
    Covering,
    ExplicitFamily,
    UpSet,
    ValidationReport,
    build_eps_chain,
    converges_to_O,
    double_refines,
    refines,
    rho,
    star,
    upset_meet,
    upset_shift,
    upset_union,
    validate_admissible,
)
from .dynamics import (
    FlowAction,
    LabelAlgebra,
    MatrixAction,
    SemigroupSample,
    TableAction,
    attraction_domain,
    check_hypotheses,
    is_eventually_stable,
    is_minimal,
    is_stable,
    limit_compact_diagnostic,
    limit_L,
    omega_set,
    orbit_K,
    prolongation_D,
    prolongational_J,
)
from .continuity import (
    SetValuedMap,
    continuity_report,
    hausdorff_continuous_at,
    lsc_at,
    map_limit,
    map_orbit,
    map_prolongational,
    usc_at,
    verify_theorem,
)
from .errors import (
    DomainError,
    FamilyValidationError,
    HyperdynError,
    ResourceError,
    UsageError,
)
from .hyperspace import (
    KuratowskiLimits,
    NoncompactnessProfile,
    SetSequence,
    diameter,
    hausdorff_converges,
    in_ball_BH,
    kuratowski_limits,
    noncompactness,
    rho_H,
    rho_one_sided,
    rho_point_to_set,
    vietoris_member,
    vietoris_refinement,
)
from .scenarios import (
    Scenario,
    build_scenario,
    random_instance,
    scenario_contraction,
    scenario_control_disk,
    scenario_control_spiral,
    scenario_coset,
    scenario_multitime,
)
from .sets import PointSet
from .space import GridSpec, Space, build_space, space_from_table

__version__ = "0.1.0"
