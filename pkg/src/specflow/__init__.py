"""Exact-arithmetic toolkit for special flows over irrational rotations.

The package models circle rotations through periodic continued fractions
(:mod:`specflow.cf_arith`), field extensions of their quadratic irrationals
with certified sign evaluation (:mod:`specflow.symreal`), piecewise-constant
roof functions and their structural properties (:mod:`specflow.roof`), the
suspension flow itself (:mod:`specflow.flowlab`), constant-run witnesses for
close orbit pairs (:mod:`specflow.ratner`), and a Hamiltonian pipeline that
produces such roofs as first-return profiles of torus flows
(:mod:`specflow.hamlab`).  The :mod:`specflow.cli` driver runs batch
experiments with byte-reproducible reports.
"""

from .cf_arith import CFContext, LinForm, precision_cap
from .errors import (
    ConfigError,
    DigitSupplyError,
    InsufficientStructureError,
    PrecisionError,
    PreconditionError,
    SpecflowError,
    VerificationError,
)
from .fixtures import context, ham_preset, roof_preset
from .flowlab import (
    SpecialFlowPoint,
    correlation,
    dk_audit,
    flow_map,
    flow_map_batch,
    flow_point,
    full_space,
    phase_measure,
    qn_distribution,
    rect,
    sample_phase_space,
)
from .hamlab import (
    HamiltonianSystem,
    Section,
    area_identity_check,
    critical_points,
    integrate,
    return_map,
    section_profile,
    system_from_config,
    trap_regions,
)
from .ratner import constants, find_witness, verify_R_property, verify_witness
from .roof import (
    RoofPC,
    check_p1,
    check_p2,
    coboundary_reduce,
    eigenvalue_criterion,
    equivalence_structure,
    remnien_identity,
    roof_from_config,
    weak_mixing_verdict,
)
from .symreal import (
    Basis,
    Membership,
    SymReal,
    in_z_plus_z_alpha,
    membership,
    q_alpha_span_membership,
    q_span_membership,
    relation_lattice,
)
from .trig import TrigPoly

__version__ = "0.1.0"

__all__ = [
    "Basis",
    "CFContext",
    "ConfigError",
    "DigitSupplyError",
    "HamiltonianSystem",
    "InsufficientStructureError",
    "LinForm",
    "Membership",
    "PrecisionError",
    "PreconditionError",
    "RoofPC",
    "Section",
    "SpecflowError",
    "SpecialFlowPoint",
    "SymReal",
    "TrigPoly",
    "VerificationError",
    "area_identity_check",
    "check_p1",
    "check_p2",
    "coboundary_reduce",
    "constants",
    "context",
    "correlation",
    "critical_points",
    "dk_audit",
    "eigenvalue_criterion",
    "equivalence_structure",
    "find_witness",
    "flow_map",
    "flow_map_batch",
    "flow_point",
    "full_space",
    "ham_preset",
    "in_z_plus_z_alpha",
    "integrate",
    "membership",
    "phase_measure",
    "precision_cap",
    "q_alpha_span_membership",
    "q_span_membership",
    "qn_distribution",
    "relation_lattice",
    "rect",
    "remnien_identity",
    "return_map",
    "roof_from_config",
    "roof_preset",
    "sample_phase_space",
    "section_profile",
    "system_from_config",
    "trap_regions",
    "verify_R_property",
    "verify_witness",
    "weak_mixing_verdict",
]
