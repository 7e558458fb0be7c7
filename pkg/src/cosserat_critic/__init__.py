"""Critical points of the Cosserat shear-stretch energy over rotations.

Closed-form catalogs for n = 2, 3, the embedded-gradient criticality test and
restricted Hessian on SO(n), the unit-quaternion lift, and a Riemannian descent
solver used to cross-check the catalogs.
"""

from .catalog import (
    Catalog,
    CriticalPoint,
    Family,
    catalog,
    catalog_grioli,
    catalog_n2,
    catalog_n3,
    feasibility,
    global_extrema,
    named_examples,
    rotation_angle,
    transfer_labels,
)
from .energy import (
    UNIT,
    MaterialParams,
    NotARotationError,
    ambient_energy,
    classification_transfer,
    energy,
    energy_gradient,
    reduce,
)
from .matlin import polar_decompose, symmetric_eigen, symmetric_sqrt
from .quaternion import lifted_energy, quat_to_rotation, sphere_restricted_hessian
from .solver import SolverConfig, SolveOutcome, descend, multistart, polar_retract
from .son import classify, embedded_gradient, is_critical, restricted_hessian

__version__ = "0.1.0"
