"""Numerics laboratory for the iterated twisted Hilbert scale Z_n.

Z_1 is l_2, Z_2 the Kalton-Peck space, and higher orders are built by
iterating the twisted-sum construction along the differential maps
KP_{1,m}.  The package provides the concrete vectors and quasinorms, the
signed duality form, Orlicz/Luxemburg norms with the telescoping
coefficient cascade, a triangular operator algebra with the pairing
adjoint, commutator diagnostics for scale operators, and a deterministic
experiment runner (`zn-lab`) that measures every equivalence constant and
gates it against explicit budgets.
"""

from .commutator import ScaleOperator, commutator_defect, domain_invariance_check, lift
from .errors import (
    BlockOverlap,
    ConfigInvalid,
    EmptyWitnessSet,
    EntryBudgetExceeded,
    OperatorParseError,
    OrderMismatch,
    RowNotFound,
    ToleranceNotReached,
    ZeroVectorInFamily,
    ZnLabError,
)
from .kp import kp_component, kp_map, lemma4_sum, quasilinearity_defect
from .operators import (
    BlockMap,
    Compose,
    FiniteOperator,
    Identity,
    Multiplier,
    OperatorAtom,
    OperatorMatrix,
    Permutation,
    Scale,
    Sum,
    Zero,
    adjoint_plus,
    apply,
    atom_apply,
    block_operator,
    corner_extract,
    diagonal_lift,
    identity_matrix,
    iota_matrix,
    parse_atom,
    parse_operator,
    pairing_preservation_check,
    pi_matrix,
    shift_power,
    singularity_profile,
    zero_matrix,
)
from .orlicz import (
    OrliczFunction,
    TelescopeCoefficients,
    domain_norm,
    growth_profile,
    luxemburg_norm,
    modular,
    orlicz_value,
    telescope_coefficients,
)
from .rochberg import (
    PairingGram,
    RochbergVector,
    duality_pairing,
    embed,
    graph_vector,
    gram_apply,
    gram_solve,
    omega_lower_bound,
    pairing_gram,
    project,
    quasinorm,
)
from .seqcore import (
    DEFAULT_ENTRY_BUDGET,
    CoordVector,
    add,
    hadamard,
    l2_norm,
    pair,
    scale,
    sub,
)

__version__ = "0.1.0"
