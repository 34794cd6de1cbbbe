"""Unambiguous discrimination of multiparticle quantum states under LOCC.

Decides whether each target state of a finite ensemble can be identified
without error (allowing an inconclusive outcome) by an arbitrary
measurement and by local measurements plus classical communication, and
builds the measurements, reciprocal states and entanglement witnesses that
certify the answer.
"""

__version__ = "0.1.0"

from .discrimination import (
    FeasibilityReport,
    GlobalPOVM,
    LocalPOVMSet,
    SeparablePOVMElement,
    build_global_povm,
    build_local_povms,
    check_locc,
    check_unconstrained,
    complement_support_of_rest,
    reciprocal_states,
    verify_povm,
)
from .search import (
    SearchConfig,
    brute_force_overlap,
    certify_two_qubit,
    find_product_in_subspace,
    max_product_overlap,
)
from .simulate import run_protocol
from .states import (
    DensityMatrix,
    ProductVector,
    SpaceShape,
    StateEnsemble,
    Subspace,
    assemble,
    complement,
    factorize_if_product,
    support,
)
from .witness import build_witness, full_support_check, s_tilde_projector, validate_witness
