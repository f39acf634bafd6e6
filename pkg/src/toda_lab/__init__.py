"""toda_lab: a numerical laboratory for the Toda and Kac-van Moerbeke
hierarchies on the doubly infinite lattice.

Finite windows with exact constant backgrounds stand in for decaying
sequences; the modules build the hierarchy fields, integrate the flows,
compute scattering data, evolve it linearly, synthesize pure solutions,
and probe the decay dichotomy behind the uniqueness theory.
"""

from .core import (
    KvMState,
    LatticeState,
    access,
    constant_like,
    deviation,
    effective_support,
    kvm_sample_at,
    load_state,
    normalize,
    pad,
    reflect,
    sample_at,
    save_state,
    states_close,
    tail_margin,
    trim,
)
from .hierarchy import (
    KVM_TL_SCALE,
    HierarchyCoeffs,
    HierarchyFields,
    LaxOperator,
    hierarchy_fields,
    kvm_embed,
    kvm_field,
    lax_operator,
    tl_field,
    trace_residuals,
)
from .flow import FlowConfig, Trajectory, integrate, integrate_kvm
from .spectral import (
    BoundStateData,
    JacobiOperator,
    ScatteringData,
    bound_states,
    build_jacobi,
    default_k_grid,
    jost_and_reflection,
    k_of_lambda,
    lambda_of_k,
    norming_constants,
    reflection_grid,
    scatter_unit_circle,
    transmission,
)
from .evolution import (
    DispersionLaw,
    GrowthWitnessReport,
    IndicatorEstimate,
    alpha,
    evolve_scattering,
    factor_g,
    fit_dispersion,
    growth_exponent_witness,
    indicator_estimate,
    toda_lattice_law,
)
from .soliton import SolitonSpec, TailRates, build_soliton, tail_rate
from .analysis import (
    DecayBound,
    DecayReport,
    TheoremScenario,
    classify_decay,
    first_moment,
    max_meaningful_m,
    superfast_check,
    tail_sum,
    theorem_witness,
)
from . import errors

__version__ = "0.1.0"
