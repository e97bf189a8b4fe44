"""Heisenberg-picture simulator for networks of qubits.

Qubits are carried as descriptor triples — three Hermitian matrices
obeying the Pauli algebra — that evolve by unitary conjugation while the
state stays fixed.  The package provides the descriptor/algebra toolkit
(`qnum`, `algebra`), Hamiltonian expressions and their compiled form
(`hamiltonians`), time evolution with a closed-form fast path and an RK4
integrator (`dynamics`, `_kernels`), the gate library (`gates`), loop
consistency solving for networks that feed a qubit back into their own
past (`ctc`), JSON network specs and schedule execution (`network`), and
packaged worked scenarios (`scenarios`).
"""

from ._kernels import BACKEND
from .algebra import (
    AlgebraSpan,
    DimensionReport,
    anticommutator_trace_check,
    classify_pair,
    commutant,
    generated_algebra,
    hilbert_dimension,
    linear_span,
    parameter_count,
    span_intersection,
)
from .ctc import (
    CtcPair,
    CtcProblem,
    FixedPointResult,
    SharpEnumeration,
    consistency_residual,
    enumerate_classical_loops,
    enumerate_sharp_configurations,
    fixed_point_solve,
    nearest_rotated_copy,
    scalar_self_consistency,
    trace_norm,
    triple_distance,
)
from .dynamics import (
    DEFAULT_STEP,
    EvolutionError,
    EvolutionResult,
    UnitaryTrajectory,
    constant_hamiltonian_analysis,
    evolve,
    generator_from_trajectory,
    rotate_x,
    tilt_angle,
)
from .gates import (
    AlgebraClosureError,
    ClosureReport,
    GatePreconditionError,
    GateSpec,
    apply_gate,
    ccnot_gate,
    closure_report,
    cnot_gate,
    conjugate_triple,
    mismatch_projector,
    not_gate,
    rot_x_gate,
    sqrt_not_gate,
    swap_unitary,
    transform_descriptors,
    validate_gate,
    wire_gate,
)
from .hamiltonians import (
    AntiCommutator,
    CommutatorTimesI,
    DescriptorRef,
    ExprSyntaxError,
    Identity,
    Product,
    Scale,
    Sum,
    compile_expr,
    evaluate,
    format_expr,
    free_descriptors,
    parse_expr,
    parse_scalar,
    pbar,
    referenced_qubits,
    run_program,
)
from .network import (
    Network,
    NetworkSpecError,
    ScheduleResult,
    build_network,
    ctc_problem,
    expectation_rows,
    load_network,
    network_to_spec,
    paired_loop_triples,
    run_schedule,
    save_network,
    solve_ctc,
    validate_network,
)
from .qnum import (
    DEFAULT_TOL,
    EVOLVED_TOL,
    DescriptorTriple,
    HeisenbergState,
    apply_rotation,
    attribute_of,
    common_plus_one_state,
    expectation,
    is_sharp,
    pauli_triple,
    rotation_matrix_xyz,
    rotation_parameters,
    tensor_slot_triple,
    validate_pauli_triple,
)
from .scenarios import SCENARIO_NAMES, ScenarioReport, packaged_network, run_scenario

__version__ = "0.1.0"

__all__ = [
    "AlgebraClosureError",
    "AlgebraSpan",
    "AntiCommutator",
    "BACKEND",
    "ClosureReport",
    "CommutatorTimesI",
    "CtcPair",
    "CtcProblem",
    "DEFAULT_STEP",
    "DEFAULT_TOL",
    "DescriptorRef",
    "DescriptorTriple",
    "DimensionReport",
    "EVOLVED_TOL",
    "EvolutionError",
    "EvolutionResult",
    "ExprSyntaxError",
    "FixedPointResult",
    "GatePreconditionError",
    "GateSpec",
    "HeisenbergState",
    "Identity",
    "Network",
    "NetworkSpecError",
    "Product",
    "SCENARIO_NAMES",
    "Scale",
    "ScenarioReport",
    "ScheduleResult",
    "SharpEnumeration",
    "Sum",
    "UnitaryTrajectory",
    "anticommutator_trace_check",
    "apply_gate",
    "apply_rotation",
    "attribute_of",
    "build_network",
    "ccnot_gate",
    "classify_pair",
    "closure_report",
    "cnot_gate",
    "commutant",
    "common_plus_one_state",
    "compile_expr",
    "conjugate_triple",
    "consistency_residual",
    "constant_hamiltonian_analysis",
    "ctc_problem",
    "enumerate_classical_loops",
    "enumerate_sharp_configurations",
    "evaluate",
    "evolve",
    "expectation",
    "expectation_rows",
    "fixed_point_solve",
    "format_expr",
    "free_descriptors",
    "generated_algebra",
    "generator_from_trajectory",
    "hilbert_dimension",
    "is_sharp",
    "linear_span",
    "load_network",
    "mismatch_projector",
    "nearest_rotated_copy",
    "network_to_spec",
    "not_gate",
    "packaged_network",
    "paired_loop_triples",
    "parameter_count",
    "parse_expr",
    "parse_scalar",
    "pauli_triple",
    "pbar",
    "referenced_qubits",
    "rot_x_gate",
    "rotate_x",
    "rotation_matrix_xyz",
    "rotation_parameters",
    "run_program",
    "run_schedule",
    "run_scenario",
    "save_network",
    "scalar_self_consistency",
    "solve_ctc",
    "span_intersection",
    "sqrt_not_gate",
    "swap_unitary",
    "tensor_slot_triple",
    "tilt_angle",
    "trace_norm",
    "transform_descriptors",
    "triple_distance",
    "validate_gate",
    "validate_network",
    "validate_pauli_triple",
    "wire_gate",
]
