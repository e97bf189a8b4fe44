"""Gate library.

Gates are Hamiltonian schedules, not matrices: a gate names the qubits it
drives and supplies each with an interaction Hamiltonian expression to run
for the gate's duration.  Controlled gates condition on the *relation*
between a control qubit and a reference qubit prepared with a sharp +1
z-attribute, through the mismatch projector

    P(a, c) = (2 - {a_z, c_z}) / 4,

which vanishes when the two z-descriptors coincide, equals 1 when they are
opposite, and interpolates as (1 - nu)/2 when {a_z, c_z} = 2 nu.

Also here: the guard against "raw" unitary transformations.  Conjugating
only a subset of the qubits by a carrier unitary is generally not a valid
physical operation -- the textbook example being a swap unitary applied to
one qubit while the other is left on a wire -- because it can collapse the
algebra the descriptors generate, destroying degrees of freedom.
``transform_descriptors`` computes the before/after generated-algebra
dimensions and refuses transformations that change them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import RANK_TOL, classify_pair, generated_algebra
from .dynamics import EvolutionResult, evolve
from .hamiltonians import DescriptorRef, Product, Scale, pbar
from .qnum import (
    SIGMA,
    DescriptorTriple,
    HeisenbergState,
    attribute_of,
)


class GatePreconditionError(ValueError):
    """A gate's structural preconditions do not hold on this network."""


class AlgebraClosureError(ValueError):
    """A raw transformation would change the generated-algebra dimension."""


@dataclass(frozen=True)
class GateSpec:
    """A named Hamiltonian schedule acting on `participants` for `duration`."""

    name: str
    duration: float
    hamiltonians: dict  # driven qubit -> HamiltonianExpr
    participants: tuple


def mismatch_projector(a_z: np.ndarray, c_z: np.ndarray) -> np.ndarray:
    """Evaluate P(a_z, c_z) = (2 - {a_z, c_z}) / 4 on two z-descriptors."""
    a_z = np.asarray(a_z)
    c_z = np.asarray(c_z)
    acomm = a_z @ c_z + c_z @ a_z
    return 0.25 * (2.0 * np.eye(a_z.shape[0]) - acomm)


def _x_rotation_ham(qubit: str, half_rate: float):
    return Scale(half_rate, DescriptorRef(qubit, 0))


def not_gate(qubit: str) -> GateSpec:
    """Flip y and z; H = (pi/2) q_x for one time unit."""
    return GateSpec("not", 1.0, {qubit: _x_rotation_ham(qubit, math.pi / 2)}, (qubit,))


def sqrt_not_gate(qubit: str) -> GateSpec:
    """Half a not: the same Hamiltonian for half the time."""
    return GateSpec(
        "sqrt_not", 0.5, {qubit: _x_rotation_ham(qubit, math.pi / 2)}, (qubit,)
    )


def rot_x_gate(qubit: str, angle: float) -> GateSpec:
    """Rotate descriptors about x by `angle`; H = (angle/2) q_x for one unit."""
    return GateSpec(
        f"rot_x({angle:g})", 1.0, {qubit: _x_rotation_ham(qubit, angle / 2)}, (qubit,)
    )


def wire_gate(qubit: str) -> GateSpec:
    """Explicit do-nothing for one time unit."""
    return GateSpec("wire", 1.0, {}, (qubit,))


def cnot_gate(control: str, target: str, reference: str) -> GateSpec:
    """Flip the target iff the control's z-descriptor opposes the reference's.

    H_target = (pi/2) q_target_x P(control, reference) for one unit.  The
    control and reference must be maximally non-commuting partners and the
    reference must carry a sharp +1 z-attribute; validate_gate checks both.
    """
    if len({control, target, reference}) != 3:
        raise ValueError("control, target and reference must be distinct")
    h = Scale(
        math.pi / 2,
        Product(
            DescriptorRef(target, 0),
            pbar(DescriptorRef(control, 2), DescriptorRef(reference, 2)),
        ),
    )
    return GateSpec("cnot", 1.0, {target: h}, (control, target, reference))


def ccnot_gate(
    control_a: str, control_b: str, target: str, reference_a: str, reference_b: str
) -> GateSpec:
    """Flip the target iff both controls oppose their references.

    H_target = (pi/2) q_target_x P(control_a, reference_a)
               P(control_b, reference_b) for one unit.
    """
    names = (control_a, control_b, target, reference_a, reference_b)
    if len(set(names)) != 5:
        raise ValueError("ccnot needs five distinct qubits")
    h = Scale(
        math.pi / 2,
        Product(
            Product(
                DescriptorRef(target, 0),
                pbar(DescriptorRef(control_a, 2), DescriptorRef(reference_a, 2)),
            ),
            pbar(DescriptorRef(control_b, 2), DescriptorRef(reference_b, 2)),
        ),
    )
    return GateSpec("ccnot", 1.0, {target: h}, names)


def validate_gate(gate: GateSpec, triples: dict, state: HeisenbergState | None):
    """Structural precondition check; returns a list of problem strings."""
    problems = []
    for q in gate.participants:
        if q not in triples:
            problems.append(f"gate {gate.name} references unknown qubit {q!r}")
    if problems:
        return problems
    pairs = []
    if gate.name == "cnot":
        control, _, reference = gate.participants
        pairs.append((control, reference))
    elif gate.name == "ccnot":
        ca, cb, _, ra, rb = gate.participants
        pairs.extend([(ca, ra), (cb, rb)])
    for control, reference in pairs:
        kind = classify_pair(triples[control], triples[reference])
        if kind != "maximally-noncommuting":
            problems.append(
                f"control {control!r} and reference {reference!r} must be "
                f"maximally non-commuting, found {kind!r}"
            )
        if state is not None:
            value, sharp = attribute_of(state, triples[reference], "z")
            if not (sharp and abs(value - 1.0) <= 1e-6):
                problems.append(
                    f"reference {reference!r} must hold a sharp +1 z-attribute "
                    f"(found value {value:.6f}, sharp={sharp})"
                )
    return problems


def apply_gate(
    gate: GateSpec,
    triples: dict,
    state: HeisenbergState | None = None,
    *,
    validate: bool = True,
    **evolve_kwargs,
) -> EvolutionResult:
    """Validate preconditions, then evolve under the gate's Hamiltonians."""
    if validate:
        problems = validate_gate(gate, triples, state)
        if problems:
            raise GatePreconditionError("; ".join(problems))
    return evolve(triples, gate.hamiltonians, gate.duration, **evolve_kwargs)


# --------------------------------------------------------------------------
# raw carrier unitaries and the closure guard
# --------------------------------------------------------------------------


def swap_unitary() -> np.ndarray:
    """The two-qubit swap on a 4-dim carrier: (1x1 + sum_i s_i x s_i) / 2."""
    u = np.eye(4, dtype=complex)
    for s in SIGMA:
        u = u + np.kron(s, s)
    return 0.5 * u


def conjugate_triple(u: np.ndarray, triple: DescriptorTriple) -> DescriptorTriple:
    comps = np.einsum("ij,ajk,lk->ail", u, triple.components, u.conj())
    return DescriptorTriple.from_components(comps)


@dataclass(frozen=True)
class ClosureReport:
    dim_before: int
    dim_after: int

    @property
    def preserved(self) -> bool:
        return self.dim_before == self.dim_after


def closure_report(before: dict, after: dict, tol: float = RANK_TOL) -> ClosureReport:
    """Generated-algebra dimension of all descriptors, before vs after."""
    gens_before = [c for t in before.values() for c in t.components]
    gens_after = [c for t in after.values() for c in t.components]
    return ClosureReport(
        dim_before=generated_algebra(gens_before, tol).dim,
        dim_after=generated_algebra(gens_after, tol).dim,
    )


def transform_descriptors(
    triples: dict,
    u: np.ndarray,
    qubits=None,
    *,
    enforce_closure: bool = True,
    tol: float = RANK_TOL,
):
    """Conjugate the named qubits' triples (default: all) by a raw unitary.

    Conjugating *every* qubit is always safe -- it is a change of
    description.  Conjugating a proper subset can silently shrink the
    algebra the network generates; with enforce_closure the transformation
    is rejected in that case (AlgebraClosureError carrying the report).
    Returns (new_triples, ClosureReport).
    """
    u = np.asarray(u, dtype=complex)
    n = u.shape[0]
    if np.abs(u @ u.conj().T - np.eye(n)).max() > 1e-9:
        raise ValueError("transformation matrix is not unitary")
    if qubits is None:
        qubits = list(triples)
    unknown = [q for q in qubits if q not in triples]
    if unknown:
        raise KeyError(f"unknown qubits {unknown}")
    after = {
        q: conjugate_triple(u, t) if q in set(qubits) else t
        for q, t in triples.items()
    }
    report = closure_report(triples, after, tol)
    if enforce_closure and not report.preserved:
        raise AlgebraClosureError(
            f"transformation changes the generated-algebra dimension "
            f"{report.dim_before} -> {report.dim_after}; applying a carrier "
            f"unitary to a strict subset of the qubits is not a physical "
            f"operation here"
        )
    return after, report
