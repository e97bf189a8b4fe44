"""Packaged worked scenarios, runnable from the CLI and the test suite.

Each runner returns a ScenarioReport: a passed flag, human-readable check
lines, and a data dict with the raw numbers the checks were made from.
The scenario specs live as JSON files next to this module, so they double
as format examples; `packaged_network` loads them by name.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ..algebra import generated_algebra, hilbert_dimension
from ..ctc import (
    enumerate_classical_loops,
    enumerate_sharp_configurations,
    fixed_point_solve,
    scalar_self_consistency,
    triple_distance,
)
from ..dynamics import DEFAULT_STEP, evolve, rotate_x, tilt_angle
from ..hamiltonians import Scale
from ..network import Network, build_network, ctc_problem, run_schedule
from ..qnum import (
    SIGMA_Y,
    SIGMA_Z,
    DescriptorTriple,
    attribute_of,
    pauli_triple,
)

SCENARIO_NAMES = (
    "model-theory",
    "grandfather",
    "classical-grandfather",
    "hilbert-creation",
    "hilbert-destruction",
)

_FILES = {
    "model-theory": "model_theory.json",
    "grandfather": "grandfather.json",
    "hilbert-creation": "hilbert_creation.json",
}


def packaged_network(name: str) -> Network:
    """Load one of the shipped scenario specs by scenario name."""
    fname = _FILES[name]
    text = resources.files("heisenq").joinpath("scenarios", fname).read_text()
    return build_network(json.loads(text))


@dataclass
class ScenarioReport:
    name: str
    passed: bool
    lines: list = field(default_factory=list)
    data: dict = field(default_factory=dict)


class _Checks:
    def __init__(self):
        self.lines = []
        self.all_ok = True

    def check(self, ok: bool, text: str):
        self.lines.append(f"[{'ok' if ok else 'FAIL'}] {text}")
        self.all_ok = self.all_ok and bool(ok)

    def note(self, text: str):
        self.lines.append(f"     {text}")


def _x_family_angle(triple: DescriptorTriple) -> float:
    """Rotation angle of a triple in the x-rotation family of the Pauli triple."""
    sin_phi = -0.5 * np.trace(triple.z @ SIGMA_Y).real
    cos_phi = 0.5 * np.trace(triple.z @ SIGMA_Z).real
    return math.atan2(sin_phi, cos_phi) % (2 * math.pi)


def run_model_theory_scenario(step: float = DEFAULT_STEP) -> ScenarioReport:
    """Two maximally non-commuting qubits, one driven by (1/4){{q1z,q2z},q1x}.

    The driven qubit tilts about x by alpha(t) = 2 arctan(tanh t) while its
    partner is exactly frozen; the Hamiltonian is genuinely time-dependent
    through the descriptors, so the integrator must take the ODE path.
    """
    c = _Checks()
    network = packaged_network("model-theory")
    result = run_schedule(network, step=step)
    bound = max(10.0 * step**4 * network.duration, 1e-6)

    worst = 0.0
    for t, triples in result.records:
        expected = rotate_x(pauli_triple(), tilt_angle(t))
        worst = max(worst, float(np.abs(
            triples["q1"].components - expected.components
        ).max()))
    c.check(worst <= bound,
            f"driven qubit follows the tilt-angle closed form "
            f"(max deviation {worst:.3e} <= {bound:.3e})")

    c.check("ode" in result.methods,
            f"integrator took the ODE path (methods used: {result.methods})")

    untouched = result.final["q2"] is network.triples["q2"]
    c.check(untouched, "undriven partner passed through bit-identical")

    exp_dev = 0.0
    for t, triples in result.records:
        alpha = tilt_angle(t)
        want = np.array([0.0, math.sin(alpha), math.cos(alpha)])
        got = np.array([attribute_of(network.state, triples["q1"], ax, tol=1e-5)[0]
                        for ax in "xyz"])
        exp_dev = max(exp_dev, float(np.abs(got - want).max()))
    c.check(exp_dev <= bound,
            f"<q1> trajectory is (0, sin a, cos a) (max deviation {exp_dev:.3e})")

    return ScenarioReport(
        name="model-theory",
        passed=c.all_ok,
        lines=c.lines,
        data={
            "max_deviation": worst,
            "expectation_deviation": exp_dev,
            "methods": result.methods,
            "bound": bound,
        },
    )


def run_grandfather_scenario(
    *,
    damping: float = 0.5,
    tol: float = 1e-9,
    max_iter: int = 200,
    multistart: int = 8,
    seed: int = 0,
) -> ScenarioReport:
    """The target of a controlled flip loops back to become its own control.

    Classically inconsistent (the control would have to equal its own
    negation); the descriptor version has an exact solution whose control
    z-attribute is maximally unsharp.
    """
    c = _Checks()
    network = packaged_network("grandfather")
    problem = ctc_problem(network)
    solution = fixed_point_solve(
        problem,
        damping=damping,
        tol=tol,
        max_iter=max_iter,
        multistart=multistart,
        seed=seed,
    )
    c.check(solution.converged,
            f"fixed-point solver converged (residual {solution.residual:.3e} "
            f"after {solution.iterations} iterations, "
            f"{solution.restarts} random restart(s))")

    expected = rotate_x(pauli_triple(), 1.5 * math.pi)
    dist = triple_distance(solution.triples["q2"], expected)
    c.check(dist <= 1e-6,
            f"solution is the quarter-turned control (x, -z, y) "
            f"(distance {dist:.3e})")

    value, sharp = attribute_of(network.state, solution.triples["q2"], "z")
    c.check(abs(value) <= 1e-6 and not sharp,
            f"looped control's z-attribute is 0 and not sharp "
            f"(value {value:.3e}, sharp={sharp})")

    mid = run_schedule(network, solution.triples).records[1][1]["q1"]
    mid_expected = rotate_x(pauli_triple(), 0.5 * math.pi)
    mid_dist = triple_distance(mid, mid_expected)
    c.check(mid_dist <= 1e-6,
            f"after the controlled flip the target sits at (x, z, -y) "
            f"(distance {mid_dist:.3e})")

    aligned = dict(network.triples)
    wrong = problem.propagate(aligned)
    from ..ctc import consistency_residual

    wrong_residual = consistency_residual(aligned, wrong, problem.pairs)
    c.check(wrong_residual > 0.5,
            f"aligned (classical) guess is badly inconsistent "
            f"(residual {wrong_residual:.3f})")

    # independent scalar route: within the x-rotation family, a control
    # tilted by phi drives the target through (pi/2)(1 - cos phi), and the
    # final flip adds pi -- so consistency is phi = pi + (pi/2)(1 - cos phi).
    def loop_angle(phi: float) -> float:
        return math.pi + 0.5 * math.pi * (1.0 - math.cos(phi))

    root = scalar_self_consistency(loop_angle, math.pi, 2.0 * math.pi)
    angle = _x_family_angle(solution.triples["q2"])
    c.check(abs(root - angle) <= 1e-6,
            f"scalar bisection route agrees with the operator solver "
            f"(angle {angle:.9f} vs root {root:.9f})")

    return ScenarioReport(
        name="grandfather",
        passed=c.all_ok,
        lines=c.lines,
        data={
            "residual": solution.residual,
            "iterations": solution.iterations,
            "restarts": solution.restarts,
            "angle": angle,
            "scalar_root": root,
            "control_z_value": value,
            "control_z_sharp": sharp,
            "wrong_guess_residual": wrong_residual,
            "solution": solution.triples["q2"],
        },
    )


def run_classical_grandfather_scenario(max_iter: int = 16) -> ScenarioReport:
    """The same loop restricted to sharp descriptors: a genuine paradox.

    With iterates confined to the two sharp-z configurations the loop map
    is a pure involution, so the iteration bounces between them forever,
    and brute-force enumeration confirms no sharp assignment is consistent.
    """
    c = _Checks()
    network = packaged_network("grandfather")
    problem = ctc_problem(network)

    result = fixed_point_solve(problem, sharp_z=True, max_iter=max_iter)
    c.check(not result.converged, "sharp-restricted iteration does not converge")
    c.check("oscillation" in result.reason,
            f"solver identified the cycle ({result.reason})")

    enum = enumerate_sharp_configurations(problem)
    c.check(enum.consistent == (),
            "no sharp configuration is self-consistent")
    flips = all(out == tuple(-b for b in inp) for inp, out in enum.table.items())
    c.check(flips, f"every sharp input maps to its negation ({enum.table})")

    # The bare classical story, no descriptors at all: the gate sends
    # (x1, x2) -> (-x1*x2, x2) -- controlled flip then unconditional flip --
    # and the transformed x1 loops back in as x2.
    def gate(v):
        return {"x1": -v["x1"] * v["x2"], "x2": v["x2"]}

    blocked = enumerate_classical_loops(
        ("x1", "x2"), gate, [("x1", "x2")], free_values={"x1": 1}
    )
    underdetermined = enumerate_classical_loops(
        ("x1", "x2"), gate, [("x1", "x2")], free_values={"x1": -1}
    )
    c.check(len(blocked) == 0,
            "classical oracle: entering +1 admits no consistent loop value")
    c.check(len(underdetermined) == 2,
            "classical oracle: entering -1 admits two (underdetermined)")

    return ScenarioReport(
        name="classical-grandfather",
        passed=c.all_ok,
        lines=c.lines,
        data={"reason": result.reason, "table": enum.table,
              "consistent": enum.consistent,
              "oracle_counts": (len(blocked), len(underdetermined))},
    )


def _pair_dims(triples, qubits):
    span = generated_algebra([c for q in qubits for c in triples[q].components])
    report = hilbert_dimension(span)
    return span.dim, report.hilbert_dim


def run_hilbert_creation_scenario(tol: float = 1e-9) -> ScenarioReport:
    """A pair enters the loop and emerges carrying a larger Hilbert space.

    The two entering qubits share one descriptor triple (their algebra is
    4-dimensional: one 2-dim Hilbert space), while the emerging pair's
    descriptors generate the full 16-dimensional algebra of a 4-dim
    carrier.  The shipped initial descriptors close the loop exactly.
    """
    c = _Checks()
    network = packaged_network("hilbert-creation")

    dim_in, hdim_in = _pair_dims(network.triples, ("q1", "q2"))
    c.check((dim_in, hdim_in) == (4, 2),
            f"entering pair generates a 4-dim algebra on a 2-dim Hilbert "
            f"space (got dim {dim_in}, Hilbert {hdim_in})")

    dim_out, hdim_out = _pair_dims(network.triples, ("q3", "q4"))
    c.check((dim_out, hdim_out) == (16, 4),
            f"emerging pair generates the full 16-dim algebra on a 4-dim "
            f"Hilbert space (got dim {dim_out}, Hilbert {hdim_out})")

    solution = fixed_point_solve(ctc_problem(network), tol=tol)
    c.check(solution.converged and solution.iterations == 1
            and solution.restarts == 0,
            f"shipped descriptors close the loop exactly "
            f"(residual {solution.residual:.3e} on the first evaluation)")

    return ScenarioReport(
        name="hilbert-creation",
        passed=c.all_ok,
        lines=c.lines,
        data={
            "entering_dims": (dim_in, hdim_in),
            "emerging_dims": (dim_out, hdim_out),
            "residual": solution.residual,
        },
    )


def run_hilbert_destruction_scenario(tol: float = 1e-9) -> ScenarioReport:
    """Running the duplication Hamiltonians backwards merges the pair again.

    Starting from a network whose working pair carries the emerged
    (16-dim-algebra) descriptors, evolving under the negated Hamiltonians
    for one unit restores the shared slot-1 triples exactly: the two
    qubits' joint algebra collapses from 16 back to 4 dimensions.
    """
    c = _Checks()
    network = packaged_network("hilbert-creation")
    gate = network.schedule[0][0]

    triples = {
        "q1": network.triples["q3"],
        "q2": network.triples["q4"],
        "q3": network.triples["q3"],
        "q4": network.triples["q4"],
    }
    dim_before, hdim_before = _pair_dims(triples, ("q1", "q2"))
    reversed_hams = {q: Scale(-1.0, h) for q, h in gate.hamiltonians.items()}
    result = evolve(triples, reversed_hams, gate.duration)

    target = network.triples["q1"]  # the shared slot-1 triple
    dist = max(
        triple_distance(result.triples["q1"], target),
        triple_distance(result.triples["q2"], target),
    )
    c.check(dist <= tol,
            f"both qubits return to the shared slot-1 triple "
            f"(distance {dist:.3e})")

    dim_after, hdim_after = _pair_dims(result.triples, ("q1", "q2"))
    c.check((dim_before, dim_after) == (16, 4),
            f"pair algebra collapses 16 -> 4 (got {dim_before} -> {dim_after})")
    c.check((hdim_before, hdim_after) == (4, 2),
            f"Hilbert dimension drops 4 -> 2 (got {hdim_before} -> {hdim_after})")

    value, sharp = attribute_of(network.state, result.triples["q1"], "z")
    c.check(sharp and abs(value - 1.0) <= 1e-9,
            f"restored pair holds a sharp +1 z-attribute (value {value:.6f})")

    return ScenarioReport(
        name="hilbert-destruction",
        passed=c.all_ok,
        lines=c.lines,
        data={
            "restored_distance": dist,
            "dims": (dim_before, dim_after),
            "hilbert_dims": (hdim_before, hdim_after),
        },
    )


def run_scenario(name: str, **kwargs) -> ScenarioReport:
    runners = {
        "model-theory": run_model_theory_scenario,
        "grandfather": run_grandfather_scenario,
        "classical-grandfather": run_classical_grandfather_scenario,
        "hilbert-creation": run_hilbert_creation_scenario,
        "hilbert-destruction": run_hilbert_destruction_scenario,
    }
    if name not in runners:
        raise ValueError(f"unknown scenario {name!r}; pick from {SCENARIO_NAMES}")
    return runners[name](**kwargs)
