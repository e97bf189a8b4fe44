"""Loop-consistency machinery: fixed-point solver, classical shadows, scalar roots."""

import numpy as np
import pytest

from heisenq.ctc import (
    CtcPair,
    CtcProblem,
    consistency_residual,
    enumerate_classical_loops,
    enumerate_sharp_configurations,
    fixed_point_solve,
    nearest_rotated_copy,
    scalar_self_consistency,
    trace_norm,
    triple_distance,
)
from heisenq.dynamics import rotate_x
from heisenq.network import build_network, ctc_problem, solve_ctc
from heisenq.qnum import (
    SIGMA_Y,
    apply_rotation,
    attribute_of,
    pauli_triple,
    rotation_matrix_xyz,
)
from heisenq.scenarios import packaged_network


def random_rotation(rng):
    m = rng.standard_normal((3, 3))
    q, r = np.linalg.qr(m)
    q = q * np.sign(np.diagonal(r))
    if np.linalg.det(q) < 0:
        q[:, [0, 1]] = q[:, [1, 0]]
    return q


class TestDistances:
    def test_trace_norm_of_pauli(self):
        assert trace_norm(SIGMA_Y) == pytest.approx(2.0)

    def test_identical_triples(self):
        assert triple_distance(pauli_triple(), pauli_triple()) == 0.0

    def test_flipped_triple(self):
        # y and z are negated: componentwise difference 2 sigma, trace norm 4
        d = triple_distance(pauli_triple(), rotate_x(pauli_triple(), np.pi))
        assert d == pytest.approx(4.0)

    def test_consistency_residual_picks_worst_pair(self):
        pairs = (CtcPair("a", "a"), CtcPair("b", "b"))
        start = {"a": pauli_triple(), "b": pauli_triple()}
        end = {"a": pauli_triple(), "b": rotate_x(pauli_triple(), np.pi)}
        assert consistency_residual(start, end, pairs) == pytest.approx(4.0)


class TestNearestRotatedCopy:
    def test_exact_copy_recovered(self):
        rng = np.random.default_rng(71)
        for _ in range(20):
            rotated = apply_rotation(random_rotation(rng), pauli_triple())
            recovered = nearest_rotated_copy(rotated.components, pauli_triple())
            assert triple_distance(recovered, rotated) < 1e-9

    def test_small_perturbations_projected_back(self):
        rng = np.random.default_rng(73)
        rotated = apply_rotation(random_rotation(rng), pauli_triple())
        noise = 1e-6 * rng.standard_normal((3, 2, 2))
        recovered = nearest_rotated_copy(rotated.components + noise, pauli_triple())
        assert triple_distance(recovered, rotated) < 1e-4
        ok_dev = np.abs(
            recovered.components @ recovered.components
            - rotated.components @ rotated.components
        ).max()
        assert ok_dev < 1e-4

    def test_result_is_always_a_valid_rotation(self):
        rng = np.random.default_rng(79)
        blend = rng.standard_normal((3, 2, 2)) + 1j * rng.standard_normal((3, 2, 2))
        blend = 0.5 * (blend + np.transpose(blend.conj(), (0, 2, 1)))
        recovered = nearest_rotated_copy(blend, pauli_triple())
        from heisenq.qnum import validate_pauli_triple

        ok, _ = validate_pauli_triple(recovered)
        assert ok


class TestFixedPointSolveSynthetic:
    """Solver behaviour on hand-built propagation maps."""

    def test_identity_map_converges_immediately(self):
        problem = CtcProblem(
            propagate=lambda t0: dict(t0),
            pairs=(CtcPair("u", "u"),),
            known_triples={},
            initial_guess={"u": rotate_x(pauli_triple(), 1.0)},
        )
        result = fixed_point_solve(problem)
        assert result.converged
        assert result.iterations == 1
        assert result.restarts == 0
        assert result.residual == 0.0

    def test_constant_map_converges_to_its_value(self):
        target = pauli_triple()
        problem = CtcProblem(
            propagate=lambda t0: {"u": target},
            pairs=(CtcPair("u", "u"),),
            known_triples={},
            initial_guess={"u": apply_rotation(
                random_rotation(np.random.default_rng(5)), pauli_triple()
            )},
        )
        result = fixed_point_solve(problem, tol=1e-9)
        assert result.converged
        assert triple_distance(result.triples["u"], target) < 1e-8
        # damped blending halves the distance per pass: linear tail
        assert result.history[-1] < result.history[0]

    def test_drifting_map_never_converges(self):
        problem = CtcProblem(
            propagate=lambda t0: {"u": rotate_x(t0["u"], 0.4)},
            pairs=(CtcPair("u", "u"),),
            known_triples={},
            initial_guess={"u": pauli_triple()},
        )
        result = fixed_point_solve(problem, max_iter=50, multistart=2)
        assert not result.converged
        assert result.residual > 0.1
        assert "no convergence" in result.reason

    def test_flip_map_oscillates_in_the_sharp_shadow(self):
        problem = CtcProblem(
            propagate=lambda t0: {"u": rotate_x(t0["u"], np.pi)},
            pairs=(CtcPair("u", "u"),),
            known_triples={},
            initial_guess={"u": pauli_triple()},
        )
        result = fixed_point_solve(problem, sharp_z=True)
        assert not result.converged
        assert "period-2" in result.reason

    def test_damping_validated(self):
        problem = CtcProblem(
            propagate=lambda t0: dict(t0),
            pairs=(CtcPair("u", "u"),),
            known_triples={},
            initial_guess={"u": pauli_triple()},
        )
        with pytest.raises(ValueError):
            fixed_point_solve(problem, damping=1.0)
        with pytest.raises(ValueError):
            fixed_point_solve(problem, damping=-0.1)

    def test_missing_guess_rejected(self):
        with pytest.raises(ValueError):
            CtcProblem(
                propagate=lambda t0: dict(t0),
                pairs=(CtcPair("u", "u"),),
                known_triples={},
                initial_guess={},
            )


class TestGrandfatherLoop:
    """The packaged paradox network: cnot off the loop output, then a flip."""

    def setup_method(self):
        self.network = packaged_network("grandfather")

    def test_solution_found_and_self_consistent(self):
        result = solve_ctc(self.network)
        assert result.converged
        assert result.residual <= 1e-9
        want = rotate_x(pauli_triple(), 3 * np.pi / 2)
        assert triple_distance(result.triples["q2"], want) <= 1e-6

    def test_aligned_start_is_a_classical_trap(self):
        """The declared sharp guess oscillates; only a restart escapes it."""
        result = solve_ctc(self.network)
        assert result.restarts >= 1
        stuck = solve_ctc(self.network, multistart=0)
        assert not stuck.converged
        assert stuck.history[0] == pytest.approx(4.0)

    def test_solved_attribute_is_maximally_unsharp(self):
        result = solve_ctc(self.network)
        value, sharp = attribute_of(
            self.network.state, result.triples["q2"], "z", tol=1e-6
        )
        assert value == pytest.approx(0.0, abs=1e-6)
        assert not sharp

    def test_bystander_qubit_is_untouched(self):
        result = solve_ctc(self.network)
        assert (
            triple_distance(
                result.network_end["q3"], self.network.triples["q3"]
            )
            < 1e-9
        )

    def test_deterministic_given_seed(self):
        a = solve_ctc(self.network, seed=0)
        b = solve_ctc(self.network, seed=0)
        assert a.iterations == b.iterations
        assert a.restarts == b.restarts
        for ax in range(3):
            np.testing.assert_array_equal(
                a.triples["q2"].components[ax], b.triples["q2"].components[ax]
            )

    def test_solution_stable_under_perturbation(self):
        """Re-solving from a slightly rotated solution stays on the solution."""
        solved = solve_ctc(self.network).triples["q2"]
        perturbed = rotate_x(solved, 1e-3)
        problem = ctc_problem(self.network)
        restarted = CtcProblem(
            propagate=problem.propagate,
            pairs=problem.pairs,
            known_triples=problem.known_triples,
            initial_guess={"q2": perturbed},
        )
        result = fixed_point_solve(restarted, multistart=0)
        assert result.converged
        assert result.restarts == 0
        assert triple_distance(result.triples["q2"], solved) <= 1e-6

    def test_sharp_shadow_is_the_negation_map(self):
        enum = enumerate_sharp_configurations(ctc_problem(self.network))
        assert enum.table == {(1,): (-1,), (-1,): (1,)}
        assert enum.consistent == ()


class TestNoGateLoop:
    def test_trivial_loop_converges_first_pass(self):
        spec = {
            "qubits": {
                "anchor": {"kind": "tensor-slot", "slot": 1, "of": 1},
                "loop": {"kind": "copy-of", "source": "anchor"},
            },
            "schedule": [["wire(loop)"]],
            "ctc": {"pairs": [{"emerges": "loop", "enters": "loop"}], "time": 1},
        }
        result = solve_ctc(build_network(spec))
        assert result.converged
        assert result.iterations == 1
        assert result.restarts == 0
        assert result.residual == 0.0


class TestScalarSelfConsistency:
    def test_angle_map_root(self):
        """phi = (pi/2)(1 + cos phi) pins the quarter-turn exactly."""
        root = scalar_self_consistency(
            lambda phi: (np.pi / 2) * (1 + np.cos(phi)), 0.0, np.pi
        )
        assert root == pytest.approx(np.pi / 2, abs=1e-9)

    def test_sine_root(self):
        root = scalar_self_consistency(np.sin, -1.0, 1.0)
        assert root == pytest.approx(0.0, abs=1e-9)

    def test_cosine_root(self):
        root = scalar_self_consistency(np.cos, 0.0, 1.0)
        assert root == pytest.approx(0.7390851332151607, abs=1e-9)

    def test_bracket_independence(self):
        a = scalar_self_consistency(np.cos, 0.0, 1.0)
        b = scalar_self_consistency(np.cos, 0.5, 1.0)
        assert a == pytest.approx(b, abs=1e-9)

    def test_endpoint_root_returned_exactly(self):
        assert scalar_self_consistency(lambda x: x * x, 1.0, 3.0) == 1.0

    def test_no_sign_change_rejected(self):
        with pytest.raises(ValueError):
            scalar_self_consistency(np.cos, 0.8, 0.9)


class TestEnumerateClassicalLoops:
    @staticmethod
    def negating_gate(values):
        return {"x1": -values["x1"] * values["x2"], "x2": values["x2"]}

    def test_entering_plus_one_is_contradictory(self):
        hits = enumerate_classical_loops(
            ("x1", "x2"), self.negating_gate, [("x1", "x2")], free_values={"x1": 1}
        )
        assert hits == []

    def test_entering_minus_one_is_underdetermined(self):
        hits = enumerate_classical_loops(
            ("x1", "x2"), self.negating_gate, [("x1", "x2")], free_values={"x1": -1}
        )
        assert len(hits) == 2
        assert sorted(h["x2"] for h in hits) == [-1, 1]

    def test_unpinned_enumeration_unions_both(self):
        hits = enumerate_classical_loops(
            ("x1", "x2"), self.negating_gate, [("x1", "x2")]
        )
        assert len(hits) == 2
        assert all(h["x1"] == -1 for h in hits)

    def test_identity_gate_keeps_every_assignment(self):
        hits = enumerate_classical_loops(
            ("a", "b"), lambda v: dict(v), [("a", "a"), ("b", "b")]
        )
        assert len(hits) == 4

    def test_unknown_bits_rejected(self):
        with pytest.raises(KeyError):
            enumerate_classical_loops(("a",), lambda v: v, [("a", "zz")])
        with pytest.raises(KeyError):
            enumerate_classical_loops(
                ("a",), lambda v: v, [("a", "a")], free_values={"zz": 1}
            )

    def test_too_many_open_bits_rejected(self):
        bits = tuple(f"b{i}" for i in range(21))
        with pytest.raises(ValueError):
            enumerate_classical_loops(bits, lambda v: v, [("b0", "b0")])
