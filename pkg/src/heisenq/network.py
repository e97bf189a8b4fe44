"""Qubit networks: construction, JSON specs, and schedule execution.

A network is a set of named qubits on one carrier space, a fixed state,
and a schedule of gates in integer time slots.  The JSON format::

    {
      "qubits": {
        "q1": {"kind": "tensor-slot", "slot": 1, "of": 2},
        "q2": {"kind": "copy-of", "source": "q1"},
        "q3": {"kind": "explicit", "x": [[...]], "y": [[...]], "z": [[...]]},
        "q4": {"kind": "paired-loop-slot", "role": "enter_a"}
      },
      "state": [[1, 0], [0, 0]],                  // optional, complex as [re, im]
      "schedule": [
        ["cnot(q2, q1, q3)"],                     // slot 0
        ["not(q1)", "wire(q2)"],                  // slot 1
        [{"custom": {"name": "zz-drive", "duration": 1.0,
                     "hamiltonians": {"q1": "0.25 * acomm(acomm(q1.z, q2.z), q1.x)"}}}]
      ],
      "ctc": {"pairs": [{"emerges": "q2", "enters": "q1"}], "time": 2}  // optional
    }

Numbers inside matrices and state vectors are either plain reals or
``[re, im]`` pairs.  Gate strings cover ``not``, ``sqrt_not``,
``rot_x(q, angle)`` (the angle accepts scalar expressions like ``pi/2``),
``cnot(control, target, reference)``, ``ccnot(ca, cb, target, ra, rb)`` and
``wire``; anything else is a custom Hamiltonian schedule.  Each slot's
gates must touch pairwise disjoint qubit sets; a gate's Hamiltonians run
from the slot start for the gate's duration (at most one unit).

When no explicit state is given, the state is the joint +1 eigenvector of
the z-descriptors of every qubit that does not *emerge* from a loop (their
initial descriptors being unknowns, they cannot pin the state); the build
fails if that eigenspace is not one-dimensional.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

import numpy as np

from .ctc import CtcPair, CtcProblem, fixed_point_solve
from .dynamics import DEFAULT_STEP, EvolutionError, evolve
from .gates import (
    GatePreconditionError,
    GateSpec,
    ccnot_gate,
    cnot_gate,
    not_gate,
    rot_x_gate,
    sqrt_not_gate,
    validate_gate,
    wire_gate,
)
from .hamiltonians import (
    ExprSyntaxError,
    parse_expr,
    parse_scalar,
    referenced_qubits,
)
from .qnum import (
    SIGMA,
    DescriptorTriple,
    HeisenbergState,
    common_plus_one_state,
    expectation,
    is_sharp,
    pauli_triple,
    tensor_slot_triple,
    validate_pauli_triple,
)


class NetworkSpecError(ValueError):
    """Invalid network spec; .problems carries the full list."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# --------------------------------------------------------------------------
# JSON value helpers
# --------------------------------------------------------------------------


def complex_from_json(v):
    if isinstance(v, (int, float)):
        return complex(v)
    if (
        isinstance(v, (list, tuple))
        and len(v) == 2
        and all(isinstance(x, (int, float)) for x in v)
    ):
        return complex(v[0], v[1])
    raise ValueError(f"expected a number or [re, im] pair, got {v!r}")


def complex_to_json(z: complex):
    z = complex(z)
    if z.imag == 0.0:
        return z.real
    return [z.real, z.imag]


def matrix_from_json(rows) -> np.ndarray:
    return np.array([[complex_from_json(v) for v in row] for row in rows])


def matrix_to_json(m: np.ndarray):
    return [[complex_to_json(v) for v in row] for row in np.asarray(m)]


# --------------------------------------------------------------------------
# qubit constructors
# --------------------------------------------------------------------------


def paired_loop_triples() -> dict:
    """Initial descriptors for the pair-duplication loop, on a 4-dim carrier.

    Two identical slot-1 triples (``enter_a``, ``enter_b``: the pair that
    will enter the loop) plus two dressed partners (``emerge_a``,
    ``emerge_b``) arranged so the duplication schedule closes the loop
    exactly: evolving enter_a for one unit reproduces emerge_a's initial
    descriptors, and likewise for the b pair.
    """
    sx, sy, sz = SIGMA
    eye = np.eye(2)
    enter = DescriptorTriple(np.kron(sx, eye), np.kron(sy, eye), np.kron(sz, eye))
    emerge_a = DescriptorTriple(
        np.kron(sx, eye), np.kron(sy, sz), np.kron(sz, sz)
    )
    emerge_b = DescriptorTriple(
        np.kron(sx, sx), np.kron(sy, sx), np.kron(sz, eye)
    )
    return {
        "enter_a": enter,
        "enter_b": enter,
        "emerge_a": emerge_a,
        "emerge_b": emerge_b,
    }


def _build_qubits(spec_qubits, problems):
    triples = {}
    for qid, qspec in spec_qubits.items():
        if not isinstance(qspec, dict) or "kind" not in qspec:
            problems.append(f"qubit {qid!r}: spec must be an object with a 'kind'")
            continue
        kind = qspec["kind"]
        try:
            if kind == "tensor-slot":
                triples[qid] = tensor_slot_triple(int(qspec["slot"]), int(qspec["of"]))
            elif kind == "copy-of":
                source = qspec["source"]
                if source not in triples:
                    raise ValueError(
                        f"source {source!r} unknown (define it earlier in the file)"
                    )
                triples[qid] = triples[source]
            elif kind == "explicit":
                triples[qid] = DescriptorTriple(
                    matrix_from_json(qspec["x"]),
                    matrix_from_json(qspec["y"]),
                    matrix_from_json(qspec["z"]),
                )
            elif kind == "paired-loop-slot":
                role = qspec["role"]
                bank = paired_loop_triples()
                if role not in bank:
                    raise ValueError(
                        f"role must be one of {sorted(bank)}, not {role!r}"
                    )
                triples[qid] = bank[role]
            else:
                raise ValueError(f"unknown kind {kind!r}")
        except (KeyError, ValueError, TypeError) as exc:
            problems.append(f"qubit {qid!r}: {exc}")
    return triples


# --------------------------------------------------------------------------
# gate entries
# --------------------------------------------------------------------------

_GATE_CALL = re.compile(r"^\s*([a-z_][a-z0-9_]*)\s*\((.*)\)\s*$")


def parse_gate_entry(entry) -> GateSpec:
    """One schedule entry: a gate-call string or a {"custom": ...} object."""
    if isinstance(entry, str):
        m = _GATE_CALL.match(entry)
        if not m:
            raise ValueError(f"cannot parse gate call {entry!r}")
        name, arg_text = m.group(1), m.group(2)
        args = [a.strip() for a in arg_text.split(",")] if arg_text.strip() else []
        if name == "not":
            _need_args(entry, args, 1)
            return not_gate(args[0])
        if name == "sqrt_not":
            _need_args(entry, args, 1)
            return sqrt_not_gate(args[0])
        if name == "wire":
            _need_args(entry, args, 1)
            return wire_gate(args[0])
        if name == "rot_x":
            _need_args(entry, args, 2)
            return rot_x_gate(args[0], parse_scalar(args[1]))
        if name == "cnot":
            _need_args(entry, args, 3)
            return cnot_gate(*args)
        if name == "ccnot":
            _need_args(entry, args, 5)
            return ccnot_gate(*args)
        raise ValueError(f"unknown gate {name!r} in {entry!r}")
    if isinstance(entry, dict) and set(entry) == {"custom"}:
        body = entry["custom"]
        name = body.get("name", "custom")
        duration = float(body.get("duration", 1.0))
        hams = {}
        participants = set()
        for qid, text in body["hamiltonians"].items():
            expr = parse_expr(text)
            hams[qid] = expr
            participants.add(qid)
            participants |= referenced_qubits(expr)
        return GateSpec(name, duration, hams, tuple(sorted(participants)))
    raise ValueError(f"bad schedule entry {entry!r}")


def _need_args(entry, args, n):
    if len(args) != n:
        raise ValueError(f"{entry!r}: expected {n} argument(s), got {len(args)}")


def gate_entry_to_json(gate: GateSpec):
    """Serialise a GateSpec back to a schedule entry."""
    from .hamiltonians import format_expr

    if gate.name == "not":
        return f"not({gate.participants[0]})"
    if gate.name == "sqrt_not":
        return f"sqrt_not({gate.participants[0]})"
    if gate.name == "wire":
        return f"wire({gate.participants[0]})"
    if gate.name.startswith("rot_x("):
        return f"rot_x({gate.participants[0]}, {gate.name[6:-1]})"
    if gate.name == "cnot":
        c, t, r = gate.participants
        return f"cnot({c}, {t}, {r})"
    if gate.name == "ccnot":
        ca, cb, t, ra, rb = gate.participants
        return f"ccnot({ca}, {cb}, {t}, {ra}, {rb})"
    return {
        "custom": {
            "name": gate.name,
            "duration": gate.duration,
            "hamiltonians": {q: format_expr(h) for q, h in gate.hamiltonians.items()},
        }
    }


# --------------------------------------------------------------------------
# the network object
# --------------------------------------------------------------------------


@dataclass
class Network:
    triples: dict
    state: HeisenbergState
    schedule: list       # list of slots; each slot a list of GateSpec
    ctc_pairs: tuple     # of CtcPair
    ctc_time: int | None

    @property
    def dim(self) -> int:
        return next(iter(self.triples.values())).dim

    @property
    def duration(self) -> int:
        return len(self.schedule)

    @property
    def emerging(self) -> set:
        return {p.emerges for p in self.ctc_pairs}


def build_network(spec: dict) -> Network:
    problems = []
    if not isinstance(spec, dict):
        raise NetworkSpecError(["spec must be a JSON object"])
    unknown_keys = set(spec) - {"qubits", "state", "schedule", "ctc"}
    for k in sorted(unknown_keys):
        problems.append(f"unknown top-level key {k!r}")
    qubit_specs = spec.get("qubits")
    if not isinstance(qubit_specs, dict) or not qubit_specs:
        problems.append("'qubits' must be a non-empty object")
        raise NetworkSpecError(problems)

    triples = _build_qubits(qubit_specs, problems)
    if problems:
        raise NetworkSpecError(problems)

    dims = {t.dim for t in triples.values()}
    if len(dims) != 1:
        problems.append(f"qubits live on different carrier dimensions: {sorted(dims)}")
        raise NetworkSpecError(problems)
    for qid, t in triples.items():
        ok, residual = validate_pauli_triple(t)
        if not ok:
            problems.append(
                f"qubit {qid!r}: descriptors violate the product relations "
                f"(residual {residual:.3e})"
            )

    # schedule
    schedule = []
    raw_schedule = spec.get("schedule", [])
    if not isinstance(raw_schedule, list):
        problems.append("'schedule' must be a list of slots")
        raw_schedule = []
    for s, raw_slot in enumerate(raw_schedule):
        slot = []
        if not isinstance(raw_slot, list):
            problems.append(f"slot {s}: must be a list of gate entries")
            continue
        for entry in raw_slot:
            try:
                gate = parse_gate_entry(entry)
            except (ValueError, ExprSyntaxError, KeyError, TypeError) as exc:
                problems.append(f"slot {s}: {exc}")
                continue
            if not 0.0 < gate.duration <= 1.0:
                problems.append(
                    f"slot {s}: gate {gate.name!r} duration {gate.duration:g} "
                    f"outside (0, 1]"
                )
            for q in gate.participants:
                if q not in triples:
                    problems.append(
                        f"slot {s}: gate {gate.name!r} names unknown qubit {q!r}"
                    )
            slot.append(gate)
        seen = set()
        for gate in slot:
            overlap = seen & set(gate.participants)
            if overlap:
                problems.append(
                    f"slot {s}: qubits {sorted(overlap)} appear in two gates"
                )
            seen |= set(gate.participants)
        schedule.append(slot)

    # loop identifications
    ctc_pairs = []
    ctc_time = None
    raw_ctc = spec.get("ctc")
    if raw_ctc is not None:
        if not isinstance(raw_ctc, dict):
            problems.append("'ctc' must be an object")
        else:
            for entry in raw_ctc.get("pairs", []):
                try:
                    pair = CtcPair(emerges=entry["emerges"], enters=entry["enters"])
                except (KeyError, TypeError):
                    problems.append(f"ctc pair {entry!r} needs 'emerges' and 'enters'")
                    continue
                for q in (pair.emerges, pair.enters):
                    if q not in triples:
                        problems.append(f"ctc pair names unknown qubit {q!r}")
                ctc_pairs.append(pair)
            emerging = [p.emerges for p in ctc_pairs]
            if len(set(emerging)) != len(emerging):
                problems.append("a qubit emerges from more than one loop")
            if "time" in raw_ctc:
                t = raw_ctc["time"]
                if not isinstance(t, int) or not 1 <= t <= len(schedule):
                    problems.append(
                        f"ctc time must be an integer slot boundary in "
                        f"[1, {len(schedule)}], got {t!r}"
                    )
                else:
                    ctc_time = t

    # the fixed state
    state = None
    if "state" in spec:
        try:
            vec = np.array([complex_from_json(v) for v in spec["state"]])
            if vec.shape[0] != next(iter(triples.values())).dim:
                raise ValueError(
                    f"state has dimension {vec.shape[0]}, carrier is "
                    f"{next(iter(triples.values())).dim}"
                )
            state = HeisenbergState(vec)
        except (ValueError, TypeError) as exc:
            problems.append(f"state: {exc}")
    else:
        emerging = {p.emerges for p in ctc_pairs}
        anchors = [t.z for q, t in triples.items() if q not in emerging]
        if not anchors:
            problems.append("every qubit emerges from a loop; an explicit state is required")
        else:
            try:
                state = common_plus_one_state(anchors)
            except ValueError as exc:
                problems.append(f"state construction failed ({exc}); give an explicit state")

    if problems:
        raise NetworkSpecError(problems)
    assert state is not None
    return Network(
        triples=triples,
        state=state,
        schedule=schedule,
        ctc_pairs=tuple(ctc_pairs),
        ctc_time=ctc_time,
    )


def validate_network(spec: dict):
    """Collect spec problems without raising; [] means buildable."""
    try:
        network = build_network(spec)
    except NetworkSpecError as exc:
        return exc.problems
    problems = []
    # structural gate preconditions on the declared initial descriptors
    for s, slot in enumerate(network.schedule):
        for gate in slot:
            for p in validate_gate(gate, network.triples, network.state):
                problems.append(f"slot {s}: {p}")
    return problems


def network_to_spec(network: Network) -> dict:
    spec = {
        "qubits": {
            qid: {
                "kind": "explicit",
                "x": matrix_to_json(t.x),
                "y": matrix_to_json(t.y),
                "z": matrix_to_json(t.z),
            }
            for qid, t in network.triples.items()
        },
        "state": [complex_to_json(v) for v in network.state.vector],
        "schedule": [
            [gate_entry_to_json(g) for g in slot] for slot in network.schedule
        ],
    }
    if network.ctc_pairs:
        ctc = {
            "pairs": [
                {"emerges": p.emerges, "enters": p.enters} for p in network.ctc_pairs
            ]
        }
        if network.ctc_time is not None:
            ctc["time"] = network.ctc_time
        spec["ctc"] = ctc
    return spec


def load_network(path) -> Network:
    with open(path) as fh:
        return build_network(json.load(fh))


def save_network(network: Network, path):
    with open(path, "w") as fh:
        json.dump(network_to_spec(network), fh, indent=2)
        fh.write("\n")


# --------------------------------------------------------------------------
# schedule execution
# --------------------------------------------------------------------------

_TIME_TOL = 1e-9


@dataclass
class ScheduleResult:
    records: list        # (time, {qid: DescriptorTriple}), at requested times
    final: dict
    methods: tuple       # integration paths used ("closed", "ode")
    worst_hermiticity: float
    worst_drift: float


def run_schedule(
    network: Network,
    initial: dict | None = None,
    *,
    step: float = DEFAULT_STEP,
    method: str = "auto",
    record_times=None,
    end_time: int | None = None,
    validate_gates: bool = True,
) -> ScheduleResult:
    """Execute the schedule from declared (or overridden) initial descriptors.

    ``initial`` overrides individual qubits' t=0 triples (used by the loop
    solver).  Descriptors are recorded at ``record_times`` (default: every
    integer time).  Gates start at their slot boundary and their
    Hamiltonians switch off after the gate duration; record times and
    duration ends split each slot into exactly-integrated sub-intervals.
    """
    n_slots = len(network.schedule) if end_time is None else int(end_time)
    if end_time is not None and not 0 <= n_slots <= len(network.schedule):
        raise ValueError(f"end_time {end_time!r} outside the schedule")

    triples = dict(network.triples)
    if initial:
        unknown = sorted(set(initial) - set(triples))
        if unknown:
            raise KeyError(f"initial overrides for unknown qubits {unknown}")
        triples.update(initial)

    if record_times is None:
        requested = [float(k) for k in range(n_slots + 1)]
    else:
        requested = sorted(float(t) for t in record_times)
        for t in requested:
            if not -_TIME_TOL <= t <= n_slots + _TIME_TOL:
                raise ValueError(f"record time {t:g} outside [0, {n_slots}]")

    records = []
    if requested and abs(requested[0]) <= _TIME_TOL:
        records.append((0.0, dict(triples)))

    worst_herm = 0.0
    worst_drift = 0.0
    methods = set()
    for s in range(n_slots):
        gates = network.schedule[s]
        if validate_gates:
            problems = []
            for gate in gates:
                problems.extend(validate_gate(gate, triples, network.state))
            if problems:
                raise GatePreconditionError(f"slot {s}: " + "; ".join(problems))
        cuts = {1.0}
        for gate in gates:
            if gate.duration < 1.0:
                cuts.add(gate.duration)
        for t in requested:
            local = t - s
            if _TIME_TOL < local < 1.0 - _TIME_TOL:
                cuts.add(local)
        a = 0.0
        for b in sorted(cuts):
            hams = {}
            for gate in gates:
                if gate.duration > a + _TIME_TOL:
                    for q, h in gate.hamiltonians.items():
                        if q in hams:
                            raise GatePreconditionError(
                                f"slot {s}: qubit {q!r} driven by two gates"
                            )
                        hams[q] = h
            try:
                result = evolve(triples, hams, b - a, step=step, method=method)
            except EvolutionError as exc:
                raise EvolutionError(f"slot {s}: {exc}") from exc
            triples = result.triples
            methods.add(result.method)
            worst_herm = max(worst_herm, result.worst_hermiticity)
            worst_drift = max(worst_drift, result.worst_drift)
            t_abs = s + b
            if any(abs(t_abs - t) <= _TIME_TOL for t in requested):
                records.append((t_abs, dict(triples)))
            a = b
    return ScheduleResult(
        records=records,
        final=triples,
        methods=tuple(sorted(methods)),
        worst_hermiticity=worst_herm,
        worst_drift=worst_drift,
    )


def expectation_rows(network: Network, result: ScheduleResult):
    """(time, qubit, axis, expectation, sharp) rows for every record."""
    from .qnum import AXES

    rows = []
    for t, triples in result.records:
        for qid in network.triples:
            triple = triples[qid]
            for ax in AXES:
                comp = triple.component(ax)
                value = expectation(network.state, comp, tol=1e-6)
                sharp = is_sharp(network.state, comp, tol=1e-6)
                rows.append((t, qid, ax, value, sharp))
    return rows


# --------------------------------------------------------------------------
# loop solving on a network
# --------------------------------------------------------------------------


def ctc_problem(
    network: Network, *, step: float = DEFAULT_STEP, method: str = "auto"
) -> CtcProblem:
    if not network.ctc_pairs:
        raise ValueError("network has no loop identifications")
    emerging = network.emerging
    known = {q: t for q, t in network.triples.items() if q not in emerging}
    guess = {q: network.triples[q] for q in emerging}

    def propagate(t0: dict) -> dict:
        overrides = {q: t0[q] for q in emerging}
        return run_schedule(
            network,
            overrides,
            step=step,
            method=method,
            record_times=(),
            end_time=network.ctc_time,
        ).final

    return CtcProblem(
        propagate=propagate,
        pairs=network.ctc_pairs,
        known_triples=known,
        initial_guess=guess,
    )


def solve_ctc(network: Network, *, step: float = DEFAULT_STEP, method: str = "auto", **solver_kwargs):
    """Build the loop problem for this network and run the fixed-point solver."""
    return fixed_point_solve(ctc_problem(network, step=step, method=method), **solver_kwargs)
