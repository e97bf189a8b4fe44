"""Heisenberg-picture time evolution of descriptor triples.

Descriptors move by conjugation, q(t) = W(t) q(0) W(t)^dag, where each
qubit's unitary obeys

    i dW_a/dt = H_a(t) W_a(t),        W_a(0) = 1,

equivalently dq/dt = i [q, H].  The Hamiltonians are expressions in the
*current* descriptors (hamiltonians.py), which couples the W's of all
participating qubits into one ODE system.

Two integration paths:

* ``closed`` -- when static analysis proves every nonzero Hamiltonian
  evaluates to the same matrix for the whole interval, W = expm(-i H(0) T)
  exactly.  This covers all the gate Hamiltonians, whose construction makes
  the operators they are built from stationary.
* ``ode``    -- fixed-step RK4 on the stacked unitaries with per-stage
  Hamiltonian re-evaluation, per-step unitarity monitoring and polar
  re-unitarisation (see _kernels.py).

``method="auto"`` (default) picks ``closed`` whenever the proof goes
through, else ``ode``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels
from .hamiltonians import HamiltonianExpr, compile_expr, evaluate, free_descriptors
from .qnum import EVOLVED_TOL, DescriptorTriple, validate_pauli_triple

DEFAULT_STEP = 1e-3
DRIFT_HARD_BOUND = 1e-4
REUNITARISED_TOL = 1e-9


class EvolutionError(RuntimeError):
    """Integration hit a hard guard (non-Hermitian H, drift, broken algebra)."""


@dataclass(frozen=True)
class UnitaryTrajectory:
    """Sampled W(t) for one qubit: q(t_k) = W_k q(0) W_k^dag.

    W(times[0]) is the identity.  The ODE path samples every integrator
    step; the closed path stores only the two endpoints (W(t) between them
    is exp(-i H t), available exactly, so nothing is lost).
    """

    times: np.ndarray      # (n_samples,), increasing, times[0] = 0
    unitaries: np.ndarray  # (n_samples, N, N)
    step: float            # spacing actually used

    @property
    def n_samples(self) -> int:
        return self.times.shape[0]


@dataclass(frozen=True)
class EvolutionResult:
    triples: dict
    unitaries: dict     # qubit -> (N, N); identity for untouched qubits
    trajectories: dict  # qubit -> UnitaryTrajectory
    method: str         # "closed" or "ode"
    worst_hermiticity: float
    worst_drift: float


def rotate_x(triple: DescriptorTriple, angle: float) -> DescriptorTriple:
    """Conjugate by exp(-i angle/2 sigma_x) in descriptor space.

    x stays put; y' = cos(angle) y + sin(angle) z; z' = cos(angle) z -
    sin(angle) y.  angle = pi is a flip of both y and z.
    """
    c, s = math.cos(angle), math.sin(angle)
    return DescriptorTriple(
        triple.x,
        c * triple.y + s * triple.z,
        c * triple.z - s * triple.y,
    )


def generator_from_trajectory(traj: UnitaryTrajectory, t: float) -> np.ndarray:
    """Finite-difference estimate of the generator H(t) = i (dW/dt) W^dag.

    Central differences around the sample nearest to t, so t must be
    interior to the sampled range.  The estimate is Hermitian up to
    O(step^2) for a trajectory produced by actual dynamics.
    """
    times = traj.times
    if times.shape[0] < 3:
        raise ValueError("trajectory has no interior samples")
    idx = int(np.argmin(np.abs(times - t)))
    idx = min(max(idx, 1), times.shape[0] - 2)
    if not times[0] < t < times[-1]:
        raise ValueError(
            f"t={t:g} is not interior to the sampled range "
            f"[{times[0]:g}, {times[-1]:g}]"
        )
    w_prev = traj.unitaries[idx - 1]
    w_next = traj.unitaries[idx + 1]
    dw = (w_next - w_prev) / (times[idx + 1] - times[idx - 1])
    return 1j * dw @ traj.unitaries[idx].conj().T


def tilt_angle(t: float) -> float:
    """alpha(t) = 2 arctan(tanh t): solves d(alpha)/dt = 2 cos(alpha), alpha(0)=0.

    This is the tilt acquired by a qubit driven by H = (1/4){{q_z, p_z}, q_x}
    against a partner p whose z-descriptor stays sharp; the effective field
    cos(alpha) sigma_x self-weakens as the qubit tilts away, so alpha
    saturates at pi/2.
    """
    return 2.0 * math.atan(math.tanh(t))


def _nonzero(hamiltonians) -> dict:
    active = {}
    for q, expr in hamiltonians.items():
        if expr is None:
            continue
        if not isinstance(expr, HamiltonianExpr):
            raise TypeError(f"Hamiltonian for {q!r} is not an expression: {expr!r}")
        active[q] = expr
    return active


def constant_hamiltonian_analysis(triples, active, tol: float = 1e-9):
    """Prove (or fail to prove) that every active Hamiltonian is constant.

    A descriptor component (q, ax) is *stationary* when its qubit has no
    Hamiltonian, or when the qubit's Hamiltonian is constant and commutes
    with that component at t=0.  A Hamiltonian is *constant* when every
    component it reads is stationary.  The two notions are mutually
    recursive; the greatest fixed point is computed by starting from
    "everything stationary" and deleting components until stable.  Anything
    surviving really is stationary (its time derivative vanishes as long as
    the others hold, and they do, by uniqueness of the ODE solution).

    Returns (all_constant, h0) with h0 the evaluated t=0 Hamiltonians.
    """
    refs = {q: free_descriptors(expr) for q, expr in active.items()}
    h0 = {q: evaluate(expr, triples) for q, expr in active.items()}
    stationary = {(q, ax) for q in triples for ax in range(3)}
    changed = True
    while changed:
        changed = False
        for q in active:
            h_const = refs[q] <= stationary
            h = h0[q]
            scale = max(1.0, float(np.abs(h).max()))
            for ax in range(3):
                if (q, ax) not in stationary:
                    continue
                if h_const:
                    c = triples[q].components[ax]
                    if np.abs(c @ h - h @ c).max() <= tol * scale:
                        continue
                stationary.discard((q, ax))
                changed = True
    return all(refs[q] <= stationary for q in active), h0


def evolve(
    triples: dict,
    hamiltonians: dict,
    duration: float,
    *,
    step: float = DEFAULT_STEP,
    method: str = "auto",
    hermit_tol: float = EVOLVED_TOL,
    drift_tol: float = DRIFT_HARD_BOUND,
    check_pauli: bool = True,
) -> EvolutionResult:
    """Evolve every triple for `duration` under the given Hamiltonians.

    `triples` maps qubit id -> DescriptorTriple (one shared carrier);
    `hamiltonians` maps qubit id -> expression (missing or None = free
    evolution, i.e. that qubit's descriptors do not move).  Qubits without a
    Hamiltonian pass through untouched -- same objects, bit-identical.
    """
    if method not in ("auto", "ode", "closed"):
        raise ValueError(f"unknown method {method!r}")
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    qubits = list(triples)
    if not qubits:
        raise ValueError("no qubits")
    dim = triples[qubits[0]].dim
    for q in qubits:
        if triples[q].dim != dim:
            raise ValueError("all triples must share one carrier")

    active = _nonzero(hamiltonians)
    for q in active:
        if q not in triples:
            raise KeyError(f"Hamiltonian given for unknown qubit {q!r}")

    eye = np.eye(dim, dtype=complex)

    def _flat_trajectory(w_final):
        if duration == 0.0:
            times = np.array([0.0])
            samples = np.stack([eye])
        else:
            times = np.array([0.0, duration])
            samples = np.stack([eye, w_final])
        return UnitaryTrajectory(times=times, unitaries=samples, step=duration)

    if not active or duration == 0.0:
        return EvolutionResult(
            triples=dict(triples),
            unitaries={q: eye for q in qubits},
            trajectories={q: _flat_trajectory(eye) for q in qubits},
            method="closed",
            worst_hermiticity=0.0,
            worst_drift=0.0,
        )

    is_constant, h0 = constant_hamiltonian_analysis(triples, active)
    if method == "closed" and not is_constant:
        raise EvolutionError(
            "method='closed' requested but the Hamiltonians could not be "
            "proven constant; use 'ode'"
        )
    use_closed = method == "closed" or (method == "auto" and is_constant)

    worst_herm = 0.0
    unitaries = {q: eye for q in qubits}
    trajectories = {}
    if use_closed:
        for q, h in h0.items():
            res = float(np.abs(h - h.conj().T).max())
            worst_herm = max(worst_herm, res)
            if res > hermit_tol:
                raise EvolutionError(
                    f"Hamiltonian of {q!r} is not Hermitian (residual {res:.3e})"
                )
            unitaries[q] = scipy.linalg.expm(-1j * h * duration)
        worst_drift = 0.0
        method_used = "closed"
    else:
        evolved, trajectories, worst_herm, worst_drift = _integrate(
            triples, active, duration, step, hermit_tol, drift_tol
        )
        unitaries.update(evolved)
        method_used = "ode"
    for q in qubits:
        if q not in trajectories:
            trajectories[q] = _flat_trajectory(unitaries[q])

    out = {}
    for q in qubits:
        if q in active:
            w = unitaries[q]
            comps = np.einsum("ij,ajk,lk->ail", w, triples[q].components, w.conj())
            out[q] = DescriptorTriple.from_components(comps)
        else:
            out[q] = triples[q]

    if check_pauli:
        if method_used == "ode":
            bound = max(10.0 * step**4 * duration, EVOLVED_TOL)
        else:
            bound = EVOLVED_TOL
        for q in active:
            ok, residual = validate_pauli_triple(out[q], bound)
            if not ok:
                raise EvolutionError(
                    f"evolved descriptors of {q!r} broke the Pauli relations "
                    f"(residual {residual:.3e} > {bound:.3e})"
                )

    return EvolutionResult(
        triples=out,
        unitaries=unitaries,
        trajectories=trajectories,
        method=method_used,
        worst_hermiticity=worst_herm,
        worst_drift=worst_drift,
    )


def _integrate(triples, active, duration, step, hermit_tol, drift_tol):
    """Run the RK4 kernel.

    Returns ({qubit: W}, {qubit: UnitaryTrajectory}, worst_herm, worst_drift)
    for the active qubits only.
    """
    active_ids = list(active)
    base_ids = []
    for expr in active.values():
        for ref in sorted({r for r, _ in free_descriptors(expr)}):
            if ref not in base_ids:
                base_ids.append(ref)
    programs = [compile_expr(expr, base_ids) for expr in active.values()]

    dim = triples[active_ids[0]].dim
    n_steps = max(1, math.ceil(duration / step - 1e-12))
    dt = duration / n_steps

    code_rows = []
    consts = []
    prog_start = [0]
    stack_depth = 1
    for prog in programs:
        rows = prog.code.copy()
        for r in range(rows.shape[0]):
            if rows[r, 0] == _kernels._OP_CONST_SCALE:
                rows[r, 1] += len(consts)
        code_rows.append(rows)
        consts.extend(prog.consts.tolist())
        prog_start.append(prog_start[-1] + rows.shape[0])
        stack_depth = max(stack_depth, prog.stack_need)

    code = np.concatenate(code_rows)
    active_index = {q: i for i, q in enumerate(active_ids)}
    if base_ids:
        base = np.stack([np.asarray(triples[q].components) for q in base_ids])
        active_map = np.array(
            [active_index.get(q, -1) for q in base_ids], dtype=np.int64
        )
    else:
        base = np.zeros((0, 3, dim, dim), dtype=complex)
        active_map = np.zeros(0, dtype=np.int64)
    w = np.stack([np.eye(dim, dtype=complex) for _ in active_ids])
    w_traj = np.empty((n_steps + 1, len(active_ids), dim, dim), dtype=np.complex128)

    status, worst_herm, worst_drift = _kernels.rk4_kernel(
        w,
        w_traj,
        np.ascontiguousarray(base, dtype=np.complex128),
        active_map,
        np.ascontiguousarray(code, dtype=np.int64),
        np.asarray(prog_start, dtype=np.int64),
        np.asarray(consts, dtype=np.float64),
        float(dt),
        int(n_steps),
        int(stack_depth),
        float(hermit_tol),
        float(drift_tol),
    )
    if status == _kernels.STATUS_NONHERMITIAN:
        raise EvolutionError(
            f"Hamiltonian evaluation became non-Hermitian during integration "
            f"(residual {worst_herm:.3e} > {hermit_tol:.3e})"
        )
    if status == _kernels.STATUS_DRIFT:
        raise EvolutionError(
            f"unitarity drift {worst_drift:.3e} exceeded the hard bound "
            f"{drift_tol:.3e}"
        )
    evolved = {q: w[i] for q, i in active_index.items()}
    times = dt * np.arange(n_steps + 1)
    trajectories = {
        q: UnitaryTrajectory(times=times, unitaries=w_traj[:, i].copy(), step=dt)
        for q, i in active_index.items()
    }
    return evolved, trajectories, float(worst_herm), float(worst_drift)
