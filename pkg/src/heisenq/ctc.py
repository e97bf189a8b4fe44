"""Self-consistency solving for descriptor loops.

A loop identifies a qubit that *emerges* at the start of the schedule
(descriptors unknown) with a qubit that *enters* the loop at the end: a
solution is an assignment of initial descriptors to every emerging qubit
such that, after propagating the whole schedule, each entering qubit's
final descriptors equal its partner's initial ones.

Because a qubit's descriptors are a rotated copy of a reference triple,
the unknown per emerging qubit is a rotation, and the solver iterates

    guess  ->  project( damping * guess + (1 - damping) * propagated ),

projecting blended components back onto the rotation manifold with an
orthogonal Procrustes fit against the reference triple.  Aligned (sharp)
initial guesses can sit on an invariant set where the iteration bounces
between the two sharp configurations forever -- the operator version of a
classical inconsistency -- so the solver detects period-2 cycles and falls
back to random restarts.

Three independent routes to the same physics live here:

* ``fixed_point_solve``          -- the damped operator iteration,
* ``scalar_self_consistency``    -- bisection on a scalar reduction of the
  loop map, for problems that collapse to one angle,
* ``enumerate_sharp_configurations`` -- brute force over sharp (classical)
  descriptor assignments, which exposes paradoxes as an empty result.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dynamics import rotate_x
from .qnum import DescriptorTriple, apply_rotation


def trace_norm(a: np.ndarray) -> float:
    """Sum of singular values."""
    return float(np.linalg.svd(np.asarray(a, dtype=complex), compute_uv=False).sum())


def triple_distance(a: DescriptorTriple, b: DescriptorTriple) -> float:
    """Largest componentwise trace-norm difference."""
    return max(
        trace_norm(ca - cb) for ca, cb in zip(a.components, b.components)
    )


@dataclass(frozen=True)
class CtcPair:
    emerges: str  # descriptors unknown at t = 0
    enters: str   # its end-of-schedule descriptors must match them


@dataclass
class CtcProblem:
    """A loop-closure problem over a schedule propagation map.

    ``propagate`` maps a complete t=0 triples dict to the end-of-schedule
    triples dict.  ``known_triples`` holds the fixed t=0 descriptors of all
    non-emerging qubits; ``initial_guess`` the declared starting point for
    each emerging qubit; ``references`` the triple whose rotations
    parametrise each unknown (defaults to the initial guess).
    """

    propagate: Callable[[dict], dict]
    pairs: tuple
    known_triples: dict
    initial_guess: dict
    references: dict = field(default_factory=dict)

    def __post_init__(self):
        self.pairs = tuple(self.pairs)
        for pair in self.pairs:
            if pair.emerges not in self.initial_guess:
                raise ValueError(f"no initial guess for emerging qubit {pair.emerges!r}")
        for q, guess in self.initial_guess.items():
            self.references.setdefault(q, guess)


def consistency_residual(start_triples: dict, end_triples: dict, pairs) -> float:
    """max over pairs of triple_distance(start[emerges], end[enters])."""
    return max(
        triple_distance(start_triples[p.emerges], end_triples[p.enters])
        for p in pairs
    )


def nearest_rotated_copy(
    components: np.ndarray, reference: DescriptorTriple
) -> DescriptorTriple:
    """Project arbitrary (3, N, N) components onto rotated copies of `reference`.

    Orthogonal Procrustes: maximise sum_i <components_i, (R ref)_i> over
    rotations R, via SVD of the real overlap matrix with a determinant fix
    to exclude reflections.
    """
    n = reference.dim
    m = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            m[i, j] = np.trace(components[i] @ reference.components[j]).real / n
    u, _s, vt = np.linalg.svd(m)
    r = u @ vt
    if np.linalg.det(r) < 0:
        u[:, -1] = -u[:, -1]
        r = u @ vt
    return apply_rotation(r, reference)


@dataclass
class FixedPointResult:
    converged: bool
    triples: dict          # emerging-qubit id -> solved (or best) initial triple
    network_start: dict    # full t=0 triples for that assignment
    network_end: dict      # propagated end-of-schedule triples
    residual: float
    iterations: int        # iterations spent in the successful (or last) start
    restarts: int          # random restarts consumed before success
    history: list          # residual per iteration of the successful/last start
    reason: str


def _random_rotation(rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, -1] = -q[:, -1]
    return q


def _sharp_candidates(reference: DescriptorTriple):
    """The two sharp-z configurations reachable from a reference triple."""
    return {1: reference, -1: rotate_x(reference, np.pi)}


def fixed_point_solve(
    problem: CtcProblem,
    *,
    damping: float = 0.5,
    tol: float = 1e-9,
    max_iter: int = 200,
    sharp_z: bool = False,
    multistart: int = 8,
    seed: int = 0,
) -> FixedPointResult:
    """Damped fixed-point iteration for loop consistency.

    ``damping`` is the weight kept on the previous guess (0 = undamped).
    ``sharp_z=True`` restricts every iterate to the two sharp-z
    configurations -- the classical shadow of the problem -- in which case
    a period-2 cycle is reported instead of a solution when the loop is
    classically inconsistent.  ``multistart`` random rotations of the
    references are tried after the declared initial guess fails.
    """
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must be in [0, 1)")
    rng = np.random.default_rng(seed)
    cycle_tol = max(tol, 1e-9)

    def starts():
        yield {q: t for q, t in problem.initial_guess.items()}
        for _ in range(multistart):
            yield {
                q: apply_rotation(_random_rotation(rng), ref)
                for q, ref in problem.references.items()
            }

    best = None
    restarts = -1
    for guess in starts():
        restarts += 1
        history = []
        older = None  # guess from two iterations ago, for cycle detection
        reason = f"no convergence within {max_iter} iterations"
        last = None
        for it in range(max_iter):
            t0 = dict(problem.known_triples)
            t0.update(guess)
            t_end = problem.propagate(t0)
            residual = consistency_residual(t0, t_end, problem.pairs)
            history.append(residual)
            last = (guess, t0, t_end, residual, it + 1)
            if residual <= tol:
                return FixedPointResult(
                    converged=True,
                    triples=guess,
                    network_start=t0,
                    network_end=t_end,
                    residual=residual,
                    iterations=it + 1,
                    restarts=restarts,
                    history=history,
                    reason="converged",
                )
            new_guess = {}
            for pair in problem.pairs:
                target = t_end[pair.enters]
                ref = problem.references[pair.emerges]
                if sharp_z:
                    cands = _sharp_candidates(ref)
                    value = min(
                        cands.values(), key=lambda c: triple_distance(c, target)
                    )
                else:
                    blend = (
                        damping * guess[pair.emerges].components
                        + (1.0 - damping) * target.components
                    )
                    value = nearest_rotated_copy(blend, ref)
                new_guess[pair.emerges] = value
            if older is not None:
                dist_cycle = max(
                    triple_distance(new_guess[p.emerges], older[p.emerges])
                    for p in problem.pairs
                )
                dist_move = max(
                    triple_distance(new_guess[p.emerges], guess[p.emerges])
                    for p in problem.pairs
                )
                if dist_cycle <= cycle_tol < dist_move:
                    reason = "period-2 oscillation between descriptor configurations"
                    break
            older = guess
            guess = new_guess
        guess, t0, t_end, residual, iterations = last
        candidate = FixedPointResult(
            converged=False,
            triples=guess,
            network_start=t0,
            network_end=t_end,
            residual=residual,
            iterations=iterations,
            restarts=restarts,
            history=history,
            reason=reason,
        )
        if best is None or candidate.residual < best.residual:
            best = candidate
        if sharp_z:
            # random restarts cannot leave the sharp set; one pass says it all
            break
    assert best is not None
    return best


def scalar_self_consistency(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Root of x = f(x) on [lo, hi] by bisection on g(x) = x - f(x)."""
    g_lo = lo - f(lo)
    g_hi = hi - f(hi)
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    if np.sign(g_lo) == np.sign(g_hi):
        raise ValueError(
            f"g(x) = x - f(x) has no sign change on [{lo:g}, {hi:g}]"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        g_mid = mid - f(mid)
        if g_mid == 0.0 or (hi - lo) <= tol:
            return mid
        if np.sign(g_mid) == np.sign(g_lo):
            lo, g_lo = mid, g_mid
        else:
            hi, g_hi = mid, g_mid
    return 0.5 * (lo + hi)


def enumerate_classical_loops(bits, gate_map, loops, free_values=None):
    """Brute-force the purely classical analogue of a loop network.

    ``bits`` names the classical +-1 bits; ``gate_map`` takes a dict
    bit id -> value and returns the dict the gate produces; each loop
    ``(out_bit, in_bit)`` demands that the value the gate produces at
    out_bit equals the value assigned to in_bit (that is where the output
    re-enters the past).  Bits pinned in ``free_values`` keep that value;
    the rest range over {+1, -1}.

    Returns the list of full assignments (dicts) satisfying every loop.
    An empty list is the classical contradiction; more than one shows the
    classical story failing in the other direction (underdetermination).
    """
    bits = list(bits)
    free_values = dict(free_values or {})
    unknown = [b for b in free_values if b not in bits]
    if unknown:
        raise KeyError(f"pinned values for unknown bits {unknown}")
    for out_bit, in_bit in loops:
        if out_bit not in bits or in_bit not in bits:
            raise KeyError(f"loop ({out_bit!r}, {in_bit!r}) names unknown bits")
    open_bits = [b for b in bits if b not in free_values]
    if len(open_bits) > 20:
        raise ValueError("too many open bits to enumerate")
    consistent = []
    for values in itertools.product((1, -1), repeat=len(open_bits)):
        assignment = dict(free_values)
        assignment.update(zip(open_bits, values))
        produced = gate_map(dict(assignment))
        if all(produced[out_bit] == assignment[in_bit] for out_bit, in_bit in loops):
            consistent.append(assignment)
    return consistent


@dataclass(frozen=True)
class SharpEnumeration:
    """Classical (sharp-z) shadow of a loop problem.

    ``table`` maps each input assignment (one +1/-1 per pair, in pair
    order) to the output assignment it propagates to, or None when the
    output is not sharp.  ``consistent`` lists the fixed points; empty
    means the loop has no classical solution.
    """

    table: dict
    consistent: tuple


def enumerate_sharp_configurations(
    problem: CtcProblem, tol: float = 1e-9
) -> SharpEnumeration:
    n = len(problem.pairs)
    table = {}
    consistent = []
    for mask in range(2**n):
        assignment = tuple(
            1 if (mask >> k) & 1 == 0 else -1 for k in range(n)
        )
        t0 = dict(problem.known_triples)
        for bit, pair in zip(assignment, problem.pairs):
            cands = _sharp_candidates(problem.references[pair.emerges])
            t0[pair.emerges] = cands[bit]
        t_end = problem.propagate(t0)
        out = []
        for pair in problem.pairs:
            cands = _sharp_candidates(problem.references[pair.emerges])
            final = t_end[pair.enters]
            hits = [
                bit for bit, c in cands.items() if triple_distance(c, final) <= tol
            ]
            out.append(hits[0] if hits else None)
        out = tuple(out)
        table[assignment] = None if None in out else out
        if table[assignment] == assignment:
            consistent.append(assignment)
    return SharpEnumeration(table=table, consistent=tuple(consistent))
