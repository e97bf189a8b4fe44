"""Quantum numbers, descriptor triples, and the fixed Heisenberg state.

A qubit here is not a state vector: it is a triple of Hermitian matrices
(q_x, q_y, q_z) on a shared finite-dimensional carrier space, obeying the
Pauli relations

    q_i q_j = delta_ij * 1 + i * epsilon_ijk * q_k

componentwise.  Distinct qubits live on the same carrier and their triples
need not commute with each other; two qubits may even share the same
three-dimensional operator span ("maximally non-commuting", see algebra.py).

All physical information sits in the descriptors, which evolve; the state
vector is fixed once at construction time (the common +1 eigenvector of the
chosen z-observables) and never changes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Default tolerances.  Exactly-constructed operators are held to the tight
# bound; anything that went through the ODE integrator gets the loose one.
DEFAULT_TOL = 1e-9
EVOLVED_TOL = 1e-6

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])

# epsilon_ijk as a lookup table
LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _j, _k] = 1.0
    LEVI_CIVITA[_j, _i, _k] = -1.0

AXES = ("x", "y", "z")


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=complex)
    out.flags.writeable = False
    return out


def is_hermitian(a: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    return bool(np.abs(a - a.conj().T).max() <= tol)


@dataclass(frozen=True)
class DescriptorTriple:
    """The three descriptor components of one qubit, as (N, N) arrays."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x))
        object.__setattr__(self, "y", _frozen(self.y))
        object.__setattr__(self, "z", _frozen(self.z))
        if not (self.x.shape == self.y.shape == self.z.shape):
            raise ValueError("descriptor components must share one shape")
        if self.x.ndim != 2 or self.x.shape[0] != self.x.shape[1]:
            raise ValueError("descriptor components must be square matrices")

    @property
    def dim(self) -> int:
        """Carrier-space dimension."""
        return self.x.shape[0]

    @property
    def components(self) -> np.ndarray:
        """Stacked (3, N, N) view in x, y, z order."""
        return np.stack([self.x, self.y, self.z])

    def component(self, axis: int | str) -> np.ndarray:
        if isinstance(axis, str):
            axis = AXES.index(axis)
        return self.components[axis]

    @classmethod
    def from_components(cls, comps) -> "DescriptorTriple":
        comps = np.asarray(comps)
        return cls(comps[0], comps[1], comps[2])


def pauli_triple() -> DescriptorTriple:
    """The reference triple (sigma_x, sigma_y, sigma_z) on a 2-dim carrier."""
    return DescriptorTriple(SIGMA_X, SIGMA_Y, SIGMA_Z)


def tensor_slot_triple(slot: int, n_slots: int) -> DescriptorTriple:
    """Pauli triple acting on tensor factor `slot` (1-based) of `n_slots` factors.

    This is the fully commuting ("orthodox") construction: triples built on
    different slots commute componentwise.
    """
    if not 1 <= slot <= n_slots:
        raise ValueError(f"slot {slot} outside 1..{n_slots}")
    comps = []
    for s in SIGMA:
        m = np.eye(2 ** (slot - 1), dtype=complex)
        m = np.kron(m, s)
        m = np.kron(m, np.eye(2 ** (n_slots - slot), dtype=complex))
        comps.append(m)
    return DescriptorTriple(*comps)


def apply_rotation(rotation: np.ndarray, triple: DescriptorTriple) -> DescriptorTriple:
    """New triple with components R_ij * q_j (a rotated copy in the same span)."""
    rotation = np.asarray(rotation, dtype=float)
    if rotation.shape != (3, 3):
        raise ValueError("rotation must be 3x3")
    comps = np.einsum("ij,jkl->ikl", rotation, triple.components)
    return DescriptorTriple.from_components(comps)


def validate_pauli_triple(triple: DescriptorTriple, tol: float = DEFAULT_TOL):
    """Check Hermiticity and all nine Pauli product relations.

    Returns (ok, worst_residual).  The product relation tested is
    q_i q_j - (delta_ij 1 + i sum_k epsilon_ijk q_k) = 0.
    """
    comps = triple.components
    n = triple.dim
    eye = np.eye(n, dtype=complex)
    worst = 0.0
    for i in range(3):
        worst = max(worst, float(np.abs(comps[i] - comps[i].conj().T).max()))
    for i in range(3):
        for j in range(3):
            expect = (1.0 if i == j else 0.0) * eye
            for k in range(3):
                if LEVI_CIVITA[i, j, k]:
                    expect = expect + 1j * LEVI_CIVITA[i, j, k] * comps[k]
            worst = max(worst, float(np.abs(comps[i] @ comps[j] - expect).max()))
    return worst <= tol, worst


@dataclass(frozen=True)
class HeisenbergState:
    """The fixed state vector.  Constant for the lifetime of a network."""

    vector: np.ndarray

    def __post_init__(self):
        v = np.array(self.vector, dtype=complex).ravel()
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError("state vector must be nonzero")
        v = v / norm
        # deterministic global phase: largest-magnitude amplitude real positive
        k = int(np.argmax(np.abs(v)))
        phase = v[k] / abs(v[k])
        object.__setattr__(self, "vector", _frozen(v / phase))

    @property
    def dim(self) -> int:
        return self.vector.shape[0]


def common_plus_one_state(z_observables, tol: float = DEFAULT_TOL) -> HeisenbergState:
    """Joint +1 eigenvector of all given z-observables.

    Raises ValueError when the joint eigenspace is not one-dimensional (the
    state would be underdetermined) or empty.
    """
    z_observables = [np.asarray(z, dtype=complex) for z in z_observables]
    if not z_observables:
        raise ValueError("need at least one z-observable")
    n = z_observables[0].shape[0]
    basis = np.eye(n, dtype=complex)  # columns span the current candidate space
    for z in z_observables:
        if z.shape != (n, n):
            raise ValueError("z-observables must share one carrier dimension")
        if not is_hermitian(z, tol):
            raise ValueError("z-observable is not Hermitian")
        # restrict to the nullspace of (z - 1) inside the current space
        m = (z - np.eye(n)) @ basis
        _, s, vh = np.linalg.svd(m, full_matrices=True)
        rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 1.0)))
        null = vh[rank:].conj().T  # coordinates w.r.t. current basis columns
        basis = basis @ null
        if basis.shape[1] == 0:
            raise ValueError("no common +1 eigenvector exists")
    if basis.shape[1] != 1:
        raise ValueError(
            f"common +1 eigenspace is {basis.shape[1]}-dimensional; "
            "refusing to pick a state arbitrarily"
        )
    return HeisenbergState(basis[:, 0])


def expectation(state: HeisenbergState, a: np.ndarray, tol: float = DEFAULT_TOL) -> float:
    """<psi| a |psi> for Hermitian a, returned as a real float."""
    a = np.asarray(a, dtype=complex)
    if not is_hermitian(a, tol):
        raise ValueError("expectation of a non-Hermitian operator")
    v = state.vector
    raw = complex(v.conj() @ (a @ v))
    if abs(raw.imag) > tol:
        raise ValueError(f"imaginary part {raw.imag:.3e} exceeds tolerance")
    return raw.real


def is_sharp(state: HeisenbergState, a: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """True when <a>^2 == <a^2> within tol, i.e. the state is an eigenvector."""
    a = np.asarray(a, dtype=complex)
    mean = expectation(state, a, tol)
    second = expectation(state, a @ a, tol)
    return abs(mean * mean - second) <= tol


def attribute_of(
    state: HeisenbergState,
    triple: DescriptorTriple,
    axis: int | str,
    tol: float = DEFAULT_TOL,
):
    """(expectation, sharp) of one descriptor component in the fixed state."""
    a = triple.component(axis)
    return expectation(state, a, tol), is_sharp(state, a, tol)


@dataclass(frozen=True)
class RotationParameters:
    """Best-fit rotation mapping a reference triple onto a target triple."""

    matrix: np.ndarray
    theta: float  # about x, applied first
    phi: float    # about y, applied second
    psi: float    # about z, applied last
    residual: float

    @property
    def angles(self):
        return (self.theta, self.phi, self.psi)


def _euler_xyz(rotation: np.ndarray):
    """Angles (theta, phi, psi) with R = Rz(psi) @ Ry(phi) @ Rx(theta).

    Rotations are applied x first, then y, then z.  Angles are reduced to
    [0, 2*pi); at gimbal lock (|R[2,0]| = 1) theta is set to 0.
    """
    r20 = float(np.clip(rotation[2, 0].real, -1.0, 1.0))
    phi = float(np.arcsin(-r20))
    if abs(r20) < 1.0 - 1e-12:
        theta = float(np.arctan2(rotation[2, 1].real, rotation[2, 2].real))
        psi = float(np.arctan2(rotation[1, 0].real, rotation[0, 0].real))
    else:
        theta = 0.0
        psi = float(np.arctan2(-rotation[0, 1].real, rotation[1, 1].real))
        if r20 > 0:
            psi = -psi
    two_pi = 2 * np.pi
    return theta % two_pi, phi % two_pi, psi % two_pi


def rotation_matrix_xyz(theta: float, phi: float, psi: float) -> np.ndarray:
    """Compose R = Rz(psi) @ Ry(phi) @ Rx(theta)."""
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    cs, ss = np.cos(psi), np.sin(psi)
    rx = np.array([[1, 0, 0], [0, ct, -st], [0, st, ct]])
    ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    rz = np.array([[cs, -ss, 0], [ss, cs, 0], [0, 0, 1]])
    return rz @ ry @ rx


def rotation_parameters(
    triple: DescriptorTriple,
    reference: DescriptorTriple,
    tol: float = DEFAULT_TOL,
) -> RotationParameters:
    """Extract R with triple_i = sum_j R_ij reference_j, plus Euler angles.

    R_ij = Tr(triple_i reference_j) / N, which inverts the linear relation
    because valid triples satisfy Tr(ref_i ref_j) = N delta_ij.  Raises when
    the triple does not actually lie in the reference's span (residual check)
    or when R is not a proper rotation.
    """
    if triple.dim != reference.dim:
        raise ValueError("triples live on different carriers")
    n = triple.dim
    r = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            val = np.trace(triple.components[i] @ reference.components[j]) / n
            if abs(val.imag) > tol:
                raise ValueError("overlap matrix is not real; not a rotated copy")
            r[i, j] = val.real
    if np.abs(r @ r.T - np.eye(3)).max() > max(tol, 1e-9) * 10:
        raise ValueError("extracted matrix is not orthogonal")
    if np.linalg.det(r) < 0:
        raise ValueError("extracted matrix is a reflection, not a rotation")
    rebuilt = np.einsum("ij,jkl->ikl", r, reference.components)
    residual = float(np.abs(rebuilt - triple.components).max())
    if residual > max(tol, 1e-7):
        raise ValueError(
            f"triple is not in the reference span (residual {residual:.3e})"
        )
    theta, phi, psi = _euler_xyz(r)
    return RotationParameters(matrix=r, theta=theta, phi=phi, psi=psi, residual=residual)
