"""Finite-dimensional operator algebra utilities.

Everything here works on the real *-algebra generated by descriptor
components inside M_N(C), treated as a complex linear space with the
Hilbert-Schmidt inner product <a, b> = Tr(a^dag b).  The central quantities:

* the linear span of a set of operators (an orthonormalised basis),
* the algebra they generate (adjoin identity, close under products),
* the commutant of that algebra inside M_N,
* structural classification of qubit pairs: componentwise-commuting,
  maximally non-commuting (identical spans), or neither.

Dimensions are always complex dimensions of the spanned subspace of M_N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qnum import DescriptorTriple

RANK_TOL = 1e-8
EVOLVED_RANK_TOL = 1e-6


@dataclass(frozen=True)
class AlgebraSpan:
    """Orthonormal basis (rows of `basis`, each (N, N)) of an operator subspace."""

    basis: np.ndarray  # (dim, N, N), Hilbert-Schmidt orthonormal
    carrier_dim: int

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def contains(self, a: np.ndarray, tol: float = RANK_TOL) -> bool:
        a = np.asarray(a, dtype=complex)
        proj = np.zeros_like(a)
        for b in self.basis:
            proj = proj + np.tensordot(b.conj(), a, axes=2) * b
        scale = max(1.0, float(np.abs(a).max()))
        return bool(np.abs(a - proj).max() <= tol * scale)


def _orthonormalise(mats: np.ndarray, tol: float) -> np.ndarray:
    """SVD-orthonormalise a stack of (N, N) matrices; drop near-null directions."""
    if len(mats) == 0:
        return mats.reshape(0, 0, 0)
    n = mats.shape[1]
    flat = mats.reshape(len(mats), n * n)
    _, s, vh = np.linalg.svd(flat, full_matrices=False)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    return vh[:rank].reshape(rank, n, n)


def linear_span(operators, tol: float = RANK_TOL) -> AlgebraSpan:
    ops = np.stack([np.asarray(a, dtype=complex) for a in operators])
    basis = _orthonormalise(ops, tol)
    return AlgebraSpan(basis=basis, carrier_dim=ops.shape[1])


def generated_algebra(operators, tol: float = RANK_TOL) -> AlgebraSpan:
    """Unital algebra generated by the operators, closed under products.

    Iterates: orthonormalise the current span, adjoin all pairwise products
    of basis elements, repeat until the dimension stops growing.  Since the
    generators are Hermitian in every use here, closure under products gives
    closure under adjoints too, but we do not rely on that: adjoints of the
    generators are adjoined explicitly.
    """
    gens = [np.asarray(a, dtype=complex) for a in operators]
    if not gens:
        raise ValueError("need at least one generator")
    n = gens[0].shape[0]
    work = [np.eye(n, dtype=complex)]
    work.extend(gens)
    work.extend(g.conj().T for g in gens)
    basis = _orthonormalise(np.stack(work), tol)
    while True:
        dim = basis.shape[0]
        if dim >= n * n:
            break
        prods = np.einsum("aij,bjk->abik", basis, basis).reshape(-1, n, n)
        basis = _orthonormalise(np.concatenate([basis, prods]), tol)
        if basis.shape[0] == dim:
            break
    return AlgebraSpan(basis=basis, carrier_dim=n)


def commutant(span: AlgebraSpan, tol: float = RANK_TOL) -> AlgebraSpan:
    """All operators commuting with every basis element of `span`.

    Solved as the joint nullspace of the stacked maps x -> b x - x b.
    """
    n = span.carrier_dim
    eye = np.eye(n)
    blocks = []
    for b in span.basis:
        blocks.append(np.kron(b, eye) - np.kron(eye, b.T))
    m = np.concatenate(blocks, axis=0)
    _, s, vh = np.linalg.svd(m)
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 1.0)))
    null = vh[rank:].conj()
    return AlgebraSpan(basis=null.reshape(-1, n, n), carrier_dim=n)


def span_intersection(a: AlgebraSpan, b: AlgebraSpan, tol: float = RANK_TOL) -> AlgebraSpan:
    """Intersection of two operator subspaces (via projector product nullspace)."""
    if a.carrier_dim != b.carrier_dim:
        raise ValueError("spans live on different carriers")
    n = a.carrier_dim
    fa = a.basis.reshape(a.dim, n * n)
    fb = b.basis.reshape(b.dim, n * n)
    pa = fa.conj().T @ fa
    pb = fb.conj().T @ fb
    # x in both spans iff (1 - pa) x = 0 and (1 - pb) x = 0
    m = np.concatenate([np.eye(n * n) - pa, np.eye(n * n) - pb])
    _, s, vh = np.linalg.svd(m)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    return AlgebraSpan(basis=vh[rank:].conj().reshape(-1, n, n), carrier_dim=n)


def classify_pair(
    a: DescriptorTriple, b: DescriptorTriple, tol: float = RANK_TOL
) -> str:
    """Structural relation between two qubits sharing one carrier.

    Returns one of:

    * ``"commuting"``     -- every component of a commutes with every
      component of b (the orthodox, tensor-product situation),
    * ``"maximally-noncommuting"`` -- the two triples span the *same*
      3-dimensional operator subspace,
    * ``"general"``       -- anything in between.
    """
    if a.dim != b.dim:
        raise ValueError("triples live on different carriers")
    worst = 0.0
    for ca in a.components:
        for cb in b.components:
            worst = max(worst, float(np.abs(ca @ cb - cb @ ca).max()))
    if worst <= tol * 10:
        return "commuting"
    sa = linear_span(a.components, tol)
    sb = linear_span(b.components, tol)
    if sa.dim == 3 and sb.dim == 3:
        joint = linear_span(np.concatenate([sa.basis, sb.basis]), tol)
        if joint.dim == 3:
            return "maximally-noncommuting"
    return "general"


@dataclass(frozen=True)
class DimensionReport:
    algebra_dim: int
    carrier_dim: int
    is_full: bool
    hilbert_dim: int | None  # inferred when determinable, else None
    center_dim: int


def hilbert_dimension(span: AlgebraSpan, tol: float = RANK_TOL) -> DimensionReport:
    """Dimension of the Hilbert space the algebra 'really' acts on.

    When the generated algebra is all of M_N the answer is the carrier
    dimension N.  When it is a proper subalgebra, the algebra may be a full
    matrix algebra M_k represented with multiplicity; that holds exactly when
    the centre is trivial (dim 1) and the algebra dimension is a perfect
    square k^2, in which case k is reported.  Otherwise hilbert_dim is None
    and only the algebra dimension is meaningful.
    """
    n = span.carrier_dim
    d = span.dim
    if d == n * n:
        return DimensionReport(d, n, True, n, 1)
    com = commutant(span, tol)
    centre = span_intersection(span, com, tol)
    k = int(round(np.sqrt(d)))
    if centre.dim == 1 and k * k == d:
        return DimensionReport(d, n, False, k, centre.dim)
    return DimensionReport(d, n, False, None, centre.dim)


def anticommutator_trace_check(a: np.ndarray, b: np.ndarray, tol: float = 1e-9):
    """Does {a, b} = Tr(a b) * 1 hold?  Returns (ok, residual).

    This is the defining relation of components of maximally non-commuting
    qubits on a shared 2-dim carrier; the anticommutator of two unit-length
    Hermitian directions collapses to the scalar Tr(a b) (= 2 nu with nu the
    cosine of the angle between the descriptor directions).  Only the 2-dim
    form is meaningful, so other carrier sizes are rejected.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise ValueError("anticommutator trace check requires a 2-dim carrier")
    scalar = np.trace(a @ b).real
    residual = float(np.abs(a @ b + b @ a - scalar * np.eye(2)).max())
    return residual <= tol, residual


def parameter_count(n_qubits: int, sharing: str) -> int:
    """Real parameters needed to specify the descriptors of n qubits.

    ``sharing="maximally-noncommuting"``: all qubits share one 2-dim carrier,
    each triple is a rotated copy of one reference triple -- 3 angles per
    qubit, 3n total.  ``sharing="commuting"``: the orthodox tensor-product
    construction on a 2^n-dim carrier, where a descriptor component is an
    arbitrary traceless Hermitian matrix -- 4^n - 1 real parameters.
    """
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    if sharing == "maximally-noncommuting":
        return 3 * n_qubits
    if sharing == "commuting":
        return 4**n_qubits - 1
    raise ValueError(f"unknown sharing mode {sharing!r}")
