"""Integration kernel with selectable backend.

The hot loop -- fixed-step RK4 on a stack of unitaries, re-evaluating every
qubit's compiled Hamiltonian program at each stage -- lives in a single
function written in kernel style (no Python objects, preallocated work
arrays).  It is compiled with numba's ``@njit`` when available and runs as
plain numpy otherwise.

Backend selection, checked once at import time via ``HEISENQ_BACKEND``:

* unset      -- use numba when importable, else numpy
* ``numba``  -- require numba, raise if missing
* ``numpy``  -- force the pure-numpy path even when numba is installed

Status codes returned by the kernel: 0 ok, 1 a Hamiltonian evaluation left
Hermiticity tolerance, 2 unitarity drift exceeded the hard bound before
re-unitarisation.
"""

from __future__ import annotations

import os

import numpy as np

BACKEND_ENV = "HEISENQ_BACKEND"

STATUS_OK = 0
STATUS_NONHERMITIAN = 1
STATUS_DRIFT = 2


def _pick_backend() -> str:
    choice = os.environ.get(BACKEND_ENV, "").strip().lower()
    if choice not in ("", "numba", "numpy"):
        raise RuntimeError(
            f"{BACKEND_ENV} must be 'numba' or 'numpy', not {choice!r}"
        )
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise RuntimeError(f"{BACKEND_ENV}=numba but numba is not importable")
        return "numpy"
    return "numba"


BACKEND = _pick_backend()

# opcode values, kept in sync with hamiltonians.py (plain ints so the kernel
# does not import anything)
_OP_DESC = 0
_OP_IDENT = 1
_OP_CONST_SCALE = 2
_OP_ADD = 3
_OP_MUL = 4
_OP_ACOMM = 5
_OP_ICOMM = 6


def _rk4_kernel_impl(
    w,            # (n_active, N, N) complex128, updated in place
    w_traj,       # (n_steps + 1, n_active, N, N) complex128, per-step record
    base,         # (n_ref, 3, N, N) complex128, initial descriptors
    active_map,   # (n_ref,) int64: index into w, or -1 for a constant qubit
    code,         # (total_ops, 3) int64, concatenated postfix programs
    prog_start,   # (n_active + 1,) int64, program i is code[prog_start[i]:prog_start[i+1]]
    consts,       # (n_consts,) float64
    dt,           # float64 step
    n_steps,      # int64
    stack_depth,  # int64 workspace height for the postfix evaluator
    hermit_tol,   # float64
    drift_tol,    # float64
):
    n_active = w.shape[0]
    n_ref = base.shape[0]
    n = w.shape[1]
    eye = np.eye(n, dtype=np.complex128)

    for i in range(n_active):
        w_traj[0, i] = w[i]

    cur = np.empty((n_ref, 3, n, n), dtype=np.complex128)
    for j in range(n_ref):
        if active_map[j] < 0:
            cur[j] = base[j]

    y = np.empty((n_active, n, n), dtype=np.complex128)
    ks = np.empty((4, n_active, n, n), dtype=np.complex128)
    stack = np.empty((stack_depth, n, n), dtype=np.complex128)

    stage_c = (0.0, 0.5, 0.5, 1.0)

    worst_herm = 0.0
    worst_drift = 0.0

    for k in range(n_steps):
        for s in range(4):
            coeff = stage_c[s] * dt
            for i in range(n_active):
                if s == 0:
                    y[i] = w[i]
                else:
                    y[i] = w[i] + coeff * ks[s - 1, i]
            for j in range(n_ref):
                ai = active_map[j]
                if ai >= 0:
                    yc = np.ascontiguousarray(y[ai].conj().T)
                    for ax in range(3):
                        cur[j, ax] = y[ai] @ base[j, ax] @ yc
            for i in range(n_active):
                sp = 0
                for r in range(prog_start[i], prog_start[i + 1]):
                    op = code[r, 0]
                    a1 = code[r, 1]
                    a2 = code[r, 2]
                    if op == _OP_DESC:
                        stack[sp] = cur[a1, a2]
                        sp += 1
                    elif op == _OP_IDENT:
                        stack[sp] = eye
                        sp += 1
                    elif op == _OP_CONST_SCALE:
                        stack[sp - 1] = stack[sp - 1] * consts[a1]
                    elif op == _OP_ADD:
                        stack[sp - 2] = stack[sp - 2] + stack[sp - 1]
                        sp -= 1
                    elif op == _OP_MUL:
                        stack[sp - 2] = stack[sp - 2] @ stack[sp - 1]
                        sp -= 1
                    elif op == _OP_ACOMM:
                        tmp = stack[sp - 2] @ stack[sp - 1] + stack[sp - 1] @ stack[sp - 2]
                        stack[sp - 2] = tmp
                        sp -= 1
                    else:  # _OP_ICOMM
                        tmp = stack[sp - 2] @ stack[sp - 1] - stack[sp - 1] @ stack[sp - 2]
                        stack[sp - 2] = 1j * tmp
                        sp -= 1
                h = stack[0]
                res = np.abs(h - h.conj().T).max()
                if res > hermit_tol:
                    return STATUS_NONHERMITIAN, res, worst_drift
                if res > worst_herm:
                    worst_herm = res
                ks[s, i] = -1j * (stack[0] @ y[i])
        for i in range(n_active):
            w[i] = w[i] + (dt / 6.0) * (
                ks[0, i] + 2.0 * ks[1, i] + 2.0 * ks[2, i] + ks[3, i]
            )
            wc = np.ascontiguousarray(w[i].conj().T)
            drift = np.abs(wc @ w[i] - eye).max()
            if drift > drift_tol:
                return STATUS_DRIFT, worst_herm, drift
            if drift > worst_drift:
                worst_drift = drift
            u, _sv, vh = np.linalg.svd(w[i])
            w[i] = u @ vh
            w_traj[k + 1, i] = w[i]
    return STATUS_OK, worst_herm, worst_drift


rk4_kernel_numpy = _rk4_kernel_impl

_jitted = None


def jit_compile_kernel():
    """Return the numba-compiled kernel, compiling on first use."""
    global _jitted
    if _jitted is None:
        from numba import njit

        _jitted = njit(cache=True)(_rk4_kernel_impl)
    return _jitted


if BACKEND == "numba":
    rk4_kernel = jit_compile_kernel()
else:
    rk4_kernel = rk4_kernel_numpy
