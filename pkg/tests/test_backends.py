"""Kernel backend parity: the numba path must match pure numpy bit for bit."""

import os
import subprocess
import sys

import numpy as np
import pytest

from heisenq._kernels import (
    BACKEND,
    BACKEND_ENV,
    STATUS_OK,
    jit_compile_kernel,
    rk4_kernel_numpy,
)
from heisenq.hamiltonians import compile_expr, parse_expr
from heisenq.qnum import pauli_triple

MODEL_H = "0.25 * acomm(acomm(q1.z, q2.z), q1.x)"


def model_kernel_args(n_steps=200, dt=0.005):
    """Kernel call for the two-qubit drive with q1 active, q2 constant."""
    program = compile_expr(parse_expr(MODEL_H), ["q1", "q2"])
    prog_start = np.array([0, program.code.shape[0]], dtype=np.int64)
    t = pauli_triple()
    base = np.stack([np.stack(t.components), np.stack(t.components)])
    active_map = np.array([0, -1], dtype=np.int64)
    w = np.stack([np.eye(2, dtype=np.complex128)])
    w_traj = np.empty((n_steps + 1, 1, 2, 2), dtype=np.complex128)
    return (
        w, w_traj, base, active_map, program.code, prog_start, program.consts,
        float(dt), n_steps, program.stack_need, 1e-6, 1e-3,
    )


class TestNumpyKernel:
    def test_runs_clean(self):
        args = model_kernel_args()
        status, worst_herm, worst_drift = rk4_kernel_numpy(*args)
        assert status == STATUS_OK
        assert worst_herm < 1e-10
        assert worst_drift < 1e-8

    def test_trajectory_endpoints(self):
        args = model_kernel_args()
        w = args[0]
        w_traj = args[1]
        rk4_kernel_numpy(*args)
        np.testing.assert_array_equal(w_traj[0, 0], np.eye(2))
        np.testing.assert_array_equal(w_traj[-1, 0], w[0])


class TestBackendParity:
    def test_kernels_agree_bit_for_bit(self):
        pytest.importorskip("numba")
        jitted = jit_compile_kernel()

        args_np = model_kernel_args()
        args_nb = model_kernel_args()
        out_np = rk4_kernel_numpy(*args_np)
        out_nb = jitted(*args_nb)

        assert out_np[0] == out_nb[0] == STATUS_OK
        assert out_np[1] == out_nb[1]
        assert out_np[2] == out_nb[2]
        np.testing.assert_array_equal(args_np[0], args_nb[0])
        np.testing.assert_array_equal(args_np[1], args_nb[1])

    def test_guard_statuses_agree(self):
        pytest.importorskip("numba")
        jitted = jit_compile_kernel()
        # giant step so RK4 leaves the unitary group before re-unitarisation
        args_np = model_kernel_args(n_steps=2, dt=40.0)
        args_nb = model_kernel_args(n_steps=2, dt=40.0)
        out_np = rk4_kernel_numpy(*args_np)
        out_nb = jitted(*args_nb)
        assert out_np[0] == out_nb[0] != STATUS_OK
        assert out_np[1] == out_nb[1]
        assert out_np[2] == out_nb[2]


def import_with_backend(value):
    env = dict(os.environ)
    if value is None:
        env.pop(BACKEND_ENV, None)
    else:
        env[BACKEND_ENV] = value
    return subprocess.run(
        [sys.executable, "-c", "import heisenq; print(heisenq.BACKEND)"],
        capture_output=True,
        text=True,
        env=env,
    )


class TestBackendSelection:
    def test_current_backend_is_exported(self):
        import heisenq

        assert heisenq.BACKEND == BACKEND
        assert BACKEND in ("numba", "numpy")

    def test_forced_numpy(self):
        proc = import_with_backend("numpy")
        assert proc.returncode == 0
        assert proc.stdout.strip() == "numpy"

    def test_forced_numba(self):
        pytest.importorskip("numba")
        proc = import_with_backend("numba")
        assert proc.returncode == 0
        assert proc.stdout.strip() == "numba"

    def test_invalid_value_fails_at_import(self):
        proc = import_with_backend("cuda")
        assert proc.returncode != 0
        assert "HEISENQ_BACKEND" in proc.stderr

    def test_scenario_results_match_across_backends(self):
        pytest.importorskip("numba")
        script = (
            "from heisenq.scenarios import packaged_network\n"
            "from heisenq.network import run_schedule, expectation_rows\n"
            "n = packaged_network('model-theory')\n"
            "rows = expectation_rows(n, run_schedule(n, step=0.01))\n"
            "for r in rows:\n"
            "    print('%s,%s,%s,%.17g,%d' % r)\n"
        )
        outputs = {}
        for backend in ("numpy", "numba"):
            env = dict(os.environ, **{BACKEND_ENV: backend})
            proc = subprocess.run(
                [sys.executable, "-c", script],
                capture_output=True,
                text=True,
                env=env,
            )
            assert proc.returncode == 0, proc.stderr
            outputs[backend] = proc.stdout
        assert outputs["numpy"] == outputs["numba"]
