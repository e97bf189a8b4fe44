"""Command-line interface.

    heisenq validate NETWORK.json
    heisenq run NETWORK.json [--step S] [--t0 A] [--t1 B] [--csv OUT.csv]
    heisenq algebra NETWORK.json
    heisenq expect NETWORK.json --qubit q1 [--axis z] [--t T]
    heisenq ctc-solve NETWORK.json [--tol --damping --max-iter --multistart --seed]
    heisenq scenario NAME

Exit status is 0 on success (valid spec, converged solve, passing
scenario) and nonzero otherwise, so the commands compose in shell scripts.
"""

from __future__ import annotations

import csv
import json
import math
import sys

import click

from .algebra import classify_pair, generated_algebra, hilbert_dimension, parameter_count
from .dynamics import DEFAULT_STEP, EvolutionError
from .gates import GatePreconditionError
from .network import (
    NetworkSpecError,
    build_network,
    expectation_rows,
    run_schedule,
    solve_ctc,
    validate_network,
)
from .qnum import attribute_of
from .scenarios import SCENARIO_NAMES, run_scenario


@click.group()
def main():
    """Heisenberg-picture qubit networks, gates, and loop consistency."""


def _load(spec_file):
    try:
        with open(spec_file) as fh:
            spec = json.load(fh)
    except json.JSONDecodeError as exc:
        click.echo(f"not valid JSON: {exc}", err=True)
        sys.exit(1)
    try:
        return build_network(spec)
    except NetworkSpecError as exc:
        for p in exc.problems:
            click.echo(f"problem: {p}", err=True)
        sys.exit(1)


@main.command()
@click.argument("spec_file", type=click.Path(exists=True, dir_okay=False))
def validate(spec_file):
    """Check a network spec file; list problems, exit 1 if any."""
    try:
        with open(spec_file) as fh:
            spec = json.load(fh)
    except json.JSONDecodeError as exc:
        click.echo(f"not valid JSON: {exc}")
        sys.exit(1)
    problems = validate_network(spec)
    for p in problems:
        click.echo(f"problem: {p}")
    if problems:
        sys.exit(1)
    click.echo("ok")


@main.command()
@click.argument("spec_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--step", default=DEFAULT_STEP, show_default=True,
              help="Integrator step; with --csv also the sampling interval.")
@click.option("--t0", default=0.0, show_default=True, help="First sample time.")
@click.option("--t1", default=None, type=float,
              help="Last sample time.  [default: schedule end]")
@click.option("--csv", "csv_path", default=None,
              type=click.Path(dir_okay=False, writable=True),
              help="Write time,qubit,axis,expectation,sharp rows to this file.")
@click.option("--method", default="auto",
              type=click.Choice(["auto", "ode", "closed"]), show_default=True)
def run(spec_file, step, t0, t1, csv_path, method):
    """Run the schedule from the declared descriptors; report expectations."""
    network = _load(spec_file)
    end = float(network.duration)
    if t1 is None:
        t1 = end
    if not 0.0 <= t0 <= t1 <= end + 1e-9:
        click.echo(f"need 0 <= t0 <= t1 <= {end:g}", err=True)
        sys.exit(1)
    if network.ctc_pairs:
        click.echo("note: spec has loop identifications; running the declared "
                   "descriptors as-is (use ctc-solve for consistency)")
    if csv_path is not None:
        n = int((t1 - t0) / step + 1e-9)
        times = [t0 + k * step for k in range(n + 1)]
        if times[-1] < t1 - 1e-9:
            times.append(t1)
    else:
        times = [float(k) for k in range(math.ceil(t0 - 1e-9), int(t1 + 1e-9) + 1)]
    try:
        result = run_schedule(network, step=step, method=method, record_times=times)
    except (EvolutionError, GatePreconditionError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    rows = expectation_rows(network, result)
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time", "qubit", "axis", "expectation", "sharp"])
            for t, q, ax, value, sharp in rows:
                writer.writerow([f"{t:.9g}", q, ax, f"{value:.12g}", int(sharp)])
        click.echo(f"wrote {len(rows)} rows to {csv_path} "
                   f"(methods: {', '.join(result.methods)})")
    else:
        click.echo(f"{'time':>8}  {'qubit':<8} {'axis':<4} "
                   f"{'expectation':>14}  sharp")
        for t, q, ax, value, sharp in rows:
            click.echo(f"{t:8.3f}  {q:<8} {ax:<4} {value:14.9f}  {int(sharp)}")
        click.echo(f"integration paths used: {', '.join(result.methods)}")


@main.command()
@click.argument("spec_file", type=click.Path(exists=True, dir_okay=False))
def algebra(spec_file):
    """Describe spans, pair relations, and the generated algebra."""
    network = _load(spec_file)
    qubits = list(network.triples)
    click.echo(f"carrier dimension: {network.dim}")
    for a_idx, a in enumerate(qubits):
        for b in qubits[a_idx + 1:]:
            kind = classify_pair(network.triples[a], network.triples[b])
            click.echo(f"pair {a}, {b}: {kind}")
    span = generated_algebra(
        [c for t in network.triples.values() for c in t.components]
    )
    report = hilbert_dimension(span)
    click.echo(f"generated algebra dimension: {report.algebra_dim}"
               + (" (full matrix algebra)" if report.is_full else ""))
    if report.hilbert_dim is not None:
        click.echo(f"acts irreducibly on a {report.hilbert_dim}-dim Hilbert space")
    else:
        click.echo(f"centre dimension {report.center_dim}; no single Hilbert "
                   f"dimension attributable")
    n = len(qubits)
    click.echo(f"descriptor parameters for {n} qubit(s): "
               f"{parameter_count(n, 'maximally-noncommuting')} if maximally "
               f"non-commuting, {parameter_count(n, 'commuting')} if commuting")


@main.command()
@click.argument("spec_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--qubit", required=True, help="Qubit id from the spec.")
@click.option("--axis", default="z", type=click.Choice(["x", "y", "z"]),
              show_default=True)
@click.option("--t", "time", default=None, type=float,
              help="Sample time.  [default: schedule end]")
@click.option("--step", default=DEFAULT_STEP, show_default=True)
def expect(spec_file, qubit, axis, time, step):
    """Expectation and sharpness of one descriptor component at time t."""
    network = _load(spec_file)
    if qubit not in network.triples:
        click.echo(f"unknown qubit {qubit!r}", err=True)
        sys.exit(1)
    if time is None:
        time = float(network.duration)
    try:
        result = run_schedule(network, step=step, record_times=[time])
    except (ValueError, EvolutionError, GatePreconditionError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    triples = result.records[-1][1]
    value, sharp = attribute_of(network.state, triples[qubit], axis, tol=1e-6)
    click.echo(f"<{qubit}.{axis}(t={time:g})> = {value:.12g}  "
               f"({'sharp' if sharp else 'not sharp'})")


@main.command(name="ctc-solve")
@click.argument("spec_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--tol", default=1e-9, show_default=True)
@click.option("--damping", default=0.5, show_default=True)
@click.option("--max-iter", default=200, show_default=True)
@click.option("--multistart", default=8, show_default=True,
              help="Random restarts after the declared guess fails.")
@click.option("--seed", default=0, show_default=True)
@click.option("--sharp-z", is_flag=True,
              help="Restrict iterates to sharp configurations (classical shadow).")
@click.option("--step", default=DEFAULT_STEP, show_default=True)
def ctc_solve(spec_file, tol, damping, max_iter, multistart, seed, sharp_z, step):
    """Solve the loop-consistency problem; exit 1 when no solution is found."""
    network = _load(spec_file)
    if not network.ctc_pairs:
        click.echo("spec has no loop identifications", err=True)
        sys.exit(1)
    try:
        result = solve_ctc(
            network,
            step=step,
            tol=tol,
            damping=damping,
            max_iter=max_iter,
            multistart=multistart,
            seed=seed,
            sharp_z=sharp_z,
        )
    except (EvolutionError, GatePreconditionError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    status = "converged" if result.converged else "did not converge"
    click.echo(f"{status}: residual {result.residual:.3e} after "
               f"{result.iterations} iteration(s), {result.restarts} random "
               f"restart(s); {result.reason}")
    for q in sorted(result.triples):
        parts = []
        for ax in "xyz":
            value, sharp = attribute_of(network.state, result.triples[q], ax)
            parts.append(f"{ax}={value:+.6f}{'*' if sharp else ' '}")
        click.echo(f"  {q}(0): " + "  ".join(parts) + "   (* = sharp)")
    sys.exit(0 if result.converged else 1)


@main.command()
@click.argument("name", type=click.Choice(SCENARIO_NAMES))
@click.option("--step", default=DEFAULT_STEP, show_default=True,
              help="Integrator step (model-theory only).")
def scenario(name, step):
    """Run a packaged worked scenario and report its checks."""
    kwargs = {"step": step} if name == "model-theory" else {}
    report = run_scenario(name, **kwargs)
    for line in report.lines:
        click.echo(line)
    click.echo(f"scenario {name}: {'PASS' if report.passed else 'FAIL'}")
    sys.exit(0 if report.passed else 1)


if __name__ == "__main__":
    main()
