"""Simulation and stability checks for hybrid systems with memory."""

import json

from ._hymem import (
    ConfigError,
    Error,
    InfeasibleError,
    contraction_factor,
    example1_certificate,
    example2_rates,
    expm,
    run_cli,
    solve_discrete_lyapunov,
    spectral_radius,
)
from ._hymem import simulate as _simulate

__all__ = [
    "ConfigError",
    "Error",
    "InfeasibleError",
    "check",
    "contraction_factor",
    "example1_certificate",
    "example2_rates",
    "expm",
    "run_cli",
    "simulate",
    "solve_discrete_lyapunov",
    "spectral_radius",
]


def simulate(system="example1", overrides=(), **options):
    """Simulates one solution; returns forward samples and the run summary."""
    out = _simulate(system, list(overrides), **options)
    out["summary"] = json.loads(out.pop("summary_json"))
    return out


def check(command, system, samples=1000, seed=0, overrides=(), slack=None):
    """Runs a check-* command and returns (exit code, report dict)."""
    args = [command, "--system", system, "--samples", str(samples), "--seed", str(seed)]
    for kv in overrides:
        args += ["--set", kv]
    if slack is not None:
        args += ["--slack", repr(slack)]
    code, out, err = run_cli(args)
    if code >= 2:
        raise Error(err.strip())
    return code, json.loads(out)
