import json
import os
import subprocess

import numpy as np
import pytest
import scipy.linalg

import hymem


def test_expm_matches_scipy():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.normal(size=(4, 4))
        np.testing.assert_allclose(hymem.expm(a), scipy.linalg.expm(a), rtol=1e-12, atol=1e-12)


def test_discrete_lyapunov_residual():
    h = np.array([[0.5, 0.2], [-0.1, 0.3]])
    p = hymem.solve_discrete_lyapunov(h)
    np.testing.assert_allclose(h.T @ p @ h - p, -np.eye(2), atol=1e-12)
    np.testing.assert_allclose(p, scipy.linalg.solve_discrete_lyapunov(h.T, np.eye(2)), atol=1e-12)
    with pytest.raises(hymem.InfeasibleError):
        hymem.solve_discrete_lyapunov(2.0 * np.eye(2))


def test_example1_certificate():
    c = hymem.example1_certificate()
    assert c["spectral_radius"] < 1.0
    assert c["residual"] <= 1e-10
    assert c["rho"] < 1.0
    h, p = c["H"], c["P"]
    # rho is the largest generalized eigenvalue of (H^T P H, P)
    lam = scipy.linalg.eigh(h.T @ p @ h, p, eigvals_only=True)
    assert abs(lam.max() - c["rho"]) < 1e-9
    assert hymem.example1_certificate(lyapunov_decay=0.6)["rho"] < c["rho"]


def test_simulate_example2_decays():
    r = hymem.simulate("example2", t_max=5.0)
    assert r["termination"] == "horizon_reached"
    assert r["x"].shape == (len(r["t"]), 2)
    assert r["state_names"] == ["x", "tau"]
    assert r["jumps"] == 49
    assert r["summary"]["final_distW"] < 1e-3
    # the clock resets at every jump
    assert np.all(r["x"][:, 1] <= 0.1 + 1e-9)


def test_config_errors_raise():
    with pytest.raises(hymem.ConfigError):
        hymem.simulate("example1", ["K=[1,2,3]"])


def test_checks():
    code, rep = hymem.check("check-krasovskii", "example2", samples=300)
    assert code == 0 and rep["violation_count"] == 0
    code, rep = hymem.check("check-razumikhin", "example1", samples=600, overrides=["K=[0,0]"])
    assert code == 1 and rep["violation_count"] > 0
    assert hymem.check("check-halanay", "example1", samples=200, seed=4) == hymem.check(
        "check-halanay", "example1", samples=200, seed=4
    )


def test_command_line_tool(tmp_path):
    exe = os.environ.get("HYMEM_CLI")
    if not exe:
        pytest.skip("HYMEM_CLI not set")
    assert subprocess.run([exe, "--help"], capture_output=True).returncode == 0
    out = tmp_path / "traj.csv"
    res = subprocess.run(
        [exe, "simulate", "--system", "example2", "--t-max", "1", "--out", str(out)], capture_output=True, text=True
    )
    assert res.returncode == 0, res.stderr
    assert json.loads(res.stdout)["termination"] == "horizon_reached"
    assert out.read_text().splitlines()[0] == "t,j,x,tau"
    assert subprocess.run([exe, "frobnicate"], capture_output=True).returncode == 2
