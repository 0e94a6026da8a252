"""Smoke test for the pyfslp extension.

Build and install with

    pip install --no-build-isolation -e crates/python

then run ``python -m pytest python/smoke_test.py`` (or execute this file).
"""

import json
import math

import pytest

import pyfslp


def test_circle_solves_to_the_known_optimum():
    problem = pyfslp.Problem.named("circle")
    report = pyfslp.solve(problem, pyfslp.FslpConfig("aa5"))
    assert report.is_optimal
    assert report.status == "Optimal"
    assert abs(report.objective + 1.0) < 1e-5
    assert report.acceleration == "aa:5"
    assert problem.infeasibility(report.w_star) <= 1e-6
    for h, ratio in report.accepted_steps():
        assert h <= 1e-6 and ratio < 0.5
    assert json.loads(report.to_json())["n_outer"] == report.n_outer


def test_classification_of_fixtures():
    for name, expected in [("circle", "under_determined"), ("circle-ineq", "fully_determined")]:
        problem = pyfslp.Problem.named(name)
        report = pyfslp.solve(problem)
        assert problem.classify(report.w_star) == expected


def test_time_optimal_double_integrator():
    spec = pyfslp.OcpSpec.default("di1d")
    assert spec.analytic_min_time() == pytest.approx(2.0, abs=1e-12)
    problem = pyfslp.Problem.from_spec(spec)
    report = pyfslp.solve(problem, pyfslp.FslpConfig("aa1"))
    assert report.is_optimal
    assert problem.final_time(report.w_star) == pytest.approx(2.0, rel=0.02)


def test_spec_json_round_trip():
    spec = pyfslp.OcpSpec.default("pointmass2d")
    text = spec.to_json()
    assert json.loads(text)["N"] == spec.horizon
    assert pyfslp.OcpSpec.from_json(text).to_json() == text
    with pytest.raises(ValueError):
        pyfslp.OcpSpec.from_json('{"N": 1}')


def test_config_validation():
    cfg = pyfslp.FslpConfig("aa:3", delta0=0.5, sigma_inner=1e-7, max_outer=50)
    assert (cfg.acceleration, cfg.delta0, cfg.sigma_inner, cfg.max_outer) == ("aa:3", 0.5, 1e-7, 50)
    assert pyfslp.FslpConfig.from_json(cfg.to_json()).acceleration == "aa:3"
    with pytest.raises(ValueError):
        pyfslp.FslpConfig("aa0")
    with pytest.raises(ValueError):
        pyfslp.FslpConfig(sigma_inner=0.1)


def test_custom_problem_with_python_callbacks():
    # min -w0 on the unit circle; the only variables enter g
    calls = []

    def g(y):
        calls.append(1)
        return [y[0] ** 2 + y[1] ** 2 - 1.0]

    def jac(y):
        return [[2.0 * y[0], 2.0 * y[1]]]

    problem = pyfslp.Problem.custom([-1.0, 0.0], [[0.0, 0.0]], [], [], [0, 1], g, jac, [0.0, 1.0])
    report = pyfslp.solve(problem)
    assert report.is_optimal
    assert report.g_evals == len(calls)
    assert report.w_star[0] == pytest.approx(1.0, abs=1e-3)


def test_callback_exceptions_propagate():
    def g(y):
        raise RuntimeError("boom")

    problem = pyfslp.Problem.custom([-1.0], [[0.0]], [], [], [0], g, lambda y: [[1.0]], [0.0])
    with pytest.raises(RuntimeError, match="boom"):
        pyfslp.solve(problem)


def test_boxed_lp_solve_and_hex_round_trip():
    inf = math.inf
    # Beale's cycling example, optimum -5/4
    lp = pyfslp.BoxedLp(
        [-0.75, 20.0, -0.5, 6.0],
        [],
        [],
        [[0.25, -8.0, -1.0, 9.0], [0.5, -12.0, -0.5, 3.0], [0.0, 0.0, 1.0, 0.0]],
        [0.0, 0.0, 1.0],
        [0.0] * 4,
        [inf] * 4,
    )
    status, x, objective = lp.solve()
    assert status == "Optimal"
    assert objective == pytest.approx(-1.25, abs=1e-12)
    assert len(x) == lp.n_vars == 4
    assert pyfslp.BoxedLp.from_hex(lp.to_hex()) == lp


def test_bench_writes_outputs(tmp_path):
    rows = pyfslp.run_bench("pointmass2d-free", count=2, seed=1, accels=["none", "aa5"], out=str(tmp_path))
    assert [r[0] for r in rows] == ["FSLP", "AA(5)"]
    assert all(r[3] == r[4] == 2 for r in rows)
    for name in ["table.csv", "long.csv", "manifest.json"]:
        assert (tmp_path / name).exists()
    assert json.loads((tmp_path / "manifest.json").read_text())["seed"] == 1


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
