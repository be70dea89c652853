"""End-to-end acceptance checks, one test per release criterion.

Each test states its criterion number; tolerances and runtime budgets are
part of the contract. Reference minimizers are computed by independent
means (analytic solves or damped Newton), never by the solver under test.
"""

import math

import numpy as np
import pytest

from accelopt.cli import CONFIG_DEFAULTS, execute_run
from accelopt.engine import (AcceleratedSolver, CoefficientStrategy,
                             EngineConfig, IndicatorPolicy, estimate_h_star)
from accelopt.errors import ParseError
from accelopt.problems import (make_logistic, make_quadratic, parse_libsvm,
                               random_sparse_dataset, serialize_libsvm,
                               synthetic_logistic_dataset)
from accelopt.restart import (RestartConfig, run_restarted,
                              solver_handle_from_engine, uaf_rate_constants)
from accelopt.sequences import (CheckOutcome, SequenceCase, check_bjl,
                                check_seq_lemma_1, check_seq_lemma_2,
                                check_young_type)
from accelopt.taylor import logistic_smoothness_constant, model_error_bounds

DIM = 20
N_SAMPLES = 500


def newton_reference(oracle, x0, tol=1e-12):
    """Independent damped-Newton minimizer for smooth reference solutions."""
    x = np.asarray(x0, dtype=float).copy()
    for _ in range(200):
        g = oracle.gradient(x)
        if float(np.linalg.norm(g)) < tol:
            break
        H = oracle.dense_hessian(x)
        step = np.linalg.solve(H + 1e-12 * np.eye(len(x)), -g)
        t, fx = 1.0, oracle.value(x)
        while t > 1e-10 and oracle.value(x + t * step) > fx:
            t *= 0.5
        x = x + t * step
    assert float(np.linalg.norm(oracle.gradient(x))) < 1e-10
    return x, oracle.value(x)


def quadratic_problem():
    rng = np.random.default_rng(0)
    Q = np.linspace(1.0, 10.0, DIM)
    oracle = make_quadratic(Q, rng.standard_normal(DIM))
    return oracle, np.asarray(oracle.x_star, float), float(oracle.f_star)


def logistic_problem():
    ds = synthetic_logistic_dataset(N_SAMPLES, DIM, 0)
    oracle = make_logistic(ds)
    x_ref, f_ref = newton_reference(oracle, np.zeros(DIM))
    return oracle, x_ref, f_ref


@pytest.fixture(scope="module")
def exact_runs():
    """Criteria 1 and 2 share these two 200-iteration exact-schedule runs."""
    runs = []
    for oracle, x_ref, f_ref in (quadratic_problem(), logistic_problem()):
        cfg = EngineConfig(p=2, nu=1.0, L=10.0, q=3.0, theta1=1.0,
                           theta2=1.0, strategy=CoefficientStrategy.EXACT,
                           max_iter=200)
        result = AcceleratedSolver(oracle, cfg).run(np.zeros(oracle.dim))
        runs.append((cfg, result, oracle, x_ref, f_ref))
    return runs


def test_criterion_1_certificate_bound(exact_runs):
    for cfg, result, oracle, x_ref, f_ref in exact_runs:
        h_ref = float(np.linalg.norm(x_ref) ** cfg.q) / cfg.q
        assert len(result.trace) >= 1
        for rec in result.trace:
            assert rec.iteration <= 200
            assert rec.f_value - f_ref <= h_ref / rec.A + 1e-9, (
                f"certificate violated at iteration {rec.iteration}")


def test_criterion_2_total_weight_growth(exact_runs):
    for cfg, result, oracle, x_ref, f_ref in exact_runs:
        factor = cfg.theta1 * cfg.c_q * cfg.gamma / cfg.L
        s = cfg.p + cfg.nu
        for rec in result.trace:
            bound = factor * (rec.iteration / s) ** s
            assert rec.A >= bound * (1.0 - 1e-10), (
                f"growth bound violated at iteration {rec.iteration}")


def test_criterion_3_heuristic_indicator_band():
    oracle, _, _ = logistic_problem()
    x0 = np.zeros(DIM)
    passed = False
    for exp in range(-3, 4):
        L = 10.0 ** exp
        pilot = EngineConfig(p=2, nu=1.0, L=L, q=2.0, theta1=0.5,
                             theta2=0.67,
                             strategy=CoefficientStrategy.BISECTION)
        h_star = estimate_h_star(oracle, pilot, x0)
        cfg = EngineConfig(p=2, nu=1.0, L=L, q=2.0, alpha=1.0, theta1=0.5,
                           theta2=0.67,
                           strategy=CoefficientStrategy.HEURISTIC,
                           h_star_estimate=h_star, max_iter=200,
                           indicator_policy=IndicatorPolicy.WARN)
        result = AcceleratedSolver(oracle, cfg).run(x0)
        tail = [r.omega for r in result.trace if r.iteration >= 5]
        if len(result.trace) == 200 and all(0.0 < w < 1.0 for w in tail):
            passed = True
            break
    assert passed, "no L in the grid kept the indicator inside (0, 1)"


def _iterations_to_gap(oracle, f_ref, q, L, gap=1e-8, max_iter=250):
    if math.isclose(q, 3.0):
        cfg = EngineConfig(p=2, nu=1.0, L=L, q=q, theta1=1.0, theta2=1.0,
                           strategy=CoefficientStrategy.EXACT,
                           max_iter=max_iter, stop_gap=gap, f_ref=f_ref)
    else:
        cfg = EngineConfig(p=2, nu=1.0, L=L, q=q, theta1=0.5, theta2=0.67,
                           strategy=CoefficientStrategy.BISECTION,
                           max_iter=max_iter, stop_gap=gap, f_ref=f_ref)
    result = AcceleratedSolver(oracle, cfg).run(np.zeros(oracle.dim))
    if result.best_value - f_ref <= gap:
        return len(result.trace)
    return math.inf


def test_criterion_4_rate_ordering():
    oracle, _, f_ref = logistic_problem()
    grid = [10.0 ** e for e in range(-3, 4)]
    best = {}
    for q in (2.0, 2.5, 3.0):
        best[q] = min(_iterations_to_gap(oracle, f_ref, q, L) for L in grid)
        assert best[q] < math.inf, f"q={q} never reached the gap target"
    assert best[2.0] <= best[2.5] <= best[3.0], best


def test_criterion_5_bisection_band_and_certificate():
    oracle, x_ref, f_ref = logistic_problem()
    ds = synthetic_logistic_dataset(N_SAMPLES, DIM, 0)
    rows, _ = ds.to_dense()
    L = logistic_smoothness_constant(rows, 2.0, 1.0)
    cfg = EngineConfig(p=2, nu=1.0, L=L, q=2.0, theta1=0.5, theta2=0.67,
                       strategy=CoefficientStrategy.BISECTION, max_iter=100)
    result = AcceleratedSolver(oracle, cfg).run(np.zeros(DIM))
    h_ref = float(np.linalg.norm(x_ref) ** cfg.q) / cfg.q
    accepted = [r for r in result.trace if r.displacement > 0]
    assert len(accepted) >= 50
    for rec in accepted:
        assert cfg.theta1 - 1e-9 <= rec.omega <= cfg.theta2 + 1e-9
    for rec in result.trace:
        assert rec.f_value - f_ref <= h_ref / rec.A + 1e-9


def test_criterion_6_restart_linear_phase():
    diag = np.arange(1.0, 11.0)
    oracle = make_quadratic(diag, np.zeros(10))
    cfg = EngineConfig(p=1, nu=1.0, L=10.0, q=2.0,
                       strategy=CoefficientStrategy.EXACT, max_iter=50)
    c_A, r, v = uaf_rate_constants(cfg)
    assert math.isclose(c_A, 40.0)
    x0 = np.ones(10)
    R = float(np.linalg.norm(x0))
    rcfg = RestartConfig(s=2.0, sigma=1.0, v=v, r=r, c_A=c_A, R=R, K=8)
    handle = solver_handle_from_engine(oracle, cfg)
    _, trace = run_restarted(handle, rcfg, x0, f=oracle.value)
    k_cap = min(rcfg.K, rcfg.k0)
    checked = 0
    for k, _, f_y in trace:
        if k > k_cap:
            continue
        assert f_y <= R ** 2 / (2.0 * 4.0 ** k) + 1e-10, f"epoch {k}"
        checked += 1
    assert checked == 8


def test_criterion_7_continuum_rate():
    from accelopt.continuum import (DynamicsSpec, integrate,
                                    power_weight_schedule)
    oracle = make_quadratic(np.ones(2), np.zeros(2))
    x0 = np.array([1.0, 0.0])
    weight, total = power_weight_schedule(2)  # A_t = t^2/4
    spec = DynamicsSpec(weight=weight, total_weight=total, oracle=oracle,
                        x0=x0, horizon=10.0, dt=1e-4)
    traj = integrate(spec)
    h = 0.5 * float(np.linalg.norm(x0) ** 2)
    assert oracle.value(traj.final_state()) <= 1.05 * h / total(10.0)


def test_criterion_8_krylov_matches_exact():
    from accelopt.subsolver import (StepSpec, cubic_step_exact,
                                    cubic_step_krylov)
    from accelopt.taylor import TaylorModel
    rng = np.random.default_rng(42)
    for _ in range(100):
        d = int(rng.integers(1, 65))
        A = rng.standard_normal((d, d))
        H = (A + A.T) / 2.0
        g = rng.standard_normal(d)
        M = float(10.0 ** rng.uniform(-2, 1))
        model = TaylorModel(center=np.zeros(d), order=2, g_at_center=0.0,
                            grad_at_center=g,
                            hess_vec_at_center=lambda v, H=H: H @ v)
        spec = StepSpec(center=np.zeros(d), model=model, reg_coeff=M,
                        power=3.0)
        exact = cubic_step_exact(spec).x_new
        krylov = cubic_step_krylov(spec).x_new
        denom = max(1.0, float(np.linalg.norm(exact)))
        assert float(np.linalg.norm(exact - krylov)) / denom < 1e-7


def test_criterion_9_model_bounds():
    rng = np.random.default_rng(7)
    # quadratic: order p = 1, nu = 1, L = the largest curvature
    diag = np.linspace(1.0, 10.0, DIM)
    quad = make_quadratic(diag, rng.standard_normal(DIM))
    for _ in range(1000):
        y = rng.standard_normal(DIM)
        x = y + rng.standard_normal(DIM)
        vg, gg, vb, gb = model_error_bounds(quad, y, x, p=1, nu=1.0, L=10.0)
        assert vg <= vb * (1.0 + 1e-9) + 1e-12
        assert gg <= gb * (1.0 + 1e-9) + 1e-12
    # logistic: order p = 2, nu = 1, L from the design-matrix formula
    ds = synthetic_logistic_dataset(N_SAMPLES, DIM, 0)
    rows, _ = ds.to_dense()
    L = logistic_smoothness_constant(rows, 2.0, 1.0)
    oracle = make_logistic(ds)
    for _ in range(1000):
        y = 0.5 * rng.standard_normal(DIM)
        x = y + 0.5 * rng.standard_normal(DIM)
        vg, gg, vb, gb = model_error_bounds(oracle, y, x, p=2, nu=1.0, L=L)
        assert vg <= vb * (1.0 + 1e-9) + 1e-12
        assert gg <= gb * (1.0 + 1e-9) + 1e-12


def test_criterion_10_sequence_lemma_suite():
    rng = np.random.default_rng(11)
    n_cases = 10_000
    for _ in range(n_cases):
        rho = float(rng.uniform(1.0, 4.0))
        C = float(rng.uniform(0.1, 5.0))
        b = [0.0]
        for _ in range(12):
            step = max(C ** (1.0 / rho), 1e-3)
            while step ** rho < C * (b[-1] + step) ** (rho - 1.0):
                step *= 1.5
            b.append(b[-1] + step)
        case = SequenceCase(b=b, rho=rho, C=C)
        assert check_seq_lemma_1(case) is CheckOutcome.HOLDS
    for _ in range(n_cases):
        rho = float(rng.uniform(1.0, 3.0))
        delta = float(rng.uniform(0.5, 2.0))
        scale = float(rng.uniform(0.5, 3.0))
        b = [0.0] + [scale * k ** (rho + 1.0 / delta) for k in range(1, 13)]
        partial = sum((b[k] ** (rho - 1.0) / (b[k] - b[k - 1]) ** rho) ** delta
                      for k in range(1, 13))
        case = SequenceCase(b=b, rho=rho, C=partial, delta=delta)
        assert check_seq_lemma_2(case) is CheckOutcome.HOLDS
    for _ in range(n_cases):
        s = float(rng.uniform(0, 10))
        t = float(rng.uniform(0, 10))
        q = float(rng.uniform(2, 6))
        sigma = float(10.0 ** rng.uniform(-2, 2))
        assert check_young_type(s, t, q, sigma)
    for _ in range(n_cases):
        ups = float(rng.uniform(1.5, 4.0))
        c = float(rng.uniform(0.1, 2.0))
        B, partial = [], 0.0
        prev = 0.1
        for _ in range(12):
            cand = max(prev, 1e-6)
            while cand ** ups < c * (partial + cand):
                cand *= 1.3
            B.append(cand)
            partial += cand
            prev = cand
        assert check_bjl(B, c, ups) is CheckOutcome.HOLDS


def test_criterion_11_parser_round_trip_and_rejection():
    rng = np.random.default_rng(99)
    for _ in range(1000):
        ds = random_sparse_dataset(rng)
        assert parse_libsvm(serialize_libsvm(ds)).rows == ds.rows
    malformed = [
        ("+1 1:1\nx 2:1\n", 2),
        ("2 1:1\n", 1),
        ("+1 1:1\n-1 1:1\n+1 11\n", 3),
        ("+1 a:1\n", 1),
        ("+1 1:b\n", 1),
        ("+1 0:1\n", 1),
        ("+1 2:1 1:1\n", 1),
    ]
    for text, line_no in malformed:
        with pytest.raises(ParseError) as exc:
            parse_libsvm(text)
        assert exc.value.line_no == line_no


def test_criterion_12_trace_determinism(tmp_path):
    def one_run(tag):
        conf = dict(CONFIG_DEFAULTS)
        conf.update({
            "problem": "logistic", "n": "100", "dim": "8", "seed": "3",
            "p": "2", "q": "3.0", "L": "1.0", "max_iter": "25",
            "out": str(tmp_path / f"{tag}.csv"),
            "summary": str(tmp_path / f"{tag}.json"),
            "plots": "false", "ref_budget": "100",
        })
        execute_run(conf)
        lines = (tmp_path / f"{tag}.csv").read_text().splitlines()
        return [",".join(line.split(",")[:7]) for line in lines]

    assert one_run("first") == one_run("second")
