import numpy as np
import pytest

from dyntrust.driver import ConfigError, TrConfig, check_history, run
from dyntrust.oracle import InexactOracle
from dyntrust.problems import make_problem
from dyntrust.reference import phi_reference


@pytest.mark.parametrize("overrides,fragment", [
    ({"eta1": 0.5, "omega": 0.3}, "omega"),
    ({"vartheta": 2.0}, "vartheta"),
    ({"vartheta": 1e-9}, "vartheta"),
    ({"Delta0": 200.0}, "radii"),
    ({"eta1": 0.9, "eta2": 0.5}, "eta"),
    ({"gamma2": 1.5}, "gamma"),
    ({"gamma3": 0.5}, "gamma"),
    ({"varsigma": 0.0}, "varsigma"),
    ({"gamma_zeta": 1.0}, "gamma_zeta"),
    ({"zeta0": 0.5}, "zeta0"),
    ({"max_iterations": 0}, "max_iterations"),
])
def test_config_violations_name_the_constraint(overrides, fragment):
    with pytest.raises(ConfigError) as err:
        TrConfig.with_defaults((1e-3,), **overrides)
    assert fragment.lower() in str(err.value).lower()


def test_config_rejects_bad_eps():
    with pytest.raises(ConfigError):
        TrConfig.with_defaults((1.5,))
    with pytest.raises(ConfigError):
        TrConfig.with_defaults((1e-3,) * 4)  # order above the dense-tensor cap


def test_config_defaults_satisfy_constraints():
    cfg = TrConfig.with_defaults((1e-3, 1e-3))
    assert cfg.q == 2
    assert cfg.vartheta == 0.5
    assert cfg.omega < min(0.5 * cfg.eta1, 0.25 * (1 - cfg.eta2))


def test_run_1d_quadratic_reaches_gradient_target():
    p = make_problem("quadratic", dim=1, cond=1.0)  # f = x^2 / 2
    o = InexactOracle(p, policy="none", seed=0)
    res = run(o, TrConfig.with_defaults((1e-4,)), x0=np.array([1.0]))
    assert res.terminated
    assert abs(res.x_eps[0]) <= 1e-4


def test_run_saddle_well_escapes_saddle():
    p = make_problem("saddle_well")
    o = InexactOracle(p, policy="adversarial", seed=1)
    res = run(o, TrConfig.with_defaults((1e-3, 1e-3)), x0=np.array([0.05, 1e-4]))
    assert res.terminated
    phi2 = phi_reference(p, res.x_eps, 2, res.delta_eps)
    assert phi2 <= 1e-3 * res.delta_eps**2 / 2 + 1e-8
    assert abs(abs(res.x_eps[1]) - 1.0) < 0.1  # settled in a well, not the saddle


@pytest.mark.parametrize("seed", range(10))
def test_run_rosenbrock_adversarial_terminates(seed):
    p = make_problem("rosenbrock")
    o = InexactOracle(p, policy="adversarial", seed=seed)
    res = run(o, TrConfig.with_defaults((1e-2, 1e-2)))
    assert res.terminated
    gnorm = np.linalg.norm(p.exact_deriv(res.x_eps, 1).entries)
    assert gnorm <= 1e-2 + 1e-8


def test_cap_exhaustion_reported_not_raised():
    p = make_problem("rosenbrock")
    o = InexactOracle(p, policy="none", seed=0)
    res = run(o, TrConfig.with_defaults((1e-6,), max_iterations=5))
    assert not res.terminated
    assert res.n_iterations == 5


def test_first_f_evaluation_happens_after_first_derivative():
    p = make_problem("quadratic", dim=2, cond=5)
    o = InexactOracle(p, policy="none", seed=0)
    res = run(o, TrConfig.with_defaults((1e-3,)))
    kinds = [e.kind for e in res.eval_ledger.entries]
    assert kinds[0] == "deriv"
    assert "f" in kinds


def test_objective_value_reuse_rule():
    p = make_problem("rosenbrock")
    o = InexactOracle(p, policy="adversarial", seed=2)
    res = run(o, TrConfig.with_defaults((1e-2,)))
    hist = res.history
    assert any(not r.f_recomputed for r in hist)  # reuse does happen
    assert hist[0].f_recomputed                   # first iteration must compute f(x0)
    # whenever the old value was reused, its stored accuracy was sufficient:
    # the previous iteration's budget is at most the current one
    prev_acc = None
    for r in hist:
        budget = res.cfg.omega * r.dT_s
        if not r.f_recomputed:
            assert prev_acc is not None and prev_acc <= budget * (1 + 1e-12)
        # value carried forward has the tighter of the two accuracies
        prev_acc = budget if (r.successful or r.f_recomputed) else min(prev_acc, budget)
    # evaluation count: one new point per iteration plus recomputations
    assert res.eval_ledger.n_f == len(hist) + sum(r.f_recomputed for r in hist)


def test_rho_uses_certified_decrement_and_radius_update_is_deterministic():
    p = make_problem("quadratic", dim=2, cond=30)
    o = InexactOracle(p, policy="adversarial", seed=3)
    cfg = TrConfig.with_defaults((1e-3,))
    res = run(o, cfg)
    for a, b in zip(res.history[:-1], res.history[1:]):
        if a.rho < cfg.eta1:
            assert b.Delta == pytest.approx(cfg.gamma2 * a.Delta)
        elif a.rho < cfg.eta2:
            assert b.Delta == pytest.approx(a.Delta)
        else:
            assert b.Delta == pytest.approx(min(cfg.Delta_max, cfg.gamma3 * a.Delta))
        assert a.delta == pytest.approx(min(a.Delta, cfg.vartheta))
        assert a.dT_s > 0


def test_step1_skipped_after_rejection_with_large_radius():
    p = make_problem("rosenbrock")
    o = InexactOracle(p, policy="adversarial", seed=5)
    cfg = TrConfig.with_defaults((1e-2,))
    res = run(o, cfg)
    hist = res.history
    skipped = 0
    for a, b in zip(hist[:-1], hist[1:]):
        if not a.successful and b.Delta >= cfg.vartheta:
            # derivative counts unchanged by the next Step-1 phase: order-1
            # evaluations only move when accuracy tightened or iterate moved
            if a.i_zeta == b.i_zeta:
                assert b.n_d1 == a.n_d1
                skipped += 1
    assert skipped > 0


def test_exact_mode_audit_quadratic_exact_lipschitz():
    p = make_problem("quadratic", dim=2, cond=30)
    o = InexactOracle(p, policy="none", seed=0)
    res = run(o, TrConfig.with_defaults((1e-4,)))
    assert res.terminated
    report = check_history(res, p)  # exact L from the problem metadata
    assert report.ok, report.violations
    assert report.lipschitz_used == max(1.0, 30.0)


def test_audit_rosenbrock_boxed_lipschitz():
    p = make_problem("rosenbrock")
    o = InexactOracle(p, policy="none", seed=0)
    res = run(o, TrConfig.with_defaults((1e-2, 1e-2)))
    report = check_history(res, p)
    assert report.ok, report.violations


@pytest.mark.parametrize("seed", range(10))
def test_audit_adversarial_seeds(seed):
    p = make_problem("quadratic", dim=3, cond=12)
    o = InexactOracle(p, policy="adversarial", seed=seed)
    res = run(o, TrConfig.with_defaults((1e-3,)))
    report = check_history(res, p, check_termination=False)
    assert report.checks["decrease_floor"].ok, report.checks["decrease_floor"].detail
    assert report.checks["radius_floor"].ok, report.checks["radius_floor"].detail
    assert report.ok, report.violations


def test_omega_near_its_cap_still_audits_clean():
    p = make_problem("quadratic", dim=2, cond=8)
    eta1, eta2 = 0.05, 0.9
    omega = 0.999 * min(0.5 * eta1, 0.25 * (1 - eta2))
    o = InexactOracle(p, policy="adversarial", seed=7)
    res = run(o, TrConfig.with_defaults((1e-3,), omega=omega))
    assert res.terminated
    report = check_history(res, p)
    assert report.ok, report.violations


def test_sink_receives_every_record():
    p = make_problem("quadratic", dim=2, cond=5)
    o = InexactOracle(p, policy="adversarial", seed=0)
    seen = []
    res = run(o, TrConfig.with_defaults((1e-3,)), sink=seen.append)
    assert seen == res.history


def test_run_rosenbrock_tight_q2_all_seeds():
    # ten adversarial seeds at the tight target; the final point always
    # carries an exact gradient under the first-order threshold
    p = make_problem("rosenbrock")
    for seed in range(10):
        o = InexactOracle(p, policy="adversarial", seed=seed)
        res = run(o, TrConfig.with_defaults((1e-3, 1e-3)))
        assert res.terminated
        gnorm = np.linalg.norm(p.exact_deriv(res.x_eps, 1).entries)
        assert gnorm <= 1e-3 + 1e-8


def test_run_order3_smoke():
    # third-order mode: heuristic subproblem, looser targets; the run must
    # terminate cleanly and land first-order flat
    p = make_problem("quartic", dim=2)
    o = InexactOracle(p, policy="adversarial", seed=0)
    res = run(o, TrConfig.with_defaults((1e-1, 1e-1, 1e-1)))
    assert res.terminated
    assert any(r.j >= 2 for r in res.history) or res.n_iterations == 0
    gnorm = np.linalg.norm(p.exact_deriv(res.x_eps, 1).entries)
    assert gnorm <= 1e-1 + 1e-8


def test_bounds_for_run_helper():
    from dyntrust.driver import bounds_for_run
    p = make_problem("quadratic", dim=2, cond=10)
    o = InexactOracle(p, policy="none", seed=0)
    res = run(o, TrConfig.with_defaults((1e-3,)))
    bc, L = bounds_for_run(res, p)
    assert L == 10.0
    assert bc.eval_bound_f > res.eval_ledger.n_f


def test_run_third_order_step_engaged():
    # degenerate stationary point: zero gradient, zero curvature, live third
    # derivative; only an order-3 step can leave it
    from dyntrust.model import sym_tensor
    from dyntrust.oracle import Problem

    def fun(x):
        return float(x[0] ** 4 / 4 + x[0] ** 3 / 3)

    def deriv(x, order):
        u = x[0]
        if order == 1:
            return sym_tensor(np.array([u**3 + u**2]), already_symmetric=True)
        if order == 2:
            return sym_tensor(np.array([[3 * u**2 + 2 * u]]), already_symmetric=True)
        return sym_tensor(np.array([[[6 * u + 2]]]), already_symmetric=True)

    p = Problem(name="degenerate_cubic", dim=1, fun=fun, deriv=deriv,
                f_low=-1 / 12, x0=np.zeros(1))
    o = InexactOracle(p, policy="adversarial", seed=0)
    res = run(o, TrConfig.with_defaults((1e-2, 1e-2, 1e-2)))
    assert res.terminated
    assert any(r.j == 3 for r in res.history)
    # the run must have escaped to the genuine minimizer at -1
    assert res.x_eps[0] == pytest.approx(-1.0, abs=0.05)
