import math
from math import factorial

import numpy as np
import pytest

from dyntrust.model import make_bundle, sym_tensor
from dyntrust.optimality import (AccuracyLedger, BundleCache, ContinueAt,
                                 Terminated, allowed_tightenings,
                                 certified_decrement, max_decrement,
                                 termination_test)
from dyntrust.oracle import EvalLedger, InexactOracle
from dyntrust.problems import make_problem
from dyntrust.reference import GridSpec, max_decrement_reference, phi_reference
from dyntrust.verify import VerifyOutcome


def fresh_state(problem, q, x, policy="none", seed=0, zeta0=0.1):
    oracle = InexactOracle(problem, policy=policy, seed=seed)
    acc = AccuracyLedger.fresh(q, zeta0, gamma_zeta=0.1, kappa_zeta=max(zeta0, 0.1))
    cache = BundleCache(x)
    return oracle, acc, cache, EvalLedger()


def test_max_decrement_order1_closed_form():
    b = make_bundle(np.zeros(2), [sym_tensor(np.array([3.0, 4.0]))])
    d, dt, guar = max_decrement(b, 1, 0.5)
    assert dt == pytest.approx(2.5)
    np.testing.assert_allclose(d, [-0.3, -0.4])
    assert guar == 1.0


def test_max_decrement_order1_zero_gradient():
    b = make_bundle(np.zeros(2), [sym_tensor(np.zeros(2))])
    d, dt, _ = max_decrement(b, 1, 0.5)
    assert dt == 0.0
    np.testing.assert_array_equal(d, np.zeros(2))


def test_max_decrement_order2_hard_case():
    b = make_bundle(np.zeros(2), [sym_tensor(np.zeros(2)),
                                  sym_tensor(np.diag([-2.0, 1.0]))])
    d, dt, _ = max_decrement(b, 2, 1.0)
    assert dt == pytest.approx(1.0, rel=1e-9)
    assert abs(d[0]) == pytest.approx(1.0, rel=1e-9)
    assert d[1] == pytest.approx(0.0, abs=1e-9)


def test_max_decrement_order2_matches_reference():
    rng = np.random.default_rng(12)
    for _ in range(25):
        n = int(rng.integers(1, 5))
        b = make_bundle(rng.standard_normal(n),
                        [sym_tensor(rng.standard_normal(n) * 3),
                         sym_tensor(rng.standard_normal((n, n)) * 3)])
        delta = float(rng.uniform(0.05, 1.0))
        _, dt, _ = max_decrement(b, 2, delta)
        ref = max_decrement_reference(b, 2, delta)
        assert dt == pytest.approx(ref, abs=1e-6, rel=1e-6)


def test_varsigma_certificate_orders_1_2():
    rng = np.random.default_rng(21)
    for _ in range(20):
        n = int(rng.integers(1, 5))
        b = make_bundle(rng.standard_normal(n),
                        [sym_tensor(rng.standard_normal(n)),
                         sym_tensor(rng.standard_normal((n, n)))])
        delta = float(rng.uniform(0.1, 1.0))
        for j, guar in ((1, 1.0), (2, 1.0 - 1e-8)):
            _, dt, _ = max_decrement(b, j, delta)
            ref = max_decrement_reference(b, j, delta)
            assert dt >= guar * ref - 1e-9


def test_max_decrement_order3_dominates_quadratic_solution():
    rng = np.random.default_rng(5)
    for _ in range(10):
        n = int(rng.integers(1, 4))
        b = make_bundle(rng.standard_normal(n),
                        [sym_tensor(rng.standard_normal(n)),
                         sym_tensor(rng.standard_normal((n, n))),
                         sym_tensor(0.5 * rng.standard_normal((n, n, n)))])
        delta = float(rng.uniform(0.1, 1.0))
        _, dt3, guar = max_decrement(b, 3, delta)
        assert guar is None
        ref = max_decrement_reference(b, 3, delta, GridSpec(polish_rounds=8))
        assert dt3 >= 0.5 * ref - 1e-9  # heuristic, but not far off the sampler


def test_certified_decrement_exact_oracle_first_pass():
    p = make_problem("quadratic", dim=2, cond=4)
    x = np.array([1.0, 1.0])
    oracle, acc, cache, ledger = fresh_state(p, 1, x, zeta0=1e-12)
    cert = certified_decrement(x, 1, 0.5, 1e-3, 0.99, 0.02, oracle, acc, cache, ledger)
    assert cert.tightenings == 0
    assert cert.outcome is VerifyOutcome.RELATIVE
    assert ledger.n_deriv(1) == 1


def test_certified_decrement_predicted_tightening_count():
    # at an exact minimizer with zero-noise oracle the decrement is 0, so the
    # loop tightens until the absolute test holds: zeta <= omega * xi
    p = make_problem("quadratic", dim=2, cond=4)
    x = np.zeros(2)
    omega, varsigma, eps_j, delta = 0.02, 0.99, 1e-3, 0.5
    zeta0, gamma = 0.1, 0.1
    oracle, acc, cache, ledger = fresh_state(p, 1, x, zeta0=zeta0)
    cert = certified_decrement(x, 1, delta, eps_j, varsigma, omega, oracle, acc,
                               cache, ledger)
    assert cert.outcome is VerifyOutcome.ABSOLUTE
    xi = 0.5 * varsigma * eps_j
    predicted = math.ceil(math.log(zeta0 / (omega * xi)) / math.log(1 / gamma))
    assert cert.tightenings == predicted
    # and never beyond the guaranteed level
    bound = allowed_tightenings(zeta0, 0.25 * omega * varsigma * eps_j * delta**0 / 1,
                                gamma) + 1
    assert cert.tightenings <= bound


def test_certified_absolute_implies_small_reference_phi():
    # exact second-order minimizer of a convex quadratic, adversarial noise
    p = make_problem("quadratic", dim=2, cond=8)
    x = np.zeros(2)
    eps_j, delta, omega = 1e-2, 0.5, 0.02
    for j in (1, 2):
        oracle, acc, cache, ledger = fresh_state(p, 2, x, policy="adversarial")
        cert = certified_decrement(x, j, delta, eps_j, 0.99, omega, oracle, acc,
                                   cache, ledger)
        assert cert.outcome is VerifyOutcome.ABSOLUTE
        phi = phi_reference(p, x, j, delta)
        assert phi <= eps_j * delta**j / factorial(j) + 1e-6


def test_certified_relative_two_sided_bound():
    # far from stationarity the outcome is relative and brackets the measure
    p = make_problem("quadratic", dim=2, cond=4)
    x = np.array([2.0, -1.0])
    omega = 0.02
    oracle, acc, cache, ledger = fresh_state(p, 1, x, policy="adversarial")
    cert = certified_decrement(x, 1, 0.5, 1e-3, 0.99, omega, oracle, acc, cache, ledger)
    assert cert.outcome is VerifyOutcome.RELATIVE
    phi = phi_reference(p, x, 1, 0.5)
    assert (1 - omega) * cert.dT <= phi + 1e-6
    assert phi <= (1 + omega) * cert.dT + 1e-6


def test_certified_decrement_never_calls_eval_f():
    p = make_problem("rosenbrock")
    x = np.array([-1.2, 1.0])
    oracle, acc, cache, ledger = fresh_state(p, 2, x, policy="adversarial")
    certified_decrement(x, 2, 0.5, 1e-3, 0.99, 0.02, oracle, acc, cache, ledger)
    assert ledger.n_f == 0


def test_cache_reuses_until_tightened():
    p = make_problem("rosenbrock")
    x = np.array([0.5, 0.5])
    oracle, acc, cache, ledger = fresh_state(p, 2, x, policy="adversarial")
    cache.ensure(oracle, acc, 2, ledger)
    cache.ensure(oracle, acc, 2, ledger)
    assert ledger.n_deriv(1) == 1 and ledger.n_deriv(2) == 1
    acc.tighten(1)  # only order 1 tightened
    cache.ensure(oracle, acc, 2, ledger)
    assert ledger.n_deriv(1) == 2 and ledger.n_deriv(2) == 1


def test_termination_test_continue_order1():
    p = make_problem("quadratic", dim=2, cond=1)  # identity Hessian
    x = np.array([0.6, -0.8])  # gradient norm exactly 1
    omega = 0.01
    oracle, acc, cache, ledger = fresh_state(p, 1, x, zeta0=1e-10)
    out = termination_test(x, 0.5, (1e-3,), 0.99, omega, oracle, acc, cache, ledger)
    assert isinstance(out, ContinueAt) and out.j == 1
    assert out.cert.dT == pytest.approx(0.5)
    assert out.cert.dT > (1e-3 / (1 + omega)) * 0.5


def test_termination_test_terminated_at_minimizer():
    p = make_problem("quadratic", dim=3, cond=5)
    x = np.zeros(3)
    oracle, acc, cache, ledger = fresh_state(p, 2, x, zeta0=1e-12)
    out = termination_test(x, 0.5, (1e-3, 1e-3), 0.99, 0.02, oracle, acc, cache, ledger)
    assert isinstance(out, Terminated)
    np.testing.assert_array_equal(out.x, x)


def test_termination_test_saddle_continues_at_order2():
    p = make_problem("saddle")
    x = np.zeros(2)
    omega = 0.02
    oracle, acc, cache, ledger = fresh_state(p, 2, x, zeta0=1e-10)
    out = termination_test(x, 0.1, (1e-2, 1e-2), 0.99, omega, oracle, acc, cache, ledger)
    assert isinstance(out, ContinueAt) and out.j == 2
    # the quadratic decrement at the saddle is delta^2 along the escape axis
    assert out.cert.dT == pytest.approx(0.01, rel=1e-8)
    assert out.cert.dT > (1e-2 / (1 + omega)) * 0.01 / 2


def test_finite_tightening_invariant():
    # tightenings within one call never exceed the guaranteed count
    p = make_problem("saddle_well")
    rng = np.random.default_rng(3)
    for trial in range(10):
        x = rng.standard_normal(2) * 0.5
        delta = float(rng.uniform(0.05, 0.8))
        eps_j = float(10 ** rng.uniform(-4, -1))
        omega, varsigma, gamma, kappa = 0.02, 0.99, 0.1, 0.1
        oracle, acc, cache, ledger = fresh_state(p, 2, x, policy="adversarial",
                                                 seed=trial)
        for j in (1, 2):
            cert = certified_decrement(x, j, delta, eps_j, varsigma, omega,
                                       oracle, acc, cache, ledger)
            cap = math.ceil(math.log(
                (omega * varsigma * eps_j * delta ** (j - 1)) / (4 * factorial(j) * kappa)
            ) / math.log(gamma)) + 1
            assert cert.tightenings <= cap


def test_accuracy_ledger_tighten_and_exact_orders():
    acc = AccuracyLedger.fresh(3, 0.1, gamma_zeta=0.5, kappa_zeta=0.1,
                               exact_orders=(2,))
    assert acc.zetas[1] == 0.0
    acc.tighten(3)
    assert acc.i_zeta == 1
    np.testing.assert_allclose(acc.zetas, [0.05, 0.0, 0.05])
    acc.tighten(1)
    np.testing.assert_allclose(acc.zetas, [0.025, 0.0, 0.05])
    with pytest.raises(ValueError):
        AccuracyLedger.fresh(2, 0.5, gamma_zeta=0.5, kappa_zeta=0.1)
