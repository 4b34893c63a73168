"""Randomized stress battery: admissible configurations far from defaults.

Every sampled configuration satisfies the admissibility constraints by
construction; each run must terminate, keep every certification loop inside
its guaranteed tightening budget (the internal bug traps raise otherwise),
and honor the objective accuracy contracts against exact values.
"""

import numpy as np
import pytest

from dyntrust.driver import TrConfig, run
from dyntrust.oracle import InexactOracle
from dyntrust.problems import make_problem

POLICIES = ("adversarial", "gaussian", "truncate", "none")


def random_config(rng, q):
    eta1 = float(rng.uniform(0.01, 0.5))
    eta2 = float(rng.uniform(eta1, 0.97))
    gamma2 = float(rng.uniform(0.3, 0.9))
    gamma1 = float(rng.uniform(0.05, 0.95)) * gamma2
    gamma3 = float(rng.uniform(1.1, 4.0))
    omega_cap = min(0.5 * eta1, 0.25 * (1 - eta2))
    omega = float(rng.uniform(0.1, 0.98)) * omega_cap
    eps = tuple(float(10 ** rng.uniform(-2.3, -1)) for _ in range(q))
    vartheta = float(rng.uniform(min(eps), 1.0))
    delta0 = float(10 ** rng.uniform(-0.5, 1.0))
    kappa_zeta = float(10 ** rng.uniform(-3, -0.5))
    return TrConfig(
        eps=eps, Delta0=delta0, Delta_max=delta0 * float(rng.uniform(1, 100)),
        vartheta=vartheta, eta1=eta1, eta2=eta2, gamma1=gamma1, gamma2=gamma2,
        gamma3=gamma3, omega=omega, varsigma=float(rng.uniform(0.5, 1.0)),
        gamma_zeta=float(rng.uniform(0.05, 0.6)), kappa_zeta=kappa_zeta,
        zeta0=kappa_zeta * float(rng.uniform(0.1, 1.0)),
        seed=int(rng.integers(0, 1000)), max_iterations=40000)


def random_problem(rng):
    choice = rng.integers(0, 4)
    if choice == 0:
        return make_problem("quadratic", dim=int(rng.integers(1, 5)),
                            cond=float(10 ** rng.uniform(0, 2)))
    if choice == 1:
        return make_problem("rosenbrock")
    if choice == 2:
        return make_problem("saddle_well")
    return make_problem("quartic", dim=int(rng.integers(1, 4)))


@pytest.mark.parametrize("batch", range(4))
def test_random_admissible_configurations(batch):
    rng = np.random.default_rng(1000 + batch)
    for trial in range(30):
        q = int(rng.integers(1, 3))
        cfg = random_config(rng, q)
        problem = random_problem(rng)
        policy = POLICIES[int(rng.integers(0, len(POLICIES)))]
        oracle = InexactOracle(problem, policy=policy, seed=trial)
        x0 = problem.x0 + 0.3 * rng.standard_normal(problem.dim)
        result = run(oracle, cfg, x0=x0)  # bug traps raise on loop overruns
        assert result.terminated, (batch, trial, problem.name, policy)
        assert sum(r.step2_absolute for r in result.history) == 0
        # objective accuracy contracts replayed against exact values
        for r in result.history:
            budget = cfg.omega * r.dT_s * (1 + 1e-9)
            assert abs(r.f_bar_old - problem.exact_f(np.array(r.x))) <= budget
            assert abs(r.f_bar_new - problem.exact_f(np.array(r.x_trial))) <= budget
        # the final point is genuinely first-order small
        gnorm = np.linalg.norm(problem.exact_deriv(result.x_eps, 1).entries)
        assert gnorm <= cfg.eps[0] + 1e-8
