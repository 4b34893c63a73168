"""A full dynamic-accuracy run on the Rosenbrock valley, audited afterwards.

Every evaluation the optimizer requests carries a self-chosen accuracy; the
oracle here answers adversarially, placing its error at 99% of each bound.
The audit replays the finished run against exact values and the closed-form
worst-case constants.
"""

import numpy as np

from dyntrust import InexactOracle, TrConfig, check_history, make_problem, run

problem = make_problem("rosenbrock")
oracle = InexactOracle(problem, policy="adversarial", seed=3)
cfg = TrConfig.with_defaults((1e-3, 1e-3))

result = run(oracle, cfg)
gnorm = np.linalg.norm(problem.exact_deriv(result.x_eps, 1).entries)
print(f"terminated: {result.terminated} after {result.n_iterations} iterations "
      f"({result.n_success} successful)")
print(f"final point {np.round(result.x_eps, 6)}, exact gradient norm {gnorm:.2e}")
print(f"objective evaluations: {result.eval_ledger.n_f}, "
      f"derivative evaluations: {result.eval_ledger.n_deriv()}, "
      f"accuracy tightenings: {result.acc.i_zeta}")

print("\nfirst iterations:")
print("  k   Delta     j  rho      accepted")
for rec in result.history[:8]:
    print(f"  {rec.k:<3} {rec.Delta:<9.3g} {rec.j}  {rec.rho:<8.3f} {rec.successful}")

print("\naudit against exact values and worst-case bounds:")
print(check_history(result, problem).summary())
