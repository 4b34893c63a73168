"""Trust-region step computation with accuracy control.

When the radius is within the optimality radius cap, the certified
optimality displacement is reused verbatim (no oracle traffic).  Otherwise a
trial step over the full radius is computed and certified to *relative*
accuracy, tightening derivative accuracies as needed; the optimality
displacement always remains a legal fallback, so the trial step never
decreases the model by less than it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from math import factorial

import numpy as np

from .model import Vector, taylor_decrement
from .optimality import (AccuracyLedger, BundleCache, CertifiedDecrement,
                         allowed_tightenings, max_decrement)
from .oracle import EvalLedger, InexactOracle
from .verify import VerifyOutcome, verify


@dataclass(frozen=True)
class StepResult:
    s: Vector
    dT: float                  # model decrement of the returned step
    outcome: VerifyOutcome     # always RELATIVE
    tighten_count: int
    dT_fallback: float         # decrement of the optimality displacement, same bundle
    zeta_entry_max: float      # max accuracy bound over orders 1..j at entry
    min_xi: float              # smallest absolute-accuracy argument passed to verify
    absolute_events: int       # should stay 0; warned about if not


def step_solver(bundle, j: int, radius: float, seed: int = 0) -> Vector:
    """Trial step over the full radius: same machinery as the optimality
    solver (steepest direction / ball quadratic / multi-start cubic)."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    d, _, _ = max_decrement(bundle, j, radius, seed=seed)
    return d


def compute_step(x, radius: float, vartheta: float, cert: CertifiedDecrement,
                 eps_j: float, omega: float, oracle: InexactOracle,
                 acc: AccuracyLedger, cache: BundleCache,
                 eval_ledger: EvalLedger | None = None, seed: int = 0) -> StepResult:
    """Compute the iteration's step within the trust-region ``radius``.

    Pass-through when radius <= vartheta (the certified displacement *is*
    the step).  Otherwise iterate: recompute the trial step under the current
    derivative bundle, fall back to the certified displacement whenever it
    decreases the model more, and certify at relative accuracy; on any other
    outcome tighten the accuracies and repeat.  An absolute outcome is
    theoretically impossible here and is warned about, tightened past, and
    counted.
    """
    j = cert.j
    zeta_entry = float(np.max(acc.zetas[:j]))
    if radius <= vartheta:
        if cert.outcome is not VerifyOutcome.RELATIVE:
            raise RuntimeError(
                "pass-through step requires a relatively-certified displacement; "
                "an absolute certificate here contradicts the termination test")
        return StepResult(s=cert.d.copy(), dT=cert.dT, outcome=cert.outcome,
                          tighten_count=0, dT_fallback=cert.dT,
                          zeta_entry_max=zeta_entry, min_xi=math.inf,
                          absolute_events=0)

    stop_level = omega * vartheta ** (j - 1) * eps_j / (8.0 * factorial(j) * (1.0 + omega))
    cap = allowed_tightenings(zeta_entry, stop_level, acc.gamma_zeta) + 2
    tighten = 0
    absolutes = 0
    min_xi = math.inf
    while True:
        bundle = cache.ensure(oracle, acc, j, eval_ledger)
        dt_fallback = taylor_decrement(bundle, cert.d, j)
        s_try = step_solver(bundle, j, radius, seed=seed)
        dt_try = taylor_decrement(bundle, s_try, j)
        if dt_try >= dt_fallback:
            s, dt_s = s_try, dt_try
        else:
            s, dt_s = cert.d.copy(), dt_fallback
        if dt_s <= 0.0:
            raise RuntimeError(
                "step decrement collapsed to zero after a non-terminating "
                "optimality test (implementation bug)")
        s_norm = float(np.linalg.norm(s))
        xi = eps_j / (4.0 * (1.0 + omega)) * (vartheta / max(vartheta, s_norm)) ** j
        min_xi = min(min_xi, xi)
        zeta_before = float(np.max(acc.zetas[:j]))
        outcome = verify(s_norm, dt_s, acc.current(j), xi, omega)
        if outcome is VerifyOutcome.RELATIVE:
            return StepResult(s=s, dT=dt_s, outcome=outcome, tighten_count=tighten,
                              dT_fallback=dt_fallback, zeta_entry_max=zeta_entry,
                              min_xi=min_xi, absolute_events=absolutes)
        if zeta_before <= stop_level:
            raise RuntimeError(
                "step certification not relative although accuracies passed "
                "the guaranteed level (implementation bug)")
        if outcome is VerifyOutcome.ABSOLUTE:
            # Theoretically excluded; numerically conceivable at boundaries.
            absolutes += 1
            warnings.warn("step certification returned an absolute outcome; "
                          "tightening and retrying", RuntimeWarning)
        acc.tighten(j)
        tighten += 1
        if tighten > cap:
            raise RuntimeError(
                "step certification failed to terminate within its guaranteed "
                "tightening budget (implementation bug)")
