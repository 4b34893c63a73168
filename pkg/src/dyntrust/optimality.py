"""Optimality-measure subproblems and the accuracy-certified decrement loop.

``max_decrement`` maximizes the degree-j model decrement over a ball:
order 1 in closed form, order 2 globally via a safeguarded secular-equation
solver on the eigendecomposition (hard case included), order 3 by seeded
multi-start projected gradient ascent (heuristic, no certificate).

``certified_decrement`` wraps the solver in the tighten-until-certified loop:
evaluate derivatives at the current absolute accuracies, maximize, certify
via :func:`~dyntrust.verify.verify`, and geometrically tighten the
accuracies until the outcome is sufficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .model import (DerivativeBundle, Vector, as_vector, make_bundle,
                    model_gradient, taylor_decrement)
from .oracle import EvalLedger, InexactOracle
from .verify import VerifyOutcome, verify

# Fraction of the global order-2 ball maximum the secular solver is
# guaranteed to deliver (its 1e-10 radius tolerance folded in).
VARSIGMA_ORDER2 = 1.0 - 1e-8

_SECULAR_TOL = 1e-10


@dataclass
class AccuracyLedger:
    """Current absolute accuracy bounds per derivative order, with the
    geometric tightening rule and its counter."""

    zetas: np.ndarray
    gamma_zeta: float
    kappa_zeta: float
    i_zeta: int = 0
    exact_orders: frozenset = field(default_factory=frozenset)

    @classmethod
    def fresh(cls, q: int, zeta0, gamma_zeta: float, kappa_zeta: float,
              exact_orders=()) -> "AccuracyLedger":
        if not 0 < gamma_zeta < 1:
            raise ValueError("gamma_zeta must lie in (0, 1)")
        if kappa_zeta <= 0:
            raise ValueError("kappa_zeta must be positive")
        z = np.full(q, float(zeta0)) if np.isscalar(zeta0) else np.asarray(zeta0, dtype=float).copy()
        if z.size != q:
            raise ValueError("need one initial accuracy per order")
        exact = frozenset(exact_orders)
        for i in range(1, q + 1):
            if i in exact:
                z[i - 1] = 0.0
            elif not 0 < z[i - 1] <= kappa_zeta:
                raise ValueError("initial accuracies must lie in (0, kappa_zeta]")
        return cls(zetas=z, gamma_zeta=gamma_zeta, kappa_zeta=kappa_zeta,
                   exact_orders=exact)

    def tighten(self, j: int):
        """One geometric tightening of orders 1..j."""
        self.zetas[:j] *= self.gamma_zeta
        self.i_zeta += 1

    def current(self, j: int) -> tuple[float, ...]:
        return tuple(float(z) for z in self.zetas[:j])


class BundleCache:
    """Derivative tensors cached per iterate, keyed by the accuracy at which
    each order was last evaluated; re-evaluation happens only when the
    required accuracy has tightened since."""

    def __init__(self, x):
        self.x = as_vector(x).copy()
        self._tensors: dict[int, object] = {}
        self._zeta_at: dict[int, float] = {}

    def ensure(self, oracle: InexactOracle, acc: AccuracyLedger, j: int,
               eval_ledger: EvalLedger | None = None) -> DerivativeBundle:
        for i in range(1, j + 1):
            target = float(acc.zetas[i - 1])
            if i not in self._tensors or self._zeta_at[i] > target:
                self._tensors[i] = oracle.eval_deriv(self.x, i, target, eval_ledger)
                self._zeta_at[i] = target
        tensors = tuple(self._tensors[i] for i in range(1, j + 1))
        bounds = tuple(self._zeta_at[i] for i in range(1, j + 1))
        return make_bundle(self.x, tensors, bounds)


def _min_quadratic_on_ball(g: np.ndarray, h_mat: np.ndarray, radius: float,
                           tol: float = _SECULAR_TOL) -> np.ndarray:
    """Global minimizer of g.d + 0.5 d'Hd over |d| <= radius.

    Eigendecomposition-based: interior Newton point when feasible, otherwise
    the boundary multiplier from the secular equation, with the hard case
    (gradient orthogonal to the bottom eigenspace) stepped along the bottom
    eigenvector.
    """
    evals, evecs = np.linalg.eigh(h_mat)
    b = evecs.T @ g
    lam1 = float(evals[0])
    if lam1 > 0:
        d = -(evecs @ (b / evals))
        if float(np.linalg.norm(d)) <= radius * (1.0 + 1e-14):
            return d
    lam_low = max(0.0, -lam1)
    scale = max(1.0, float(np.linalg.norm(b)), float(np.max(np.abs(evals))))
    bottom = (evals - lam1) <= 1e-12 * scale
    b_eff = b.copy()
    if lam1 <= 0 and np.all(np.abs(b[bottom]) <= 1e-12 * scale):
        b_eff[bottom] = 0.0
        shifted = evals + lam_low
        coef = np.divide(b_eff, shifted, out=np.zeros_like(b_eff), where=~bottom)
        norm_p = float(np.linalg.norm(coef))
        if norm_p <= radius:
            p = -(evecs @ coef)
            if lam_low > 0.0:
                # hard case: fill the remaining radius along the bottom eigenvector
                tau = math.sqrt(max(radius * radius - norm_p * norm_p, 0.0))
                return p + tau * evecs[:, 0]
            # PSD-singular with the gradient orthogonal to the null space:
            # the pseudo-Newton point is already optimal
            return p

    def dnorm(lam: float) -> float:
        return float(np.linalg.norm(b_eff / (evals + lam)))

    hi = lam_low + max(float(np.linalg.norm(b_eff)) / radius, 1e-8 * scale)
    for _ in range(200):
        if dnorm(hi) <= radius:
            break
        hi = lam_low + 2.0 * (hi - lam_low)
    lo = lam_low
    lam = hi
    for _ in range(200):
        nd = dnorm(lam)
        if abs(nd - radius) <= tol * max(1.0, radius):
            break
        if nd > radius:
            lo = lam
        else:
            hi = lam
        s3 = float(np.sum(b_eff**2 / (evals + lam) ** 3))
        if s3 > 0 and np.isfinite(s3):
            cand = lam - (1.0 / nd - 1.0 / radius) * nd**3 / s3
        else:
            cand = 0.5 * (lo + hi)
        lam = cand if lo < cand < hi else 0.5 * (lo + hi)
    return -(evecs @ (b_eff / (evals + lam)))


def _max_cubic_on_ball(b: DerivativeBundle, radius: float, seed: int = 0,
                       max_iter: int = 200) -> np.ndarray:
    """Multi-start projected gradient ascent for the degree-3 decrement."""
    n = b.dim
    rng = np.random.default_rng(seed)
    starts = [radius * e for e in np.eye(n)] + [-radius * e for e in np.eye(n)]
    for _ in range(8):
        u = rng.standard_normal(n)
        starts.append(radius * u / np.linalg.norm(u))

    def project(d):
        nd = np.linalg.norm(d)
        return d if nd <= radius else d * (radius / nd)

    best_d = np.zeros(n)
    best_v = 0.0
    for d0 in starts:
        d = d0.copy()
        val = taylor_decrement(b, d, 3)
        step = 0.5 * radius
        for _ in range(max_iter):
            g = -model_gradient(b, d, 3)
            ng = float(np.linalg.norm(g))
            if ng < 1e-15 or step < 1e-15:
                break
            cand = project(d + step * g / ng)
            cand_val = taylor_decrement(b, cand, 3)
            if cand_val > val + 1e-16:
                d, val = cand, cand_val
                step = min(step * 1.3, radius)
            else:
                step *= 0.5
        if val > best_v:
            best_d, best_v = d, val
    return best_d


def max_decrement(b: DerivativeBundle, j: int, delta: float,
                  seed: int = 0) -> tuple[Vector, float, float | None]:
    """Near-maximal degree-j decrement over the delta-ball.

    Returns (d, decrement, guarantee): the displacement, its decrement, and
    the guaranteed fraction of the ball optimum (None for order 3, where the
    multi-start search carries no certificate).
    """
    if j > b.degree:
        raise ValueError("bundle does not carry derivatives up to the requested order")
    if delta <= 0:
        raise ValueError("delta must be positive")
    if j == 1:
        g = b.tensors[0].entries
        ng = float(np.linalg.norm(g))
        if ng == 0.0:
            return np.zeros(b.dim), 0.0, 1.0
        d = -delta * g / ng
        return d, delta * ng, 1.0
    if j == 2:
        d = _min_quadratic_on_ball(b.tensors[0].entries, b.tensors[1].entries, delta)
        dt = taylor_decrement(b, d, 2)
        if dt <= 0.0:
            return np.zeros(b.dim), 0.0, VARSIGMA_ORDER2
        return d, dt, VARSIGMA_ORDER2
    if j == 3:
        d = _max_cubic_on_ball(b, delta, seed=seed)
        dt = taylor_decrement(b, d, 3)
        if dt <= 0.0:
            return np.zeros(b.dim), 0.0, None
        return d, dt, None
    raise ValueError(f"unsupported order {j}")


@dataclass(frozen=True)
class CertifiedDecrement:
    """A displacement whose decrement carries a sufficient accuracy outcome."""

    j: int
    d: Vector
    dT: float
    outcome: VerifyOutcome
    varsigma_used: float
    tightenings: int


def allowed_tightenings(entry_max: float, target: float, gamma_zeta: float) -> int:
    """Tightenings needed to bring ``entry_max`` at or below ``target``."""
    if entry_max <= target:
        return 0
    return math.ceil(math.log(entry_max / target) / math.log(1.0 / gamma_zeta))


def certified_decrement(x, j: int, delta: float, eps_j: float, varsigma: float,
                        omega: float, oracle: InexactOracle, acc: AccuracyLedger,
                        cache: BundleCache, eval_ledger: EvalLedger | None = None,
                        seed: int = 0) -> CertifiedDecrement:
    """Compute a near-maximal decrement certified Relative or Absolute,
    tightening derivative accuracies geometrically until certification."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if not 0 < eps_j <= 1:
        raise ValueError("eps_j must lie in (0, 1]")
    entry_max = float(np.max(acc.zetas[:j])) if j > 0 else 0.0
    target = 0.25 * omega * varsigma * eps_j * delta ** (j - 1) / factorial(j)
    cap = allowed_tightenings(entry_max, target, acc.gamma_zeta) + 2
    tightenings = 0
    while True:
        bundle = cache.ensure(oracle, acc, j, eval_ledger)
        d, dt, guarantee = max_decrement(bundle, j, delta, seed=seed)
        vs = varsigma if guarantee is None else min(varsigma, guarantee)
        outcome = verify(delta, dt, acc.current(j), 0.5 * vs * eps_j, omega)
        if outcome.sufficient:
            return CertifiedDecrement(j=j, d=d, dT=dt, outcome=outcome,
                                      varsigma_used=vs, tightenings=tightenings)
        acc.tighten(j)
        tightenings += 1
        if tightenings > cap:
            raise RuntimeError(
                "accuracy certification failed to terminate within its "
                "guaranteed tightening budget (implementation bug)")


@dataclass(frozen=True)
class Terminated:
    """All orders certified small enough: x is the approximate minimizer."""

    x: Vector
    delta: float


@dataclass(frozen=True)
class ContinueAt:
    """Order j shows a decrement above the termination threshold."""

    j: int
    cert: CertifiedDecrement


def termination_test(x, delta_k: float, eps, varsigma: float, omega: float,
                     oracle: InexactOracle, acc: AccuracyLedger, cache: BundleCache,
                     eval_ledger: EvalLedger | None = None, seed: int = 0):
    """Orders 1..q in turn: certify a decrement and stop at the first one
    exceeding its threshold; otherwise declare x an approximate minimizer."""
    for j in range(1, len(eps) + 1):
        cert = certified_decrement(x, j, delta_k, eps[j - 1], varsigma, omega,
                                   oracle, acc, cache, eval_ledger, seed=seed)
        threshold = (eps[j - 1] / (1.0 + omega)) * delta_k**j / factorial(j)
        if cert.dT > threshold:
            return ContinueAt(j=j, cert=cert)
    return Terminated(x=as_vector(x).copy(), delta=delta_k)
