"""Dense symmetric derivative tensors and Taylor-model arithmetic.

A degree-j polynomial model built from derivative tensors T_1 .. T_j at a
point x is

    m(s) = f0 + sum_{i=1..j} T_i[s]^i / i!

where T_i[s]^i is the i-fold contraction of the order-i tensor with the
displacement s.  The quantity the optimization loop actually consumes is the
model *decrement* m(0) - m(s), which is independent of f0.  Everything here
is plain dense numpy; tensors are desk-scale (order <= 3, small dimension).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import factorial

import numpy as np

Vector = np.ndarray

# Highest derivative order the dense tensor format supports.  Dense order-4
# tensors are impractical and unneeded at desk scale; configurations asking
# for more are rejected up front.
MAX_ORDER = 3


def as_vector(x) -> Vector:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a nonempty 1-D point")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


def symmetrize(entries: np.ndarray) -> np.ndarray:
    """Average an array over all index permutations."""
    arr = np.asarray(entries, dtype=float)
    if arr.ndim <= 1:
        return arr
    perms = list(itertools.permutations(range(arr.ndim)))
    return sum(np.transpose(arr, p) for p in perms) / len(perms)


@dataclass(frozen=True, eq=False)
class SymTensor:
    """Dense symmetric tensor holding order-``order`` derivative data on R^n."""

    entries: np.ndarray
    order: int
    dim: int

    def __post_init__(self):
        if not 1 <= self.order <= MAX_ORDER:
            raise ValueError(f"tensor order must be in 1..{MAX_ORDER}, got {self.order}")
        expected = (self.dim,) * self.order
        if self.entries.shape != expected:
            raise ValueError(f"entries shape {self.entries.shape} != {expected}")
        if not np.all(np.isfinite(self.entries)):
            raise ValueError("tensor entries must be finite")


def sym_tensor(entries, already_symmetric: bool = False) -> SymTensor:
    """Build a :class:`SymTensor`, symmetrizing the input unless promised."""
    arr = np.asarray(entries, dtype=float)
    arr = np.atleast_1d(arr)
    if not already_symmetric:
        arr = symmetrize(arr)
    return SymTensor(entries=arr, order=arr.ndim, dim=arr.shape[0])


def tensor_apply(t: SymTensor, s) -> float:
    """i-linear form of the tensor applied to (s, ..., s), without the 1/i!."""
    s = as_vector(s)
    if t.dim != s.size:
        raise ValueError(f"tensor dim {t.dim} != vector dim {s.size}")
    e = t.entries
    if t.order == 1:
        return float(e @ s)
    if t.order == 2:
        return float(s @ (e @ s))
    return float(np.einsum("abc,a,b,c->", e, s, s, s))


def tensor_apply_many(t: SymTensor, pts: np.ndarray) -> np.ndarray:
    """Vectorized :func:`tensor_apply` over rows of ``pts`` (m, n)."""
    pts = np.asarray(pts, dtype=float)
    e = t.entries
    if t.order == 1:
        return pts @ e
    if t.order == 2:
        return np.einsum("ab,pa,pb->p", e, pts, pts)
    return np.einsum("abc,pa,pb,pc->p", e, pts, pts, pts)


@dataclass(frozen=True, eq=False)
class DerivativeBundle:
    """Point-local derivative tensors of orders 1..degree with certified
    absolute operator-norm error bounds."""

    x: Vector
    tensors: tuple[SymTensor, ...]
    error_bounds: tuple[float, ...]

    def __post_init__(self):
        if len(self.tensors) != len(self.error_bounds):
            raise ValueError("one error bound per tensor required")
        if not self.tensors:
            raise ValueError("bundle needs at least the order-1 tensor")
        for i, t in enumerate(self.tensors, start=1):
            if t.order != i:
                raise ValueError(f"tensor at slot {i} has order {t.order}")
            if t.dim != self.x.size:
                raise ValueError("tensor dimension does not match the point")
        if any(b < 0 for b in self.error_bounds):
            raise ValueError("error bounds must be nonnegative")

    @property
    def degree(self) -> int:
        return len(self.tensors)

    @property
    def dim(self) -> int:
        return self.x.size


def make_bundle(x, tensors, error_bounds=None) -> DerivativeBundle:
    x = as_vector(x)
    tensors = tuple(tensors)
    if error_bounds is None:
        error_bounds = (0.0,) * len(tensors)
    return DerivativeBundle(x=x, tensors=tensors, error_bounds=tuple(float(b) for b in error_bounds))


def taylor_decrement(b: DerivativeBundle, s, j: int | None = None) -> float:
    """Model decrement m(0) - m(s) of the degree-j model; independent of f0."""
    j = b.degree if j is None else j
    if j > b.degree:
        raise ValueError(f"requested degree {j} exceeds bundle degree {b.degree}")
    s = as_vector(s)
    total = 0.0
    for i in range(1, j + 1):
        total += tensor_apply(b.tensors[i - 1], s) / factorial(i)
    return -total


def taylor_decrement_many(b: DerivativeBundle, pts: np.ndarray, j: int | None = None) -> np.ndarray:
    j = b.degree if j is None else j
    total = np.zeros(len(pts))
    for i in range(1, j + 1):
        total += tensor_apply_many(b.tensors[i - 1], pts) / factorial(i)
    return -total


def taylor_value(b: DerivativeBundle, f0: float, s, j: int | None = None) -> float:
    """Degree-j model value f0 + sum_i T_i[s]^i / i!."""
    return f0 - taylor_decrement(b, s, j)


def model_gradient(b: DerivativeBundle, s, j: int | None = None) -> Vector:
    """Gradient (in s) of the degree-j model: T_1 + T_2 s + (1/2) T_3[s,s,.]."""
    j = b.degree if j is None else j
    s = as_vector(s)
    g = b.tensors[0].entries.copy()
    if j >= 2:
        g += b.tensors[1].entries @ s
    if j >= 3:
        g += 0.5 * np.einsum("abc,b,c->a", b.tensors[2].entries, s, s)
    return g


def decrement_error_bound(error_bounds, s_norm: float) -> float:
    """Worst-case |decrement(inexact) - decrement(exact)| when the order-i
    tensors differ by at most error_bounds[i-1] in operator norm:
    sum_i zeta_i ||s||^i / i!."""
    return sum(z * s_norm**i / factorial(i) for i, z in enumerate(error_bounds, start=1))


def operator_norm(t: SymTensor, seed: int = 0, starts: int = 12, iters: int = 120) -> float:
    """Operator norm of a symmetric tensor.

    Exact for orders 1 and 2 (Euclidean / spectral norm).  For order 3 the
    value is a multi-start power-iteration estimate of max_{|u|=1} |T[u]^3|
    (a lower bound, in practice tight at desk scale).
    """
    if t.order == 1:
        return float(np.linalg.norm(t.entries))
    if t.order == 2:
        return float(np.max(np.abs(np.linalg.eigvalsh(t.entries))))
    rng = np.random.default_rng(seed)
    n = t.dim
    e = t.entries
    best = 0.0
    starts_list = [np.eye(n)[i] for i in range(n)]
    starts_list += [rng.standard_normal(n) for _ in range(max(starts - n, 2))]
    for u0 in starts_list:
        u = u0 / np.linalg.norm(u0)
        for _ in range(iters):
            w = np.einsum("abc,b,c->a", e, u, u)
            nw = np.linalg.norm(w)
            if nw == 0.0:
                break
            # Sign flip keeps the iteration ascending for negative eigenpairs.
            val = float(u @ w)
            u_next = w / nw if val >= 0 else -w / nw
            if np.linalg.norm(u_next - u) < 1e-14:
                u = u_next
                break
            u = u_next
        best = max(best, abs(float(np.einsum("abc,a,b,c->", e, u, u, u))))
    return best
