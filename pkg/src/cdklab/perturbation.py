"""Diagonal perturbations ``b_n -> b_n + beta_n`` and their diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence, Union

import numpy as np

from .jacobi import JacobiParameters, eval_pq

__all__ = [
    "Diagonal",
    "DISTRIBUTIONS",
    "L2PartialSums",
    "PerturbationSpec",
    "RandomDiagonal",
    "RankOne",
    "VarParTrace",
    "apply",
    "l2_condition_partial",
    "power_law",
    "variation_of_parameters",
]

DISTRIBUTIONS = ("rademacher", "uniform_symmetric", "gaussian")


@dataclass(frozen=True)
class RankOne:
    beta1: float

    def describe(self) -> str:
        return f"rank_one(beta1={self.beta1!r})"


@dataclass(frozen=True)
class Diagonal:
    betas: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(v) for v in self.betas))

    def describe(self) -> str:
        return f"diagonal(len={len(self.betas)})"


def power_law(coefficient: float, power: float, length: int) -> Diagonal:
    """``beta_k = coefficient / k^power`` for ``k = 1..length``."""
    k = np.arange(1, length + 1, dtype=float)
    return Diagonal(tuple((coefficient / k**power).tolist()))


@dataclass(frozen=True)
class RandomDiagonal:
    """Independent zero-mean draws with variance ``amplitude^2 k^(-2 exponent)``.

    Each index ``k`` has its own substream seeded by ``(seed, k)``, so any
    subset of draws can be regenerated independently and in any order.
    """

    amplitude: float
    exponent: float
    distribution: str = "rademacher"
    seed: int = 0
    horizon: int = 1

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")
        if not self.exponent > 0:
            raise ValueError("exponent must be positive")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(
                f"distribution must be one of {DISTRIBUTIONS}, got {self.distribution!r}"
            )
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")

    def variance(self, k):
        k = np.asarray(k, dtype=float)
        return self.amplitude**2 * k ** (-2 * self.exponent)

    def draw(self, k: int) -> float:
        return _unit_draw(self.seed, k, self.distribution) * self.amplitude * k ** -self.exponent

    def draws(self) -> np.ndarray:
        return _draws(self)

    def describe(self) -> str:
        return (
            f"random_diagonal(amplitude={self.amplitude!r}, exponent={self.exponent!r}, "
            f"dist={self.distribution}, horizon={self.horizon})"
        )


PerturbationSpec = Union[RankOne, Diagonal, RandomDiagonal]


def _unit_draw(seed: int, k: int, distribution: str) -> float:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,)))
    if distribution == "rademacher":
        return 1.0 if rng.integers(0, 2) else -1.0
    if distribution == "uniform_symmetric":
        return float(rng.uniform(-math.sqrt(3), math.sqrt(3)))
    return float(rng.standard_normal())


@lru_cache(maxsize=64)
def _draws(spec: RandomDiagonal) -> np.ndarray:
    out = np.array([spec.draw(k) for k in range(1, spec.horizon + 1)])
    out.setflags(write=False)
    return out


def apply(params: JacobiParameters, spec: PerturbationSpec) -> JacobiParameters:
    """Parameters ``{a_n, b_n + beta_n}``.

    A random perturbation materializes ``horizon`` draws and marks the result
    so that reading past the horizon raises instead of silently using zero.
    """
    if isinstance(spec, RankOne):
        length = max(1, len(params.head_b))
        _, b = params.coefficients(length)
        b[0] += spec.beta1
        return JacobiParameters(params.head_a, tuple(b.tolist()), params.tail_a,
                                params.tail_b, params.horizon)
    if isinstance(spec, Diagonal):
        length = max(len(params.head_b), len(spec.betas))
        if params.horizon is not None:
            length = min(length, params.horizon)
        _, b = params.coefficients(length)
        m = min(length, len(spec.betas))
        b[:m] += np.asarray(spec.betas[:m])
        return JacobiParameters(params.head_a, tuple(b.tolist()), params.tail_a,
                                params.tail_b, params.horizon)
    if isinstance(spec, RandomDiagonal):
        horizon = spec.horizon if params.horizon is None else min(spec.horizon, params.horizon)
        _, b = params.coefficients(horizon)
        b += spec.draws()[:horizon]
        return JacobiParameters(params.head_a, tuple(b.tolist()), params.tail_a,
                                params.tail_b, horizon)
    raise TypeError(f"not a perturbation spec: {spec!r}")


@dataclass(frozen=True)
class VarParTrace:
    """Variation-of-parameters coefficients at a real point.

    ``u[k-1] = (u_{1,k}, u_{2,k})`` expresses the perturbed first-kind
    solution through the unperturbed pair: ``p^b_k = u_1 p_k + u_2 q_k`` and
    ``p^b_{k-1} = u_1 p_{k-1} + u_2 q_{k-1}``; ``v`` does the same for the
    perturbed second-kind solution.
    """

    x: float
    u: np.ndarray  # shape (N, 2)
    v: np.ndarray
    converged_u: bool
    converged_v: bool
    last_increment_u: float
    last_increment_v: float
    max_residual: float


class InternalConsistencyError(RuntimeError):
    pass


def _window_increments(c: np.ndarray) -> np.ndarray:
    diff = np.linalg.norm(np.diff(c, axis=0), axis=1)
    return diff / (1 + np.linalg.norm(c[1:], axis=1))


def variation_of_parameters(
    params: JacobiParameters,
    spec: PerturbationSpec,
    x: float,
    N: int,
    tol: float = 1e-6,
) -> VarParTrace:
    """Solve the 2x2 variation-of-parameters systems for ``k = 1..N``.

    Convergence flags are set when every relative increment in the last
    ``ceil(N/10)`` steps is below ``tol``.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    x = float(x)
    perturbed = apply(params, spec)
    base = eval_pq(params, x, N + 1)
    pert = eval_pq(perturbed, x, N + 1)
    p, q = base.p.real, base.q.real
    pb, qb = pert.p.real, pert.q.real
    a, _ = params.coefficients(N)

    pk, pk1, qk, qk1 = p[1:], p[:-1], q[1:], q[:-1]
    det = pk * qk1 - qk * pk1
    wronskian = -a * det
    if np.max(np.abs(wronskian - 1)) > 1e-8:
        raise InternalConsistencyError("Wronskian drifted from 1; system is ill-conditioned")

    def solve(target):
        tk, tk1 = target[1:], target[:-1]
        c1 = (tk * qk1 - qk * tk1) / det
        c2 = (pk * tk1 - pk1 * tk) / det
        res = np.maximum(
            np.abs(c1 * pk + c2 * qk - tk) / (np.abs(c1 * pk) + np.abs(c2 * qk) + np.abs(tk) + 1e-300),
            np.abs(c1 * pk1 + c2 * qk1 - tk1) / (np.abs(c1 * pk1) + np.abs(c2 * qk1) + np.abs(tk1) + 1e-300),
        )
        return np.column_stack([c1, c2]), float(np.max(res))

    u, res_u = solve(pb)
    v, res_v = solve(qb)
    window = math.ceil(N / 10)
    inc_u = _window_increments(u)
    inc_v = _window_increments(v)
    return VarParTrace(
        x=x,
        u=u,
        v=v,
        converged_u=bool(np.all(inc_u[-window:] < tol)),
        converged_v=bool(np.all(inc_v[-window:] < tol)),
        last_increment_u=float(inc_u[-1]),
        last_increment_v=float(inc_v[-1]),
        max_residual=max(res_u, res_v),
    )


@dataclass(frozen=True)
class L2PartialSums:
    """Partial sums ``S_1..S_N`` of the L2 condition and the doubling check."""

    x: float
    partial: np.ndarray
    S_N: float
    S_2N: float
    increment: float
    bounded: bool


def l2_condition_partial(
    params: JacobiParameters,
    x: float,
    variances: Callable[[np.ndarray], np.ndarray] | Sequence[float],
    N: int,
    rel_tol: float = 0.01,
) -> L2PartialSums:
    """``S_N = sum_{k<=N} sigma_k^2 (|p_k| + |p_{k-1}| + |q_k| + |q_{k-1}|)^4``.

    ``variances`` is either a callable on the index array ``k = 1..2N`` or an
    explicit sequence of at least ``2N`` values.  The verdict ``bounded``
    holds when ``S_2N - S_N < rel_tol * S_N`` (or both vanish).
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    k = np.arange(1, 2 * N + 1, dtype=float)
    if callable(variances):
        sigma2 = np.asarray(variances(k), dtype=float)
    else:
        sigma2 = np.asarray(variances, dtype=float)[: 2 * N]
        if sigma2.size < 2 * N:
            raise ValueError(f"need {2 * N} variances, got {sigma2.size}")
    pq = eval_pq(params, x, 2 * N + 1)
    ap, aq = np.abs(pq.p), np.abs(pq.q)
    bracket = ap[1:] + ap[:-1] + aq[1:] + aq[:-1]
    partial = np.cumsum(sigma2 * bracket**4)
    S_N = float(partial[N - 1])
    S_2N = float(partial[2 * N - 1])
    inc = S_2N - S_N
    bounded = inc == 0 or inc < rel_tol * S_N
    return L2PartialSums(float(x), partial[:N], S_N, S_2N, inc, bool(bounded))
