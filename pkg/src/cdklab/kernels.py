"""Christoffel-Darboux kernels, sine-kernel targets and universality diagnostics.

All kernels are bilinear (no complex conjugation), so complex offsets enter
by analytic continuation.  The density ``rho`` is always the empirical value
``K_n(x0, x0) w(x0) / n`` at the same ``n``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

from .jacobi import JacobiParameters, eval_p, eval_pq
from .perturbation import RankOne, apply
from .stieltjes import BoundaryValue, boundary_F, weights

__all__ = [
    "KernelSample",
    "MixedKernel",
    "UniversalityReport",
    "boundary_weight",
    "cd_kernel",
    "diag_kernel_trace",
    "mixed_symmetrized_kernel",
    "perturbed_kernel_expansion",
    "point_mass_verdict",
    "scaled_kernel",
    "second_kind_kernel",
    "sine_target",
    "transfer_average",
    "universality_report",
]

Mode = Literal["by_n", "by_diag"]

SATURATION_TOL = 1e-6
DIVERGENCE_RATIO = 1.5


def _p(params, z, n):
    return eval_p(params, z, n)


def cd_kernel(
    params: JacobiParameters,
    x: complex,
    y: complex,
    n: int,
    method: Literal["sum", "cd_formula"] = "sum",
) -> complex:
    """``K_n(x, y) = sum_{j<n} p_j(x) p_j(y)``.

    ``method="cd_formula"`` uses ``a_n (p_n(x) p_{n-1}(y) - p_{n-1}(x) p_n(y)) / (x - y)``
    and falls back to the sum when ``|x - y| <= 1e-13 (1 + |x|)``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    x, y = complex(x), complex(y)
    if method == "cd_formula" and abs(x - y) > 1e-13 * (1 + abs(x)):
        px = _p(params, x, n + 1)
        py = _p(params, y, n + 1)
        an = params.a(n)
        return complex(an * (px[n] * py[n - 1] - px[n - 1] * py[n]) / (x - y))
    if method not in ("sum", "cd_formula"):
        raise ValueError(f"unknown method {method!r}")
    px = _p(params, x, n)
    py = px if y == x else _p(params, y, n)
    # Symmetric by construction: the same products in the same order.
    return complex(np.sum(px * py))


def sine_target(rho: float, w: float, a: complex, b: complex) -> complex:
    """``sin(pi rho (b - a)) / (pi w (b - a))``, equal to ``rho / w`` at ``b = a``."""
    if not (rho > 0 and w > 0):
        raise ValueError("rho and w must be positive")
    d = complex(b) - complex(a)
    t = math.pi * rho * d
    if abs(t) < 1e-4:
        t2 = t * t
        series = 1 - t2 / 6 + t2 * t2 / 120 - t2 * t2 * t2 / 5040
        return complex(rho / w * series)
    return complex(cmath.sin(t) / (math.pi * w * d))


@dataclass(frozen=True)
class KernelSample:
    n: int
    x0: float
    a: complex
    b: complex
    value: complex
    target: complex
    abs_err: float
    mode: str = "by_n"
    rho_hat: float = math.nan


def boundary_weight(params: JacobiParameters, x0: float) -> tuple[float, BoundaryValue]:
    """``w(x0) = Im F(x0 + i0) / pi``, or 0 where the boundary value does not settle.

    A diverging boundary value marks a point mass or a singular edge; the
    sine-kernel comparison is undefined there.
    """
    bv = boundary_F(params, x0)
    w = max(bv.F.imag, 0.0) / math.pi if bv.converged else 0.0
    return w, bv


def _weight(params, x0, weight):
    return weights(params, x0).w if weight is None else float(weight)


def scaled_kernel(
    params: JacobiParameters,
    x0: float,
    a: complex,
    b: complex,
    n: int,
    mode: Mode = "by_n",
    weight: float | None = None,
) -> KernelSample:
    """Scaled kernel against its sine-kernel target.

    ``by_n``: ``K_n(x0 + a/n, x0 + b/n) / n`` against
    ``sine_target(rho_hat, w, a, b)``.
    ``by_diag``: offsets ``a / (w K_n(x0, x0))``, normalizer ``K_n(x0, x0)``,
    target ``sin(pi (b - a)) / (pi (b - a))``.

    ``weight`` overrides ``w(x0)``; otherwise it comes from the boundary
    value of the Stieltjes transform.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    w = _weight(params, x0, weight)
    kdiag = cd_kernel(params, x0, x0, n).real
    rho_hat = kdiag * w / n
    a, b = complex(a), complex(b)
    if mode == "by_n":
        value = cd_kernel(params, x0 + a / n, x0 + b / n, n) / n
        target = sine_target(rho_hat, w, a, b)
    elif mode == "by_diag":
        scale = w * kdiag
        value = cd_kernel(params, x0 + a / scale, x0 + b / scale, n) / kdiag
        target = sine_target(1.0, 1.0, a, b)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return KernelSample(n, float(x0), a, b, value, target, abs(value - target), mode, rho_hat)


def second_kind_kernel(
    params: JacobiParameters,
    x0: float,
    a: complex,
    b: complex,
    n: int,
) -> KernelSample:
    """``sum_{j<n} q_j(x0 + a/n) q_j(x0 + b/n) / n`` against the second-kind target.

    The target uses the second-kind weight ``w / |F(x0 + i0)|^2`` and the
    first-kind ``rho_hat``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    wb = weights(params, x0)
    kdiag = cd_kernel(params, x0, x0, n).real
    rho_hat = kdiag * wb.w / n
    a, b = complex(a), complex(b)
    qa = eval_pq(params, x0 + a / n, n).q
    qb = qa if a == b else eval_pq(params, x0 + b / n, n).q
    value = complex(np.sum(qa * qb)) / n
    target = sine_target(rho_hat, wb.w_tilde, a, b)
    return KernelSample(n, float(x0), a, b, value, target, abs(value - target), "second_kind", rho_hat)


class MixedKernel(tuple):
    """``(value, predicted_limit)``."""

    def __new__(cls, value, predicted_limit):
        return super().__new__(cls, (value, predicted_limit))

    @property
    def value(self) -> complex:
        return self[0]

    @property
    def predicted_limit(self) -> complex:
        return self[1]


def mixed_symmetrized_kernel(
    params: JacobiParameters, x0: float, a: complex, b: complex, n: int
) -> MixedKernel:
    """Symmetrized mixed kernel and its limit.

    ``value = (1/n) sum_j [p_j(x0+a/n) q_j(x0+b/n) + p_j(x0+b/n) q_j(x0+a/n)]``;
    the limit is ``-2 Re F(x0+i0) sine_target(rho_hat, w, a, b)``, which
    follows from ``q_j(x) = int (p_j(x) - p_j(t)) / (x - t) dmu(t)``.
    """
    wb = weights(params, x0)
    a, b = complex(a), complex(b)
    ea = eval_pq(params, x0 + a / n, n)
    eb = ea if a == b else eval_pq(params, x0 + b / n, n)
    value = complex(np.sum(ea.p * eb.q) + np.sum(eb.p * ea.q)) / n
    kdiag = cd_kernel(params, x0, x0, n).real
    rho_hat = kdiag * wb.w / n
    predicted = -2 * wb.F.real * sine_target(rho_hat, wb.w, a, b)
    return MixedKernel(value, predicted)


def perturbed_kernel_expansion(
    params: JacobiParameters, beta1: float, x: complex, y: complex, n: int
) -> tuple[complex, complex]:
    """Both sides of the rank-one kernel expansion.

    ``lhs`` is the CD kernel of the ``b_1 + beta1`` measure; ``rhs`` is
    ``K_n + beta1^2 K~_n - beta1 (sum q_j(x) p_j(y) + sum q_j(y) p_j(x))``
    built from the unperturbed measure.
    """
    lhs = cd_kernel(apply(params, RankOne(beta1)), x, y, n)
    ex = eval_pq(params, x, n)
    ey = eval_pq(params, y, n)
    K = np.sum(ex.p * ey.p)
    Kt = np.sum(ex.q * ey.q)
    mixed = np.sum(ex.q * ey.p) + np.sum(ey.q * ex.p)
    rhs = complex(K + beta1 * beta1 * Kt - beta1 * mixed)
    return lhs, rhs


def transfer_average(params: JacobiParameters, x0: float, a: complex, n: int) -> float:
    """``(1/n) sum_{j<n} ||Phi_j(x0 + a/n)||_F^2`` with ``Phi_0 = I``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    e = eval_pq(params, x0 + complex(a) / n, n)
    p, q = e.p, e.q
    total = 2.0  # ||I||_F^2
    if n > 1:
        an, _ = params.coefficients(n - 1)
        pj, qj = p[1:], q[1:]
        lower = np.abs(an * p[:-1]) ** 2 + np.abs(an * q[:-1]) ** 2
        total += float(np.sum(np.abs(pj) ** 2 + np.abs(qj) ** 2 + lower))
    return total / n


def diag_kernel_trace(params: JacobiParameters, x: float, n: int) -> np.ndarray:
    """Cumulative ``K_1(x,x), ..., K_n(x,x)`` for real ``x``."""
    p = eval_p(params, x, n).real
    return np.cumsum(p * p)


def point_mass_verdict(k_n: float, k_2n: float) -> str:
    """Classify ``K_n(x,x)`` growth across one doubling of ``n``."""
    if (k_2n - k_n) / k_n < SATURATION_TOL:
        return "saturates"
    if k_2n >= DIVERGENCE_RATIO * k_n:
        return "diverges"
    return "inconclusive"


@dataclass(frozen=True)
class UniversalityReport:
    x0: float
    n_list: tuple[int, ...]
    weight: float
    rho_hat: tuple[float, ...]
    sup_err: tuple[float, ...]
    diag_trace: tuple[float, ...]
    point_mass_verdict: str
    saturation_value: float | None = None
    samples: tuple[KernelSample, ...] = field(default=(), repr=False)


def universality_report(
    params: JacobiParameters,
    x0: float,
    n_list: Sequence[int],
    grid: Iterable[tuple[complex, complex]],
    weight: float | None = None,
) -> UniversalityReport:
    """Scaled-kernel errors, ``rho_hat`` and point-mass verdict over an n ladder.

    Where ``w(x0) = 0`` (off the a.c. spectrum, at an eigenvalue, or where
    the boundary value diverges) the
    sine-kernel comparison is undefined: ``rho_hat`` is 0 and ``sup_err`` is
    NaN, while the diagonal trace and verdict are still produced.
    """
    grid = [(complex(a), complex(b)) for a, b in grid]
    if not grid:
        raise ValueError("grid must be nonempty")
    n_list = tuple(int(n) for n in n_list)
    if not n_list or any(n < 1 for n in n_list):
        raise ValueError("n_list must hold positive counts")
    if weight is None:
        w, _ = boundary_weight(params, x0)
    else:
        w = float(weight)
    n_max = max(n_list)
    trace = diag_kernel_trace(params, x0, 2 * n_max)

    rho_hat, sup_err, diag, samples = [], [], [], []
    for n in n_list:
        kdiag = float(trace[n - 1])
        diag.append(kdiag)
        rho = kdiag * w / n
        rho_hat.append(rho)
        if w <= 0:
            sup_err.append(math.nan)
            continue
        offsets = {z for pair in grid for z in pair}
        ps = {z: _p(params, x0 + z / n, n) for z in offsets}
        worst = 0.0
        for a, b in grid:
            value = complex(np.sum(ps[a] * ps[b])) / n
            target = sine_target(rho, w, a, b)
            err = abs(value - target)
            worst = max(worst, err)
            samples.append(KernelSample(n, float(x0), a, b, value, target, err, "by_n", rho))
        sup_err.append(worst)

    k_n, k_2n = float(trace[n_max - 1]), float(trace[2 * n_max - 1])
    verdict = point_mass_verdict(k_n, k_2n)
    return UniversalityReport(
        x0=float(x0),
        n_list=n_list,
        weight=w,
        rho_hat=tuple(rho_hat),
        sup_err=tuple(sup_err),
        diag_trace=tuple(diag),
        point_mass_verdict=verdict,
        saturation_value=k_2n if verdict == "saturates" else None,
        samples=tuple(samples),
    )
