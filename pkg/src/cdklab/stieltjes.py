"""Stieltjes transforms, boundary values, weights and rank-one algebra.

``F(z) = int dmu(t) / (t - z)`` is evaluated as a finite continued fraction
over the head of the Jacobi parameters,

    F = 1 / (b_1 - z - a_1^2 F_1),

closed by the Stieltjes transform ``m`` of the constant tail, the root of
``tail_a^2 m^2 + (z - tail_b) m + 1 = 0`` of modulus below ``1/tail_a``
(equivalently ``Im m * Im z > 0`` off the real axis).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

from scipy.optimize import brentq

from .jacobi import HorizonError, JacobiParameters, strip

__all__ = [
    "BoundaryValue",
    "Eigenvalue",
    "NotStrongLebesguePoint",
    "PerturbedEigenvalue",
    "UndefinedWeight",
    "WeightBundle",
    "boundary_F",
    "eigenvalue_and_mass",
    "rank_one_F",
    "stieltjes_F",
    "stieltjes_dF",
    "weights",
]

DEFAULT_EPS_EXPONENTS = range(10, 41)
DEFAULT_CAUCHY_THRESHOLD = 1e-6


class PerturbedEigenvalue(ArithmeticError):
    """``1 + beta1 F = 0``: the rank-one perturbed operator has an eigenvalue here."""


class NotStrongLebesguePoint(ValueError):
    """Boundary values of F did not settle along the vertical path."""


class UndefinedWeight(ArithmeticError):
    """A weight formula divides by zero (``F(x + i0) = 0``)."""


def _tail_root(ta: float, tb: float, z: complex) -> complex:
    w = z - tb
    ta2 = ta * ta
    if z.imag == 0:
        x = w.real
        if abs(x) < 2 * ta:
            # On the cut: boundary value from the upper half-plane.
            return complex(-x, math.sqrt(4 * ta2 - x * x)) / (2 * ta2)
        if abs(x) == 2 * ta:
            return complex(-x / (2 * ta2))
    d = cmath.sqrt(w * w - 4 * ta2)
    big = -w + d if abs(-w + d) >= abs(-w - d) else -w - d
    # Product of the roots is 1/ta^2; the Herglotz root is the small one.
    return 2 / big


def _tail_root_derivative(ta: float, tb: float, z: complex, m: complex) -> complex:
    return -m / (2 * ta * ta * m + z - tb)


def _continued_fraction(params: JacobiParameters, z: complex, derivative: bool = False):
    if params.horizon is not None:
        raise HorizonError(
            "the Stieltjes transform needs the full parameter sequence; "
            "use params.truncated() to close a horizon-limited head explicitly"
        )
    m = _tail_root(params.tail_a, params.tail_b, z)
    dm = _tail_root_derivative(params.tail_a, params.tail_b, z, m) if derivative else 0j
    length = params.head_length
    if length:
        a, b = params.coefficients(length)
        for ak, bk in zip(reversed(a.tolist()), reversed(b.tolist())):
            den = bk - z - ak * ak * m
            if den == 0:
                return complex(math.inf), complex(math.inf)
            m = 1 / den
            if derivative:
                dm = m * m * (1 + ak * ak * dm)
    return m, dm


def stieltjes_F(params: JacobiParameters, z: complex) -> complex:
    """``F_mu(z)`` for ``Im z != 0``.

    Raises:
        ValueError: if ``z`` is real (use :func:`boundary_F`).
    """
    z = complex(z)
    if z.imag == 0:
        raise ValueError("stieltjes_F needs Im z != 0; use boundary_F on the real axis")
    return _continued_fraction(params, z)[0]


def stieltjes_dF(params: JacobiParameters, z: complex) -> complex:
    """``F'(z)`` by differentiating the continued fraction exactly.

    Real ``z`` is accepted when it lies outside the essential spectrum; there
    the tail root is taken by continuity from the upper half-plane.
    """
    return _continued_fraction(params, complex(z), derivative=True)[1]


def _stieltjes_real(params: JacobiParameters, x: float) -> float:
    lo, hi = params.essential_spectrum
    if lo <= x <= hi:
        raise ValueError(f"{x} lies in the essential spectrum [{lo}, {hi}]")
    return _continued_fraction(params, complex(x))[0].real


@dataclass(frozen=True)
class BoundaryValue:
    """``F(x + i0)`` with the vertical path it was read from."""

    x: float
    F: complex
    eps_path: tuple[float, ...]
    err_estimate: float
    converged: bool
    message: str = ""


def boundary_F(
    params: JacobiParameters,
    x: float,
    threshold: float = DEFAULT_CAUCHY_THRESHOLD,
    richardson: bool = False,
) -> BoundaryValue:
    """Boundary value ``F(x + i0)`` along ``eps_k = 2^-k``, ``k = 10..40``.

    The error estimate is ``|F(x + i eps_last) - F(x + 2i eps_last)|``.  When
    it exceeds ``threshold`` the result is flagged (``converged=False``) but
    still returned.  ``richardson=True`` replaces the last value by the linear
    extrapolation ``2 F(eps) - F(2 eps)``.
    """
    x = float(x)
    eps_path = tuple(2.0 ** -k for k in DEFAULT_EPS_EXPONENTS)
    values = [stieltjes_F(params, complex(x, eps)) for eps in eps_path]
    last, prev = values[-1], values[-2]
    err = abs(last - prev)
    F = 2 * last - prev if richardson else last
    converged = err <= threshold
    msg = "" if converged else "not a strong Lebesgue point (numerically)"
    return BoundaryValue(x, F, eps_path, err, converged, msg)


def rank_one_F(F: complex, beta1: float) -> complex:
    """Transform of the measure with ``b_1 -> b_1 + beta1``: ``F / (1 + beta1 F)``.

    Raises:
        PerturbedEigenvalue: at a pole, i.e. an eigenvalue of the perturbed
            Jacobi matrix.
    """
    F = complex(F)
    den = 1 + beta1 * F
    if abs(den) <= 1e-14 * (1 + abs(beta1 * F)):
        raise PerturbedEigenvalue(f"1 + beta1 F = {den!r} vanishes for beta1={beta1}")
    return F / den


@dataclass(frozen=True)
class WeightBundle:
    x: float
    F: complex
    w: float
    w_tilde: float
    w_beta: float | None = None
    beta1: float | None = None


def weights(
    params: JacobiParameters,
    x: float,
    beta1: float | None = None,
    threshold: float = DEFAULT_CAUCHY_THRESHOLD,
) -> WeightBundle:
    """Absolutely continuous weights at a boundary point.

    ``w = Im F(x+i0) / pi``, the second-kind weight ``w / |F|^2`` and, when
    ``beta1`` is given, the rank-one perturbed weight
    ``w / (1 + 2 beta1 Re F + beta1^2 |F|^2)``.
    """
    bv = boundary_F(params, x, threshold)
    if not bv.converged:
        raise NotStrongLebesguePoint(
            f"x={x}: boundary value did not settle (err {bv.err_estimate:.3g})"
        )
    F = bv.F
    w = max(F.imag, 0.0) / math.pi
    absF2 = abs(F) ** 2
    if absF2 == 0:
        raise UndefinedWeight(f"F(x+i0) = 0 at x={x}; second-kind weight undefined")
    w_beta = None
    if beta1 is not None:
        den = 1 + 2 * beta1 * F.real + beta1 * beta1 * absF2
        if den <= 0:
            raise PerturbedEigenvalue(f"1 + beta1 F(x+i0) = 0 at x={x}")
        w_beta = w / den
    return WeightBundle(float(x), F, w, w / absF2, w_beta, beta1)


def second_kind_weight_via_strip(params: JacobiParameters, x: float) -> float:
    """``a_1^2`` times the weight of the stripped measure."""
    stripped, mass = strip(params)
    return mass * weights(stripped, x).w


class Eigenvalue(NamedTuple):
    E: float
    mass: float
    residual: float


def eigenvalue_and_mass(
    params: JacobiParameters, beta1: float, bracket: tuple[float, float]
) -> Eigenvalue | None:
    """Eigenvalue of the ``b_1 + beta1`` operator in a bracket off the spectrum.

    Solves ``1 + beta1 F(E) = 0``; the point mass is
    ``1 / (beta1^2 F'(E))``.  Returns ``None`` when the bracket holds no sign
    change (or only a sign change across a pole of F).
    """
    lo, hi = sorted(float(v) for v in bracket)
    elo, ehi = params.essential_spectrum
    if not (hi < elo or lo > ehi):
        raise ValueError(f"bracket [{lo}, {hi}] meets the essential spectrum [{elo}, {ehi}]")
    if beta1 == 0:
        return None

    def f(E):
        return 1 + beta1 * _stieltjes_real(params, E)

    flo, fhi = f(lo), f(hi)
    if not (math.isfinite(flo) and math.isfinite(fhi)) or flo * fhi > 0:
        return None
    if flo == 0:
        E = lo
    elif fhi == 0:
        E = hi
    else:
        E = brentq(f, lo, hi, xtol=1e-15, rtol=4 * 2.220446049250313e-16, maxiter=500)
    residual = abs(f(E))
    if residual > 1e-12:
        return None
    dF = stieltjes_dF(params, E).real
    return Eigenvalue(E, 1 / (beta1 * beta1 * dF), residual)
