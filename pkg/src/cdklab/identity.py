"""Quadrature check of the sinc integral identity used for the rank-one limit.

For ``Im a > 0 > Im b`` and ``rho > 0``,

    int sin(pi rho (s - a)) / (pi (s - a)(s - b)) ds
        = - int sin(pi rho (s - b)) / (pi (s - a)(s - b)) ds,

both sides over the real line.  Each side is integrated on its own by
adaptive Gauss-Kronrod quadrature over ``|s| <= R``, with ``R`` chosen from
an explicit tail bound so truncation costs less than half the tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec

__all__ = ["IdentityCheck", "contour_form", "sinc_identity_check", "truncation_radius"]


class QuadratureError(ArithmeticError):
    def __init__(self, achieved: float, requested: float):
        self.achieved = achieved
        super().__init__(f"adaptive quadrature reached {achieved:.3g}, asked for {requested:.3g}")


@dataclass(frozen=True)
class IdentityCheck:
    lhs: complex
    rhs_neg: complex
    max_dev: float
    radius: float
    quad_err: float
    converged: bool


def truncation_radius(omega: float, amplitude: float, c: float, tol: float) -> float:
    """Radius beyond which both tails of an oscillatory ``O(s^-2)`` integrand are below ``tol``.

    Integrand form: ``sin(omega s + phase) g(s)`` with ``|sin| <= amplitude``
    on the real line and ``|g(s)| <= 1 / (pi (|s| - c)^2)``.  Integration by
    parts bounds both tails by ``4 amplitude / (pi omega (R - c)^2)``; the
    crude absolute bound gives ``2 amplitude / (pi (R - c))``.  The smaller
    admissible radius is returned.
    """
    crude = c + 2 * amplitude / (math.pi * tol)
    if omega <= 0:
        return crude
    ibp = c + math.sqrt(4 * amplitude / (math.pi * omega * tol))
    return min(crude, ibp)


def _integrate(f, R, tol, points):
    inner = sorted({float(p) for p in points if -R < p < R})
    res, err, info = quad_vec(
        lambda s: np.array([f(s).real, f(s).imag]),
        -R,
        R,
        epsabs=tol,
        epsrel=0.0,
        limit=20000,
        points=inner or None,
        full_output=True,
    )
    return complex(res[0], res[1]), float(err), bool(info.success)


def sinc_identity_check(
    rho: float, a: complex, b: complex, quad_tol: float = 1e-6, strict: bool = False
) -> IdentityCheck:
    """Integrate both sides of the identity independently.

    Returns the left side, the right side without its minus sign and
    ``|lhs + rhs_neg|``.  With ``strict=True`` a quadrature that misses its
    budget raises :class:`QuadratureError`; otherwise it is reported through
    ``converged`` and ``quad_err``.
    """
    a, b = complex(a), complex(b)
    if not (a.imag > 0 > b.imag):
        raise ValueError("need Im a > 0 > Im b")
    if not rho > 0:
        raise ValueError("rho must be positive")
    if quad_tol <= 0:
        raise ValueError("quad_tol must be positive")
    omega = math.pi * rho
    amplitude = math.cosh(omega * max(abs(a.imag), abs(b.imag)))
    c = max(abs(a), abs(b))
    R = truncation_radius(omega, amplitude, c, quad_tol / 4)

    def left(s):
        return np.sin(omega * (s - a)) / (math.pi * (s - a) * (s - b))

    def right(s):
        return np.sin(omega * (s - b)) / (math.pi * (s - a) * (s - b))

    points = (a.real, b.real, 0.0)
    lhs, err_l, ok_l = _integrate(left, R, quad_tol / 8, points)
    rhs, err_r, ok_r = _integrate(right, R, quad_tol / 8, points)
    quad_err = err_l + err_r
    converged = ok_l and ok_r and quad_err <= quad_tol / 2
    if strict and not converged:
        raise QuadratureError(quad_err, quad_tol / 2)
    return IdentityCheck(lhs, rhs, abs(lhs + rhs), R, quad_err, converged)


def contour_form(rho: float, a: complex, b: complex, quad_tol: float = 1e-6) -> complex:
    """``int (e^{i pi rho (a - s)} - 1) / (2 pi i (s - b)(a - s)) ds`` by quadrature.

    The oscillatory part is truncated with the same tail bound; the
    non-oscillatory ``-1`` part decays like ``s^-2`` without oscillation and
    is integrated over the whole line.
    """
    a, b = complex(a), complex(b)
    omega = math.pi * rho
    c = max(abs(a), abs(b))
    # |e^{i omega (a - s)}| = e^{-omega Im a} <= 1; the 2 pi i denominator
    # halves the bound relative to the sine integrands.
    R = truncation_radius(omega, 0.5, c, quad_tol / 4)

    def osc(s):
        return np.exp(1j * omega * (a - s)) / (2j * math.pi * (s - b) * (a - s))

    def flat(s):
        return -1 / (2j * math.pi * (s - b) * (a - s))

    part1, _, _ = _integrate(osc, R, quad_tol / 8, (a.real, b.real, 0.0))
    res, _ = quad_vec(
        lambda s: np.array([flat(s).real, flat(s).imag]),
        -np.inf,
        np.inf,
        epsabs=quad_tol / 8,
        epsrel=0.0,
        limit=20000,
    )
    return part1 + complex(res[0], res[1])
