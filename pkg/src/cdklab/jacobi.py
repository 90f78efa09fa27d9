"""Jacobi parameters, orthonormal polynomials of both kinds, transfer matrices.

Measures are represented by their recurrence coefficients ``{a_n, b_n}``
(1-indexed, ``a_n > 0``) with a finite head and a constant tail.  The
first-kind polynomials satisfy

    x p_n = a_{n+1} p_{n+1} + b_{n+1} p_n + a_n p_{n-1},    p_0 = 1,

and the second-kind polynomials ``q_n`` satisfy the same recurrence with
``q_0 = 0``, ``q_1 = 1/a_1``.  Polynomial arrays are 0-indexed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "HorizonError",
    "JacobiParameters",
    "PolyEval",
    "RecurrenceOverflow",
    "TransferMatrix",
    "catalog",
    "eval_p",
    "eval_pq",
    "one_step",
    "strip",
    "transfer",
]


class RecurrenceOverflow(ArithmeticError):
    """A recurrence produced a non-finite value."""

    def __init__(self, index: int, what: str = "recurrence"):
        self.index = index
        super().__init__(f"{what} overflowed at index {index}")


class HorizonError(IndexError):
    """A coefficient beyond the materialized horizon was requested."""


def _trim(head: Sequence[float], tail: float) -> tuple[float, ...]:
    head = [float(v) for v in head]
    while head and head[-1] == tail:
        head.pop()
    return tuple(head)


@dataclass(frozen=True)
class JacobiParameters:
    """Recurrence coefficients with a finite head and a constant tail.

    ``head_a`` and ``head_b`` may have different lengths.  Trailing head
    entries equal to the tail value are dropped, so two parameter sets
    describing the same sequences compare equal.  ``horizon`` marks the last
    index that may be consumed (``None`` means unlimited); it is set by
    random perturbations, whose values beyond the horizon are undefined.
    """

    head_a: tuple[float, ...] = ()
    head_b: tuple[float, ...] = ()
    tail_a: float = 0.5
    tail_b: float = 0.0
    horizon: int | None = field(default=None, compare=True)

    def __post_init__(self):
        tail_a = float(self.tail_a)
        tail_b = float(self.tail_b)
        if not (tail_a > 0 and math.isfinite(tail_a)):
            raise ValueError(f"tail_a must be positive and finite, got {self.tail_a!r}")
        if not math.isfinite(tail_b):
            raise ValueError(f"tail_b must be finite, got {self.tail_b!r}")
        for i, v in enumerate(self.head_a, start=1):
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"a({i}) must be positive and finite, got {v!r}")
        for i, v in enumerate(self.head_b, start=1):
            if not math.isfinite(v):
                raise ValueError(f"b({i}) must be finite, got {v!r}")
        if self.horizon is not None and self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        object.__setattr__(self, "tail_a", tail_a)
        object.__setattr__(self, "tail_b", tail_b)
        object.__setattr__(self, "head_a", _trim(self.head_a, tail_a))
        object.__setattr__(self, "head_b", _trim(self.head_b, tail_b))

    def _check(self, n: int):
        if n < 1:
            raise IndexError("Jacobi parameters are 1-indexed")
        if self.horizon is not None and n > self.horizon:
            raise HorizonError(
                f"index {n} is beyond the materialized horizon {self.horizon}"
            )

    def a(self, n: int) -> float:
        self._check(n)
        return self.head_a[n - 1] if n <= len(self.head_a) else self.tail_a

    def b(self, n: int) -> float:
        self._check(n)
        return self.head_b[n - 1] if n <= len(self.head_b) else self.tail_b

    @property
    def head_length(self) -> int:
        return max(len(self.head_a), len(self.head_b))

    @property
    def alpha_minus(self) -> float:
        """inf_n a_n, attained on the head or the tail."""
        return min(self.head_a + (self.tail_a,))

    @property
    def essential_spectrum(self) -> tuple[float, float]:
        return (self.tail_b - 2 * self.tail_a, self.tail_b + 2 * self.tail_a)

    def coefficients(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Arrays ``(a_1..a_n, b_1..b_n)``."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        if n and self.horizon is not None and n > self.horizon:
            raise HorizonError(
                f"index {n} is beyond the materialized horizon {self.horizon}"
            )
        a = np.full(n, self.tail_a)
        b = np.full(n, self.tail_b)
        ma = min(n, len(self.head_a))
        mb = min(n, len(self.head_b))
        a[:ma] = self.head_a[:ma]
        b[:mb] = self.head_b[:mb]
        return a, b

    def truncated(self) -> "JacobiParameters":
        """The same head closed by the constant tail, horizon removed.

        This is an explicit, opt-in zero extension of a perturbation past its
        horizon.  It is exact for anything depending on indices up to the
        horizon and is used to attach a weight to horizon-limited measures.
        """
        return JacobiParameters(self.head_a, self.head_b, self.tail_a, self.tail_b)

    def __repr__(self) -> str:
        def short(t):
            return repr(list(t)) if len(t) <= 6 else f"[{t[0]!r}, ... ({len(t)} entries)]"

        h = "" if self.horizon is None else f", horizon={self.horizon}"
        return (
            f"JacobiParameters(head_a={short(self.head_a)}, head_b={short(self.head_b)}, "
            f"tail_a={self.tail_a!r}, tail_b={self.tail_b!r}{h})"
        )


def catalog(name: str, **custom) -> JacobiParameters:
    """Named measures.

    ``free``: semicircle law ``(2/pi) sqrt(1 - x^2)`` on [-1, 1].
    ``chebyshev1``: arcsine law ``1 / (pi sqrt(1 - x^2))``.
    ``custom``: keyword fields ``head_a``, ``head_b``, ``tail_a``, ``tail_b``.
    """
    if name == "free":
        return JacobiParameters((), (), 0.5, 0.0)
    if name == "chebyshev1":
        return JacobiParameters((1 / math.sqrt(2),), (), 0.5, 0.0)
    if name == "custom":
        unknown = set(custom) - {"head_a", "head_b", "tail_a", "tail_b"}
        if unknown:
            raise ValueError(f"unknown custom fields: {sorted(unknown)}")
        if "tail_a" not in custom:
            raise ValueError("custom measure requires tail_a")
        return JacobiParameters(
            tuple(custom.get("head_a", ())),
            tuple(custom.get("head_b", ())),
            custom["tail_a"],
            custom.get("tail_b", 0.0),
        )
    raise ValueError(f"unknown catalog measure {name!r}")


@dataclass(frozen=True)
class PolyEval:
    """``p_0..p_{n-1}`` and ``q_0..q_{n-1}`` at a single point."""

    z: complex
    n: int
    p: np.ndarray
    q: np.ndarray


def _first_nonfinite(values) -> int:
    for i, v in enumerate(values):
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            return i
    return -1


_BIG = 2.0**300
_SMALL = 2.0**-300


def _solution(a: np.ndarray, b: np.ndarray, z, n: int, start: float, prev: float) -> np.ndarray:
    """Values ``s_0..s_{n-1}`` of the three-term recurrence.

    ``start`` is ``s_0`` and ``prev`` is ``a_0 s_{-1}``.  The running pair is
    kept near unit size by exact power-of-two rescaling, so intermediate
    underflow never injects rounding noise; the returned values are the true
    ones (non-finite where they leave the double range).
    """
    # Python scalars beat numpy per-step overhead for a single point.
    al = a.tolist()
    bl = b.tolist()
    cur, before = start, prev
    vals = [cur]
    exps = [0]
    push_v = vals.append
    push_e = exps.append
    shift = 0
    ldexp = math.ldexp
    frexp = math.frexp
    is_real = isinstance(z, float)
    for k in range(n - 1):
        ak = al[k]
        nxt = ((z - bl[k]) * cur - before) / ak
        before = ak * cur
        cur = nxt
        m = abs(cur) if is_real else max(abs(cur.real), abs(cur.imag))
        if m > _BIG or (0.0 < m < _SMALL):
            e = max(-1000, min(1000, frexp(m)[1]))
            if is_real:
                cur = ldexp(cur, -e)
                before = ldexp(before, -e)
            else:
                f = ldexp(1.0, -e)
                cur = cur * f
                before = before * f
            shift += e
        push_v(cur)
        push_e(shift)
    out = np.asarray(vals, dtype=complex)
    if shift or any(exps):
        e = np.asarray(exps)
        with np.errstate(all="ignore"):
            out = np.ldexp(out.real, e) + 1j * np.ldexp(out.imag, e)
    return out


def _check_finite(values: np.ndarray):
    if not np.isfinite(values).all():
        raise RecurrenceOverflow(_first_nonfinite(values), "polynomial recurrence")


def eval_p(params: JacobiParameters, z: complex, n: int) -> np.ndarray:
    """First-kind values ``p_0..p_{n-1}`` only.

    Kernels of the first kind need nothing else, and skipping ``q`` avoids
    spurious overflow where ``q_n`` grows but ``p_n`` decays (at eigenvalues).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    z = complex(z)
    a, b = params.coefficients(n - 1)
    point = z.real if z.imag == 0 else z
    p = _solution(a, b, point, n, 1.0, 0.0)
    _check_finite(p)
    return p


def eval_pq(params: JacobiParameters, z: complex, n: int) -> PolyEval:
    """Evaluate ``p_0..p_{n-1}`` and ``q_0..q_{n-1}`` by forward recurrence.

    Real ``z`` is run in real arithmetic, so the imaginary parts of the
    returned arrays are exactly zero.

    Raises:
        ValueError: if ``n < 1``.
        RecurrenceOverflow: if a value leaves the double range; ``index`` is
            the first offending polynomial index.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    z = complex(z)
    a, b = params.coefficients(n - 1)
    point = z.real if z.imag == 0 else z
    p = _solution(a, b, point, n, 1.0, 0.0)
    # a_0 q_{-1} = -1 gives q_1 = 1/a_1.
    q = _solution(a, b, point, n, 0.0, -1.0)
    if not (np.isfinite(p).all() and np.isfinite(q).all()):
        idx = min(i for i in (_first_nonfinite(p), _first_nonfinite(q)) if i >= 0)
        raise RecurrenceOverflow(idx, "polynomial recurrence")
    return PolyEval(z, n, p, q)


@dataclass(frozen=True)
class TransferMatrix:
    """A 2x2 complex matrix of unit determinant."""

    m: np.ndarray

    def det(self) -> complex:
        m = self.m
        return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    def inverse(self) -> np.ndarray:
        # The adjugate: the determinant is 1 by construction, and dividing by
        # its computed value would only add the cancellation error of det().
        m = self.m
        return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])

    def norm(self) -> float:
        return float(np.linalg.norm(self.m, 2))

    def inverse_norm(self) -> float:
        return float(np.linalg.norm(self.inverse(), 2))

    def frobenius_sq(self) -> float:
        return float(np.sum(np.abs(self.m) ** 2))


def one_step(params: JacobiParameters, z: complex, j: int) -> np.ndarray:
    """The one-step matrix ``S_j(z) = [[(z - b_j)/a_j, -1/a_j], [a_j, 0]]``."""
    aj = params.a(j)
    bj = params.b(j)
    return np.array([[(z - bj) / aj, -1 / aj], [aj, 0]], dtype=complex)


def transfer(params: JacobiParameters, z: complex, n: int) -> TransferMatrix:
    """``Phi_n(z) = S_n(z) ... S_1(z)`` by direct matrix multiplication.

    The result equals ``[[p_n, -q_n], [a_n p_{n-1}, -a_n q_{n-1}]]``; this
    routine never consults :func:`eval_pq`.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    z = complex(z)
    a, b = params.coefficients(n)
    m00, m01, m10, m11 = 1 + 0j, 0j, 0j, 1 + 0j
    for j, (aj, bj) in enumerate(zip(a.tolist(), b.tolist()), start=1):
        s00 = (z - bj) / aj
        s01 = -1 / aj
        m00, m01, m10, m11 = (
            s00 * m00 + s01 * m10,
            s00 * m01 + s01 * m11,
            aj * m00,
            aj * m01,
        )
        if not (
            math.isfinite(abs(m00)) and math.isfinite(abs(m01))
            and math.isfinite(abs(m10)) and math.isfinite(abs(m11))
        ):
            raise RecurrenceOverflow(j, "transfer matrix product")
    return TransferMatrix(np.array([[m00, m01], [m10, m11]]))


def strip(params: JacobiParameters) -> tuple[JacobiParameters, float]:
    """Drop the first recurrence row: ``{a_{n+1}, b_{n+1}}``.

    Returns the stripped parameters and ``a_1^2``, the mass of the
    second-kind orthogonality measure (the stripped measure times ``a_1^2``).
    """
    a1 = params.a(1)
    horizon = None if params.horizon is None else params.horizon - 1
    stripped = JacobiParameters(
        params.head_a[1:], params.head_b[1:], params.tail_a, params.tail_b, horizon
    )
    return stripped, a1 * a1
