"""Independent reference computations used by the tests.

None of these call into the package's recurrence or continued fraction:
polynomials come from mpmath at 50 digits, Stieltjes transforms from closed
forms, quadrature or Gauss rules of a large truncated Jacobi matrix.
"""

import math

import mpmath
import numpy as np
from scipy.integrate import quad
from scipy.linalg import eigh_tridiagonal
from scipy.special import zeta


def mp_pq(a, b, z, n, dps=50):
    """p_0..p_{n-1}, q_0..q_{n-1} with coefficient arrays ``a``, ``b`` (1-indexed data)."""
    with mpmath.workdps(dps):
        z = mpmath.mpc(z)
        p = [mpmath.mpf(1)]
        q = [mpmath.mpf(0)]
        pm, qm = mpmath.mpf(0), mpmath.mpf(-1)  # a_0 p_{-1}, a_0 q_{-1}
        for k in range(n - 1):
            ak, bk = mpmath.mpf(a[k]), mpmath.mpf(b[k])
            pn = ((z - bk) * p[-1] - pm) / ak
            qn = ((z - bk) * q[-1] - qm) / ak
            pm, qm = ak * p[-1], ak * q[-1]
            p.append(pn)
            q.append(qn)
        return (np.array([complex(v) for v in p]), np.array([complex(v) for v in q]))


def coeffs(head_a, head_b, tail_a, tail_b, n):
    a = np.full(n, float(tail_a))
    b = np.full(n, float(tail_b))
    a[: len(head_a)] = head_a[:n]
    b[: len(head_b)] = head_b[:n]
    return a, b


def free_F(z):
    """Semicircle transform 2(sqrt(z^2 - 1) - z) on the Herglotz branch."""
    z = complex(z)
    r = 2 * (np.sqrt(z - 1) * np.sqrt(z + 1) - z)
    return complex(r)


def arcsine_F(z):
    z = complex(z)
    return complex(-1 / (np.sqrt(z - 1) * np.sqrt(z + 1)))


def quad_F(density, z, lo=-1.0, hi=1.0, weight=None):
    """F(z) = int density(t) / (t - z) dt by adaptive quadrature."""
    z = complex(z)
    kw = {"weight": weight[0], "wvar": weight[1]} if weight else {}
    re = quad(lambda t: density(t) * ((t - z).conjugate() / abs(t - z) ** 2).real, lo, hi, limit=400, **kw)[0]
    im = quad(lambda t: density(t) * ((t - z).conjugate() / abs(t - z) ** 2).imag, lo, hi, limit=400, **kw)[0]
    return complex(re, im)


def semicircle_density(t):
    return 2 / math.pi * math.sqrt(max(0.0, 1 - t * t))


def gauss_F(head_a, head_b, tail_a, tail_b, z, N=4000):
    """F(z) from the Gauss rule of the N x N truncated Jacobi matrix."""
    a, b = coeffs(head_a, head_b, tail_a, tail_b, N)
    nodes, vecs = eigh_tridiagonal(b, a[:-1])
    w = vecs[0, :] ** 2
    return complex(np.sum(w / (nodes - complex(z))))


def free_weight(x):
    return 2 / math.pi * math.sqrt(1 - x * x)


def arcsine_density(x):
    """Equilibrium density of [-1, 1]."""
    return 1 / (math.pi * math.sqrt(1 - x * x))


def free_l2_sums(amplitude, exponent, N):
    """S_N and S_2N of the L2 condition for the free measure at x = 0.

    There |p_k| + |p_{k-1}| + |q_k| + |q_{k-1}| = 1 + 2 for every k >= 1.
    """
    s = 2 * exponent
    c = 81 * amplitude**2

    def partial(M):
        return c * (zeta(s, 1) - zeta(s, M + 1))

    return float(partial(N)), float(partial(2 * N))


# Frozen values derived from the oracles above (re-derived in test_oracles.py).
FREE_F_2I = 0.4721359549995796j  # 2i(sqrt(5) - 2)
ARCSINE_F_2I = 0.4472135954999579j  # i / sqrt(5)
FREE_F_03 = complex(-0.6, 1.9078784028338915)  # -0.6 + 2 sqrt(0.91) i
W_FREE_0 = 0.6366197723675814  # 2/pi
W_TILDE_FREE_0 = 0.15915494309189535  # 1/(2 pi)
W_BETA1_FREE_0 = 0.12732395447351627  # 2/(5 pi)
MIXED_LIMIT_03 = 0.6593406593406593  # -2 Re F rho / w = 1.2 / (2 * 0.91)
KERNEL_SAT_125 = 4.0 / 3.0  # sum_j 4^-j
MASS_125 = 0.75
L2_S_N = 15.549225812385128  # amplitude 0.2, exponent 0.6, N = 1e4
L2_S_2N = 15.881576233547248
