import csv
import io

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from cdklab import (
    JacobiParameters,
    RandomDiagonal,
    RankOne,
    apply,
    cd_kernel,
    diag_kernel_trace,
    eval_pq,
    perturbed_kernel_expansion,
    stieltjes_F,
    strip,
    transfer,
    weights,
)
from cdklab.output import COLUMNS, make_row, to_csv, to_json

EPS = np.finfo(float).eps
SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])

tail_a = st.floats(0.3, 1.0)
tail_b = st.floats(-0.5, 0.5)


@st.composite
def parameters(draw, max_head=12):
    ta, tb = draw(tail_a), draw(tail_b)
    L = draw(st.integers(0, max_head))
    head_a = draw(st.lists(st.floats(0.3, 1.5), min_size=L, max_size=L))
    head_b = draw(st.lists(st.floats(-1.0, 1.0), min_size=L, max_size=L))
    return JacobiParameters(tuple(head_a), tuple(head_b), ta, tb)


@st.composite
def bulk_point(draw, params):
    lo, hi = params.essential_spectrum
    return draw(st.floats(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo)))


@SETTINGS
@given(st.data(), parameters(), st.integers(1, 2000))
def test_transfer_determinant_is_one_up_to_rounding(data, P, n):
    z = data.draw(bulk_point(P))
    T = transfer(P, z, n)
    assert abs(T.det() - 1) <= 64 * EPS * max(1.0, T.norm() ** 2) * n


@SETTINGS
@given(st.data(), parameters(), st.integers(2, 1000))
def test_wronskian_is_constant(data, P, n):
    z = data.draw(bulk_point(P))
    e = eval_pq(P, z, n)
    a, _ = P.coefficients(n - 1)
    p, q = e.p, e.q
    wr = a * (q[1:] * p[:-1] - p[1:] * q[:-1])
    scale = a * (np.abs(q[1:] * p[:-1]) + np.abs(p[1:] * q[:-1]))
    assert np.all(np.abs(wr - 1) <= 64 * EPS * np.maximum(1.0, scale) * np.arange(1, n))


@SETTINGS
@given(parameters(), st.floats(-3, 3), st.floats(0.01, 3), st.booleans())
def test_herglotz_and_strip_relation(P, x, y, upper):
    z = complex(x, y if upper else -y)
    F = stieltjes_F(P, z)
    assert F.imag * z.imag > 0
    stripped, a1sq = strip(P)
    assert -1 / F - a1sq * stieltjes_F(stripped, z) == pytest.approx(z - P.b(1), rel=1e-10, abs=1e-10)


@SETTINGS
@given(st.data(), parameters(), st.integers(1, 500))
def test_kernel_symmetry_and_diagonal_growth(data, P, n):
    x = data.draw(bulk_point(P))
    y = data.draw(bulk_point(P))
    assert cd_kernel(P, x, y, n) == cd_kernel(P, y, x, n)
    tr = diag_kernel_trace(P, x, n)
    assert tr[0] == 1 and np.all(np.diff(tr) >= 0)
    assert cd_kernel(P, x, x, n).real >= 1


@SETTINGS
@given(st.data(), parameters(), st.integers(2, 300))
def test_sum_and_cd_formula_agree(data, P, n):
    x = data.draw(bulk_point(P))
    y = data.draw(bulk_point(P))
    if abs(x - y) < 1e-6:
        return
    s = cd_kernel(P, x, y, n)
    f = cd_kernel(P, x, y, n, method="cd_formula")
    assert abs(s - f) <= 1e-9 * max(1.0, abs(s))


@SETTINGS
@given(st.data(), parameters(), st.sampled_from([0.3, 1.0, -0.7]), st.integers(1, 400))
def test_rank_one_algebra(data, P, beta, n):
    x = data.draw(bulk_point(P))
    y = data.draw(bulk_point(P))
    base = eval_pq(P, x, n)
    pert = eval_pq(apply(P, RankOne(beta)), x, n)
    scale = np.abs(base.p) + abs(beta) * np.abs(base.q)
    assert np.all(np.abs(pert.p - (base.p - beta * base.q)) <= 1e-12 * np.maximum(1.0, scale) * n)
    lhs, rhs = perturbed_kernel_expansion(P, beta, x, y, n)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs), abs(rhs))


@SETTINGS
@given(parameters(max_head=3), st.floats(-0.6, 0.6), st.floats(-2, 2))
def test_real_points_give_real_values(P, t, beta):
    lo, hi = P.essential_spectrum
    x = lo + (hi - lo) * (0.5 + t * 0.5)
    e = eval_pq(P, x, 64)
    assert np.all(e.p.imag == 0) and np.all(e.q.imag == 0)


@settings(max_examples=15, deadline=None)
@given(parameters(max_head=3), st.floats(-0.6, 0.6), st.floats(-2, 2))
def test_weight_bundle_invariants(P, t, beta):
    lo, hi = P.essential_spectrum
    x = lo + (hi - lo) * (0.5 + t * 0.5)
    wb = weights(P, x, beta1=beta)
    assert wb.w > 0
    assert wb.w_tilde * abs(wb.F) ** 2 == pytest.approx(wb.w, rel=1e-9)
    den = 1 + 2 * beta * wb.F.real + beta * beta * abs(wb.F) ** 2
    assert wb.w_beta * den == pytest.approx(wb.w, rel=1e-9)


@SETTINGS
@given(
    st.floats(0.01, 2), st.floats(0.1, 2), st.sampled_from(["rademacher", "uniform_symmetric", "gaussian"]),
    st.integers(0, 2**32), st.integers(1, 500),
)
def test_draws_regenerate_bit_identically(c, p, dist, seed, k):
    a = RandomDiagonal(c, p, dist, seed=seed, horizon=500)
    b = RandomDiagonal(c, p, dist, seed=seed, horizon=k)
    assert a.draw(k) == b.draw(k) == a.draws()[k - 1]


finite = st.floats(-1e6, 1e6, allow_nan=False)


@st.composite
def rows(draw):
    count = draw(st.integers(0, 12))
    out = []
    for _ in range(count):
        out.append(make_row(
            "exp", "free", "none", draw(st.one_of(st.none(), st.integers(0, 5))),
            draw(st.sampled_from([0.0, 0.3, -0.5])), draw(st.sampled_from([1, 64, 512])),
            complex(draw(finite), draw(finite)), complex(draw(finite), draw(finite)),
            draw(st.sampled_from(["by_n", "by_diag"])),
            complex(draw(finite), draw(finite)), complex(draw(finite), 0.0),
            draw(st.one_of(st.none(), st.floats(0, 10))),
        ))
    return out


@SETTINGS
@given(rows(), st.randoms())
def test_output_is_order_independent_and_round_trips(table, rnd):
    shuffled = list(table)
    rnd.shuffle(shuffled)
    text = to_csv(table)
    assert to_csv(shuffled) == text
    assert to_json(shuffled, {"experiment_id": "exp", "command": "x", "measure": "free"}) == to_json(
        table, {"experiment_id": "exp", "command": "x", "measure": "free"}
    )
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert len(parsed) == len(table)
    assert tuple(parsed[0].keys()) == COLUMNS if parsed else text.strip() == ",".join(COLUMNS)
    originals = {(r["value_re"], r["value_im"]) for r in table}
    assert {(float(r["value_re"]), float(r["value_im"])) for r in parsed} == originals
