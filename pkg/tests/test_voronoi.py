import math

import numpy as np
import pytest

from halfint.cusp import triple_from_sequences
from halfint.voronoi import (
    RangeError, TwoRouteError, VoronoiParams, compare, compare_progression, direct_partial_sum,
    direct_progression_sum, grid_residual_slope, loglog_slope, main_term_many, mean_value_metric,
    phi_period, progression_sum, residual_scan, residual_slopes, voronoi_main_term,
    voronoi_progression, zero_value,
)
import oracles

# sum_{n <= 100} lam(n) R_3(n - 1), from the exact integer coefficients
S_100_1_3 = -5.0106801616325205
# L(0, a/d) by the Mellin integral with 3000 nodes
ZERO_VALUES = {(1, 0): 0.2894390774157715, (3, 1): -0.3655011816520163, (5, 1): 8.655480182455124}


def test_direct_sum_examples(form10k):
    lam = form10k.lam
    assert direct_partial_sum(500.5, 0, 1, lam) == pytest.approx(math.fsum(lam[1:501]), abs=1e-12)
    assert direct_partial_sum(0.5, 0, 1, lam) == 0
    assert direct_partial_sum(100, 1, 3, lam) == pytest.approx(S_100_1_3, abs=1e-12)
    ref = math.fsum(int(form10k.a[n]) / n ** 1.75 * oracles.ramanujan(3, n - 1) for n in range(1, 101))
    assert ref == pytest.approx(S_100_1_3, abs=1e-12)


def test_direct_sum_range(form10k):
    with pytest.raises(RangeError):
        direct_partial_sum(2e4, 0, 1, form10k.lam)


def test_progression_routes(form10k):
    lam = form10k.lam
    assert progression_sum(700, 0, 1, lam) == pytest.approx(direct_partial_sum(700, 0, 1, lam))
    for Q in (3, 9, 15, 21):
        for a in range(Q):
            direct_progression_sum(3000.5, a, Q, lam)


def test_two_route_error_detected(form10k, monkeypatch):
    import halfint.voronoi as v
    monkeypatch.setattr(v, "TWO_ROUTE_REL", -1.0)
    with pytest.raises(TwoRouteError):
        direct_progression_sum(100.5, 1, 3, form10k.lam)


def test_params_validation():
    with pytest.raises(ValueError):
        VoronoiParams(x=-1, M=10)
    with pytest.raises(ValueError):
        VoronoiParams(x=10, M=10, dual="other")
    assert VoronoiParams(1000, 64).in_theorem_range
    assert not VoronoiParams(1000, 64, d=40).in_theorem_range


def test_zero_coefficients_give_zero_main_term():
    t = triple_from_sequences(np.zeros(200))
    assert voronoi_main_term(VoronoiParams(100.5, 150, 3, 1), t) == 0


def test_d1_main_term_tracks_direct_sum(triple20k):
    rep = compare(VoronoiParams(1000.5, 64), triple20k)
    assert rep.residual == abs(rep.direct_value - rep.main_term)
    assert rep.residual < 0.25 * max(abs(rep.direct_value), 1.0) + 2.0


def test_progression_Q1(triple20k):
    p = VoronoiParams(777.5, 128)
    assert voronoi_progression(p, triple20k) == pytest.approx(voronoi_main_term(p, triple20k))
    with pytest.raises(ValueError):
        voronoi_progression(VoronoiParams(777.5, 128, 4, 1), triple20k)


def test_progression_Q3_below_d1_envelope(triple20k):
    prog = compare_progression(VoronoiParams(2000.5, 1000, 3, 1), triple20k)
    plain = compare(VoronoiParams(2000.5, 1000, 1, 0), triple20k)
    assert prog.residual < plain.residual


def test_progression_Q9_runs(triple100k):
    rep = compare_progression(VoronoiParams(2000.5, 1000, 9, 0), triple100k)
    assert np.isfinite(rep.residual)


@pytest.mark.parametrize("d,a", [(1, 0), (3, 1), (5, 1)])
def test_median_residual_decreases(triple20k, d, a):
    xs = np.arange(1000, 1200) + 0.5
    rows = residual_scan(xs, [64, 4096], d, a, triple20k)
    med = {M: np.median([r["residual"] for r in rows if r["M"] == M]) for M in (64, 4096)}
    assert med[4096] < med[64]


def test_residual_growth_in_x(triple20k):
    X = [1000, 2000, 4000, 8000, 16000]
    rms = []
    for x0 in X:
        rows = residual_scan(x0 + np.arange(100) + 0.5, [256], 1, 0, triple20k)
        rms.append(math.sqrt(np.mean([r["residual"] ** 2 for r in rows])))
    assert loglog_slope(X, rms) <= 0.5 + 1 / 6 + 0.1


@pytest.mark.parametrize("d,a", sorted(ZERO_VALUES))
def test_zero_value_fixture(form100k, d, a):
    assert zero_value(a, d, form100k.lam) == pytest.approx(ZERO_VALUES[(d, a)], abs=1e-9)


def test_zero_value_is_the_residual_offset(triple100k):
    # mean of direct - main over a long window equals L(0, a/d)
    xs = np.arange(20_000, 21_000) + 0.5
    for (d, a), c in ZERO_VALUES.items():
        rows = residual_scan(xs, [2000], d, a, triple100k)
        mean = np.mean([r["direct"] - r["main"] for r in rows])
        assert mean == pytest.approx(c, abs=0.3)


def test_constant_term_grid_slope(triple20k):
    xs = 4000 + np.arange(200) + 0.5
    rows = residual_scan(xs, [2 ** k for k in range(6, 13)], 1, 0, triple20k, constant=True)
    assert -0.65 <= grid_residual_slope(rows) <= -0.35


@pytest.mark.parametrize("d", [3, 2, 6, 4])
def test_table_dual_literal_discrepancy(triple20k, d):
    # phi_a(n, d) taken literally leaves a much larger residual than the reflected weight
    xs = np.arange(2000, 2200) + 0.5
    M = 50 if d % 2 == 0 else 1024
    med = {}
    for dual in ("reflected", "table"):
        rows = residual_scan(xs, [M], d, 1, triple20k, dual=dual, constant=True)
        med[dual] = np.median([r["residual"] for r in rows])
    assert med["table"] > 3 * med["reflected"]


def test_phi_period_lengths():
    assert len(phi_period(1, 5)) == 5
    assert len(phi_period(1, 6)) == 24
    assert len(phi_period(1, 8)) == 8
    assert np.allclose(phi_period(0, 1), math.sqrt(2))


def test_even_d_needs_g_range(triple20k):
    with pytest.raises(RangeError):
        main_term_many([1000.5], 1, 6, 64, triple20k)


def test_residual_slopes_shape(triple20k):
    rows = residual_scan([1000.5, 2000.5], [64, 128, 256], 1, 0, triple20k)
    assert len(rows) == 6
    assert set(residual_slopes(rows)) == {1000.5, 2000.5}


def test_mean_value_metric(form10k):
    a = mean_value_metric(form10k.lam, 5000)
    b = mean_value_metric(form10k.lam, 10_000)
    assert a["constant"] == pytest.approx(b["constant"], rel=0.2)
    assert b["constant"] == 1.0 and b["argmax"] == 1
