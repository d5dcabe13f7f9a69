import math

import numpy as np
import pytest

from halfint.cusp import (
    ContourSpec, ToleranceError, build_cusp_triple, eval_f, eval_f_many, extract_coeffs,
    fricke_is_identity, growth_constant, transform_g, transform_h, triple_from_sequences,
)

# lam_g(1), lam_g(9) from the y0 = 0.02, S = 4096 extraction
LAM_G1 = -0.125
LAM_G9 = 0.04009376869372399


def test_eval_f_far_up(form10k):
    z = 10j
    assert abs(eval_f(z, form10k) - math.exp(-20 * math.pi)) < 1e-30 + 1e-12 * math.exp(-20 * math.pi)


def test_eval_f_periodic(form10k):
    z = 0.3 + 0.05j
    assert abs(eval_f(z, form10k) - eval_f(z + 1, form10k)) < 1e-10


def test_h_fixed_point(form10k):
    z = 0.5j
    assert transform_h(z, form10k) == pytest.approx(eval_f(z, form10k), rel=1e-12)


def test_g_branch_guard(form10k):
    with pytest.raises(ToleranceError):
        transform_g(0.1 - 0.1j, form10k)
    assert np.isfinite(transform_g(0.125 + 0.05j, form10k))


def test_contour_validation():
    with pytest.raises(ValueError):
        ContourSpec(y0=0)
    with pytest.raises(ValueError):
        ContourSpec(S=1000)


def test_self_inversion_f(form10k):
    lam, err = extract_coeffs("f", 50, ContourSpec(), form10k)
    dev = np.abs(lam[1:] - form10k.lam[1:51])
    assert np.all(dev <= err[1:])
    assert err[1:].max() < 1e-6


def test_h_two_contours(form10k):
    h1, e1 = extract_coeffs("h", 50, ContourSpec(y0=0.02), form10k)
    h2, e2 = extract_coeffs("h", 50, ContourSpec(y0=0.01), form10k)
    assert np.all(np.abs(h1[1:] - h2[1:]) <= e1[1:] + e2[1:])
    assert np.all(np.abs(h1.imag[1:]) <= e1[1:])
    # Fricke image is f itself
    assert np.all(np.abs(h1[1:] - form10k.lam[1:51]) <= e1[1:])


def test_g_coefficients(form10k):
    g, err = extract_coeffs("g", 50, ContourSpec(), form10k)
    assert abs(g[1] - LAM_G1) <= err[1]
    assert abs(g[9] - LAM_G9) <= err[9] + 1e-12
    assert np.all(np.abs(g.imag[1:]) <= err[1:])
    n = np.arange(51)
    off = (n % 8 != 1) & (n > 0)
    assert np.all(np.abs(g[off]) <= err[off])


def test_tolerance_error_when_too_high(form10k):
    with pytest.raises(ToleranceError):
        extract_coeffs("h", 50, ContourSpec(y0=0.25), form10k, tol=1e-6)


def test_build_triple(triple20k):
    assert triple20k.kinds == {"f": "exact", "g": "numeric", "h": "exact(fricke)"}
    assert fricke_is_identity()
    lam, err = triple20k.coeffs_for(3)
    assert lam is triple20k.lam_h and err.max() == 0
    assert triple20k.coeffs_for(6)[0] is triple20k.lam_g
    assert triple20k.coeffs_for(4)[0] is triple20k.lam_f


def _meansq_slope(lam, x):
    m2 = np.cumsum(lam[1:] ** 2)[x - 1]
    return np.polyfit(np.log(x), np.log(m2), 1)[0]


def test_meansq_of_h_linear(triple20k):
    assert abs(_meansq_slope(triple20k.h_extracted.real, np.arange(10, 51)) - 1) < 0.1
    x = np.logspace(2, np.log10(20_000), 20).astype(int)
    assert abs(_meansq_slope(triple20k.lam_h, x) - 1) < 0.1


def test_growth_constant_positive(form10k):
    A = growth_constant(form10k)
    n = np.arange(1, form10k.N + 1)
    assert np.all(np.abs(form10k.a[1:].astype(float)) <= A * n ** 2.25)


def test_triple_from_sequences():
    t = triple_from_sequences([0, 1.0, 2.0])
    assert t.N == 2 and t.kinds["h"] == "synthetic"


def test_eval_many_error_bound(form10k):
    z = np.array([0.1 + 0.02j, -0.3 + 0.05j])
    vals, errs = eval_f_many(z, form10k)
    assert np.all(errs < 1e-9)
