import json

import pytest

from halfint.verify import (
    SCHEMA_VERSION, verify_kbound, verify_kform, verify_root_sums, verify_sum_identities, verify_twist,
)

KEYS = {"schema_version", "case", "sweep", "n_checked", "max_abs_err", "worst_witness",
        "violations", "violation_examples", "passed"}


def test_report_schema_and_json():
    (rep,) = verify_sum_identities("d", 15)
    assert KEYS <= set(rep)
    assert rep["schema_version"] == SCHEMA_VERSION
    json.dumps(rep)


def test_case_a_small_sweep():
    reps = verify_sum_identities("a", 60)
    ident = reps[0]
    assert ident["case"] == "a" and ident["passed"]
    assert ident["max_abs_err"] < 1e-9
    assert {r["case"] for r in reps} == {"a", "d", "e"}


def test_case_a_c12():
    # c = 12 = 3 * 4 alone: sweep to 12 touches only c in {4, 8, 12}
    ident = verify_sum_identities("a", 12, per_triple=10**6)[0]
    assert ident["passed"] and ident["n_checked"] >= 144


def test_case_b_q15():
    ident, weil = verify_sum_identities("b", 15)
    assert ident["passed"] and ident["max_abs_err"] < 1e-9
    assert ident["n_checked"] == 225
    assert weil["passed"]


def test_case_c_literal_statement_fails():
    (rep,) = verify_sum_identities("c", primes=(3,), alpha_max=3)
    # S(3, 0; 27) vanishes as stated
    assert all(not (w["p"] == 3 and w["alpha"] == 3 and w["m"] == 3) for w in rep["violation_examples"])
    # but S(9, 0; 27) does not, so the literal "p | m implies zero" is false
    assert not rep["passed"]
    assert any(w == {"p": 3, "alpha": 3, "m": 9} for w in rep["violation_examples"])
    assert rep["valuation_rule_max_abs_err"] < 1e-9


def test_weil_bounds():
    assert verify_sum_identities("d", 45)[0]["passed"]
    assert verify_sum_identities("e", 64)[0]["passed"]


def test_root_sums_small():
    rep = verify_root_sums(primes=(3,), alphas=(2, 3))
    assert rep["passed"] and rep["root_table_vs_brute_force"] < 1e-9


def test_kform_small():
    rep = verify_kform(31, spot_checks=20)
    assert rep["passed"] and rep["table_vs_scalar_max_abs_err"] < 1e-9


def test_kbound_small():
    assert verify_kbound(60, samples=500)["passed"]


def test_twist_small():
    assert verify_twist(27)["passed"]


def test_unknown_case():
    with pytest.raises(ValueError):
        verify_sum_identities("z")
