import copy
import json
from fractions import Fraction

import pytest

from crossnum.certifier import (
    CSV_HEADER,
    CertificationRefused,
    ConstantsLedger,
    ScalingReport,
    UpperBound,
    product_equals,
    qm_lower_bound,
    verify_certificate,
    wordlength_upper,
)
from crossnum.certifier import certify
from crossnum.config import Config
from crossnum.words import parse_word, power

from conftest import TARGET


def test_qm_lower_bound_arithmetic():
    assert qm_lower_bound(3, Fraction(1, 2), Fraction(0), Fraction(0), Fraction(2)) == Fraction(3, 4)
    with pytest.raises(CertificationRefused, match="not positive"):
        qm_lower_bound(1, Fraction(1, 2), Fraction(1, 2), Fraction(1), Fraction(1))
    with pytest.raises(CertificationRefused, match="sup"):
        qm_lower_bound(1, Fraction(1, 2), Fraction(0), Fraction(0), Fraction(0))


def test_ledger_requires_provenance():
    led = ConstantsLedger()
    with pytest.raises(ValueError):
        led.add("x", 1)
    led.add("x", Fraction(1, 3), source="test", radius=2)
    assert led.to_json()["x"] == {"value": "1/3", "provenance": {"source": "test", "radius": 2}}


def test_upper_bound_search(s0_table):
    ub = wordlength_upper(TARGET, s0_table)
    assert ub.value == 2 and product_equals(ub.factors, TARGET)
    assert all(f in s0_table for f in ub.factors)
    assert wordlength_upper((1,), s0_table).value == 1
    assert UpperBound(None, (), "search").to_json()["reached"] is False


def test_certificate_shape(cert_n0):
    c = cert_n0
    assert c.status == "issued"
    assert c.slope == Fraction(1, 4)
    assert [c.lower[m] for m in range(1, 7)] == [Fraction(m, 4) for m in range(1, 7)]
    assert [c.upper[m].value for m in range(1, 7)] == [2, 4, 6, 8, 10, 12]
    assert (c.hbar, c.hbar_error, c.sup, c.defect) == (Fraction(1, 2), 0, 0, 2)
    assert c.N == 2 and c.power_multiplier == 1
    assert c.structural_check["holds"]
    for m in range(1, 7):
        assert c.lower[m] <= c.upper[m].value


def test_certificate_ledger_has_provenance(cert_n0):
    led = cert_n0.ledger.to_json()
    for key in ("epsilon", "neighborhood_constant", "N", "hbar", "sup_table", "defect", "power_multiplier"):
        assert led[key]["provenance"]["source"]
    assert led["N"]["provenance"]["inequality_N"] >= 2
    assert "inequality_holds" in led["N"]["provenance"]


def test_certificate_roundtrip_and_tamper(cert_n0):
    data = json.loads(json.dumps(cert_n0.to_json()))
    assert data["validity"] == "table-certified"
    assert data["caveat"] == "defect estimated by sampling"
    assert verify_certificate(data) == []
    bad = copy.deepcopy(data)
    bad["slope"] = "1/3"
    assert any("slope" in p for p in verify_certificate(bad))
    bad = copy.deepcopy(data)
    bad["bounds"][0]["upper"]["factors"][0] = "a2"
    assert any("multiply" in p for p in verify_certificate(bad))
    bad = copy.deepcopy(data)
    bad["witnesses"]["axis_checks"][0]["c_sigma"] += 1
    assert any("realize" in p for p in verify_certificate(bad))


def test_refusals(ball7, s0_table):
    with pytest.raises(CertificationRefused, match="crossing number is 0"):
        certify((1,), 0, (1, 2), ball=ball7, table=s0_table)
    with pytest.raises(ValueError):
        certify(TARGET, 0, (3, 1), ball=ball7, table=s0_table)


def test_scaling_csv():
    rep = ScalingReport([(0, 1, Fraction(1, 4), 2, Fraction(1, 4))], [(1, "crossing number is 0")])
    text = rep.to_csv()
    assert text.splitlines()[0] == CSV_HEADER
    assert text.splitlines()[1] == "0,1,0.25,2,0.25"
    assert "# refused:" in text and "# n=1: crossing number is 0" in text


def test_n_policy_inequality_selects_inequality_N():
    from crossnum.certifier import _choose_N

    cfg = Config(n_policy="inequality")
    N, n_ineq = _choose_N(cfg, 6.29, 12.0, 0.14)
    assert N == n_ineq and N * 6.29 - 12.0 > 2 * 6.29 + 4 * 0.14
    assert _choose_N(Config(), 6.29, 12.0, 0.14)[0] == 2
    assert _choose_N(Config(n_policy="5"), 6.29, 12.0, 0.14)[0] == 5


def test_product_equals():
    assert product_equals([(1,), (2,)], (1, 2))
    assert not product_equals([(2,), (1,)], (1, 2))
    assert product_equals([power((1, 2), 2)], (1, 2, 1, 2))
    assert product_equals([parse_word("a1 b1 A1 B1 a2 b2 A2")], (4,))
    assert not product_equals([parse_word("a1 b1 A1 B1 a2 b2 A2")], (-4,))
