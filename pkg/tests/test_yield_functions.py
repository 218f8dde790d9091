import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seteg.errors import InvalidParameter, NonConvexSpec
from seteg.yield_functions import (
    ED,
    ConvexSF,
    binary_entropy,
    ed_eval,
    linear_yield,
    parse_yield,
    power_yield,
    sf_eval,
    verify_yield_contract,
)

# mpmath oracle values
H_08 = 0.721928094887362
ED_06_0 = 0.278071905112638


def test_binary_entropy_values():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.8) == pytest.approx(H_08, abs=1e-12)
    with pytest.raises(InvalidParameter):
        binary_entropy(1.1)


def test_ed_values():
    assert ed_eval(1.0, 0.0) == pytest.approx(1.0, abs=1e-12)
    assert ed_eval(0.0, 0.7) == pytest.approx(0.0, abs=1e-12)
    assert ed_eval(0.6, 0.0) == pytest.approx(ED_06_0, abs=1e-12)
    with pytest.raises(InvalidParameter):
        ed_eval(0.9, 0.9)


def test_ed_broadcasts():
    z = np.linspace(0, 1, 5)
    out = ED(z, np.zeros_like(z))
    assert out.shape == (5,)
    assert out[0] == 0.0


def test_convex_sf_constructors():
    assert sf_eval(ConvexSF.linear(2.0), 0.25) == pytest.approx(0.5)
    assert sf_eval(ConvexSF.power(2), 0.5) == pytest.approx(0.25)
    g = ConvexSF.piecewise_linear([0.5], [0.5, 1.5])
    assert sf_eval(g, 0.5) == pytest.approx(0.25)
    assert sf_eval(g, 1.0) == pytest.approx(1.0)
    with pytest.raises(NonConvexSpec):
        ConvexSF.power(0.5)
    with pytest.raises(NonConvexSpec):
        ConvexSF.piecewise_linear([0.5], [1.0, 0.5])


def test_parse_yield():
    assert parse_yield("ed") is ED
    assert parse_yield("linear:2")(0.5, 0.1) == pytest.approx(1.0)
    assert parse_yield("power:3")(0.5, 0.0) == pytest.approx(0.125)
    assert parse_yield("pwl:0.5/0.5,1.5")(1.0, 0.0) == pytest.approx(1.0)
    for bad in ("nope", "power:x", "ed:1"):
        with pytest.raises(InvalidParameter):
            parse_yield(bad)


@pytest.mark.parametrize("spec", ["ed", "linear", "linear:3", "power:2", "power:3.5", "pwl:0.3,0.7/0.2,1,2"])
def test_contract_passes(spec):
    report = verify_yield_contract(parse_yield(spec))
    assert report.passed, report.violations
    assert report.worst_violation <= 1e-9


def test_contract_fails_for_sqrt_with_witness():
    report = verify_yield_contract(parse_yield("sqrt"))
    assert not report.passed
    assert not report.key_inequality_ok
    assert "key_inequality" in report.violations
    w = report.violations["key_inequality"]
    v, z = w["v"], w["z"]
    Y = parse_yield("sqrt")
    assert Y(v * z, np.sqrt(1 - z * z)) > z * Y(v, 0.0) + 1e-9


def test_contract_report_deterministic():
    a = verify_yield_contract(ED, seed=3).to_dict()
    b = verify_yield_contract(ED, seed=3).to_dict()
    assert a == b


def test_contract_argument_checks():
    with pytest.raises(InvalidParameter):
        verify_yield_contract(ED, grid_n=4)


@given(st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=200, deadline=None)
def test_key_inequality_ed(v, z):
    lhs = ED(v * z, np.sqrt(max(1 - z * z, 0.0)))
    assert lhs <= z * ED(v, 0.0) + 1e-9


@given(st.floats(0, 1), st.floats(0, 1), st.floats(1, 6))
@settings(max_examples=200, deadline=None)
def test_key_inequality_power(v, z, k):
    Y = power_yield(k)
    assert Y(v * z, np.sqrt(max(1 - z * z, 0.0))) <= z * Y(v, 0.0) + 1e-9


def test_linear_singlet_fraction_ignores_x():
    Y = linear_yield()
    assert Y(0.4, 0.0) == Y(0.4, 0.9)
