"""Negative controls: every suite must fail when the closed forms are perturbed."""
import pytest

from quadprop import verify as V


@pytest.mark.parametrize("name", list(V.SUITES))
def test_corruption_is_detected(name):
    res = V.run([name], corrupt=True)[0]
    assert not res.passed
    assert res.worst() is not None


def test_unknown_suite():
    with pytest.raises(KeyError):
        V.run(["nope"])


def test_check_status():
    r = V.SuiteResult("x", 0, "demo")
    r.le("small", 1e-9, 1e-8)
    r.add("reported", 5.0, 1.0, None)
    assert r.passed and [c.status for c in r.checks] == ["pass", "report"]
    r.le("big", 1.0, 1e-8)
    assert not r.passed and r.worst().name == "big"
