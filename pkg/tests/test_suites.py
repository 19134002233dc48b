# python
"""
tests/test_suites.py
Cross-validation suites at reduced sizes; the full grids run through
`epblowup crossval --scenario suites`.
"""
import asyncio
from types import SimpleNamespace

import pytest

from epblowup.errors import ConfigError, LimitFailure
from epblowup import suites
from epblowup.suites import SUITES, SuiteOptions, SuiteResult, run_suite, suite_names

SMALL = SuiteOptions(size=2)


def _suite(name: str, opts: SuiteOptions = SMALL) -> SuiteResult:
    return asyncio.run(run_suite(name, opts))


def test_suite_names() -> None:
    assert suite_names("all") == list(SUITES)
    assert suite_names("d1, heun") == ["d1", "heun"]
    with pytest.raises(ConfigError):
        suite_names("d1,unknown")
    with pytest.raises(ConfigError):
        suite_names(" , ")


def test_suite_result_record_truncates_failures() -> None:
    res = SuiteResult("x")
    for i in range(60):
        res.fail(i=i)
    rec = res.to_record()
    assert not rec["passed"]
    assert len(rec["failures"]) == 50
    assert rec["n_failures"] == 60


def test_run_suite_turns_errors_into_failures(monkeypatch) -> None:
    async def broken(_opts):
        raise LimitFailure("did not settle", [1.0, 2.0])

    monkeypatch.setitem(SUITES, "d1", broken)
    res = _suite("d1")
    assert not res.passed
    assert res.failures[0]["error"] == "LimitFailure"


@pytest.mark.parametrize("name", ["d4-c0", "d1", "conservation", "isochrony"])
def test_fast_suites_pass(name) -> None:
    res = _suite(name)
    assert res.passed, res.failures


def test_d1_suite_is_seeded() -> None:
    a = _suite("d1", SuiteOptions(size=3, seed=7))
    b = _suite("d1", SuiteOptions(size=3, seed=7))
    assert a.metrics == b.metrics


@pytest.mark.slow
@pytest.mark.parametrize("name", ["hypergeom", "heun", "separatrix", "radon", "third-order"])
def test_slow_suites_pass(name) -> None:
    res = _suite(name)
    assert res.passed, res.failures


@pytest.mark.slow
def test_planes_suite_passes() -> None:
    res = _suite("planes", SuiteOptions(size=8))
    assert res.passed, res.failures
    assert res.metrics["equilibrium"]["max_criterion_at_boundary"] < 0.02


def test_d4_c0_suite_samples_nonlocal_pressure_range(monkeypatch) -> None:
    seen = []

    def detector(p, ip, policy):
        seen.append(ip.v0)
        return SimpleNamespace(smooth=1.0 - 2.0 * ip.v0 / (4.0 * -ip.G0) > 0)

    monkeypatch.setattr(suites, "classify_point", detector)
    res = _suite("d4-c0", SuiteOptions(size=3))
    assert res.passed, res.failures
    assert "orientation" in res.metrics
    # v0 in [-3, 1] reaches the detector as the system variable -v0
    assert min(seen) == pytest.approx(-1.0)
    assert max(seen) == pytest.approx(3.0)
    assert res.metrics["checked"] + res.metrics["skipped_band"] == 36
