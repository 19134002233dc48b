# python
"""
epblowup/handlers/crossval.py
Handler for `crossval`: runs the named suites and writes crossval.json; any
failing suite makes the command exit with the suite-failure code.
"""
from typing import Any, Dict

from ..errors import SuiteFailure
from ..runlog import write_json
from ..suites import SuiteOptions, run_suite, suite_names


async def run(session, config) -> Dict[str, Any]:
    cv = config.section("crossval")
    opts = SuiteOptions(
        size=int(cv["size"]),
        band=float(cv["band"]),
        seed=int(cv["seed"]),
        policy=config.policy,
        jobs=config.jobs,
    )
    results = []
    for name in suite_names(str(cv["suite"])):
        res = await run_suite(name, opts)
        await session.log("suite.result", "crossval", **res.to_record())
        results.append(res.to_record())

    report = {"passed": all(r["passed"] for r in results), "suites": results, "options": dict(cv)}
    path = write_json(config.output.path / "crossval.json", report)
    report["files"] = [str(path)]
    if not report["passed"]:
        failed = [r["suite"] for r in results if not r["passed"]]
        raise SuiteFailure(f"suite(s) failed: {', '.join(failed)} (see {path})")
    return report
