import csv
import io
import json
from importlib import resources

import jsonschema
import pytest

from diffbundle.cli import RunConfig, UsageError, main, report_bytes, report_csv, run
from diffbundle.config import active
from diffbundle.suites import SUITES, all_checks, select


@pytest.fixture(scope="module")
def schema():
    return json.loads(resources.files("diffbundle").joinpath("data/report.schema.json").read_text())


@pytest.fixture(scope="module")
def small_report():
    code, report = run(RunConfig(suites=["zero_detect", "partition"], seed=3))
    return code, report


def test_small_run_passes(small_report):
    code, report = small_report
    assert code == 0 and report["passed"]
    assert report["summary"]["total"] == len(select(["zero_detect", "partition"]))


def test_report_matches_schema(schema, small_report):
    jsonschema.validate(json.loads(report_bytes(small_report[1])), schema)


def test_report_is_deterministic(small_report):
    _, again = run(RunConfig(suites=["partition", "zero_detect"], seed=3))
    assert report_bytes(again) == report_bytes(small_report[1])


def test_runtime_only_with_timings():
    _, plain = run(RunConfig(suites=["group"]))
    _, timed = run(RunConfig(suites=["group"], timings=True))
    assert all("runtime" not in c for c in plain["checks"])
    assert all("runtime" in c for c in timed["checks"])


def test_csv_has_one_row_per_check(small_report):
    rows = list(csv.DictReader(io.StringIO(report_csv(small_report[1]))))
    assert [r["name"] for r in rows] == [c["name"] for c in small_report[1]["checks"]]


def test_every_check_has_an_anchor():
    checks = all_checks()
    assert len({c.name for c in checks}) == len(checks)
    assert all(c.anchor and c.suite in SUITES for c in checks)


def test_unknown_suite_is_usage_error():
    with pytest.raises(UsageError):
        run(RunConfig(suites=["nope"]))
    assert main(["run", "--suite", "nope"]) == 2


def test_unknown_fixture_and_tolerance(capsys):
    assert main(["run", "--fixture", "klein"]) == 2
    assert main(["run", "--tol-override", "bogus=1"]) == 2
    assert main(["run", "--tol-override", "gauge=-1"]) == 2
    assert "error" in capsys.readouterr().err


def test_failing_check_exits_one(tmp_path):
    out = tmp_path / "r.json"
    code = main(["run", "--suite", "group", "--tol-override", "rep_homomorphism=0",
                 "--out", str(out)])
    report = json.loads(out.read_text())
    assert code == 1 and not report["passed"]
    assert report["config"]["tolerance_overrides"] == {"rep_homomorphism": 0.0}
    # overrides do not leak past the run
    assert active()["rep_homomorphism"] > 0.0


def test_fixture_filter(tmp_path):
    out = tmp_path / "r.json"
    assert main(["run", "--fixture", "mobius", "--grid", "64", "--out", str(out)]) == 0
    names = [c["name"] for c in json.loads(out.read_text())["checks"]]
    assert names == ["classify:mobius", "mobius_constant_gauge_search"]


def test_csv_written(tmp_path):
    out, table = tmp_path / "r.json", tmp_path / "r.csv"
    assert main(["run", "--suite", "zero_detect", "--out", str(out), "--csv", str(table)]) == 0
    assert table.read_text().startswith("name,suite,fixture,anchor,verdict,max_violation")


def test_describe_and_fixtures(capsys):
    assert main(["describe", "mobius"]) == 0
    assert "fixture: mobius" in capsys.readouterr().out
    assert main(["describe", "klein"]) == 2
    assert main(["fixtures"]) == 0
    assert "time_swap" in capsys.readouterr().out.split()


def test_export_round_trips(tmp_path):
    from diffbundle.bundle import validate
    from diffbundle.bundle_io import load_bundle
    out = tmp_path / "mobius.json"
    assert main(["export", "mobius", "--grid", "32", "--out", str(out)]) == 0
    assert validate(load_bundle(out)).passed
    assert main(["export", "product_group"]) == 2
