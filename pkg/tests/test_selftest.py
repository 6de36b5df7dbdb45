import json

import pytest

from cvxenvelope.selftest import KINDS, FixtureFileError, load_fixtures, run_battery


def test_packaged_fixtures_load():
    fx = load_fixtures()
    assert len(fx) >= 40
    assert {f["kind"] for f in fx} <= set(KINDS)
    assert len({f["name"] for f in fx}) == len(fx)


def test_every_kind_is_used():
    assert {f["kind"] for f in load_fixtures()} == set(KINDS)


@pytest.mark.parametrize(
    "text",
    ["{not json", json.dumps({"nope": []}), json.dumps({"fixtures": [{"name": "a", "dim": 1}]}),
     json.dumps({"fixtures": [{"name": "a", "kind": "no_such_kind", "dim": 1}]}),
     json.dumps({"fixtures": [{"kind": "c11", "dim": 1}]})],
)
def test_bad_files_name_the_path(tmp_path, text):
    p = tmp_path / "fx.json"
    p.write_text(text)
    with pytest.raises(FixtureFileError) as e:
        load_fixtures(p)
    assert str(p) in str(e.value)


def test_missing_file(tmp_path):
    with pytest.raises(FixtureFileError):
        load_fixtures(tmp_path / "absent.json")


def test_quick_battery_passes():
    results = run_battery(load_fixtures(), quick=True)
    assert results and all(r["pass"] for r in results), [r["name"] for r in results if not r["pass"]]


def test_crash_is_a_failure():
    fx = [{"name": "broken", "kind": "legendre_abs", "dim": 1, "axis": [1, 0, 5], "dual": [-1, 1, 5]}]
    (r,) = run_battery(fx)
    assert not r["pass"] and "error" in r["metrics"]


def test_wrong_expectation_is_a_failure():
    # a dense shift family on too few members breaks the expected "pass" status
    fx = [{"name": "thin", "kind": "family_dense_shifts", "dim": 1, "axis": [-1, 1, 81], "members": 41}]
    assert not run_battery(fx)[0]["pass"]


def test_output_dir_receives_fields(tmp_path):
    fx = [f for f in load_fixtures() if f["name"] == "convexify_two_wells"]
    run_battery(fx, output_dir=tmp_path)
    assert [p.name for p in tmp_path.iterdir()] == ["convexify_two_wells.hull.json"]
