import csv
import io

import pytest
from hypothesis import given, strategies as st

from lockthrash.engine import run
from lockthrash.model import bundled_config
from lockthrash.scalval import (
    Profile,
    computation_cycle,
    parse_profile_csv,
    profile_to_csv,
    report_to_csv,
    scalability_values,
    top_coverage,
)

TABLE_5_2_ORDER = [
    "copy_user_generic_string",
    "ipc_lock",
    "task_rq_lock",
    "hrtick_set",
    "LWLockAcquire",
    "hash_search",
    "find_busiest_group",
    "XLogInsert",
    "schedule",
    "LWLockRelease",
]


@pytest.fixture
def tpcc(fixtures):
    single = parse_profile_csv((fixtures / "table5_2_single.csv").read_text(), 1)
    multi = parse_profile_csv((fixtures / "table5_2_multi.csv").read_text(), 8)
    return scalability_values(single, multi)


def test_computation_cycle():
    assert computation_cycle(1, 2.0) == 0.5
    assert computation_cycle(8, 8 * 3.0) == computation_cycle(1, 3.0)
    assert computation_cycle(8, 4 * 3.0) == 2 * computation_cycle(1, 3.0)
    with pytest.raises(ValueError):
        computation_cycle(4, 0.0)


def test_shares_are_normalized_by_the_cycle():
    perfect1 = Profile.from_shares(1, 10.0, {"f": 0.5})
    perfect8 = Profile.from_shares(8, 80.0, {"f": 0.5})
    assert perfect1.entries == perfect8.entries == {"f": 0.05}


def test_table_5_2_top_row_and_order(tpcc):
    top = tpcc.rows[0]
    assert (top.func, top.Ts, top.Tm) == ("copy_user_generic_string", 123.20, 433.69)
    assert top.value == pytest.approx(310.49, abs=1e-9)
    assert [r.func for r in tpcc.rows[:10]] == TABLE_5_2_ORDER
    assert [round(r.value, 2) for r in tpcc.rows[:10]] == [
        310.49, 237.93, 215.69, 158.36, 156.78, 96.73, 88.75, 87.29, 79.15, 78.27
    ]


def test_table_5_2_coverage(tpcc):
    assert top_coverage(tpcc, 10) == pytest.approx(0.584, abs=0.01)
    assert top_coverage(tpcc, 50) == pytest.approx(0.865, abs=0.01)
    assert sum(1 for r in tpcc.rows if r.value > 0) > 1000


def test_table_5_3(fixtures):
    rows = list(csv.DictReader(line for line in (fixtures / "table5_3.csv").read_text().splitlines() if not line.startswith("#")))
    single = Profile(1, {r["func"]: float(r["Ts"]) for r in rows})
    multi = Profile(8, {r["func"]: float(r["Tm"]) for r in rows})
    report = scalability_values(single, multi)
    assert report.rows[0].func == "LWLockAcquire"
    assert report.rows[0].value == pytest.approx(120.88, abs=1e-9)
    assert report.rank("LWLockAcquire") == 1
    printed = {r["func"]: float(r["value"]) for r in rows}
    for r in report.rows:
        if r.func == "task_rq_lock":
            # printed 60.95, but 64.40 - 3.65 = 60.75
            assert r.value == pytest.approx(60.75)
        else:
            assert r.value == pytest.approx(printed[r.func], abs=0.006)


def test_weights_and_signs():
    report = scalability_values(Profile(1, {"a": 1, "b": 5, "c": 2}), Profile(4, {"a": 4, "b": 1, "d": 1}))
    by = {r.func: r for r in report.rows}
    assert [r.func for r in report.rows] == ["a", "d", "c", "b"]
    assert by["a"].weight == pytest.approx(0.75) and by["d"].weight == pytest.approx(0.25)
    assert by["b"].weight == by["c"].weight == 0.0
    assert by["c"].value == -2 and by["d"].Ts == 0


def test_top_coverage_examples():
    one = scalability_values(Profile(1, {"f": 1.0}), Profile(2, {"f": 3.0}))
    assert top_coverage(one, 1) == 1.0
    equal = scalability_values(Profile(1, {str(i): 0.0 for i in range(8)}), Profile(2, {str(i): 1.0 for i in range(8)}))
    assert top_coverage(equal, 3) == pytest.approx(3 / 8)
    with pytest.raises(ValueError):
        top_coverage(equal, 0)


entries = st.dictionaries(st.sampled_from([f"f{i}" for i in range(12)]), st.floats(0, 1e4), max_size=12)


@given(entries, entries)
def test_antisymmetry(a, b):
    fwd = {r.func: r.value for r in scalability_values(Profile(1, a), Profile(2, b)).rows}
    back = {r.func: r.value for r in scalability_values(Profile(1, b), Profile(2, a)).rows}
    assert fwd.keys() == back.keys()
    assert all(fwd[f] == -back[f] for f in fwd)


@given(entries)
def test_identical_profiles_are_perfectly_scalable(a):
    report = scalability_values(Profile(1, a), Profile(8, dict(a)))
    assert all(r.value == 0 and r.weight == 0 for r in report.rows)


@given(entries, entries)
def test_weights_sum_to_one_and_zero_rows_change_nothing(a, b):
    report = scalability_values(Profile(1, a), Profile(2, b))
    if any(r.value > 0 for r in report.rows):
        assert sum(r.weight for r in report.rows if r.value > 0) == pytest.approx(1.0, abs=1e-9)
    padded = scalability_values(Profile(1, {**a, "zero_fn": 3.0}), Profile(2, {**b, "zero_fn": 3.0}))
    w = {r.func: r.weight for r in report.rows}
    assert all(w[r.func] == r.weight for r in padded.rows if r.func != "zero_fn")


def test_simulator_breakdown_ranks_lock_kinds_first():
    cfg = bundled_config("c1")
    single = Profile.from_sim(run(cfg.platform, cfg.workload, 1, max_ticks=20_000, seed=1))
    multi = Profile.from_sim(run(cfg.platform, cfg.workload, 32, max_ticks=20_000, seed=1))
    report = scalability_values(single, multi)
    assert {r.func for r in report.rows[:2]} == {"SPIN", "LOCK_MISS"}


def test_profile_csv_round_trip():
    p = Profile(1, {"a": 1.5, "b,c": 0.25})
    assert parse_profile_csv(profile_to_csv(p)).entries == p.entries
    with pytest.raises(ValueError):
        parse_profile_csv("name,t\nx,1\n")
    with pytest.raises(ValueError):
        Profile(1, {"a": -1.0})


def test_report_csv():
    report = scalability_values(Profile(1, {"a": 1.0, "b": 2.0}), Profile(2, {"a": 3.0, "b": 2.5}))
    rows = list(csv.DictReader(io.StringIO(report_to_csv(report, top=1))))
    assert len(rows) == 1 and rows[0]["func"] == "a" and float(rows[0]["weight"]) == pytest.approx(0.8)
