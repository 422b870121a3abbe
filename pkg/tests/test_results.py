# tests/test_results.py
# -*- coding: utf-8 -*-

from core.results import RESULT_COLUMNS, ResultRow, read_results, write_csv, write_results


def test_rows_are_sorted_and_formatted(tmp_path):
    rows = [
        ResultRow("s", 0.5, "theta", "node1", 0.1 + 0.2),
        ResultRow("s", 0.2, "theta", "node0", 1 / 3, provenance="stable"),
        ResultRow("s", 0.5, "bound_aggregate_queue", "eq2", 0.0, vacuous=True),
    ]
    path = write_results(str(tmp_path / "r.csv"), rows)
    lines = open(path, encoding="utf-8").read().splitlines()
    assert lines[0] == ",".join(RESULT_COLUMNS)
    assert lines[1] == "s,0.2,theta,node0,0.3333333333333333,stable,false"
    assert lines[2] == "s,0.5,bound_aggregate_queue,eq2,0.0,,true"
    # repr 精度，读回不丢位
    assert lines[3].endswith(",0.30000000000000004,,false")
    back = read_results(path)
    assert back[2].value == 0.1 + 0.2
    assert back[1].vacuous is True


def test_write_csv_fills_missing_columns(tmp_path):
    path = write_csv(str(tmp_path / "sub" / "x.csv"), ["a", "b", "c"], [{"a": 1, "c": True}])
    assert open(path, encoding="utf-8").read() == "a,b,c\n1,,true\n"
