import json
import math
import random

import pytest
import scipy.stats

from instructmill.errors import (
    AllZeroDifferences,
    ConfigError,
    EmptyInput,
    LengthMismatch,
    ParseError,
    UnknownColumnName,
)
from instructmill.report import (
    ResultRow,
    ResultTable,
    aggregate_averages,
    compute_delta,
    from_csv,
    relative_improvement,
    render_report,
    to_csv,
    wilcoxon_signed_rank,
)

from conftest import FIXTURES

TABLE1 = FIXTURES / "table1.csv"
TABLE2 = FIXTURES / "table2.csv"


# ------------------------------------------------------------- CSV parsing

def test_table1_parses(tmp_path):
    table = from_csv(TABLE1)
    assert len(table.rows) == 52
    assert set(table.columns) == {
        "sota", "base", "model_native", "model_english", "delta"
    }
    assert table.languages() == ["arabic", "english", "hindi"]
    # missing reference scores parse as None, not zero
    missing = [v for v in table.column_values("sota") if v is None]
    assert missing


def test_table2_numeric_task_column_is_a_score():
    table = from_csv(TABLE2)
    assert len(table.rows) == 52
    assert {"base", "alpha", "full", "task", "lang"} <= set(table.columns)
    assert all(v is not None for v in table.column_values("task"))


def test_from_csv_rejects_unknown_text_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(
        "language,dataset,score,comment\n"
        "english,d1,0.5,great\n",
        encoding="utf-8",
    )
    with pytest.raises(ParseError):
        from_csv(path)


def test_csv_roundtrip(tmp_path):
    table = from_csv(TABLE1)
    path = tmp_path / "out.csv"
    to_csv(table, path)
    back = from_csv(path)
    assert back == table


def test_duplicate_language_dataset_rejected():
    row = ResultRow("d1", "english", "t", "accuracy", {"x": 0.5})
    with pytest.raises(Exception):
        ResultTable(columns=("x",), rows=(row, row))


def test_same_dataset_name_allowed_across_languages():
    rows = (
        ResultRow("d1", "english", "t", "accuracy", {"x": 0.5}),
        ResultRow("d1", "arabic", "t", "accuracy", {"x": 0.6}),
    )
    table = ResultTable(columns=("x",), rows=rows)
    assert len(table.rows) == 2


# ------------------------------------------------------------------ deltas

def test_delta_hand_values():
    table = from_csv(TABLE1)
    recomputed = compute_delta(table, "model_english", "sota", name="check")
    by_key = {(r.language, r.dataset): r for r in recomputed.rows}
    row = by_key[("english", "CT24_T1")]
    assert abs(row.get("check") - 0.189) <= 0.001 + 1e-9
    assert by_key[("arabic", "CT24_T1")].get("check") == pytest.approx(
        0.502 - 0.569
    )


def test_delta_none_propagates():
    table = from_csv(TABLE1)
    recomputed = compute_delta(table, "model_english", "sota", name="check")
    for row in recomputed.rows:
        if row.get("sota") is None:
            assert row.get("check") is None


def test_delta_antisymmetry():
    table = from_csv(TABLE1)
    ab = compute_delta(table, "model_english", "sota", name="x")
    ba = compute_delta(table, "sota", "model_english", name="x")
    for r1, r2 in zip(ab.rows, ba.rows):
        a, b = r1.get("x"), r2.get("x")
        if a is None:
            assert b is None
        else:
            assert a == pytest.approx(-b)


def test_delta_unknown_column():
    with pytest.raises(UnknownColumnName):
        compute_delta(from_csv(TABLE1), "model_english", "nope")


# ---------------------------------------------------------------- averages

def _toy_table():
    rows = (
        ResultRow("d1", "english", "t", "acc", {"a": 0.2, "b": 0.4}),
        ResultRow("d2", "english", "t", "acc", {"a": 0.4, "b": None}),
        ResultRow("d3", "arabic", "t", "acc", {"a": 0.6, "b": 0.8}),
    )
    return ResultTable(columns=("a", "b"), rows=rows)


def test_complete_case_shares_one_n():
    averages = aggregate_averages(_toy_table(), policy="complete")
    english = averages["english"]
    # d2 misses column b, so the complete-case english group is d1 alone
    assert english["a"].count == 1
    assert english["a"].mean == pytest.approx(0.2)
    assert english["b"].mean == pytest.approx(0.4)


def test_per_column_uses_what_exists():
    averages = aggregate_averages(_toy_table(), policy="per_column")
    english = averages["english"]
    assert english["a"].count == 2
    assert english["a"].mean == pytest.approx(0.3)
    assert english["b"].count == 1


def test_averages_by_task_and_errors():
    by_task = aggregate_averages(_toy_table(), group_by="task")
    assert set(by_task) == {"t"}
    with pytest.raises(ConfigError):
        aggregate_averages(_toy_table(), group_by="metric_kind")
    with pytest.raises(ConfigError):
        aggregate_averages(_toy_table(), policy="optimistic")
    empty = ResultTable(columns=("a",), rows=())
    with pytest.raises(EmptyInput):
        aggregate_averages(empty)


def test_relative_improvement_both_readings():
    table = _toy_table()
    result = relative_improvement(table, "a", "b")
    # complete rows: (0.2, 0.4) and (0.6, 0.8)
    assert result["n"] == 2
    assert result["mean_of_ratios"] == pytest.approx(
        ((0.2 - 0.4) / 0.4 + (0.6 - 0.8) / 0.8) / 2
    )
    assert result["ratio_of_means"] == pytest.approx(0.4 / 0.6 - 1)


# ---------------------------------------------------------------- wilcoxon

def test_wilcoxon_tiny_exact_case():
    # three positive differences: W = 0, exact two-sided p = 2/8
    result = wilcoxon_signed_rank([1.0, 2.0, 3.0], [0.0, 0.0, 0.0])
    assert result.method == "exact"
    assert result.statistic == 0.0
    assert result.p_value == pytest.approx(0.25)


def test_wilcoxon_drops_zero_differences():
    result = wilcoxon_signed_rank([1.0, 2.0, 3.0, 5.0], [0.0, 0.0, 0.0, 5.0])
    assert result.n_effective == 3
    assert result.p_value == pytest.approx(0.25)


def test_wilcoxon_all_zero_raises():
    with pytest.raises(AllZeroDifferences):
        wilcoxon_signed_rank([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])


def test_wilcoxon_validates_input():
    with pytest.raises(LengthMismatch):
        wilcoxon_signed_rank([1.0], [1.0, 2.0])
    with pytest.raises(EmptyInput):
        wilcoxon_signed_rank([1.0, 2.0], [0.0, 0.0])
    with pytest.raises(ConfigError):
        wilcoxon_signed_rank([1.0, 2.0, 3.0], [0.0] * 3, method="bayes")


def test_wilcoxon_symmetry():
    a = [0.61, 0.72, 0.55, 0.68, 0.70, 0.49, 0.81, 0.66]
    b = [0.58, 0.75, 0.52, 0.61, 0.72, 0.45, 0.80, 0.69]
    assert wilcoxon_signed_rank(a, b).p_value == pytest.approx(
        wilcoxon_signed_rank(b, a).p_value
    )


def test_wilcoxon_exact_matches_scipy_without_ties():
    rand = random.Random(7)
    for trial in range(20):
        n = rand.randrange(6, 20)
        diffs = rand.sample(range(1, 400), n)
        signs = [rand.choice((-1, 1)) for _ in range(n)]
        a = [s * d / 100.0 for s, d in zip(signs, diffs)]
        b = [0.0] * n
        ours = wilcoxon_signed_rank(a, b, method="exact")
        ref = scipy.stats.wilcoxon(a, b, alternative="two-sided",
                                   method="exact")
        assert ours.p_value == pytest.approx(ref.pvalue, abs=1e-9), trial


def test_wilcoxon_approx_matches_scipy_with_ties():
    rand = random.Random(13)
    for trial in range(10):
        n = rand.randrange(30, 60)
        a = [round(rand.uniform(0, 1), 2) for _ in range(n)]
        b = [round(rand.uniform(0, 1), 2) for _ in range(n)]
        if all(x == y for x, y in zip(a, b)):
            continue
        ours = wilcoxon_signed_rank(a, b, method="normal_approx")
        ref = scipy.stats.wilcoxon(a, b, alternative="two-sided",
                                   method="approx", correction=True)
        assert ours.p_value == pytest.approx(ref.pvalue, rel=0.02), trial


def test_wilcoxon_exact_and_approx_agree_midrange():
    rand = random.Random(99)
    for trial in range(15):
        n = rand.randrange(12, 26)
        diffs = rand.sample(range(1, 300), n)
        signs = [rand.choice((-1, 1)) for _ in range(n)]
        a = [s * d / 10.0 for s, d in zip(signs, diffs)]
        b = [0.0] * n
        exact = wilcoxon_signed_rank(a, b, method="exact").p_value
        approx = wilcoxon_signed_rank(a, b, method="normal_approx").p_value
        assert abs(exact - approx) <= 0.02, trial


def test_wilcoxon_auto_switches_method():
    small = wilcoxon_signed_rank([float(i) for i in range(1, 11)], [0.0] * 10)
    assert small.method == "exact"
    big = wilcoxon_signed_rank([float(i) for i in range(1, 31)], [0.0] * 30)
    assert big.method == "normal_approx"


def test_wilcoxon_result_serializes():
    result = wilcoxon_signed_rank([1.0, 2.0, 3.0], [0.0, 0.0, 0.0])
    data = result.to_dict()
    assert json.dumps(data)
    assert data["method"] == "exact"
    assert not math.isnan(data["p_value"])


# --------------------------------------------------------------- rendering

def test_render_markdown_sections(tmp_path):
    table = compute_delta(from_csv(TABLE1), "model_english", "sota")
    averages = aggregate_averages(table)
    stats = {"model_english vs sota": wilcoxon_signed_rank(
        [r.get("model_english") for r in table.rows if r.get("sota") is not None],
        [r.get("sota") for r in table.rows if r.get("sota") is not None],
    )}
    improvements = {"model_english vs sota": relative_improvement(
        table, "model_english", "sota"
    )}
    out = tmp_path / "report.md"
    text = render_report(table, averages=averages, stats=stats,
                         improvements=improvements, fmt="markdown", path=out)
    assert out.read_text(encoding="utf-8") == text
    assert "## Averages" in text
    assert "## Paired comparisons" in text
    assert "## Relative improvement" in text
    assert "--" in text  # missing sota cells render as placeholders
    assert "| CT24_T1 | english |" in text


def test_render_csv_format(tmp_path):
    table = _toy_table()
    text = render_report(table, fmt="csv")
    assert text.splitlines()[0].startswith("dataset,language")


def test_render_rejects_unknown_format():
    with pytest.raises(ConfigError):
        render_report(_toy_table(), fmt="pdf")
