import csv
import json
import os

import pytest

from t2ieval.errors import ValidationError
from t2ieval.ranking import AspectSpec, MetricTable, aspect_scores, ranking_score, table_ranks
from t2ieval.reporting import emit_report, rank_and_report

from .conftest import BENCHMARK_CSV, BENCHMARK_RS


@pytest.fixture
def benchmark_table():
    return MetricTable.from_csv(BENCHMARK_CSV)


def read_dir_bytes(path):
    return {name: open(os.path.join(path, name), "rb").read()
            for name in sorted(os.listdir(path))}


class TestEmitReport:
    def test_writes_json_csv_and_figures(self, benchmark_table, tmp_path):
        out = str(tmp_path / "report")
        paths = rank_and_report(benchmark_table, None, {"source": "fixture"}, out)
        names = {os.path.basename(p) for p in os.listdir(out)}
        assert names == {"report.json", "report.csv", "report_ranking.png", "report_ranks.png"}
        assert paths["ranking_score"] == BENCHMARK_RS

    def test_json_contains_full_configuration(self, benchmark_table, tmp_path):
        out = str(tmp_path / "r")
        rank_and_report(benchmark_table, None, {"source": "fixture"}, out)
        payload = json.loads(open(os.path.join(out, "report.json")).read())
        assert payload["config"]["source"] == "fixture"
        assert payload["tie_rule"] == "average"
        assert payload["directions"]["FID"] == "lower_better"
        assert payload["ranking_score"]["Real Images"] == 65.0
        weights = {a["name"]: a["weight"] for a in payload["config"]["aspects"]}
        assert weights["Image Realism"] == 0.5
        assert weights["Text Relevance"] == 1.0

    def test_csv_rs_column_has_one_decimal(self, benchmark_table, tmp_path):
        out = str(tmp_path / "r")
        rank_and_report(benchmark_table, None, {}, out)
        with open(os.path.join(out, "report.csv"), newline="") as fh:
            rows = list(csv.DictReader(fh))
        by_method = {row["method"]: row for row in rows}
        assert by_method["GAN-CLS"]["RS"] == "7.0"
        assert by_method["DM-GAN + CL"]["RS"] == "51.5"
        assert by_method["GAN-CLS"]["FID"] == "192.09"

    def test_rerun_is_byte_identical(self, benchmark_table, tmp_path):
        a, b = str(tmp_path / "a"), str(tmp_path / "b")
        rank_and_report(benchmark_table, None, {"seed": 1}, a)
        rank_and_report(benchmark_table, None, {"seed": 1}, b)
        assert read_dir_bytes(a) == read_dir_bytes(b)

    def test_inconsistent_method_sets_rejected(self, benchmark_table, tmp_path):
        ranks = table_ranks(benchmark_table)
        aspects = aspect_scores(benchmark_table)
        rs = ranking_score(benchmark_table)
        rs.pop("GAN-CLS")
        with pytest.raises(ValidationError, match="method set"):
            emit_report(benchmark_table, ranks, aspects, rs, {}, str(tmp_path / "x"))

    def test_empty_table_is_impossible_to_emit(self, tmp_path):
        with pytest.raises(ValidationError):
            MetricTable(methods=(), metrics=(), values={}, directions={})
