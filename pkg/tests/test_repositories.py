import json
import math
from fractions import Fraction

import numpy as np
import pytest

from models.arith import CyclotomicTally
from models.run_config import OutputFormat, Report, RunConfig
from models.sums import ThetaMode
from repositories.report_repository import ReportRepository


def make_report(results=None) -> Report:
    config = RunConfig(
        command="gauss",
        system="x1^2",
        q="5",
        cap=10**9,
        tally_cap=10**7,
        eps_slack=0.25,
        theta_mode=ThetaMode.UNCONDITIONAL,
    )
    return Report(config=config, results=results or [], diagnostics=["note"], timing={"seconds": 0.5})


class TestCanonicalize:
    """Test conversion of report values into plain JSON types"""

    def test_floats_rounded(self):
        """Test floats keep 15 significant digits"""
        repository = ReportRepository()

        assert repository.canonicalize(1 / 3) == 0.333333333333333
        assert repository.canonicalize(np.float64(2.5)) == 2.5

    def test_non_finite_floats(self):
        """Test non-finite floats become strings"""
        repository = ReportRepository()

        assert repository.canonicalize([math.inf, -math.inf, math.nan]) == ["inf", "-inf", "nan"]

    def test_numbers_and_containers(self):
        """Test complex values, fractions, numpy scalars, enums and sets"""
        repository = ReportRepository()

        assert repository.canonicalize(1 - 2j) == {"re": 1.0, "im": -2.0}
        assert repository.canonicalize(Fraction(1, 3)) == "1/3"
        assert repository.canonicalize(np.int64(7)) == 7
        assert repository.canonicalize(np.bool_(True)) is True
        assert repository.canonicalize(ThetaMode.IGUSA) == "igusa"
        assert repository.canonicalize({3, 1, 2}) == [1, 2, 3]
        assert repository.canonicalize(np.array([1, 2])) == [1, 2]

    def test_tally(self):
        """Test tallies are written as order and support"""
        tally = CyclotomicTally.from_exponents(6, [1, 1, 4])

        assert ReportRepository().canonicalize(tally) == {"order": 6, "support": [[1, 2], [4, 1]]}

    def test_models(self):
        """Test pydantic models become dictionaries"""
        payload = ReportRepository().canonicalize(make_report())

        assert payload["config"]["theta_mode"] == "unconditional"
        assert payload["config"]["output_format"] == "json"
        assert payload["diagnostics"] == ["note"]


class TestReportEncoding:
    def test_json_report(self):
        """Test the JSON report carries config, results, diagnostics and timing"""
        report = make_report([{"q": 5, "value": 1 + 1j, "exponent": -math.inf}])
        payload = json.loads(ReportRepository().emit_report(report))

        assert payload["config"]["command"] == "gauss"
        assert payload["results"] == [{"q": 5, "value": {"re": 1.0, "im": 1.0}, "exponent": "-inf"}]
        assert payload["timing"] == {"seconds": 0.5}

    def test_csv_columns(self):
        """Test CSV columns lead with q, a_i, chi_i and the value columns"""
        rows = [{"extra": 2, "magnitude": 1.0, "chi1": "5:1", "a1": 1, "q": 5, "re": 1.0, "im": 0.0}]
        text = ReportRepository().emit_report(make_report(rows), OutputFormat.CSV).decode()

        header, line = text.splitlines()
        assert header == "q,a1,chi1,re,im,magnitude,extra"
        assert line == "5,1,5:1,1,0,1,2"

    def test_csv_flattens_nested_values(self):
        """Test nested dictionaries become prefixed columns and missing cells stay empty"""
        rows = [
            {"q": 5, "tally": CyclotomicTally.from_exponents(5, [2])},
            {"q": 7, "ok": None},
        ]
        text = ReportRepository().to_csv(rows)

        header = text.splitlines()[0].split(",")
        assert header == ["q", "ok", "tally_order", "tally_support"]
        assert text.splitlines()[2] == "7,,,"

    def test_save_and_load(self, tmp_path):
        """Test reports reload with a validated RunConfig"""
        repository = ReportRepository()
        path = repository.save(make_report([{"q": 5}]), tmp_path / "out" / "report.json")

        loaded = repository.load(path)
        assert loaded.config.command == "gauss"
        assert loaded.config.theta_mode is ThetaMode.UNCONDITIONAL
        assert loaded.results == [{"q": 5}]

    def test_without_timing(self):
        """Test timing is the only nondeterministic field"""
        repository = ReportRepository()
        data = repository.without_timing(repository.emit_report(make_report()))

        assert "timing" not in data
        assert data["diagnostics"] == ["note"]

    def test_unknown_format(self):
        """Test only json and csv are supported"""
        with pytest.raises(ValueError):
            ReportRepository().emit_report(make_report(), "xml")
