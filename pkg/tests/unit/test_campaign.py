"""
Unit tests for the verification campaign
Tests config parsing, case selection, the report model and determinism
"""

import json
import pytest
import sys
from pathlib import Path

# Add src to path for imports
sys.path.append(str(Path(__file__).parent.parent.parent / 'src'))

import campaign
from campaign import (
    DEFAULT_PARAMS,
    FAIL,
    PASS,
    SKIPPED,
    CampaignConfig,
    CampaignReport,
    CaseOutcome,
    CaseSpec,
    SkipCase,
    VerifyCase,
    load_config,
    parse_config_text,
    run_campaign,
    run_case,
    to_jsonable,
)
from models.errors import ConfigError


class TestConfig:
    """Test suite for campaign configuration"""

    def test_shipped_config(self, project_paths):
        config = load_config(project_paths['campaign_cfg'])
        assert set(config.params) == set(DEFAULT_PARAMS)
        assert config.jobs >= 1

    def test_defaults_fill_missing_keys(self):
        config = parse_config_text("seed = 7\nlocal_dist.prop27.tol = 1e-6\n")
        assert config.seed == 7
        assert config.param("local_dist.prop27.tol") == 1e-6
        assert config.param("global_q.n_trunc") == DEFAULT_PARAMS["global_q.n_trunc"]

    def test_comments_and_blank_lines(self):
        config = parse_config_text("# header\n\nseed = 3  # trailing\n")
        assert config.seed == 3

    @pytest.mark.parametrize("text", [
        "local_dist.prop27.tol = abc",
        "local_dist.prop27.tol = -1e-8",
        "local_dist.prop27.tol = 0",
        "global_q.n_trunc = 12.5",
        "no_such.key = 1",
        "seed = x",
        "jobs = 0",
        "seed",
        "seed = 1\nseed = 2",
    ])
    def test_rejected(self, text):
        with pytest.raises(ConfigError):
            parse_config_text(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / 'absent.cfg')

    def test_only_prefixes(self):
        config = parse_config_text("only = local_dist.prop27, archimedean\n")
        assert config.selected("local_dist.prop27")
        assert config.selected("archimedean.mellin")
        assert not config.selected("local_dist.prop29c")


class TestReport:
    """Test suite for report assembly"""

    def _report(self):
        cases = [
            VerifyCase(module="m", case="a", relation="x = y", tolerance=1e-8, status=PASS, measured_error=0.0),
            VerifyCase(module="m", case="b", relation="x = y", tolerance=1e-8, status=FAIL, measured_error=1.0),
            VerifyCase(module="m", case="c", relation="x = y", tolerance=0.0, status=SKIPPED),
        ]
        return CampaignReport(seed=1, cases=cases)

    def test_summary(self):
        report = self._report()
        assert report.summary == {PASS: 1, FAIL: 1, SKIPPED: 1, "total": 3}
        assert not report.all_passed

    def test_json_schema_key(self):
        data = json.loads(self._report().to_json())
        assert data["schema"] == 1
        assert data["cases"][0]["case"] == "a"
        assert data["summary"]["total"] == 3

    def test_table(self):
        text = self._report().table()
        assert "m.b" in text
        assert text.endswith("1 passed, 1 failed, 1 skipped of 3")

    def test_to_jsonable(self):
        from fractions import Fraction
        assert to_jsonable({"z": 1 + 2j, "r": Fraction(1, 3), 3: (1, 2.5)}) == {
            "z": [1.0, 2.0], "r": "1/3", "3": [1, 2.5]}


class TestRunner:
    """Test suite for running cases"""

    def test_status_from_tolerance(self):
        config = CampaignConfig()
        good = CaseSpec("m", "good", "r", lambda c, rng: CaseOutcome(1e-9, 1e-8, {}))
        bad = CaseSpec("m", "bad", "r", lambda c, rng: CaseOutcome(1e-7, 1e-8, {}))
        assert run_case(good, config).status == PASS
        assert run_case(bad, config).status == FAIL

    def test_exception_and_skip(self):
        config = CampaignConfig()

        def boom(c, rng):
            raise RuntimeError("boom")

        def skip(c, rng):
            raise SkipCase("no data")

        failed = run_case(CaseSpec("m", "boom", "r", boom), config)
        assert failed.status == FAIL
        assert "RuntimeError" in failed.message
        assert run_case(CaseSpec("m", "skip", "r", skip), config).status == SKIPPED

    def test_rng_is_seeded_per_case(self):
        spec = CaseSpec("m", "draw", "r", lambda c, rng: CaseOutcome(0.0, 1.0, {"x": rng.random()}))
        first = run_case(spec, CampaignConfig(seed=5))
        second = run_case(spec, CampaignConfig(seed=5))
        other = run_case(spec, CampaignConfig(seed=6))
        assert first.params["details"] == second.params["details"]
        assert first.params["details"] != other.params["details"]

    def test_unmatched_only(self):
        with pytest.raises(ConfigError):
            run_campaign(CampaignConfig(only=["nothing.here"]))

    def test_case_ids_unique(self):
        ids = campaign.case_ids()
        assert len(ids) == len(set(ids))
        assert "local_dist.prop27" in ids

    def test_subset_is_deterministic(self):
        config = CampaignConfig(seed=11, jobs=2, only=["char_gauss", "padic_core.field_axioms"])
        first, second = run_campaign(config), run_campaign(config)
        assert [c.case_id for c in first.cases] == [
            "padic_core.field_axioms", "char_gauss.gauss_abs", "char_gauss.lemma24"]
        assert first.to_json() == second.to_json()
        assert first.all_passed, first.table()
