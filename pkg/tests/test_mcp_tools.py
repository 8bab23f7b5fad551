# coding=utf-8
"""
MCP 工具层：参数校验、错误结构与各工具的返回
"""

import pytest

from mcp_server.tools.config_mgmt import ConfigManagementTools
from mcp_server.tools.search_tools import SearchTools
from mcp_server.tools.system import SystemManagementTools
from mcp_server.utils.errors import error_result
from mcp_server.utils.validators import (
    validate_config_section,
    validate_k,
    validate_query,
    validate_report_name,
    validate_scan_ratio,
    validate_user_id,
)
from shopradar.__main__ import run
from shopradar.context import AppContext
from shopradar.core.errors import DataError, InvalidParameterError
from shopradar.core.loader import build_config, load_config
from shopradar.report.writer import write_json


@pytest.fixture
def context(config_data):
    return AppContext(build_config(config_data))


class TestValidators:

    def test_k(self):
        assert validate_k(None) is None
        assert validate_k("100.0") == 100
        assert validate_k(7) == 7
        for bad in (0, -1, True, "abc", 10001):
            with pytest.raises(InvalidParameterError):
                validate_k(bad)

    def test_user_id(self):
        assert validate_user_id(None) is None
        assert validate_user_id("  ") is None
        assert validate_user_id("12") == 12
        with pytest.raises(InvalidParameterError):
            validate_user_id(-4)

    def test_scan_ratio(self):
        assert validate_scan_ratio("0.05") == pytest.approx(0.05)
        assert validate_scan_ratio(1) == 1.0
        for bad in (0, 1.5, "x"):
            with pytest.raises(InvalidParameterError):
                validate_scan_ratio(bad)

    def test_query_and_names(self):
        assert validate_query("  red dress ") == "red dress"
        with pytest.raises(InvalidParameterError):
            validate_query("")
        assert validate_config_section(None) == "all"
        assert validate_config_section("INDEX") == "index"
        assert validate_report_name(None) == "eval"
        assert validate_report_name("sweep_tau+1") == "sweep_tau+1"
        with pytest.raises(InvalidParameterError):
            validate_report_name("../secret")

    def test_error_result(self):
        failure = error_result(DataError("boom", code="MISSING_REPORT", suggestion="retry"))
        assert failure == {"success": False, "error": {"code": "MISSING_REPORT", "message": "boom",
                                                       "suggestion": "retry"}}
        assert error_result(RuntimeError("x"))["error"]["code"] == "INTERNAL_ERROR"


class TestConfigTools:

    def test_section(self, context):
        result = ConfigManagementTools(context).get_current_config("index")
        assert result["success"]
        assert result["config"]["N_COLUMNS"] == 2

    def test_all_sections_lowercase(self, context):
        result = ConfigManagementTools(context).get_current_config()
        assert {"app", "paths", "index", "relevance"} <= set(result["config"])

    def test_unknown_section(self, context):
        result = ConfigManagementTools(context).get_current_config("secrets")
        assert result["error"]["code"] == "INVALID_PARAMETER"


class TestSystemTools:

    def test_status_before_any_artifact(self, context):
        result = SystemManagementTools(context).get_index_status()
        assert result["success"]
        assert result["index"] is None
        assert not any(v for k, v in result["artifacts"].items() if k != "paths")

    def test_report_round_trip(self, context):
        tools = SystemManagementTools(context)
        assert tools.get_eval_report("eval")["error"]["code"] == "MISSING_REPORT"
        write_json(f"{context.pipeline.report_dir}/eval.json", {"recall_at_k": 0.5, "records": [{"q": 1}]})
        brief = tools.get_eval_report()
        assert brief["report"] == {"recall_at_k": 0.5}
        full = tools.get_eval_report("eval", include_records=True)
        assert full["report"]["records"] == [{"q": 1}]
        assert tools.get_eval_report("a/b")["error"]["code"] == "INVALID_PARAMETER"


class TestSearchTools:

    def test_validation_happens_before_loading(self, context):
        tools = SearchTools(context)
        assert tools.search_products("")["error"]["code"] == "INVALID_PARAMETER"
        assert tools.search_products("red", k="many")["error"]["code"] == "INVALID_PARAMETER"

    def test_missing_artifacts(self, context):
        result = SearchTools(context).search_products("red shoes")
        assert result["error"]["code"] == "MISSING_ARTIFACT"

    def test_search_after_pipeline(self, make_config_file):
        config, _ = make_config_file()
        for command in (["gen-data"], ["train"], ["export"], ["build-index"]):
            assert run(["--config", config] + command) == 0
        context = AppContext(load_config(config))
        result = SearchTools(context).search_products("shoes", user_id="3", k="10", scan_ratio="1.0")
        assert result["success"]
        assert result["user_id"] == 3
        assert result["kept"] + result["dropped"] == 10
        assert len(result["titles"]) == result["kept"]
        status = SystemManagementTools(context).get_index_status()
        assert status["artifacts"]["index"] is True
        assert status["index"]["n_columns"] == 2

    def test_default_scan_ratio_comes_from_serve_section(self, make_config_file):
        config, _ = make_config_file(serve={"scan_ratio": 0.3}, index={"max_scan_ratio": 0.9})
        for command in (["gen-data"], ["train"], ["export"], ["build-index"]):
            assert run(["--config", config] + command) == 0
        tools = SearchTools(AppContext(load_config(config)))
        assert tools.pipeline.scan_ratio == pytest.approx(0.3)
        assert tools.pipeline.index.config.max_scan_ratio == pytest.approx(0.9)
        implicit = tools.search_products("shoes", user_id="3", k="10")
        explicit = tools.search_products("shoes", user_id="3", k="10", scan_ratio="0.3")
        assert implicit["success"] and explicit["success"]
        assert implicit["item_ids"] == explicit["item_ids"]
