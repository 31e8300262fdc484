"""Tests for span recording."""

import json

import pytest

from src.utils.tracing import TracingManager


class TestTracingManager:
    def test_disabled_records_nothing(self, tmp_path):
        manager = TracingManager()
        manager.disable()
        with manager.span("quiet") as handle:
            assert handle is None
        assert manager.get_traces() == []
        assert manager.save(tmp_path / "trace.json") is None

    def test_spans_are_recorded_and_saved(self, tmp_path):
        manager = TracingManager()
        manager.enable()
        with manager.trace("run", {"seed": 1}):
            with manager.span("gradient_suite"):
                pass
        names = [(t["kind"], t["name"]) for t in manager.get_traces()]
        assert names == [("span", "gradient_suite"), ("trace", "run")]
        saved = json.loads(manager.save(tmp_path / "out" / "trace.json").read_text())
        assert saved[1]["metadata"] == {"seed": 1}

    def test_errors_are_recorded_and_reraised(self):
        manager = TracingManager()
        manager.enable()
        with pytest.raises(RuntimeError):
            with manager.span("failing"):
                raise RuntimeError("boom")
        assert manager.get_traces()[0]["error"] == "boom"
