import json
import logging
import numpy as np
import pytest
from hopf_flow.utils.logger import JsonFormatter, _describe, log_error, logger


def _record(props):
    record = logging.LogRecord("hopf_flow", logging.INFO, __file__, 1, "Step accepted", None, None)
    record.props = props
    return record


def test_numpy_props_are_serialized():
    line = JsonFormatter().format(_record({"dt": np.float64(0.5), "steps": np.int64(3),
                                           "kappa": np.zeros(3), "nodes": np.zeros((256, 3))}))
    payload = json.loads(line)
    assert payload["message"] == "Step accepted"
    assert payload["level"] == "INFO"
    assert payload["dt"] == 0.5
    assert payload["steps"] == 3
    assert payload["kappa"] == [0.0, 0.0, 0.0]
    assert payload["nodes"] == "ndarray(256, 3)"


def test_describe_arguments(equator):
    assert _describe(np.zeros((4, 3))) == "ndarray(4, 3)"
    assert _describe(equator) == "DiscreteCurve(size=256)"
    assert _describe("x" * 100).endswith("...")


def test_log_error_reraises():
    @log_error(logger)
    def fail(curve):
        raise ValueError("boom")

    with pytest.raises(ValueError, match="boom"):
        fail(np.zeros(2))
