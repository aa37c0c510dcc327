"""Tests for the error hierarchy and pipeline decorators"""

import logging

import pytest

from utils.decorators import handle_errors, stage, timed
from utils.errors import (
    ConfigError,
    CwssnetError,
    DataError,
    DimensionError,
    NumericError,
    PreconditionError,
)


class TestErrors:
    """Test exception classes"""

    def test_exit_codes(self):
        """Test each error kind maps to its exit code"""
        assert CwssnetError("x").exit_code == 1
        assert ConfigError("x").exit_code == 2
        assert DataError("x").exit_code == 3
        assert NumericError("x").exit_code == 4

    def test_stage_prefix(self):
        """Test the stage name is shown once attached"""
        error = DataError("truncated cube")
        assert str(error) == "truncated cube"
        error.with_stage("prepare")
        assert str(error) == "[prepare] truncated cube"

    def test_first_stage_wins(self):
        """Test with_stage keeps the innermost stage"""
        error = ConfigError("bad", stage="checkpoint")
        assert error.with_stage("eval") is error
        assert error.stage == "checkpoint"

    def test_numeric_error_names_tensor(self):
        """Test the offending tensor is recorded"""
        error = NumericError("non-finite loss", tensor_name="loss")
        assert error.tensor_name == "loss"

    def test_dimension_error(self):
        """Test axis, expected and actual are kept"""
        error = DimensionError("channels", 16, 8, "fusion")
        assert isinstance(error, ValueError)
        assert error.axis == "channels"
        assert "fusion: dimension mismatch on axis 'channels'" in str(error)
        assert issubclass(PreconditionError, ValueError)


class TestDecorators:
    """Test stage, handle_errors and timed"""

    def test_stage_tags_package_errors(self):
        """Test package errors leave the stage tagged"""

        @stage("train")
        def failing():
            raise NumericError("nan gradient", tensor_name="w")

        with pytest.raises(NumericError) as exc:
            failing()
        assert exc.value.stage == "train"
        assert str(exc.value).startswith("[train]")

    def test_stage_ignores_other_errors(self):
        """Test foreign exceptions pass through untouched"""

        @stage("train")
        def failing():
            raise KeyError("k")

        with pytest.raises(KeyError):
            failing()

    def test_nested_stages(self):
        """Test the inner stage is not overwritten"""

        @stage("checkpoint")
        def inner():
            raise DataError("missing manifest")

        @stage("eval")
        def outer():
            inner()

        with pytest.raises(DataError) as exc:
            outer()
        assert exc.value.stage == "checkpoint"

    def test_handle_errors_logs_and_reraises(self, caplog):
        """Test failures are logged with the function name"""

        @handle_errors
        def broken():
            raise RuntimeError("boom")

        with caplog.at_level(logging.ERROR, logger="utils.decorators"):
            with pytest.raises(RuntimeError):
                broken()
        assert "Error in broken: boom" in caplog.text

    def test_handle_errors_passes_results(self):
        """Test successful calls are transparent"""

        @handle_errors
        def add(a, b):
            return a + b

        assert add(2, 3) == 5
        assert add.__name__ == "add"

    def test_timed_logs_duration(self, caplog):
        """Test the wall time line is logged even on failure"""

        @timed("epoch")
        def failing():
            raise DataError("x")

        with caplog.at_level(logging.INFO, logger="utils.decorators"):
            with pytest.raises(DataError):
                failing()
        assert "epoch finished in" in caplog.text


if __name__ == "__main__":
    pytest.main([__file__])
