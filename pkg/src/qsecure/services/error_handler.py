"""Centralized error handling for the qsecure toolkit."""

import json
import logging
import sys
from enum import Enum
from typing import Any, Dict, Optional, TextIO

logger = logging.getLogger(__name__)


class ErrorType(Enum):
    """Enumeration of error types with their characteristics."""

    # Caller errors
    INVALID_ARGUMENT = ("invalid_argument", 2, "Invalid argument")
    INSECURE_CHANNEL = ("insecure_channel", 3, "CHSH check failed: channel is not secure")
    CAPACITY_EXCEEDED = ("capacity_exceeded", 4, "Secret does not fit the cover image")
    IMAGE_FORMAT = ("image_format", 5, "Malformed or unsupported raster file")
    ENVELOPE_FORMAT = ("envelope_format", 6, "Malformed cipher envelope")
    INSUFFICIENT_DATA = ("insufficient_data", 7, "Not enough measurement rounds")
    NOT_STEGO_IMAGE = ("not_stego_image", 8, "No embedded secret found")

    # Pipeline errors
    PIPELINE_FAILED = ("pipeline_failed", 9, "Pipeline stage failed")
    INTERNAL_ERROR = ("internal_error", 1, "Internal error")

    def __init__(self, error_code: str, exit_code: int, default_message: str):
        self.error_code = error_code
        self.exit_code = exit_code
        self.default_message = default_message


class ErrorDetails:
    """Structured error details for consistent CLI diagnostics."""

    def __init__(
        self,
        error_type: ErrorType,
        message: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
        suggestions: Optional[list] = None,
        stage: Optional[str] = None,
    ):
        self.error_type = error_type
        self.message = message or error_type.default_message
        self.details = details or {}
        self.suggestions = suggestions or []
        self.stage = stage

    def to_dict(self) -> Dict[str, Any]:
        """Convert error details to a JSON-ready dictionary."""
        response: Dict[str, Any] = {
            "message": self.message,
            "error_type": self.error_type.error_code,
            "exit_code": self.error_type.exit_code,
        }

        if self.details:
            response["details"] = self.details

        if self.suggestions:
            response["suggestions"] = self.suggestions

        if self.stage:
            response["stage"] = self.stage

        return response


class QSecureError(Exception):
    """Base exception for toolkit errors with structured details."""

    error_type = ErrorType.INTERNAL_ERROR

    def __init__(self, error_details: ErrorDetails | str | None = None, **details: Any):
        if not isinstance(error_details, ErrorDetails):
            error_details = ErrorDetails(self.error_type, message=error_details, details=details)
        self.error_details = error_details
        super().__init__(error_details.message)

    @property
    def exit_code(self) -> int:
        return self.error_details.error_type.exit_code


class InvalidArgumentError(QSecureError, ValueError):
    error_type = ErrorType.INVALID_ARGUMENT


class InsecureChannelError(QSecureError):
    error_type = ErrorType.INSECURE_CHANNEL


class CapacityError(QSecureError):
    error_type = ErrorType.CAPACITY_EXCEEDED


class ImageFormatError(QSecureError):
    error_type = ErrorType.IMAGE_FORMAT


class EnvelopeFormatError(QSecureError):
    error_type = ErrorType.ENVELOPE_FORMAT


class InsufficientDataError(QSecureError):
    error_type = ErrorType.INSUFFICIENT_DATA


class NotStegoImageError(QSecureError):
    error_type = ErrorType.NOT_STEGO_IMAGE


class PipelineError(QSecureError):
    error_type = ErrorType.PIPELINE_FAILED


def create_insecure_channel_error(
    chsh_value: Optional[float],
    threshold: float,
    singlets: int,
) -> ErrorDetails:
    """Create a standardized insecure-channel error with CHSH diagnostics."""

    if chsh_value is None:
        message = f"CHSH value could not be estimated from {singlets} singlets"
    else:
        message = (
            f"CHSH value {chsh_value:.4f} does not exceed the security threshold "
            f"{threshold} in magnitude"
        )

    return ErrorDetails(
        error_type=ErrorType.INSECURE_CHANNEL,
        message=message,
        details={
            "chsh_value": chsh_value,
            "threshold": threshold,
            "classical_bound": 2.0,
            "singlets": singlets,
        },
        suggestions=[
            "Possible eavesdropping or excessive channel noise",
            "Increase --singlets to reduce statistical fluctuation",
            "Use --force to write the key anyway",
        ],
    )


def create_capacity_error(required_bytes: int, available_bytes: int, bits_per_channel: int) -> ErrorDetails:
    """Create a standardized capacity error naming both sizes."""

    return ErrorDetails(
        error_type=ErrorType.CAPACITY_EXCEEDED,
        message=(
            f"Secret needs {required_bytes} bytes but the cover holds only "
            f"{available_bytes} bytes at {bits_per_channel} bits per channel"
        ),
        details={
            "required_bytes": required_bytes,
            "available_bytes": available_bytes,
            "bits_per_channel": bits_per_channel,
        },
        suggestions=[
            "Use a larger cover image",
            "Increase the number of bits per channel (1, 2 or 4)",
        ],
    )


def create_insufficient_data_error(missing_pairs: list[tuple[int, int]], rounds: int) -> ErrorDetails:
    """Create a standardized error for empty CHSH correlation cells."""

    names = ", ".join(f"(a{a},b{b})" for a, b in missing_pairs)
    return ErrorDetails(
        error_type=ErrorType.INSUFFICIENT_DATA,
        message=f"No rounds measured in basis pair(s) {names}",
        details={"missing_pairs": [list(pair) for pair in missing_pairs], "rounds": rounds},
        suggestions=["Run the protocol with more singlets"],
    )


def create_stage_error(stage: str, original_error: Exception) -> ErrorDetails:
    """Create a standardized pipeline-stage error."""

    details: Dict[str, Any] = {"original_error": str(original_error)}
    if isinstance(original_error, QSecureError):
        details["original_error_type"] = original_error.error_details.error_type.error_code

    return ErrorDetails(
        error_type=ErrorType.PIPELINE_FAILED,
        message=f"Pipeline aborted at stage '{stage}': {original_error}",
        details=details,
        stage=stage,
    )


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the process exit code."""
    if isinstance(error, QSecureError):
        return error.exit_code
    if isinstance(error, (FileNotFoundError, IsADirectoryError, PermissionError)):
        return ErrorType.INVALID_ARGUMENT.exit_code
    return ErrorType.INTERNAL_ERROR.exit_code


def handle_cli_error(error: BaseException, stream: TextIO | None = None) -> int:
    """Log an error, print its structured details and return the exit code."""

    if isinstance(error, QSecureError):
        error_details = error.error_details
    elif isinstance(error, (FileNotFoundError, IsADirectoryError, PermissionError)):
        error_details = ErrorDetails(ErrorType.INVALID_ARGUMENT, message=str(error))
    else:
        error_details = ErrorDetails(
            ErrorType.INTERNAL_ERROR,
            message=f"Unexpected error: {error}",
            suggestions=["Re-run with --log-level DEBUG for a traceback"],
        )

    log_message = f"{error_details.error_type.error_code}: {error_details.message}"
    if error_details.error_type is ErrorType.INTERNAL_ERROR:
        logger.error(log_message)
        logger.debug("Traceback", exc_info=error)
    elif error_details.error_type in (ErrorType.INSECURE_CHANNEL, ErrorType.PIPELINE_FAILED):
        logger.warning(log_message)
    else:
        logger.info(f"Client error: {log_message}")

    print(json.dumps(error_details.to_dict()), file=stream or sys.stderr)
    return error_details.error_type.exit_code
