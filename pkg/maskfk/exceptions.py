#!/usr/bin/env python3

"""This module defines custom exceptions for the library and the CLI."""

from typing import Any, Dict

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


class MaskFKError(Exception):
    """Base error. Carries the exit code the CLI reports for it."""

    exit_code: int = EXIT_USAGE
    default_error: str = "Invalid request"

    def __init__(self, error: str = "", **diagnostics: Any):
        if error == "":
            error = self.default_error

        super().__init__(error)
        self.error = error
        self.diagnostics = diagnostics
        self.detail: Dict[str, Any] = {
            "error": error,
            "success": False,
            "exit_code": self.exit_code,
        }
        if diagnostics:
            self.detail["diagnostics"] = diagnostics


class DomainError(MaskFKError, ValueError):
    """Raised when a time or argument lies outside the operation's domain."""

    default_error = "Argument outside of the operation's domain"


class CapacityError(MaskFKError):
    """Raised when a state space exceeds the enumeration limit."""

    default_error = "State space exceeds the configured enumeration limit"


class ContractError(MaskFKError, ValueError):
    """Raised when inputs handed from one operation to another disagree."""

    default_error = "Inputs violate the operation's contract"


class EvidenceError(MaskFKError):
    """Raised when the observed coordinates have zero probability."""

    default_error = "No data sequence is consistent with the observed tokens"


class RewardError(MaskFKError):
    """Raised when a reward function returns a non-finite value."""

    default_error = "Reward function returned a non-finite value"


class DegenerateWeightsError(MaskFKError):
    """Raised when every importance weight is zero."""

    default_error = "All importance weights are zero"


class IntegrationError(MaskFKError):
    """Raised when master-equation integration stays unstable after a retry."""

    default_error = "Master-equation integration is unstable"


class ConfigError(MaskFKError):
    """Raised for malformed experiment documents or CLI usage."""

    default_error = "Invalid experiment configuration"


class CheckFailedError(MaskFKError):
    """Raised when a verification run does not meet its tolerance."""

    exit_code = EXIT_CHECK_FAILED
    default_error = "Verification failed"


class ParticleError(MaskFKError):
    """Wraps a failure raised while advancing a single particle."""

    def __init__(self, particle: int, cause: Exception):
        self.particle = particle
        self.exit_code = getattr(cause, "exit_code", EXIT_USAGE)
        super().__init__(f"particle {particle}: {cause}", particle=particle)
