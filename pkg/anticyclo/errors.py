"""
Error types shared by every anticyclo module
"""
from typing import Any, Dict


class AnticycloError(Exception):
    """Base error carrying a module-qualified code and a CLI exit status"""

    exit_status = 1

    def __init__(self, code: str, message: str = ""):
        self.code = code
        self.message = message or code
        super().__init__(f"[{code}] {self.message}")

    def to_report(self) -> Dict[str, Any]:
        """Machine-readable error payload"""
        return {
            "status": "error",
            "code": self.code,
            "message": self.message,
            "exit_status": self.exit_status,
        }


class PreconditionError(AnticycloError):
    """An operation was called outside its domain"""

    exit_status = 2


class VerificationError(AnticycloError):
    """A certificate or identity check failed"""

    exit_status = 3


class SchemaError(AnticycloError):
    """A file or JSON payload does not match the expected layout"""

    exit_status = 4
