"""Error types shared across the alignment pipeline

Every error carries the process exit code the CLI maps it to, so a batch
caller can tell failures apart without parsing messages.
"""

from typing import Any, Dict, List, Optional


class AlignError(Exception):
    """Base class for all pipeline errors"""

    exit_code: int = 9

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def details(self) -> Dict[str, Any]:
        """Extra machine-readable fields for the error line"""
        return {}

    def to_dict(self) -> Dict[str, Any]:
        payload = {
            "error": type(self).__name__,
            "code": self.exit_code,
            "message": self.message,
        }
        payload.update(self.details())
        return payload


class MissingInput(AlignError):
    """A referenced input file does not exist"""

    exit_code = 2

    def __init__(self, path: str):
        super().__init__(f"input file not found: {path}")
        self.path = path

    def details(self) -> Dict[str, Any]:
        return {"path": self.path}


class ParseError(AlignError):
    """Malformed structured document"""

    exit_code = 3

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset

    def details(self) -> Dict[str, Any]:
        return {"offset": self.offset}


class FormatError(AlignError):
    """Malformed embedding, lexicon or corpus file"""

    exit_code = 3

    def __init__(self, message: str, line: Optional[int] = None):
        text = f"line {line}: {message}" if line is not None else message
        super().__init__(text)
        self.line = line

    def details(self) -> Dict[str, Any]:
        return {"line": self.line}


class PlanInvalid(AlignError):
    """Plan document violates an ExpressionPlan invariant"""

    exit_code = 4

    def __init__(self, field: str, reason: str = "invalid value"):
        super().__init__(f"{field}: {reason}")
        self.field = field

    def details(self) -> Dict[str, Any]:
        return {"field": self.field}


class CatalogInvalid(AlignError):
    """Action catalog violates one of its invariants"""

    exit_code = 4


class InvalidActionId(AlignError):
    """Action identifier does not match the <identifier> pattern"""

    exit_code = 4

    def __init__(self, action_id: str):
        super().__init__(f"malformed action id: {action_id!r}")
        self.action_id = action_id


class ConfigInvalid(AlignError):
    """Numeric override outside its documented range"""

    exit_code = 4


class EmptySpeech(AlignError):
    """Speech text has no words after normalization"""

    exit_code = 5

    def __init__(self, message: str = "speech text contains no words"):
        super().__init__(message)


class PlanNotExecutable(AlignError):
    """Plan references unknown actions or puts actions on the wrong channel"""

    exit_code = 6

    def __init__(self, issues: List[str]):
        super().__init__("; ".join(issues) or "plan is not executable")
        self.issues = list(issues)

    def details(self) -> Dict[str, Any]:
        return {"issues": self.issues}


class Infeasible(AlignError):
    """No grid assignment satisfies the temporal constraints"""

    exit_code = 7

    def __init__(self, action_id: str, reason: str = "no feasible start time"):
        super().__init__(f"{action_id}: {reason}")
        self.action_id = action_id

    def details(self) -> Dict[str, Any]:
        return {"action_id": self.action_id}


class ConstraintViolation(AlignError):
    """A schedule fails the constraint re-check"""

    exit_code = 8

    def __init__(self, violations: List[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)

    def details(self) -> Dict[str, Any]:
        return {"violations": self.violations}


class DimError(AlignError):
    """Vector or matrix dimensions disagree"""

    exit_code = 9


class NonFiniteInput(AlignError):
    """NaN or infinity where a finite real is required"""

    exit_code = 9


class EmptyInput(AlignError):
    """Operation needs at least one value"""

    exit_code = 9


class TooLarge(AlignError):
    """Search space exceeds the configured enumeration or table bound"""

    exit_code = 9
