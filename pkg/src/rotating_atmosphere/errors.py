"""Exception hierarchy shared by all modules.

Each class carries a short ``kind`` string so the command line front end can
emit structured error records without inspecting messages.
"""


class AtmosphereError(Exception):
    kind = "error"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_record(self):
        rec = {"error": self.kind, "message": str(self)}
        rec.update({k: _plain(v) for k, v in self.details.items()})
        return rec


def _plain(v):
    try:
        return float(v)
    except (TypeError, ValueError):
        return str(v)


class DomainError(AtmosphereError, ValueError):
    kind = "domain"


class NumericError(AtmosphereError, ArithmeticError):
    kind = "numeric"


class UnboundedDomainError(AtmosphereError):
    kind = "unbounded-domain"


class GeometryError(AtmosphereError):
    kind = "geometry"


class EscapeError(NumericError):
    kind = "escape"


class SingularFlowError(NumericError):
    kind = "singular-flow"


class NoContractionError(NumericError):
    kind = "no-contraction"


class DegenerateBasisError(NumericError):
    kind = "degenerate-basis"


class AssemblyOrderError(NumericError):
    kind = "assembly-order"


class BranchError(NumericError):
    kind = "branch"


class PreconditionError(AtmosphereError, ValueError):
    kind = "precondition"


class ConfigError(AtmosphereError):
    kind = "config"
