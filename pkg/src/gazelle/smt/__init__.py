"""SMT-LIB encoding and external-solver discharge."""

from .discharge import DischargeResult, discharge, solver_available
from .encode import EncodeError, Encoder, SmtScript, encode

__all__ = ["encode", "Encoder", "SmtScript", "EncodeError",
           "discharge", "DischargeResult", "solver_available"]
