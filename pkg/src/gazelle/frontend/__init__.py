"""Frontend: lexing, parsing, spec parsing and well-formedness checks."""

from .checker import check_spec
from .parser import parse_file, parse_string
from .spec_parser import parse_spec, parse_term
from .specs import (FunSpec, LAxiom, LFunction, LLemma, LoopSpec, LPredicate,
                    LogicalDecl, ParsedSpec, SpecHeader, TypeInvariant)

__all__ = [
    "parse_file", "parse_string", "parse_spec", "parse_term", "check_spec",
    "FunSpec", "LoopSpec", "TypeInvariant", "SpecHeader", "LogicalDecl",
    "LFunction", "LPredicate", "LAxiom", "LLemma", "ParsedSpec",
]
