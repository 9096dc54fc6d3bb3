"""Deductive verification toolchain for a mini-ML language with
GOSPEL-style specification comments."""

__version__ = "0.1.0"

from .frontend import check_spec, parse_file, parse_spec, parse_string
from .translator import translate_program
from .target_ir import emit_text, well_formed
from .vcgen import build_context, vcs_for_module, wp
from .eraser import erase
from .interp import evaluate

__all__ = [
    "parse_file", "parse_string", "parse_spec", "check_spec",
    "translate_program", "emit_text", "well_formed",
    "build_context", "vcs_for_module", "wp", "erase", "evaluate",
]
