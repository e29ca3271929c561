"""Temporal properties: syntax, compilation and model checking."""
from .checker import CrossCheck, Verdict, check_rts, check_sts, cross_check
from .compile import CompileError, Diagnostic, compile_property, rewrite_property, unfold_property, validate
from .formula import format_property, parse_property, skeleton

__all__ = [
    "CompileError",
    "CrossCheck",
    "Diagnostic",
    "Verdict",
    "check_rts",
    "check_sts",
    "compile_property",
    "cross_check",
    "format_property",
    "parse_property",
    "rewrite_property",
    "skeleton",
    "unfold_property",
    "validate",
]
