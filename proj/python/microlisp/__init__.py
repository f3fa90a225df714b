"""MicroLisp interpreter with swappable stop-the-world garbage collectors."""

from ._microlisp import (
    EvalError,
    OutOfMemoryError,
    ParseError,
    Session,
    benchmark_script,
    benchmark_sweep,
    collectors,
)

__all__ = [
    "EvalError",
    "OutOfMemoryError",
    "ParseError",
    "Session",
    "benchmark_script",
    "benchmark_sweep",
    "collectors",
]
