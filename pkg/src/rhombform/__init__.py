"""Distributed rhombus formation for sliding-square modular robots.

The simulator runs the sequential protocol and its two tree-based parallel
variants in synchronous rounds; see :func:`rhombform.engine.run`.
"""
from .configuration import Configuration, GeneratorSpec, parse, serialize
from .engine import VARIANTS, RunResult, World, run
from .grid import rhombus_cells

__version__ = "0.1.0"

__all__ = [
    "Configuration",
    "GeneratorSpec",
    "RunResult",
    "VARIANTS",
    "World",
    "parse",
    "rhombus_cells",
    "run",
    "serialize",
]
