"""Derive first-order abstract machines from higher-order interpreters.

The pipeline converts a program to A-normal form, analyses it, selectively
transforms it into continuation-passing style, analyses it again,
selectively defunctionalizes it and finally inlines administrative lets.
"""
import logging

from .pipeline import STAGES, transform
from .syntax import parse_program, pretty

logging.getLogger(__name__).addHandler(logging.NullHandler())

__all__ = ["STAGES", "transform", "parse_program", "pretty"]
__version__ = "0.1.0"
