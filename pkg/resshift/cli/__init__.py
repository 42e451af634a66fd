"""
ResShift command-line interface
"""

from resshift.cli.main import cli

__all__ = ["cli"]
