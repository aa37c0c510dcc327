"""Command-line interface"""

from .app import build_parser, main
from .commands import CommandHandlers

__all__ = ['build_parser', 'main', 'CommandHandlers']
