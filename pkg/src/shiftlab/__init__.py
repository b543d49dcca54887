"""shiftlab: truncated-coefficient models of weighted shifts on disc
functions, tail functions and hyperfunctions on the unit circle."""

__version__ = "0.1.0"

from .config import Config, DEFAULT  # noqa: F401
from .errors import *  # noqa: F401,F403
