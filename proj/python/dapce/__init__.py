"""Deep adaptive aPC surrogates, sampling and uncertainty statistics."""

from ._dapce import *  # noqa: F401,F403
from ._dapce import Error, __version__  # noqa: F401
