"""Gaussian multiplicative chaos measures, conformal welding diagnostics,
and Lehto lower-bound machinery."""

from ._core import *  # noqa: F401,F403
