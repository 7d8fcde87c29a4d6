"""Interpolation diffusion for speech enhancement, checked against analytic scores."""

__version__ = "0.1.0"

from .schedule import IdmSchedule, LinearBeta, VeSchedule, VpSchedule  # noqa: E402

__all__ = ["IdmSchedule", "LinearBeta", "VeSchedule", "VpSchedule", "__version__"]
