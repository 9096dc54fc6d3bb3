"""Verification-condition generation."""

from .context import LogicalContext, build_context
from .vcs import VC, vcs_for_module
from .wp import Obligation, ObligationEngine, wp

__all__ = ["LogicalContext", "build_context", "VC", "vcs_for_module",
           "Obligation", "ObligationEngine", "wp"]
