"""Class II two-axes pseudo-Finsleroid metric: evaluation and identity checks."""

from .core import (ConvergenceError, DomainError, FinsleroidError, Frame, OnAxisSection,
                   OutsideBLikeRegion, Params, ScalarVars, decompose, default_frame,
                   default_params, load_params, validate_params)

__version__ = "0.1.0"
