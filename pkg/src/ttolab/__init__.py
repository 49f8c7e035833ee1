"""Numerical toolkit for model spaces K_theta of finite Blaschke products,
truncated Toeplitz operators, Clark measures, Carleson embeddings and
norm-controlled factorizations."""

from .errors import ToleranceError
from .inner import InnerFunction, make_blaschke, monomial
from .modelspace import KFun, ModelSpace, build_space

__all__ = ["InnerFunction", "KFun", "ModelSpace", "ToleranceError", "build_space", "make_blaschke", "monomial"]
__version__ = "0.1.0"
