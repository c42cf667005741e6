"""Gauss-Seidel splitting and accelerated solvers for strongly monotone systems
``grad F(x) + N x = 0`` and for saddle point problems, with Lyapunov-based
convergence diagnostics.

Modules
-------
core
    Problem model, skew splitting, Bregman divergences and Lyapunov functionals.
flow
    Explicit/implicit Euler, AOR, GSS and the HSS baseline.
agss
    Accelerated IMEX, inexact IMEX and explicit schemes.
saddle
    Saddle point schemes, including transformed primal-dual methods.
harness
    Instance generation, file formats, rate fits, benchmarks and the CLI.
"""

from .core import *  # noqa: F401,F403
from .flow import *  # noqa: F401,F403
from .agss import *  # noqa: F401,F403
from .saddle import *  # noqa: F401,F403
from . import core, flow, agss, saddle, harness  # noqa: F401

__version__ = "0.1.0"
