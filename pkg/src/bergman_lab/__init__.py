"""Numerical laboratory for Bergman kernels of Reinhardt and successor domains.

Subpackages by layer:

* :mod:`~bergman_lab.domains`, :mod:`~bergman_lab.sampling` -- regions,
  defining functions, samplers;
* :mod:`~bergman_lab.jets`, :mod:`~bergman_lab.expansion`,
  :mod:`~bergman_lab.kernels` -- kernel engine;
* :mod:`~bergman_lab.regularity`, :mod:`~bergman_lab.forelli_rudin`,
  :mod:`~bergman_lab.mobius`, :mod:`~bergman_lab.defining` -- estimates;
* :mod:`~bergman_lab.projection` -- discretized projection operators;
* :mod:`~bergman_lab.reports`, :mod:`~bergman_lab.config`,
  :mod:`~bergman_lab.suites`, :mod:`~bergman_lab.cli` -- reports and
  batch front end.
"""
from .domains import (DefiningFunction, SuccessorChain, SuccessorRegion, SuccessorSpec, ball, contains, disc, egg,
                      polydisc, rho, rho_gradient, successor_contains)
from .kernels import (ClosedFormKernel, MonomialSeriesKernel, SuccessorKernel, ball_kernel, chain_kernel,
                      disc_kernel, kernel_eval, kernel_jet, successor_kernel)
from .projection import ProjectionOperator, TestFamily, lp_ratio, project, reproducing_study, schur_pipeline
from .regularity import NegRho, PowerWeight, RegularityProbe, SuccessorWeight, h_regularity_ratio
from .reports import EstimateReport, merge_reports, read_report
from .sampling import SampleScheme, sample_interior, sample_layers

__version__ = "0.1.0"

__all__ = [
    "DefiningFunction", "SuccessorChain", "SuccessorRegion", "SuccessorSpec", "ball", "contains", "disc", "egg",
    "polydisc", "rho", "rho_gradient", "successor_contains",
    "ClosedFormKernel", "MonomialSeriesKernel", "SuccessorKernel", "ball_kernel", "chain_kernel", "disc_kernel",
    "kernel_eval", "kernel_jet", "successor_kernel",
    "ProjectionOperator", "TestFamily", "lp_ratio", "project", "reproducing_study", "schur_pipeline",
    "NegRho", "PowerWeight", "RegularityProbe", "SuccessorWeight", "h_regularity_ratio",
    "EstimateReport", "merge_reports", "read_report",
    "SampleScheme", "sample_interior", "sample_layers",
    "__version__",
]
