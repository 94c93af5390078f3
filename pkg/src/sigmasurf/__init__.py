"""Constant sigma_(n-1) curvature spacelike hypersurfaces.

Symmetric-function algebra, kernel-matrix positivity certification, and a
finite-difference solver for the dual Dirichlet problem on the gradient ball,
with post-solve curvature verification.
"""

from .symfunc import (
    CurvatureVector,
    sigma,
    sigma_grad,
    sigma_hess,
    gaarding_test,
    f_quotient,
    f_matrix_derivative,
)
from .kernel import (
    KernelMatrices,
    MinorIndex,
    build_kernel,
    minor_bruteforce,
    minor_closed_form,
    principal_minor_sum,
    psd_certify,
)

__version__ = "0.1.0"
