"""Spectral bounds for Dirichlet Laplacians on locally twisted tubes.

The package discretizes the cross-section problem, assembles the
one-dimensional effective operators along the tube axis, and evaluates a
Lieb-Thirring style bound on eigenvalue moments below the essential
spectrum threshold, together with a direct 3D check on a truncated tube.
"""

from .bound import (BoundConfig, BoundReport, alpha_sq, angular_energy_ratio,
                    compute_bound, gamma_beta0, lt_constant,
                    ribbon_lower_bound, trace_neg_power)
from .config import DirectConfig, RunConfig, load_config
from .direct3d import (DirectResult, Verdict, default_n_s, direct_spectrum,
                       verify_inequality)
from .discretize import (ClampStats, SparseOperator, SparseSymOperator,
                         assemble_3d, assemble_H_of_s, assemble_angular,
                         assemble_h_beta0, assemble_laplacian,
                         effective_potential, estimate_3d_bytes)
from .eigensolve import Spectrum, ground_state, negative_eigs, smallest_eigs
from .errors import (CapExceeded, ConfigError, EmptyMask, InvalidC,
                     InvalidSpec, MemoryBudgetExceeded, NoConvergence,
                     NonPositiveGroundState, QuadratureTooCoarse,
                     SigmaOutOfRange, TruncationTooSmall, TwistboundError)
from .geometry import (CrossSection, Disc, Ellipse, PolygonWithHoles, Ribbon,
                       build_cross_section, point_in_poly, radius,
                       zigzag_vertices)
from .profiles import Admissibility, TwistProfile, check_admissibility

__version__ = "0.1.0"

__all__ = [
    "Admissibility", "BoundConfig", "BoundReport", "CapExceeded",
    "ClampStats", "ConfigError", "CrossSection", "DirectConfig",
    "DirectResult", "Disc", "Ellipse", "EmptyMask", "InvalidC", "InvalidSpec",
    "MemoryBudgetExceeded", "NoConvergence", "NonPositiveGroundState",
    "PolygonWithHoles", "QuadratureTooCoarse", "Ribbon", "RunConfig",
    "SigmaOutOfRange", "SparseOperator", "SparseSymOperator", "Spectrum",
    "TruncationTooSmall", "TwistProfile", "TwistboundError", "Verdict",
    "alpha_sq", "angular_energy_ratio", "assemble_3d", "assemble_H_of_s",
    "assemble_angular", "assemble_h_beta0", "assemble_laplacian",
    "build_cross_section", "check_admissibility", "compute_bound",
    "default_n_s", "direct_spectrum", "effective_potential",
    "estimate_3d_bytes", "gamma_beta0", "ground_state", "load_config",
    "lt_constant", "negative_eigs", "point_in_poly", "radius",
    "ribbon_lower_bound", "smallest_eigs", "trace_neg_power",
    "verify_inequality", "zigzag_vertices",
]
