"""Direct spectrum of the truncated 3D operator and the end-to-end check.

Dirichlet truncation in s only raises eigenvalues, so the moment sum
computed here is a lower estimate of the true left-hand side of the
spectral inequality; a PASS verdict against the bound is therefore a
necessary-condition check, honest but not sharp.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .bound import BoundReport
from .discretize import assemble_3d, assemble_h_beta0
from .eigensolve import ground_state, smallest_eigs
from .errors import CapExceeded, TruncationTooSmall
from .geometry import CrossSection
from .profiles import TwistProfile

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DirectResult:
    L_trunc: float
    n_s: int
    h: float
    sigma: float
    E_discrete: float
    eigenvalues_below: tuple
    moment_sum: float
    caveats: dict
    shape: str
    profile: dict

    def to_dict(self) -> dict:
        return {
            "L_trunc": self.L_trunc, "n_s": self.n_s, "h": self.h,
            "sigma": self.sigma, "E_discrete": self.E_discrete,
            "eigenvalues_below": list(self.eigenvalues_below),
            "moment_sum": self.moment_sum, "caveats": self.caveats,
            "shape": self.shape, "profile": self.profile,
        }


def default_n_s(L_trunc: float, h: float) -> int:
    return math.ceil(2.0 * L_trunc / h)


def direct_spectrum(cs: CrossSection, profile: TwistProfile, L_trunc: float,
                    n_s: int, cap: int, sigma: float = 1.5, tol: float = 1e-9,
                    seed: int = 42, block: int | None = None,
                    maxiter: int = 5000,
                    mem_budget_bytes: int = 4 << 30) -> DirectResult:
    """Eigenvalues of the truncated straightened operator below the
    2D threshold, and their moment sum.

    Only eigenvalues below E_discrete - 10 * tol * scale count as
    discrete states; Dirichlet truncation scatters near-threshold
    artifacts just under E and the buffer avoids counting them.
    """
    if L_trunc < 2.0 * profile.s0:
        raise TruncationTooSmall(
            f"L_trunc={L_trunc} below twice the support half-width "
            f"{2.0 * profile.s0}")
    h_op = assemble_h_beta0(cs, profile.beta0)
    e_disc, _ = ground_state(h_op, tol=tol, seed=seed, block=block,
                             maxiter=maxiter)
    h3 = assemble_3d(cs, profile, L_trunc, n_s,
                     mem_budget_bytes=mem_budget_bytes)
    buffer = 10.0 * tol * h3.scale()
    threshold = e_disc - buffer

    m = 4
    while True:
        m_eff = min(m, h3.n)
        spec = smallest_eigs(h3, m_eff, tol, seed=seed, block=block,
                             maxiter=maxiter)
        below = spec.eigenvalues < threshold
        if not np.all(below):
            spec = spec.take(below)
            break
        if np.sum(below) >= cap:
            raise CapExceeded(
                f"{int(np.sum(below))} eigenvalues below threshold without "
                f"reaching it (cap {cap})")
        if m_eff == h3.n:
            break
        m *= 2

    lam = spec.eigenvalues
    moment = float(np.sum((e_disc - lam) ** sigma)) if lam.size else 0.0
    ds = 2.0 * L_trunc / (n_s + 1)
    caveats = {
        "truncation_lower_estimate": True,
        "axial_spacing_coarser_than_h": bool(ds > cs.h),
    }
    log.info("direct spectrum: %d states below E=%.6g (buffer %.3g)",
             lam.size, e_disc, buffer)
    return DirectResult(
        L_trunc=float(L_trunc), n_s=int(n_s), h=float(cs.h),
        sigma=float(sigma), E_discrete=float(e_disc),
        eigenvalues_below=tuple(float(x) for x in lam),
        moment_sum=moment, caveats=caveats, shape=repr(cs.spec),
        profile={"beta0": profile.beta0, "a": profile.a, "s0": profile.s0,
                 "family": profile.family},
    )


@dataclass(frozen=True)
class Verdict:
    passed: bool
    moment: float
    bound: float
    ratio: float

    def to_dict(self) -> dict:
        return {"verdict": "PASS" if self.passed else "FAIL",
                "moment": self.moment, "bound": self.bound,
                "ratio": self.ratio}


def verify_inequality(direct: DirectResult, report: BoundReport) -> Verdict:
    """PASS when moment sum <= bound.  Both sides must describe the same
    shape, profile, and sigma; the grids may differ (the 3D solve is
    memory-bound to coarser spacings), which is safe because the direct
    moment is a lower estimate at any resolution."""
    if direct.shape != report.shape:
        raise ValueError(f"shape mismatch: {direct.shape} vs {report.shape}")
    if direct.profile != report.profile:
        raise ValueError("profile mismatch between direct result and report")
    if direct.sigma != report.sigma:
        raise ValueError(f"sigma mismatch: {direct.sigma} vs {report.sigma}")
    moment, bnd = direct.moment_sum, report.bound
    if moment == 0.0:
        ratio = 0.0
    elif bnd > 0.0:
        ratio = moment / bnd
    else:
        ratio = math.inf
    return Verdict(passed=bool(moment <= bnd), moment=moment, bound=bnd,
                   ratio=ratio)
