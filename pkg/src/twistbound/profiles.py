"""Twist velocity profiles theta_dot(s) = beta0 - mu(s) and admissibility checks.

The default slowdown family is the standard C-infinity bump

    mu(s) = a * exp(1 - 1/(1 - (s/s0)^2))   for |s| < s0,   0 otherwise,

which satisfies everything the theory asks of mu: bounded, nonnegative,
compactly supported, with integrable derivative.  Smoothness keeps the
s-quadrature clean at the support endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TwistProfile:
    beta0: float
    a: float
    s0: float
    family: str = "smooth-bump"

    def __post_init__(self):
        if not self.beta0 > 0:
            raise ValueError(f"beta0 must be positive, got {self.beta0}")
        if self.a < 0:
            raise ValueError(f"bump amplitude must be >= 0, got {self.a}")
        if not self.s0 > 0:
            raise ValueError(f"support half-width must be positive, got {self.s0}")
        if self.family != "smooth-bump":
            raise ValueError(f"unknown profile family {self.family!r}")


def mu(profile: TwistProfile, s):
    """Evaluate the slowdown at s (scalar or array).  Exact zero off support."""
    s_arr = np.asarray(s, dtype=float)
    out = np.zeros_like(s_arr)
    inside = np.abs(s_arr) < profile.s0
    x = s_arr[inside] / profile.s0
    out[inside] = profile.a * np.exp(1.0 - 1.0 / (1.0 - x * x))
    return float(out) if np.isscalar(s) else out


def mu_dot(profile: TwistProfile, s):
    """Analytic derivative of the bump.  Odd in s; exact zero off support."""
    s_arr = np.asarray(s, dtype=float)
    out = np.zeros_like(s_arr)
    inside = np.abs(s_arr) < profile.s0
    x = s_arr[inside] / profile.s0
    # d/ds exp(1 - 1/(1-x^2)) = exp(...) * (-2x/(1-x^2)^2) / s0
    out[inside] = (profile.a * np.exp(1.0 - 1.0 / (1.0 - x * x))
                   * (-2.0 * x / (1.0 - x * x) ** 2) / profile.s0)
    return float(out) if np.isscalar(s) else out


_MU_DOT_MAX_CACHE: dict = {}


def mu_dot_max(profile: TwistProfile) -> float:
    """sup |mu_dot| for the bump family, by golden-section search on [0, s0].

    No closed form; |mu_dot| is unimodal on (0, s0).  Cached per profile.
    """
    key = (profile.beta0, profile.a, profile.s0, profile.family)
    if key in _MU_DOT_MAX_CACHE:
        return _MU_DOT_MAX_CACHE[key]
    if profile.a == 0:
        _MU_DOT_MAX_CACHE[key] = 0.0
        return 0.0
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    # stay strictly inside the support; the derivative vanishes at both ends
    lo, hi = 1e-12 * profile.s0, profile.s0 * (1.0 - 1e-12)
    c = hi - invphi * (hi - lo)
    d_ = lo + invphi * (hi - lo)
    fc, fd = -abs(mu_dot(profile, c)), -abs(mu_dot(profile, d_))
    for _ in range(200):
        if fc < fd:
            hi, d_, fd = d_, c, fc
            c = hi - invphi * (hi - lo)
            fc = -abs(mu_dot(profile, c))
        else:
            lo, c, fc = c, d_, fd
            d_ = lo + invphi * (hi - lo)
            fd = -abs(mu_dot(profile, d_))
        if hi - lo < 1e-14 * profile.s0:
            break
    val = abs(mu_dot(profile, 0.5 * (lo + hi)))
    _MU_DOT_MAX_CACHE[key] = val
    return val


@dataclass(frozen=True)
class Admissibility:
    c: float
    gamma: float
    alpha_sq: float
    moment_bound_ok: bool
    fiber_discrete_ok: bool
    messages: tuple = field(default_factory=tuple)

    def to_dict(self):
        return {
            "c": self.c,
            "gamma": self.gamma,
            "alpha_sq": self.alpha_sq,
            "moment_bound_ok": self.moment_bound_ok,
            "fiber_discrete_ok": self.fiber_discrete_ok,
            "messages": list(self.messages),
        }


def check_admissibility(profile: TwistProfile, c: float, gamma: float,
                        alpha_sq: float) -> Admissibility:
    """Diagnostic object; never raises.

    moment_bound_ok: sup mu < c*beta0 with 0 < c < gamma/3.
    fiber_discrete_ok: max(2 sup mu / beta0, sup|mu_dot| / (2 beta0^2)) < alpha_sq,
    which keeps the fiber operators' spectra purely discrete.
    """
    msgs = []
    mu_max = profile.a          # bump peaks at s = 0
    md_max = mu_dot_max(profile)
    ok_c = 0.0 < c < gamma / 3.0
    ok_mu = mu_max < c * profile.beta0
    t1 = ok_c and ok_mu
    if not ok_c:
        msgs.append(f"c={c:.6g} outside (0, gamma/3)=(0, {gamma / 3.0:.6g})")
    if not ok_mu:
        msgs.append(f"sup mu = {mu_max:.6g} not below c*beta0 = {c * profile.beta0:.6g}")
    t2 = max(2.0 * mu_max / profile.beta0,
             md_max / (2.0 * profile.beta0 ** 2)) < alpha_sq
    if not t2:
        msgs.append("slowdown too strong for the discrete-fiber condition")
    if profile.a >= profile.beta0:
        msgs.append(f"warning: a={profile.a:.6g} >= beta0={profile.beta0:.6g}, "
                    "twist velocity changes sign")
    return Admissibility(c=c, gamma=gamma, alpha_sq=alpha_sq,
                         moment_bound_ok=t1, fiber_discrete_ok=t2, messages=tuple(msgs))
