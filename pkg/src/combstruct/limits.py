"""The logarithmic-class limit law for T_n / n and its derived constants.

When i E Z_i -> kappa and x = e^{-c/n}/y, the rescaled weighted sum T_n/n
converges to a law X_{kappa,c} whose Laplace transform is

    psi_c(s) = exp(-kappa int_0^1 (1 - e^{-s u}) e^{-c u} du / u),

and whose density on [0, 1] is known explicitly:

    g_c(z) = e^{-gamma kappa} e^{-c z} z^{kappa-1} / (Gamma(kappa) psi(c)).

The local-limit heuristic P(T_n = n) ~ g_c(1)/n drives the choice-of-x
discussion; limit_law_check compares it, and the empirical cdf of T_n/n,
against these predictions at finite n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from .errors import NumericGuardError, ParameterDomainError
from .structures import StructureSpec
from .indep_process import TiltedParams

EULER_GAMMA = 0.5772156649015329

_QUAD_ABS_TOL = 1e-10


@dataclass(frozen=True)
class LimitLaw:
    kappa: float
    c: float = 0.0
    gamma: float = EULER_GAMMA

    def __post_init__(self):
        if self.kappa <= 0:
            raise ParameterDomainError("kappa must be positive")


def _phi(u: float) -> float:
    """(1 - e^{-u})/u extended continuously through 0."""
    if u == 0.0:
        return 1.0
    return -math.expm1(-u) / u


def _log_psi_integral(kappa: float, s: float, c: float) -> float:
    """kappa * int_0^1 (1 - e^{-s u}) e^{-c u} du / u, rewritten as
    s e^{-c u} phi(s u) so the integrand is smooth at 0."""
    if s == 0.0:
        return 0.0
    val, err = quad(lambda u: s * math.exp(-c * u) * _phi(s * u),
                    0.0, 1.0, epsabs=_QUAD_ABS_TOL, limit=200)
    if err > 1e-8:
        raise NumericGuardError(
            f"quadrature for the Laplace exponent reached only {err:.3g}")
    return kappa * val


def laplace_psi(law: LimitLaw, s: float) -> float:
    """psi_c(s) = E exp(-s X_{kappa,c}); satisfies psi_c(s) psi(c) = psi(c+s)."""
    if s < 0:
        raise ParameterDomainError("Laplace argument must be >= 0")
    return math.exp(-_log_psi_integral(law.kappa, s, law.c))


def psi0(kappa: float, u: float) -> float:
    """psi(u) for the untilted law X_kappa (any real u)."""
    return math.exp(-_log_psi_integral(kappa, u, 0.0))


def limit_density(law: LimitLaw, z: float) -> float:
    """g_c(z) = e^{-gamma kappa} e^{-c z} z^{kappa-1} / (Gamma(kappa) psi(c)),
    valid on 0 <= z <= 1 (the density is explicit only there)."""
    if not (0.0 <= z <= 1.0):
        raise ParameterDomainError("the explicit density lives on [0, 1]")
    k, c = law.kappa, law.c
    if z == 0.0:
        if k < 1:
            return math.inf
        if k > 1:
            return 0.0
        return math.exp(-law.gamma) / psi0(1.0, c)
    return (math.exp(-law.gamma * k - c * z) * z ** (k - 1.0)
            / (math.gamma(k) * psi0(k, c)))


def density_integral(law: LimitLaw, z: float) -> float:
    """int_0^z g_c(u) du for z in [0, 1]."""
    if not (0.0 <= z <= 1.0):
        raise ParameterDomainError("the explicit density lives on [0, 1]")
    if z == 0.0:
        return 0.0
    val, err = quad(lambda u: limit_density(law, u), 0.0, z,
                    epsabs=_QUAD_ABS_TOL, limit=200)
    if err > 1e-8:
        raise NumericGuardError(f"density quadrature reached only {err:.3g}")
    return val


@dataclass
class LimitCheckReport:
    """Finite-n discrepancies against the logarithmic-class limit law."""

    kappa_eff: float
    c: float
    n: int
    prob_times_n: float
    predicted_g1: float
    rel_gap: float
    cdf_rows: list = field(default_factory=list)  # (z, empirical, predicted)

    def max_cdf_gap(self) -> float:
        if not self.cdf_rows:
            return 0.0
        return max(abs(e - p) for _, e, p in self.cdf_rows)


def limit_law_check(spec: StructureSpec, n: int, params: TiltedParams,
                    ecdf_samples: int = 0, seed: int = 0,
                    z_grid: Sequence[float] = (0.25, 0.5, 0.75, 1.0)) -> LimitCheckReport:
    """Compare n P_theta(T_n = n) against the local-limit value g_c(1), and
    (optionally) the empirical cdf of T_n/n against the integrated density.

    The structure must carry logarithmic metadata (kappa, y); the effective
    parameters are kappa_eff = kappa * theta and c = -n log(x y).
    """
    if spec.meta is None:
        raise ParameterDomainError("limit checks need (kappa, y) metadata")
    from . import sumdist
    from . import sampler as smp
    kappa_eff = float(spec.meta.kappa) * params.ftheta
    c = -n * (math.log(params.fx) + math.log(spec.meta.y))
    law = LimitLaw(kappa=kappa_eff, c=c)
    g1 = limit_density(law, 1.0)
    npn = n * sumdist.prob_T_eq_n(spec, n, params)
    report = LimitCheckReport(kappa_eff=kappa_eff, c=c, n=n, prob_times_n=npn,
                              predicted_g1=g1, rel_gap=abs(npn / g1 - 1.0))
    if ecdf_samples > 0:
        ts = smp.draw_T(spec, n, params, ecdf_samples, smp.RngState(seed))
        for z in z_grid:
            emp = float(np.mean(ts <= z * n))
            report.cdf_rows.append((z, emp, density_integral(law, z)))
    return report
