"""Closed-form performance expressions: cluster-size distribution, success
probabilities for the random-access and D2D links, access delay, and the
protocol-efficiency figure of merit.

The per-code thinned load alpha_tilde = delta mu / (lam n_z) drives both the
inter-cell exponent and the in-cell neighbor mixture in the gain-thresholded
scheme, mirroring the thinning used for the random-based scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import CGBC, RBC, VORONOI_C, ClusteringScheme, SystemParams, derive
from .specmath import (AggregateInterferenceLT, gil_pelaez_cdf,
                       hyp2f1_interference, intercell_exponent, log_gamma)


@dataclass(frozen=True)
class AnalyticReport:
    """Closed-form performance summary for one operating point."""

    p_ra: float
    p_c: float
    mean_cluster: float
    delay: float
    scheme: ClusteringScheme


def cluster_pmf(delta: float, n):
    """P{cluster has n members} for CH selection probability delta.

    Mixed negative-binomial form with the Voronoi-area constant c = 3.575 and
    mean (1 - delta)/delta; degenerate at n = 0 when delta = 1.
    """
    if not 0 < delta <= 1:
        raise ValueError(f"delta must be in (0, 1], got {delta}")
    n_arr = np.asarray(n)
    if np.any(n_arr < 0):
        raise ValueError("n must be nonnegative")
    if delta == 1.0:
        out = np.where(n_arr == 0, 1.0, 0.0)
        return float(out) if np.isscalar(n) else out
    c = VORONOI_C
    dt = (1.0 - delta) / delta
    nf = n_arr.astype(float)
    logp = (np.vectorize(log_gamma)(nf + c) - np.vectorize(log_gamma)(nf + 1.0)
            - log_gamma(c) + nf * math.log(dt / (dt + c))
            + c * math.log(c / (dt + c)))
    out = np.exp(logp)
    return float(out) if np.isscalar(n) else out


def cluster_mean(delta: float) -> float:
    """Mean cluster members per cluster head, (1 - delta)/delta."""
    if not 0 < delta <= 1:
        raise ValueError(f"delta must be in (0, 1], got {delta}")
    return (1.0 - delta) / delta


def _success_core(load: float, theta: float, noise_term: float, eta: float,
                  use_eta4: bool) -> float:
    """exp(-noise - load * inter_kernel(theta)) / (1 + load*theta/((1+theta)c))^c"""
    if theta == 0:
        return math.exp(-noise_term)
    if use_eta4:
        inter = math.sqrt(theta) * math.atan(math.sqrt(theta))
    else:
        inter = (2.0 * theta / (eta - 2.0)) * hyp2f1_interference(eta, theta)
    c = VORONOI_C
    num = math.exp(-noise_term - load * inter)
    den = (1.0 + load * theta / ((1.0 + theta) * c)) ** c
    return num / den


def p_ra_rbc(params: SystemParams, delta: float,
             force_general: bool = False) -> float:
    """Random-access success probability under random-based clustering.

    Dispatches to the elementary sqrt*arctan form at eta = 4 unless
    ``force_general`` keeps the hypergeometric path.
    """
    scheme = ClusteringScheme(RBC, delta)
    load = derive(params, scheme).alpha_tilde
    theta = params.theta_ra
    noise = params.sigma2_mw * theta / params.rho_l_mw
    use4 = params.eta == 4.0 and not force_general
    return _success_core(load, theta, noise, params.eta, use4)


def p_ra_cgbc(params: SystemParams, delta: float, gp_tol: float = 1e-6) -> float:
    """Random-access success probability under channel-gain-based clustering.

    Conditional-success factor times the tail weight of the aggregate
    interference at the guaranteed-success boundary x = tau rho_L / theta -
    sigma^2; below that boundary success is certain, so the CDF weight is
    added back. Values are clamped to 1 (the factorized conditional form can
    slightly exceed it at small delta).
    """
    scheme = ClusteringScheme(CGBC, delta)
    tau = scheme.tau
    load = derive(params, scheme).alpha_tilde
    theta = params.theta_ra
    rho = params.rho_l_mw
    noise = params.sigma2_mw * theta / rho
    c = VORONOI_C

    inter = intercell_exponent(params.eta, theta, tau) if theta > 0 else 0.0
    if theta > 0:
        intra_den = (1.0 + load * ((1.0 + theta) - math.exp(-tau * theta))
                     / ((1.0 + theta) * c)) ** c
    else:
        intra_den = 1.0
    cond = math.exp(-noise + tau - load * inter) / intra_den

    x_sure = tau * rho / theta - params.sigma2_mw if theta > 0 else math.inf
    if x_sure <= 0:
        # even zero interference does not guarantee success: exact product form
        return min(1.0, cond)
    if math.isinf(x_sure):
        return 1.0
    f_x = cdf_interference(params, delta, x_sure, tol=gp_tol)
    return min(1.0, cond * (1.0 - f_x) + f_x)


def cdf_interference(params: SystemParams, delta: float, x: float,
                     tol: float = 1e-6) -> float:
    """CDF of the aggregate same-code interference at the serving BS under
    channel-gain-based clustering (Gil-Pelaez inversion of the transform)."""
    lt = AggregateInterferenceLT(params, ClusteringScheme(CGBC, delta))
    return gil_pelaez_cdf(lt, x, tol=tol)


def p_c_d2d(params: SystemParams, force_general: bool = False) -> float:
    """D2D transmission success probability (independent of delta and mu)."""
    theta = params.theta_c
    noise = params.sigma2_mw * theta / params.rho_c_mw
    use4 = params.eta == 4.0 and not force_general
    if theta == 0:
        return math.exp(-noise)
    if use4:
        inter = math.sqrt(theta) * math.atan(math.sqrt(theta))
    else:
        inter = (2.0 * theta / (params.eta - 2.0)) * hyp2f1_interference(
            params.eta, theta)
    return math.exp(-noise - inter / params.k)


def p_ra(params: SystemParams, scheme: ClusteringScheme) -> float:
    """Scheme-dispatched random-access success probability."""
    if scheme.kind == RBC:
        return p_ra_rbc(params, scheme.delta)
    return p_ra_cgbc(params, scheme.delta)


def delay(params: SystemParams, scheme: ClusteringScheme) -> float:
    """Mean slots to a granted request: 1/P_RA + mean_cluster/P_C.

    A numerically zero success probability yields an infinite delay rather
    than an error so optimizer sweeps can traverse degenerate regions.
    """
    pra = p_ra(params, scheme)
    dt = cluster_mean(scheme.delta)
    if pra <= 0.0:
        return math.inf
    total = 1.0 / pra
    if dt > 0.0:
        pc = p_c_d2d(params)
        if pc <= 0.0:
            return math.inf
        total += dt / pc
    return total


def efficiency(params: SystemParams, scheme: ClusteringScheme) -> float:
    """Delay-reduction rate per unit of clustering overhead, in percent:

        100 * (D(delta) - D(1)) / (D(1) * mean_cluster)

    Negative when clustering at this delta beats the conventional case.
    """
    if scheme.delta >= 1.0:
        raise ValueError("efficiency is undefined at delta = 1 (no cluster members)")
    d_star = delay(params, scheme)
    d_conv = delay(params, ClusteringScheme(scheme.kind, 1.0))
    return 100.0 * (d_star - d_conv) / (d_conv * cluster_mean(scheme.delta))


def analytic_report(params: SystemParams, scheme: ClusteringScheme) -> AnalyticReport:
    return AnalyticReport(
        p_ra=p_ra(params, scheme),
        p_c=p_c_d2d(params),
        mean_cluster=cluster_mean(scheme.delta),
        delay=delay(params, scheme),
        scheme=scheme,
    )
