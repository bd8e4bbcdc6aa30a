"""Golden-section minimization of the access delay over the CH selection
probability, plus the scheme-selection step and the iteration bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .analytics import delay
from .model import CGBC, RBC, ClusteringScheme, SystemParams

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0
_INV = 1.0 / GOLDEN          # bracket shrink factor per iteration
_INV2 = 1.0 / GOLDEN ** 2


@dataclass(frozen=True)
class OptimizationResult:
    scheme: ClusteringScheme
    delta_star: float
    tau_star: float | None     # linear election-gain threshold (CGBC only)
    d_star: float              # minimal delay [slots]
    d_conventional: float      # delay at delta = 1
    reduction_pct: float       # 100 * (D(1) - D*) / D(1)
    iterations: int

    @property
    def tau_star_db(self) -> float | None:
        if self.tau_star is None:
            return None
        return 10.0 * math.log10(self.tau_star)


def iteration_bound(interval: float, eps: float) -> int:
    """Golden-section iterations needed to localize a minimizer of a unimodal
    function on an interval of the given length to within eps."""
    if interval <= 0 or eps <= 0:
        raise ValueError("interval and eps must be positive")
    ratio = interval / eps
    if ratio <= 1.0:
        return 0
    return math.ceil(math.log(ratio) / math.log(GOLDEN) - 1e-12)


def golden_section_minimize(f, lo: float, hi: float, eps: float = 1e-6):
    """Minimize f on [lo, hi]; returns (x_star, f_star, iterations).

    Runs exactly ceil(log_K((hi-lo)/eps)) bracket reductions (K the golden
    ratio), each shrinking the bracket by 1/K, so the final bracket length is
    at most eps. One new evaluation per iteration after the first two.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    n_iter = iteration_bound(hi - lo, eps)

    def probe(x):
        fx = f(x)
        if math.isnan(fx):
            raise ValueError(f"objective returned NaN at x={x}")
        return fx

    a, b = lo, hi
    best_x, best_f = None, math.inf
    span = b - a
    c = a + _INV2 * span
    d = a + _INV * span
    fc, fd = probe(c), probe(d)
    for x, fx in ((c, fc), (d, fd)):
        if fx < best_f:
            best_x, best_f = x, fx
    # n+1 evaluations in total: the last reduction reuses the surviving point
    for it in range(n_iter):
        last = it == n_iter - 1
        if fc < fd:
            b, d, fd = d, c, fc
            span = b - a
            c = a + _INV2 * span
            if not last:
                fc = probe(c)
                if fc < best_f:
                    best_x, best_f = c, fc
        else:
            a, c, fc = c, d, fd
            span = b - a
            d = a + _INV * span
            if not last:
                fd = probe(d)
                if fd < best_f:
                    best_x, best_f = d, fd
    return best_x, best_f, n_iter


def optimize_delta(params: SystemParams, scheme_kind: str, eps: float = 1e-6,
                   delta_min: float = 1e-3, grid_points: int = 100) -> OptimizationResult:
    """Minimize the access delay over delta in [delta_min, 1].

    The delay is not proven unimodal, so the golden-section result is checked
    against a uniform verification grid and the better point wins.
    """
    def objective(d):
        return delay(params, ClusteringScheme(scheme_kind, d))

    x_star, f_star, iters = golden_section_minimize(objective, delta_min, 1.0, eps)
    for i in range(grid_points):
        d = delta_min + (1.0 - delta_min) * (i + 1) / grid_points
        fd = objective(d)
        if fd < f_star:
            x_star, f_star = d, fd
    d_conv = objective(1.0)
    if d_conv <= f_star:
        # delta = 1 is feasible; never report a worse-than-conventional optimum
        x_star, f_star = 1.0, d_conv
    tau_star = -math.log(x_star) if scheme_kind == CGBC else None
    return OptimizationResult(
        scheme=ClusteringScheme(scheme_kind, x_star),
        delta_star=x_star,
        tau_star=tau_star,
        d_star=f_star,
        d_conventional=d_conv,
        reduction_pct=100.0 * (d_conv - f_star) / d_conv,
        iterations=max(iters, 1),
    )


def select_scheme(params: SystemParams, eps: float = 1e-6) -> OptimizationResult:
    """Optimize both clustering schemes and return the lower-delay one."""
    best = None
    for kind in (RBC, CGBC):
        res = optimize_delta(params, kind, eps=eps)
        if best is None or res.d_star < best.d_star:
            best = res
    return best
