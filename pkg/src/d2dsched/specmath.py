"""Numerical kernels behind the closed forms: the Gauss hypergeometric term,
improper-integral quadrature, the aggregate-interference Laplace transform,
and Gil-Pelaez CDF inversion.

The Laplace transform exposes a vectorized evaluation along s = -j t (the ray
the inversion integral walks), backed by an incrementally grown cumulative
table of the inter-cell exponent integral with oscillation-aware panels and
an integration-by-parts analytic tail. The generic complex-s path goes
through adaptive quadrature; both paths agree and are cross-tested.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from .model import CGBC, VORONOI_C, ClusteringScheme, SystemParams, derive


class QuadratureError(RuntimeError):
    """Integral did not converge; carries the partial estimate."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if x <= 0:
        raise ValueError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def hyp2f1_interference(eta: float, theta: float, series_tol: float = 1e-16) -> float:
    """2F1(1, 1-2/eta, 2-2/eta, -theta).

    Computed through the Pfaff transformation, which maps the negative
    argument to x = theta/(1+theta) in [0, 1) where the series has positive
    terms and converges geometrically:
    2F1(1, b; b+1; -theta) = (1+theta)^(-b) * 2F1(b, b; b+1; x).
    """
    if eta <= 2:
        raise ValueError(f"eta must be > 2, got {eta}")
    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    if theta == 0:
        return 1.0
    b = 1.0 - 2.0 / eta
    x = theta / (1.0 + theta)
    term = 1.0
    total = 1.0
    for n in range(1, 200_000):
        term *= (b + n - 1.0) ** 2 * x / ((b + n) * n)
        total += term
        if term < series_tol * total:
            break
    else:
        raise QuadratureError("hypergeometric series did not converge", partial=total)
    return (1.0 + theta) ** (-b) * total


def improper_quad(f, a: float, tol: float = 1e-10) -> float:
    """Integrate f over [a, inf) to absolute tolerance tol."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(f, a, np.inf, epsabs=0.5 * tol, epsrel=1e-12,
                             limit=500, full_output=1)
    val, err = out[0], out[1]
    if len(out) > 3 or not math.isfinite(val) or err > tol:
        raise QuadratureError(
            f"improper integral did not reach tol={tol} (err={err})", partial=val)
    return val


def intercell_exponent(eta: float, theta: float, tau: float,
                       tol: float = 1e-10) -> float:
    """Inter-cell exponent kernel of the gain-thresholded success probability:

        2 theta^(2/eta) * int_{theta^(-1/eta)}^inf
            (1 - exp(-tau y^-eta) / (1 + y^-eta)) y dy

    At tau = 0 this collapses to (2 theta/(eta-2)) * 2F1(1,1-2/eta,2-2/eta,-theta).
    """
    if eta <= 2:
        raise ValueError(f"eta must be > 2, got {eta}")
    if theta <= 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    lo = theta ** (-1.0 / eta)

    def f(y):
        q = y ** (-eta)
        # stable 1 - e^(-tau q)/(1+q) = (q - expm1(-tau q)) / (1+q)
        return (q - math.expm1(-tau * q)) / (1.0 + q) * y

    scale = 2.0 * theta ** (2.0 / eta)
    return scale * improper_quad(f, lo, tol=tol / max(scale, 1.0))


def _cexpm1(z):
    """exp(z) - 1 for complex arrays, accurate near 0."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-4
    out = np.exp(z) - 1.0
    zs = np.where(small, z, 0.0)
    series = zs * (1.0 + zs * (0.5 + zs * (1.0 / 6.0 + zs / 24.0)))
    return np.where(small, series, out)


class _ExponentTable:
    """Cumulative g(v) = int_0^v (1 - e^{j tau w}/(1 - j w)) w^(-b-1) dw.

    Built incrementally with panel widths that track both the rational factor
    (relative growth cap) and the e^{j tau w} oscillation (phase cap). Beyond
    w_cut the oscillatory part is integrated by parts analytically, so the
    table never grows past w_cut for tau > 0.
    """

    _GL12 = leggauss(12)
    _GL48 = leggauss(48)

    def __init__(self, tau: float, eta: float):
        self.tau = tau
        self.b = 2.0 / eta
        self.m = 1.0 / (1.0 - self.b)  # u = x^m regularizes the 0 endpoint
        self.e0 = min(0.5, math.pi / (4.0 * tau)) if tau > 0 else 0.5
        self.w_cut = max(200.0, math.pi / tau) if tau > 0 else math.inf
        self.edges = [self.e0]
        self.cum = [complex(self._head(np.array([self.e0]))[0])]

    def _integrand(self, w):
        w = np.asarray(w, dtype=float)
        return (-1j * w - _cexpm1(1j * self.tau * w)) / (1.0 - 1j * w) \
            * w ** (-self.b - 1.0)

    def _head(self, v):
        """g(v) for v <= e0: substituting w = v x^m absorbs the w^(-b)
        endpoint singularity, g(v) = m v^(-b) int_0^1 h(v x^m) x^(-m) dx."""
        x, wts = self._GL48
        xx = 0.5 * (x + 1.0)
        ww = 0.5 * wts
        nodes = np.multiply.outer(v, xx ** self.m)          # (n_v, 48)
        hvals = (-1j * nodes - _cexpm1(1j * self.tau * nodes)) / (1.0 - 1j * nodes)
        return self.m * v ** (-self.b) * ((hvals * (xx ** (-self.m))[None, :]) @ ww)

    def _panel(self, a, b):
        x, wts = self._GL12
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        return half * np.dot(self._integrand(mid + half * x), wts)

    def _extend(self, v_max):
        v_max = min(v_max, self.w_cut)
        while self.edges[-1] < v_max:
            a = self.edges[-1]
            step = 0.3 * a
            if self.tau > 0:
                step = min(step, math.pi / (4.0 * self.tau))
            b = min(a + step, self.w_cut)
            self.cum.append(self.cum[-1] + self._panel(a, b))
            self.edges.append(b)

    def _tail(self, v):
        """Analytic continuation of g past w_cut (tau > 0): the 1-part is
        exact, the oscillatory part integrated by parts to second order."""
        wc = self.w_cut
        b = self.b
        tau = self.tau
        part_one = (wc ** (-b) - v ** (-b)) / b

        def psi(w):
            return w ** (-b - 1.0) / (1.0 - 1j * w)

        def dpsi(w):
            return (-(b + 1.0) * w ** (-b - 2.0) / (1.0 - 1j * w)
                    + 1j * w ** (-b - 1.0) / (1.0 - 1j * w) ** 2)

        def int_osc(w):
            e = np.exp(1j * tau * w)
            return e * psi(w) / (1j * tau) - e * dpsi(w) / (1j * tau) ** 2

        return part_one - (int_osc(v) - int_osc(wc))

    def eval(self, v):
        """g at the points v (nonnegative array)."""
        v = np.asarray(v, dtype=float)
        out = np.zeros(v.shape, dtype=complex)
        head = (v > 0) & (v <= self.e0)
        if np.any(head):
            out[head] = self._head(v[head])
        body = v > self.e0
        if np.any(body):
            vb = v[body]
            self._extend(vb.max())
            capped = np.minimum(vb, self.w_cut)
            edges = np.asarray(self.edges)
            cum = np.asarray(self.cum)
            idx = np.clip(np.searchsorted(edges, capped, side="right") - 1,
                          0, len(edges) - 1)
            a = edges[idx]
            half = 0.5 * (capped - a)
            mid = 0.5 * (capped + a)
            x, wts = self._GL12
            nodes = mid[:, None] + half[:, None] * x[None, :]
            partial = (self._integrand(nodes) @ wts) * half
            res = cum[idx] + partial
            over = vb > self.w_cut
            if np.any(over):
                res[over] += self._tail(vb[over])
            out[body] = res
        return out


class AggregateInterferenceLT:
    """Laplace transform E[exp(-s I)] of the aggregate same-code interference
    received at the serving base station.

    Product of the inter-cell factor (power-controlled field thinned per code,
    interferer gains conditioned above the election threshold for
    channel-gain-based clustering) and the neighbor-count mixture of the
    in-cell factor exp(-n tau s rho)/(1 + s rho)^n. The neighbor PMF is
    truncated at cumulative mass 1 - pmf_mass_tol and renormalized.
    """

    def __init__(self, params: SystemParams, scheme: ClusteringScheme,
                 pmf_mass_tol: float = 1e-10, quad_tol: float = 1e-10):
        self.params = params
        self.scheme = scheme
        self.tau = scheme.tau if scheme.kind == CGBC else 0.0
        self.eta = params.eta
        self.rho = params.rho_l_mw
        self.alpha_tilde = derive(params, scheme).alpha_tilde
        self.quad_tol = quad_tol
        self.pmf = self._neighbor_pmf(self.alpha_tilde, pmf_mass_tol)
        self._table = _ExponentTable(self.tau, self.eta)

    @staticmethod
    def _neighbor_pmf(alpha_tilde: float, mass_tol: float) -> np.ndarray:
        c = VORONOI_C
        p = alpha_tilde / (alpha_tilde + c)
        probs = [(1.0 - p) ** c]
        total = probs[0]
        n = 0
        while total < 1.0 - mass_tol:
            probs.append(probs[-1] * p * (n + c) / (n + 1.0))
            total += probs[-1]
            n += 1
            if n > 100_000:
                raise QuadratureError("neighbor PMF truncation did not converge")
        pmf = np.array(probs)
        return pmf / pmf.sum()

    def _intra(self, z):
        """sum_n pmf[n] z^n for scalar or array z."""
        z = np.asarray(z, dtype=complex)
        acc = np.full(z.shape, self.pmf[0], dtype=complex)
        zp = np.ones_like(z)
        for w in self.pmf[1:]:
            zp = zp * z
            acc += w * zp
        return acc

    def along_neg_imag(self, t):
        """Vectorized L(-j t) for real t >= 0 (inversion-integral path)."""
        t = np.asarray(t, dtype=float)
        v = t * self.rho
        g = self._table.eval(v)
        kappa = (2.0 * self.alpha_tilde / self.eta) * v ** (2.0 / self.eta) * g
        kappa[v == 0] = 0.0
        z = np.exp(1j * self.tau * v) / (1.0 - 1j * v)
        return np.exp(-kappa) * self._intra(z)

    def __call__(self, s) -> complex:
        s = complex(s)
        if s == 0:
            return 1.0 + 0.0j
        if s.real == 0 and s.imag < 0:
            return complex(self.along_neg_imag(np.array([-s.imag]))[0])
        tau, rho, m = self.tau, self.rho, self._table.m

        def core(x):
            u = x ** m
            z = s * rho * u
            h = (z - _cexpm1(-tau * z)) / (1.0 + z)
            return m * h * x ** (-m)

        re = integrate.quad(lambda x: core(x).real, 0.0, 1.0,
                            epsabs=self.quad_tol, limit=400)[0]
        im = integrate.quad(lambda x: core(x).imag, 0.0, 1.0,
                            epsabs=self.quad_tol, limit=400)[0]
        kappa = (2.0 * self.alpha_tilde / self.eta) * (re + 1j * im)
        z = np.exp(-tau * s * rho) / (1.0 + s * rho)
        return complex(np.exp(-kappa) * self._intra(z))


def lt_aggregate_interference(s, params: SystemParams,
                              scheme: ClusteringScheme) -> complex:
    """E[exp(-s I)] of the aggregate same-code interference; see
    :class:`AggregateInterferenceLT` for the cached object form."""
    return AggregateInterferenceLT(params, scheme)(s)


def _euler_accelerated(partials):
    """Repeatedly average a window of trailing partial sums (tames the
    alternating tails the oscillatory inversion integral produces)."""
    s = np.asarray(partials, dtype=float)
    while s.size > 1:
        s = 0.5 * (s[1:] + s[:-1])
    return float(s[0])


def gil_pelaez_cdf(lt, x: float, tol: float = 1e-6, max_panels: int = 60_000):
    """CDF of a nonnegative random variable from its Laplace transform:

        F(x) = 1/2 - (1/pi) int_0^inf Im{ e^{-j t x} L(-j t) } / t dt

    ``lt`` is a callable of complex s; an ``along_neg_imag(t)`` method, when
    present, is used for vectorized evaluation. On non-convergence a warning
    reports the partial estimate, which is returned clamped to [0, 1].
    """
    if x <= 0:
        return 0.0

    if hasattr(lt, "along_neg_imag"):
        lt_ray = lt.along_neg_imag
    else:
        def lt_ray(t):
            return np.array([lt(-1j * tt) for tt in np.asarray(t)], dtype=complex)

    def mag(t):
        return abs(lt_ray(np.array([t]))[0])

    # probe the transform's structure scale: first t with |L(-jt)| < 0.9
    t_probe = 1e-12 / x
    t_char = None
    for _ in range(110):
        if mag(t_probe) < 0.9:
            t_char = t_probe
            break
        t_probe *= 2.0

    osc = math.pi / x
    t_fine = 12.0 * t_char if t_char is not None else 0.0
    # tail rotation rate of the transform (a support shift makes L(-jt)
    # rotate at that shift forever; the effective tail frequency is |x - rot|),
    # measured just past the structure scale where the tail panels live
    t_ref = 2.0 * t_fine if t_char is not None else 4.0 * osc
    d = min(osc, t_ref) / 64.0
    rot = 0.0
    a0 = np.angle(lt_ray(np.array([t_ref]))[0])
    for _ in range(80):
        a1 = np.angle(lt_ray(np.array([t_ref + d]))[0])
        diff = (a1 - a0 + math.pi) % (2.0 * math.pi) - math.pi
        if abs(diff) < 0.5 * math.pi:
            rot = diff / d
            break
        d *= 0.5

    w_fine = min(t_char / 6.0 if t_char is not None else math.inf,
                 math.pi / (x + abs(rot)))
    w_tail = math.pi / max(abs(x - rot), 1e-6 * x)
    # when the oscillation already dominates the panel width (fine and tail
    # widths agree), the transform is a slowly varying envelope per panel and
    # the accelerated alternating tail is trustworthy well before t_fine
    if w_fine > 0.5 * w_tail:
        t_gate = min(t_fine, 40.0 * osc)
    else:
        t_gate = t_fine

    nodes, wts = leggauss(16)
    window = 17
    eps = 1e-8 * min(w_fine, osc)

    total = 0.0
    partials = []
    acc = acc_prev = None
    stable = 0
    k = 0
    t_edge = eps
    chunk = 64
    while k < max_panels:
        n_here = min(chunk, max_panels - k)
        # geometric cap keeps panels commensurate with the 1/t envelope
        w_phase = w_fine if t_edge < t_fine else w_tail
        w_here = min(w_phase, max(0.5 * t_edge, osc))
        b_edges = t_edge + w_here * np.arange(1, n_here + 1)
        a_edges = np.concatenate(([t_edge], b_edges[:-1]))
        half = 0.5 * (b_edges - a_edges)
        mid = 0.5 * (a_edges + b_edges)
        tt = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
        vals = lt_ray(tt) * np.exp(-1j * tt * x)
        g = vals.imag / tt
        panel_vals = (g.reshape(n_here, 16) @ wts) * half
        for i, pv in enumerate(panel_vals):
            total += pv
            partials.append(total)
            k += 1
            if len(partials) >= window and b_edges[i] >= t_gate and k >= 24:
                acc = _euler_accelerated(partials[-window:])
                if acc_prev is not None and abs(acc - acc_prev) < 0.125 * tol:
                    stable += 1
                    if stable >= 3:
                        return min(1.0, max(0.0, 0.5 - acc / math.pi))
                else:
                    stable = 0
                acc_prev = acc
        t_edge = b_edges[-1]
    if acc is None:
        acc = (_euler_accelerated(partials[-window:])
               if len(partials) >= window else total)
    est = min(1.0, max(0.0, 0.5 - acc / math.pi))
    warnings.warn(
        f"Gil-Pelaez inversion did not converge after {max_panels} panels; "
        f"returning partial estimate {est}", RuntimeWarning)
    return est
