"""Monte-Carlo network simulator: PPP topology sampling, CH election,
nearest-neighbor association, path-loss-inversion power control, contention
snapshots, and a campaign runner with batch-mean confidence intervals.

Realizations are independent work units keyed by (seed, index, attempt), so
serial and parallel campaigns produce bit-identical statistics per kernel
backend.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from .kernels import grouped_interference, pack_groups
from .model import CGBC, ClusteringScheme, SystemParams, db_to_linear

PHYSICAL = "physical"
ANALYSIS_MATCHED = "analysis-matched"
GAIN_MODES = (PHYSICAL, ANALYSIS_MATCHED)


class EmptyRealizationError(RuntimeError):
    """Sampled topology has no BSs or no CHs to associate with (resample)."""


@dataclass(frozen=True)
class Region:
    """Square deployment region centered at the origin. Statistics are
    collected for nodes inside the observation disk; everything in the
    region contributes interference (edge-effect control)."""

    area: float = 100.0               # km^2
    observation_radius: float = 1.0   # km

    def __post_init__(self):
        if self.observation_radius >= self.side / 2:
            raise ValueError("observation disk must fit strictly inside the region")

    @property
    def side(self) -> float:
        return math.sqrt(self.area)


DEFAULT_REGION = Region()


@dataclass(frozen=True)
class NetworkRealization:
    """One sampled topology with election, association and power control."""

    scheme: ClusteringScheme
    region: Region
    bs_positions: np.ndarray            # (n_bs, 2) km
    device_positions: np.ndarray        # (n_dev, 2) km
    ch_flags: np.ndarray                # (n_dev,) bool
    election_gains: np.ndarray | None   # (n_dev,) CGBC election gains
    serving_bs: np.ndarray | None = None    # per-CH nearest BS index
    serving_ch: np.ndarray | None = None    # per-CM nearest CH index
    ra_codes: np.ndarray | None = None      # per-CH RA code in [0, n_z)
    d2d_channels: np.ndarray | None = None  # per-CH D2D channel in [0, k)
    tx_power_ra: np.ndarray | None = None   # per-CH rho_L R_L^eta [mW]
    tx_power_d2d: np.ndarray | None = None  # per-CM rho_C R_C^eta [mW]

    @property
    def ch_positions(self) -> np.ndarray:
        return self.device_positions[self.ch_flags]

    @property
    def cm_positions(self) -> np.ndarray:
        return self.device_positions[~self.ch_flags]


def sample_ppp(intensity: float, region: Region, rng) -> np.ndarray:
    """Homogeneous PPP over the region: Poisson count, uniform positions."""
    if intensity < 0:
        raise ValueError(f"intensity must be >= 0, got {intensity}")
    n = rng.poisson(intensity * region.area)
    half = region.side / 2
    return rng.uniform(-half, half, size=(n, 2))


def elect_chs(devices: np.ndarray, scheme: ClusteringScheme, rng):
    """Cluster-head election; expected CH fraction is delta for both rules.

    Random-based: independent Bernoulli(delta) coins. Channel-gain-based:
    unit-mean exponential gain per device, CH iff it exceeds tau = -ln(delta).
    """
    n = devices.shape[0]
    if scheme.kind == CGBC:
        gains = rng.exponential(size=n)
        return gains > scheme.tau, gains
    return rng.random(n) < scheme.delta, None


def nearest(points: np.ndarray, sites: np.ndarray):
    """Index of the nearest site per point, with exact two-way distance ties
    resolved to the lowest site index. Returns (indices, distances)."""
    if sites.shape[0] == 0:
        raise EmptyRealizationError("no sites to associate with")
    if points.shape[0] == 0:
        return (np.empty(0, dtype=np.intp), np.empty(0))
    tree = cKDTree(sites)
    if sites.shape[0] == 1:
        dist = np.linalg.norm(points - sites[0], axis=1)
        return np.zeros(points.shape[0], dtype=np.intp), dist
    dist, idx = tree.query(points, k=2)
    tie = dist[:, 0] == dist[:, 1]
    out = idx[:, 0].astype(np.intp)
    out[tie] = idx[tie].min(axis=1)
    return out, dist[:, 0]


def associate(realization: NetworkRealization) -> NetworkRealization:
    """Fill nearest-BS association for CHs and nearest-CH association for CMs."""
    ch_xy = realization.ch_positions
    if realization.bs_positions.shape[0] == 0:
        raise EmptyRealizationError("no base stations in the region")
    if ch_xy.shape[0] == 0:
        raise EmptyRealizationError("no cluster heads in the region")
    serving_bs, _ = nearest(ch_xy, realization.bs_positions)
    serving_ch, _ = nearest(realization.cm_positions, ch_xy)
    return replace(realization, serving_bs=serving_bs, serving_ch=serving_ch)


def build_realization(params: SystemParams, scheme: ClusteringScheme,
                      region: Region, rng) -> NetworkRealization:
    """Sample, elect, associate, and apply power control and code/channel
    assignment. Raises EmptyRealizationError on degenerate topologies."""
    bs = sample_ppp(params.lam, region, rng)
    dev = sample_ppp(params.mu, region, rng)
    flags, gains = elect_chs(dev, scheme, rng)
    real = associate(NetworkRealization(scheme, region, bs, dev, flags, gains))
    ch_xy = real.ch_positions
    n_ch = ch_xy.shape[0]
    codes = rng.integers(0, params.n_z, size=n_ch).astype(np.intp)
    chans = rng.integers(0, params.k, size=n_ch).astype(np.intp)
    d_bs = np.linalg.norm(ch_xy - real.bs_positions[real.serving_bs], axis=1)
    d_ch = np.linalg.norm(real.cm_positions - ch_xy[real.serving_ch], axis=1)
    return replace(
        real,
        ra_codes=codes,
        d2d_channels=chans,
        tx_power_ra=params.rho_l_mw * d_bs ** params.eta,
        tx_power_d2d=params.rho_c_mw * d_ch ** params.eta,
    )


def _as_f8(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _as_ip(a):
    return np.ascontiguousarray(a, dtype=np.intp)


def _ra_sinr(real: NetworkRealization, params: SystemParams, gain_mode: str,
             rng):
    """Per-observed-CH RA SINR and interference at the serving BS.

    One gain per CH toward its own BS doubles as its signal gain and its
    in-cell interference gain (same link, same slot). Gains toward other BSs
    are fresh unit-mean exponentials, shifted by tau in analysis-matched mode
    for channel-gain-based clustering.
    """
    if gain_mode not in GAIN_MODES:
        raise ValueError(f"unknown gain mode {gain_mode!r}")
    ch_xy = real.ch_positions
    n_ch = ch_xy.shape[0]
    cgbc = real.scheme.kind == CGBC
    tau = real.scheme.tau if cgbc else 0.0
    g_own = rng.exponential(size=n_ch)
    if cgbc:
        g_own += tau
    g_out = rng.exponential(size=n_ch)
    if cgbc and gain_mode == ANALYSIS_MATCHED:
        g_out += tau

    order, starts, inv = pack_groups(real.ra_codes, params.n_z)
    sxy = ch_xy[order]
    obs_idx = np.nonzero(
        np.linalg.norm(ch_xy, axis=1) <= real.region.observation_radius)[0]
    v_bs = real.serving_bs[obs_idx]
    v_pos = real.bs_positions[v_bs]
    interference = grouped_interference(
        _as_f8(v_pos[:, 0]), _as_f8(v_pos[:, 1]),
        _as_ip(real.ra_codes[obs_idx]), _as_ip(v_bs), _as_ip(inv[obs_idx]),
        _as_f8(sxy[:, 0]), _as_f8(sxy[:, 1]),
        _as_f8((real.tx_power_ra * g_own)[order]),
        _as_f8((real.tx_power_ra * g_out)[order]),
        _as_ip(real.serving_bs[order]), starts, params.eta)
    sinr = params.rho_l_mw * g_own[obs_idx] / (params.sigma2_mw + interference)
    return sinr, interference, obs_idx


def _d2d_sinr(real: NetworkRealization, params: SystemParams, rng):
    """Per-observed-nonempty-cluster D2D SINR at the cluster head.

    One uniformly chosen member per nonempty cluster transmits; co-channel
    active members of other clusters interfere.
    """
    ch_xy = real.ch_positions
    cm_xy = real.cm_positions
    n_cm = cm_xy.shape[0]
    if n_cm == 0:
        return np.empty(0), np.empty(0), np.empty(0, dtype=np.intp)
    perm = rng.permutation(n_cm)
    grp = real.serving_ch[perm]
    clusters, first = np.unique(grp, return_index=True)
    active = perm[first]                      # one CM per nonempty cluster
    g_sig = rng.exponential(size=clusters.shape[0])
    g_int = rng.exponential(size=clusters.shape[0])

    chan = real.d2d_channels[clusters]
    order, starts, inv = pack_groups(chan, params.k)
    sxy = cm_xy[active][order]
    amp = (real.tx_power_d2d[active] * g_int)[order]
    s_cell = clusters[order]

    vsel = np.nonzero(np.linalg.norm(ch_xy[clusters], axis=1)
                      <= real.region.observation_radius)[0]
    v_pos = ch_xy[clusters[vsel]]
    interference = grouped_interference(
        _as_f8(v_pos[:, 0]), _as_f8(v_pos[:, 1]),
        _as_ip(chan[vsel]), _as_ip(clusters[vsel]), _as_ip(inv[vsel]),
        _as_f8(sxy[:, 0]), _as_f8(sxy[:, 1]),
        _as_f8(amp), _as_f8(amp), _as_ip(s_cell), starts, params.eta)
    sinr = params.rho_c_mw * g_sig[vsel] / (params.sigma2_mw + interference)
    return sinr, interference, clusters[vsel]


def _bs_interference(real: NetworkRealization, params: SystemParams,
                     gain_mode: str, rng):
    """Aggregate same-code interference at each observation-disk BS, one
    uniformly drawn code per BS (victim-BS view of the interference CDF)."""
    bs_xy = real.bs_positions
    obs = np.nonzero(np.linalg.norm(bs_xy, axis=1)
                     <= real.region.observation_radius)[0]
    if obs.shape[0] == 0:
        return np.empty(0)
    codes = rng.integers(0, params.n_z, size=obs.shape[0]).astype(np.intp)
    ch_xy = real.ch_positions
    n_ch = ch_xy.shape[0]
    cgbc = real.scheme.kind == CGBC
    tau = real.scheme.tau if cgbc else 0.0
    g_own = rng.exponential(size=n_ch)
    if cgbc:
        g_own += tau
    g_out = rng.exponential(size=n_ch)
    if cgbc and gain_mode == ANALYSIS_MATCHED:
        g_out += tau
    order, starts, _ = pack_groups(real.ra_codes, params.n_z)
    sxy = ch_xy[order]
    return grouped_interference(
        _as_f8(bs_xy[obs, 0]), _as_f8(bs_xy[obs, 1]),
        codes, _as_ip(obs), np.full(obs.shape[0], -1, dtype=np.intp),
        _as_f8(sxy[:, 0]), _as_f8(sxy[:, 1]),
        _as_f8((real.tx_power_ra * g_own)[order]),
        _as_f8((real.tx_power_ra * g_out)[order]),
        _as_ip(real.serving_bs[order]), starts, params.eta)


def ra_snapshot(real: NetworkRealization, params: SystemParams,
                gain_mode: str, rng) -> np.ndarray:
    """Success booleans of one RA contention slot for observed CHs."""
    sinr, _, _ = _ra_sinr(real, params, gain_mode, rng)
    return sinr > params.theta_ra


def d2d_snapshot(real: NetworkRealization, params: SystemParams,
                 rng) -> np.ndarray:
    """Success booleans of one D2D slot for observed nonempty clusters."""
    sinr, _, _ = _d2d_sinr(real, params, rng)
    return sinr > params.theta_c


def observed_cluster_sizes(real: NetworkRealization) -> np.ndarray:
    """Member count of every cluster whose head is in the observation disk."""
    ch_xy = real.ch_positions
    sizes = np.bincount(real.serving_ch, minlength=ch_xy.shape[0]) \
        if real.serving_ch is not None and real.serving_ch.size else \
        np.zeros(ch_xy.shape[0], dtype=int)
    obs = np.linalg.norm(ch_xy, axis=1) <= real.region.observation_radius
    return sizes[obs]


def empirical_cluster_pmf(realizations) -> np.ndarray:
    """Pooled relative frequencies of observed cluster sizes."""
    counts = np.zeros(1)
    for real in realizations:
        sizes = observed_cluster_sizes(real)
        if sizes.size == 0:
            continue
        h = np.bincount(sizes).astype(float)
        if h.size > counts.size:
            h[:counts.size] += counts
            counts = h
        else:
            counts[:h.size] += h
    total = counts.sum()
    if total == 0:
        raise ValueError("no observed clusters in any realization")
    return counts / total


# ---------------------------------------------------------------------------
# campaign runner


@dataclass(frozen=True)
class EmpiricalEstimate:
    mean: float
    ci_halfwidth: float   # 95% normal approximation
    n_samples: int


@dataclass(frozen=True)
class CampaignStats:
    """Per-realization tallies; rows are realization-indexed."""

    ra_obs: np.ndarray        # (n,)
    ra_succ: np.ndarray       # (n, n_theta_ra)
    d2d_obs: np.ndarray       # (n,)
    d2d_succ: np.ndarray      # (n, n_theta_c)
    ch_obs: np.ndarray        # (n,) observed CHs (cluster-size denominators)
    sum_n: np.ndarray         # (n,) summed observed cluster sizes
    hist: np.ndarray          # pooled cluster-size counts
    n_ch: np.ndarray          # (n,) total CHs in region
    n_dev: np.ndarray         # (n,) total devices in region
    interference: np.ndarray | None
    resamples: int

    def extend(self, other: "CampaignStats") -> "CampaignStats":
        h1, h2 = self.hist, other.hist
        if h1.size < h2.size:
            h1, h2 = h2, h1
        hist = h1.copy()
        hist[:h2.size] += h2
        intf = None
        if self.interference is not None and other.interference is not None:
            intf = np.concatenate([self.interference, other.interference])
        return CampaignStats(
            ra_obs=np.concatenate([self.ra_obs, other.ra_obs]),
            ra_succ=np.concatenate([self.ra_succ, other.ra_succ]),
            d2d_obs=np.concatenate([self.d2d_obs, other.d2d_obs]),
            d2d_succ=np.concatenate([self.d2d_succ, other.d2d_succ]),
            ch_obs=np.concatenate([self.ch_obs, other.ch_obs]),
            sum_n=np.concatenate([self.sum_n, other.sum_n]),
            hist=hist, n_ch=np.concatenate([self.n_ch, other.n_ch]),
            n_dev=np.concatenate([self.n_dev, other.n_dev]),
            interference=intf,
            resamples=self.resamples + other.resamples)


def ratio_estimate(succ: np.ndarray, obs: np.ndarray) -> EmpiricalEstimate:
    """Pooled ratio estimator with a linearized batch-mean standard error
    (robust to within-realization correlation)."""
    total_obs = int(obs.sum())
    if total_obs == 0:
        return EmpiricalEstimate(math.nan, math.nan, 0)
    p = float(succ.sum()) / total_obs
    n_b = obs.shape[0]
    if n_b > 1:
        z = succ - p * obs
        se = math.sqrt(float(np.sum(z * z)) * n_b / (n_b - 1)) / total_obs
    else:
        se = math.nan
    return EmpiricalEstimate(p, 1.96 * se, total_obs)


def _realize_one(params, scheme, region, seed, index, gain_mode,
                 theta_ra, theta_c, collect):
    """One realization's tallies; resamples degenerate topologies."""
    for attempt in range(1000):
        rng = np.random.default_rng([seed, index, attempt])
        try:
            real = build_realization(params, scheme, region, rng)
        except EmptyRealizationError:
            continue
        break
    else:
        raise EmptyRealizationError("could not sample a non-degenerate topology")

    ra_sinr, _, _ = _ra_sinr(real, params, gain_mode, rng)
    d2d_sinr, _, _ = _d2d_sinr(real, params, rng)
    sizes = observed_cluster_sizes(real)
    intf = _bs_interference(real, params, gain_mode, rng) if collect else None
    return dict(
        index=index,
        ra_obs=ra_sinr.shape[0],
        ra_succ=(ra_sinr[:, None] > theta_ra[None, :]).sum(axis=0),
        d2d_obs=d2d_sinr.shape[0],
        d2d_succ=(d2d_sinr[:, None] > theta_c[None, :]).sum(axis=0),
        ch_obs=sizes.shape[0],
        sum_n=int(sizes.sum()),
        hist=np.bincount(sizes) if sizes.size else np.zeros(1, dtype=int),
        n_ch=int(real.ch_flags.sum()),
        n_dev=int(real.ch_flags.shape[0]),
        interference=intf,
        resamples=attempt,
    )


def _worker(args):
    return _realize_one(*args)


def run_campaign(params: SystemParams, scheme: ClusteringScheme,
                 n_realizations: int, seed: int, *,
                 gain_mode: str = ANALYSIS_MATCHED,
                 region: Region = DEFAULT_REGION,
                 theta_ra_grid_db=None, theta_c_grid_db=None,
                 collect_interference: bool = False,
                 workers: int = 1, start_index: int = 0) -> CampaignStats:
    """Run realizations [start_index, start_index + n) and pool tallies.

    Success counts are tallied against threshold grids (defaulting to the
    single configured thresholds), so one campaign serves a whole sweep.
    """
    theta_ra = np.array([params.theta_ra] if theta_ra_grid_db is None
                        else [db_to_linear(t) for t in theta_ra_grid_db])
    theta_c = np.array([params.theta_c] if theta_c_grid_db is None
                       else [db_to_linear(t) for t in theta_c_grid_db])
    tasks = [(params, scheme, region, seed, start_index + i, gain_mode,
              theta_ra, theta_c, collect_interference)
             for i in range(n_realizations)]
    if workers > 1 and n_realizations > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_worker, tasks,
                                    chunksize=max(1, n_realizations // (4 * workers))))
    else:
        records = [_realize_one(*t) for t in tasks]
    records.sort(key=lambda r: r["index"])

    width = max(r["hist"].size for r in records)
    hist = np.zeros(width)
    for r in records:
        hist[:r["hist"].size] += r["hist"]
    intf = None
    if collect_interference:
        intf = np.concatenate([r["interference"] for r in records])
    return CampaignStats(
        ra_obs=np.array([r["ra_obs"] for r in records]),
        ra_succ=np.array([r["ra_succ"] for r in records]),
        d2d_obs=np.array([r["d2d_obs"] for r in records]),
        d2d_succ=np.array([r["d2d_succ"] for r in records]),
        ch_obs=np.array([r["ch_obs"] for r in records]),
        sum_n=np.array([r["sum_n"] for r in records]),
        hist=hist,
        n_ch=np.array([r["n_ch"] for r in records]),
        n_dev=np.array([r["n_dev"] for r in records]),
        interference=intf,
        resamples=sum(r["resamples"] for r in records),
    )


@dataclass(frozen=True)
class PerformanceReport:
    scheme: ClusteringScheme
    gain_mode: str
    seed: int
    n_realizations: int
    resamples: int
    p_ra: EmpiricalEstimate
    p_c: EmpiricalEstimate
    mean_cluster: EmpiricalEstimate
    delay: EmpiricalEstimate
    zeta: float | None = None


def _report_from_stats(stats: CampaignStats, scheme, gain_mode, seed) -> PerformanceReport:
    p_ra = ratio_estimate(stats.ra_succ[:, 0], stats.ra_obs)
    p_c = ratio_estimate(stats.d2d_succ[:, 0], stats.d2d_obs)
    mean_n = ratio_estimate(stats.sum_n, stats.ch_obs)
    if p_ra.n_samples == 0 or p_ra.mean == 0:
        d_mean, d_ci = math.inf, math.inf
    elif mean_n.mean == 0 or p_c.n_samples == 0:
        d_mean = 1.0 / p_ra.mean
        d_ci = (p_ra.ci_halfwidth / 1.96) / p_ra.mean ** 2 * 1.96
    else:
        d_mean = 1.0 / p_ra.mean + mean_n.mean / p_c.mean
        # delta method, treating the three estimates as uncorrelated
        var = ((p_ra.ci_halfwidth / 1.96) ** 2 / p_ra.mean ** 4
               + (mean_n.ci_halfwidth / 1.96) ** 2 / p_c.mean ** 2
               + mean_n.mean ** 2 * (p_c.ci_halfwidth / 1.96) ** 2 / p_c.mean ** 4)
        d_ci = 1.96 * math.sqrt(var)
    return PerformanceReport(
        scheme=scheme, gain_mode=gain_mode, seed=seed,
        n_realizations=stats.ra_obs.shape[0], resamples=stats.resamples,
        p_ra=p_ra, p_c=p_c,
        mean_cluster=mean_n,
        delay=EmpiricalEstimate(d_mean, d_ci, p_ra.n_samples),
    )


def estimate_report(params: SystemParams, scheme: ClusteringScheme,
                    n_realizations: int | None = None, seed: int = 0,
                    gain_mode: str = ANALYSIS_MATCHED, *,
                    ci_target: float | None = 0.01,
                    max_realizations: int = 6000,
                    region: Region = DEFAULT_REGION,
                    workers: int = 1) -> PerformanceReport:
    """Estimate {P_RA, P_C, E[N], D} over independent realizations.

    Starts with ``n_realizations`` (or 32) and extends in batches until the
    success-probability confidence half-widths reach ``ci_target`` (pass
    ``ci_target=None`` for a fixed-size run). Deterministic in ``seed``.
    """
    n0 = n_realizations if n_realizations is not None else 32
    stats = run_campaign(params, scheme, n0, seed, gain_mode=gain_mode,
                         region=region, workers=workers)
    done = n0
    while ci_target is not None and done < max_realizations:
        report = _report_from_stats(stats, scheme, gain_mode, seed)
        widths = [report.p_ra.ci_halfwidth]
        if report.p_c.n_samples > 0:
            widths.append(report.p_c.ci_halfwidth)
        if all(math.isfinite(w) and w <= ci_target for w in widths):
            break
        step = min(max(int(done * 0.6) + 1, 16), max_realizations - done)
        stats = stats.extend(run_campaign(
            params, scheme, step, seed, gain_mode=gain_mode, region=region,
            workers=workers, start_index=done))
        done += step
    return _report_from_stats(stats, scheme, gain_mode, seed)
