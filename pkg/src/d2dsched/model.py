"""Domain types and unit plumbing shared by analytics, simulator and optimizer.

Internal unit system: distances in km, powers in mW. dB/dBm inputs are
converted once at the boundary (construction-time properties).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

# gamma fit constant for the area distribution of a planar PPP Voronoi cell
VORONOI_C = 3.575

RBC = "rbc"
CGBC = "cgbc"


def db_to_linear(x: float) -> float:
    """dB ratio -> linear ratio."""
    if not math.isfinite(x):
        raise ValueError(f"dB value must be finite, got {x!r}")
    return 10.0 ** (x / 10.0)


def dbm_to_mw(x: float) -> float:
    """dBm power -> mW."""
    if not math.isfinite(x):
        raise ValueError(f"dBm value must be finite, got {x!r}")
    return 10.0 ** (x / 10.0)


@dataclass(frozen=True)
class SystemParams:
    """Physical and network parameters.

    mu, lam: device and base-station intensities [per km^2]; n_z: number of
    random-access codes; k: number of D2D channels; eta: path-loss exponent;
    sigma2_dbm: noise power; rho_l_dbm / rho_c_dbm: uplink / D2D power-control
    targets; theta_ra_db / theta_c_db: detection thresholds.
    """

    mu: float
    lam: float
    n_z: int
    k: int
    eta: float
    sigma2_dbm: float
    rho_l_dbm: float
    rho_c_dbm: float
    theta_ra_db: float
    theta_c_db: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if not self.eta > 2:
            raise ValueError(f"eta must be > 2, got {self.eta}")
        if self.n_z < 1:
            raise ValueError(f"n_z must be >= 1, got {self.n_z}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")

    @cached_property
    def alpha(self) -> float:
        """Devices-to-BS ratio."""
        return self.mu / self.lam

    @cached_property
    def sigma2_mw(self) -> float:
        return dbm_to_mw(self.sigma2_dbm)

    @cached_property
    def rho_l_mw(self) -> float:
        return dbm_to_mw(self.rho_l_dbm)

    @cached_property
    def rho_c_mw(self) -> float:
        return dbm_to_mw(self.rho_c_dbm)

    @cached_property
    def theta_ra(self) -> float:
        """Linear random-access detection threshold."""
        return db_to_linear(self.theta_ra_db)

    @cached_property
    def theta_c(self) -> float:
        """Linear D2D detection threshold."""
        return db_to_linear(self.theta_c_db)


def reference_params(mu: float = 640.0, **overrides) -> SystemParams:
    """Default evaluation parameters used by the bundled experiments."""
    base = dict(mu=mu, lam=10.0, n_z=64, k=3, eta=4.0, sigma2_dbm=-90.0,
                rho_l_dbm=-100.0, rho_c_dbm=-80.0, theta_ra_db=-7.0,
                theta_c_db=-7.0)
    base.update(overrides)
    return SystemParams(**base)


@dataclass(frozen=True)
class ClusteringScheme:
    """Cluster-head election rule: RBC (Bernoulli with probability delta) or
    CGBC (channel gain above tau = -ln(delta))."""

    kind: str
    delta: float

    def __post_init__(self):
        if self.kind not in (RBC, CGBC):
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if not 0 < self.delta <= 1:
            raise ValueError(f"delta must be in (0, 1], got {self.delta}")

    @property
    def tau(self) -> float:
        """Election gain threshold; defined only for CGBC."""
        if self.kind != CGBC:
            raise ValueError("tau is defined only for channel-gain-based clustering")
        return -math.log(self.delta)


def rbc(delta: float) -> ClusteringScheme:
    return ClusteringScheme(RBC, delta)


def cgbc(delta: float) -> ClusteringScheme:
    return ClusteringScheme(CGBC, delta)


@dataclass(frozen=True)
class DerivedParams:
    """Load quantities derived from (params, scheme)."""

    alpha: float        # devices per BS
    alpha_tilde: float  # cluster heads per BS sharing one RA code
    delta_tilde: float  # mean cluster members per cluster head
    c: float = VORONOI_C


def derive(params: SystemParams, scheme: ClusteringScheme) -> DerivedParams:
    d = scheme.delta
    return DerivedParams(
        alpha=params.mu / params.lam,
        alpha_tilde=d * params.mu / (params.lam * params.n_z),
        delta_tilde=(1.0 - d) / d,
    )
