"""Flat key=value experiment configuration with exact round-trip parse/emit.

dB and dBm quantities carry the unit in the key name; densities are per km^2.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from .model import ClusteringScheme, SystemParams

DEFAULT_DELTA_GRID = tuple(round(0.05 * i, 2) for i in range(1, 21))


@dataclass(frozen=True)
class ExperimentConfig:
    mu_per_km2: float = 640.0
    lambda_per_km2: float = 10.0
    n_z: int = 64
    k: int = 3
    eta: float = 4.0
    sigma2_dbm: float = -90.0
    rho_l_dbm: float = -100.0
    rho_c_dbm: float = -80.0
    theta_ra_db: float = -7.0
    theta_c_db: float = -7.0
    scheme: str = "rbc"
    delta: float = 0.35
    delta_grid: tuple = DEFAULT_DELTA_GRID
    realizations: int = 0       # 0: auto-extend simulations to ci_target
    ci_target: float = 0.01
    seed: int = 1
    gain_mode: str = "analysis-matched"
    out: str = ""

    def to_params(self) -> SystemParams:
        return SystemParams(
            mu=self.mu_per_km2, lam=self.lambda_per_km2, n_z=self.n_z,
            k=self.k, eta=self.eta, sigma2_dbm=self.sigma2_dbm,
            rho_l_dbm=self.rho_l_dbm, rho_c_dbm=self.rho_c_dbm,
            theta_ra_db=self.theta_ra_db, theta_c_db=self.theta_c_db)

    def to_scheme(self, delta: float | None = None) -> ClusteringScheme:
        return ClusteringScheme(self.scheme, self.delta if delta is None else delta)


def _parse_value(name: str, kind, raw: str):
    raw = raw.strip()
    if kind is float:
        return float(raw)
    if kind is int:
        return int(raw)
    if kind is str:
        return raw
    if kind is tuple:
        if not raw:
            return ()
        return tuple(float(v) for v in raw.split(","))
    raise ValueError(f"unsupported config field type for {name}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse `key = value` lines ('#' comments allowed) into a config."""
    kinds = {f.name: type(f.default) for f in fields(ExperimentConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if key not in kinds:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        values[key] = _parse_value(key, kinds[key], raw)
    return ExperimentConfig(**values)


def emit_config(cfg: ExperimentConfig) -> str:
    """Emit a config as key = value text; parse(emit(cfg)) == cfg."""
    lines = []
    for f in fields(ExperimentConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            rendered = ",".join(repr(float(x)) for x in v)
        elif isinstance(v, float):
            rendered = repr(v)
        else:
            rendered = str(v)
        lines.append(f"{f.name} = {rendered}")
    return "\n".join(lines) + "\n"


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_as_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["delta_grid"] = list(d["delta_grid"])
    return d
