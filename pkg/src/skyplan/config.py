"""TOML run configuration: one file, one reproducible scenario.

Every module default is overridable; unknown keys are rejected so typos
fail loudly. Physical units follow the field docs in the module types
(Hz, dBm, meters, watts, joules, seconds).
"""

from __future__ import annotations

import csv
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .channel import BeamPattern, ChannelModel, Position3D, default_beams
from .coinference import (
    InferenceModelProfile,
    LinkProfile,
    PlanMode,
    QosBudget,
)
from .coverage_map import BlockageRect, CoverageMap, SynthesisConfig
from .errors import ConfigError
from .llm_gateway import GatewayConfig
from .pipeline import AdaptationConfig, InferenceTask, ScenarioConfig
from .placement import PlacementProblem, SearchConfig


def _take(section: dict, name: str, allowed: set[str]) -> dict:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}"
        )
    return section


_CHANNEL_KEYS = {
    "carrier_freq", "bandwidth", "noise_power", "tx_power_per_beam",
    "pathloss_exponent", "ref_pathloss_1m", "shadowing_sigma",
    "shadowing_corr_len",
}
_BEAM_KEYS = {
    "count", "sector_deg", "uptilt_deg", "azimuth_width_3db",
    "elevation_width_3db", "peak_gain", "floor_gain",
}
_MAP_KEYS = {
    "width", "height", "resolution", "altitude", "origin_x", "origin_y",
    "bs_x", "bs_y", "bs_z", "blockage",
}
_PLACEMENT_KEYS = {
    "uavs", "min_separation", "area", "search_restarts", "search_stride",
    "sca_tol", "sca_max_iter", "brute_stride", "llm_digest_stride",
}
_COINFERENCE_KEYS = {
    "layers", "flops_per_layer", "activation_bits", "q_max", "gamma",
    "rho_max", "quality_table_csv", "bandwidth", "channel_gain", "noise_psd",
    "p_min", "p_max", "f_min", "f_max", "f_cloud", "cycles_per_flop",
    "cloud_cycles_per_flop", "kappa", "t_max", "e_max", "q_min", "mode",
}
_PIPELINE_KEYS = {
    "max_rounds", "step", "epsilon", "sensor_noise_sigma",
}
_LLM_KEYS = {
    "endpoint_url", "model_name", "timeout", "max_retries", "mock_script",
}
_TOP_KEYS = {
    "seed", "map", "channel", "beams", "placement", "coinference",
    "pipeline", "llm",
}


@dataclass
class PlacementSettings:
    uavs: int = 1
    min_separation: float = 10.0
    area: tuple[float, float, float, float] | None = None  # None -> map extent
    search_restarts: int = 8
    search_stride: float = 16.0
    sca_tol: float = 1e-4
    sca_max_iter: int = 200
    brute_stride: float = 4.0
    llm_digest_stride: float = 10.0


@dataclass
class CoinferenceSettings:
    profile: InferenceModelProfile = None  # type: ignore[assignment]
    link: LinkProfile = None  # type: ignore[assignment]
    budget: QosBudget = field(default_factory=QosBudget)
    rho_max: float = 0.9
    mode: PlanMode = PlanMode.MAX_QUALITY


@dataclass
class RunConfig:
    seed: int
    channel: ChannelModel
    beams: list[BeamPattern]
    synthesis: SynthesisConfig
    placement: PlacementSettings
    coinference: CoinferenceSettings
    adaptation: AdaptationConfig
    gateway: GatewayConfig | None

    def placement_problem(self, uavs: int | None = None,
                          cmap: CoverageMap | None = None) -> PlacementProblem:
        area = self.placement.area
        if area is None:
            if cmap is not None:
                area = cmap.extent
            else:
                ox, oy = self.synthesis.origin
                w, h = self.synthesis.area
                area = (ox, ox + w, oy, oy + h)
        return PlacementProblem(
            uav_count=uavs if uavs is not None else self.placement.uavs,
            area=area,
            altitude=self.synthesis.altitude,
            channel=self.channel,
            beams=self.beams,
            bs_position=self.synthesis.bs_position,
            min_separation=self.placement.min_separation,
        )

    def search_config(self) -> SearchConfig:
        return SearchConfig(
            restarts=self.placement.search_restarts,
            seed=self.seed,
            stride=self.placement.search_stride,
        )

    def scenario(self, cmap: CoverageMap) -> ScenarioConfig:
        co = self.coinference
        task = InferenceTask(
            profile=co.profile, link=co.link, budget=co.budget,
            mode=co.mode, rho_max=co.rho_max,
        )
        return ScenarioConfig(
            true_map=cmap,
            predicted_channel=self.channel,
            placement_problem=self.placement_problem(cmap=cmap),
            inference=task,
            adaptation=self.adaptation,
        )


def default_activation_bits(layer_count: int) -> list[float]:
    """Monotone-decreasing boundary payloads: raw input down to a tiny result."""
    input_bits = 8e6
    out = [input_bits]
    for s in range(1, layer_count):
        out.append(4e6 * (1.0 - s / layer_count) + 1e5)
    out.append(1e4)
    return out


def load_quality_table(path) -> list[tuple[float, float]]:
    """Two-column CSV `rho,quality`, header optional."""
    rows: list[tuple[float, float]] = []
    with open(path) as fh:
        for i, row in enumerate(csv.reader(fh), start=1):
            if not row or (i == 1 and row[0].strip().lower() == "rho"):
                continue
            if len(row) != 2:
                raise ConfigError(f"{path}: line {i}: expected rho,quality")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                raise ConfigError(f"{path}: line {i}: non-numeric value") from None
    if not rows:
        raise ConfigError(f"{path}: empty quality table")
    return rows


def parse_config(data: dict, base_dir: Path | None = None) -> RunConfig:
    _take(data, "top level", _TOP_KEYS)
    seed = int(data.get("seed", 0))

    ch = _take(dict(data.get("channel", {})), "channel", _CHANNEL_KEYS)
    channel = ChannelModel(**ch)

    bm = _take(dict(data.get("beams", {})), "beams", _BEAM_KEYS)
    beams = default_beams(**bm)

    mp = _take(dict(data.get("map", {})), "map", _MAP_KEYS)
    blockage = [
        BlockageRect(
            x_min=r["x_min"], x_max=r["x_max"],
            y_min=r["y_min"], y_max=r["y_max"],
            extra_loss_db=r["extra_loss_db"],
        )
        for r in mp.get("blockage", [])
    ]
    synthesis = SynthesisConfig(
        channel=channel,
        beams=beams,
        bs_position=Position3D(
            mp.get("bs_x", 0.0), mp.get("bs_y", mp.get("height", 301.0) / 2.0),
            mp.get("bs_z", 0.0),
        ),
        area=(mp.get("width", 634.0), mp.get("height", 301.0)),
        resolution=mp.get("resolution", 1.0),
        altitude=mp.get("altitude", 98.0),
        seed=seed,
        blockage_rects=blockage,
        origin=(mp.get("origin_x", 0.0), mp.get("origin_y", 0.0)),
    )

    pl = _take(dict(data.get("placement", {})), "placement", _PLACEMENT_KEYS)
    area = pl.get("area")
    placement = PlacementSettings(
        uavs=int(pl.get("uavs", 1)),
        min_separation=pl.get("min_separation", 10.0),
        area=tuple(area) if area is not None else None,
        search_restarts=int(pl.get("search_restarts", 8)),
        search_stride=pl.get("search_stride", 16.0),
        sca_tol=pl.get("sca_tol", 1e-4),
        sca_max_iter=int(pl.get("sca_max_iter", 200)),
        brute_stride=pl.get("brute_stride", 4.0),
        llm_digest_stride=pl.get("llm_digest_stride", 10.0),
    )

    co = _take(dict(data.get("coinference", {})), "coinference", _COINFERENCE_KEYS)
    layers = int(co.get("layers", 12))
    flops = co.get("flops_per_layer", 1e9)
    if isinstance(flops, (int, float)):
        flops = [float(flops)] * layers
    if len(flops) != layers:
        raise ConfigError("flops_per_layer length must equal layers")
    activation = co.get("activation_bits", default_activation_bits(layers))
    quality_table = None
    if "quality_table_csv" in co:
        path = Path(co["quality_table_csv"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        quality_table = load_quality_table(path)
    profile = InferenceModelProfile(
        flops_per_layer=[float(v) for v in flops],
        activation_bits_per_boundary=[float(v) for v in activation],
        q_max=co.get("q_max", 0.40),
        gamma=co.get("gamma", 1.5),
        quality_table=quality_table,
    )
    link = LinkProfile(
        bandwidth=co.get("bandwidth", 20e6),
        channel_gain=co.get("channel_gain", 1e-10),
        noise_psd=co.get("noise_psd", -174.0),
        p_min=co.get("p_min", 0.01),
        p_max=co.get("p_max", 1.0),
        f_min=co.get("f_min", 0.2e9),
        f_max=co.get("f_max", 2e9),
        f_cloud=co.get("f_cloud", 20e9),
        cycles_per_flop=co.get("cycles_per_flop", 1.0),
        cloud_cycles_per_flop=co.get("cloud_cycles_per_flop", 1.0),
        kappa=co.get("kappa", 1e-27),
    )
    budget = QosBudget(
        t_max=co.get("t_max", math.inf),
        e_max=co.get("e_max", math.inf),
        q_min=co.get("q_min", 0.0),
    )
    mode_name = str(co.get("mode", "quality")).lower()
    coinference = CoinferenceSettings(
        profile=profile, link=link, budget=budget,
        rho_max=co.get("rho_max", 0.9),
        mode=mode_from_name(mode_name),
    )

    pp = _take(dict(data.get("pipeline", {})), "pipeline", _PIPELINE_KEYS)
    adaptation = AdaptationConfig(
        max_rounds=int(pp.get("max_rounds", 10)),
        step=pp.get("step", 5.0),
        epsilon=pp.get("epsilon", 1e-3),
        sensor_noise_sigma=pp.get("sensor_noise_sigma", 0.0),
        sensor_noise_seed=seed,
    )

    gateway = None
    if "llm" in data:
        lg = _take(dict(data["llm"]), "llm", _LLM_KEYS)
        gateway = GatewayConfig(
            endpoint_url=lg.get("endpoint_url", ""),
            model_name=lg.get("model_name", ""),
            timeout=lg.get("timeout", 60.0),
            max_retries=int(lg.get("max_retries", 2)),
            mock_script=lg.get("mock_script"),
        )

    return RunConfig(
        seed=seed, channel=channel, beams=beams, synthesis=synthesis,
        placement=placement, coinference=coinference, adaptation=adaptation,
        gateway=gateway,
    )


def mode_from_name(name: str) -> PlanMode:
    table = {
        "quality": PlanMode.MAX_QUALITY,
        "delay": PlanMode.MIN_DELAY,
        "energy": PlanMode.MIN_ENERGY,
    }
    if name not in table:
        raise ConfigError(f"unknown objective mode {name!r}")
    return table[name]


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return parse_config(data, base_dir=path.parent)
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
