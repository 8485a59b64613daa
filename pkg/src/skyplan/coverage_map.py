"""Gridded per-beam RSRP fields at a fixed altitude.

A CoverageMap is the empirical "environment": either loaded from a measured
CSV campaign or synthesized from the parametric channel plus correlated
log-normal shadowing and rectangular blockage. All RSRP values are dBm;
missing cells carry a NaN sentinel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import BeamPattern, ChannelModel, Position3D, dbm_to_mw, los_rsrp
from .errors import DomainError, EvaluationError, MapFormatError

RSRP_MIN = -160.0
RSRP_MAX = -20.0

MAP_MAGIC = "# skyplan-map v1"
MAP_META = "# origin_x,origin_y,resolution,nx,ny,altitude,beam_count"


@dataclass(frozen=True)
class CoverageMap:
    """Dense per-beam RSRP grid; immutable after construction.

    rsrp has shape [beam_count, ny, nx]; node (ix, iy) sits at
    (origin_x + ix*resolution, origin_y + iy*resolution).
    """

    origin: tuple[float, float]
    resolution: float
    nx: int
    ny: int
    altitude: float
    beam_count: int
    rsrp: np.ndarray

    def __post_init__(self):
        if self.resolution <= 0:
            raise DomainError("resolution must be positive")
        if self.nx < 2 or self.ny < 2:
            raise DomainError("grid must be at least 2x2")
        if self.beam_count < 1:
            raise DomainError("beam_count must be >= 1")
        if self.altitude <= 0:
            raise DomainError("altitude must be positive")
        if self.rsrp.shape != (self.beam_count, self.ny, self.nx):
            raise DomainError(
                f"rsrp shape {self.rsrp.shape} does not match "
                f"({self.beam_count}, {self.ny}, {self.nx})"
            )
        vals = self.rsrp[~np.isnan(self.rsrp)]
        if vals.size and (vals.min() < RSRP_MIN or vals.max() > RSRP_MAX):
            raise DomainError(
                f"RSRP values must lie in [{RSRP_MIN}, {RSRP_MAX}] dBm"
            )
        self.rsrp.setflags(write=False)

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(x_min, x_max, y_min, y_max) covered by the grid."""
        ox, oy = self.origin
        return (
            ox,
            ox + (self.nx - 1) * self.resolution,
            oy,
            oy + (self.ny - 1) * self.resolution,
        )

    def node_xy(self, ix: int, iy: int) -> tuple[float, float]:
        ox, oy = self.origin
        return ox + ix * self.resolution, oy + iy * self.resolution


@dataclass(frozen=True)
class BlockageRect:
    """Axis-aligned rectangle adding extra loss (dB) to covered cells."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    extra_loss_db: float

    def __post_init__(self):
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise DomainError("blockage rectangle is degenerate")
        if self.extra_loss_db < 0:
            raise DomainError("extra_loss_db must be >= 0")


@dataclass(frozen=True)
class SynthesisConfig:
    """Everything needed to fabricate a measured-style campaign map."""

    channel: ChannelModel
    beams: list[BeamPattern]
    bs_position: Position3D
    area: tuple[float, float]  # (width, height) meters
    resolution: float = 1.0
    altitude: float = 98.0
    seed: int = 0
    blockage_rects: list[BlockageRect] = field(default_factory=list)
    origin: tuple[float, float] = (0.0, 0.0)
    # Fraction of shadowing variance common to all beams (same obstructions
    # attenuate every beam of one BS); the rest is independent per beam.
    beam_corr: float = 0.7

    def __post_init__(self):
        if not self.beams:
            raise DomainError("at least one beam is required")
        if self.resolution <= 0:
            raise DomainError("resolution must be positive")
        if not 0.0 <= self.beam_corr <= 1.0:
            raise DomainError("beam_corr must lie in [0, 1]")
        w, h = self.area
        if w < 2 * self.resolution or h < 2 * self.resolution:
            raise DomainError("area must span at least two cells per axis")


def _correlated_field(
    ny: int, nx: int, resolution: float, sigma: float, corr_len: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Stationary Gaussian field with exp(-d/corr_len) autocorrelation.

    Circulant embedding on a padded grid; tiny negative eigenvalues from the
    approximate embedding are clamped to zero.
    """
    if sigma == 0.0:
        # Consume the same number of draws so the seed stream stays aligned.
        pny, pnx = 2 * ny, 2 * nx
        rng.standard_normal((pny, pnx))
        rng.standard_normal((pny, pnx))
        return np.zeros((ny, nx))
    pny, pnx = 2 * ny, 2 * nx
    iy = np.minimum(np.arange(pny), pny - np.arange(pny)) * resolution
    ix = np.minimum(np.arange(pnx), pnx - np.arange(pnx)) * resolution
    dist = np.hypot(iy[:, None], ix[None, :])
    cov = sigma**2 * np.exp(-dist / corr_len)
    eig = np.fft.fft2(cov).real
    eig = np.maximum(eig, 0.0)
    noise = rng.standard_normal((pny, pnx)) + 1j * rng.standard_normal((pny, pnx))
    spectrum = np.sqrt(eig / (pny * pnx)) * noise
    fld = np.fft.fft2(spectrum).real
    return fld[:ny, :nx]


def los_field(
    channel: ChannelModel,
    beams: list[BeamPattern],
    bs: Position3D,
    xs: np.ndarray,
    ys: np.ndarray,
    altitude: float,
) -> np.ndarray:
    """Vectorized LoS RSRP (dBm) for every beam over an (xs x ys) grid.

    Returns shape [len(beams), len(ys), len(xs)]; matches los_rsrp exactly.
    """
    gx, gy = np.meshgrid(xs, ys)  # [ny, nx]
    dx = gx - bs.x
    dy = gy - bs.y
    dz = altitude - bs.z
    ground = np.hypot(dx, dy)
    d3d = np.hypot(ground, dz)
    if np.any(d3d == 0):
        raise DomainError("grid node coincides with the BS position")
    az = np.degrees(np.arctan2(dy, dx))
    el = np.degrees(np.arctan2(dz, ground))
    pathloss = channel.ref_pathloss + 10.0 * channel.pathloss_exponent * np.log10(d3d)
    out = np.empty((len(beams), *gx.shape))
    for b, pat in enumerate(beams):
        daz = (az - pat.azimuth_center + 180.0) % 360.0 - 180.0
        delv = (el - pat.elevation_center + 180.0) % 360.0 - 180.0
        rolloff = 12.0 * (
            (daz / pat.azimuth_width_3db) ** 2
            + (delv / pat.elevation_width_3db) ** 2
        )
        gain = np.maximum(pat.peak_gain - rolloff, pat.floor_gain)
        out[b] = channel.tx_power_per_beam + gain - pathloss
    return out


def synthesize(cfg: SynthesisConfig) -> CoverageMap:
    """Fabricate a campaign map: LoS + correlated shadowing - blockage loss.

    Deterministic given cfg.seed; per-beam shadowing fields are independent.
    Values are clamped to the valid RSRP range.
    """
    width, height = cfg.area
    nx = int(math.floor(width / cfg.resolution)) + 1
    ny = int(math.floor(height / cfg.resolution)) + 1
    ox, oy = cfg.origin
    xs = ox + np.arange(nx) * cfg.resolution
    ys = oy + np.arange(ny) * cfg.resolution
    rsrp = los_field(cfg.channel, cfg.beams, cfg.bs_position, xs, ys, cfg.altitude)

    rng = np.random.default_rng(cfg.seed)
    sigma = cfg.channel.shadowing_sigma
    corr_len = cfg.channel.shadowing_corr_len
    common = _correlated_field(
        ny, nx, cfg.resolution, sigma * math.sqrt(cfg.beam_corr), corr_len, rng
    )
    sigma_own = sigma * math.sqrt(1.0 - cfg.beam_corr)
    for b in range(len(cfg.beams)):
        rsrp[b] += common + _correlated_field(
            ny, nx, cfg.resolution, sigma_own, corr_len, rng
        )

    for rect in cfg.blockage_rects:
        mask = (
            (xs[None, :] >= rect.x_min) & (xs[None, :] <= rect.x_max)
            & (ys[:, None] >= rect.y_min) & (ys[:, None] <= rect.y_max)
        )
        rsrp[:, mask] -= rect.extra_loss_db

    np.clip(rsrp, RSRP_MIN, RSRP_MAX, out=rsrp)
    return CoverageMap(
        origin=cfg.origin,
        resolution=cfg.resolution,
        nx=nx,
        ny=ny,
        altitude=cfg.altitude,
        beam_count=len(cfg.beams),
        rsrp=rsrp,
    )


def _fmt_rsrp(v: float) -> str:
    return "NaN" if math.isnan(v) else f"{v:.4f}"


def save_map(cmap: CoverageMap, path) -> None:
    """Write the canonical CSV form: beam-major, then iy, then ix."""
    ox, oy = cmap.origin
    lines = [MAP_MAGIC, MAP_META,
             f"{ox},{oy},{cmap.resolution},{cmap.nx},{cmap.ny},"
             f"{cmap.altitude},{cmap.beam_count}"]
    for b in range(cmap.beam_count):
        plane = cmap.rsrp[b]
        for iy in range(cmap.ny):
            row = plane[iy]
            for ix in range(cmap.nx):
                lines.append(f"{b},{ix},{iy},{_fmt_rsrp(row[ix])}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_map(path) -> CoverageMap:
    """Parse a map CSV; duplicate (beam,ix,iy) rows -> last one wins."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if len(lines) < 3 or lines[0].strip() != MAP_MAGIC:
        raise MapFormatError(f"expected header {MAP_MAGIC!r}", 1)
    if lines[1].strip() != MAP_META:
        raise MapFormatError(f"expected metadata header {MAP_META!r}", 2)
    meta = lines[2].split(",")
    if len(meta) != 7:
        raise MapFormatError("metadata row must have 7 comma-separated values", 3)
    try:
        ox, oy, res, alt = (float(meta[i]) for i in (0, 1, 2, 5))
        nx, ny, beam_count = int(meta[3]), int(meta[4]), int(meta[6])
    except ValueError as exc:
        raise MapFormatError(f"bad metadata value: {exc}", 3) from None
    if res <= 0 or nx < 2 or ny < 2 or beam_count < 1 or alt <= 0:
        raise MapFormatError("metadata values out of range", 3)

    rsrp = np.full((beam_count, ny, nx), np.nan)
    for lineno, line in enumerate(lines[3:], start=4):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise MapFormatError("data row must be beam_id,ix,iy,rsrp_dbm", lineno)
        try:
            b, ix, iy = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError:
            raise MapFormatError("non-integer beam/cell index", lineno) from None
        if not (0 <= b < beam_count):
            raise MapFormatError(f"beam {b} out of range [0, {beam_count})", lineno)
        if not (0 <= ix < nx and 0 <= iy < ny):
            raise MapFormatError(f"cell ({ix},{iy}) outside {nx}x{ny} grid", lineno)
        tok = parts[3].strip()
        if tok == "NaN":
            rsrp[b, iy, ix] = np.nan
            continue
        try:
            val = float(tok)
        except ValueError:
            raise MapFormatError(f"bad RSRP value {tok!r}", lineno) from None
        if not RSRP_MIN <= val <= RSRP_MAX:
            raise MapFormatError(
                f"RSRP {val} outside [{RSRP_MIN}, {RSRP_MAX}] dBm", lineno
            )
        rsrp[b, iy, ix] = val
    return CoverageMap(
        origin=(ox, oy), resolution=res, nx=nx, ny=ny,
        altitude=alt, beam_count=beam_count, rsrp=rsrp,
    )


def _cell_of(cmap: CoverageMap, pos: tuple[float, float]):
    x, y = pos
    x_min, x_max, y_min, y_max = cmap.extent
    eps = 1e-9 * cmap.resolution
    if not (x_min - eps <= x <= x_max + eps and y_min - eps <= y <= y_max + eps):
        raise EvaluationError(
            f"position ({x}, {y}) outside map extent "
            f"[{x_min}, {x_max}] x [{y_min}, {y_max}]"
        )
    fx = (x - x_min) / cmap.resolution
    fy = (y - y_min) / cmap.resolution
    ix0 = min(int(math.floor(fx)), cmap.nx - 2)
    iy0 = min(int(math.floor(fy)), cmap.ny - 2)
    ix0 = max(ix0, 0)
    iy0 = max(iy0, 0)
    return ix0, iy0, fx - ix0, fy - iy0


def sample_rsrp(cmap: CoverageMap, pos: tuple[float, float], beam: int) -> float:
    """Bilinear interpolation in the dB domain; NaN if any neighbor is NODATA."""
    if not 0 <= beam < cmap.beam_count:
        raise DomainError(f"beam {beam} out of range")
    ix0, iy0, tx, ty = _cell_of(cmap, pos)
    plane = cmap.rsrp[beam]
    a = plane[iy0, ix0]
    b = plane[iy0, ix0 + 1]
    c = plane[iy0 + 1, ix0]
    d = plane[iy0 + 1, ix0 + 1]
    if math.isnan(a) or math.isnan(b) or math.isnan(c) or math.isnan(d):
        return float("nan")
    return float(
        a * (1 - tx) * (1 - ty) + b * tx * (1 - ty)
        + c * (1 - tx) * ty + d * tx * ty
    )


def sample_rsrp_all(cmap: CoverageMap, pos: tuple[float, float]) -> np.ndarray:
    """Per-beam interpolated RSRP (dBm) at pos; NaN where NODATA."""
    ix0, iy0, tx, ty = _cell_of(cmap, pos)
    corners = cmap.rsrp[:, iy0:iy0 + 2, ix0:ix0 + 2]
    w = np.array([[(1 - tx) * (1 - ty), tx * (1 - ty)], [(1 - tx) * ty, tx * ty]])
    return np.sum(corners * w, axis=(1, 2))


def sinr_at(
    cmap: CoverageMap, pos: tuple[float, float], noise_power: float
) -> tuple[int, float]:
    """Serving beam (argmax RSRP, ties to lowest index) and linear SINR.

    noise_power is dBm over the full bandwidth; the SINR is serving power over
    the sum of all other beams plus noise, in linear milliwatts.
    """
    vals = sample_rsrp_all(cmap, pos)
    if np.any(np.isnan(vals)):
        raise EvaluationError(f"NODATA beam at position {pos}")
    mw = 10.0 ** (vals / 10.0)
    serving = int(np.argmax(vals))
    interference = float(mw.sum() - mw[serving])
    noise = dbm_to_mw(noise_power)
    return serving, float(mw[serving] / (interference + noise))
