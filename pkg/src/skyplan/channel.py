"""Parametric LoS channel, beam patterns, and rate formulas.

All operations here are pure functions of immutable inputs, shared by map
synthesis, the idealized placement benchmark, and the co-inference link model.
Angles are degrees, powers dBm, gains dB/dBi unless stated otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError

SPEED_OF_LIGHT = 299792458.0  # m/s


@dataclass(frozen=True)
class Position3D:
    """Cartesian position in meters; z is altitude above ground."""

    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise DomainError("coordinates must be finite")
        if self.z < 0:
            raise DomainError("altitude z must be >= 0")

    def distance_to(self, other: "Position3D") -> float:
        return math.dist((self.x, self.y, self.z), (other.x, other.y, other.z))


def fspl(d: float, f: float) -> float:
    """Free-space path loss in dB at distance d (m), frequency f (Hz)."""
    if d <= 0 or f <= 0:
        raise DomainError("fspl requires d > 0 and f > 0")
    return 20.0 * math.log10(4.0 * math.pi * d * f / SPEED_OF_LIGHT)


@dataclass(frozen=True)
class ChannelModel:
    """Deterministic LoS link model plus shadowing statistics for synthesis.

    ref_pathloss_1m defaults to fspl(1 m, carrier_freq); with pathloss_exponent
    2.0 this reduces to pure free-space loss, the idealized benchmark model.
    """

    carrier_freq: float = 4.9e9  # Hz
    bandwidth: float = 100e6  # Hz
    noise_power: float = -94.0  # dBm over bandwidth
    tx_power_per_beam: float = 43.0  # dBm
    pathloss_exponent: float = 2.0
    ref_pathloss_1m: float | None = None  # dB; None -> fspl(1 m)
    shadowing_sigma: float = 6.0  # dB
    shadowing_corr_len: float = 25.0  # m

    def __post_init__(self):
        if self.carrier_freq <= 0 or self.bandwidth <= 0:
            raise DomainError("carrier_freq and bandwidth must be positive")
        if not 1.5 <= self.pathloss_exponent <= 6.0:
            raise DomainError("pathloss_exponent must lie in [1.5, 6]")
        if self.shadowing_sigma < 0:
            raise DomainError("shadowing_sigma must be >= 0")
        if self.shadowing_corr_len <= 0:
            raise DomainError("shadowing_corr_len must be > 0")

    @property
    def ref_pathloss(self) -> float:
        if self.ref_pathloss_1m is None:
            return fspl(1.0, self.carrier_freq)
        return self.ref_pathloss_1m


@dataclass(frozen=True)
class BeamPattern:
    """Clamped-Gaussian main lobe: standard synthetic element pattern."""

    beam_id: int
    azimuth_center: float  # deg
    elevation_center: float  # deg, positive = uptilt
    azimuth_width_3db: float  # deg
    elevation_width_3db: float  # deg
    peak_gain: float = 17.0  # dBi
    floor_gain: float = -10.0  # dBi, sidelobe floor

    def __post_init__(self):
        if self.azimuth_width_3db <= 0 or self.elevation_width_3db <= 0:
            raise DomainError("beam widths must be positive")
        if self.peak_gain <= self.floor_gain:
            raise DomainError("peak_gain must exceed floor_gain")


def default_beams(
    count: int = 7,
    sector_deg: float = 90.0,
    uptilt_deg: float = 20.0,
    azimuth_width_3db: float = 30.0,
    elevation_width_3db: float = 10.0,
    peak_gain: float = 17.0,
    floor_gain: float = -10.0,
) -> list[BeamPattern]:
    """Evenly spaced azimuth fan with a common mechanical uptilt.

    The default is seven beams at -45..+45 deg in 15 deg steps, all tilted
    +20 deg toward the aerial coverage plane.
    """
    if count < 1:
        raise DomainError("beam count must be >= 1")
    if count == 1:
        centers = [0.0]
    else:
        step = sector_deg / (count - 1)
        centers = [-sector_deg / 2.0 + i * step for i in range(count)]
    return [
        BeamPattern(
            beam_id=i,
            azimuth_center=c,
            elevation_center=uptilt_deg,
            azimuth_width_3db=azimuth_width_3db,
            elevation_width_3db=elevation_width_3db,
            peak_gain=peak_gain,
            floor_gain=floor_gain,
        )
        for i, c in enumerate(centers)
    ]


def _wrap_deg(a: float) -> float:
    """Wrap an angle difference to [-180, 180]."""
    return (a + 180.0) % 360.0 - 180.0


def beam_gain(pattern: BeamPattern, direction: tuple[float, float]) -> float:
    """Antenna gain (dBi) toward (azimuth deg, elevation deg).

    Gaussian main lobe peak_gain - 12*((daz/w_az)^2 + (del/w_el)^2), clamped
    below at floor_gain; exactly peak_gain at boresight.
    """
    az, el = direction
    daz = _wrap_deg(az - pattern.azimuth_center)
    delv = _wrap_deg(el - pattern.elevation_center)
    rolloff = 12.0 * (
        (daz / pattern.azimuth_width_3db) ** 2
        + (delv / pattern.elevation_width_3db) ** 2
    )
    return max(pattern.peak_gain - rolloff, pattern.floor_gain)


def direction_between(bs: Position3D, p: Position3D) -> tuple[float, float]:
    """(azimuth, elevation) in degrees of the ray from bs toward p."""
    dx, dy, dz = p.x - bs.x, p.y - bs.y, p.z - bs.z
    ground = math.hypot(dx, dy)
    az = math.degrees(math.atan2(dy, dx))
    el = math.degrees(math.atan2(dz, ground))
    return az, el


def los_rsrp(
    model: ChannelModel, pattern: BeamPattern, bs: Position3D, p: Position3D
) -> float:
    """Deterministic received power (dBm) at p from one beam; no shadowing."""
    d = bs.distance_to(p)
    if d == 0.0:
        raise DomainError("receiver coincides with the transmitter")
    gain = beam_gain(pattern, direction_between(bs, p))
    pathloss = model.ref_pathloss + 10.0 * model.pathloss_exponent * math.log10(d)
    return model.tx_power_per_beam + gain - pathloss


def rate_from_sinr(sinr: float, bandwidth_share: float) -> float:
    """Shannon rate in bits/s for a linear SINR over a bandwidth share in Hz."""
    if sinr < 0 or bandwidth_share < 0:
        raise DomainError("sinr and bandwidth_share must be >= 0")
    return bandwidth_share * math.log2(1.0 + sinr)


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    if mw <= 0:
        raise DomainError("power must be positive to express in dBm")
    return 10.0 * math.log10(mw)
