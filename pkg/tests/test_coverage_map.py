"""Coverage map synthesis, CSV round-trips, and sampling."""

import math

import numpy as np
import pytest

from skyplan import (
    BlockageRect,
    ChannelModel,
    CoverageMap,
    Position3D,
    SynthesisConfig,
    default_beams,
    load_map,
    sample_rsrp,
    save_map,
    sinr_at,
    synthesize,
)
from skyplan.channel import dbm_to_mw, los_rsrp
from skyplan.coverage_map import RSRP_MAX, RSRP_MIN, los_field, sample_rsrp_all
from skyplan.errors import DomainError, EvaluationError, MapFormatError


def small_cfg(channel, beams, **kw):
    base = dict(
        channel=channel, beams=beams,
        bs_position=Position3D(0.0, 20.0, 0.0),
        area=(60.0, 40.0), resolution=2.0, altitude=31.0, seed=3,
    )
    base.update(kw)
    return SynthesisConfig(**base)


class TestLosField:
    def test_matches_pointwise_los_rsrp(self, clean_channel, beams):
        # [DERIVED] the vectorized field must agree with the scalar formula.
        bs = Position3D(0.0, 20.0, 0.0)
        xs = np.array([4.0, 10.0, 57.0])
        ys = np.array([0.0, 18.0, 40.0])
        fld = los_field(clean_channel, beams, bs, xs, ys, 31.0)
        for b, pat in enumerate(beams):
            for iy, y in enumerate(ys):
                for ix, x in enumerate(xs):
                    want = los_rsrp(clean_channel, pat, bs,
                                    Position3D(x, y, 31.0))
                    assert fld[b, iy, ix] == pytest.approx(want, abs=1e-9)

    def test_rejects_node_on_bs(self, clean_channel, beams):
        bs = Position3D(0.0, 0.0, 0.0)
        with pytest.raises(DomainError):
            los_field(clean_channel, beams, bs, np.array([0.0, 1.0]),
                      np.array([0.0, 1.0]), 0.0)


class TestSynthesize:
    def test_grid_shape_and_extent(self, clean_channel, beams):
        cmap = synthesize(small_cfg(clean_channel, beams))
        assert (cmap.beam_count, cmap.ny, cmap.nx) == (7, 21, 31)
        assert cmap.extent == (0.0, 60.0, 0.0, 40.0)

    def test_deterministic_per_seed(self, shadowed_channel, beams):
        a = synthesize(small_cfg(shadowed_channel, beams))
        b = synthesize(small_cfg(shadowed_channel, beams))
        c = synthesize(small_cfg(shadowed_channel, beams, seed=4))
        assert np.array_equal(a.rsrp, b.rsrp)
        assert not np.array_equal(a.rsrp, c.rsrp)

    def test_sigma_zero_equals_los(self, clean_channel, beams):
        cfg = small_cfg(clean_channel, beams)
        cmap = synthesize(cfg)
        xs = np.arange(cmap.nx) * cfg.resolution
        ys = np.arange(cmap.ny) * cfg.resolution
        want = los_field(clean_channel, beams, cfg.bs_position, xs, ys,
                         cfg.altitude)
        np.clip(want, RSRP_MIN, RSRP_MAX, out=want)
        assert np.allclose(cmap.rsrp, want)

    def test_shadowing_sample_statistics(self, beams):
        # [DERIVED] residual field is zero-mean with std near shadowing_sigma;
        # wide tolerances, the check is over a handful of seeds only.
        channel = ChannelModel(shadowing_sigma=8.0)
        resid = []
        for seed in range(6):
            cfg = small_cfg(channel, beams, seed=seed, area=(120.0, 80.0),
                            resolution=1.0)
            cmap = synthesize(cfg)
            xs = np.arange(cmap.nx) * cfg.resolution
            ys = np.arange(cmap.ny) * cfg.resolution
            base = los_field(channel, beams, cfg.bs_position, xs, ys,
                             cfg.altitude)
            r = (cmap.rsrp - base)
            resid.append(r[~np.isclose(cmap.rsrp, RSRP_MIN)
                          & ~np.isclose(cmap.rsrp, RSRP_MAX)])
        resid = np.concatenate([r.ravel() for r in resid])
        assert abs(resid.mean()) < 2.0
        assert 5.5 < resid.std() < 10.5

    def test_beam_corr_one_shares_one_field(self, beams):
        # With all shadowing variance common, per-beam residuals coincide.
        channel = ChannelModel(shadowing_sigma=8.0)
        cfg = small_cfg(channel, beams, beam_corr=1.0)
        cmap = synthesize(cfg)
        xs = np.arange(cmap.nx) * cfg.resolution
        ys = np.arange(cmap.ny) * cfg.resolution
        base = los_field(channel, beams, cfg.bs_position, xs, ys, cfg.altitude)
        resid = cmap.rsrp - base
        clipped = np.isclose(cmap.rsrp, RSRP_MIN) | np.isclose(cmap.rsrp, RSRP_MAX)
        for b in range(1, cmap.beam_count):
            ok = ~clipped[0] & ~clipped[b]
            assert np.allclose(resid[b][ok], resid[0][ok], atol=1e-9)

    def test_blockage_subtracts_loss(self, clean_channel, beams):
        rect = BlockageRect(x_min=10.0, x_max=30.0, y_min=0.0, y_max=40.0,
                            extra_loss_db=15.0)
        plain = synthesize(small_cfg(clean_channel, beams))
        blocked = synthesize(small_cfg(clean_channel, beams,
                                       blockage_rects=[rect]))
        diff = plain.rsrp - blocked.rsrp
        inside = diff[:, :, 6:15]  # x = 12..28 at 2 m resolution
        outside = diff[:, :, 16:]
        assert np.allclose(inside, 15.0)
        assert np.allclose(outside, 0.0)

    def test_values_clamped_to_range(self, beams):
        channel = ChannelModel(shadowing_sigma=40.0)
        cmap = synthesize(small_cfg(channel, beams))
        assert cmap.rsrp.min() >= RSRP_MIN
        assert cmap.rsrp.max() <= RSRP_MAX

    def test_rejects_degenerate_area(self, clean_channel, beams):
        with pytest.raises(DomainError):
            small_cfg(clean_channel, beams, area=(1.0, 40.0))


class TestCsvRoundTrip:
    def test_save_load_identity(self, small_map, tmp_path):
        path = tmp_path / "map.csv"
        save_map(small_map, path)
        again = load_map(path)
        assert again.origin == small_map.origin
        assert again.resolution == small_map.resolution
        assert (again.nx, again.ny) == (small_map.nx, small_map.ny)
        assert again.altitude == small_map.altitude
        # Values survive the %.4f serialization to within half a ULP of it.
        assert np.allclose(again.rsrp, small_map.rsrp, atol=5e-5)

    def test_saved_bytes_are_stable(self, small_map, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        save_map(small_map, p1)
        save_map(small_map, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_nan_round_trips(self, tmp_path):
        rsrp = np.full((1, 2, 2), -80.0)
        rsrp[0, 1, 1] = np.nan
        cmap = CoverageMap(origin=(0.0, 0.0), resolution=1.0, nx=2, ny=2,
                           altitude=30.0, beam_count=1, rsrp=rsrp)
        path = tmp_path / "m.csv"
        save_map(cmap, path)
        again = load_map(path)
        assert math.isnan(again.rsrp[0, 1, 1])
        assert again.rsrp[0, 0, 0] == -80.0

    def test_duplicate_rows_last_wins(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text(
            "# skyplan-map v1\n"
            "# origin_x,origin_y,resolution,nx,ny,altitude,beam_count\n"
            "0,0,1.0,2,2,30.0,1\n"
            "0,0,0,-70.0\n0,1,0,-71.0\n0,0,1,-72.0\n0,1,1,-73.0\n"
            "0,0,0,-65.0\n"
        )
        cmap = load_map(path)
        assert cmap.rsrp[0, 0, 0] == -65.0

    @pytest.mark.parametrize("line1,line2,lineno", [
        ("# wrong-magic", None, 1),
        (None, "# wrong-meta", 2),
    ])
    def test_bad_headers_carry_line_numbers(self, tmp_path, line1, line2,
                                            lineno):
        lines = ["# skyplan-map v1",
                 "# origin_x,origin_y,resolution,nx,ny,altitude,beam_count",
                 "0,0,1.0,2,2,30.0,1", "0,0,0,-70.0"]
        if line1:
            lines[0] = line1
        if line2:
            lines[1] = line2
        path = tmp_path / "m.csv"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(MapFormatError) as exc:
            load_map(path)
        assert exc.value.line_number == lineno

    @pytest.mark.parametrize("row,msg", [
        ("9,0,0,-70.0", "beam 9 out of range"),
        ("0,5,0,-70.0", "outside"),
        ("0,0,0,abc", "bad RSRP"),
        ("0,0,0,-500.0", "outside [-160.0, -20.0]"),
        ("0,0,0", "beam_id,ix,iy,rsrp_dbm"),
    ])
    def test_bad_data_rows(self, tmp_path, row, msg):
        path = tmp_path / "m.csv"
        path.write_text(
            "# skyplan-map v1\n"
            "# origin_x,origin_y,resolution,nx,ny,altitude,beam_count\n"
            "0,0,1.0,2,2,30.0,1\n" + row + "\n"
        )
        with pytest.raises(MapFormatError) as exc:
            load_map(path)
        assert msg in str(exc.value)
        assert exc.value.line_number == 4


def _flat_map(values_by_beam):
    """2x2 map with a constant RSRP per beam."""
    nb = len(values_by_beam)
    rsrp = np.empty((nb, 2, 2))
    for b, v in enumerate(values_by_beam):
        rsrp[b] = v
    return CoverageMap(origin=(0.0, 0.0), resolution=1.0, nx=2, ny=2,
                       altitude=30.0, beam_count=nb, rsrp=rsrp)


class TestSampling:
    def test_bilinear_interpolation(self):
        # [DERIVED] hand-evaluated bilinear blend at (0.25, 0.5).
        rsrp = np.array([[[-80.0, -70.0], [-60.0, -50.0]]])
        cmap = CoverageMap(origin=(0.0, 0.0), resolution=1.0, nx=2, ny=2,
                           altitude=30.0, beam_count=1, rsrp=rsrp)
        want = (-80.0 * 0.75 * 0.5 + -70.0 * 0.25 * 0.5
                + -60.0 * 0.75 * 0.5 + -50.0 * 0.25 * 0.5)
        assert sample_rsrp(cmap, (0.25, 0.5), 0) == pytest.approx(want)
        assert sample_rsrp_all(cmap, (0.25, 0.5))[0] == pytest.approx(want)

    def test_nodes_sample_exactly(self, small_map):
        for ix, iy in ((0, 0), (3, 2), (small_map.nx - 1, small_map.ny - 1)):
            x, y = small_map.node_xy(ix, iy)
            assert sample_rsrp(small_map, (x, y), 2) == pytest.approx(
                small_map.rsrp[2, iy, ix], abs=1e-9
            )

    def test_nodata_neighbor_gives_nan(self):
        rsrp = np.array([[[-80.0, np.nan], [-60.0, -50.0]]])
        cmap = CoverageMap(origin=(0.0, 0.0), resolution=1.0, nx=2, ny=2,
                           altitude=30.0, beam_count=1, rsrp=rsrp)
        assert math.isnan(sample_rsrp(cmap, (0.5, 0.5), 0))

    def test_outside_extent_raises(self, small_map):
        with pytest.raises(EvaluationError):
            sample_rsrp(small_map, (-5.0, 0.0), 0)

    def test_bad_beam_raises(self, small_map):
        with pytest.raises(DomainError):
            sample_rsrp(small_map, (1.0, 1.0), 99)


class TestSinr:
    def test_sinr_against_manual_computation(self):
        # [DERIVED] serving/interference arithmetic in linear milliwatts.
        cmap = _flat_map([-70.0, -80.0, -90.0])
        serving, sinr = sinr_at(cmap, (0.5, 0.5), noise_power=-94.0)
        assert serving == 0
        mw = [dbm_to_mw(v) for v in (-70.0, -80.0, -90.0)]
        want = mw[0] / (mw[1] + mw[2] + dbm_to_mw(-94.0))
        assert sinr == pytest.approx(want, rel=1e-12)

    def test_tie_breaks_to_lowest_beam(self):
        cmap = _flat_map([-70.0, -70.0])
        serving, _ = sinr_at(cmap, (0.5, 0.5), noise_power=-94.0)
        assert serving == 0

    def test_nodata_raises(self):
        rsrp = np.array([[[np.nan, -70.0], [-70.0, -70.0]]])
        cmap = CoverageMap(origin=(0.0, 0.0), resolution=1.0, nx=2, ny=2,
                           altitude=30.0, beam_count=1, rsrp=rsrp)
        with pytest.raises(EvaluationError):
            sinr_at(cmap, (0.5, 0.5), noise_power=-94.0)


class TestCoverageMapValidation:
    def test_rejects_shape_mismatch(self):
        with pytest.raises(DomainError):
            CoverageMap(origin=(0.0, 0.0), resolution=1.0, nx=3, ny=2,
                        altitude=30.0, beam_count=1, rsrp=np.zeros((1, 2, 2)))

    def test_rejects_out_of_range_rsrp(self):
        with pytest.raises(DomainError):
            CoverageMap(origin=(0.0, 0.0), resolution=1.0, nx=2, ny=2,
                        altitude=30.0, beam_count=1,
                        rsrp=np.full((1, 2, 2), -500.0))

    def test_rsrp_is_read_only(self, small_map):
        with pytest.raises(ValueError):
            small_map.rsrp[0, 0, 0] = -50.0
