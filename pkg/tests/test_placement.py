"""Placement methods against the shared map-scoring oracle."""

import itertools
import math

import numpy as np
import pytest

from skyplan import (
    GatewayConfig,
    Method,
    PlacementProblem,
    SearchConfig,
    brute_force_placement,
    evaluate_on_map,
    llm_placement,
    los_grid_init,
    map_search_placement,
    sca_los_placement,
)
from skyplan.channel import dbm_to_mw
from skyplan.coverage_map import sample_rsrp_all
from skyplan.errors import (
    ConstraintViolationError,
    DomainError,
    GatewayError,
    SizeError,
)
from skyplan.placement import _snap_stride, los_objective

from conftest import make_map, make_problem


def oracle_sum_rate(positions, problem, cmap):
    """Independent re-derivation of the map score: argmax association,
    equal bandwidth split per serving beam, Shannon rates."""
    noise = dbm_to_mw(problem.channel.noise_power)
    pairs = []
    for pos in positions:
        vals = sample_rsrp_all(cmap, pos)
        mw = 10.0 ** (vals / 10.0)
        serving = int(np.argmax(vals))
        pairs.append((serving, mw[serving] / (mw.sum() - mw[serving] + noise)))
    counts = {}
    for b, _ in pairs:
        counts[b] = counts.get(b, 0) + 1
    return sum(
        problem.channel.bandwidth / counts[b] * math.log2(1.0 + sinr)
        for b, sinr in pairs
    )


class TestEvaluateOnMap:
    def test_matches_oracle(self, small_map, shadowed_channel, beams):
        problem = make_problem(shadowed_channel, beams, uavs=3,
                               area=(80.0, 50.0))
        pts = [(10.0, 10.0), (40.0, 25.0), (70.0, 40.0)]
        sol = evaluate_on_map(pts, problem, small_map)
        assert sol.sum_rate == pytest.approx(
            oracle_sum_rate(pts, problem, small_map), rel=1e-12
        )
        assert len(sol.per_uav_rate) == 3
        assert sol.sum_rate == pytest.approx(sum(sol.per_uav_rate))

    def test_shared_beam_splits_bandwidth(self, shadowed_channel, beams):
        cmap = make_map(shadowed_channel, beams, area=(80.0, 50.0))
        problem = make_problem(shadowed_channel, beams, uavs=2,
                               area=(80.0, 50.0), min_separation=2.0)
        # Two UAVs 2 m apart share the serving beam almost surely.
        sol = evaluate_on_map([(40.0, 25.0), (42.0, 25.0)], problem, cmap)
        if sol.serving_beam[0] == sol.serving_beam[1]:
            solo = make_problem(shadowed_channel, beams, uavs=1,
                                area=(80.0, 50.0))
            alone = evaluate_on_map([(40.0, 25.0)], solo, cmap)
            assert sol.per_uav_rate[0] == pytest.approx(
                alone.per_uav_rate[0] / 2.0, rel=1e-6
            )

    def test_rejects_wrong_arity(self, small_map, shadowed_channel, beams):
        problem = make_problem(shadowed_channel, beams, uavs=2,
                               area=(80.0, 50.0))
        with pytest.raises(DomainError):
            evaluate_on_map([(1.0, 1.0)], problem, small_map)

    def test_rejects_separation_violation(self, small_map, shadowed_channel,
                                          beams):
        problem = make_problem(shadowed_channel, beams, uavs=2,
                               area=(80.0, 50.0), min_separation=10.0)
        with pytest.raises(ConstraintViolationError):
            evaluate_on_map([(5.0, 5.0), (8.0, 5.0)], problem, small_map)

    def test_rejects_out_of_area(self, small_map, shadowed_channel, beams):
        problem = make_problem(shadowed_channel, beams, uavs=1,
                               area=(80.0, 50.0))
        with pytest.raises(ConstraintViolationError):
            evaluate_on_map([(200.0, 5.0)], problem, small_map)


class TestBruteForce:
    def test_k1_is_grid_argmax(self, small_map, shadowed_channel, beams):
        problem = make_problem(shadowed_channel, beams, uavs=1,
                               area=(80.0, 50.0))
        sol = brute_force_placement(problem, small_map, 1.0)
        # [DERIVED] exhaustive scan of every node with the oracle scorer.
        best = max(
            (oracle_sum_rate([small_map.node_xy(ix, iy)], problem, small_map)
             for ix in range(small_map.nx) for iy in range(small_map.ny))
        )
        assert sol.sum_rate == pytest.approx(best, rel=1e-12)

    def test_k2_matches_pair_enumeration(self, shadowed_channel, beams):
        cmap = make_map(shadowed_channel, beams, area=(20.0, 14.0),
                        resolution=2.0, seed=5)
        problem = make_problem(shadowed_channel, beams, uavs=2,
                               area=(20.0, 14.0), min_separation=4.0)
        sol = brute_force_placement(problem, cmap, 2.0)
        nodes = [cmap.node_xy(ix, iy) for ix in range(cmap.nx)
                 for iy in range(cmap.ny)]
        best = max(
            oracle_sum_rate(list(pair), problem, cmap)
            for pair in itertools.combinations(nodes, 2)
            if math.dist(*pair) >= 4.0
        )
        assert sol.sum_rate == pytest.approx(best, rel=1e-12)

    def test_refuses_oversized_enumeration(self, campaign_map,
                                           shadowed_channel, beams):
        problem = make_problem(shadowed_channel, beams, uavs=4)
        with pytest.raises(SizeError):
            brute_force_placement(problem, campaign_map, 1.0)

    def test_stride_below_resolution_rejected(self, small_map,
                                              shadowed_channel, beams):
        problem = make_problem(shadowed_channel, beams, uavs=1,
                               area=(80.0, 50.0))
        with pytest.raises(DomainError):
            brute_force_placement(problem, small_map, 0.5)


class TestMapSearch:
    def test_k1_equals_brute_force_exactly(self, small_map, shadowed_channel,
                                           beams):
        problem = make_problem(shadowed_channel, beams, uavs=1,
                               area=(80.0, 50.0))
        search = map_search_placement(problem, small_map)
        brute = brute_force_placement(problem, small_map, 1.0)
        assert search.sum_rate == brute.sum_rate
        assert search.positions == brute.positions

    def test_deterministic_given_seed(self, campaign_map, shadowed_channel,
                                      beams):
        problem = make_problem(shadowed_channel, beams, uavs=3)
        a = map_search_placement(problem, campaign_map, SearchConfig(seed=7))
        b = map_search_placement(problem, campaign_map, SearchConfig(seed=7))
        assert a.positions == b.positions
        assert a.sum_rate == b.sum_rate

    def test_positions_stay_on_lattice(self, campaign_map, shadowed_channel,
                                       beams):
        problem = make_problem(shadowed_channel, beams, uavs=3)
        sol = map_search_placement(problem, campaign_map,
                                   SearchConfig(stride=13.0))
        for x, y in sol.positions:
            assert x == pytest.approx(round(x))
            assert y == pytest.approx(round(y))

    def test_respects_min_separation(self, campaign_map, shadowed_channel,
                                     beams):
        problem = make_problem(shadowed_channel, beams, uavs=4,
                               min_separation=25.0)
        sol = map_search_placement(problem, campaign_map)
        for a, b in itertools.combinations(sol.positions, 2):
            assert math.dist(a, b) >= 25.0 - 1e-9

    def test_method_tag(self, small_map, shadowed_channel, beams):
        problem = make_problem(shadowed_channel, beams, uavs=1,
                               area=(80.0, 50.0))
        sol = map_search_placement(problem, small_map)
        assert sol.method_tag is Method.MAP_SEARCH


class TestSnapStride:
    # [TRIVIAL] snapped strides are resolution * 2^m, never smaller.
    @pytest.mark.parametrize("stride,resolution,expected", [
        (16.0, 1.0, 16.0),
        (13.0, 1.0, 16.0),
        (1.0, 1.0, 1.0),
        (0.3, 1.0, 1.0),
        (10.0, 2.0, 16.0),
    ])
    def test_values(self, stride, resolution, expected):
        assert _snap_stride(stride, resolution) == expected


class TestScaBenchmark:
    def test_trace_monotone_and_improves_on_init(self, shadowed_channel,
                                                 beams):
        problem = make_problem(shadowed_channel, beams, uavs=3)
        init = [(20.0, 20.0), (100.0, 60.0), (180.0, 100.0)]
        sol = sca_los_placement(problem, init_positions=init)
        trace = sol.objective_trace
        assert trace[0] == pytest.approx(los_objective(init, problem))
        assert all(b >= a for a, b in zip(trace, trace[1:]))
        assert trace[-1] >= trace[0]
        assert not sol.max_iter_reached

    def test_default_init_is_feasible_and_model_scored(self, shadowed_channel,
                                                       beams):
        problem = make_problem(shadowed_channel, beams, uavs=2)
        sol = sca_los_placement(problem)
        assert sol.method_tag is Method.SCA_LOS
        assert sol.sum_rate == pytest.approx(
            los_objective(sol.positions, problem)
        )

    def test_los_grid_init_separation(self, shadowed_channel, beams):
        problem = make_problem(shadowed_channel, beams, uavs=4,
                               min_separation=30.0)
        init = los_grid_init(problem)
        for a, b in itertools.combinations(init, 2):
            assert math.dist(a, b) >= 30.0 - 1e-9

    def test_rejects_infeasible_init(self, shadowed_channel, beams):
        problem = make_problem(shadowed_channel, beams, uavs=2)
        with pytest.raises(ConstraintViolationError):
            sca_los_placement(problem, init_positions=[(0.0, 0.0), (1.0, 0.0)])

    def test_search_beats_model_benchmark_on_map(self, campaign_map,
                                                 shadowed_channel, beams):
        problem = make_problem(shadowed_channel, beams, uavs=3)
        search = map_search_placement(problem, campaign_map)
        model = sca_los_placement(problem)
        on_map = evaluate_on_map(model.positions, problem, campaign_map)
        assert search.sum_rate >= on_map.sum_rate


class TestLlmPlacement:
    def _gateway(self, script):
        return GatewayConfig(mock_script=list(script))

    def test_feasible_reply_is_scored_on_map(self, small_map,
                                             shadowed_channel, beams):
        problem = make_problem(shadowed_channel, beams, uavs=2,
                               area=(80.0, 50.0))
        gw = self._gateway(['```json\n[[10.0, 10.0], [60.0, 40.0]]\n```'])
        sol = llm_placement(problem, small_map, gw)
        assert sol.method_tag is Method.LLM
        assert sol.positions == [(10.0, 10.0), (60.0, 40.0)]
        assert sol.sum_rate == pytest.approx(
            oracle_sum_rate(sol.positions, problem, small_map), rel=1e-12
        )

    def test_retries_infeasible_then_succeeds(self, small_map,
                                              shadowed_channel, beams):
        problem = make_problem(shadowed_channel, beams, uavs=1,
                               area=(80.0, 50.0))
        gw = self._gateway([
            '```json\n[[999.0, 999.0]]\n```',   # outside the area
            '```json\n[[30.0, 20.0]]\n```',
        ])
        sol = llm_placement(problem, small_map, gw)
        assert sol.positions == [(30.0, 20.0)]
        assert len(gw.request_log) == 2

    def test_three_infeasible_replies_raise(self, small_map, shadowed_channel,
                                            beams):
        problem = make_problem(shadowed_channel, beams, uavs=1,
                               area=(80.0, 50.0))
        gw = self._gateway(['```json\n[[999.0, 999.0]]\n```'] * 3)
        with pytest.raises(GatewayError, match="llm_infeasible"):
            llm_placement(problem, small_map, gw)


class TestProblemValidation:
    def test_rejects_zero_uavs(self, shadowed_channel, beams):
        with pytest.raises(DomainError):
            make_problem(shadowed_channel, beams, uavs=0)

    def test_rejects_degenerate_area(self, shadowed_channel, beams):
        with pytest.raises(DomainError):
            PlacementProblem(
                uav_count=1, area=(10.0, 10.0, 0.0, 5.0), altitude=30.0,
                channel=shadowed_channel, beams=beams,
                bs_position=make_problem(shadowed_channel, beams).bs_position,
            )
