import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ks_2samp

from conftest import chi2_pvalue
from zrp import coupling
from zrp.core import OccupancyConfig, dirac_config, spawn_seeds
from zrp.equilibrium import exact_small_chain, exact_tv_between, _law_at
from zrp.rates import RateFunction


class TestDeltaRate:
    def test_rate_one_is_empty_site_indicator(self, rate_one):
        assert coupling.delta_rate(rate_one, 0) == 1.0
        for k in range(1, 6):
            assert coupling.delta_rate(rate_one, k) == 0.0

    def test_half_rate(self, rate_half):
        assert coupling.delta_rate(rate_half, 1) == 0.5

    def test_telescoping_to_tail(self, rate_threshold3, rate_half):
        for rate in (rate_threshold3, rate_half):
            K = len(rate.head)
            total = sum(coupling.delta_rate(rate, k) for k in range(K + 1))
            assert total == pytest.approx(1.0)

    def test_nonnegative(self, rate_threshold3):
        assert all(coupling.delta_rate(rate_threshold3, k) >= 0 for k in range(10))

    def test_rejects_negative_occupancy(self, rate_one):
        with pytest.raises(ValueError):
            coupling.delta_rate(rate_one, -1)

    def test_delta_table(self, rate_threshold3):
        tab = coupling.delta_table(rate_threshold3, 5)
        np.testing.assert_allclose(tab, [1 / 3, 1 / 3, 1 / 3, 0, 0, 0])


class TestTaggedPair:
    def test_same_site_coalesces_immediately(self, rate_one):
        x = dirac_config(3, 2)
        run = coupling.tagged_pair_simulate(rate_one, x, 1, 1, 5.0, seeds=0)
        assert run.tau == 0.0
        assert not run.censored

    def test_liquid_two_site_mean_coalescence_time(self, rate_one):
        # both tags free: every unit-rate proposal is accepted by both
        x = OccupancyConfig(np.array([0, 0]))
        replicas = 5000
        taus = [coupling.tagged_pair_simulate(rate_one, x, 0, 1, 60.0, s).tau
                for s in spawn_seeds(23, replicas)]
        assert None not in taus
        mean = float(np.mean(taus))
        assert abs(mean - 1.0) < 3.0 / math.sqrt(replicas)

    def test_absorption_along_grid(self, rate_threshold3):
        x = OccupancyConfig(np.array([2, 0, 1, 0]))
        grid = np.linspace(0, 30, 61)
        for s in spawn_seeds(31, 40):
            run = coupling.tagged_pair_simulate(rate_threshold3, x, 0, 2, 30.0, s,
                                                grid=grid)
            equal = run.i_path == run.j_path
            first = np.argmax(equal) if equal.any() else None
            if first is not None and equal.any():
                assert np.all(equal[first:])
            if run.tau is not None:
                assert np.all(equal[grid > run.tau])

    def test_exchangeability_of_tag_order(self, rate_threshold3):
        x = OccupancyConfig(np.array([2, 0, 1]))
        a = [coupling.tagged_pair_simulate(rate_threshold3, x, 0, 1, 80.0, s).tau
             for s in spawn_seeds(5, 800)]
        b = [coupling.tagged_pair_simulate(rate_threshold3, x, 1, 0, 80.0, s).tau
             for s in spawn_seeds(6, 800)]
        a = [t for t in a if t is not None]
        b = [t for t in b if t is not None]
        assert ks_2samp(a, b).pvalue > 0.005

    def test_background_conserves_particles(self, rate_threshold3):
        x = OccupancyConfig(np.array([3, 1, 0]))
        run = coupling.tagged_pair_simulate(rate_threshold3, x, 0, 1, 4.0, seeds=9,
                                            grid=np.linspace(0, 4, 9),
                                            record_background=True)
        np.testing.assert_array_equal(run.background_configs.sum(axis=1), 4)

    def test_superposition_law(self, rate_one):
        # background from x plus the tag position is a zero-range process
        # with one extra particle started from x + delta_i
        n, t = 3, 1.0
        x = OccupancyConfig(np.array([1, 1, 0]))
        chain = exact_small_chain(rate_one, n, 3)
        start = (1, 1, 1)  # x + delta at site 2
        exact = _law_at(chain, chain.state_index(start), t)
        counts = np.zeros(chain.states.shape[0])
        for s in spawn_seeds(12, 20000):
            run = coupling.tagged_pair_simulate(rate_one, x, 2, 2, t, s,
                                                grid=np.array([t]),
                                                record_background=True)
            combined = run.background_configs[0].copy()
            combined[run.i_path[0]] += 1
            counts[chain.state_index(combined)] += 1
        assert chi2_pvalue(counts, exact) > 0.01

    def test_rejects_bad_sites(self, rate_one):
        x = dirac_config(3, 1)
        with pytest.raises(ValueError):
            coupling.tagged_pair_simulate(rate_one, x, 0, 3, 1.0, seeds=0)


class TestCoalescenceTail:
    def test_survival_one_at_zero(self, rate_one):
        x = OccupancyConfig(np.array([0, 0, 1]))
        curve = coupling.coalescence_tail(rate_one, x, 0, 1, [0.0], 200, seed=1,
                                          horizon=5.0)
        assert curve.survival[0] == 1.0

    def test_survival_nonincreasing(self, rate_threshold3):
        x = dirac_config(4, 3)
        curve = coupling.coalescence_tail(rate_threshold3, x, 1, 2,
                                          np.linspace(0, 20, 9), 400, seed=2,
                                          horizon=20.0)
        assert np.all(np.diff(curve.survival) <= 1e-12)

    def test_exponential_tail_in_liquid_case(self, rate_one):
        x = OccupancyConfig(np.array([0, 0]))
        grid = np.array([0.0, 0.5, 1.0, 2.0])
        replicas = 3000
        curve = coupling.coalescence_tail(rate_one, x, 0, 1, grid, replicas, seed=3,
                                          horizon=25.0)
        for t, s in zip(grid, curve.survival):
            p = math.exp(-t)
            sigma = math.sqrt(max(p * (1 - p), 1e-12) / replicas)
            assert abs(s - p) <= 4 * sigma + 1e-9
        assert curve.censored_fraction < 0.01

    def test_censoring_counted_conservatively(self, rate_one):
        # horizon too short for the slow case: censored runs survive the grid
        x = dirac_config(3, 6)  # tags blocked while the pile persists
        curve = coupling.coalescence_tail(rate_one, x, 1, 2, [0.0, 0.1], 50, seed=4,
                                          horizon=0.1)
        assert curve.censored_fraction > 0.5
        assert curve.survival[-1] >= curve.censored_fraction


class TestShortestPath:
    def test_trivial_path(self):
        x = dirac_config(3, 2)
        path = coupling.shortest_path(x, x)
        assert len(path) == 1

    def test_length_is_half_l1(self):
        x = OccupancyConfig(np.array([3, 0, 0]))
        y = OccupancyConfig(np.array([1, 1, 1]))
        path = coupling.shortest_path(x, y)
        assert len(path) - 1 == 2
        np.testing.assert_array_equal(path[0], x.occupancies)
        np.testing.assert_array_equal(path[-1], y.occupancies)

    @given(st.integers(2, 6), st.integers(0, 8), st.integers(0, 10 ** 6))
    @settings(max_examples=40, deadline=None)
    def test_path_invariants(self, n, m, seed):
        gen = np.random.Generator(np.random.PCG64(seed))
        x_occ = gen.multinomial(m, np.ones(n) / n)
        y_occ = gen.multinomial(m, np.ones(n) / n)
        x = OccupancyConfig(x_occ)
        y = OccupancyConfig(y_occ)
        path = coupling.shortest_path(x, y)
        assert len(path) - 1 == int(np.abs(x_occ - y_occ).sum()) // 2
        cap = max(x_occ.max(initial=0), y_occ.max(initial=0))
        for w_prev, w_next in zip(path, path[1:]):
            diff = w_next - w_prev
            assert sorted(diff[diff != 0].tolist()) in ([], [-1, 1])
            assert w_next.max(initial=0) <= cap

    def test_rejects_mismatched_mass(self):
        with pytest.raises(ValueError):
            coupling.shortest_path(dirac_config(3, 2), dirac_config(3, 3))


class TestPathCouplingBound:
    def test_identical_configs_bound_zero(self, rate_one):
        x = dirac_config(3, 2)
        bound = coupling.path_coupling_bound(rate_one, x, x, 1.0, 50, seed=0)
        assert bound.bound == 0.0
        assert bound.path_length == 0

    def test_adjacent_pair_is_single_edge(self, rate_one):
        x = OccupancyConfig(np.array([2, 0, 0]))
        y = OccupancyConfig(np.array([1, 1, 0]))
        bound = coupling.path_coupling_bound(rate_one, x, y, 0.5, 300, seed=1)
        assert bound.path_length == 1
        assert 0.0 <= bound.bound <= 1.0

    def test_upper_bounds_exact_tv(self, rate_one):
        # the summed coalescence-failure estimate dominates the exact
        # distance between the two laws, up to Monte Carlo error
        chain = exact_small_chain(rate_one, 3, 3)
        x = OccupancyConfig(np.array([3, 0, 0]))
        y = OccupancyConfig(np.array([1, 1, 1]))
        for t in (1.0, 3.0, 8.0):
            bound = coupling.path_coupling_bound(rate_one, x, y, t, 1500, seed=5)
            exact = exact_tv_between(chain, x, y, t)
            assert exact <= bound.bound + 3 * bound.stderr + 0.01

    def test_deterministic(self, rate_one):
        x = OccupancyConfig(np.array([2, 0, 1]))
        y = OccupancyConfig(np.array([1, 1, 1]))
        a = coupling.path_coupling_bound(rate_one, x, y, 1.0, 100, seed=7)
        b = coupling.path_coupling_bound(rate_one, x, y, 1.0, 100, seed=7)
        assert a.bound == b.bound
        np.testing.assert_array_equal(a.edge_estimates, b.edge_estimates)

    def test_json_report_round_trips(self, tmp_path, rate_one):
        import json

        from zrp import io
        x = OccupancyConfig(np.array([2, 0, 0]))
        y = OccupancyConfig(np.array([0, 1, 1]))
        bound = coupling.path_coupling_bound(rate_one, x, y, 0.5, 80, seed=2)
        path = str(tmp_path / "bound.json")
        io.write_json(path, bound.as_dict())
        doc = json.load(open(path))
        assert doc["path_length"] == 2
        assert len(doc["edges"]) == 2
        assert doc["bound"] == pytest.approx(
            min(1.0, sum(e["estimate"] for e in doc["edges"])))
