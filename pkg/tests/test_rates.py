import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zrp import rates
from zrp.rates import DiscreteDist, RateFunction


def brute_force_series(head, z, terms=8000):
    """Direct numeric summation of the generating series and derivative."""
    w = 1.0
    value = 0.0
    deriv = 0.0
    for k in range(terms):
        if k >= 1:
            r = head[k - 1] if k <= len(head) else 1.0
            w *= r
            deriv += k * z ** (k - 1) / w
        value += z ** k / w
    return value, deriv


heads = st.lists(st.floats(0.05, 1.0), min_size=1, max_size=6).map(
    lambda vs: tuple(sorted(round(v, 6) for v in vs)))


class TestNormalize:
    def test_already_normalized(self):
        r = rates.normalize([1, 1, 1])
        assert r.head == (1.0, 1.0, 1.0)
        assert r.time_rescale == 1.0

    def test_divides_by_sup(self):
        r = rates.normalize([0.5, 1.0, 2.0])
        assert r.head == (0.25, 0.5, 1.0)
        assert r.time_rescale == 2.0

    def test_single_entry_below_one_kept(self):
        r = rates.normalize([0.5])
        assert r.head == (0.5,)
        assert r.rate(1) == 0.5
        assert r.rate(2) == 1.0  # eventually-one tail

    @pytest.mark.parametrize("bad", [[], [0.0, 1.0], [-1.0], [2.0, 1.0], [1.0, float("nan")]])
    def test_rejects_bad_tables(self, bad):
        with pytest.raises(ValueError):
            rates.normalize(bad)

    def test_rate_accessor(self, rate_half):
        assert rate_half.rate(0) == 0.0
        assert rate_half.rate(1) == 0.5
        assert rate_half.rate(7) == 1.0
        with pytest.raises(ValueError):
            rate_half.rate(-1)


class TestBigR:
    def test_rate_one_closed_form(self, rate_one):
        value, deriv = rates.big_r(rate_one, 0.5)
        assert value == pytest.approx(2.0, abs=1e-14)
        assert deriv == pytest.approx(4.0, abs=1e-13)

    def test_at_zero(self, rate_threshold3):
        value, _ = rates.big_r(rate_threshold3, 0.0)
        assert value == 1.0

    def test_half_rate_hand_sum(self, rate_half):
        value, _ = rates.big_r(rate_half, 0.5)
        # 1 + 0.5/0.5 + 0.25/(0.5*0.5) = 3
        assert value == pytest.approx(3.0, abs=1e-14)

    def test_rejects_z_out_of_range(self, rate_one):
        for z in (1.0, 1.5, -0.1):
            with pytest.raises(ValueError):
                rates.big_r(rate_one, z)

    @given(head=heads, z=st.floats(0.0, 0.95))
    @settings(max_examples=60, deadline=None)
    def test_matches_brute_force_series(self, head, z):
        r = RateFunction(head=head)
        value, deriv = rates.big_r(r, z)
        bv, bd = brute_force_series(head, z)
        assert value == pytest.approx(bv, rel=1e-10)
        assert deriv == pytest.approx(bd, rel=1e-9)

    def test_derivative_matches_finite_difference(self, rate_half, rate_threshold3):
        h = 1e-6
        for rate in (rate_half, rate_threshold3):
            for z in np.linspace(0.05, 0.9, 18):
                _, deriv = rates.big_r(rate, z)
                fd = (rates.big_r(rate, z + h)[0] - rates.big_r(rate, z - h)[0]) / (2 * h)
                assert deriv == pytest.approx(fd, rel=1e-6)


class TestPsi:
    def test_rate_one_closed_form(self, rate_one):
        assert rates.psi(rate_one, 0.5) == pytest.approx(1.0, abs=1e-14)
        for z in np.linspace(0, 0.99, 25):
            assert rates.psi(rate_one, z) == pytest.approx(z / (1 - z), rel=1e-12)

    def test_at_zero(self, rate_threshold3):
        assert rates.psi(rate_threshold3, 0.0) == 0.0

    def test_half_rate_derived_value(self, rate_half):
        _, deriv = rates.big_r(rate_half, 0.5)
        assert rates.psi(rate_half, 0.5) == pytest.approx(0.5 * deriv / 3.0, rel=1e-13)

    @given(head=heads)
    @settings(max_examples=25, deadline=None)
    def test_strictly_increasing(self, head):
        r = RateFunction(head=head)
        zs = np.linspace(0.0, 0.999, 1000)
        values = [rates.psi(r, z) for z in zs]
        assert all(b > a for a, b in zip(values, values[1:]))


class TestPsiInv:
    def test_rate_one(self, rate_one):
        assert rates.psi_inv(rate_one, 1.0) == pytest.approx(0.5, abs=1e-11)

    def test_zero(self, rate_threshold3):
        assert rates.psi_inv(rate_threshold3, 0.0) == 0.0

    def test_round_trip_through_psi(self, rate_half):
        s = rates.psi(rate_half, 0.3)
        assert rates.psi_inv(rate_half, s) == pytest.approx(0.3, abs=1e-10)

    def test_rejects_bad_targets(self, rate_one):
        for s in (-1.0, float("nan"), float("inf")):
            with pytest.raises(ValueError):
                rates.psi_inv(rate_one, s)

    @given(head=heads, z=st.floats(0.0, 0.99))
    @settings(max_examples=60, deadline=None)
    def test_identity_on_grid(self, head, z):
        r = RateFunction(head=head)
        assert rates.psi_inv(r, rates.psi(r, z)) == pytest.approx(z, abs=1e-10)


class TestQDist:
    def test_point_mass_at_zero_fugacity(self, rate_threshold3):
        d = rates.q_dist(rate_threshold3, 0.0)
        assert d.probs.tolist() == [1.0]
        assert d.tail_mass == 0.0

    def test_rate_one_geometric(self, rate_one):
        d = rates.q_dist(rate_one, 0.5)
        expected = 0.5 ** (np.arange(d.support_size) + 1)
        np.testing.assert_allclose(d.probs, expected, rtol=1e-12)

    def test_mean_is_psi(self, rate_half, rate_threshold3):
        for rate in (rate_half, rate_threshold3):
            for z in np.arange(0.1, 0.95, 0.1):
                d = rates.q_dist(rate, z)
                assert d.mean() == pytest.approx(rates.psi(rate, z), abs=1e-10)

    def test_total_mass_with_tail(self, rate_half):
        d = rates.q_dist(rate_half, 0.9)
        assert d.probs.sum() + d.tail_mass == pytest.approx(1.0, abs=1e-12)
        assert d.tail_mass < rates.Q_TAIL_TOL


class TestQBar:
    def test_zero_mean(self, rate_half):
        d = rates.q_bar(rate_half, 0.0)
        assert d.probs.tolist() == [1.0]

    def test_rate_one_unit_mean_is_geometric_half(self, rate_one):
        d = rates.q_bar(rate_one, 1.0)
        expected = 0.5 ** (np.arange(d.support_size) + 1)
        np.testing.assert_allclose(d.probs, expected, atol=1e-10)

    @given(s=st.floats(0.0, 6.0), ds=st.floats(0.0, 2.0))
    @settings(max_examples=40, deadline=None)
    def test_lipschitz_in_the_mean(self, s, ds):
        rate = RateFunction(head=(0.4, 0.8))
        d1 = rates.q_bar(rate, s)
        d2 = rates.q_bar(rate, s + ds)
        assert d1.tv(d2) <= ds + 1e-9

    @given(s=st.floats(0.0, 6.0), ds=st.floats(0.0, 2.0))
    @settings(max_examples=40, deadline=None)
    def test_stochastic_monotonicity_of_cdfs(self, s, ds):
        rate = RateFunction(head=(0.3, 0.6, 0.9))
        lo = rates.q_bar(rate, s)
        hi = rates.q_bar(rate, s + ds)
        size = max(lo.support_size, hi.support_size)
        c_lo = np.concatenate([lo.cdf(), np.ones(size - lo.support_size)])
        c_hi = np.concatenate([hi.cdf(), np.ones(size - hi.support_size)])
        assert np.all(c_lo >= c_hi - 1e-9)


class TestDiscreteDist:
    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            DiscreteDist(np.array([0.5, -0.1, 0.6]))

    def test_rejects_bad_total(self):
        with pytest.raises(ValueError):
            DiscreteDist(np.array([0.5, 0.4]))

    def test_from_samples(self):
        d = DiscreteDist.from_samples([0, 0, 1, 3])
        np.testing.assert_allclose(d.probs, [0.5, 0.25, 0.0, 0.25])

    def test_tv_identical_and_disjoint(self):
        a = DiscreteDist(np.array([1.0, 0.0]))
        b = DiscreteDist(np.array([0.0, 1.0]))
        assert a.tv(a) == 0.0
        assert a.tv(b) == 1.0


class TestPresetsAndFiles:
    def test_threshold_preset(self):
        r = rates.preset("threshold-4")
        assert r.head == (0.25, 0.5, 0.75, 1.0)

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            rates.preset("no-such-rate")

    def test_load_rate_file(self, tmp_path):
        path = tmp_path / "rate.json"
        path.write_text(json.dumps({"head": [0.2, 0.7, 1.0]}))
        r = rates.load_rate_file(path)
        assert r.head == (0.2, 0.7, 1.0)

    def test_load_rejects_missing_head(self, tmp_path):
        path = tmp_path / "rate.json"
        path.write_text(json.dumps({"rates": [1.0]}))
        with pytest.raises(ValueError):
            rates.load_rate_file(path)

    def test_resolve_rate(self, tmp_path):
        assert rates.resolve_rate("rate-one").head == (1.0,)
        assert rates.resolve_rate({"head": [0.5, 1.0]}).head == (0.5, 1.0)
        path = tmp_path / "r.json"
        path.write_text(json.dumps({"head": [0.9]}))
        assert rates.resolve_rate({"file": str(path)}).head == (0.9,)
        with pytest.raises(ValueError):
            rates.resolve_rate(42)

    def test_rate_table(self, rate_half):
        tab = rates.rate_table(rate_half, 4)
        np.testing.assert_allclose(tab, [0.0, 0.5, 1.0, 1.0, 1.0])
