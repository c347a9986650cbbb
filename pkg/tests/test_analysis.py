import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from qwalk.analysis import (
    SeriesReport,
    bloch_recovery,
    corner_decay_check,
    fidelity_series,
    hyperbola_match,
    hyperbola_model,
    loop_energy_series,
    lz_transfer_series,
    tunneling_displacement,
    variance_series,
    zitter_period,
)
from qwalk.core import PhaseProfile, Spinor, WalkState, evolve, make_initial, make_packet

PI = math.pi
HALF = Fraction(1, 2)

# first-run values, frozen as regression constants
BLOCH_PEAKS = {
    4: (8, 0.8789062499999988),
    8: (16, 0.9922027587890603),
    16: (32, 0.9999694826546994),
    32: (64, 0.9999999995343272),
}
LZ_MAX = {
    4: 0.21879153554673925,
    5: 0.34889373805814333,
    8: 0.09473138321338324,
    16: 0.03424957328382045,
    32: 0.010476966718033314,
}
HYPERBOLA_V = -0.5116971901539072
HYPERBOLA_U = -0.5970237390136344


def lz_run(p, width=10.0, kappa0=0.0, u_share=HALF):
    s = make_packet(0, width, kappa0, "plus")
    return evolve(s, 2 * p, phase=PhaseProfile.rational(1, p, u_share), grow=True)


class TestSeriesReport:
    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            SeriesReport("x", [0, 2, 1], [0.0, 1.0, 2.0])

    def test_rejects_mismatch(self):
        with pytest.raises(ValueError):
            SeriesReport("x", [0, 1], [0.0])

    def test_with_scalar(self):
        r = SeriesReport("x", [0, 1], [0.0, 1.0]).with_scalar(3, "k")
        assert r.extracted_scalar == 3.0 and r.scalar_name == "k"


class TestLoopEnergy:
    def test_first_steps(self, delta_run):
        eu, ev = loop_energy_series(delta_run["0"])
        assert eu.values[0] == 0.0 and ev.values[0] == 1.0
        assert eu.values[1] == pytest.approx(0.5, abs=1e-15)
        assert ev.values[1] == pytest.approx(0.5, abs=1e-15)

    @pytest.mark.parametrize("key", ["0", "2pi/32", "2pi/5"])
    def test_partition(self, delta_run, key):
        eu, ev = loop_energy_series(delta_run[key])
        assert np.abs(eu.values + ev.values - 1).max() < 1e-12


class TestZitter:
    def test_gradient_free_period(self, delta_run):
        eu, _ = loop_energy_series(delta_run["0"])
        cut = eu.m_values <= 40
        period = zitter_period(SeriesReport("e", eu.m_values[cut], eu.values[cut]))
        # band splitting at the zone centre is pi/2, i.e. a period of 4 steps
        assert period == pytest.approx(4.0, abs=0.2)

    @pytest.mark.parametrize("samples", [16, 41, 200])
    def test_synthetic_cosine(self, samples):
        m = np.arange(samples)
        period = zitter_period(SeriesReport("c", m, 0.3 + 0.1 * m / samples + np.cos(2 * PI * m / 4)))
        assert period == pytest.approx(4.0, abs=0.01)

    def test_strong_gradient_changes_period(self, delta_run):
        eu, _ = loop_energy_series(delta_run["2pi/5"])
        cut = eu.m_values <= 40
        period = zitter_period(SeriesReport("e", eu.m_values[cut], eu.values[cut]))
        assert abs(period - 4.0) > 0.5

    def test_errors(self):
        m = np.arange(20)
        with pytest.raises(ValueError):
            zitter_period(SeriesReport("c", m[:10], np.cos(m[:10])))
        with pytest.raises(ValueError):
            zitter_period(SeriesReport("c", m, np.ones(20)))
        with pytest.raises(ValueError):
            zitter_period(SeriesReport("c", m, 2.0 * m + 1))


class TestHyperbola:
    def test_model_values(self):
        assert hyperbola_model(0, 3, "u") == pytest.approx(1.0)
        assert hyperbola_model(0, 1, "v") == pytest.approx(1.0)
        assert hyperbola_model(0, 5, "v") == pytest.approx(-1.0)
        assert hyperbola_model(2, 4, "u") == pytest.approx(math.cos(PI / 4 - 0.5))

    def test_model_domain(self):
        with pytest.raises(ValueError):
            hyperbola_model(5, 5, "v")
        with pytest.raises(ValueError):
            hyperbola_model(0, 0, "v")
        with pytest.raises(ValueError):
            hyperbola_model(0, 4, "w")

    def _synthetic(self, fill):
        m = np.arange(71)
        n = np.arange(-70, 71)
        grid = np.zeros((71, n.size))
        for k in m[1:]:
            inside = np.abs(n) < k
            grid[k, inside] = fill(n[inside], k)
        return m, n, grid

    def _traj(self, grid):
        from qwalk.core import CoinOp, Trajectory

        z = np.zeros_like(grid)
        return Trajectory(np.arange(grid.shape[0]), -70, None, None, CoinOp.balanced(),
                          PhaseProfile.none(), z, grid)

    def test_self_match(self):
        _, _, grid = self._synthetic(lambda n, m: hyperbola_model(n, m, "v") ** 2)
        assert hyperbola_match(self._traj(grid), "v") == pytest.approx(1.0, abs=1e-12)

    def test_noise_uncorrelated(self):
        rng = np.random.default_rng(7)
        _, _, grid = self._synthetic(lambda n, m: rng.random(n.size))
        assert abs(hyperbola_match(self._traj(grid), "v")) < 0.1

    def test_regression_values(self, delta_run):
        t = delta_run["0"]
        assert hyperbola_match(t, "v") == pytest.approx(HYPERBOLA_V, abs=1e-9)
        assert hyperbola_match(t, "u") == pytest.approx(HYPERBOLA_U, abs=1e-9)

    def test_cone_fraction_bounds(self, delta_run):
        for bad in (0.0, 0.8):
            with pytest.raises(ValueError):
                hyperbola_match(delta_run["0"], "v", cone_fraction=bad)


class TestBloch:
    def test_fidelity_series_starts_at_one(self, delta_run):
        f = fidelity_series(delta_run["2pi/32"])
        assert f.values[0] == pytest.approx(1.0, abs=1e-14)
        assert np.all((f.values >= 0) & (f.values <= 1 + 1e-12))

    @pytest.mark.parametrize("p", sorted(BLOCH_PEAKS))
    def test_recovery(self, p):
        t = evolve(make_initial(0, Spinor.named("down"), (-70, 70)), 2 * p,
                   phase=PhaseProfile.rational(1, p))
        step, fid = bloch_recovery(t, p)
        assert step == BLOCH_PEAKS[p][0] == 2 * p
        assert fid == pytest.approx(BLOCH_PEAKS[p][1], abs=1e-12)

    def test_no_recovery_without_gradient(self, delta_run):
        f = fidelity_series(delta_run["0"])
        assert f.values[4:].max() <= 0.0625 + 1e-12

    def test_irrational_gradient_nearly_recovers(self):
        t = evolve(make_initial(0, Spinor.named("down"), (-70, 70)), 64,
                   phase=PhaseProfile.linear(2 * PI / 32 * (1 + 1e-3)))
        _, fid = bloch_recovery(t, 32)
        assert fid / BLOCH_PEAKS[32][1] > 0.9

    def test_needs_every_step(self):
        t = evolve(make_initial(0, Spinor.named("down"), (-20, 20)), 16,
                   phase=PhaseProfile.rational(1, 8), record_every=2)
        with pytest.raises(ValueError):
            bloch_recovery(t, 8)


class TestLandauZener:
    @pytest.mark.parametrize("p", sorted(LZ_MAX))
    def test_regression(self, p):
        r = lz_transfer_series(lz_run(p), 2 * PI / p)
        assert r.scalar_name == "max_transfer"
        assert r.extracted_scalar == pytest.approx(LZ_MAX[p], abs=1e-9)
        assert r.values[0] < 0.01

    def test_ordering(self):
        t = [lz_transfer_series(lz_run(p), 2 * PI / p).extracted_scalar for p in (5, 16, 32)]
        assert t[0] > t[1] > t[2]

    def test_constant_without_gradient(self):
        s = make_packet(0, 10.0, 0.4, "plus")
        t = evolve(s, 30, phase=PhaseProfile.none(), grow=True)
        r = lz_transfer_series(t, 0.0)
        assert np.abs(r.values - r.values[0]).max() < 1e-10

    def test_gauge_independence(self):
        # a v-only gradient acting on a chirped packet is the even-split run in disguise
        p = 8
        alpha = 2 * PI / p
        even = lz_run(p)
        s = make_packet(0, 10.0, 0.0, "plus")
        chirp = np.exp(0.25j * alpha * s.positions.astype(float) ** 2)
        s = WalkState(0, s.n_min, s.u * chirp, s.v * chirp)
        vonly = evolve(s, 2 * p, phase=PhaseProfile.rational(1, p), grow=True)
        a = lz_transfer_series(even, alpha).values
        b = lz_transfer_series(vonly, alpha).values
        assert np.abs(a - b).max() < 1e-12
        assert np.abs(even.intensity_total - vonly.intensity_total).max() < 1e-12

    def test_alpha_mismatch(self):
        with pytest.raises(ValueError):
            lz_transfer_series(lz_run(8), 2 * PI / 9)

    def test_needs_band_resolved_start(self, delta_run):
        with pytest.raises(ValueError):
            lz_transfer_series(delta_run["2pi/5"], 2 * PI / 5)


def _spread_oracle():
    """Asymptotic sigma/m for a lower-loop start from group velocities and band weights."""
    def weights(k):
        mat = (1 / math.sqrt(2)) * np.array(
            [[np.exp(1j * k), 1j * np.exp(1j * k)], [1j * np.exp(-1j * k), np.exp(-1j * k)]])
        vals, vecs = np.linalg.eig(mat)
        return np.angle(vals), np.abs(vecs[1, :]) ** 2

    def vg(k):
        return (math.sin(k) / math.sqrt(2)) / math.sqrt(1 - math.cos(k) ** 2 / 2)

    def moment(power):
        def f(k):
            phases, w = weights(k)
            return sum(wi * (math.copysign(1, ph) * vg(k)) ** power for ph, wi in zip(phases, w))
        return quad(f, -PI, PI, limit=200)[0] / (2 * PI)

    return math.sqrt(moment(2) - moment(1) ** 2)


class TestVariance:
    def test_ballistic_slope(self, delta_run):
        r = variance_series(delta_run["0"])
        c = _spread_oracle()
        assert c == pytest.approx(math.sqrt((1 - 1 / math.sqrt(2)) - (1 - 1 / math.sqrt(2)) ** 2), rel=1e-6)
        assert r.extracted_scalar == pytest.approx(c, rel=0.01)
        sigma = np.sqrt(r.values)
        m = r.m_values[20:].astype(float)
        fit = np.polyfit(m, sigma[20:], 1)
        resid = sigma[20:] - np.polyval(fit, m)
        r2 = 1 - resid.var() / sigma[20:].var()
        assert r2 > 0.999

    def test_bloch_breathing(self, delta_run):
        sigma = np.sqrt(variance_series(delta_run["2pi/32"]).values)
        assert sigma[64] < 0.2 * sigma[20:50].max()


def test_corner_decay(delta_run):
    for key in delta_run:
        assert corner_decay_check(delta_run[key]) < 1e-12


def test_corner_decay_needs_lower_start():
    t = evolve(make_initial(0, Spinor.named("up"), (-10, 10)), 5)
    with pytest.raises(ValueError):
        corner_decay_check(t)


@pytest.mark.parametrize("p", [4, 5, 6, 8])
def test_tunneling_displacement(p):
    t = evolve(make_initial(0, Spinor.named("down"), (-40, 40)), 2 * p,
               phase=PhaseProfile.rational(1, p))
    d = tunneling_displacement(t, p)
    assert 0.5 * p <= d <= 1.5 * p


@settings(max_examples=25, deadline=None)
@given(p=st.integers(3, 12), share=st.sampled_from([Fraction(0), HALF, Fraction(1)]))
def test_energy_partition_property(p, share):
    t = evolve(make_initial(0, Spinor.named("plus"), (-30, 30)), 25, phase=PhaseProfile.rational(1, p, share))
    eu, ev = loop_energy_series(t)
    assert np.abs(eu.values + ev.values - 1).max() < 1e-12
