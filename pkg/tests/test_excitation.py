import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from obslab.excitation import (EXCITED, NOT_EXCITED, ExcitationError, gram_min_eig, gram_window,
                               interval_excitation, phi_signal)
from obslab.numerics import Trace

DT = 1e-3


def phi_trace(a, b, dt=DT, t0=0.0):
    return Trace(dt, t0, {"phi1": np.asarray(a, float), "phi2": np.asarray(b, float)})


def x2hat_trace(values, dt=DT):
    return Trace(dt, 0.0, {"obs.x2hat": np.asarray(values, float)})


def sine_phi(duration, vartheta=50.0):
    t = np.arange(int(round(duration / DT)) + 1) * DT
    return phi_signal(x2hat_trace(np.sin(t)), "obs.x2hat", vartheta)


class TestPhiSignal:
    def test_zero(self):
        phi = phi_signal(x2hat_trace(np.zeros(5)), "obs.x2hat", 50.0)
        assert not phi["phi1"].any() and not phi["phi2"].any()

    def test_saturated(self):
        phi = phi_signal(x2hat_trace(np.full(5, 2.0)), "obs.x2hat", 50.0)
        np.testing.assert_array_equal(phi["phi1"], 2.0)
        np.testing.assert_allclose(phi["phi2"], 1.0, atol=1e-12)

    def test_odd(self):
        v = np.linspace(-1, 1, 21)
        a = phi_signal(x2hat_trace(v), "obs.x2hat", 5.0)
        b = phi_signal(x2hat_trace(-v), "obs.x2hat", 5.0)
        np.testing.assert_array_equal(a["phi2"], -b["phi2"])

    def test_missing_channel_named(self):
        with pytest.raises(ExcitationError, match="sm.x2hat"):
            phi_signal(x2hat_trace([0.0]), "sm.x2hat", 50.0)


class TestGramWindow:
    def test_constant(self):
        n = 2001
        G = gram_window(phi_trace(np.ones(n), np.zeros(n)), 0.0, 2.0)
        np.testing.assert_allclose(G, [[2.0, 0.0], [0.0, 0.0]], atol=1e-12)
        assert gram_min_eig(G) == 0.0

    def test_zero(self):
        n = 101
        np.testing.assert_array_equal(gram_window(phi_trace(np.zeros(n), np.zeros(n)), 0.0, 0.1), np.zeros((2, 2)))

    def test_alternating(self):
        n = 2001
        first = np.arange(n) < n // 2
        G = gram_window(phi_trace(first.astype(float), (~first).astype(float)), 0.0, 2.0)
        np.testing.assert_allclose(G, np.diag([1.0, 1.0]), atol=2 * DT)
        assert abs(G[0, 1]) < 1e-12

    def test_out_of_range(self):
        with pytest.raises(ExcitationError):
            gram_window(phi_trace(np.ones(11), np.ones(11)), 0.0, 1.0)

    @settings(max_examples=25)
    @given(st.integers(min_value=0, max_value=2**31), st.integers(1, 999), st.integers(1000, 1999))
    def test_additivity_and_psd(self, seed, ia, ib):
        rng = np.random.default_rng(seed)
        phi = phi_trace(rng.normal(size=2001), rng.normal(size=2001))
        a, b = ia * DT, ib * DT
        whole = gram_window(phi, a, 2.0 - a)
        split = gram_window(phi, a, b - a) + gram_window(phi, b, 2.0 - b)
        np.testing.assert_allclose(whole, split, rtol=1e-12, atol=1e-12)
        assert abs(whole[0, 1] - whole[1, 0]) <= 1e-12 * np.abs(whole).max()
        assert gram_min_eig(whole) >= -1e-12 * np.trace(whole)


class TestIntervalExcitation:
    def test_constant_not_excited(self):
        phi = phi_signal(x2hat_trace(np.full(10001, 2.0)), "obs.x2hat", 50.0)
        rep = interval_excitation(phi, 2.0, 2.0)
        assert rep.verdict == NOT_EXCITED
        assert len(rep.windows) == 5
        for t0, T, lam in rep.windows:
            # rank one up to roundoff
            G = gram_window(phi, t0, T)
            assert 0.0 <= lam <= 1e-12 * np.trace(G)

    def test_sine_excited(self):
        window = 2 * math.pi
        rep = interval_excitation(sine_phi(4 * window + 0.1), window, window)
        assert rep.verdict == EXCITED
        assert len(rep.windows) == 4
        assert np.all(rep.lambdas > 1e-3)
        assert rep.average_min_eig > 0

    def test_doubling_stride(self):
        phi = sine_phi(20.0)
        one = interval_excitation(phi, 1.5, 2.0)
        two = interval_excitation(phi, 1.5, 4.0)
        assert [w for w in two.windows] == one.windows[::2][:len(two.windows)]

    def test_sign_flip_invariance(self):
        phi = sine_phi(10.0)
        neg = phi_trace(-phi["phi1"], -phi["phi2"])
        a = interval_excitation(phi, 2.0, 2.0).lambdas
        b = interval_excitation(neg, 2.0, 2.0).lambdas
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)

    def test_windows_ordered_non_overlapping(self):
        rep = interval_excitation(sine_phi(10.0), 1.0, 1.5)
        for (t0, T, _), (t1, _, _) in zip(rep.windows, rep.windows[1:]):
            assert t1 >= t0 + T - 1e-12

    def test_overlap_rejected(self):
        with pytest.raises(ExcitationError, match="stride"):
            interval_excitation(sine_phi(10.0), 2.0, 1.0)

    def test_short_trace_rejected(self):
        with pytest.raises(ExcitationError, match="shorter"):
            interval_excitation(sine_phi(1.0), 2.0, 2.0)
