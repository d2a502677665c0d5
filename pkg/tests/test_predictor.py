import math

import numpy as np
import pytest

from gap_predict.approx import Approximant, a_to_gamma, fit_approximant
from gap_predict.predictor import (EtaState, PredictorConfig, find_left_root,
                                   fit_eta, iterated_integrals, kernel_eval,
                                   predict_convolution, predict_eta_grid,
                                   predict_from_eta, predict_from_eta_recursive)
from gap_predict.signal import SpectrumSpec, exact_hk, sample_grid
from gap_predict.taper import TaperSpec

GAUSS03 = TaperSpec("gaussian", 0.3)


def make_approx(a, T=1.0, gap=1.0):
    """Wrap a raw coefficient vector in an Approximant for API-level tests."""
    a = np.asarray(a, dtype=float)
    gamma_c, gamma_s = a_to_gamma(a)
    return Approximant(T=T, omega_gap=gap, taper=GAUSS03, d=len(a),
                       gamma_c=gamma_c, gamma_s=gamma_s, a=a, eps2=1.0,
                       fit_nodes=64, dense_factor=8)


def tone_state(a, spec, t1, span, h):
    n = int(round(span / h)) + 1
    times = t1 + h * np.arange(n)
    values = sample_grid(spec, t1, h, n)
    eta = np.array([exact_hk(spec, k, t1) for k in range(1, len(a) + 1)])
    return EtaState.from_window(a, times, values, eta)


class TestKernel:
    def test_examples(self):
        assert kernel_eval([1.0], 17.3) == 1.0
        assert kernel_eval([0.0, 1.0], 3.0) == 3.0
        assert kernel_eval([1.0, 1.0, 1.0], 2.0) == pytest.approx(5.0, abs=1e-14)

    def test_rejects_negative_lag(self):
        with pytest.raises(ValueError):
            kernel_eval([1.0], -0.5)


class TestPredictConvolution:
    def test_zero_input(self):
        config = PredictorConfig(approximant=make_approx([1.0, 0.5]))
        times = np.linspace(-10.0, 0.0, 1001)
        pred = predict_convolution(config, times, np.zeros_like(times))
        assert pred.y_hat == 0.0
        assert pred.tail_diag == 0.0

    def test_constant_kernel_times_constant_signal(self):
        config = PredictorConfig(approximant=make_approx([1.0, 0.0]))
        times = np.linspace(-10.0, 0.0, 2001)
        pred = predict_convolution(config, times, np.full_like(times, 0.7))
        assert pred.y_hat == pytest.approx(0.7 * 10.0, rel=1e-12)
        assert pred.tail_diag == pytest.approx(0.7 * 10.0, rel=1e-12)

    def test_rejections(self):
        config = PredictorConfig(approximant=make_approx([1.0, 0.0]))
        with pytest.raises(ValueError):
            predict_convolution(config, [0.0, 1.0], [0.0, 0.0])
        bad_times = np.linspace(-10.0, 0.0, 101)
        bad_times[50] += 1e-5
        with pytest.raises(ValueError):
            predict_convolution(config, bad_times, np.zeros(101))
        with pytest.raises(ValueError):  # window shorter than history_length
            times = np.linspace(-5.0, 0.0, 501)
            predict_convolution(config, times, np.zeros(501))

    def test_small_degree_matches_frequency_oracle(self):
        # d=3 on a wide bump: the kernel grows only quadratically, so a long
        # window genuinely converges to sum_k a_k h_k(x)(t)
        spec = SpectrumSpec.from_bumps(1.0, [(2.0, 0.9, 1.0)])
        approx = fit_approximant(1.0, 1.0, GAUSS03, 3)
        L, h = 200.0, 1e-3
        config = PredictorConfig(approximant=approx, history_length=L,
                                 quadrature_step=h)
        t = 3.0
        n = int(round(L / h)) + 1
        times = t - L + h * np.arange(n)
        values = sample_grid(spec, times[0], h, n)
        pred = predict_convolution(config, times, values)
        oracle = sum(approx.a[k - 1] * exact_hk(spec, k, t) for k in range(1, 4))
        assert abs(pred.y_hat - oracle) <= max(1e-6, pred.tail_diag)
        assert abs(pred.y_hat - oracle) < 1e-3  # genuinely converged

    def test_high_degree_flags_truncation(self):
        # d=8 over a short window: the tail diagnostic must blow the whistle
        spec = SpectrumSpec.from_bumps(1.0, [(2.0, 0.9, 1.0)])
        approx = fit_approximant(1.0, 1.0, GAUSS03, 8)
        config = PredictorConfig(approximant=approx)  # L = 10*T
        t = 3.0
        n = int(round(10.0 / 1e-3)) + 1
        times = t - 10.0 + 1e-3 * np.arange(n)
        values = sample_grid(spec, times[0], 1e-3, n)
        pred = predict_convolution(config, times, values)
        oracle = sum(approx.a[k - 1] * exact_hk(spec, k, t) for k in range(1, 9))
        assert abs(pred.y_hat - oracle) <= max(1e-6, pred.tail_diag)
        assert pred.tail_diag > 1.0


class TestIteratedIntegrals:
    def test_polynomial_exactness(self):
        times = np.linspace(0.0, 2.0, 401)
        f = iterated_integrals(times, np.ones_like(times), 2)
        assert np.max(np.abs(f[0] - times)) < 1e-12       # trapezoid exact
        assert np.max(np.abs(f[1] - times ** 2 / 2)) < 1e-12
        assert f[0][0] == 0.0 and f[1][0] == 0.0

    def test_cosine_antiderivatives(self):
        h = 1e-3
        times = h * np.arange(3001)
        f = iterated_integrals(times, np.cos(times), 3)
        assert np.max(np.abs(f[0] - np.sin(times))) < 1e-6
        assert np.max(np.abs(f[1] - (1 - np.cos(times)))) < 1e-6

    def test_derivative_recovers_previous_level(self):
        h = 1e-3
        times = h * np.arange(2001)
        x = np.cos(2 * times) + 0.3 * np.sin(3 * times)
        f = iterated_integrals(times, x, 3)
        for k in range(3):
            lower = x if k == 0 else f[k - 1]
            deriv = np.diff(f[k]) / h
            mid = 0.5 * (lower[1:] + lower[:-1])
            assert np.max(np.abs(deriv - mid)) < 5e-3


class TestEtaPrediction:
    def test_collapse_at_reference_time(self):
        rng = np.random.default_rng(3)
        a = rng.uniform(-1, 1, 5)
        eta = rng.uniform(-1, 1, 5)
        times = np.linspace(2.0, 4.0, 501)
        state = EtaState.from_window(a, times, np.zeros_like(times), eta)
        expected = 0.0
        for k in range(5):
            expected += a[k] * eta[k]
        assert predict_from_eta(state, 2.0) == expected

    def test_hand_expansion_d2_zero_signal(self):
        a = np.array([0.7, -0.4])
        eta = np.array([1.3, 0.2])
        times = np.linspace(0.0, 3.0, 301)
        state = EtaState.from_window(a, times, np.zeros_like(times), eta)
        for t in (0.5, 1.7, 3.0):
            expected = a[0] * eta[0] + a[1] * (eta[1] + eta[0] * t)
            assert predict_from_eta(state, t) == pytest.approx(expected, abs=1e-12)

    def test_matches_frequency_oracle_on_tone(self):
        spec = SpectrumSpec.from_tones(1.0, [(2.0, 0.8 - 0.3j)])
        approx = fit_approximant(1.0, 1.0, GAUSS03, 4)
        state = tone_state(approx.a, spec, t1=0.25, span=5.0, h=2e-5)
        for t in (0.25, 1.0, 2.75, 5.25):
            oracle = sum(approx.a[k - 1] * exact_hk(spec, k, t)
                         for k in range(1, 5))
            assert predict_from_eta(state, t) == pytest.approx(oracle, abs=1e-8)

    def test_recursive_cross_check(self):
        spec = SpectrumSpec.from_tones(1.0, [(1.5, 1.0)])
        approx = fit_approximant(1.0, 1.0, GAUSS03, 4)
        state = tone_state(approx.a, spec, t1=0.0, span=4.0, h=1e-3)
        for t in (1.0, 2.5, 4.0):
            closed = predict_from_eta(state, t)
            recursive = predict_from_eta_recursive(state, t)
            assert recursive == pytest.approx(closed, abs=1e-5)

    def test_rejects_out_of_range_times(self):
        state = tone_state(np.array([1.0, 0.0]),
                           SpectrumSpec.from_tones(1.0, [(2.0, 1.0)]),
                           t1=0.0, span=1.0, h=1e-3)
        with pytest.raises(ValueError):
            predict_from_eta(state, -0.5)
        with pytest.raises(ValueError):
            predict_from_eta(state, 1.5)

    def test_shift_covariance(self):
        delta = 2.7
        omega, c = 2.0, 0.6 + 0.4j
        spec = SpectrumSpec.from_tones(1.0, [(omega, c)])
        shifted = SpectrumSpec.from_tones(
            1.0, [(omega, c * np.exp(-1j * omega * delta))])
        approx = fit_approximant(1.0, 1.0, GAUSS03, 3)
        state = tone_state(approx.a, spec, t1=0.0, span=3.0, h=1e-4)
        state_shift = tone_state(approx.a, shifted, t1=delta, span=3.0, h=1e-4)
        t_eval = np.array([0.0, 0.9, 2.4])
        y = predict_eta_grid(state, t_eval)
        y_shift = predict_eta_grid(state_shift, t_eval + delta)
        assert np.max(np.abs(y - y_shift)) < 1e-10


class TestFitEta:
    def setup_method(self):
        self.spec = SpectrumSpec.from_tones(1.0, [(2.0, 1.0)])
        self.approx = fit_approximant(1.0, 1.0, GAUSS03, 6)
        h = 1e-4
        n = int(round(8.0 / h)) + 1
        self.times = h * np.arange(n)
        self.values = sample_grid(self.spec, 0.0, h, n)
        self.f = iterated_integrals(self.times, self.values, 6)

    def test_round_trip_recovers_eta(self):
        rng = np.random.default_rng(42)
        eta_true = rng.standard_normal(6)
        state = EtaState(t1=0.0, eta=eta_true, times=self.times,
                         values=self.values, f=self.f, a=self.approx.a)
        fit_times = np.linspace(0.5, 6.5, 6)
        zeta = predict_eta_grid(state, fit_times)
        fit = fit_eta(self.approx.a, 0.0, fit_times, zeta, self.times, self.f)
        assert np.max(np.abs(fit.eta - eta_true)) <= 1e-8 * np.max(np.abs(eta_true))
        assert np.max(np.abs(fit.residual)) <= 1e-10 * np.linalg.norm(zeta)
        assert fit.cond < 1e12

    def test_overdetermined_residual_within_tone_bound(self):
        # zeta are true future values; feasibility is guaranteed because the
        # exact eta already satisfies the tone error bound at every fit point
        fit_times = np.linspace(0.5, 6.5, 12)
        zeta = np.array([float(np.cos(2.0 * (tm + 1.0))) for tm in fit_times])
        fit = fit_eta(self.approx.a, 0.0, fit_times, zeta, self.times, self.f)
        r_at_tone = math.exp(-(0.3 * 2.0) ** 2)
        bound = 2.0 * (abs(1.0 - r_at_tone) + self.approx.eps2)
        assert np.max(np.abs(fit.residual)) <= bound

    def test_validations(self):
        with pytest.raises(ValueError):
            fit_eta(self.approx.a, 0.0, [0.5, 0.4, 1.0, 2.0, 3.0, 4.0],
                    np.zeros(6), self.times, self.f)
        with pytest.raises(ValueError):
            fit_eta(self.approx.a, 0.0, [0.5, 1.0], np.zeros(2),
                    self.times, self.f)
        with pytest.raises(ValueError):
            fit_eta(self.approx.a, 0.0, np.linspace(0.5, 20.0, 6),
                    np.zeros(6), self.times, self.f)

    def test_warns_on_clustered_fit_times(self):
        fit_times = 1.0 + 1e-9 * np.arange(6)
        zeta = np.zeros(6)
        with pytest.warns(RuntimeWarning):
            fit_eta(self.approx.a, 0.0, fit_times, zeta, self.times, self.f)


class TestFindLeftRoot:
    def test_cosine_window_without_root(self):
        assert find_left_root(math.cos, -7.0, -5.0) is None

    def test_cosine_window_with_root(self):
        root = find_left_root(math.cos, -8.0, -7.0)
        assert root == pytest.approx(math.pi / 2 - 3 * math.pi, abs=1e-10)

    def test_sine_root_at_origin(self):
        root = find_left_root(math.sin, -0.5, 0.5)
        assert root == pytest.approx(0.0, abs=1e-10)

    def test_leftmost_of_many(self):
        root = find_left_root(math.cos, -8.0, 0.0)
        assert root == pytest.approx(math.pi / 2 - 3 * math.pi, abs=1e-10)

    def test_validates_window(self):
        with pytest.raises(ValueError):
            find_left_root(math.cos, 1.0, 1.0)

    def test_anchors_iterated_integral_representation(self):
        # the lower-limit form of h_1 with R_1 a root of h_1 itself: for
        # x = cos, h_1 = sin, and integrating from a root of sin recovers sin
        spec = SpectrumSpec.from_tones(1.0, [(1.0, 1.0)])
        r1 = find_left_root(lambda s: exact_hk(spec, 1, s), -7.0, -5.0)
        assert r1 == pytest.approx(-2 * math.pi, abs=1e-10)
        h = 1e-4
        t = 1.2
        n = int(round((t - r1) / h)) + 1
        times = r1 + h * np.arange(n)
        f1 = iterated_integrals(times, np.cos(times), 1)[0]
        assert f1[-1] == pytest.approx(exact_hk(spec, 1, times[-1]), abs=1e-6)


class TestPredictorConfig:
    def test_defaults(self):
        approx = make_approx([1.0, 0.0], T=2.0)
        config = PredictorConfig(approximant=approx)
        assert config.history_length == 20.0
        assert config.quadrature_step == pytest.approx(2e-3)

    def test_history_guard(self):
        approx = make_approx([1.0, 0.0], T=2.0)
        with pytest.raises(ValueError):
            PredictorConfig(approximant=approx, history_length=5.0)
        with pytest.raises(ValueError):
            PredictorConfig(approximant=approx, quadrature_step=-1.0)
