"""Time-domain realizations of the gap-signal predictor.

Three interchangeable realizations of the same transfer function
psi(i*w) = sum_k a_k (i*w)^(-k):

* polynomial-kernel convolution over a truncated history window, with the
  kernel K(t) = sum_k a_k t^(k-1)/(k-1)!;
* the eta-state form: reference constants eta_k (the iterated antiderivatives
  at a reference time t1) plus running iterated integrals of the observed
  samples, combined in closed form;
* eta-state with the constants estimated from finite observations by a linear
  solve (square: zero residual at the fit points; overdetermined: least
  squares).

The convolution form requires the signal to decay into the past; its
truncation is reported through a crude tail diagnostic |K(L) x(t-L)| * L
rather than hidden.  For large degree d the kernel grows factorially with the
lag, so the eta-state form is the practical realization; the convolution form
is kept as a direct demonstration for small d.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, simpson

from .approx import Approximant

__all__ = ["PredictorConfig", "ConvPrediction", "kernel_eval",
           "predict_convolution", "iterated_integrals", "EtaState",
           "predict_from_eta", "predict_eta_grid", "predict_from_eta_recursive",
           "EtaFit", "fit_eta", "find_left_root"]

COND_FLAG_THRESHOLD = 1e12


@dataclass(frozen=True)
class PredictorConfig:
    """Numerical settings for one predictor instance.

    history_length defaults to 10*T and is rejected below that guard; the
    truncated convolution is meaningless with less history.  quadrature_step
    defaults to 1e-3*T; it must also keep h * max|w| of the intended signals
    below ~0.1, which is the caller's responsibility (enforced per
    experiment, not here).
    """

    approximant: Approximant
    history_length: Optional[float] = None
    quadrature_step: Optional[float] = None

    def __post_init__(self):
        T = self.approximant.T
        if self.history_length is None:
            object.__setattr__(self, "history_length", 10.0 * T)
        if self.quadrature_step is None:
            object.__setattr__(self, "quadrature_step", 1e-3 * T)
        if self.history_length < 10.0 * T:
            raise ValueError(
                f"history_length {self.history_length} is below the 10*T guard")
        if self.quadrature_step <= 0:
            raise ValueError("quadrature_step must be positive")


class ConvPrediction(NamedTuple):
    y_hat: float
    tail_diag: float


def kernel_eval(a, t):
    """K(t) = sum_{k=1}^d a_k t^(k-1)/(k-1)! for t >= 0 (scalar or array)."""
    a = np.asarray(a, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("kernel is evaluated for nonnegative lags only")
    acc = np.full_like(t_arr, a[0] if len(a) else 0.0)
    term = np.ones_like(t_arr)
    for k in range(2, len(a) + 1):
        term = term * t_arr / (k - 1)
        acc = acc + a[k - 1] * term
    if np.ndim(t) == 0:
        return float(acc)
    return acc


def _uniform_step(times):
    times = np.asarray(times, dtype=float)
    if len(times) < 3:
        raise ValueError("need at least 3 samples")
    steps = np.diff(times)
    h = steps.mean()
    if h <= 0 or np.max(np.abs(steps - h)) > 1e-9 * abs(h):
        raise ValueError("sample times must be uniform (relative jitter <= 1e-9)")
    return float(h)


def predict_convolution(config: PredictorConfig, times, values) -> ConvPrediction:
    """Composite-Simpson approximation of int_{t-L}^{t} K(t-tau) x(tau) dtau
    at t = times[-1], over the uniform window provided.

    Returns the value together with the truncation indicator
    |K(L) * x(t-L)| * L.  The indicator is a crude diagnostic, not a bound:
    when it is large the window is too short (or the degree too high) for the
    truncated form to be trusted.
    """
    h = _uniform_step(times)
    values = np.asarray(values, dtype=float)
    if values.shape != np.shape(times):
        raise ValueError("times and values must have equal length")
    t = float(times[-1])
    span = t - float(times[0])
    if abs(span - config.history_length) > 1.5 * h:
        raise ValueError(
            f"sample window spans {span}, configured history_length is "
            f"{config.history_length}")
    lags = t - np.asarray(times, dtype=float)
    K = kernel_eval(config.approximant.a, np.abs(lags))
    y = float(simpson(K * values, dx=h))
    L = float(lags[0])
    tail = abs(K[0] * values[0]) * L
    return ConvPrediction(y_hat=y, tail_diag=tail)


def iterated_integrals(times, values, d: int) -> np.ndarray:
    """Running iterated integrals f_1..f_d from t1 = times[0].

    f_1 is the cumulative trapezoid of x, f_k the cumulative trapezoid of
    f_{k-1}; every f_k vanishes at t1.  Returns shape (d, len(times)).
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    h = _uniform_step(times)
    values = np.asarray(values, dtype=float)
    f = np.empty((d, len(values)))
    cur = values
    for k in range(d):
        cur = cumulative_trapezoid(cur, dx=h, initial=0.0)
        f[k] = cur
    return f


@dataclass(frozen=True, eq=False)
class EtaState:
    """Reference-time constants plus running integrals: everything the
    closed-form predictor needs for t >= t1.

    Completed states are immutable and safe to share across threads.
    """

    t1: float
    eta: np.ndarray
    times: np.ndarray
    values: np.ndarray
    f: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        for name in ("eta", "times", "values", "a"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "f", np.asarray(self.f, dtype=float))
        d = len(self.a)
        if self.eta.shape != (d,):
            raise ValueError("eta must have one entry per coefficient")
        if self.f.shape != (d, len(self.times)):
            raise ValueError("f must hold one trajectory per coefficient")
        if abs(self.times[0] - self.t1) > 1e-12 * max(1.0, abs(self.t1)):
            raise ValueError("trajectories must start at t1")

    @classmethod
    def from_window(cls, a, times, values, eta) -> "EtaState":
        """Build the state from a sampled window starting at t1 = times[0]."""
        a = np.asarray(a, dtype=float)
        f = iterated_integrals(times, values, len(a))
        return cls(t1=float(times[0]), eta=eta, times=times, values=values,
                   f=f, a=a)


def _eta_weights(d, delta):
    # w_j = delta^j / j!, j = 0..d-1
    w = np.empty((d,) + np.shape(delta))
    w[0] = 1.0
    for j in range(1, d):
        w[j] = w[j - 1] * delta / j
    return w


def predict_eta_grid(state: EtaState, t_eval) -> np.ndarray:
    """Vectorized closed-form prediction at each t in t_eval (all >= t1).

    Uses x_k(t) = sum_{l=1}^{k} eta_l (t-t1)^(k-l)/(k-l)! + f_k(t), the
    closed form obtained by unrolling the recursion
    x_k = eta_k + int_{t1}^{t} x_{k-1}; f_k between sample nodes is linearly
    interpolated.
    """
    t_eval = np.atleast_1d(np.asarray(t_eval, dtype=float))
    if np.any(t_eval < state.t1 - 1e-12 * max(1.0, abs(state.t1))):
        raise ValueError("eta-state predictions are defined for t >= t1 only")
    if np.any(t_eval > state.times[-1] + 1e-9):
        raise ValueError("f trajectories do not reach the requested time")
    d = len(state.a)
    delta = t_eval - state.t1
    w = _eta_weights(d, delta)
    y = np.zeros_like(t_eval)
    for k in range(1, d + 1):
        xk = np.interp(t_eval, state.times, state.f[k - 1])
        for l in range(1, k + 1):
            xk = xk + state.eta[l - 1] * w[k - l]
        y = y + state.a[k - 1] * xk
    return y


def predict_from_eta(state: EtaState, t: float) -> float:
    """Closed-form prediction at a single time t >= t1."""
    return float(predict_eta_grid(state, [t])[0])


def predict_from_eta_recursive(state: EtaState, t: float) -> float:
    """Prediction via the normative recursion x_k = eta_k + int x_{k-1},
    re-integrating the eta contributions numerically.

    Cross-check path for the closed form; agrees with predict_from_eta up to
    trapezoid error on the polynomial terms.
    """
    h = _uniform_step(state.times)
    t = float(t)
    if t < state.t1 - 1e-12:
        raise ValueError("eta-state predictions are defined for t >= t1 only")
    cur = state.values
    y = 0.0
    for k in range(1, len(state.a) + 1):
        cur = state.eta[k - 1] + cumulative_trapezoid(cur, dx=h, initial=0.0)
        y += state.a[k - 1] * np.interp(t, state.times, cur)
    return float(y)


@dataclass(frozen=True, eq=False)
class EtaFit:
    eta: np.ndarray
    residual: np.ndarray
    cond: float


def fit_eta(a, t1: float, fit_times, zeta, times, f) -> EtaFit:
    """Estimate the reference constants from finite observations.

    Solves M etabar = zeta - phi where
    M[m, l] = sum_{k>=l} a_k (t_m - t1)^(k-l)/(k-l)! and
    phi_m = sum_k a_k f_k(t_m).  Square systems (len(fit_times) == d)
    reproduce the observations exactly at the fit points; overdetermined ones
    are solved in least squares.  Columns are norm-equilibrated (M mixes
    factorial scales); the condition estimate of the equilibrated system is
    always reported and a warning is issued above 1e12.

    The caller must choose fit_times inside the observable window, i.e.
    t_m + T within the recorded samples when zeta_m = x(t_m + T).
    """
    a = np.asarray(a, dtype=float)
    d = len(a)
    fit_times = np.asarray(fit_times, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    times = np.asarray(times, dtype=float)
    f = np.asarray(f, dtype=float)
    if len(fit_times) < d:
        raise ValueError(f"need at least d={d} fit times, got {len(fit_times)}")
    if zeta.shape != fit_times.shape:
        raise ValueError("zeta must match fit_times")
    if np.any(np.diff(fit_times) <= 0) or fit_times[0] <= t1:
        raise ValueError("fit times must be strictly increasing and > t1")
    if np.any(fit_times > times[-1] + 1e-9):
        raise ValueError("fit times fall outside the recorded trajectories")

    delta = fit_times - t1
    w = _eta_weights(d, delta)            # w[j, m] = delta_m^j / j!
    M = np.zeros((len(fit_times), d))
    for l in range(1, d + 1):
        for k in range(l, d + 1):
            M[:, l - 1] += a[k - 1] * w[k - l]
    phi = np.zeros(len(fit_times))
    for k in range(d):
        phi += a[k] * np.interp(fit_times, times, f[k])
    rhs = zeta - phi

    scale = np.linalg.norm(M, axis=0)
    scale[scale == 0.0] = 1.0
    eta, _, rank, sv = np.linalg.lstsq(M / scale, rhs, rcond=None)
    eta = eta / scale
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    if rank < d or cond > COND_FLAG_THRESHOLD:
        warnings.warn(
            f"eta fit is near-singular (cond ~ {cond:.2e}); the fit times may "
            "be clustered", RuntimeWarning, stacklevel=2)
    residual = M @ eta - rhs
    return EtaFit(eta=eta, residual=residual, cond=cond)


def find_left_root(func: Callable[[float], float], lo: float, hi: float,
                   scan_points: int = 512) -> Optional[float]:
    """Leftmost root of func in [lo, hi], or None when the scan finds no sign
    change (the caller widens the window; gap-spectrum signals have
    infinitely many roots to the left).

    The window is scanned on a uniform lattice; the first bracket is refined
    by bisection to an interval of 1e-10.
    """
    if not hi > lo:
        raise ValueError("window must satisfy lo < hi")
    xs = np.linspace(lo, hi, scan_points)
    vals = np.array([func(x) for x in xs])
    for i in range(len(xs) - 1):
        if vals[i] == 0.0:
            return float(xs[i])
        if vals[i] * vals[i + 1] < 0.0:
            left, right = xs[i], xs[i + 1]
            fleft = vals[i]
            while right - left > 1e-10:
                mid = 0.5 * (left + right)
                fmid = func(mid)
                if fmid == 0.0:
                    return float(mid)
                if fleft * fmid < 0.0:
                    right = mid
                else:
                    left, fleft = mid, fmid
            return float(0.5 * (left + right))
    if vals[-1] == 0.0:
        return float(xs[-1])
    return None
