"""Rational-polynomial approximation of the tapered complex sinusoid.

Builds psi(i*w) = sum_k a_k (i*w)^(-k), a real-coefficient polynomial in
1/(i*w), approximating exp(i*w*T) * r_nu(w) uniformly on |w| >= omega_gap,
and certifies the achieved sup error on a dense grid.

The fit is a parity-constrained discrete least squares in u = 1/w: the real
part of the target (cos * r_nu, even) is matched with even powers of u only,
the imaginary part (sin * r_nu, odd) with odd powers only.  The sign mapping
between the parity coefficients (gamma_c, gamma_s) and the real coefficients
a_k of the powers of 1/(i*w) is

    k = 2m:     a_k = (-1)^m * gamma_c_k
    k = 2m+1:   a_k = -(-1)^m * gamma_s_k
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .taper import TaperSpec, eval_taper, taper_from_dict, taper_to_dict

__all__ = ["Approximant", "chebyshev_grid", "fit_parity_ls", "gamma_to_a",
           "a_to_gamma", "eval_psi", "sup_error", "certify_sup_error",
           "fit_approximant", "approximant_to_dict", "approximant_from_dict",
           "save_approximant", "load_approximant"]


@dataclass(frozen=True, eq=False)
class Approximant:
    """An immutable fitted approximant with its certified sup error.

    Coefficient arrays are indexed so that position k-1 holds the coefficient
    of power k; gamma_c is zero at odd k and gamma_s is zero at even k.
    """

    T: float
    omega_gap: float
    taper: TaperSpec
    d: int
    gamma_c: np.ndarray
    gamma_s: np.ndarray
    a: np.ndarray
    eps2: float
    fit_nodes: int
    dense_factor: int

    def __post_init__(self):
        if self.T <= 0 or self.omega_gap <= 0:
            raise ValueError("T and omega_gap must be positive")
        if self.d < 1:
            raise ValueError("degree d must be a positive integer")
        for name in ("gamma_c", "gamma_s", "a"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if arr.shape != (self.d,):
                raise ValueError(f"{name} must have length d={self.d}")
        _check_parity(self.gamma_c, self.gamma_s)
        if self.eps2 < 0:
            raise ValueError("eps2 must be nonnegative")


def chebyshev_grid(omega_gap: float, n: int) -> np.ndarray:
    """Frequencies w_j = 1/u_j for the n Chebyshev (extreme) points u_j of
    [-1/omega_gap, 1/omega_gap], with the u = 0 node dropped when n is odd.

    The points are generated through a sine identity so the grid is exactly
    symmetric in sign; all returned frequencies satisfy |w| >= omega_gap.
    """
    if n < 2:
        raise ValueError(f"need at least 2 nodes, got {n}")
    if omega_gap <= 0:
        raise ValueError("omega_gap must be positive")
    j = np.arange(-(n - 1), n, 2)
    u = np.sin(0.5 * np.pi * j / (n - 1)) / omega_gap
    u = u[u != 0.0]
    return np.sort(1.0 / u)


def _check_parity(gamma_c, gamma_s):
    d = len(gamma_c)
    ks = np.arange(1, d + 1)
    if np.any(gamma_c[ks % 2 == 1] != 0.0):
        raise ValueError("gamma_c must vanish at odd k")
    if np.any(gamma_s[ks % 2 == 0] != 0.0):
        raise ValueError("gamma_s must vanish at even k")


def _scaled_lstsq(A, b):
    # Column scaling by grid norms keeps high powers of u workable in double
    # precision; the solve itself is an orthogonal-factorization least squares.
    scale = np.linalg.norm(A, axis=0)
    if np.any(scale == 0.0):
        raise ValueError("degenerate grid: zero basis column")
    coef, _, rank, _ = np.linalg.lstsq(A / scale, b, rcond=None)
    if rank < A.shape[1]:
        raise ValueError(
            f"rank-deficient least-squares system (rank {rank} < {A.shape[1]}); "
            "the fit grid is degenerate")
    return coef / scale


def fit_parity_ls(T: float, taper: TaperSpec, omega_gap: float, d: int,
                  grid: np.ndarray):
    """Parity-constrained least-squares fit on a frequency grid.

    Matches sum_k gamma_c_k w^(-k) (even k only) to cos(T*w) * r_nu(w) and
    sum_k gamma_s_k w^(-k) (odd k only) to sin(T*w) * r_nu(w); in u = 1/w this
    is ordinary polynomial least squares with zero constant term and fixed
    parity.  Returns (gamma_c, gamma_s) as length-d arrays.
    """
    if d < 2:
        raise ValueError("d must be >= 2: d=1 leaves the even-parity target "
                         "with no basis function")
    grid = np.asarray(grid, dtype=float)
    if len(grid) < 4 * d:
        raise ValueError(f"grid has {len(grid)} nodes; need at least 4*d = {4 * d}")
    u = 1.0 / grid
    r = eval_taper(taper, grid)
    ks_even = np.arange(2, d + 1, 2)
    ks_odd = np.arange(1, d + 1, 2)
    gamma_c = np.zeros(d)
    gamma_s = np.zeros(d)
    gamma_c[ks_even - 1] = _scaled_lstsq(
        u[:, None] ** ks_even[None, :], np.cos(T * grid) * r)
    gamma_s[ks_odd - 1] = _scaled_lstsq(
        u[:, None] ** ks_odd[None, :], np.sin(T * grid) * r)
    return gamma_c, gamma_s


def gamma_to_a(gamma_c, gamma_s) -> np.ndarray:
    """Map parity coefficients to the real coefficients of powers of 1/(i*w).

    Rejects inputs violating the parity pattern.  The mapping only flips
    signs, so it is exact and involutive with :func:`a_to_gamma`.
    """
    gamma_c = np.asarray(gamma_c, dtype=float)
    gamma_s = np.asarray(gamma_s, dtype=float)
    if gamma_c.shape != gamma_s.shape:
        raise ValueError("gamma_c and gamma_s must have equal length")
    _check_parity(gamma_c, gamma_s)
    d = len(gamma_c)
    a = np.zeros(d)
    for k in range(1, d + 1):
        if k % 2 == 0:
            a[k - 1] = (-1.0) ** (k // 2) * gamma_c[k - 1]
        else:
            a[k - 1] = -((-1.0) ** ((k - 1) // 2)) * gamma_s[k - 1]
    return a


def a_to_gamma(a):
    """Inverse of :func:`gamma_to_a` (exact; integer sign flips only)."""
    a = np.asarray(a, dtype=float)
    d = len(a)
    gamma_c = np.zeros(d)
    gamma_s = np.zeros(d)
    for k in range(1, d + 1):
        if k % 2 == 0:
            gamma_c[k - 1] = (-1.0) ** (k // 2) * a[k - 1]
        else:
            gamma_s[k - 1] = -((-1.0) ** ((k - 1) // 2)) * a[k - 1]
    return gamma_c, gamma_s


def eval_psi(a, omega):
    """Evaluate psi(i*omega) = sum_k a_k (i*omega)^(-k) by Horner recurrence
    in 1/(i*omega).  omega may be a scalar or an array; omega = 0 is rejected
    (it is a pole of every basis function).
    """
    om = np.asarray(omega, dtype=float)
    if np.any(om == 0.0):
        raise ValueError("psi has a pole at omega = 0")
    w = 1.0 / (1j * om)
    res = np.zeros_like(w)
    for coeff in np.asarray(a, dtype=float)[::-1]:
        res = (res + coeff) * w
    if np.isscalar(omega) or np.ndim(omega) == 0:
        return complex(res)
    return res


def certify_sup_error(T: float, omega_gap: float, taper: TaperSpec, a,
                      fit_nodes: int, dense_factor: int = 8) -> float:
    """Grid-certified sup of |exp(i*w*T) r_nu(w) - psi(i*w)| over |w| >= gap.

    The evaluation set is a Chebyshev grid in u = 1/w with
    dense_factor*(fit_nodes-1)+1 nodes, which contains the fit grid.  Beyond
    the innermost node (|u| <= u_min, i.e. the far frequency tail) the error
    is folded in through the monotone bound
    sum_k |a_k| u_min^k + r_nu(1/u_min); both target and psi vanish at u = 0.
    """
    a = np.asarray(a, dtype=float)
    if dense_factor < 1:
        raise ValueError("dense_factor must be >= 1")
    n_dense = dense_factor * (fit_nodes - 1) + 1
    om = chebyshev_grid(omega_gap, n_dense)
    target = np.exp(1j * om * T) * eval_taper(taper, om)
    if len(a):
        err = np.abs(target - eval_psi(a, om))
    else:
        err = np.abs(target)
    u_min = 1.0 / np.max(np.abs(om))
    tail = float(np.sum(np.abs(a) * u_min ** np.arange(1, len(a) + 1)))
    tail += float(eval_taper(taper, 1.0 / u_min))
    return max(float(err.max()), tail)


def sup_error(approx: Approximant, dense_factor: int = 8) -> float:
    """Certified sup error of a fitted approximant at the given density."""
    return certify_sup_error(approx.T, approx.omega_gap, approx.taper,
                             approx.a, approx.fit_nodes, dense_factor)


def fit_approximant(T: float, omega_gap: float, taper: TaperSpec, d: int,
                    fit_nodes: int | None = None,
                    dense_factor: int = 8) -> Approximant:
    """Fit and certify an approximant; pure function of its arguments.

    fit_nodes defaults to max(8*d, 64), at least 4x oversampling of the
    largest basis function.
    """
    if fit_nodes is None:
        fit_nodes = max(8 * d, 64)
    grid = chebyshev_grid(omega_gap, fit_nodes)
    gamma_c, gamma_s = fit_parity_ls(T, taper, omega_gap, d, grid)
    a = gamma_to_a(gamma_c, gamma_s)
    eps2 = certify_sup_error(T, omega_gap, taper, a, fit_nodes, dense_factor)
    return Approximant(T=T, omega_gap=omega_gap, taper=taper, d=d,
                       gamma_c=gamma_c, gamma_s=gamma_s, a=a, eps2=eps2,
                       fit_nodes=fit_nodes, dense_factor=dense_factor)


def approximant_to_dict(approx: Approximant) -> dict:
    return {
        "T": approx.T,
        "omega_gap": approx.omega_gap,
        "taper": taper_to_dict(approx.taper),
        "d": approx.d,
        "gamma_c": approx.gamma_c.tolist(),
        "gamma_s": approx.gamma_s.tolist(),
        "a": approx.a.tolist(),
        "eps2": approx.eps2,
        "fit_nodes": approx.fit_nodes,
        "dense_factor": approx.dense_factor,
    }


def approximant_from_dict(data: dict) -> Approximant:
    return Approximant(
        T=float(data["T"]),
        omega_gap=float(data["omega_gap"]),
        taper=taper_from_dict(data["taper"]),
        d=int(data["d"]),
        gamma_c=np.asarray(data["gamma_c"], dtype=float),
        gamma_s=np.asarray(data["gamma_s"], dtype=float),
        a=np.asarray(data["a"], dtype=float),
        eps2=float(data["eps2"]),
        fit_nodes=int(data["fit_nodes"]),
        dense_factor=int(data["dense_factor"]),
    )


def save_approximant(approx: Approximant, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(approximant_to_dict(approx), fh, indent=2)
        fh.write("\n")


def load_approximant(path) -> Approximant:
    with open(path, "r", encoding="utf-8") as fh:
        return approximant_from_dict(json.load(fh))
