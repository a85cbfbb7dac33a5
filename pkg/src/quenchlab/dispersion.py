"""
Closed-form spectral theory of the spatially constant states: dispersion
polynomial, essential-spectrum curves, double roots and pinching, branch
points of the absolute spectrum, and linear spreading speeds.

The dispersion polynomial for the mode exp(lambda*t + nu*x + i*ell*y) about
a constant state with linear coefficient h_inf is

    d(lambda, nu) = -q*(q + h_inf) + c*nu - lambda,   q = nu^2 - k^2*ell^2,

with h_inf = -1 for the stable far field and h_inf = +1 on the unstable
plateau.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "DispersionParams",
    "DoubleRoot",
    "BranchCurve",
    "d_eval",
    "d_dnu",
    "nu_roots",
    "essential_curve",
    "weighted_essential_curve",
    "critical_points",
    "double_root",
    "all_double_roots",
    "pinching_check",
    "spreading_speed",
    "absolute_curve",
    "branch_point_track",
    "steady_cubic_roots",
    "NoSpreadingSpeed",
    "TrackingError",
]


class NoSpreadingSpeed(RuntimeError):
    """Raised when no pinched neutral double root exists (stable state)."""


class TrackingError(RuntimeError):
    """Raised when root continuation cannot disambiguate colliding roots."""


@dataclass(frozen=True)
class DispersionParams:
    k: float
    ell: int
    c: float
    h_inf: float = -1.0

    def __post_init__(self):
        if self.h_inf not in (-1.0, 1.0):
            raise ValueError("h_inf must be -1 or +1")


@dataclass(frozen=True)
class DoubleRoot:
    lam: complex
    nu: complex
    pinched: bool
    params: DispersionParams


@dataclass
class BranchCurve:
    """Sampled spectral curve: parameter values with associated lambda."""

    parameter: np.ndarray
    lam: np.ndarray
    label: str
    nu: np.ndarray | None = None
    pinched: np.ndarray | None = None

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["param", "Re_lambda", "Im_lambda", "Re_nu", "Im_nu", "pinched"])
            nu = self.nu if self.nu is not None else np.full(len(self.parameter), np.nan)
            pin = self.pinched if self.pinched is not None else [""] * len(self.parameter)
            for p, l, n, q in zip(self.parameter, self.lam, nu, pin):
                wr.writerow([repr(float(p)), repr(float(l.real)), repr(float(l.imag)),
                             repr(float(np.real(n))), repr(float(np.imag(n))), q])


def d_eval(lam: complex, nu: complex, params: DispersionParams) -> complex:
    q = nu * nu - (params.k * params.ell) ** 2
    return -q * (q + params.h_inf) + params.c * nu - lam


def d_dnu(lam: complex, nu: complex, params: DispersionParams) -> complex:
    """Partial derivative of d with respect to nu."""
    q = nu * nu - (params.k * params.ell) ** 2
    return -2.0 * nu * (2.0 * q + params.h_inf) + params.c


def _poly_coeffs(lam: complex, params: DispersionParams) -> list:
    """Coefficients of d(lam, .) as a quartic in nu, leading first."""
    K2 = (params.k * params.ell) ** 2
    h = params.h_inf
    return [-1.0, 0.0, 2.0 * K2 - h, params.c, -K2 * K2 + h * K2 - lam]


def nu_roots(lam: complex, params: DispersionParams) -> np.ndarray:
    """Four spatial roots of d(lam, nu) = 0, sorted by real part descending.

    Computed as companion-matrix eigenvalues (np.roots).
    """
    r = np.roots(_poly_coeffs(lam, params))
    return r[np.argsort(-r.real)]


def essential_curve(params: DispersionParams, m_range: np.ndarray) -> BranchCurve:
    """Essential spectrum lambda(m) for nu = i*m about the far field."""
    if params.h_inf != -1.0:
        raise ValueError("essential_curve is defined for the far field h_inf = -1")
    m = np.asarray(m_range, dtype=float)
    s = -m * m - (params.k * params.ell) ** 2
    lam = -s * (s - 1.0) + 1j * params.c * m
    return BranchCurve(parameter=m, lam=lam, label="essential", nu=1j * m)


def weighted_essential_curve(params: DispersionParams, eta: float,
                             m_range: np.ndarray) -> BranchCurve:
    """Essential spectrum of the weight-conjugated operator, nu = -eta + i*m."""
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    m = np.asarray(m_range, dtype=float)
    nu = -eta + 1j * m
    q = nu * nu - (params.k * params.ell) ** 2
    lam = -q * (q + params.h_inf) + params.c * nu
    return BranchCurve(parameter=m, lam=lam, label="essential-weighted", nu=nu)


def critical_points(params: DispersionParams) -> np.ndarray:
    """The (up to 3) critical points of d in nu: exact cubic roots."""
    K2 = (params.k * params.ell) ** 2
    return np.roots([4.0, 0.0, -(4.0 * K2 - 2.0 * params.h_inf), -params.c])


def double_root(params: DispersionParams, seed: complex,
                tol: float = 1e-12, max_iter: int = 60) -> DoubleRoot:
    """Newton-converge a double root (lambda, nu) from a nu seed.

    Solves d_dnu(nu) = 0 for nu by Newton iteration and sets lambda so that
    d = 0 exactly; flags pinching via :func:`pinching_check`.
    """
    K2 = (params.k * params.ell) ** 2
    h = params.h_inf
    nu = complex(seed)
    for _ in range(max_iter):
        q = nu * nu - K2
        g = -2.0 * nu * (2.0 * q + h) + params.c
        gp = -12.0 * nu * nu + (4.0 * K2 - 2.0 * h)
        if gp == 0:
            break
        step = g / gp
        nu -= step
        if abs(step) < tol * max(1.0, abs(nu)):
            break
    else:
        raise RuntimeError(f"double-root Newton did not converge; last nu={nu}")
    q = nu * nu - K2
    lam = -q * (q + h) + params.c * nu
    root = DoubleRoot(lam=lam, nu=nu, pinched=False, params=params)
    pinched = pinching_check(root)
    return DoubleRoot(lam=lam, nu=nu, pinched=pinched, params=params)


def all_double_roots(params: DispersionParams) -> list[DoubleRoot]:
    """All double roots of d, from the exact critical points of d_dnu."""
    return [double_root(params, nu0) for nu0 in critical_points(params)]


def _track_pair(pair: np.ndarray, lam0: complex, params: DispersionParams,
                rho_max: float = 1e4) -> np.ndarray:
    """Continue two nu-roots along lambda = lam0 + rho, rho -> rho_max."""
    cur = np.asarray(pair, dtype=complex)
    rho, step = 0.0, 1e-4
    while rho < rho_max:
        nxt = min(rho + step, rho_max)
        roots = np.roots(_poly_coeffs(lam0 + nxt, params))
        new, used = [], set()
        ok = True
        for cnu in cur:
            dists = np.array([np.inf if j in used else abs(roots[j] - cnu)
                              for j in range(4)])
            j = int(np.argmin(dists))
            others = np.delete(dists, j)
            if others.size and np.min(others) < 2.0 * dists[j]:
                ok = False  # ambiguous match: halve the step
                break
            used.add(j)
            new.append(roots[j])
        if not ok:
            step *= 0.5
            if step < 1e-14:
                raise TrackingError("root tracking could not disambiguate roots")
            continue
        cur = np.array(new)
        rho = nxt
        step *= 1.6
    return cur


def pinching_check(root: DoubleRoot) -> bool:
    """True iff the colliding roots split into opposite half-planes as
    lambda is pushed to +infinity along the real direction.

    The path carries a tiny imaginary offset so that symmetric collisions
    of conjugate root pairs on the real axis stay disambiguated; the
    half-plane outcome at large Re(lambda) is unaffected.
    """
    params = root.params
    scale = max(1.0, abs(root.lam))
    eps = 1e-7 * scale * (1.0 + 1.0j)
    roots = np.roots(_poly_coeffs(root.lam + eps, params))
    idx = np.argsort(np.abs(roots - root.nu))[:2]
    final = _track_pair(roots[idx], root.lam + eps, params)
    return bool(final[0].real * final[1].real < 0)


def _max_pinched(params: DispersionParams) -> DoubleRoot | None:
    """Most unstable pinched double root; pinching checked lazily by
    descending Re(lambda)."""
    K2 = (params.k * params.ell) ** 2
    h = params.h_inf
    cands = []
    for nu0 in critical_points(params):
        q = nu0 * nu0 - K2
        cands.append((-q * (q + h) + params.c * nu0, nu0))
    cands.sort(key=lambda t: -t[0].real)
    for lam0, nu0 in cands:
        r = double_root(params, nu0)
        if r.pinched:
            return r
    return None


def spreading_speed(ell: int, k: float, h_inf: float = 1.0,
                    c_bracket: tuple[float, float] = (1e-3, 10.0)
                    ) -> tuple[float, DoubleRoot]:
    """Linear spreading speed: largest c with a neutral pinched double root.

    Solves {d = 0, d_nu = 0, Re lambda = 0} over (c, Im lambda, nu) by
    bisection on the real part of the most unstable pinched branch point.
    """
    params_of = lambda c: DispersionParams(k=k, ell=ell, c=c, h_inf=h_inf)

    def mu(c: float) -> float:
        r = _max_pinched(params_of(c))
        if r is None:
            raise NoSpreadingSpeed("no pinched double root found")
        return r.lam.real

    lo, hi = c_bracket
    if mu(lo) <= 0.0 or mu(hi) >= 0.0:
        raise NoSpreadingSpeed(
            f"no positive spreading speed for ell={ell}, h_inf={h_inf}")
    c_star = brentq(mu, lo, hi, xtol=1e-13, rtol=8.9e-16)
    root = _max_pinched(params_of(c_star))
    return float(c_star), root


def absolute_curve(params: DispersionParams, gamma_range: np.ndarray,
                   start: DoubleRoot | None = None) -> BranchCurve:
    """Continuation of the absolute-spectrum curve from a branch point.

    Solves d(lambda, nu) = d(lambda, nu + i*gamma) = 0 along the offset
    parameter gamma, starting from the double root at gamma = 0.
    """
    if start is None:
        start = _max_pinched(params) or all_double_roots(params)[0]
    gammas = np.asarray(gamma_range, dtype=float)
    lam, nu = start.lam, start.nu
    lams, nus = [], []
    prev_gamma = 0.0
    for g in gammas:
        # predictor: the split pair stays centered, nu tracks the midpoint
        nu_guess = nu - 0.5j * (g - prev_gamma)
        lam_guess = lam
        lam, nu = _newton_absolute(lam_guess, nu_guess, g, params)
        lams.append(lam)
        nus.append(nu)
        prev_gamma = g
    return BranchCurve(parameter=gammas, lam=np.array(lams), label="absolute",
                       nu=np.array(nus))


def _newton_absolute(lam: complex, nu: complex, gamma: float,
                     params: DispersionParams, tol: float = 1e-12,
                     max_iter: int = 80) -> tuple[complex, complex]:
    for _ in range(max_iter):
        f1 = d_eval(lam, nu, params)
        f2 = d_eval(lam, nu + 1j * gamma, params)
        if abs(f1) + abs(f2) < tol:
            return lam, nu
        # unknowns (lam, nu); d(lam, .) has d/dlam = -1
        j11, j12 = -1.0, d_dnu(lam, nu, params)
        j21, j22 = -1.0, d_dnu(lam, nu + 1j * gamma, params)
        det = j11 * j22 - j12 * j21
        if det == 0:
            break
        dlam = (f1 * j22 - j12 * f2) / det
        dnu = (j11 * f2 - f1 * j21) / det
        lam -= dlam
        nu -= dnu
    raise RuntimeError(f"absolute-spectrum Newton failed at gamma={gamma}")


def branch_point_track(ell: int, k: float, c_range: np.ndarray,
                       h_inf: float = 1.0) -> tuple[BranchCurve, float]:
    """Track Re(lambda) of the most unstable pinched branch point over c and
    bisect the neutral crossing Re(lambda)=0."""
    cs = np.asarray(c_range, dtype=float)
    lams, nus, pins = [], [], []
    for c in cs:
        r = _max_pinched(DispersionParams(k=k, ell=ell, c=c, h_inf=h_inf))
        if r is None:
            raise NoSpreadingSpeed(f"no pinched branch point at c={c}")
        lams.append(r.lam)
        nus.append(r.nu)
        pins.append(True)
    lams = np.array(lams)
    curve = BranchCurve(parameter=cs, lam=lams, label="branch-point-track",
                        nu=np.array(nus), pinched=np.array(pins))
    re = lams.real
    sign_change = np.nonzero(re[:-1] * re[1:] < 0)[0]
    if sign_change.size == 0:
        raise ValueError("no neutral crossing inside c_range")
    i = int(sign_change[0])

    def f(c):
        return _max_pinched(DispersionParams(k=k, ell=ell, c=c, h_inf=h_inf)).lam.real

    c_neutral = brentq(f, cs[i], cs[i + 1], xtol=1e-12)
    return curve, float(c_neutral)


def steady_cubic_roots(c: float, f_prime: float) -> tuple[np.ndarray, dict]:
    """Roots of nu^3 + f' * nu - c and their counts by sign of the real part.

    Returns (roots, counts) with counts keyed 'positive'/'negative'/'neutral'.
    """
    roots = np.roots([1.0, 0.0, f_prime, -c])
    tol = 1e-12 * max(1.0, abs(c), abs(f_prime))
    counts = {
        "positive": int(np.sum(roots.real > tol)),
        "negative": int(np.sum(roots.real < -tol)),
        "neutral": int(np.sum(np.abs(roots.real) <= tol)),
    }
    return roots, counts
