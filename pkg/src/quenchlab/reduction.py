"""
Lyapunov-Schmidt reduction at the transverse O(2)-Hopf instability.

Solves the quadratic-correction profiles phi_ij, evaluates the cubic
normal-form coefficients theta_1 and theta_2, classifies the bifurcation
(types 1-4) and emits branch predictions c_os(a), c_cb(a) together with
the leading-order patterned fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .grid import ModalProfile, apply_dell, weight_profile
from .linop import HopfData, HypothesisFailure, assemble_modal
from .model import FrontProfile, ModelSpec, f_derivs, trivial_front

__all__ = [
    "PhiSet",
    "LSReport",
    "PHI_TAGS",
    "solve_phi",
    "solve_phi_set",
    "theta_coeffs",
    "classify",
    "ls_report",
    "predict_branches",
    "u_os_field",
    "u_cb_field",
    "normal_form_theta1",
    "report_lines",
]

# tag -> (ell_tau, ell_y, rhs kind); rhs kinds: half p^2, half |p|^2,
# half conj(p)^2.  The quadratic mode content of w(u0).
PHI_TAGS = {
    "aa": (2, 2, "half_p2"),
    "ab": (2, 0, "half_p2"),
    "abbar": (0, 2, "half_abs2"),
    "aabar": (0, 0, "half_abs2"),
    "bb": (2, -2, "half_p2"),
    "bbbar": (0, 0, "half_abs2"),
    "abarb": (0, -2, "half_abs2"),
    "abarabar": (-2, -2, "half_pbar2"),
    "abarbbar": (-2, 0, "half_pbar2"),
    "bbarbbar": (-2, 2, "half_pbar2"),
}


@dataclass
class PhiSet:
    """Quadratic corrections, one representative per distinct mode tag."""

    phi_aa: ModalProfile    # (ell_tau, ell_y) = (2, 2)
    phi_aabar: ModalProfile  # (0, 0)
    phi_ab: ModalProfile    # (2, 0)
    phi_abbar: ModalProfile  # (0, 2)
    residuals: dict


@dataclass
class LSReport:
    theta1: complex
    theta2: complex
    alpha: float
    beta: float
    bif_type: object  # 1..4 or "degenerate"
    os_direction: str  # "subcritical" (c < c*) or "supercritical" (c > c*)
    cb_direction: str
    c_star: float
    omega_star: float
    mu_prime: float
    # c(a) = c_star + coeff * a^2
    c_os_coeff: float
    c_cb_coeff: float
    message: str = ""


def _rhs_profile(kind: str, hopf: HopfData, model: ModelSpec,
                 front: FrontProfile, ell_y: int) -> np.ndarray:
    grid = hopf.grid
    fuu = np.asarray(
        f_derivs(grid.x_nodes, front.values, model, 2), dtype=float)
    p = hopf.p
    if kind == "half_p2":
        quad = 0.5 * fuu * p * p
    elif kind == "half_abs2":
        quad = 0.5 * fuu * (p * np.conj(p))
    elif kind == "half_pbar2":
        quad = 0.5 * fuu * np.conj(p) * np.conj(p)
    else:
        raise ValueError(f"unknown rhs kind {kind!r}")
    return -apply_dell(grid, ell_y, quad)


def solve_phi(pair_tag: str, hopf: HopfData, model: ModelSpec,
              front: FrontProfile | None = None,
              res_tol: float = 1e-9) -> ModalProfile:
    """Solve the quadratic-correction system for one mode tag.

    The system is A phi = rhs with A = i*ell_tau*omega* I - L_{ell_y}(c*),
    assembled in the weighted space and unweighted afterwards.  The
    singular (0, 0) block is solved with a bordered system enforcing zero
    mean, the discrete version of the zero-mass codomain restriction.
    """
    if pair_tag not in PHI_TAGS:
        raise ValueError(f"unknown phi tag {pair_tag!r}")
    ell_tau, ell_y, kind = PHI_TAGS[pair_tag]
    grid = hopf.grid
    front = front if front is not None else trivial_front(grid)
    w = weight_profile(grid, hopf.eta).values
    op = assemble_modal(abs(ell_y), hopf.c_star, hopf.eta, model, front, grid)
    n = grid.n_x
    A = 1j * ell_tau * hopf.omega_star * np.eye(n) - op.matrix

    rhs = _rhs_profile(kind, hopf, model, front, ell_y)
    rhs_w = w * rhs

    if ell_tau == 0 and ell_y == 0:
        # Bordered solve.  The unweighted block has exact zero column sums
        # (left null vector 1), which conjugates to 1/w; the border column
        # 1/w is transversal to the range and the extra row pins the plain
        # mean of the unweighted solution.
        B = np.zeros((n + 1, n + 1), dtype=complex)
        B[:n, :n] = A
        B[:n, n] = 1.0 / w
        B[n, :n] = (1.0 / w) / n
        b = np.concatenate([rhs_w, [0.0]])
        lu = sla.lu_factor(B)
        sol = sla.lu_solve(lu, b)
        for _ in range(4):  # iterative refinement for the stiff D^2 block
            r = b - B @ sol
            if np.linalg.norm(r) <= 1e-13 * max(1.0, np.linalg.norm(b)):
                break
            sol += sla.lu_solve(lu, r)
        phi_w = sol[:n]
    else:
        try:
            lu = sla.lu_factor(A)
        except sla.LinAlgError as exc:
            raise HypothesisFailure(
                f"resonant quadratic mode {pair_tag}: {exc}") from exc
        phi_w = sla.lu_solve(lu, rhs_w)
        for _ in range(4):
            r = rhs_w - A @ phi_w
            if np.linalg.norm(r) <= 1e-13 * max(1.0, np.linalg.norm(rhs_w)):
                break
            phi_w += sla.lu_solve(lu, r)

    # backward error: the forward residual carries an unavoidable factor
    # eps * ||A|| * ||phi|| with ||A|| ~ xi_max^4 on fine grids
    res = np.linalg.norm(A @ phi_w - rhs_w) / (
        sla.norm(A, 1) * np.linalg.norm(phi_w) + np.linalg.norm(rhs_w) + 1.0)
    if not np.isfinite(res) or res > res_tol:
        raise HypothesisFailure(
            f"quadratic-mode solve for {pair_tag} did not converge: "
            f"residual {res:.3e}")
    return ModalProfile(grid=grid, ell=ell_y, values=phi_w / w)


def solve_phi_set(hopf: HopfData, model: ModelSpec,
                  front: FrontProfile | None = None) -> PhiSet:
    """The four distinct quadratic corrections (conjugates implied)."""
    grid = hopf.grid
    front = front if front is not None else trivial_front(grid)
    phis = {}
    res = {}
    for tag in ("aa", "aabar", "ab", "abbar"):
        prof = solve_phi(tag, hopf, model, front)
        phis[tag] = prof
        res[tag] = float(np.max(np.abs(prof.values)))
    return PhiSet(phi_aa=phis["aa"], phi_aabar=phis["aabar"],
                  phi_ab=phis["ab"], phi_abbar=phis["abbar"],
                  residuals=res)


def _l2_pair(u: np.ndarray, v: np.ndarray) -> complex:
    """Plain (unweighted) discrete L2 pairing <u, v> = mean(u conj(v))."""
    return complex(np.mean(u * np.conj(v)))


def theta_coeffs(hopf: HopfData, phis: PhiSet, model: ModelSpec,
                 front: FrontProfile | None = None) -> tuple[complex, complex]:
    """Cubic normal-form coefficients.

    theta1 = <-D1(1/2 f_uuu p^2 pbar + f_uu [p phi_aabar + pbar phi_aa]), psi+>
    theta2 = <-D1(f_uuu p^2 pbar + f_uu [p phi_bbbar + p phi_abbar
                                          + pbar phi_ab]), psi+>
    with D1 = d^2/dx^2 - k^2 and phi_bbbar = phi_aabar.
    """
    grid = hopf.grid
    front = front if front is not None else trivial_front(grid)
    x = grid.x_nodes
    fuu = np.asarray(f_derivs(x, front.values, model, 2), dtype=float)
    fuuu = np.asarray(f_derivs(x, front.values, model, 3), dtype=float)
    p, psi = hopf.p, hopf.psi_plus

    cubic = p * p * np.conj(p)
    arg1 = 0.5 * fuuu * cubic + fuu * (p * phis.phi_aabar.values
                                       + np.conj(p) * phis.phi_aa.values)
    arg2 = fuuu * cubic + fuu * (p * phis.phi_aabar.values
                                 + p * phis.phi_abbar.values
                                 + np.conj(p) * phis.phi_ab.values)
    theta1 = _l2_pair(-apply_dell(grid, 1, arg1), psi)
    theta2 = _l2_pair(-apply_dell(grid, 1, arg2), psi)
    return theta1, theta2


def classify(theta1: complex, theta2: complex,
             degeneracy_tol: float = 0.0):
    """Bifurcation type from the normal-form coefficients.

    alpha = Re((theta1+theta2)/2), beta = Re((theta2-theta1)/2).
    Type 1: both branches open below c*.  Type 3: both above.
    Type 2: oblique below, checkerboard above.  Type 4: the reverse.
    """
    alpha = float(((theta1 + theta2) / 2.0).real)
    beta = float(((theta2 - theta1) / 2.0).real)
    scale = max(abs(theta1), abs(theta2), 1e-300)
    if (abs(alpha) <= degeneracy_tol * scale
            or abs(beta) <= degeneracy_tol * scale
            or abs(alpha - beta) <= degeneracy_tol * scale):
        return alpha, beta, "degenerate"
    if alpha < 0 and beta > 0:
        t = 1
    elif alpha > 0 and beta < 0:
        t = 3
    elif alpha > 0 and beta > 0:
        t = 3 if alpha > beta else 2
    else:
        t = 1 if alpha < beta else 4
    return alpha, beta, t


def ls_report(hopf: HopfData, model: ModelSpec,
              front: FrontProfile | None = None) -> LSReport:
    """End-to-end reduction: phi-solves, thetas, classification, branches."""
    front = front if front is not None else trivial_front(hopf.grid)
    phis = solve_phi_set(hopf, model, front)
    theta1, theta2 = theta_coeffs(hopf, phis, model, front)
    alpha, beta, bif_type = classify(theta1, theta2)
    mu_p = hopf.mu_prime
    c_os_coeff = -theta1.real / mu_p
    c_cb_coeff = -(theta1 + theta2).real / mu_p

    def direction(coeff: float) -> str:
        return "supercritical" if coeff > 0 else "subcritical"

    msg = "" if hopf.hypothesis_ok else (
        "mu'(c*) <= 0: transversal-crossing hypothesis fails at this "
        "resolution; branch directions use the computed mu'")
    return LSReport(
        theta1=theta1, theta2=theta2, alpha=alpha, beta=beta,
        bif_type=bif_type,
        os_direction=direction(c_os_coeff),
        cb_direction=direction(c_cb_coeff),
        c_star=hopf.c_star, omega_star=hopf.omega_star, mu_prime=mu_p,
        c_os_coeff=c_os_coeff, c_cb_coeff=c_cb_coeff, message=msg)


def predict_branches(report: LSReport, hopf: HopfData, a_range) -> dict:
    """Sampled branch curves c_os(a), c_cb(a) over the given amplitudes."""
    a = np.asarray(a_range, dtype=float)
    return {
        "a": a,
        "c_os": report.c_star + report.c_os_coeff * a**2,
        "c_cb": report.c_star + report.c_cb_coeff * a**2,
    }


def u_os_field(hopf: HopfData, front: FrontProfile, a: float,
               tau: float = 0.0) -> np.ndarray:
    """Leading-order oblique-stripe field u* + 2a Re(e^{i(tau+y)} p)."""
    grid = hopf.grid
    phase_y = np.exp(1j * grid.y_nodes)  # y is pre-rescaled to [0, 2 pi)
    mode = np.exp(1j * tau) * hopf.p[:, None] * phase_y[None, :]
    return front.values[:, None] + 2.0 * a * mode.real


def u_cb_field(hopf: HopfData, front: FrontProfile, a: float,
               tau: float = 0.0) -> np.ndarray:
    """Leading-order checkerboard field u* + 4a cos(y) Re(e^{i tau} p)."""
    grid = hopf.grid
    cosy = np.cos(grid.y_nodes)
    mode = (np.exp(1j * tau) * hopf.p).real
    return front.values[:, None] + 4.0 * a * mode[:, None] * cosy[None, :]


def normal_form_theta1(theta1: complex, theta2: complex, a: complex,
                       b: complex) -> complex:
    """Cubic part of Theta_1 via the (N, delta) form; equals
    theta1*a|a|^2 + theta2*a|b|^2."""
    N = abs(a) ** 2 + abs(b) ** 2
    delta = abs(b) ** 2 - abs(a) ** 2
    return a * ((theta1 + theta2) / 2.0 * N + (theta2 - theta1) / 2.0 * delta)


def report_lines(report: LSReport) -> list[str]:
    """Flat key-value serialization for experiment logs."""
    items = [
        ("theta1_re", report.theta1.real), ("theta1_im", report.theta1.imag),
        ("theta2_re", report.theta2.real), ("theta2_im", report.theta2.imag),
        ("alpha", report.alpha), ("beta", report.beta),
        ("bif_type", report.bif_type),
        ("os_direction", report.os_direction),
        ("cb_direction", report.cb_direction),
        ("c_star", report.c_star), ("omega_star", report.omega_star),
        ("mu_prime", report.mu_prime),
        ("c_os_coeff", report.c_os_coeff), ("c_cb_coeff", report.c_cb_coeff),
    ]
    lines = [f"{k} = {v!r}" for k, v in items]
    if report.message:
        lines.append(f"message = {report.message!r}")
    return lines
