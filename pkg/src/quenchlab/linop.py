"""
Discretized linearization about the primary front, block-diagonalized by
the transverse Fourier index ell, with optional exponential-weight
conjugation.  Provides eigensolves near a target, Hopf localization in the
quench speed c, eigenvalue-branch tracking and k-scans.

The modal block acting on x-profiles is

    L_ell v = -D_ell (D_ell v + f_u(x, u_*) v) + c v_x,
    D_ell   = d^2/dx^2 - k^2 ell^2,

conjugated by diag(exp(eta*sqrt(1+x^2))) when eta > 0.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla
from scipy.linalg import circulant

from .dispersion import DispersionParams, _max_pinched
from .grid import (ChannelGrid, deriv_x, make_grid, resample_profile,
                   weight_profile)
from .model import FrontProfile, ModelSpec, f_derivs, trivial_front

__all__ = [
    "ModalOperator",
    "EigenPair",
    "SpectrumSet",
    "HopfData",
    "HypothesisFailure",
    "assemble_modal",
    "modal_matrix",
    "eigs_near",
    "leading_eig",
    "aggregate_spectrum",
    "hopf_locate",
    "crossing_speed_check",
    "branch_track",
    "k_scan",
]

_DENSE_LIMIT = 512


class HypothesisFailure(RuntimeError):
    """A numerically checkable spectral hypothesis failed."""


@dataclass
class ModalOperator:
    ell: int
    c: float
    eta: float
    grid: ChannelGrid
    matrix: np.ndarray


@dataclass
class EigenPair:
    lam: complex
    vector: np.ndarray  # eigenvector of the (conjugated) matrix
    ell: int
    residual: float


@dataclass
class SpectrumSet:
    pairs: list
    c: float
    k: float
    eta: float

    def write_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["ell", "Re_lambda", "Im_lambda", "residual"])
            for p in self.pairs:
                wr.writerow([p.ell, repr(p.lam.real), repr(p.lam.imag),
                             repr(p.residual)])


@dataclass
class HopfData:
    """Hopf crossing data: speed, frequency, eigenfunction pair and the
    c-derivative of the critical eigenvalue."""

    c_star: float
    omega_star: float
    p: np.ndarray        # unweighted profile, ||p||_2 = 1, gauge-fixed
    psi_plus: np.ndarray  # adjoint profile, <p, psi_plus> = 1
    mu_prime: float
    lambda_prime: complex
    ell: int
    eta: float
    grid: ChannelGrid
    model: ModelSpec
    hypothesis_ok: bool = True


def _circ(grid: ChannelGrid, symbol: np.ndarray) -> np.ndarray:
    """Dense circulant matrix with the given Fourier symbol."""
    col = np.fft.ifft(symbol)
    if np.max(np.abs(col.imag)) < 1e-12 * max(1.0, np.max(np.abs(col.real))):
        col = col.real
    return circulant(col)


def _product_matrix(grid: ChannelGrid, fu_fine: np.ndarray,
                    pad_factor: int = 3) -> np.ndarray:
    """Dense matrix of the dealiased multiplication u -> trunc(fu * pad(u)).

    `fu_fine` is sampled on the pad_factor-refined x-grid, so the matrix is
    exactly the Jacobian of the simulator's padded nonlinear evaluation;
    the potential's unresolved spectral tail never aliases into the band.
    """
    n = grid.n_x
    if fu_fine.shape != (pad_factor * n,):
        raise ValueError("fu_fine must be sampled on the padded grid")
    N, half = pad_factor * n, n // 2
    ihat = np.fft.fft(np.eye(n), axis=0)
    up = np.zeros((N, n), dtype=complex)
    up[:half] = ihat[:half]
    up[N - (half - 1):] = ihat[half + 1:]
    up[half] = up[N - half] = ihat[half] / 2.0
    basis_fine = np.fft.ifft(up * pad_factor, axis=0)
    phat = np.fft.fft(fu_fine[:, None] * basis_fine, axis=0) / pad_factor
    low = np.zeros((n, n), dtype=complex)
    low[:half] = phat[:half]
    low[half + 1:] = phat[N - (half - 1):]
    low[half] = phat[half] + phat[N - half]
    mat = np.fft.ifft(low, axis=0)
    if np.max(np.abs(mat.imag)) < 1e-12 * max(1.0, np.max(np.abs(mat.real))):
        mat = mat.real
    return mat


def sponge_profile(grid: ChannelGrid, x_start: float, strength: float,
                   pad_factor: int = 3) -> np.ndarray:
    """Smooth absorbing-layer profile on the padded grid.

    Raised-cosine ramp from 0 at |x| = x_start to `strength` at |x| = M,
    with zero slope at both ends (even and periodic-smooth). Adding -sigma
    to the modal operator damps disturbances recirculating through the far
    exterior of the periodic domain; genuine point eigenfunctions are
    exponentially small there, so their eigenvalues move only by
    O(strength * |eigenfunction|^2 in the layer).
    """
    M, n = grid.half_width_M, grid.n_x
    if not 0.0 < x_start < M:
        raise ValueError("sponge must start strictly inside the half-domain")
    x = -M + (2.0 * M / (pad_factor * n)) * np.arange(pad_factor * n)
    ramp = np.clip((np.abs(x) - x_start) / (M - x_start), 0.0, 1.0)
    return strength * 0.5 * (1.0 - np.cos(np.pi * ramp))


def modal_matrix(grid: ChannelGrid, ell: int, c: float, eta: float,
                 fu_fine: np.ndarray, pad_factor: int = 3,
                 sponge_fine: np.ndarray | None = None,
                 drift: float = 0.0) -> np.ndarray:
    """Dense matrix of the (conjugated) modal operator.

    `fu_fine` samples f_u on the pad_factor-refined grid; the heterogeneous
    term is assembled with the same dealiased product as the simulator.

    `drift` conjugates by the one-sided weight e^{drift*x}, realized exactly
    as the symbol shift i*xi -> i*xi - drift.  Transport at speed c shears
    eigenfunctions of wide unstable plateaus so strongly that right and left
    eigenvectors concentrate at opposite plateau edges and the eigenvalue
    condition number grows exponentially with the plateau width; a drift of
    the order of the convective decay rate recenters both and keeps the
    eigenproblem within double-precision reach.  Unlike the elementwise
    eta-weighting (a similarity transform of the periodic matrix), the
    symbol shift genuinely changes the periodic operator, approximating the
    weighted problem on the line.
    """
    xi = grid.xi_wavenumbers
    dl_sym = -(xi**2) - (grid.k * ell) ** 2
    dx_sym = 1j * grid.xi_odd()
    if drift:
        dl_sym = dl_sym - 2j * drift * grid.xi_odd() + drift**2
        dx_sym = dx_sym - drift
    Dl = _circ(grid, dl_sym)
    Dl2 = _circ(grid, dl_sym**2)
    Dx = _circ(grid, dx_sym)
    # -D_ell^2 - D_ell prod(fu) + c * d/dx
    mat = -Dl2 - Dl @ _product_matrix(grid, fu_fine, pad_factor) + c * Dx
    if sponge_fine is not None:
        mat = mat - _product_matrix(grid, sponge_fine, pad_factor)
    if eta > 0:
        w = weight_profile(grid, eta).values
        mat = mat * (w[:, None] / w[None, :])
    return mat


def assemble_modal(ell: int, c: float, eta: float, model: ModelSpec,
                   front: FrontProfile, grid: ChannelGrid,
                   pad_factor: int = 3,
                   sponge: np.ndarray | None = None,
                   drift: float = 0.0) -> ModalOperator:
    """Assemble the modal block of the linearization about the front."""
    M, n = grid.half_width_M, grid.n_x
    x_fine = -M + (2.0 * M / (pad_factor * n)) * np.arange(pad_factor * n)
    if np.any(front.values):
        front_fine = resample_profile(front.values, pad_factor * n).real
    else:
        front_fine = np.zeros(pad_factor * n)
    fu = f_derivs(x_fine, front_fine, model, 1)
    mat = modal_matrix(grid, ell, c, eta, np.asarray(fu, dtype=float),
                       pad_factor, sponge_fine=sponge)
    return ModalOperator(ell=ell, c=c, eta=eta, grid=grid, matrix=mat)


def _residuals(mat: np.ndarray, lams: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    r = mat @ vecs - vecs * lams[None, :]
    return np.linalg.norm(r, axis=0) / np.linalg.norm(vecs, axis=0)


def eigs_near(op: ModalOperator, target: complex, count: int,
              dense: bool | None = None) -> list[EigenPair]:
    """`count` eigenpairs of the modal matrix nearest `target`.

    Dense eigensolve below the size threshold, shift-invert Arnoldi above.
    A singular shift is retried once with a perturbed target.
    """
    n = op.matrix.shape[0]
    if count > n:
        raise ValueError("count exceeds matrix dimension")
    if dense is None:
        dense = n <= _DENSE_LIMIT
    if dense or count > n - 2:
        lams, vecs = sla.eig(op.matrix)
        order = np.argsort(np.abs(lams - target))[:count]
        lams, vecs = lams[order], vecs[:, order]
    else:
        lams, vecs = _shift_invert(op.matrix, target, count)
    res = _residuals(op.matrix, lams, vecs)
    return [EigenPair(lam=complex(l), vector=v, ell=op.ell, residual=float(r))
            for l, v, r in zip(lams, vecs.T, res)]


def _shift_invert(mat: np.ndarray, sigma: complex, count: int):
    n = mat.shape[0]
    for attempt in range(2):
        shift = sigma if attempt == 0 else sigma + 1e-8 * (1 + abs(sigma))
        try:
            lu = sla.lu_factor(mat - shift * np.eye(n, dtype=complex))
        except sla.LinAlgError:
            continue
        opinv = spla.LinearOperator(
            (n, n), matvec=lambda b: sla.lu_solve(lu, b), dtype=complex)
        try:
            w, v = spla.eigs(mat, k=count, sigma=shift, OPinv=opinv,
                             return_eigenvectors=True)
        except spla.ArpackNoConvergence as exc:
            if attempt == 1:
                raise
            continue
        return _polish_pairs(mat, w, v)
    raise RuntimeError("shift-invert factorization failed at the target")


def _polish_pairs(mat: np.ndarray, lams: np.ndarray, vecs: np.ndarray):
    """Rayleigh-quotient inverse iteration to push Arnoldi pairs to the
    dense-eigensolve residual level."""
    n = mat.shape[0]
    eye = np.eye(n, dtype=complex)
    out_l = lams.astype(complex).copy()
    out_v = vecs.astype(complex).copy()
    for j in range(len(out_l)):
        lam, v = out_l[j], out_v[:, j]
        for _ in range(8):
            try:
                x = sla.lu_solve(sla.lu_factor(mat - lam * eye), v)
            except sla.LinAlgError:
                break
            v = x / np.linalg.norm(x)
            lam_new = v.conj() @ (mat @ v)
            done = abs(lam_new - lam) < 1e-13 * max(1.0, abs(lam_new))
            lam = lam_new
            if done:
                break
        out_l[j], out_v[:, j] = lam, v
    return out_l, out_v


def _refine_pair_extended(mat: np.ndarray, lam: complex, v: np.ndarray,
                          n_iter: int = 4):
    """Bordered-Newton eigenpair refinement with extended-precision residuals.

    The Hopf pair is badly conditioned (kappa(lambda) = 1/|<q, p>| can reach
    1e6 in the weighted frame), so a backward-stable double solve leaves
    eigenvalue errors near eps * ||A|| * kappa ~ 1e-6.  Computing the Newton
    residual in long double and solving the (well-scaled) bordered system in
    double pushes the pair a few digits past that floor.
    """
    n = mat.shape[0]
    mat_x = mat.astype(np.clongdouble)
    v_x = v.astype(np.clongdouble)
    v_x = v_x / np.sqrt(np.sum(np.abs(v_x) ** 2))
    lam_x = np.clongdouble(lam.real) + 1j * np.clongdouble(lam.imag)
    for _ in range(n_iter):
        r = mat_x @ v_x - lam_x * v_x
        bord = np.zeros((n + 1, n + 1), dtype=complex)
        bord[:n, :n] = mat - complex(lam_x) * np.eye(n)
        bord[:n, n] = -np.asarray(v_x, dtype=complex)
        bord[n, :n] = np.asarray(v_x, dtype=complex).conj()
        rhs = np.zeros(n + 1, dtype=complex)
        rhs[:n] = -np.asarray(r, dtype=complex)
        try:
            upd = sla.lu_solve(sla.lu_factor(bord), rhs)
        except sla.LinAlgError:
            break
        v_x = v_x + upd[:n].astype(np.clongdouble)
        lam_x = lam_x + np.clongdouble(upd[n].real) + 1j * np.clongdouble(upd[n].imag)
        v_x = v_x / np.sqrt(np.sum(np.abs(v_x) ** 2))
        if abs(upd[n]) < 1e-16 * max(1.0, abs(complex(lam_x))):
            break
    return complex(lam_x), np.asarray(v_x, dtype=complex)


def aggregate_spectrum(ell_range, c: float, eta: float, count_total: int,
                       model: ModelSpec, front: FrontProfile,
                       grid: ChannelGrid, per_block: int | None = None
                       ) -> SpectrumSet:
    """Union over ell of near-origin eigensolves, sorted by |lambda| and
    truncated to `count_total`."""
    pairs = []
    ells = list(ell_range)
    if ells:
        per_block = per_block or min(grid.n_x - 2, count_total)
        for ell in ells:
            op = assemble_modal(ell, c, eta, model, front, grid)
            pairs.extend(eigs_near(op, 0.0, per_block))
        pairs.sort(key=lambda p: abs(p.lam))
        pairs = pairs[:count_total]
    return SpectrumSet(pairs=pairs, c=c, k=grid.k, eta=eta)


def _branch_point_target(ell: int, k: float, c: float) -> complex:
    """Plateau branch-point prediction used to seed eigenvalue searches."""
    r = _max_pinched(DispersionParams(k=k, ell=ell, c=c, h_inf=1.0))
    if r is None or abs(r.lam.imag) < 1e-12:
        return r.lam if r is not None else 0.0 + 0.0j
    return complex(r.lam.real, abs(r.lam.imag))


def leading_eig(model: ModelSpec, front: FrontProfile, grid: ChannelGrid,
                ell: int, c: float, eta: float,
                target: complex | None = None, count: int = 8,
                exclude_origin: float = 0.0,
                sponge: np.ndarray | None = None) -> EigenPair:
    """Largest-real-part eigenvalue among `count` eigenvalues near a target
    (default: the plateau branch-point prediction).

    `exclude_origin` drops eigenvalues within that radius of zero; at ell=0
    mass conservation pins an exact lambda=0 mode that would otherwise be
    reported as "leading" whenever the rest of the spectrum is stable.
    """
    if target is None:
        target = _branch_point_target(ell, grid.k, c)
    op = assemble_modal(ell, c, eta, model, front, grid, sponge=sponge)
    pairs = eigs_near(op, target, count)
    if exclude_origin > 0.0:
        kept = [p for p in pairs if abs(p.lam) > exclude_origin]
        pairs = kept or pairs
    return max(pairs, key=lambda p: p.lam.real)


def _normalize_pair(grid: ChannelGrid, p: np.ndarray, psi: np.ndarray):
    """||p||_2 = 1 with largest-|p| entry real positive; <p, psi> = 1."""
    p = p / np.sqrt(np.mean(np.abs(p) ** 2))
    j = int(np.argmax(np.abs(p)))
    p = p * (np.abs(p[j]) / p[j])
    ip = np.mean(p * np.conj(psi))
    if abs(ip) < 1e-14:
        raise HypothesisFailure("defective Hopf pair: <p, psi_plus> ~ 0")
    psi = psi / np.conj(ip)
    return p, psi


def hopf_locate(model: ModelSpec, grid: ChannelGrid,
                c_bracket: tuple[float, float], eta: float = 0.2,
                ell: int = 1, front: FrontProfile | None = None,
                tol: float = 1e-9, dc_fd: float = 4e-3,
                sponge: np.ndarray | None = None) -> HopfData:
    """Locate the transverse Hopf crossing mu(c) = 0 in the bracket.

    Bisection/secant refinement of the leading eigenvalue's real part,
    then eigenfunction, adjoint eigenfunction, and the c-derivative of the
    eigenvalue by centered differences with a Richardson step-halving check.
    """
    front = front if front is not None else trivial_front(grid)

    target = [None]

    def mu(c: float) -> tuple[float, EigenPair]:
        pair = leading_eig(model, front, grid, ell, c, eta, target=target[0],
                           exclude_origin=1e-6 if ell == 0 else 0.0,
                           sponge=sponge)
        target[0] = pair.lam  # track the branch across c
        return pair.lam.real, pair

    c_lo, c_hi = c_bracket
    mu_lo, _ = mu(c_lo)
    mu_hi, _ = mu(c_hi)
    if mu_lo * mu_hi > 0:
        raise ValueError(
            f"leading eigenvalue does not change sign over {c_bracket}: "
            f"mu({c_lo})={mu_lo:.3e}, mu({c_hi})={mu_hi:.3e}")
    # bisection with secant acceleration
    a, fa, b, fb = c_lo, mu_lo, c_hi, mu_hi
    c_star, pair_star = b, None
    for _ in range(200):
        c_sec = b - fb * (b - a) / (fb - fa)
        c_mid = 0.5 * (a + b)
        c_try = c_sec if a < c_sec < b else c_mid
        f_try, pair_try = mu(c_try)
        c_star, pair_star = c_try, pair_try
        if abs(f_try) < tol:
            break
        if fa * f_try < 0:
            b, fb = c_try, f_try
        else:
            a, fa = c_try, f_try
        if b - a < 1e-11 * max(1.0, abs(b)):
            # bracket is pinned; |Re lambda| sits on the eigensolver noise
            # floor, which can exceed tol for badly conditioned crossings
            break
    else:
        raise RuntimeError("Hopf bisection failed to reach tolerance")

    lam_star = pair_star.lam
    if lam_star.imag < 0:
        lam_star = np.conj(lam_star)
        op = assemble_modal(ell, c_star, eta, model, front, grid,
                            sponge=sponge)
        pair_star = min(eigs_near(op, lam_star, 4),
                        key=lambda p: abs(p.lam - lam_star))
        lam_star = pair_star.lam

    w = weight_profile(grid, eta).values
    op = assemble_modal(ell, c_star, eta, model, front, grid, sponge=sponge)
    lam_star, p_w = _refine_pair_extended(op.matrix, lam_star, pair_star.vector)
    p = p_w / w
    # adjoint of the conjugated matrix at conj(lambda); unweighted psi = w * q
    adj = ModalOperator(ell=ell, c=c_star, eta=eta, grid=grid,
                        matrix=op.matrix.conj().T)
    q = min(eigs_near(adj, np.conj(lam_star), 4),
            key=lambda pr: abs(pr.lam - np.conj(lam_star))).vector
    _, q = _refine_pair_extended(adj.matrix, np.conj(lam_star), q)
    psi = w * q
    p, psi = _normalize_pair(grid, p, psi)

    def lam_at(c: float, tgt: complex) -> complex:
        op_c = assemble_modal(ell, c, eta, model, front, grid, sponge=sponge)
        pair_c = min(eigs_near(op_c, tgt, 4),
                     key=lambda pr: abs(pr.lam - tgt))
        lam_c, _ = _refine_pair_extended(op_c.matrix, pair_c.lam, pair_c.vector)
        return lam_c

    def fd(dc: float) -> complex:
        return (lam_at(c_star + dc, lam_star) - lam_at(c_star - dc, lam_star)) \
            / (2.0 * dc)

    d1 = fd(dc_fd)
    d2 = fd(dc_fd / 2.0)
    lam_prime = (4.0 * d2 - d1) / 3.0  # Richardson extrapolation
    if abs(d1 - d2) > 1e-3 * max(1.0, abs(lam_prime)):
        raise RuntimeError(
            f"eigenvalue derivative not resolved: fd(h)={d1}, fd(h/2)={d2}")
    mu_prime = float(lam_prime.real)
    return HopfData(
        c_star=float(c_star), omega_star=float(lam_star.imag), p=p,
        psi_plus=psi, mu_prime=mu_prime, lambda_prime=complex(lam_prime),
        ell=ell, eta=eta, grid=grid, model=model,
        hypothesis_ok=bool(mu_prime > 0))


def crossing_speed_check(hopf: HopfData) -> tuple[complex, complex]:
    """Return (finite-difference lambda'(c*), <p', psi_plus>).

    Both compute the crossing speed of the Hopf eigenvalue; agreement is a
    resolution diagnostic.
    """
    dp = deriv_x(hopf.grid, hopf.p, 1)
    formula = complex(np.mean(dp * np.conj(hopf.psi_plus)))
    return hopf.lambda_prime, formula


def branch_track(model: ModelSpec, grid: ChannelGrid, ell: int,
                 c_range: np.ndarray, n_branches: int, eta: float = 0.2,
                 front: FrontProfile | None = None,
                 target: complex | None = None):
    """Track the `n_branches` most unstable eigenvalues over a c-sweep.

    Eigenvalues are matched across steps by eigenvector overlap; a best
    overlap below 0.5 is flagged in the returned mask.
    """
    front = front if front is not None else trivial_front(grid)
    cs = np.asarray(c_range, dtype=float)
    lam_curves = np.zeros((len(cs), n_branches), dtype=complex)
    flags = np.zeros(len(cs), dtype=bool)
    prev_vecs = None
    for i, c in enumerate(cs):
        tgt = target if target is not None else _branch_point_target(ell, grid.k, c)
        op = assemble_modal(ell, c, eta, model, front, grid)
        pairs = eigs_near(op, tgt, min(2 * n_branches, grid.n_x - 2))
        pairs.sort(key=lambda p: -p.lam.real)
        if prev_vecs is None:
            chosen = pairs[:n_branches]
        else:
            chosen = []
            used = set()
            vecs = np.stack([p.vector / np.linalg.norm(p.vector) for p in pairs], axis=1)
            for j in range(n_branches):
                ov = np.abs(prev_vecs[:, j].conj() @ vecs)
                for u in used:
                    ov[u] = -1.0
                best = int(np.argmax(ov))
                if ov[best] < 0.5:
                    flags[i] = True
                    # fall back to real-part ordering for this branch
                    best = next(jj for jj in range(len(pairs)) if jj not in used)
                used.add(best)
                chosen.append(pairs[best])
        prev_vecs = np.stack(
            [p.vector / np.linalg.norm(p.vector) for p in chosen], axis=1)
        lam_curves[i] = [p.lam for p in chosen]
    return cs, lam_curves, flags


def k_scan(k_range: np.ndarray, c_fixed: float, model: ModelSpec,
           M: float, n_x: int, n_y: int, eta: float = 0.2,
           ell: int = 1) -> np.ndarray:
    """Leading transverse growth rate vs k at fixed speed."""
    out = []
    for k in np.asarray(k_range, dtype=float):
        if k <= 0:
            raise ValueError("k values must be positive")
        grid = make_grid(M, n_x, n_y, k)
        mk = replace(model, k=k, c=c_fixed)
        front = trivial_front(grid)
        pair = leading_eig(mk, front, grid, ell, c_fixed, eta)
        out.append(pair.lam)
    return np.array(out)
