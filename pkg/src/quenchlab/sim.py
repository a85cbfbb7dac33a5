"""
Direct numerical simulation in the co-moving frame.

Pseudospectral IMEX stepping of

    u_t = -Delta_k(Delta_k u + f(x, u)) + c u_x + c chi(x),

with the constant-coefficient stiff part (-Delta_k^2 + c d/dx) advanced by
Crank-Nicolson on the Fourier symbol and the heterogeneous/nonlinear part
-Delta_k f(x,u) + c chi by second-order Adams-Bashforth (explicit Euler on
the first step).  The quintic nonlinearity is dealiased by 3x zero padding.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np

from .grid import ChannelGrid, Field, _sl, make_grid
from .linop import HopfData
from .model import FrontProfile, ModelSpec, f_eval, trivial_front

__all__ = [
    "SimState",
    "Stepper",
    "RelaxResult",
    "ContinuationBranch",
    "BlowUpError",
    "CheckpointError",
    "seed",
    "relax",
    "classify_pattern",
    "adiabatic_continuation",
    "checkpoint_save",
    "checkpoint_load",
]

TRIVIAL_THRESHOLD = 1e-5

_MAGIC = b"QCH1"
_TRAILER_MAGIC = b"QCHX"
_VERSION = 1


class BlowUpError(RuntimeError):
    def __init__(self, t, step_count, max_abs):
        super().__init__(
            f"non-finite field at t={t:.6g} (step {step_count}, "
            f"last max|u|={max_abs:.3e})")
        self.t = t
        self.step_count = step_count


class CheckpointError(RuntimeError):
    pass


@dataclass
class SimState:
    field: Field
    t: float = 0.0
    step_count: int = 0
    prev_nonlinear: np.ndarray | None = None  # fft2 of the explicit term


@dataclass
class RelaxResult:
    state: SimState
    amplitude: float
    period: float | None
    converged: bool
    z_plus: float
    z_minus: float
    ell0_fraction: float
    series_t: np.ndarray
    series_z: np.ndarray  # complex ell=+1 projection time series


@dataclass
class ContinuationBranch:
    samples: list  # (c, amplitude, pattern_class, period, converged)
    direction: str  # "increasing" or "decreasing"

    def write_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["c", "amplitude", "class", "period", "converged"])
            for c, amp, cls, per, conv in self.samples:
                wr.writerow([repr(c), repr(amp), cls,
                             "" if per is None else repr(per), int(conv)])


class Stepper:
    """Precomputed-symbol IMEX integrator for one (grid, model, dt)."""

    def __init__(self, grid: ChannelGrid, model: ModelSpec, dt: float,
                 pad_factor: int = 3, restrict: str | None = None):
        if dt <= 0:
            raise ValueError("dt must be positive")
        if restrict not in (None, "odd-ell"):
            raise ValueError(f"unknown restriction {restrict!r}")
        self.grid = grid
        self.model = model
        self.dt = dt
        self.pad_factor = pad_factor
        # "odd-ell" runs on the invariant subspace u(x, y+pi) = -u(x, y):
        # f is odd in u, so fields with only odd transverse harmonics stay
        # that way exactly; the projection removes roundoff-seeded even
        # modes that would otherwise grow through the long-wave instability
        self.restrict = restrict
        self._ell_keep = (np.abs(grid.ell_indices) % 2 == 1)[None, :]
        xi = grid.xi_wavenumbers[:, None]
        ell = grid.ell_indices[None, :].astype(float)
        self.sigma = xi**2 + (grid.k * ell) ** 2
        lin = -self.sigma**2 + 1j * model.c * grid.xi_odd()[:, None]
        self._explicit = 1.0 + 0.5 * dt * lin
        self._implicit = 1.0 / (1.0 - 0.5 * dt * lin)
        # padded x-nodes for the heterogeneity, y-broadcast chi forcing
        M, nx = grid.half_width_M, grid.n_x
        self.x_pad = (-M + (2.0 * M / (pad_factor * nx))
                      * np.arange(pad_factor * nx))[:, None]
        chi = model.chi_values(grid)
        self.chi_hat = np.fft.fft2(
            np.broadcast_to(chi[:, None], (nx, grid.n_y)).copy())

    def _pad_hat(self, hat: np.ndarray) -> np.ndarray:
        """Embed a 2D spectrum into the padded band (Nyquist split)."""
        out = hat
        for axis in range(2):
            n = out.shape[axis]
            half = n // 2
            fn = self.pad_factor * n
            shape = list(out.shape)
            shape[axis] = fn
            up = np.zeros(shape, dtype=complex)
            up[_sl(2, axis, slice(0, half))] = np.take(out, range(half),
                                                       axis=axis)
            if half + 1 < n:
                up[_sl(2, axis, slice(fn - (half - 1), fn))] = np.take(
                    out, range(half + 1, n), axis=axis)
            nyq = np.take(out, [half], axis=axis) / 2.0
            up[_sl(2, axis, slice(half, half + 1))] = nyq
            up[_sl(2, axis, slice(fn - half, fn - half + 1))] = nyq
            out = up
        return out * self.pad_factor**2

    def _truncate_hat(self, hat: np.ndarray) -> np.ndarray:
        """Restrict a padded 2D spectrum back to the resolved band."""
        out = hat
        for axis in range(2):
            fn = out.shape[axis]
            n = fn // self.pad_factor
            half = n // 2
            shape = list(out.shape)
            shape[axis] = n
            low = np.zeros(shape, dtype=complex)
            low[_sl(2, axis, slice(0, half))] = np.take(out, range(half),
                                                        axis=axis)
            if half + 1 < n:
                low[_sl(2, axis, slice(half + 1, n))] = np.take(
                    out, range(fn - (half - 1), fn), axis=axis)
            nyq = np.take(out, [half], axis=axis) + np.take(out, [fn - half],
                                                            axis=axis)
            low[_sl(2, axis, slice(half, half + 1))] = nyq
            out = low
        return out / self.pad_factor**2

    def nonlinear_hat(self, uhat: np.ndarray) -> np.ndarray:
        """fft2 of -Delta_k f(x,u) + c chi, dealiased via padded evaluation."""
        u_pad = np.fft.ifft2(self._pad_hat(uhat)).real
        f_pad = f_eval(self.x_pad, u_pad, self.model)
        fhat = self._truncate_hat(np.fft.fft2(f_pad))
        return self.sigma * fhat + self.model.c * self.chi_hat

    def step(self, state: SimState) -> SimState:
        """One IMEX step (CN on the stiff symbol, AB2 on the rest)."""
        u = state.field.values
        max_abs = float(np.max(np.abs(u)))
        if not np.isfinite(max_abs) or max_abs > 1e50:
            # catch runaway amplitudes before the quintic overflows
            raise BlowUpError(state.t, state.step_count, max_abs)
        uhat = np.fft.fft2(u)
        nhat = self.nonlinear_hat(uhat)
        prev = state.prev_nonlinear if state.prev_nonlinear is not None else nhat
        new_hat = (uhat * self._explicit
                   + self.dt * (1.5 * nhat - 0.5 * prev)) * self._implicit
        if self.restrict == "odd-ell":
            new_hat = new_hat * self._ell_keep
        u_new = np.fft.ifft2(new_hat).real
        if not np.all(np.isfinite(u_new)):
            raise BlowUpError(state.t + self.dt, state.step_count + 1,
                              float(np.max(np.abs(u[np.isfinite(u)], ))))
        return SimState(field=Field(grid=self.grid, values=u_new),
                        t=state.t + self.dt,
                        step_count=state.step_count + 1,
                        prev_nonlinear=nhat)

    def run(self, state: SimState, n_steps: int) -> SimState:
        for _ in range(n_steps):
            state = self.step(state)
        return state


def seed(kind: str, amplitude: float, hopf: HopfData,
         front: FrontProfile | None = None,
         rng: np.random.Generator | None = None) -> SimState:
    """Initial condition built from the critical eigenfunction at tau = 0."""
    if amplitude < 0:
        raise ValueError("amplitude must be nonnegative")
    grid = hopf.grid
    front = front if front is not None else trivial_front(grid)
    y = grid.y_nodes
    p = hopf.p
    base = np.broadcast_to(front.values[:, None], (grid.n_x, grid.n_y)).copy()
    if kind == "oblique+":
        dev = 2.0 * amplitude * (p[:, None] * np.exp(1j * y)[None, :]).real
    elif kind == "oblique-":
        dev = 2.0 * amplitude * (p[:, None] * np.exp(-1j * y)[None, :]).real
    elif kind == "checkerboard":
        dev = 4.0 * amplitude * p.real[:, None] * np.cos(y)[None, :]
    elif kind == "stripes":
        dev = 2.0 * amplitude * p.real[:, None] * np.ones_like(y)[None, :]
    elif kind == "random":
        rng = rng if rng is not None else np.random.default_rng(0)
        dev = amplitude * rng.uniform(-1.0, 1.0, size=(grid.n_x, grid.n_y))
    else:
        raise ValueError(f"unknown seed kind {kind!r}")
    return SimState(field=Field(grid=grid, values=base + dev))


def _ell1_projection(grid: ChannelGrid, dev: np.ndarray,
                     p: np.ndarray) -> tuple[complex, complex]:
    """Projections of the ell=+1 transverse mode onto p and onto conj(p).

    The mode carried by p rotates one way in time, the mode carried by
    conj(p) the other; a single projection onto p would nearly annihilate
    the counter-rotating half of a standing wave (its overlap is the small
    gauge quantity mean(p^2)), so both are tracked.
    """
    mode = np.mean(dev * np.exp(-1j * grid.y_nodes)[None, :], axis=1)
    return complex(np.mean(mode * np.conj(p))), complex(np.mean(mode * p))


def relax(state: SimState, stepper: Stepper, hopf: HopfData,
          front: FrontProfile | None = None, tol: float = 1e-6,
          t_max: float = 2000.0, window: float = 20.0) -> RelaxResult:
    """Integrate until the window-averaged deviation norm settles.

    The amplitude is the time average of the normalized channel L2 norm of
    u - u_* over the last window; the period comes from the dominant
    temporal frequency of the ell=1 projection over that window.
    """
    grid = stepper.grid
    front = front if front is not None else trivial_front(grid)
    base = front.values[:, None]
    n_win = max(2, int(round(window / stepper.dt)))
    amps, zs, zbs, ts = [], [], [], []
    prev_avg = None
    converged = False
    while state.t < t_max - 0.5 * stepper.dt:
        state = stepper.step(state)
        dev = state.field.values - base
        amps.append(float(np.sqrt(np.mean(dev**2))))
        z_a, z_b = _ell1_projection(grid, dev, hopf.p)
        zs.append(z_a)
        zbs.append(z_b)
        ts.append(state.t)
        if len(amps) % n_win == 0:
            avg = float(np.mean(amps[-n_win:]))
            if prev_avg is not None:
                if abs(avg - prev_avg) < tol * max(avg, TRIVIAL_THRESHOLD):
                    converged = True
                    break
            prev_avg = avg
    amps = np.asarray(amps)
    ts = np.asarray(ts)
    zs = np.asarray(zs)
    zbs = np.asarray(zbs)
    tail = slice(-min(n_win, len(amps)), None)
    amplitude = float(np.mean(amps[tail]))

    z_tail = zs[tail]
    t_tail = ts[tail]
    # Hann window: amplitude transients in the tail otherwise leak power
    # across zero frequency and blur the rotating/standing separation
    taper = np.hanning(len(z_tail))
    freqs = 2.0 * np.pi * np.fft.fftfreq(len(z_tail), d=stepper.dt)
    power = np.zeros(len(z_tail))
    for series in (z_tail, zbs[tail]):
        shat = np.fft.fft((series - np.mean(series)) * taper)
        power += np.abs(shat) ** 2
    z_plus = float(np.sqrt(np.sum(power[freqs > 0]))) / len(z_tail)
    z_minus = float(np.sqrt(np.sum(power[freqs < 0]))) / len(z_tail)
    period = None
    if np.any(power > 0):
        dom = int(np.argmax(power))
        if abs(freqs[dom]) > 0:
            period = float(2.0 * np.pi / abs(freqs[dom]))

    dev = state.field.values - base
    dev_hat_y = np.fft.fft(dev, axis=1) / grid.n_y
    total = np.sqrt(np.mean(np.abs(dev_hat_y) ** 2, axis=0).sum())
    ell0 = np.sqrt(np.mean(np.abs(dev_hat_y[:, 0]) ** 2))
    ell0_fraction = float(ell0 / total) if total > 0 else 0.0
    return RelaxResult(state=state, amplitude=amplitude, period=period,
                       converged=converged, z_plus=z_plus, z_minus=z_minus,
                       ell0_fraction=ell0_fraction, series_t=t_tail,
                       series_z=z_tail)


def classify_pattern(result: RelaxResult,
                     threshold: float = TRIVIAL_THRESHOLD) -> str:
    """Pattern class from the relaxed state's trailing diagnostics."""
    if result.amplitude < threshold:
        return "trivial"
    if result.ell0_fraction > 0.9:
        return "stripes"
    zp, zm = result.z_plus, result.z_minus
    lo, hi = min(zp, zm), max(zp, zm)
    if lo == 0.0 or hi / lo > 10.0:
        return "oblique+" if zp > zm else "oblique-"
    if hi / lo < 2.0:
        return "checkerboard"
    return "mixed"


def adiabatic_continuation(start_state: SimState, c_from: float, c_to: float,
                           dc: float, model: ModelSpec, hopf: HopfData,
                           front: FrontProfile | None = None,
                           dt: float = 5e-3, tol: float = 1e-6,
                           t_max_per_c: float = 2000.0,
                           window: float = 20.0,
                           restrict: str | None = None) -> ContinuationBranch:
    """Sweep c, relaxing at each value from the previous end state.

    Stops early when the branch dies (amplitude below the trivial
    threshold) and flags classification changes in the sample list.
    """
    if dc == 0 or (c_to - c_from) * dc < 0:
        raise ValueError("dc sign inconsistent with the sweep direction")
    grid = start_state.field.grid
    front = front if front is not None else trivial_front(grid)
    direction = "increasing" if dc > 0 else "decreasing"
    cs = np.arange(c_from, c_to + 0.5 * dc, dc)
    samples = []
    state = start_state
    for c in cs:
        stepper = Stepper(grid, replace(model, c=float(c)), dt,
                          restrict=restrict)
        state = SimState(field=state.field)  # restart the multistep history
        res = relax(state, stepper, hopf, front=front, tol=tol,
                    t_max=t_max_per_c, window=window)
        cls = classify_pattern(res)
        samples.append((float(c), res.amplitude, cls, res.period,
                        res.converged))
        state = res.state
        if res.amplitude < TRIVIAL_THRESHOLD:
            break
    return ContinuationBranch(samples=samples, direction=direction)


def checkpoint_save(state: SimState, path, model: ModelSpec) -> None:
    """Binary checkpoint; an optional trailer carries the multistep history
    so a resumed run reproduces the original trajectory."""
    grid = state.field.grid
    header = (_MAGIC
              + struct.pack("<I", _VERSION)
              + struct.pack("<II", grid.n_x, grid.n_y)
              + struct.pack("<dddd", grid.half_width_M, grid.k, model.c,
                            state.t))
    body = np.ascontiguousarray(
        state.field.values, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)
        if state.prev_nonlinear is not None:
            fh.write(_TRAILER_MAGIC)
            fh.write(struct.pack("<Q", state.step_count))
            fh.write(np.ascontiguousarray(
                state.prev_nonlinear, dtype="<c16").tobytes())


def checkpoint_load(path, grid: ChannelGrid | None = None
                    ) -> tuple[SimState, float]:
    """Load a checkpoint; returns (state, c).  A supplied grid must match
    the stored dimensions."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _MAGIC:
        raise CheckpointError("bad magic: not a checkpoint file")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != _VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    n_x, n_y = struct.unpack_from("<II", raw, 8)
    M, k, c, t = struct.unpack_from("<dddd", raw, 16)
    if grid is None:
        grid = make_grid(M, n_x, n_y, k)
    elif (grid.n_x, grid.n_y) != (n_x, n_y):
        raise CheckpointError(
            f"grid mismatch: file has {n_x}x{n_y}, "
            f"current grid is {grid.n_x}x{grid.n_y}")
    off = 48
    count = n_x * n_y
    field = np.frombuffer(raw, dtype="<f8", count=count,
                          offset=off).reshape(n_x, n_y).copy()
    off += 8 * count
    prev = None
    step_count = 0
    if len(raw) > off:
        if raw[off:off + 4] != _TRAILER_MAGIC:
            raise CheckpointError("unrecognized trailing bytes")
        (step_count,) = struct.unpack_from("<Q", raw, off + 4)
        prev = np.frombuffer(raw, dtype="<c16", count=count,
                             offset=off + 12).reshape(n_x, n_y).copy()
    state = SimState(field=Field(grid=grid, values=field), t=t,
                     step_count=step_count, prev_nonlinear=prev)
    return state, c
