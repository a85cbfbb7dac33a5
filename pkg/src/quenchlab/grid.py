"""
Spectral discretization of the channel: periodic x-grid, Fourier
differentiation, exponential weights, dealiased products and inner products.

The channel R x T is truncated to the periodic box [-M, M) x [0, 2*pi) with
the transverse variable already rescaled by the wavenumber k.  All other
modules build on the primitives here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ChannelGrid",
    "Field",
    "ModalProfile",
    "WeightProfile",
    "make_grid",
    "deriv_x",
    "apply_dell",
    "weight_profile",
    "inner_product",
    "norm2",
    "dealias_product",
    "pad_values",
    "truncate_values",
    "resample_profile",
]


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class ChannelGrid:
    """Uniform periodic grid for the truncated channel [-M, M) x [0, 2*pi).

    Parameters
    ----------
    half_width_M : float
        Half-width of the x-domain; x in [-M, M), periodic.
    n_x, n_y : int
        Grid sizes (powers of two).
    k : float
        Transverse wavenumber; the y-coordinate is pre-rescaled, so the
        transverse mode ``ell`` carries the factor k**2 * ell**2.
    """

    half_width_M: float
    n_x: int
    n_y: int
    k: float
    x_nodes: np.ndarray = field(repr=False, compare=False, default=None)
    y_nodes: np.ndarray = field(repr=False, compare=False, default=None)
    xi_wavenumbers: np.ndarray = field(repr=False, compare=False, default=None)
    ell_indices: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.half_width_M <= 0:
            raise ValueError("half_width_M must be positive")
        if self.k <= 0:
            raise ValueError("k must be positive")
        for n, name in ((self.n_x, "n_x"), (self.n_y, "n_y")):
            if not _is_pow2(n) or n < 8:
                raise ValueError(f"{name} must be a power of two >= 8, got {n}")
        M, nx, ny = self.half_width_M, self.n_x, self.n_y
        object.__setattr__(self, "x_nodes", -M + (2.0 * M / nx) * np.arange(nx))
        object.__setattr__(self, "y_nodes", (2.0 * np.pi / ny) * np.arange(ny))
        # xi_j = pi*j/M, standard FFT ordering
        xi = 2.0 * np.pi * np.fft.fftfreq(nx, d=2.0 * M / nx)
        object.__setattr__(self, "xi_wavenumbers", xi)
        ells = (np.fft.fftfreq(ny, d=1.0 / ny)).astype(int)
        object.__setattr__(self, "ell_indices", ells)

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width_M / self.n_x

    def xi_odd(self) -> np.ndarray:
        """Wavenumbers with the Nyquist mode zeroed, for odd derivatives."""
        xi = self.xi_wavenumbers.copy()
        xi[self.n_x // 2] = 0.0
        return xi


@dataclass
class Field:
    """Real 2D field u(x, y) on a :class:`ChannelGrid` at a given time."""

    grid: ChannelGrid
    values: np.ndarray  # shape (n_x, n_y), y fastest
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_x, self.grid.n_y):
            raise ValueError("field shape does not match grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite entries")


@dataclass
class ModalProfile:
    """Complex x-profile attached to a transverse Fourier index ell."""

    grid: ChannelGrid
    ell: int
    values: np.ndarray  # shape (n_x,)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n_x,):
            raise ValueError("profile shape does not match grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("profile contains non-finite entries")
        if abs(self.ell) > self.grid.n_y // 2:
            raise ValueError("ell outside resolved transverse range")


@dataclass(frozen=True)
class WeightProfile:
    """Exponential weight exp(eta * sqrt(1 + x^2)) sampled on the grid."""

    grid: ChannelGrid
    eta: float
    values: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        x = self.grid.x_nodes
        object.__setattr__(self, "values", np.exp(self.eta * np.sqrt(1.0 + x * x)))


def make_grid(M: float, n_x: int, n_y: int, k: float) -> ChannelGrid:
    """Build a :class:`ChannelGrid`; see the class for conventions."""
    return ChannelGrid(half_width_M=M, n_x=n_x, n_y=n_y, k=k)


def _values_of(obj):
    if isinstance(obj, (Field, ModalProfile)):
        return obj.values
    return np.asarray(obj)


def deriv_x(grid: ChannelGrid, values, order: int = 1) -> np.ndarray:
    """Fourier-exact x-derivative of a profile (n_x,) or field (n_x, n_y).

    Odd orders zero the Nyquist mode to avoid asymmetric artifacts.
    """
    if order < 1:
        raise ValueError("order must be a positive integer")
    v = _values_of(values)
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite input")
    xi = grid.xi_odd() if order % 2 else grid.xi_wavenumbers
    sym = (1j * xi) ** order
    vhat = np.fft.fft(v, axis=0)
    out = np.fft.ifft(sym.reshape(-1, *([1] * (v.ndim - 1))) * vhat, axis=0)
    return out.real if np.isrealobj(v) else out


def apply_dell(grid: ChannelGrid, ell: int, values) -> np.ndarray:
    """Apply the modal Laplacian D_ell = d^2/dx^2 - k^2*ell^2."""
    v = _values_of(values)
    return deriv_x(grid, v, 2) - (grid.k * ell) ** 2 * v


def weight_profile(grid: ChannelGrid, eta: float) -> WeightProfile:
    return WeightProfile(grid=grid, eta=eta)


def inner_product(u, v, weight: WeightProfile | None = None) -> complex:
    """Quadrature of (1/2M) * integral of u * conj(v) * w^2 dx.

    Spectrally accurate uniform quadrature; conjugate-symmetric in (u, v).
    """
    gu = u.grid if isinstance(u, ModalProfile) else None
    gv = v.grid if isinstance(v, ModalProfile) else None
    if gu is not None and gv is not None and gu != gv:
        raise ValueError("profiles live on different grids")
    uu, vv = _values_of(u), _values_of(v)
    w2 = 1.0 if weight is None else weight.values**2
    return complex(np.mean(uu * np.conj(vv) * w2))


def norm2(u, weight: WeightProfile | None = None) -> float:
    """Normalized L2 norm, sqrt(<u, u>)."""
    return float(np.sqrt(inner_product(u, u, weight).real))


def _sl(ndim: int, axis: int, s: slice) -> tuple:
    idx = [slice(None)] * ndim
    idx[axis] = s
    return tuple(idx)


def pad_values(values: np.ndarray, factor: int) -> np.ndarray:
    """Zero-pad the spectrum of a (1D or 2D) periodic sample by `factor`.

    Returns the refined physical-space samples on factor*n nodes per axis.
    The Nyquist coefficient is split symmetrically so real input stays real.
    """
    v = np.asarray(values)
    out = np.asarray(v, dtype=complex)
    for axis in range(v.ndim):
        n = out.shape[axis]
        half = n // 2
        fn = factor * n
        vhat = np.fft.fft(out, axis=axis)
        shape = list(out.shape)
        shape[axis] = fn
        up = np.zeros(shape, dtype=complex)
        up[_sl(v.ndim, axis, slice(0, half))] = np.take(vhat, range(half), axis=axis)
        if half + 1 < n:
            up[_sl(v.ndim, axis, slice(fn - (half - 1), fn))] = np.take(
                vhat, range(half + 1, n), axis=axis
            )
        nyq = np.take(vhat, [half], axis=axis) / 2.0
        up[_sl(v.ndim, axis, slice(half, half + 1))] = nyq
        up[_sl(v.ndim, axis, slice(fn - half, fn - half + 1))] = nyq
        out = np.fft.ifft(up * factor, axis=axis)
    return out.real if np.isrealobj(v) else out


def truncate_values(values: np.ndarray, factor: int) -> np.ndarray:
    """Inverse of :func:`pad_values`: restrict to the coarse-grid modes."""
    v = np.asarray(values)
    out = np.asarray(v, dtype=complex)
    for axis in range(v.ndim):
        fn = out.shape[axis]
        n = fn // factor
        half = n // 2
        vhat = np.fft.fft(out, axis=axis) / factor
        shape = list(out.shape)
        shape[axis] = n
        low = np.zeros(shape, dtype=complex)
        low[_sl(v.ndim, axis, slice(0, half))] = np.take(vhat, range(half), axis=axis)
        if half + 1 < n:
            low[_sl(v.ndim, axis, slice(half + 1, n))] = np.take(
                vhat, range(fn - (half - 1), fn), axis=axis
            )
        # fold the +/- Nyquist-band coefficients of the fine grid together
        nyq = np.take(vhat, [half], axis=axis) + np.take(vhat, [fn - half], axis=axis)
        low[_sl(v.ndim, axis, slice(half, half + 1))] = nyq
        out = np.fft.ifft(low, axis=axis)
    return out.real if np.isrealobj(v) else out


def dealias_product(factors: list, pad_factor: int | None = None) -> np.ndarray:
    """Pointwise product of 2-5 profiles/fields, dealiased by zero padding.

    Padding factor 3 is exact through quintic products of band-limited
    inputs (truncated back to the resolved band).
    """
    if not 2 <= len(factors) <= 5:
        raise ValueError("dealias_product takes between 2 and 5 factors")
    vals = [_values_of(f) for f in factors]
    shape = vals[0].shape
    for v in vals[1:]:
        if v.shape != shape:
            raise ValueError("factors must share one grid")
    factor = pad_factor if pad_factor is not None else 3
    prod = pad_values(vals[0], factor)
    for v in vals[1:]:
        prod = prod * pad_values(v, factor)
    return truncate_values(prod, factor)


def resample_profile(values: np.ndarray, n_new: int) -> np.ndarray:
    """Spectrally interpolate a periodic 1D sample onto n_new uniform nodes."""
    v = np.asarray(values)
    n = v.shape[0]
    if n_new == n:
        return v.copy()
    if n_new > n:
        if n_new % n:
            raise ValueError("n_new must be a multiple of n for upsampling")
        return pad_values(v, n_new // n)
    if n % n_new:
        raise ValueError("n must be a multiple of n_new for downsampling")
    return truncate_values(v, n // n_new)
