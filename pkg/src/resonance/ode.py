"""Initial-value integration and quadrature of periodic functions.

``integrate`` is an adaptive Dormand-Prince 5(4) integrator with FSAL and
Hairer's continuous extension, so every :class:`Trajectory` can be
evaluated at any time in its range.  ``periodic_quadrature`` is the
composite trapezoid rule with node doubling, which is spectrally accurate
for smooth periodic integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import IntegrationError, NumericalError

__all__ = [
    "DEFAULT_TOL",
    "Trajectory",
    "integrate",
    "QuadratureResult",
    "periodic_quadrature",
    "PeriodicAntiderivative",
    "periodic_antiderivative",
]

DEFAULT_TOL = 1e-10

Field = Callable[[float, np.ndarray], np.ndarray]

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
_D = np.array([
    -12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
    -10690763975 / 1880347072, 701980252875 / 199316789632,
    -1453857185 / 822651844, 69997945 / 29380423,
])


@dataclass(frozen=True)
class Trajectory:
    """Solution samples with a piecewise-quartic dense interpolant.

    ``t`` is strictly increasing regardless of integration direction, ``y``
    has shape ``(len(t), n)``.  Calling the trajectory at a sample time
    returns the stored state exactly.
    """

    t: np.ndarray
    y: np.ndarray
    step_start: np.ndarray | None = None
    step_size: np.ndarray | None = None
    coeffs: np.ndarray | None = None  # (steps, 5, n)
    nfev: int = 0

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t1(self) -> float:
        return float(self.t[-1])

    @property
    def dim(self) -> int:
        return self.y.shape[1]

    def __call__(self, t):
        tq = np.asarray(t, dtype=float)
        scalar = tq.ndim == 0
        tq = np.atleast_1d(tq)
        lo, hi = self.t[0], self.t[-1]
        span = max(abs(lo), abs(hi), 1.0)
        if np.any(tq < lo - 1e-12 * span) or np.any(tq > hi + 1e-12 * span):
            raise ValueError(f"time outside trajectory range [{lo}, {hi}]")
        if self.coeffs is None:
            raise ValueError("trajectory was integrated without dense output")
        idx = np.clip(np.searchsorted(self.t, tq, side="right") - 1, 0, len(self.t) - 2)
        theta = (tq - self.step_start[idx]) / self.step_size[idx]
        th1 = 1.0 - theta
        c = self.coeffs[idx]
        th = theta[:, None]
        t1 = th1[:, None]
        out = c[:, 0] + th * (c[:, 1] + t1 * (c[:, 2] + th * (c[:, 3] + t1 * c[:, 4])))
        # exact reproduction at sample times
        exact = self.t[idx] == tq
        if np.any(exact):
            out[exact] = self.y[idx[exact]]
        exact_next = self.t[idx + 1] == tq
        if np.any(exact_next):
            out[exact_next] = self.y[idx[exact_next] + 1]
        return out[0] if scalar else out


def _initial_step(f, t0, y0, f0, direction, atol, rtol, max_step):
    scale = atol + np.abs(y0) * rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step)
    y1 = y0 + direction * h0 * f0
    f1 = f(t0 + direction * h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, max_step)


def integrate(
    field: Field,
    t0: float,
    x0,
    t1: float,
    abs_tol: float = DEFAULT_TOL,
    rel_tol: float = DEFAULT_TOL,
    max_step: float = math.inf,
    dense: bool = True,
    max_steps: int = 1_000_000,
) -> Trajectory:
    """Integrate ``x' = field(t, x)`` from ``t0`` to ``t1``.

    ``t1 < t0`` integrates backwards in time.  Raises
    :class:`IntegrationError` on step-size underflow or a non-finite state.
    ``abs_tol`` must be positive so the error scale never vanishes.
    """
    if not (abs_tol > 0 and rel_tol >= 0):
        raise ValueError(f"need abs_tol > 0 and rel_tol >= 0, got {abs_tol}, {rel_tol}")
    y = np.array(x0, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise IntegrationError("non-finite initial state", t0)
    t0, t1 = float(t0), float(t1)
    n = y.size
    ts = [t0]
    ys = [y.copy()]
    starts: list[float] = []
    sizes: list[float] = []
    conts: list[np.ndarray] = []
    if t1 == t0:
        return _finish(ts, ys, starts, sizes, conts, dense, 0, reverse=False)

    direction = 1.0 if t1 > t0 else -1.0
    f = field
    k = np.empty((7, n))
    k[0] = np.asarray(f(t0, y), dtype=float).ravel()
    nfev = 1
    if not np.all(np.isfinite(k[0])):
        raise IntegrationError("non-finite derivative", t0)
    h = _initial_step(f, t0, y, k[0], direction, abs_tol, rel_tol, max_step)
    # the heuristic can land below the underflow floor for states near zero
    h = max(h, min(1e3 * np.spacing(max(abs(t0), 1.0)), abs(t1 - t0), max_step))
    nfev += 1
    t = t0
    steps = 0
    fac_min, fac_max, safety = 0.2, 10.0, 0.9
    last_rejected = False
    while direction * (t1 - t) > 0:
        if steps >= max_steps:
            raise IntegrationError("maximum number of steps exceeded", t)
        min_step = 16 * np.spacing(max(abs(t), 1.0))
        if h < min_step:
            raise IntegrationError("step size underflow", t)
        h = min(h, max_step)
        if direction * (t + direction * h - t1) > 0 or abs(t1 - (t + direction * h)) < min_step:
            h = abs(t1 - t)
        hs = direction * h
        # overflow shows up as a non-finite error estimate and is handled below
        with np.errstate(over="ignore", invalid="ignore"):
            for s in range(1, 7):
                ys_ = y + hs * (_A[s] @ k[:s])
                k[s] = np.asarray(f(t + _C[s] * hs, ys_), dtype=float).ravel()
            nfev += 6
            y_new = ys_  # stage 7 argument is the 5th-order solution
            err_vec = hs * (_E @ k)
            scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
        if not math.isfinite(err) or not np.all(np.isfinite(y_new)):
            if h <= min_step:
                raise IntegrationError("non-finite state", t)
            h *= 0.25
            last_rejected = True
            continue
        if err <= 1.0:
            t_new = t1 if h == abs(t1 - t) else t + hs
            if dense:
                ydiff = y_new - y
                bspl = hs * k[0] - ydiff
                cont = np.empty((5, n))
                cont[0] = y
                cont[1] = ydiff
                cont[2] = bspl
                cont[3] = ydiff - hs * k[6] - bspl
                cont[4] = hs * (_D @ k)
                conts.append(cont)
                starts.append(t)
                sizes.append(hs)
            t = t_new
            y = y_new
            ts.append(t)
            ys.append(y.copy())
            k[0] = k[6]
            steps += 1
            fac = fac_max if err == 0 else min(fac_max, max(fac_min, safety * err ** -0.2))
            if last_rejected:
                fac = min(fac, 1.0)
            h *= fac
            last_rejected = False
        else:
            h *= max(fac_min, safety * err ** -0.2)
            last_rejected = True
    return _finish(ts, ys, starts, sizes, conts, dense, nfev, reverse=direction < 0)


def _finish(ts, ys, starts, sizes, conts, dense, nfev, reverse):
    t = np.array(ts)
    y = np.array(ys)
    if dense and conts:
        start = np.array(starts)
        size = np.array(sizes)
        coeffs = np.array(conts)
    elif dense:
        start = np.array([t[0]])
        size = np.array([1.0])
        coeffs = np.zeros((1, 5, y.shape[1]))
        coeffs[0, 0] = y[0]
        t = np.array([t[0], t[0]])
        y = np.array([y[0], y[0]])
    else:
        start = size = coeffs = None
    if reverse:
        t = t[::-1].copy()
        y = y[::-1].copy()
        if coeffs is not None:
            start, size, coeffs = start[::-1].copy(), size[::-1].copy(), coeffs[::-1].copy()
    return Trajectory(t=t, y=y, step_start=start, step_size=size, coeffs=coeffs, nfev=nfev)


# ---------------------------------------------------------------------------
# periodic quadrature


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    nodes: int

    def __float__(self) -> float:
        return self.value


def _sample(f, t: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(f(t), dtype=float)
        if out.shape == t.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(f(float(s))) for s in t])


def periodic_quadrature(
    f: Callable,
    p: float,
    tol: float = 1e-10,
    start: int = 16,
    max_nodes: int = 2**20,
) -> QuadratureResult:
    """``∫₀ᵖ f(t) dt`` for continuous ``p``-periodic ``f``.

    Doubles the number of trapezoid nodes until two successive values differ
    by less than ``tol * max(1, |value|)``.  ``f`` may be vectorised; scalar
    callables are accepted too.
    """
    n = start
    t = np.arange(n) * (p / n)
    total = float(np.sum(_sample(f, t)))
    value = p * total / n
    while n < max_nodes:
        mid = (np.arange(n) + 0.5) * (p / n)
        total += float(np.sum(_sample(f, mid)))
        n *= 2
        new = p * total / n
        if abs(new - value) < tol * max(1.0, abs(new)):
            return QuadratureResult(new, n)
        value = new
    raise NumericalError(f"periodic quadrature did not converge with {max_nodes} nodes")


class PeriodicAntiderivative:
    """``F(t) = ∫₀ᵗ f(s) ds`` for smooth ``p``-periodic ``f`` via its Fourier series.

    ``F(t) = mean * t + P(t)`` with ``P`` periodic and ``P(0) = 0``.
    """

    def __init__(self, mean: float, cos_coef: np.ndarray, sin_coef: np.ndarray, period: float):
        self.mean = float(mean)
        self.cos_coef = cos_coef
        self.sin_coef = sin_coef
        self.period = float(period)
        self._k = np.arange(1, len(cos_coef) + 1) * (2 * np.pi / period)

    @property
    def total(self) -> float:
        """Integral over one period."""
        return self.mean * self.period

    def __call__(self, t):
        tq = np.asarray(t, dtype=float)
        shape = tq.shape
        tt = tq.reshape(-1, 1)
        arg = tt * self._k
        periodic = (np.sin(arg) @ (self.cos_coef / self._k)
                    - (np.cos(arg) - 1.0) @ (self.sin_coef / self._k))
        out = self.mean * tq.ravel() + periodic
        return out.reshape(shape) if shape else float(out[0])


def periodic_antiderivative(
    f: Callable, p: float, tol: float = 1e-14, start: int = 32, max_nodes: int = 2**16
) -> PeriodicAntiderivative:
    """Spectral antiderivative of a smooth periodic function.

    The number of samples doubles until the upper quarter of the Fourier
    spectrum falls below ``tol`` relative to the largest coefficient.
    """
    n = start
    while True:
        t = np.arange(n) * (p / n)
        c = np.fft.rfft(_sample(f, t)) / n
        mags = np.abs(c)
        ref = max(float(mags.max()), 1e-300)
        if mags[3 * len(c) // 4:].max() <= tol * max(ref, 1.0) or n >= max_nodes:
            if n >= max_nodes and mags[3 * len(c) // 4:].max() > 1e3 * tol * max(ref, 1.0):
                raise NumericalError("periodic antiderivative: spectrum not resolved")
            break
        n *= 2
    # f ≈ c0 + Σ (a_k cos kωt + b_k sin kωt), drop the Nyquist term
    m = n // 2
    ak = 2 * c[1:m].real
    bk = -2 * c[1:m].imag
    return PeriodicAntiderivative(c[0].real, ak, bk, p)
