"""The raw basis functions psi_k, their peaks, bump approximations and the
domain-scaled variants h_k = k * psi_k.

psi_k(x) = sqrt(2^k / k!) * x^k * e^(-x^2) never exceeds 1 in magnitude, but
its factors explode, so every evaluation goes through the log domain:

    log |psi_k(x)| = (k ln 2 - ln k!) / 2 + k ln|x| - x^2.

Accuracy note: the log is accumulated in doubles, so the achievable relative
accuracy of a value degrades like a few ulps of the largest log term
(roughly k * 1e-16 near the peak).  That is far below every tolerance used
by the consumers in this package, which start at 1e-12 for small k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .numerics import (
    SLV_ONE,
    SLV_ZERO,
    SignedLogValue,
    log_factorial,
    log_factorial_array,
)

__all__ = [
    "PsiIndex",
    "PeakInfo",
    "HEnvelope",
    "eval_psi",
    "peak",
    "bump_approx",
    "bump_error",
    "eval_h",
    "h_sup_norm",
    "fit_h_envelope",
    "log_abs_psi_many",
    "psi_signs_many",
    "log_m_squared_many",
]

# Series index of a basis function; kept as a plain int.
PsiIndex = int

_LN2 = math.log(2.0)

# Grid pitch for empirical extremum scans.  The bumps have standard
# deviation 1/2, so a 1e-3 pitch cannot skip a peak.
GRID_STEP = 1e-3


@dataclass(frozen=True, slots=True)
class PeakInfo:
    """Location and size of the maximum of psi_k.

    ``m`` is the linear sup-norm (always representable: it decays only like
    k^(-1/4)); ``m_squared_log`` is ln(m^2) computed directly in the log
    domain, which is the form the weight laws consume.
    """

    x_peak: float
    m: float
    m_squared_log: float

    @property
    def log_m(self) -> float:
        return 0.5 * self.m_squared_log


def _check_index(k: int) -> int:
    if k < 0 or k != int(k):
        raise DomainError(f"basis index must be a non-negative integer, got {k!r}")
    return int(k)


def eval_psi(k: PsiIndex, x: float) -> SignedLogValue:
    """Evaluate psi_k(x) = sqrt(2^k / k!) x^k e^(-x^2) in the log domain."""
    k = _check_index(k)
    if not math.isfinite(x):
        raise DomainError(f"psi argument must be finite, got {x!r}")
    if x == 0.0:
        return SLV_ONE if k == 0 else SLV_ZERO
    sign = 1 if (x > 0.0 or k % 2 == 0) else -1
    log_mag = 0.5 * (k * _LN2 - log_factorial(k)) + k * math.log(abs(x)) - x * x
    return SignedLogValue(sign, log_mag)


def peak(k: PsiIndex) -> PeakInfo:
    """Peak location x_k = sqrt(k/2) and sup-norm m_k = sqrt(k^k/k!) e^(-k/2).

    k = 0 is the constant-times-Gaussian term with its maximum 1 at x = 0.
    """
    k = _check_index(k)
    if k == 0:
        return PeakInfo(0.0, 1.0, 0.0)
    m_squared_log = k * math.log(k) - k - log_factorial(k)
    return PeakInfo(math.sqrt(k / 2.0), math.exp(0.5 * m_squared_log), m_squared_log)


def log_m_squared_many(ks: np.ndarray) -> np.ndarray:
    """Vectorised ln(m_k^2); matches :func:`peak` entry by entry."""
    ks = np.asarray(ks, dtype=np.float64)
    safe = np.where(ks > 0, ks, 1.0)
    return np.where(ks > 0, ks * np.log(safe) - ks - log_factorial_array(ks), 0.0)


def bump_approx(k: PsiIndex, x: float) -> float:
    """Gaussian-bump model of psi_k: (2 pi k)^(-1/4) e^(-2 (x - sqrt(k/2))^2)."""
    k = _check_index(k)
    if k < 1:
        raise DomainError("bump approximation needs k >= 1")
    d = x - math.sqrt(k / 2.0)
    e = -2.0 * d * d
    if e < -745.0:
        return 0.0
    return (2.0 * math.pi * k) ** -0.25 * math.exp(e)


def log_abs_psi_many(ks: np.ndarray, x: float) -> np.ndarray:
    """log |psi_k(x)| for an array of indices at a single point.

    Entries for x = 0 with k >= 1 come out as -inf.
    """
    ks = np.asarray(ks, dtype=np.float64)
    ax = abs(x)
    if ax == 0.0:
        return np.where(ks == 0, 0.0, -np.inf)
    return 0.5 * (ks * _LN2 - log_factorial_array(ks)) + ks * math.log(ax) - x * x


def psi_signs_many(ks: np.ndarray, x: float) -> np.ndarray:
    """Signs of psi_k(x) for an array of indices (0.0 where the value is 0)."""
    ks = np.asarray(ks)
    if x == 0.0:
        return np.where(ks == 0, 1.0, 0.0)
    if x > 0.0:
        return np.ones(ks.shape)
    return np.where(ks % 2 == 0, 1.0, -1.0)


def _psi_grid(k: int, xs: np.ndarray) -> np.ndarray:
    """Signed linear psi_k over a grid of points (underflow goes to 0)."""
    logc = 0.5 * (k * _LN2 - log_factorial(k))
    ax = np.abs(xs)
    with np.errstate(divide="ignore", under="ignore"):
        logmag = logc + k * np.log(ax) - xs * xs
        vals = np.exp(logmag)
    if k % 2 == 1:
        vals = np.where(xs < 0, -vals, vals)
    vals = np.where(ax == 0.0, 1.0 if k == 0 else 0.0, vals)
    return vals


def bump_error(k: PsiIndex, window_halfwidth: float) -> float:
    """Sup of |psi_k - bump| / m_k over a 1e-3 grid around the peak.

    The window is [x_k - w, x_k + w]; the error is normalised by the
    sup-norm m_k so values are comparable across k.
    """
    k = _check_index(k)
    if k < 1:
        raise DomainError("bump error needs k >= 1")
    if not window_halfwidth > 0.0:
        raise DomainError("window halfwidth must be positive")
    info = peak(k)
    steps = int(round(window_halfwidth / GRID_STEP))
    xs = info.x_peak + np.arange(-steps, steps + 1, dtype=np.float64) * GRID_STEP
    psi = _psi_grid(k, xs)
    model = (2.0 * math.pi * k) ** -0.25 * np.exp(-2.0 * (xs - info.x_peak) ** 2)
    return float(np.max(np.abs(psi - model)) / info.m)


def eval_h(k: PsiIndex, x: float) -> SignedLogValue:
    """Domain-scaled basis function h_k = k psi_k; h_0 is psi_0.

    The k = 0 convention keeps the k = 0 term of the kernel series alive
    (a zero weight there would break K(x, x) reconstruction).
    """
    k = _check_index(k)
    if k == 0:
        return eval_psi(0, x)
    return eval_psi(k, x).scaled(math.log(k))


def h_sup_norm(k: PsiIndex, domain_edge: float) -> SignedLogValue:
    """Maximum of h_k over [0, N], in the log domain.

    The peak sqrt(k/2) is interior for k <= 2 N^2, otherwise the maximum
    sits on the boundary x = N.  Returned as a SignedLogValue because the
    boundary branch underflows doubles already for moderate k.
    """
    k = _check_index(k)
    if not domain_edge > 0.0:
        raise DomainError("domain edge must be positive")
    if k == 0:
        return SLV_ONE
    if math.sqrt(k / 2.0) <= domain_edge:
        return SignedLogValue(1, math.log(k) + peak(k).log_m)
    return eval_psi(k, domain_edge).scaled(math.log(k))


def _log_h_sup_many(ks: np.ndarray, domain_edge: float) -> np.ndarray:
    ks = np.asarray(ks, dtype=np.float64)
    lf = log_factorial_array(ks)
    interior = np.log(ks) + 0.5 * (ks * np.log(ks) - lf) - ks / 2.0
    boundary = (
        np.log(ks)
        + 0.5 * (ks * _LN2 - lf)
        + ks * math.log(domain_edge)
        - domain_edge * domain_edge
    )
    return np.where(np.sqrt(ks / 2.0) <= domain_edge, interior, boundary)


@dataclass(frozen=True, slots=True)
class HEnvelope:
    """Fitted decay envelope A k^(3/4) e^(-B k) for the h_k sup-norms.

    ``max_violation`` is the largest log-domain excess of a sup-norm over
    the envelope on the verification range (<= 0 means the envelope holds);
    ``sup_argmax``/``sup_log_value`` locate the global sup over all k >= 1.
    """

    domain_edge: float
    k0: int
    B: float
    log_A: float
    max_violation: float
    sup_argmax: int
    sup_log_value: float

    def log_envelope(self, k: float) -> float:
        return self.log_A + 0.75 * math.log(k) - self.B * k


def fit_h_envelope(domain_edge: float, k_max: int = 5000) -> HEnvelope:
    """Fit the decaying envelope that certifies uniform boundedness of h_k.

    The threshold k0 is the smallest integer above 2 e N^2 (the point where
    the boundary value starts shrinking geometrically), B follows from the
    log ratio at k0, and A is anchored so the envelope touches h_k0.  The
    fit is then checked against every k in [k0, k_max].
    """
    if not domain_edge > 0.0:
        raise DomainError("domain edge must be positive")
    crit = 2.0 * math.e * domain_edge * domain_edge
    k0 = int(math.floor(crit)) + 1
    if k_max <= k0:
        raise DomainError(f"k_max must exceed k0={k0}")
    B = 0.5 * math.log(k0 / crit)
    ks = np.arange(1, k_max + 1, dtype=np.float64)
    logh = _log_h_sup_many(ks, domain_edge)
    log_A = logh[k0 - 1] - 0.75 * math.log(k0) + B * k0
    tail = ks >= k0
    violation = logh[tail] - (log_A + 0.75 * np.log(ks[tail]) - B * ks[tail])
    sup_idx = int(np.argmax(logh))
    return HEnvelope(
        domain_edge=domain_edge,
        k0=k0,
        B=B,
        log_A=log_A,
        max_violation=float(np.max(violation)),
        sup_argmax=int(ks[sup_idx]),
        sup_log_value=float(logh[sup_idx]),
    )
