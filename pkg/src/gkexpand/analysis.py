"""Weight statistics of combo expansions: per-block masses, l_p sums and
the logarithmic divergence law.

The block masses follow G(n, p) ~ A(p) / b(p)^n with A(p) =
135 * 4^(p-1) / sqrt(90 pi)^p and b(p) = 4^(p-1).  These are large-n
asymptotics, so predictions are compared from block 4 on; early blocks
are reported but carry no pass/fail weight.  Identities, by contrast,
are held to 1e-11 .. 1e-13.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RangeError
from .expansion import Expansion

__all__ = [
    "WeightStats",
    "block_mass",
    "lp_norm_check",
    "divergence_profile",
    "predicted_block_mass",
    "model_divergence_slope",
    "amplitude",
    "decay_base",
]


def amplitude(p: float) -> float:
    """A(p) = 135 * 4^(p-1) / sqrt(90 pi)^p."""
    return 135.0 * 4.0 ** (p - 1.0) / math.sqrt(90.0 * math.pi) ** p


def decay_base(p: float) -> float:
    """b(p) = 4^(p-1)."""
    return 4.0 ** (p - 1.0)


def predicted_block_mass(n: int, p: float) -> float:
    """Asymptotic prediction A(p) / b(p)^n for the block-n mass."""
    return amplitude(p) / decay_base(p) ** n


def model_divergence_slope() -> float:
    """The D of the surrogate weight law D/k: 135 / (sqrt(90 pi) ln 4)."""
    return 135.0 / (math.sqrt(90.0 * math.pi) * math.log(4.0))


@dataclass(frozen=True, slots=True)
class WeightStats:
    """Divergence profile of a combo expansion's weight sequence."""

    p: float
    per_block: tuple[tuple[int, float], ...]
    partial_sums: tuple[tuple[int, float], ...]
    model_D: float
    fitted_slope: float


def _require_combo(e: Expansion) -> None:
    if e.scheme != "combo":
        raise DomainError("weight statistics are defined for combo expansions")


def block_mass(e: Expansion, n: int, p: float) -> float:
    """Exact sum of lambda^p over block n's terms (compensated)."""
    _require_combo(e)
    if p < 1.0:
        raise DomainError("p must be >= 1")
    if not 1 <= n <= int(e.max_block):
        raise RangeError(f"block {n} not present (max {e.max_block})")
    lam = e.weights[e.block_slice(n)]
    return math.fsum(np.power(lam, p).tolist())


def lp_norm_check(e: Expansion, p: float) -> tuple[float, bool]:
    """Total l_p weight mass plus a geometric tail estimate.

    The tail beyond the last computed block N is sum_{n > N} A(p)/b(p)^n;
    ``converged`` means the tail is under 1% of the total.  p <= 1 is
    rejected: the mass diverges there.
    """
    _require_combo(e)
    if p <= 1.0:
        raise DomainError("l_p check needs p > 1 (the p = 1 mass diverges)")
    total_blocks = math.fsum(np.power(e.weights, p).tolist())
    b = decay_base(p)
    n_last = int(e.max_block)
    tail = amplitude(p) * b ** -(n_last + 1) / (1.0 - 1.0 / b)
    total = total_blocks + tail
    return total, tail < 0.01 * total


def divergence_profile(e: Expansion) -> WeightStats:
    """Partial weight sums at block boundaries and their log-law fit.

    The partial sum S(m) is recorded at m = y_2, y_3, ...; the slope of S
    against ln m, fitted over blocks >= 3, estimates the D of the
    surrogate law lambda*_k = D/k.
    """
    _require_combo(e)
    if int(e.max_block) < 4:
        raise DomainError("divergence profile needs at least 4 blocks")
    per_block = []
    partial = []
    running = 0.0
    sums = []
    for n in range(1, int(e.max_block) + 1):
        g = block_mass(e, n, 1.0)
        per_block.append((n, g))
        running = math.fsum([running, g])
        boundary = e.block_slice(n).stop
        partial.append((boundary, running))
        if n >= 3:
            sums.append((math.log(boundary), running))
    lnm = np.array([a for a, _ in sums])
    sv = np.array([b for _, b in sums])
    design = np.vstack([lnm, np.ones_like(lnm)]).T
    slope = float(np.linalg.lstsq(design, sv, rcond=None)[0][0])
    return WeightStats(
        p=1.0,
        per_block=tuple(per_block),
        partial_sums=tuple(partial),
        model_D=model_divergence_slope(),
        fitted_slope=slope,
    )
