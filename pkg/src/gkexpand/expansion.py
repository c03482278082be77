"""Truncated kernel expansions: raw, bounded-domain and block-recombined.

An :class:`Expansion` is an ordered list of (weight, basis function) pairs.
The three builders produce:

* ``raw``      -- psi_k with unit weights (normalised form: lambda_k = m_k^2,
                  basis psi_k / m_k);
* ``bounded``  -- h_k = k psi_k with lambda_k = 1/k^2 on a domain [0, N]
                  (the k = 0 term keeps psi_0 with weight 1 so that K(x, x)
                  still reconstructs to 1);
* ``combo``    -- sign-recombined rows of the integer blocks, normalised,
                  with lambda = (sup-norm)^2.

Term storage is array-backed; descriptors are materialised on demand so a
deep combo expansion (block 8 has ~2.9 million terms) stays cheap.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Union

import numpy as np

from . import basis, blocks
from .errors import DomainError, RangeError
from .numerics import log_factorial_array

__all__ = [
    "RawPsi",
    "ScaledH",
    "Combo",
    "BasisDescriptor",
    "Expansion",
    "build_raw",
    "build_bounded",
    "build_combo",
    "DEFAULT_BLOCK_CAP",
    "SCHEMA_VERSION",
]

# Deepest block built by default; raw indices then reach ~2.95e6, which is
# where the asymptotic constants have long stabilised.
DEFAULT_BLOCK_CAP = 8

SCHEMA_VERSION = 1

_LN2 = math.log(2.0)


@dataclass(frozen=True, slots=True)
class RawPsi:
    k: int


@dataclass(frozen=True, slots=True)
class ScaledH:
    k: int
    domain_edge: float


@dataclass(frozen=True, slots=True)
class Combo:
    descriptor: blocks.ComboDescriptor


BasisDescriptor = Union[RawPsi, ScaledH, Combo]


class Expansion:
    """Immutable ordered collection of weighted basis functions."""

    def __init__(
        self,
        scheme: str,
        normalized: bool,
        log_weights: np.ndarray,
        *,
        domain_edge: float | None = None,
        max_block: int | None = None,
        log_sups: np.ndarray | None = None,
    ) -> None:
        if scheme not in ("raw", "bounded", "combo"):
            raise DomainError(f"unknown scheme {scheme!r}")
        self.scheme = scheme
        self.normalized = normalized
        self.domain_edge = domain_edge
        self.max_block = max_block
        self.log_weights = np.asarray(log_weights, dtype=np.float64)
        # Linear mirror; underflows to 0.0 when ln(lambda) < -745.
        with np.errstate(under="ignore"):
            self.weights = np.exp(self.log_weights)
        # log sup-norm of each (unnormalised) basis function; used to
        # normalise evaluations.  None means "not needed" (already raw).
        self._log_sups = None if log_sups is None else np.asarray(log_sups, np.float64)
        for arr in (self.log_weights, self.weights):
            arr.flags.writeable = False
        if self._log_sups is not None:
            self._log_sups.flags.writeable = False
        if self.scheme == "combo":
            if max_block is None:
                raise DomainError("combo expansion needs max_block")
            self._specs = [blocks.block_spec(n) for n in range(1, max_block + 1)]
        elif self.scheme == "bounded" and domain_edge is None:
            raise DomainError("bounded expansion needs a domain edge")

    # ------------------------------------------------------------------
    # Term access

    @property
    def horizon(self) -> int:
        """Number of retained terms."""
        return int(self.log_weights.shape[0])

    def __len__(self) -> int:
        return self.horizon

    def weight(self, i: int) -> float:
        return float(self.weights[i])

    def descriptor(self, i: int) -> BasisDescriptor:
        if not 0 <= i < self.horizon:
            raise RangeError(f"term {i} outside [0, {self.horizon})")
        if self.scheme == "raw":
            return RawPsi(i)
        if self.scheme == "bounded":
            return ScaledH(i, float(self.domain_edge))
        n, h, j = self._combo_position(i)
        return Combo(blocks.combo_descriptor(n, h, j))

    def terms(self) -> Iterator[tuple[float, BasisDescriptor]]:
        for i in range(self.horizon):
            yield self.weight(i), self.descriptor(i)

    def _combo_position(self, i: int) -> tuple[int, int, int]:
        for spec in self._specs:
            if i < spec.next_start:
                offset = i - spec.y
                return spec.n, offset // spec.c, offset % spec.c
        raise RangeError(f"term {i} beyond block {self.max_block}")

    def block_slice(self, n: int) -> slice:
        """Positions of the terms contributed by block n (combo scheme)."""
        if self.scheme != "combo":
            raise DomainError("block slices only exist for combo expansions")
        if not 1 <= n <= int(self.max_block):
            raise RangeError(f"block {n} not in expansion (max {self.max_block})")
        spec = self._specs[n - 1]
        return slice(spec.y, spec.next_start)

    # ------------------------------------------------------------------
    # Normalisation

    def normalize(self) -> "Expansion":
        """Unit-sup-norm form: weights absorb the squared sup-norms.

        Idempotent; combo expansions are built normalised already.
        """
        if self.normalized:
            return self
        if self.scheme == "raw":
            ks = np.arange(self.horizon, dtype=np.float64)
            log_m2 = basis.log_m_squared_many(ks)
            return Expansion(
                "raw", True, self.log_weights + log_m2, log_sups=0.5 * log_m2
            )
        # bounded: sup of h_k on [0, N]
        log_sups = self._bounded_log_sups()
        return Expansion(
            "bounded",
            True,
            self.log_weights + 2.0 * log_sups,
            domain_edge=self.domain_edge,
            log_sups=log_sups,
        )

    def _bounded_log_sups(self) -> np.ndarray:
        n_edge = float(self.domain_edge)
        ks = np.arange(self.horizon, dtype=np.float64)
        lf = log_factorial_array(ks)
        safe = np.where(ks > 0, ks, 1.0)
        interior = np.log(safe) + 0.5 * (ks * np.log(safe) - lf) - ks / 2.0
        boundary = (
            np.log(safe)
            + 0.5 * (ks * _LN2 - lf)
            + ks * math.log(n_edge)
            - n_edge * n_edge
        )
        out = np.where(np.sqrt(ks / 2.0) <= n_edge, interior, boundary)
        out[0] = 0.0  # h_0 = psi_0, sup 1 at x = 0
        return out

    # ------------------------------------------------------------------
    # Evaluation

    def basis_values(self, x: float) -> np.ndarray:
        """Signed linear values of every basis function at x, in term order.

        Magnitudes below the double underflow limit come out as 0.0; use
        :meth:`basis_log_values` when that matters.
        """
        signs, logs = self.basis_log_values(x)
        with np.errstate(under="ignore"):
            return signs * np.exp(logs)

    def basis_log_values(self, x: float) -> tuple[np.ndarray, np.ndarray]:
        """(signs, log magnitudes) of every basis function at x."""
        if self.scheme == "combo":
            return self._combo_log_values(x)
        ks = np.arange(self.horizon, dtype=np.float64)
        logs = basis.log_abs_psi_many(ks, x)
        signs = basis.psi_signs_many(np.arange(self.horizon), x)
        if self.scheme == "bounded":
            with np.errstate(divide="ignore"):
                scale = np.where(ks > 0, np.log(np.where(ks > 0, ks, 1.0)), 0.0)
            logs = logs + scale
        if self.normalized and self._log_sups is not None:
            logs = logs - self._log_sups
        return signs, logs

    def _combo_log_values(self, x: float) -> tuple[np.ndarray, np.ndarray]:
        signs = np.empty(self.horizon)
        logs = np.empty(self.horizon)
        for spec in self._specs:
            s, l = _combo_block_log_values(spec, x)
            sl = slice(spec.y, spec.next_start)
            if self._log_sups is not None:
                l = l - self._log_sups[sl]
            signs[sl] = s
            logs[sl] = l
        return signs, logs

    # ------------------------------------------------------------------
    # Serialisation

    def to_json_dict(self) -> dict:
        doc: dict = {
            "schema_version": SCHEMA_VERSION,
            "scheme": self.scheme,
            "normalized": self.normalized,
            "horizon": self.horizon,
        }
        if self.domain_edge is not None:
            doc["domain_edge"] = self.domain_edge
        if self.max_block is not None:
            doc["max_block"] = self.max_block
        terms = []
        for i in range(self.horizon):
            rec: dict = {"lam": float(self.weights[i]), "log_lam": float(self.log_weights[i])}
            if self.scheme == "combo":
                n, h, j = self._combo_position(i)
                rec.update(block=n, row=h, slot=j)
            else:
                rec["k"] = i
            terms.append(rec)
        doc["terms"] = terms
        return doc

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), indent=1) + "\n", encoding="utf-8"
        )

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Expansion":
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise DomainError(f"unsupported schema version {doc.get('schema_version')!r}")
        scheme = doc["scheme"]
        if scheme == "combo" and not doc.get("normalized", False):
            raise DomainError("combo expansions are always stored normalised")
        log_w = np.array([t["log_lam"] for t in doc["terms"]], dtype=np.float64)
        if np.any(np.isnan(log_w)):
            raise DomainError("corrupt weight record")
        ref = _rebuild_like(scheme, doc)
        if ref.horizon != len(log_w):
            raise DomainError(
                f"term count {len(log_w)} does not match scheme parameters ({ref.horizon})"
            )
        return Expansion(
            scheme,
            bool(doc["normalized"]),
            log_w,
            domain_edge=doc.get("domain_edge"),
            max_block=doc.get("max_block"),
            log_sups=ref._log_sups,
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "Expansion":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _rebuild_like(scheme: str, doc: dict) -> "Expansion":
    """Rebuild an expansion with the document's parameters to recover the
    derived arrays (sup-norms) that are not serialised."""
    if scheme == "raw":
        e = build_raw(doc["horizon"])
    elif scheme == "bounded":
        e = build_bounded(doc["domain_edge"], doc["horizon"])
    elif scheme == "combo":
        return build_combo(doc["max_block"], cap=doc["max_block"])
    else:
        raise DomainError(f"unknown scheme {scheme!r}")
    return e.normalize() if doc["normalized"] else e


def _combo_block_log_values(spec: blocks.BlockSpec, x: float) -> tuple[np.ndarray, np.ndarray]:
    """(signs, log mags) of all un-normalised combos of one block at x,
    ordered (row, slot) row-major."""
    count = spec.r * spec.c
    idx = spec.y + np.arange(count, dtype=np.float64)
    lpsi = basis.log_abs_psi_many(idx, x)
    psign = basis.psi_signs_many(spec.y + np.arange(count), x)
    # index y + h + k*r sits at flat position k*r + h -> reshape to (c, r)
    lv = lpsi.reshape(spec.c, spec.r)
    sv = psign.reshape(spec.c, spec.r)
    s = blocks.sign_matrix(spec.n).entries.astype(np.float64)
    anchor = np.max(lv, axis=0)  # (r,)
    dead = ~np.isfinite(anchor)
    safe_anchor = np.where(dead, 0.0, anchor)
    with np.errstate(under="ignore"):
        scaled = sv * np.exp(lv - safe_anchor[None, :])  # (c, r)
    sums = s @ scaled  # (c_slots, r)
    mags = np.abs(sums)
    # Flush cancellations below 1e-14 of the dominant term to exact zero,
    # matching the scalar signed log-sum semantics.
    alive = (mags >= 1e-14) & ~dead[None, :]
    with np.errstate(divide="ignore"):
        logs = np.where(
            alive,
            safe_anchor[None, :] + np.log(np.where(mags > 0, mags, 1.0))
            - 0.5 * math.log(spec.c),
            -np.inf,
        )
    signs = np.where(alive, np.sign(sums), 0.0)
    # back to (row, slot) ordering
    return signs.T.reshape(-1), logs.T.reshape(-1)


# ----------------------------------------------------------------------
# Builders


def build_raw(horizon: int) -> Expansion:
    """Plain truncation of the kernel power series: unit weights on psi_k."""
    if horizon < 1:
        raise RangeError("horizon must be >= 1")
    return Expansion("raw", False, np.zeros(horizon))


def build_bounded(domain_edge: float, horizon: int) -> Expansion:
    """Domain-[0, N] expansion with h_k = k psi_k and lambda_k = 1/k^2.

    Weight mass is summable (1 + pi^2/6 at most); the k = 0 term keeps the
    plain psi_0 with weight 1.
    """
    if not domain_edge > 0.0:
        raise DomainError("domain edge must be positive")
    if horizon < 1:
        raise RangeError("horizon must be >= 1")
    ks = np.arange(horizon, dtype=np.float64)
    log_w = np.where(ks > 0, -2.0 * np.log(np.where(ks > 0, ks, 1.0)), 0.0)
    return Expansion("bounded", False, log_w, domain_edge=float(domain_edge))


def build_combo(max_block: int, cap: int = DEFAULT_BLOCK_CAP) -> Expansion:
    """Normalised block-recombined expansion covering blocks 1..max_block.

    Every sup-norm is the leading-peak value m_{y+h} / sqrt(c): within a
    row the remaining peaks are lower and cross-talk between bumps is below
    ~1e-11 of a peak, so this matches the searched sup-norm to more digits
    than any consumer resolves (the agreement is itself under test).
    Term count is exactly y_{max_block+1}.
    """
    if max_block < 1:
        raise RangeError("max_block must be >= 1")
    if max_block > cap:
        raise RangeError(f"max_block {max_block} exceeds cap {cap}")
    parts = []
    sup_parts = []
    for n in range(1, max_block + 1):
        spec = blocks.block_spec(n)
        lm2 = basis.log_m_squared_many(spec.y + np.arange(spec.r, dtype=np.float64))
        log_lam_rows = lm2 - math.log(spec.c)  # ln(m^2 / c) per row
        parts.append(np.repeat(log_lam_rows, spec.c))
        sup_parts.append(np.repeat(0.5 * log_lam_rows, spec.c))
    log_w = np.concatenate(parts)
    return Expansion(
        "combo",
        True,
        log_w,
        max_block=max_block,
        log_sups=np.concatenate(sup_parts),
    )
