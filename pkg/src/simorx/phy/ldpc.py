"""Regular rate-1/2 LDPC code with a normalised min-sum decoder.

The parity-check matrix is a seeded biregular construction: column weight
3, row weight 6, ``m = n/2`` checks, built by matching column stubs to
check stubs and swapping away duplicate edges.  (The classic banded
variant is useless here: every band sums to the all-ones row, so two bands
are always linearly dependent and the matrix can never reach full rank.)
Gaussian elimination over GF(2) turns the matrix into systematic form;
codewords are ``[info | parity]``.  Constructions that end up
rank-deficient are regenerated with the next seed (logged), so a given
``(n, seed)`` pair always yields the same code.

LLR convention throughout the package: positive means bit 1 is more likely
(``log P(b=1)/P(b=0)``).  The decoder works internally in the opposite
polarity, which is the one the standard min-sum update rules are written
in, and converts at the boundary.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError

logger = logging.getLogger(__name__)

ROW_WEIGHT = 6
COL_WEIGHT = 3
DEFAULT_CONSTRUCTION_SEED = 1


@dataclass(frozen=True)
class LdpcCode:
    n: int
    k: int
    construction_seed: int
    row_vars: np.ndarray = field(repr=False)         # [m, 6] variable indices per check
    var_edges: np.ndarray = field(repr=False)        # [n, 3] flat edge index per variable
    encoder_matrix: np.ndarray = field(repr=False)   # [m, k] uint8, parity = A @ info

    @property
    def m(self) -> int:
        return self.n - self.k

    @property
    def rate(self) -> float:
        return self.k / self.n

    def to_dense(self) -> np.ndarray:
        h = np.zeros((self.m, self.n), dtype=np.uint8)
        rows = np.repeat(np.arange(self.m), ROW_WEIGHT)
        h[rows, self.row_vars.reshape(-1)] = 1
        return h


def _biregular_rows(n: int, rng: np.random.Generator, max_repair: int = 200):
    """Check-node adjacency ``[m, 6]`` with every column used exactly 3 times.

    Duplicate edges (one column twice in a row) are swapped with random
    stubs until none remain; returns None if that fails to settle.
    """
    m = n // 2
    stubs = np.repeat(np.arange(n), COL_WEIGHT)
    rng.shuffle(stubs)
    rows = stubs.reshape(m, ROW_WEIGHT)
    flat = rows.reshape(-1)
    for _ in range(max_repair):
        sorted_rows = np.sort(rows, axis=1)
        dup_rows = np.nonzero((sorted_rows[:, 1:] == sorted_rows[:, :-1]).any(axis=1))[0]
        if dup_rows.size == 0:
            return rows
        for r in dup_rows:
            vals, counts = np.unique(rows[r], return_counts=True)
            for col in vals[counts > 1]:
                pos = r * ROW_WEIGHT + int(np.nonzero(rows[r] == col)[0][0])
                j = int(rng.integers(flat.size))
                flat[pos], flat[j] = flat[j], flat[pos]
    return None


def _matrix_from_rows(rows: np.ndarray, n: int) -> np.ndarray:
    m = rows.shape[0]
    h = np.zeros((m, n), dtype=np.uint8)
    h[np.repeat(np.arange(m), ROW_WEIGHT), rows.reshape(-1)] = 1
    return h


def _rref_gf2(h: np.ndarray) -> tuple[np.ndarray, list[int]]:
    h = h.copy()
    m, n = h.shape
    r = 0
    pivots: list[int] = []
    for c in range(n):
        if r == m:
            break
        below = np.nonzero(h[r:, c])[0]
        if below.size == 0:
            continue
        pr = r + below[0]
        if pr != r:
            h[[r, pr]] = h[[pr, r]]
        mask = h[:, c].astype(bool)
        mask[r] = False
        h[mask] ^= h[r]
        pivots.append(c)
        r += 1
    return h, pivots


@functools.lru_cache(maxsize=32)
def build_code(n: int, seed: int = DEFAULT_CONSTRUCTION_SEED, max_attempts: int = 32) -> LdpcCode:
    """Construct the rate-1/2 code of block length ``n`` (``n`` divisible by 6)."""
    if n % 2 or n < 4 * ROW_WEIGHT:
        raise ConfigError(f"block length must be even and at least {4 * ROW_WEIGHT}, got {n}")
    m = n // 2
    for attempt in range(max_attempts):
        rng = np.random.default_rng(seed + attempt)
        rows = _biregular_rows(n, rng)
        if rows is None:
            logger.info("ldpc n=%d seed %d: edge repair did not settle, retrying", n, seed + attempt)
            continue
        h = _matrix_from_rows(rows, n)
        rref, pivots = _rref_gf2(h)
        if len(pivots) == m:
            if attempt:
                logger.info("ldpc n=%d: seed %d unusable, using seed %d", n, seed, seed + attempt)
            break
        logger.info("ldpc n=%d seed %d: rank %d < %d, retrying", n, seed + attempt, len(pivots), m)
    else:
        raise ConfigError(f"no full-rank construction for n={n} within {max_attempts} seeds")

    pivot_cols = np.asarray(pivots)
    free_cols = np.setdiff1d(np.arange(n), pivot_cols)
    # Systematic column order: information positions first, then parity.
    order = np.concatenate([free_cols, pivot_cols])
    h_sys = h[:, order]
    encoder = np.ascontiguousarray(rref[:, free_cols])

    _, cols = np.nonzero(h_sys)
    row_vars = cols.reshape(m, ROW_WEIGHT).astype(np.int32)
    flat_vars = row_vars.reshape(-1)
    if not np.all(np.bincount(flat_vars, minlength=n) == COL_WEIGHT):
        raise ConfigError("construction lost the regular column weight")
    edge_of = np.argsort(flat_vars, kind="stable").reshape(n, COL_WEIGHT)
    return LdpcCode(n, n - m, seed, row_vars, edge_of, encoder)


def encode(bits: np.ndarray, code: LdpcCode) -> np.ndarray:
    """Systematic encoding, ``[..., k] -> [..., n]`` uint8."""
    bits = np.asarray(bits)
    if bits.shape[-1] != code.k:
        raise ConfigError(f"expected {code.k} information bits, got {bits.shape[-1]}")
    # Counts stay far below 2**24, so a float32 GEMM is exact and much
    # faster than integer matmul.
    parity = (bits.astype(np.float32) @ code.encoder_matrix.T.astype(np.float32)) % 2
    return np.concatenate([bits.astype(np.uint8), parity.astype(np.uint8)], axis=-1)


def syndrome(codeword: np.ndarray, code: LdpcCode) -> np.ndarray:
    """Parity of every check, ``[..., n] -> [..., m]`` uint8."""
    cw = np.asarray(codeword, dtype=np.uint8)
    return np.bitwise_xor.reduce(cw[..., code.row_vars], axis=-1)


def decode(
    llrs: np.ndarray,
    code: LdpcCode,
    max_iters: int = 20,
    normalization: float = 0.75,
) -> tuple[np.ndarray, np.ndarray]:
    """Normalised min-sum decoding with flooding schedule and early stop.

    Returns ``(info_bits, converged)``: hard information bits ``[..., k]``
    uint8 and a boolean per block.  A block converges when its hard decision
    satisfies every check; its output freezes at that point.  A posterior of
    exactly zero carries no decision (the bit defaults to 0), so all-zero
    input LLRs report ``converged=False`` even though the zero word
    trivially satisfies the checks.
    """
    llrs = np.asarray(llrs)
    if llrs.shape[-1] != code.n:
        raise ConfigError(f"expected {code.n} LLRs, got {llrs.shape[-1]}")
    if not np.all(np.isfinite(llrs)):
        raise ConfigError("LLRs must be finite")
    lead = llrs.shape[:-1]
    l0 = -llrs.reshape(-1, code.n).astype(np.float32)  # positive favours bit 0
    batch = l0.shape[0]
    m = code.m

    q = l0[:, code.row_vars]
    done = np.zeros(batch, dtype=bool)
    final = np.zeros((batch, code.n), dtype=np.uint8)
    hard = np.zeros_like(final)
    pos = np.arange(ROW_WEIGHT)

    for _ in range(max_iters):
        absq = np.abs(q)
        sg = np.where(q < 0, -1.0, 1.0).astype(np.float32)
        part = np.partition(absq, 1, axis=-1)
        min1, min2 = part[..., 0], part[..., 1]
        amin = np.argmin(absq, axis=-1)
        sign_ex = sg.prod(axis=-1, keepdims=True) * sg  # product excluding self
        mag_ex = np.where(pos == amin[..., None], min2[..., None], min1[..., None])
        r = normalization * sign_ex * mag_ex

        post = l0 + r.reshape(batch, m * ROW_WEIGHT)[:, code.var_edges].sum(axis=-1)
        hard = (post < 0).astype(np.uint8)
        parity = np.bitwise_xor.reduce(hard[:, code.row_vars], axis=-1)
        ok = ~parity.any(axis=-1) & post.any(axis=-1)
        newly = ok & ~done
        if newly.any():
            final[newly] = hard[newly]
            done = done | newly
        if done.all():
            break
        q = post[:, code.row_vars] - r

    final[~done] = hard[~done]
    info = final[:, : code.k]
    return info.reshape(lead + (code.k,)), done.reshape(lead)


def export_parity_check(code: LdpcCode) -> str:
    """Text form of the parity-check matrix: one line of variable indices per check."""
    lines = [
        f"# ldpc n={code.n} k={code.k} row_weight={ROW_WEIGHT} "
        f"col_weight={COL_WEIGHT} construction_seed={code.construction_seed}"
    ]
    for row in code.row_vars:
        lines.append(" ".join(str(v) for v in row))
    return "\n".join(lines) + "\n"
