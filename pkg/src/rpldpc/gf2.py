"""Binary linear algebra for encoding and codeword completion.

Elimination runs on rows bit-packed into uint64 words, which keeps the
one-time encoder/completion setup cheap at desk scale (N up to a few
thousand).  Hot paths (batched encode, completion, syndromes) are dense
float64 or sparse integer matmuls reduced mod 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .lifting import LiftedCode


class LengthMismatch(ValueError):
    pass


class RankDeficient(RuntimeError):
    """Parity-check matrix does not have full row rank; relift with a new seed."""


class InfoSetNotDetermining(RuntimeError):
    """The parity-column submatrix is singular, so the info positions cannot
    be pinned; relift with a new seed (column swaps would move info bits
    across fading blocks and are not an option)."""


class NotDetermining(RuntimeError):
    """The known positions do not determine a unique codeword."""


class Inconsistent(RuntimeError):
    """No codeword agrees with the known values."""


def _to_dense_bits(H) -> np.ndarray:
    if sp.issparse(H):
        return np.ascontiguousarray(H.toarray(), dtype=np.uint8) & 1
    return (np.asarray(H, dtype=np.uint8) & 1).copy()


def _pack(bits: np.ndarray) -> np.ndarray:
    """Pack a (r, c) 0/1 matrix into (r, ceil(c/64)) uint64 words, LSB first."""
    r, c = bits.shape
    words = (c + 63) // 64
    bytes_ = np.packbits(np.ascontiguousarray(bits), axis=1, bitorder="little")
    pad = words * 8 - bytes_.shape[1]
    if pad:
        bytes_ = np.hstack([bytes_, np.zeros((r, pad), dtype=np.uint8)])
    return np.ascontiguousarray(bytes_).view(np.uint64)


def _unpack(packed: np.ndarray, c: int) -> np.ndarray:
    bits = np.unpackbits(packed.view(np.uint8), axis=1, bitorder="little")
    return bits[:, :c]


def _rref(P: np.ndarray, pivot_cols: range) -> list[int]:
    """In-place reduced row echelon form over the given pivot columns.

    Row operations span the full packed width, so columns to the right of the
    pivot region accumulate the elimination transform.  Returns the pivot
    column indices in assignment order.
    """
    nrows = P.shape[0]
    pivots: list[int] = []
    r = 0
    for c in pivot_cols:
        if r >= nrows:
            break
        w, bit = c >> 6, np.uint64(c & 63)
        col = (P[:, w] >> bit) & np.uint64(1)
        hot = np.nonzero(col[r:])[0]
        if hot.size == 0:
            continue
        p = r + int(hot[0])
        if p != r:
            P[[r, p]] = P[[p, r]]
        col = (P[:, w] >> bit) & np.uint64(1)
        col[r] = 0
        rows = np.nonzero(col)[0]
        if rows.size:
            P[rows] ^= P[r]
        pivots.append(c)
        r += 1
    return pivots


def rank(H) -> int:
    """GF(2) rank by packed Gaussian elimination; H dense 0/1 or scipy sparse."""
    bits = _to_dense_bits(H)
    if bits.size == 0:
        return 0
    P = _pack(bits)
    return len(_rref(P, range(bits.shape[1])))


@dataclass(eq=False)
class Encoder:
    """Systematic encoder with info bits pinned to the code's info positions."""

    code: LiftedCode
    info_positions: np.ndarray
    parity_positions: np.ndarray
    _A: np.ndarray  # (M, K) float64 0/1: parity = A @ info mod 2

    @property
    def K(self) -> int:
        return len(self.info_positions)

    @property
    def N(self) -> int:
        return self.code.N


def build_encoder(code: LiftedCode) -> Encoder:
    """Solve parity bits as a linear function of the pinned info bits.

    Raises RankDeficient when H has dependent rows, InfoSetNotDetermining when
    H is full rank but the parity columns are not invertible; in either case
    the caller should relift with a fresh seed.
    """
    H = _to_dense_bits(code.H)
    M, N = H.shape
    info = np.asarray(code.info_positions, dtype=np.int64)
    parity = np.setdiff1d(np.arange(N), info)
    if len(parity) != M:
        raise InfoSetNotDetermining(
            f"{len(parity)} parity columns cannot be solved by {M} checks"
        )
    P = _pack(np.hstack([H[:, parity], H[:, info]]))
    pivots = _rref(P, range(M))
    if len(pivots) < M:
        leftover = _rref(P[len(pivots):], range(M, M + len(info)))
        if len(pivots) + len(leftover) < M:
            raise RankDeficient(f"rank {len(pivots) + len(leftover)} < {M} rows")
        raise InfoSetNotDetermining("parity-column submatrix is singular")
    A = _unpack(P, M + len(info))[:, M:]
    return Encoder(
        code=code,
        info_positions=info,
        parity_positions=parity,
        _A=A.astype(np.float64),
    )


def encode(enc: Encoder, info: np.ndarray) -> np.ndarray:
    """Map K info bits to the unique codeword carrying them at info_positions."""
    info = np.asarray(info, dtype=np.uint8)
    if info.shape != (enc.K,):
        raise LengthMismatch(f"expected {enc.K} info bits, got {info.shape}")
    x = np.zeros(enc.N, dtype=np.uint8)
    x[enc.info_positions] = info
    x[enc.parity_positions] = (enc._A @ info.astype(np.float64)) % 2
    return x


def encode_batch(enc: Encoder, infos: np.ndarray) -> np.ndarray:
    infos = np.asarray(infos, dtype=np.uint8)
    if infos.ndim != 2 or infos.shape[1] != enc.K:
        raise LengthMismatch(f"expected (B, {enc.K}) info bits, got {infos.shape}")
    X = np.zeros((infos.shape[0], enc.N), dtype=np.uint8)
    X[:, enc.info_positions] = infos
    X[:, enc.parity_positions] = (infos.astype(np.float64) @ enc._A.T) % 2
    return X


def syndrome(code: LiftedCode, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint8)
    if x.shape != (code.N,):
        raise LengthMismatch(f"expected {code.N} bits, got {x.shape}")
    return np.asarray(code.H.dot(x.astype(np.int64)) % 2, dtype=np.uint8)


def syndrome_batch(code: LiftedCode, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.uint8)
    if X.ndim != 2 or X.shape[1] != code.N:
        raise LengthMismatch(f"expected (B, {code.N}) bits, got {X.shape}")
    return np.asarray(code.H.dot(X.T.astype(np.int64)) % 2, dtype=np.uint8).T


class CompletionSolver:
    """Reusable linear completion of codewords from a fixed known-position set.

    Precomputes R with R @ H_unknown = I, so unknown bits follow from the
    known ones by one matmul; a residual check flags values inconsistent with
    every codeword.
    """

    def __init__(self, code: LiftedCode, known_positions):
        known = np.unique(np.asarray(known_positions, dtype=np.int64))
        if known.size and (known[0] < 0 or known[-1] >= code.N):
            raise IndexError("known positions out of range")
        self.code = code
        self.known = known
        self.unknown = np.setdiff1d(np.arange(code.N), known)
        H = code.H.tocsc()
        self._H_u = H[:, self.unknown].tocsr()
        self._H_k = H[:, known].tocsr()
        M = code.M
        U = len(self.unknown)
        P = _pack(np.hstack([_to_dense_bits(self._H_u), np.eye(M, dtype=np.uint8)]))
        pivots = _rref(P, range(U))
        if len(pivots) < U:
            raise NotDetermining(
                f"known set leaves {U - len(pivots)} of {U} unknown columns free"
            )
        self._R = _unpack(P[:U], U + M)[:, U:].astype(np.float64)

    def solve_batch(self, known_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Returns (codewords (B, N), consistent flags (B,))."""
        V = np.asarray(known_values, dtype=np.uint8)
        if V.ndim != 2 or V.shape[1] != len(self.known):
            raise LengthMismatch(f"expected (B, {len(self.known)}) known bits")
        b = np.asarray(self._H_k.dot(V.T.astype(np.int64)) % 2, dtype=np.float64)
        u = (self._R @ b) % 2
        resid = (self._H_u.dot(u.astype(np.int64)) + b.astype(np.int64)) % 2
        consistent = ~resid.any(axis=0)
        X = np.zeros((V.shape[0], self.code.N), dtype=np.uint8)
        X[:, self.known] = V
        X[:, self.unknown] = u.T
        return X, consistent

    def solve(self, known_values: np.ndarray) -> tuple[np.ndarray, bool]:
        X, ok = self.solve_batch(np.asarray(known_values, dtype=np.uint8)[None, :])
        return X[0], bool(ok[0])


def complete_codeword(code: LiftedCode, known_positions, known_values) -> np.ndarray:
    """Unique codeword agreeing with the known bits.

    Raises NotDetermining when several codewords match and Inconsistent when
    none does (a wrong frame slipped past a non-genie success check).
    """
    solver = CompletionSolver(code, known_positions)
    x, ok = solver.solve(known_values)
    if not ok:
        raise Inconsistent("known values do not extend to any codeword")
    return x
