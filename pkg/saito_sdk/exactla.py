"""
Exact linear algebra over the rationals
Author: Saito SDK developers
Copyright 2024

Dense fraction-free (Bareiss) elimination, exact RREF, and a multi-modular
solver (word-sized primes, CRT, rational reconstruction, exact check) for the
interpolation systems of the metric pipeline.
"""
from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import gcd, isqrt
from typing import List, Optional, Sequence, Tuple

from sympy import prevprime

from saito_sdk.errors import DimensionMismatchError, InconsistencyError
from saito_sdk.utils import MPQ, ONE, ZERO, lcmDenominators, toRational

_log = logging.getLogger(__name__)

UNIQUE = "unique"
INCONSISTENT = "inconsistent"
UNDERDETERMINED = "underdetermined"

# largest primes below the machine word, consumed in order
PRIME_CEILING = 2 ** 62
# consecutive unusable primes before the modular path hands over to solve_exact
MAX_BAD_PRIMES = 3


@dataclass(frozen=True)
class RatMatrix:
    rows: int
    cols: int
    entries: Tuple

    def __post_init__(self):
        ents = tuple(toRational(v) for v in self.entries)
        if len(ents) != self.rows * self.cols:
            raise DimensionMismatchError(
                "{} entries for a {}x{} matrix".format(len(ents), self.rows, self.cols)
            )
        object.__setattr__(self, "entries", ents)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "RatMatrix":
        rows = [list(r) for r in rows]
        ncols = len(rows[0]) if rows else 0
        if any(len(r) != ncols for r in rows):
            raise DimensionMismatchError("Ragged rows")
        return cls(len(rows), ncols, tuple(v for r in rows for v in r))

    @classmethod
    def identity(cls, n: int) -> "RatMatrix":
        return cls(n, n, tuple(ONE if i == j else ZERO for i in range(n) for j in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RatMatrix":
        return cls(rows, cols, (ZERO,) * (rows * cols))

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> List:
        return list(self.entries[i * self.cols:(i + 1) * self.cols])

    def col(self, j: int) -> List:
        return [self.entries[i * self.cols + j] for i in range(self.rows)]

    def to_rows(self) -> List[List]:
        return [self.row(i) for i in range(self.rows)]

    def transpose(self) -> "RatMatrix":
        return RatMatrix.from_rows([self.col(j) for j in range(self.cols)]) if self.rows else RatMatrix(self.cols, 0, ())

    def __matmul__(self, other):
        if isinstance(other, RatMatrix):
            if self.cols != other.rows:
                raise DimensionMismatchError("{}x{} @ {}x{}".format(self.rows, self.cols, other.rows, other.cols))
            cols = [other.col(j) for j in range(other.cols)]
            return RatMatrix.from_rows(
                [[sum((a * b for a, b in zip(self.row(i), c)), ZERO) for c in cols] for i in range(self.rows)]
            )
        vec = [toRational(v) for v in other]
        if len(vec) != self.cols:
            raise DimensionMismatchError("Vector of length {} for {} columns".format(len(vec), self.cols))
        return [sum((a * b for a, b in zip(self.row(i), vec)), ZERO) for i in range(self.rows)]

    def is_symmetric(self) -> bool:
        return self.rows == self.cols and all(
            self[i, j] == self[j, i] for i in range(self.rows) for j in range(i)
        )

    def det(self) -> MPQ:
        if self.rows != self.cols:
            raise DimensionMismatchError("Determinant of a non-square matrix")
        if self.rows == 0:
            return ONE
        ints, scales = _integer_rows(self.to_rows())
        rank, _, swaps = _bareiss(ints, self.cols)
        if rank < self.rows:
            return ZERO
        d = ints[-1][-1] * (-1 if swaps % 2 else 1)
        denom = 1
        for s in scales:
            denom *= s
        return MPQ(d, denom)

    def inverse(self) -> "RatMatrix":
        if self.rows != self.cols:
            raise DimensionMismatchError("Inverse of a non-square matrix")
        n = self.rows
        aug = [r + [ONE if i == j else ZERO for j in range(n)] for i, r in enumerate(self.to_rows())]
        reduced, pivots = rref(aug, ncols=n)
        if pivots != list(range(n)):
            raise ZeroDivisionError("Matrix is singular")
        return RatMatrix.from_rows([row[n:] for row in reduced])

    def leading_minors(self) -> List[MPQ]:
        return [
            RatMatrix.from_rows([self.row(i)[:k] for i in range(k)]).det() for k in range(1, self.rows + 1)
        ]


@dataclass(frozen=True)
class SolveReport:
    status: str
    solution: Optional[Tuple] = None
    rank: int = 0
    method: str = "exact"
    primes_used: int = 0

    @property
    def unique(self) -> bool:
        return self.status == UNIQUE


#####  Fraction-free elimination  #####


def _integer_rows(rows: Sequence[Sequence], rhs: Optional[Sequence] = None):
    """Scales every row (and its rhs) by the lcm of its denominators."""
    out, scales = [], []
    for i, r in enumerate(rows):
        vals = [toRational(v) for v in r]
        if rhs is not None:
            vals.append(toRational(rhs[i]))
        s = lcmDenominators(vals)
        out.append([int(v.numerator) * (s // int(v.denominator)) for v in vals])
        scales.append(s)
    return out, scales


def _bareiss(M: List[List[int]], ncols: int):
    """
    In-place fraction-free row echelon form on the first `ncols` columns.
    Extra columns (an augmented rhs) are carried along.

    Returns
    --
    (rank, pivot columns, number of row swaps)
    """
    m = len(M)
    width = len(M[0]) if M else 0
    prev = 1
    r = 0
    swaps = 0
    pivots = []
    for c in range(ncols):
        if r == m:
            break
        p = next((i for i in range(r, m) if M[i][c] != 0), None)
        if p is None:
            continue
        if p != r:
            M[p], M[r] = M[r], M[p]
            swaps += 1
        rowr = M[r]
        piv = rowr[c]
        for i in range(r + 1, m):
            rowi = M[i]
            a = rowi[c]
            if a == 0:
                if piv != prev:
                    for j in range(c + 1, width):
                        rowi[j] = piv * rowi[j] // prev
            else:
                for j in range(c + 1, width):
                    rowi[j] = (piv * rowi[j] - a * rowr[j]) // prev
                rowi[c] = 0
        prev = piv
        pivots.append(c)
        r += 1
    return r, pivots, swaps


def _check_rhs(A: RatMatrix, b: Sequence):
    if len(b) != A.rows:
        raise DimensionMismatchError("rhs of length {} for {} rows".format(len(b), A.rows))


def _residual_is_zero(A: RatMatrix, x: Sequence, b: Sequence) -> bool:
    return all(lhs == toRational(rhs) for lhs, rhs in zip(A @ x, b))


def solve_exact(A: RatMatrix, b: Sequence) -> SolveReport:
    """
    Fraction-free Bareiss elimination of [A|b].

    Params
    --
    - A [RatMatrix] coefficient matrix, any shape
    - b [sequence] right hand side, one entry per row

    Returns
    --
    [SolveReport] unique (with a verified solution), inconsistent or underdetermined
    """
    _check_rhs(A, b)
    M, _ = _integer_rows(A.to_rows(), b)
    n = A.cols
    rank, pivots, _ = _bareiss(M, n)
    if any(row[n] != 0 for row in M[rank:]):
        return SolveReport(INCONSISTENT, None, rank, "exact")
    if rank < n:
        return SolveReport(UNDERDETERMINED, None, rank, "exact")
    x = [ZERO] * n
    for k in range(rank - 1, -1, -1):
        row = M[k]
        c = pivots[k]
        acc = toRational(row[n])
        for j in range(c + 1, n):
            if row[j]:
                acc -= row[j] * x[j]
        x[c] = acc / row[c]
    if not _residual_is_zero(A, x, b):
        raise InconsistencyError("Nonzero residual after exact elimination")
    return SolveReport(UNIQUE, tuple(x), rank, "exact")


def rank_profile(A: RatMatrix) -> Tuple[int, List[int]]:
    """Exact rank and the pivot columns of the row echelon form."""
    M, _ = _integer_rows(A.to_rows())
    rank, pivots, _ = _bareiss(M, A.cols)
    return rank, pivots


def rref(rows: Sequence[Sequence], ncols: Optional[int] = None):
    """
    Reduced row echelon form over Q, pivoting only in the first `ncols` columns.

    Returns
    --
    (list of reduced rows, pivot columns)
    """
    R = [[toRational(v) for v in r] for r in rows]
    if not R:
        return R, []
    width = len(R[0])
    ncols = width if ncols is None else ncols
    m = len(R)
    r = 0
    pivots = []
    for c in range(ncols):
        if r == m:
            break
        p = next((i for i in range(r, m) if R[i][c] != 0), None)
        if p is None:
            continue
        R[p], R[r] = R[r], R[p]
        inv = ONE / R[r][c]
        R[r] = [v * inv for v in R[r]]
        rowr = R[r]
        for i in range(m):
            if i != r and R[i][c] != 0:
                f = R[i][c]
                R[i] = [a - f * b for a, b in zip(R[i], rowr)]
        pivots.append(c)
        r += 1
    return R, pivots


#####  Multi-modular path  #####

_PRIMES: List[int] = []
_PRIMES_LOCK = threading.Lock()


def prime_pool(count: int) -> List[int]:
    """The first `count` primes of the deterministic pool (descending from 2^62)."""
    with _PRIMES_LOCK:
        while len(_PRIMES) < count:
            start = _PRIMES[-1] if _PRIMES else PRIME_CEILING
            _PRIMES.append(int(prevprime(start)))
        return _PRIMES[:count]


def _default_primes():
    k = 0
    while True:
        k += 1
        yield prime_pool(k)[-1]


def _solve_mod_p(M: List[List[int]], ncols: int, p: int):
    """Gaussian elimination of an integer augmented system modulo p."""
    rows = [[v % p for v in row] for row in M]
    m = len(rows)
    r = 0
    pivots = []
    for c in range(ncols):
        if r == m:
            break
        piv = next((i for i in range(r, m) if rows[i][c]), None)
        if piv is None:
            continue
        rows[piv], rows[r] = rows[r], rows[piv]
        inv = pow(rows[r][c], -1, p)
        rowr = [v * inv % p for v in rows[r]]
        rows[r] = rowr
        for i in range(r + 1, m):
            f = rows[i][c]
            if f:
                rows[i] = [(a - f * b) % p for a, b in zip(rows[i], rowr)]
        pivots.append(c)
        r += 1
    if any(row[ncols] for row in rows[r:]):
        return INCONSISTENT, r, None
    if r < ncols:
        return UNDERDETERMINED, r, None
    x = [0] * ncols
    for k in range(r - 1, -1, -1):
        row = rows[k]
        acc = row[ncols]
        for j in range(k + 1, ncols):
            if row[j]:
                acc -= row[j] * x[j]
        x[k] = acc % p
    return UNIQUE, r, x


def crt_step(value: int, modulus: int, residue: int, prime: int) -> int:
    """Lifts value mod `modulus` and residue mod `prime` to a value mod modulus*prime."""
    t = (residue - value) * pow(modulus % prime, -1, prime) % prime
    return value + modulus * t


def rational_reconstruction(a: int, m: int) -> Optional[MPQ]:
    """
    Finds n/d with |n|, d <= sqrt(m/2) and n = a*d (mod m), or None.
    """
    bound = isqrt(m // 2)
    r0, r1 = m, a % m
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > bound:
        return None
    if s1 < 0:
        r1, s1 = -r1, -s1
    if gcd(r1, s1) != 1:
        return None
    return MPQ(r1, s1)


def solve_modular(
    A: RatMatrix,
    b: Sequence,
    primes: Optional[Sequence[int]] = None,
    threads: int = 1,
    max_primes: int = 4096,
) -> SolveReport:
    """
    Solves A x = b modulo a sequence of primes, CRT-combines the residues and
    lifts them by rational reconstruction. A candidate is accepted only once it
    satisfies the system exactly over Q. Primes for which the system is not
    uniquely solvable are skipped; when no prime works the outcome is decided
    by solve_exact, so the contract is identical.

    Params
    --
    - A [RatMatrix] coefficient matrix
    - b [sequence] right hand side
    - primes [sequence] optional explicit prime sequence (default: deterministic pool)
    - threads [int] number of primes solved concurrently
    - max_primes [int] give up on the modular path after this many usable primes
    """
    _check_rhs(A, b)
    n = A.cols
    M, _ = _integer_rows(A.to_rows(), b)
    prime_iter = iter(primes) if primes is not None else _default_primes()
    batch_size = max(1, int(threads))
    executor = ThreadPoolExecutor(max_workers=batch_size) if batch_size > 1 else None

    value = None
    modulus = 1
    used = 0
    bad_in_a_row = 0
    try:
        while True:
            batch = []
            for _ in range(batch_size):
                p = next(prime_iter, None)
                if p is None:
                    break
                batch.append(p)
            if not batch:
                _log.debug("Prime sequence exhausted after %d primes", used)
                break
            if executor is not None:
                results = list(executor.map(lambda p: _solve_mod_p(M, n, p), batch))
            else:
                results = [_solve_mod_p(M, n, p) for p in batch]
            for p, (status, rank_p, x) in zip(batch, results):
                if status != UNIQUE:
                    bad_in_a_row += 1
                    _log.debug("Prime %d skipped (%s, rank %d)", p, status, rank_p)
                    continue
                bad_in_a_row = 0
                used += 1
                if value is None:
                    value = list(x)
                else:
                    value = [crt_step(v, modulus, r, p) for v, r in zip(value, x)]
                modulus *= p
                candidate = []
                for v in value:
                    q = rational_reconstruction(v, modulus)
                    if q is None:
                        candidate = None
                        break
                    candidate.append(q)
                if candidate is not None and _residual_is_zero(A, candidate, b):
                    return SolveReport(UNIQUE, tuple(candidate), n, "modular", used)
                _log.debug("Reconstruction not yet stable after %d primes", used)
            if bad_in_a_row >= MAX_BAD_PRIMES or used >= max_primes:
                break
    finally:
        if executor is not None:
            executor.shutdown()

    report = solve_exact(A, b)
    if report.unique:
        _log.warning("Modular path did not converge; exact elimination used instead")
    return SolveReport(report.status, report.solution, report.rank, "modular", used)
