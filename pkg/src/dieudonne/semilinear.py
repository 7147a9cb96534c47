"""Matrices over Witt rings and sigma^a-linear maps between free modules.

A map with matrix ``A`` and twist ``a`` sends a coordinate vector ``x`` to
``A * sigma^a(x)``.  Composition therefore reads
``(B, b) o (A, a) = (B * sigma^b(A), a + b)``.

Matrices are tuples of row tuples.  Generic helpers accept any ring object
exposing ``zero``, ``one`` and ``from_int`` whose elements support ``+ - *``,
``frobenius(k)``, ``is_zero``, ``is_unit`` and ``inverse``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Any, Sequence

from .errors import ParameterError
from .witt import WittRing, WittScalar, get_witt_ring

Matrix = tuple[tuple[Any, ...], ...]


def as_matrix(rows: Sequence[Sequence[Any]]) -> Matrix:
    return tuple(tuple(row) for row in rows)


def shape(A: Matrix) -> tuple[int, int]:
    return len(A), (len(A[0]) if A else 0)


def zeros(ring: Any, n: int, m: int) -> Matrix:
    z = ring.zero
    return tuple((z,) * m for _ in range(n))


def identity(ring: Any, n: int) -> Matrix:
    z, o = ring.zero, ring.one
    return tuple(tuple(o if i == j else z for j in range(n)) for i in range(n))


def diagonal(ring: Any, entries: Sequence[Any]) -> Matrix:
    n = len(entries)
    z = ring.zero
    return tuple(tuple(entries[i] if i == j else z for j in range(n)) for i in range(n))


def from_ints(ring: Any, rows: Sequence[Sequence[int]]) -> Matrix:
    return tuple(tuple(ring.from_int(v) for v in row) for row in rows)


def matmul(A: Matrix, B: Matrix, ring: Any) -> Matrix:
    n, k = shape(A)
    k2, m = shape(B)
    if k != k2:
        raise ParameterError(f"cannot multiply {n}x{k} by {k2}x{m}")
    out = []
    for i in range(n):
        row = []
        Ai = A[i]
        for j in range(m):
            acc = ring.zero
            for l in range(k):
                a = Ai[l]
                if a.is_zero():
                    continue
                b = B[l][j]
                if b.is_zero():
                    continue
                acc = acc + a * b
            row.append(acc)
        out.append(tuple(row))
    return tuple(out)


def matadd(A: Matrix, B: Matrix) -> Matrix:
    if shape(A) != shape(B):
        raise ParameterError("shape mismatch in addition")
    return tuple(tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def matsub(A: Matrix, B: Matrix) -> Matrix:
    if shape(A) != shape(B):
        raise ParameterError("shape mismatch in subtraction")
    return tuple(tuple(a - b for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def matscale(A: Matrix, c: Any) -> Matrix:
    return tuple(tuple(c * a for a in row) for row in A)


def matfrob(A: Matrix, k: int) -> Matrix:
    if k == 0:
        return A
    return tuple(tuple(a.frobenius(k) for a in row) for row in A)


def transpose(A: Matrix) -> Matrix:
    n, m = shape(A)
    return tuple(tuple(A[i][j] for i in range(n)) for j in range(m))


def submatrix(A: Matrix, rows: Sequence[int], cols: Sequence[int]) -> Matrix:
    return tuple(tuple(A[i][j] for j in cols) for i in rows)


def block_diag(ring: Any, A: Matrix, B: Matrix) -> Matrix:
    n1, m1 = shape(A)
    n2, m2 = shape(B)
    z = ring.zero
    top = tuple(tuple(row) + (z,) * m2 for row in A)
    bottom = tuple((z,) * m1 + tuple(row) for row in B)
    return top + bottom


def is_identity(A: Matrix) -> bool:
    n, m = shape(A)
    return n == m and all(
        (A[i][j] - 1).is_zero() if i == j else A[i][j].is_zero() for i in range(n) for j in range(m)
    )


def is_scalar(A: Matrix, c: int) -> bool:
    n, m = shape(A)
    return n == m and all(
        (A[i][j] - c).is_zero() if i == j else A[i][j].is_zero() for i in range(n) for j in range(m)
    )


def charpoly(A: Matrix, ring: Any) -> list[Any]:
    """Coefficients c_0..c_n of det(X*I - A), lowest degree first (Berkowitz, division free)."""
    n, m = shape(A)
    if n != m:
        raise ParameterError("charpoly needs a square matrix")
    if n == 0:
        return [ring.one]
    vec = [ring.one, -A[0][0]]  # highest degree first
    for r in range(1, n):
        col_c = [A[i][r] for i in range(r)]
        row_R = A[r][:r]
        col = [ring.one, -A[r][r]]
        v = col_c
        for k in range(r):
            acc = ring.zero
            for a, b in zip(row_R, v):
                if not a.is_zero() and not b.is_zero():
                    acc = acc + a * b
            col.append(-acc)
            if k + 1 < r:
                v = [
                    _dot([A[i][j] for j in range(r)], v, ring)
                    for i in range(r)
                ]
        new = []
        for i in range(r + 2):
            acc = ring.zero
            for j in range(max(0, i - (len(col) - 1)), min(i, r) + 1):
                a, b = col[i - j], vec[j]
                if not a.is_zero() and not b.is_zero():
                    acc = acc + a * b
            new.append(acc)
        vec = new
    return list(reversed(vec))


def _dot(u: Sequence[Any], v: Sequence[Any], ring: Any) -> Any:
    acc = ring.zero
    for a, b in zip(u, v):
        if not a.is_zero() and not b.is_zero():
            acc = acc + a * b
    return acc


def det(A: Matrix, ring: Any) -> Any:
    n, _ = shape(A)
    if n == 0:
        return ring.one
    c0 = charpoly(A, ring)[0]
    return c0 if n % 2 == 0 else -c0


def compound(A: Matrix, q: int, ring: Any) -> Matrix:
    """q-th compound matrix; rows and columns indexed by q-subsets in lexicographic order."""
    n, m = shape(A)
    rows = list(combinations(range(n), q))
    cols = list(combinations(range(m), q))
    return tuple(tuple(det(submatrix(A, I, J), ring) for J in cols) for I in rows)


def inverse(A: Matrix, ring: Any) -> Matrix:
    """Gauss-Jordan over a local ring; pivots must be units."""
    n, m = shape(A)
    if n != m:
        raise ParameterError("only square matrices are invertible")
    M = [list(row) + [ring.one if i == j else ring.zero for j in range(n)] for i, row in enumerate(A)]
    for k in range(n):
        piv = next((i for i in range(k, n) if M[i][k].is_unit()), None)
        if piv is None:
            raise ParameterError("matrix is not invertible over the base ring")
        M[k], M[piv] = M[piv], M[k]
        inv = M[k][k].inverse()
        M[k] = [inv * x for x in M[k]]
        for i in range(n):
            if i != k and not M[i][k].is_zero():
                c = M[i][k]
                M[i] = [x - c * y for x, y in zip(M[i], M[k])]
    return tuple(tuple(row[n:]) for row in M)


def is_invertible(A: Matrix, ring: Any) -> bool:
    return det(A, ring).is_unit()


# ---------------------------------------------------------------------------
# twisted maps


@dataclass(frozen=True)
class TwistedMap:
    """A sigma^twist-linear map given by its matrix; twist is normalized mod m for W_r(F_q)."""

    twist: int
    matrix: Matrix
    ring: Any

    def __post_init__(self) -> None:
        if isinstance(self.ring, WittRing):
            object.__setattr__(self, "twist", self.twist % self.ring.m)

    @property
    def rows(self) -> int:
        return len(self.matrix)

    @property
    def cols(self) -> int:
        return len(self.matrix[0]) if self.matrix else 0

    def __call__(self, x: Sequence[Any]) -> tuple[Any, ...]:
        if len(x) != self.cols:
            raise ParameterError("vector length does not match the domain rank")
        col = tuple((v.frobenius(self.twist),) for v in x)
        return tuple(row[0] for row in matmul(self.matrix, col, self.ring))

    def exterior_power(self, q: int) -> TwistedMap:
        return TwistedMap(self.twist, compound(self.matrix, q, self.ring), self.ring)

    def det(self) -> Any:
        return det(self.matrix, self.ring)

    def frobenius(self, k: int) -> TwistedMap:
        """Conjugate by sigma^k: same twist, entries hit by sigma^k."""
        return TwistedMap(self.twist, matfrob(self.matrix, k), self.ring)


def compose(g: TwistedMap, f: TwistedMap) -> TwistedMap:
    """g o f."""
    if g.ring is not f.ring:
        raise ParameterError("maps over different rings")
    if g.cols != f.rows:
        raise ParameterError(f"rank mismatch: {g.cols} != {f.rows}")
    return TwistedMap(f.twist + g.twist, matmul(g.matrix, matfrob(f.matrix, g.twist), g.ring), g.ring)


def identity_map(ring: Any, n: int) -> TwistedMap:
    return TwistedMap(0, identity(ring, n), ring)


# ---------------------------------------------------------------------------
# Smith normal form over W_r(F_q)


@dataclass(frozen=True)
class ElemDivisors:
    """Exponents a_1 >= .. >= a_n; a saturated entry equals r and means "at least r"."""

    exponents: tuple[int, ...]
    saturated: tuple[bool, ...]
    r: int

    def any_saturated(self) -> bool:
        return any(self.saturated)

    def count(self, a: int) -> int:
        return sum(1 for e, s in zip(self.exponents, self.saturated) if e == a and not s)


@dataclass(frozen=True)
class SNFResult:
    """P * M * Q = D with D diagonal p^{pivots[k]} in pivot (ascending) order; Pinv = P^{-1}."""

    divisors: ElemDivisors
    pivots: tuple[int, ...]
    P: Matrix
    Q: Matrix
    Pinv: Matrix


def _quo_pv(x: WittScalar, v: int) -> WittScalar:
    """x / p^v lifted back into the same ring (x must be divisible)."""
    if v == 0:
        return x
    pv = x.ring.p**v
    return WittScalar(x.ring, tuple(c // pv for c in x.c))


def smith_normal_form(M: Matrix, ring: WittRing) -> SNFResult:
    """Elementary divisors with transforms; pivot = minimal valuation, ties by (row, col)."""
    n, m = shape(M)
    r = ring.r
    A = [list(row) for row in M]
    P = [list(row) for row in identity(ring, n)]
    Pinv = [list(row) for row in identity(ring, n)]
    Q = [list(row) for row in identity(ring, m)]
    pivots: list[int] = []
    saturated: list[bool] = []
    for k in range(min(n, m)):
        best = None
        for i in range(k, n):
            for j in range(k, m):
                v = A[i][j].valuation()
                if v < r and (best is None or v < best[0]):
                    best = (v, i, j)
                    if v == 0:
                        break
            if best is not None and best[0] == 0:
                break
        if best is None:
            rest = min(n, m) - k
            pivots.extend([r] * rest)
            saturated.extend([True] * rest)
            break
        v, i, j = best
        if i != k:
            A[k], A[i] = A[i], A[k]
            P[k], P[i] = P[i], P[k]
            for row in Pinv:
                row[k], row[i] = row[i], row[k]
        if j != k:
            for row in A:
                row[k], row[j] = row[j], row[k]
            for row in Q:
                row[k], row[j] = row[j], row[k]
        u = _quo_pv(A[k][k], v)
        uinv = u.inverse()
        A[k] = [uinv * x for x in A[k]]
        P[k] = [uinv * x for x in P[k]]
        for row in Pinv:
            row[k] = row[k] * u
        for i2 in range(k + 1, n):
            b = A[i2][k]
            if b.is_zero():
                continue
            c = _quo_pv(b, v)
            A[i2] = [x - c * y for x, y in zip(A[i2], A[k])]
            P[i2] = [x - c * y for x, y in zip(P[i2], P[k])]
            for row in Pinv:
                row[k] = row[k] + c * row[i2]
        for j2 in range(k + 1, m):
            b = A[k][j2]
            if b.is_zero():
                continue
            c = _quo_pv(b, v)
            for row in A:
                row[j2] = row[j2] - c * row[k]
            for row in Q:
                row[j2] = row[j2] - c * row[k]
        pivots.append(v)
        saturated.append(False)
    order = sorted(range(len(pivots)), key=lambda t: (-pivots[t], not saturated[t]))
    divisors = ElemDivisors(
        tuple(pivots[t] for t in order), tuple(saturated[t] for t in order), r
    )
    return SNFResult(divisors, tuple(pivots), as_matrix(P), as_matrix(Q), as_matrix(Pinv))


def elementary_divisors(M: Matrix, ring: WittRing) -> ElemDivisors:
    return smith_normal_form(M, ring).divisors


# ---------------------------------------------------------------------------
# C1 + X C2 + (N + p C3) X^rho + p X C4 X^rho = 0


def _solve_mod_p(C1: Matrix, C2inv: Matrix, N: Matrix, rho: int, ring: WittRing) -> Matrix:
    """Row-by-row solution of C1 + X C2 + N X^rho = 0 modulo p (N nilpotent mod p)."""
    nr, ns = shape(C1)
    deps = [
        [j for j in range(nr) if N[i][j].valuation() == 0]
        for i in range(nr)
    ]
    X: list[tuple[Any, ...] | None] = [None] * nr
    remaining = set(range(nr))
    while remaining:
        ready = [i for i in sorted(remaining) if all(X[j] is not None for j in deps[i] if j != i) and i not in deps[i]]
        if not ready:
            raise ParameterError("N is not nilpotent modulo p; the row recursion does not close")
        for i in ready:
            rhs = list(C1[i])
            for j in deps[i]:
                xj = X[j]
                assert xj is not None
                rhs = [a + N[i][j] * b.frobenius(rho) for a, b in zip(rhs, xj)]
            row = matmul((tuple(rhs),), C2inv, ring)[0]
            X[i] = tuple(-a for a in row)
            remaining.discard(i)
    return tuple(row for row in X if row is not None)


def solve_unipotent_equation(
    C1: Matrix, C2: Matrix, C3: Matrix, C4: Matrix, N: Matrix, rho: int, ring: WittRing
) -> Matrix:
    """Solve C1 + X C2 + (N + p C3) X^rho + p X C4 X^rho = 0 modulo p^r by X = Gamma + p X'.

    Shapes: C1 and X are a x b, C2 is b x b, C3 and N are a x a, C4 is b x a.
    """
    a, b = shape(C1)
    if shape(C2) != (b, b) or shape(C3) != (a, a) or shape(N) != (a, a) or shape(C4) != (b, a):
        raise ParameterError("inconsistent shapes for the matrix equation")
    if not is_invertible(C2, ring):
        raise ParameterError("C2 is not invertible")
    p = ring.p
    X = zeros(ring, a, b)
    C1c, C2c, C3c, C4c = C1, C2, C3, C4
    for step in range(ring.r):
        gamma = _solve_mod_p(C1c, inverse(C2c, ring), N, rho, ring)
        X = matadd(X, matscale(gamma, ring.from_int(p**step)))
        g_rho = matfrob(gamma, rho)
        lhs_lin = matadd(matmul(N, g_rho, ring), matscale(matmul(C3c, g_rho, ring), ring.from_int(p)))
        quad = matscale(matmul(matmul(gamma, C4c, ring), g_rho, ring), ring.from_int(p))
        E = matadd(matadd(C1c, matmul(gamma, C2c, ring)), matadd(lhs_lin, quad))
        if any(x.valuation() < 1 for row in E for x in row):
            raise AssertionError("mod p solution does not satisfy the reduced equation")
        C1c = tuple(tuple(_quo_pv(x, 1) for x in row) for row in E)
        C2c = matadd(C2c, matscale(matmul(C4c, g_rho, ring), ring.from_int(p)))
        C3c = matadd(C3c, matmul(gamma, C4c, ring))
        C4c = matscale(C4c, ring.from_int(p))
    return X


def unipotent_residual(
    X: Matrix, C1: Matrix, C2: Matrix, C3: Matrix, C4: Matrix, N: Matrix, rho: int, ring: WittRing
) -> Matrix:
    x_rho = matfrob(X, rho)
    pI = ring.from_int(ring.p)
    lin = matmul(matadd(N, matscale(C3, pI)), x_rho, ring)
    quad = matscale(matmul(matmul(X, C4, ring), x_rho, ring), pI)
    return matadd(matadd(C1, matmul(X, C2, ring)), matadd(lin, quad))


def truncate_matrix(A: Matrix, s: int) -> Matrix:
    return tuple(tuple(x.truncate(s) for x in row) for row in A)


def embed_matrix(A: Matrix, target: WittRing) -> Matrix:
    return tuple(tuple(x.embed(target) for x in row) for row in A)


def scalar_ring(p: int, m: int, r: int) -> WittRing:
    return get_witt_ring(p, m, r)
