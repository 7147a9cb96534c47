"""Truncated Witt vectors.

Two representations live here:

* :class:`WittScalar` -- ``W_r(F_q)`` as ``(Z/p^r)[x]/(P)`` where ``P`` is a monic
  lift of the defining polynomial of ``F_q``.  Fast, used for all point
  computations.
* :class:`WittSeries` -- length ``r_w`` Witt vectors of ``F_q[t_1..t_s]``
  truncated at total degree ``deg``, stored in genuine Witt coordinates and
  combined through the universal structure polynomials.

Finite field elements are encoded as integers ``sum c_i p^i`` over the
polynomial basis ``1, x, .., x^{m-1}``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .errors import CapabilityError, NotDivisibleError, ParameterError

MAX_WITT_LENGTH = 5


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _vp(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


# ---------------------------------------------------------------------------
# finite fields


def _polymulmod(a: Sequence[int], b: Sequence[int], mod: Sequence[int], p: int) -> list[int]:
    m = len(mod) - 1
    prod = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                prod[i + j] += ai * bj
    for k in range(len(prod) - 1, m - 1, -1):
        t = prod[k] % p
        if t:
            for i in range(m + 1):
                prod[k - m + i] -= t * mod[i]
    out = [c % p for c in prod[:m]]
    return out + [0] * (m - len(out))


def _find_modulus(p: int, m: int) -> tuple[int, ...]:
    """Lexicographically first monic primitive polynomial of degree m (``x`` when m = 1)."""
    if m == 1:
        return (0, 1)
    q = p**m
    factors = _prime_factors(q - 1)
    for code in range(p**m):
        low = [(code // p**i) % p for i in range(m)]
        if low[0] == 0:
            continue
        mod = low + [1]
        x = [0, 1] + [0] * (m - 2)

        def xpow(e: int) -> list[int]:
            res = [1] + [0] * (m - 1)
            base = x
            while e:
                if e & 1:
                    res = _polymulmod(res, base, mod, p)
                base = _polymulmod(base, base, mod, p)
                e >>= 1
            return res

        one = [1] + [0] * (m - 1)
        if xpow(q - 1) != one:
            continue
        if all(xpow((q - 1) // ell) != one for ell in factors):
            return tuple(mod)
    raise AssertionError("no primitive polynomial found")


class GF:
    """The field F_{p^m} with log/antilog tables over a fixed primitive element."""

    def __init__(self, p: int, m: int):
        if not _is_prime(p):
            raise ParameterError(f"p = {p} is not prime")
        if m < 1:
            raise ParameterError(f"field degree must be positive, got {m}")
        self.p, self.m, self.q = p, m, p**m
        self.modulus = _find_modulus(p, m)
        q = self.q
        # primitive element: x itself when m > 1, a primitive root when m = 1
        factors = _prime_factors(q - 1)
        for g in range(1, q):
            if self._slow_order_is_full(g, factors):
                break
        exp = [0] * (q - 1)
        log = [-1] * q
        cur = 1
        for i in range(q - 1):
            exp[i] = cur
            log[cur] = i
            cur = self._slow_mul(cur, g)
        self._exp, self._log = exp, log

    def _decode(self, code: int) -> list[int]:
        p = self.p
        return [(code // p**i) % p for i in range(self.m)]

    def _encode(self, coeffs: Sequence[int]) -> int:
        p = self.p
        return sum((c % p) * p**i for i, c in enumerate(coeffs))

    def _slow_mul(self, a: int, b: int) -> int:
        return self._encode(_polymulmod(self._decode(a), self._decode(b), self.modulus, self.p))

    def _slow_pow(self, a: int, e: int) -> int:
        res, base = 1, a
        while e:
            if e & 1:
                res = self._slow_mul(res, base)
            base = self._slow_mul(base, base)
            e >>= 1
        return res

    def _slow_order_is_full(self, g: int, factors: list[int]) -> bool:
        q = self.q
        if q == 2:
            return g == 1
        if self._slow_pow(g, q - 1) != 1:
            return False
        return all(self._slow_pow(g, (q - 1) // ell) != 1 for ell in factors)

    def add(self, a: int, b: int) -> int:
        p = self.p
        if p == 2:
            return a ^ b
        if self.m == 1:
            return (a + b) % p
        res, scale = 0, 1
        while a or b:
            res += ((a + b) % p) * scale
            a //= p
            b //= p
            scale *= p
        return res

    def neg(self, a: int) -> int:
        p = self.p
        if p == 2:
            return a
        if self.m == 1:
            return (-a) % p
        res, scale = 0, 1
        while a:
            res += ((-a) % p) * scale
            a //= p
            scale *= p
        return res

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self._exp[(self._log[a] + self._log[b]) % (self.q - 1)]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of 0 in a finite field")
        return self._exp[(-self._log[a]) % (self.q - 1)]

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            if e < 0:
                raise ZeroDivisionError("negative power of 0")
            return 1 if e == 0 else 0
        return self._exp[(self._log[a] * e) % (self.q - 1)]

    def frob(self, a: int, k: int = 1) -> int:
        """a^(p^k); k may be negative (p-th roots)."""
        return self.pow(a, pow(self.p, k % self.m))

    def from_int(self, n: int) -> int:
        return n % self.p

    def __repr__(self) -> str:
        return f"GF({self.p}^{self.m})"


@lru_cache(maxsize=None)
def get_field(p: int, m: int) -> GF:
    return GF(p, m)


class FqElem:
    """An element of F_{p^m}; ``coeffs`` are its coordinates in the basis 1, x, .., x^{m-1}."""

    __slots__ = ("field", "code")

    def __init__(self, field: GF, code: int):
        self.field = field
        self.code = code

    @classmethod
    def from_coeffs(cls, p: int, m: int, coeffs: Sequence[int]) -> FqElem:
        if len(coeffs) != m:
            raise ParameterError(f"expected {m} coefficients, got {len(coeffs)}")
        F = get_field(p, m)
        return cls(F, F._encode(coeffs))

    @property
    def p(self) -> int:
        return self.field.p

    @property
    def m(self) -> int:
        return self.field.m

    @property
    def coeffs(self) -> tuple[int, ...]:
        return tuple(self.field._decode(self.code))

    def _check(self, other: FqElem) -> None:
        if other.field is not self.field:
            raise ParameterError(f"field mismatch: {self.field} vs {other.field}")

    def __add__(self, other: FqElem) -> FqElem:
        self._check(other)
        return FqElem(self.field, self.field.add(self.code, other.code))

    def __sub__(self, other: FqElem) -> FqElem:
        self._check(other)
        return FqElem(self.field, self.field.sub(self.code, other.code))

    def __neg__(self) -> FqElem:
        return FqElem(self.field, self.field.neg(self.code))

    def __mul__(self, other: FqElem) -> FqElem:
        self._check(other)
        return FqElem(self.field, self.field.mul(self.code, other.code))

    def __truediv__(self, other: FqElem) -> FqElem:
        self._check(other)
        return FqElem(self.field, self.field.mul(self.code, self.field.inv(other.code)))

    def __pow__(self, e: int) -> FqElem:
        return FqElem(self.field, self.field.pow(self.code, e))

    def inverse(self) -> FqElem:
        return FqElem(self.field, self.field.inv(self.code))

    def frobenius(self, k: int = 1) -> FqElem:
        return FqElem(self.field, self.field.frob(self.code, k))

    def is_zero(self) -> bool:
        return self.code == 0

    def __bool__(self) -> bool:
        return self.code != 0

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FqElem) and other.field is self.field and other.code == self.code

    def __hash__(self) -> int:
        return hash((self.field.p, self.field.m, self.code))

    def __repr__(self) -> str:
        if self.field.m == 1:
            return f"F{self.field.p}({self.code})"
        return f"F{self.field.q}{self.coeffs}"


# ---------------------------------------------------------------------------
# W_r(F_q), unramified representation


class WittRing:
    """W_r(F_{p^m}) = (Z/p^r)[x]/(P); use :func:`get_witt_ring` to obtain instances."""

    def __init__(self, p: int, m: int, r: int):
        if r < 1:
            raise ParameterError(f"precision must be at least 1, got {r}")
        self.field = get_field(p, m)
        self.p, self.m, self.r = p, m, r
        self.pr = p**r
        self.modulus = self.field.modulus
        self._sigma_cache: dict[int, tuple[tuple[int, ...], ...]] = {}
        self._embed_cache: dict[tuple[int, int], WittScalar] = {}
        self.zero = WittScalar(self, (0,) * m)
        self.one = WittScalar(self, (1,) + (0,) * (m - 1))

    def __repr__(self) -> str:
        return f"W_{self.r}(F_{self.p}^{self.m})"

    # raw polynomial arithmetic on coefficient tuples
    def _mul(self, a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
        pr, m = self.pr, self.m
        if m == 1:
            return ((a[0] * b[0]) % pr,)
        prod = [0] * (2 * m - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    if bj:
                        prod[i + j] += ai * bj
        mod = self.modulus
        for k in range(2 * m - 2, m - 1, -1):
            t = prod[k]
            if t:
                for i in range(m):
                    prod[k - m + i] -= t * mod[i]
        return tuple(c % pr for c in prod[:m])

    def from_int(self, n: int) -> WittScalar:
        return WittScalar(self, ((n % self.pr),) + (0,) * (self.m - 1))

    def from_coeffs(self, coeffs: Sequence[int]) -> WittScalar:
        if len(coeffs) != self.m:
            raise ParameterError(f"expected {self.m} coefficients")
        return WittScalar(self, tuple(c % self.pr for c in coeffs))

    def lift(self, a: FqElem) -> WittScalar:
        """Naive lift: same coordinates in the polynomial basis."""
        if a.field is not self.field:
            raise ParameterError("field mismatch in lift")
        return WittScalar(self, a.coeffs)

    def teichmuller(self, a: FqElem) -> WittScalar:
        if a.is_zero():
            return self.zero
        return self.lift(a) ** (self.field.q ** (self.r - 1))

    def random(self, rng: random.Random) -> WittScalar:
        return WittScalar(self, tuple(rng.randrange(self.pr) for _ in range(self.m)))

    def random_unit(self, rng: random.Random) -> WittScalar:
        while True:
            x = self.random(rng)
            if x.is_unit():
                return x

    def generator_sigma(self) -> WittScalar:
        """Hensel lift of gen^p to a root of P; this is sigma(gen)."""
        if self.m == 1:
            return WittScalar(self, (0,))
        x = WittScalar(self, (0, 1) + (0,) * (self.m - 2))
        alpha = x ** self.p
        P = self.modulus
        for _ in range(self.r + 1):
            val, der = self.zero, self.zero
            for c in reversed(P):
                val = val * alpha + self.from_int(c)
            for i in range(len(P) - 1, 0, -1):
                der = der * alpha + self.from_int(i * P[i])
            if val.is_zero():
                break
            alpha = alpha - val * der.inverse()
        return alpha

    def sigma_matrix(self, k: int) -> tuple[tuple[int, ...], ...]:
        """Integer matrix of sigma^k in the basis 1, x, .., x^{m-1} (columns are images)."""
        k %= self.m
        cached = self._sigma_cache.get(k)
        if cached is not None:
            return cached
        m = self.m
        if k == 0:
            mat = tuple(tuple(int(i == j) for j in range(m)) for i in range(m))
        elif k == 1:
            alpha = self.generator_sigma()
            cols, cur = [], self.one
            for _ in range(m):
                cols.append(cur.c)
                cur = cur * alpha
            mat = tuple(tuple(cols[j][i] for j in range(m)) for i in range(m))
        else:
            a, b = self.sigma_matrix(1), self.sigma_matrix(k - 1)
            pr = self.pr
            mat = tuple(
                tuple(sum(a[i][l] * b[l][j] for l in range(m)) % pr for j in range(m))
                for i in range(m)
            )
        self._sigma_cache[k] = mat
        return mat

    def embedding_image(self, target: WittRing) -> WittScalar:
        """Image of the generator under the Frobenius-compatible embedding into ``target``."""
        key = (target.m, target.r)
        if key in self._embed_cache:
            return self._embed_cache[key]
        if target.p != self.p or target.m % self.m:
            raise ParameterError(f"cannot embed {self} into {target}")
        F2 = target.field
        P = self.modulus
        root = None
        for code in range(F2.q):
            acc = 0
            for c in reversed(P):
                acc = F2.add(F2.mul(acc, code), F2.from_int(c))
            if acc == 0:
                root = code
                break
        assert root is not None
        alpha = target.lift(FqElem(F2, root))
        for _ in range(target.r + 1):
            val, der = target.zero, target.zero
            for c in reversed(P):
                val = val * alpha + target.from_int(c)
            for i in range(len(P) - 1, 0, -1):
                der = der * alpha + target.from_int(i * P[i])
            if val.is_zero():
                break
            alpha = alpha - val * der.inverse()
        self._embed_cache[key] = alpha
        return alpha


@lru_cache(maxsize=None)
def get_witt_ring(p: int, m: int, r: int) -> WittRing:
    return WittRing(p, m, r)


class WittScalar:
    """An element of W_r(F_{p^m})."""

    __slots__ = ("ring", "c")

    def __init__(self, ring: WittRing, c: tuple[int, ...]):
        self.ring = ring
        self.c = c

    @property
    def p(self) -> int:
        return self.ring.p

    @property
    def m(self) -> int:
        return self.ring.m

    @property
    def r(self) -> int:
        return self.ring.r

    def _coerce(self, other: object) -> WittScalar:
        if isinstance(other, WittScalar):
            if other.ring is not self.ring:
                raise ParameterError(f"ring mismatch: {self.ring} vs {other.ring}")
            return other
        if isinstance(other, int):
            return self.ring.from_int(other)
        raise TypeError(f"cannot combine WittScalar with {type(other).__name__}")

    def __add__(self, other: object) -> WittScalar:
        o = self._coerce(other)
        pr = self.ring.pr
        return WittScalar(self.ring, tuple((a + b) % pr for a, b in zip(self.c, o.c)))

    __radd__ = __add__

    def __sub__(self, other: object) -> WittScalar:
        o = self._coerce(other)
        pr = self.ring.pr
        return WittScalar(self.ring, tuple((a - b) % pr for a, b in zip(self.c, o.c)))

    def __rsub__(self, other: object) -> WittScalar:
        return self._coerce(other) - self

    def __neg__(self) -> WittScalar:
        pr = self.ring.pr
        return WittScalar(self.ring, tuple((-a) % pr for a in self.c))

    def __mul__(self, other: object) -> WittScalar:
        if isinstance(other, int):
            pr = self.ring.pr
            return WittScalar(self.ring, tuple((a * other) % pr for a in self.c))
        o = self._coerce(other)
        return WittScalar(self.ring, self.ring._mul(self.c, o.c))

    __rmul__ = __mul__

    def __pow__(self, e: int) -> WittScalar:
        if e < 0:
            return self.inverse() ** (-e)
        res, base = self.ring.one, self
        while e:
            if e & 1:
                res = res * base
            base = base * base
            e >>= 1
        return res

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int):
            other = self.ring.from_int(other)
        return isinstance(other, WittScalar) and other.ring is self.ring and other.c == self.c

    def __hash__(self) -> int:
        return hash((self.ring.p, self.ring.m, self.ring.r, self.c))

    def __repr__(self) -> str:
        if self.ring.m == 1:
            return f"W{self.ring.r}({self.c[0]})"
        return f"W{self.ring.r}{self.c}"

    def is_zero(self) -> bool:
        return not any(self.c)

    def reduce(self) -> FqElem:
        """Residue mod p."""
        F = self.ring.field
        return FqElem(F, F._encode(self.c))

    def is_unit(self) -> bool:
        return not self.reduce().is_zero()

    def valuation(self) -> int:
        """p-adic valuation; the zero element reports r (read as ">= r")."""
        p, r = self.ring.p, self.ring.r
        v = r
        for a in self.c:
            if a:
                v = min(v, _vp(a, p))
        return v

    def inverse(self) -> WittScalar:
        if not self.is_unit():
            raise ZeroDivisionError(f"{self} is not a unit")
        y = self.ring.lift(self.reduce().inverse())
        steps = max(1, (self.ring.r - 1).bit_length() + 1)
        for _ in range(steps):
            y = y * (2 - self * y)
        return y

    def frobenius(self, k: int = 1) -> WittScalar:
        """sigma^k; negative k allowed since sigma has order m."""
        ring = self.ring
        k %= ring.m
        if k == 0:
            return self
        mat, pr, m = ring.sigma_matrix(k), ring.pr, ring.m
        c = self.c
        return WittScalar(ring, tuple(sum(mat[i][j] * c[j] for j in range(m)) % pr for i in range(m)))

    def divide_by_p_power(self, k: int) -> WittScalar:
        """The unique y in W_{r-k} with p^k y = self."""
        if k == 0:
            return self
        ring = self.ring
        if k >= ring.r:
            raise ParameterError(f"cannot divide by p^{k} at precision {ring.r}")
        pk = ring.p**k
        if any(a % pk for a in self.c):
            raise NotDivisibleError(f"{self} is not divisible by p^{k}")
        target = get_witt_ring(ring.p, ring.m, ring.r - k)
        return WittScalar(target, tuple((a // pk) % target.pr for a in self.c))

    def truncate(self, s: int) -> WittScalar:
        ring = self.ring
        if s > ring.r:
            raise ParameterError(f"cannot raise precision from {ring.r} to {s}")
        target = get_witt_ring(ring.p, ring.m, s)
        return WittScalar(target, tuple(a % target.pr for a in self.c))

    def embed(self, target: WittRing) -> WittScalar:
        """Image under W(F_{p^m}) -> W(F_{p^m'}) for m | m' (precision may drop)."""
        ring = self.ring
        if target.r > ring.r:
            raise ParameterError("embedding cannot raise precision")
        if target.m == ring.m:
            return self.truncate(target.r)
        alpha = ring.embedding_image(target)
        res, power = target.zero, target.one
        for a in self.c:
            if a:
                res = res + power * a
            power = power * alpha
        return res

    def witt_coordinates(self) -> list[FqElem]:
        """Coordinates (a_0, .., a_{r-1}) with self = sum V^i [a_i]."""
        out: list[FqElem] = []
        y = self
        for i in range(self.ring.r):
            c = y.reduce()
            out.append(c.frobenius(i))
            if i == self.ring.r - 1:
                break
            y = (y - y.ring.teichmuller(c)).divide_by_p_power(1)
        return out


def teichmuller(x: FqElem, r: int) -> WittScalar:
    return get_witt_ring(x.p, x.m, r).teichmuller(x)


def from_witt_coordinates(ring: WittRing, coords: Sequence[FqElem]) -> WittScalar:
    """Inverse of :meth:`WittScalar.witt_coordinates`; missing coordinates are zero."""
    if len(coords) > ring.r:
        raise ParameterError("too many Witt coordinates for the precision")
    res = ring.zero
    for i, a in enumerate(coords):
        if not a.is_zero():
            res = res + ring.teichmuller(a.frobenius(-i)) * ring.p**i
    return res


# ---------------------------------------------------------------------------
# universal Witt polynomials

# A monomial is a sorted tuple of (variable, exponent) pairs; x_i is variable 2i
# and y_i is variable 2i + 1, so the tables for length n are prefixes of those
# for any longer length.
Monomial = tuple[tuple[int, int], ...]


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def _rpoly_mul(a: Mapping[Monomial, Fraction], b: Mapping[Monomial, Fraction]) -> dict[Monomial, Fraction]:
    out: dict[Monomial, Fraction] = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            mono = _mono_mul(ma, mb)
            out[mono] = out.get(mono, Fraction(0)) + ca * cb
    return {k: v for k, v in out.items() if v}


def _rpoly_pow(a: Mapping[Monomial, Fraction], e: int) -> dict[Monomial, Fraction]:
    res: dict[Monomial, Fraction] = {(): Fraction(1)}
    base = dict(a)
    while e:
        if e & 1:
            res = _rpoly_mul(res, base)
        e >>= 1
        if e:
            base = _rpoly_mul(base, base)
    return res


def _rpoly_axpy(acc: dict[Monomial, Fraction], c: Fraction, a: Mapping[Monomial, Fraction]) -> None:
    for k, v in a.items():
        acc[k] = acc.get(k, Fraction(0)) + c * v
        if not acc[k]:
            del acc[k]


@dataclass(frozen=True)
class WittPolynomials:
    """Integral sum and product polynomials S_n, P_n for n < length."""

    p: int
    length: int
    S: tuple[tuple[tuple[Monomial, int], ...], ...]
    P: tuple[tuple[tuple[Monomial, int], ...], ...]


@lru_cache(maxsize=None)
def _witt_tables(p: int, n: int) -> tuple[tuple, tuple]:
    if n == 0:
        return (), ()
    S_prev, P_prev = _witt_tables(p, n - 1)
    k = n - 1
    xs = [{((2 * i, 1),): Fraction(1)} for i in range(n)]
    ys = [{((2 * i + 1, 1),): Fraction(1)} for i in range(n)]

    def ghost(vs: list[dict]) -> dict[Monomial, Fraction]:
        acc: dict[Monomial, Fraction] = {}
        for i in range(k + 1):
            _rpoly_axpy(acc, Fraction(p**i), _rpoly_pow(vs[i], p ** (k - i)))
        return acc

    wx, wy = ghost(xs), ghost(ys)
    num_s: dict[Monomial, Fraction] = {}
    _rpoly_axpy(num_s, Fraction(1), wx)
    _rpoly_axpy(num_s, Fraction(1), wy)
    num_p = _rpoly_mul(wx, wy)
    for i in range(k):
        s_i = {mono: Fraction(c) for mono, c in S_prev[i]}
        p_i = {mono: Fraction(c) for mono, c in P_prev[i]}
        _rpoly_axpy(num_s, Fraction(-(p**i)), _rpoly_pow(s_i, p ** (k - i)))
        _rpoly_axpy(num_p, Fraction(-(p**i)), _rpoly_pow(p_i, p ** (k - i)))

    def finish(num: dict[Monomial, Fraction]) -> tuple[tuple[Monomial, int], ...]:
        out = []
        for mono, c in sorted(num.items()):
            c = c / p**k
            if c.denominator != 1:
                raise AssertionError(f"non-integral Witt polynomial coefficient {c}")
            out.append((mono, int(c)))
        return tuple(out)

    return S_prev + (finish(num_s),), P_prev + (finish(num_p),)


def gen_witt_polynomials(p: int, r_w: int) -> WittPolynomials:
    """Generate S_0..S_{r_w-1} and P_0..P_{r_w-1} by inverting the ghost map over Q."""
    if not _is_prime(p):
        raise ParameterError(f"p = {p} is not prime")
    if r_w > MAX_WITT_LENGTH:
        raise CapabilityError(f"Witt length {r_w} exceeds the guard {MAX_WITT_LENGTH}")
    S, P = _witt_tables(p, r_w)
    return WittPolynomials(p, r_w, S, P)


@lru_cache(maxsize=None)
def _mod_p_tables(p: int, r_w: int) -> tuple[tuple, tuple]:
    tables = gen_witt_polynomials(p, r_w)

    def red(poly):
        return tuple((mono, c % p) for mono, c in poly if c % p)

    return tuple(red(s) for s in tables.S), tuple(red(q) for q in tables.P)


# ---------------------------------------------------------------------------
# truncated multivariate polynomials over F_q

Exp = tuple[int, ...]


class TruncPoly:
    """Polynomial over F_q in ``nvars`` variables, modulo monomials of total degree > deg."""

    __slots__ = ("field", "nvars", "deg", "terms")

    def __init__(self, field: GF, nvars: int, deg: int, terms: dict[Exp, int]):
        self.field = field
        self.nvars = nvars
        self.deg = deg
        self.terms = terms

    @classmethod
    def zero(cls, field: GF, nvars: int, deg: int) -> TruncPoly:
        return cls(field, nvars, deg, {})

    @classmethod
    def const(cls, field: GF, nvars: int, deg: int, code: int) -> TruncPoly:
        return cls(field, nvars, deg, {(0,) * nvars: code} if code else {})

    @classmethod
    def var(cls, field: GF, nvars: int, deg: int, i: int) -> TruncPoly:
        if deg < 1:
            return cls.zero(field, nvars, deg)
        e = tuple(int(j == i) for j in range(nvars))
        return cls(field, nvars, deg, {e: 1})

    def _new(self, terms: dict[Exp, int]) -> TruncPoly:
        return TruncPoly(self.field, self.nvars, self.deg, terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_term(self) -> int:
        return self.terms.get((0,) * self.nvars, 0)

    def __add__(self, other: TruncPoly) -> TruncPoly:
        if not other.terms:
            return self
        if not self.terms:
            return other
        F = self.field
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = F.add(out.get(e, 0), c)
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return self._new(out)

    def __neg__(self) -> TruncPoly:
        F = self.field
        return self._new({e: F.neg(c) for e, c in self.terms.items()})

    def __sub__(self, other: TruncPoly) -> TruncPoly:
        return self + (-other)

    def __mul__(self, other: TruncPoly) -> TruncPoly:
        if not self.terms or not other.terms:
            return self._new({})
        F, N = self.field, self.deg
        out: dict[Exp, int] = {}
        b_items = [(e, c, sum(e)) for e, c in other.terms.items()]
        for e1, c1 in self.terms.items():
            d1 = sum(e1)
            for e2, c2, d2 in b_items:
                if d1 + d2 > N:
                    continue
                e = tuple(x + y for x, y in zip(e1, e2))
                out[e] = F.add(out.get(e, 0), F.mul(c1, c2))
        return self._new({e: c for e, c in out.items() if c})

    def scale(self, code: int) -> TruncPoly:
        F = self.field
        if code == 0:
            return self._new({})
        return self._new({e: F.mul(c, code) for e, c in self.terms.items()})

    def __pow__(self, e: int) -> TruncPoly:
        res = TruncPoly.const(self.field, self.nvars, self.deg, 1)
        base = self
        while e:
            if e & 1:
                res = res * base
            e >>= 1
            if e:
                base = base * base
        return res

    def frobenius(self, k: int = 1) -> TruncPoly:
        """Raise to the p^k-th power (additive in characteristic p)."""
        F, N = self.field, self.deg
        pk = F.p**k
        out = {}
        for e, c in self.terms.items():
            if sum(e) * pk <= N:
                out[tuple(x * pk for x in e)] = F.frob(c, k)
        return self._new(out)

    def pth_root(self, deg: int | None = None) -> TruncPoly:
        """Componentwise p-th root; raises if some exponent is not divisible by p."""
        F = self.field
        p = F.p
        new_deg = self.deg // p if deg is None else deg
        out = {}
        for e, c in self.terms.items():
            if any(x % p for x in e):
                raise NotDivisibleError("not divisible by p: component is not a p-th power")
            e2 = tuple(x // p for x in e)
            if sum(e2) <= new_deg:
                out[e2] = F.frob(c, -1)
        return TruncPoly(F, self.nvars, new_deg, out)

    def truncate(self, deg: int) -> TruncPoly:
        return TruncPoly(self.field, self.nvars, deg, {e: c for e, c in self.terms.items() if sum(e) <= deg})

    def min_degree(self) -> int | None:
        """t-adic valuation (lowest total degree); None for the zero polynomial."""
        if not self.terms:
            return None
        return min(sum(e) for e in self.terms)

    def evaluate_zero(self) -> TruncPoly:
        return TruncPoly.const(self.field, self.nvars, self.deg, self.constant_term())

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, TruncPoly)
            and other.field is self.field
            and other.nvars == self.nvars
            and other.deg == self.deg
            and other.terms == self.terms
        )

    def __hash__(self) -> int:
        return hash((self.nvars, self.deg, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms.items()):
            parts.append(f"{c}*t^{e}" if any(e) else f"{c}")
        return " + ".join(parts)


# ---------------------------------------------------------------------------
# Witt vectors over truncated polynomial rings


class WittSeriesRing:
    """W_{r_w}(F_q[t_1..t_s]/(deg > N)); use :func:`get_series_ring`."""

    def __init__(self, p: int, m: int, r_w: int, vars: tuple[str, ...], deg: int):
        if r_w < 1:
            raise ParameterError("Witt length must be at least 1")
        if r_w > MAX_WITT_LENGTH:
            raise CapabilityError(f"Witt length {r_w} exceeds the guard {MAX_WITT_LENGTH}")
        if len(set(vars)) != len(vars):
            raise ParameterError(f"duplicate variable names in {vars}")
        self.field = get_field(p, m)
        self.p, self.m, self.r_w, self.vars, self.deg = p, m, r_w, tuple(vars), deg
        self.nvars = len(vars)
        self.scalars = get_witt_ring(p, m, r_w)
        self._zpoly = TruncPoly.zero(self.field, self.nvars, deg)
        self.zero = WittSeries(self, (self._zpoly,) * r_w)
        self.one = self.from_int(1)
        self._scalar_cache: dict[tuple[int, ...], WittScalar] = {}

    def __repr__(self) -> str:
        return f"W_{self.r_w}(F_{self.p}^{self.m}[{','.join(self.vars)}]/deg>{self.deg})"

    def const_poly(self, code: int) -> TruncPoly:
        return TruncPoly.const(self.field, self.nvars, self.deg, code)

    def from_scalar(self, x: WittScalar) -> WittSeries:
        if x.ring.p != self.p or x.ring.m != self.m:
            raise ParameterError(f"cannot map {x.ring} into {self}")
        if x.ring.r < self.r_w:
            raise ParameterError("scalar precision below Witt length")
        coords = x.truncate(self.r_w).witt_coordinates()
        return WittSeries(self, tuple(self.const_poly(a.code) for a in coords))

    def from_int(self, n: int) -> WittSeries:
        return self.from_scalar(self.scalars.from_int(n))

    def from_components(self, comps: Sequence[TruncPoly]) -> WittSeries:
        comps = list(comps) + [self._zpoly] * (self.r_w - len(comps))
        if len(comps) != self.r_w:
            raise ParameterError("too many Witt components")
        for c in comps:
            if c.field is not self.field or c.nvars != self.nvars:
                raise ParameterError("component lives in a different polynomial ring")
        return WittSeries(self, tuple(c.truncate(self.deg) for c in comps))

    def var(self, name: str) -> TruncPoly:
        return TruncPoly.var(self.field, self.nvars, self.deg, self.vars.index(name))

    def teichmuller(self, a: TruncPoly) -> WittSeries:
        return self.from_components([a])

    def _scalar_of(self, codes: tuple[int, ...]) -> WittScalar:
        x = self._scalar_cache.get(codes)
        if x is None:
            F = self.field
            x = from_witt_coordinates(self.scalars, [FqElem(F, c) for c in codes])
            self._scalar_cache[codes] = x
        return x

    def with_deg(self, deg: int) -> WittSeriesRing:
        return get_series_ring(self.p, self.m, self.r_w, self.vars, deg)


@lru_cache(maxsize=None)
def get_series_ring(p: int, m: int, r_w: int, vars: tuple[str, ...], deg: int) -> WittSeriesRing:
    return WittSeriesRing(p, m, r_w, tuple(vars), deg)


def _eval_table(table, comps_x: Sequence[TruncPoly], comps_y: Sequence[TruncPoly], template: TruncPoly) -> TruncPoly:
    powers: dict[tuple[int, int], TruncPoly] = {}
    F = template.field

    def power(v: int, e: int) -> TruncPoly:
        key = (v, e)
        got = powers.get(key)
        if got is None:
            base = comps_x[v // 2] if v % 2 == 0 else comps_y[v // 2]
            got = base**e
            powers[key] = got
        return got

    acc = template
    for mono, c in table:
        term = None
        for v, e in mono:
            fac = power(v, e)
            if fac.is_zero():
                term = None
                break
            term = fac if term is None else term * fac
            if term.is_zero():
                break
        else:
            if term is not None and not term.is_zero():
                acc = acc + term.scale(F.from_int(c))
    return acc


class WittSeries:
    """A Witt vector (x_0, .., x_{r_w-1}) over a truncated polynomial ring."""

    __slots__ = ("ring", "comps")

    def __init__(self, ring: WittSeriesRing, comps: tuple[TruncPoly, ...]):
        self.ring = ring
        self.comps = comps

    def _coerce(self, other: object) -> WittSeries:
        if isinstance(other, WittSeries):
            if other.ring is not self.ring:
                raise ParameterError(f"ring mismatch: {self.ring} vs {other.ring}")
            return other
        if isinstance(other, int):
            return self.ring.from_int(other)
        raise TypeError(f"cannot combine WittSeries with {type(other).__name__}")

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.comps)

    def is_constant(self) -> bool:
        return all(c.is_constant() for c in self.comps)

    def is_teichmuller(self) -> bool:
        return all(c.is_zero() for c in self.comps[1:])

    def to_scalar(self) -> WittScalar:
        if not self.is_constant():
            raise ParameterError("series is not constant")
        return self.ring._scalar_of(tuple(c.constant_term() for c in self.comps))

    def __add__(self, other: object) -> WittSeries:
        o = self._coerce(other)
        if o.is_zero():
            return self
        if self.is_zero():
            return o
        ring = self.ring
        if self.is_constant() and o.is_constant():
            return ring.from_scalar(self.to_scalar() + o.to_scalar())
        S, _ = _mod_p_tables(ring.p, ring.r_w)
        zero = ring._zpoly
        return WittSeries(ring, tuple(_eval_table(S[n], self.comps, o.comps, zero) for n in range(ring.r_w)))

    __radd__ = __add__

    def __neg__(self) -> WittSeries:
        ring = self.ring
        if self.is_zero():
            return self
        if ring.p != 2:
            return WittSeries(ring, tuple(-c for c in self.comps))
        if self.is_constant():
            return ring.from_scalar(-self.to_scalar())
        return self * ring.from_int(-1)

    def __sub__(self, other: object) -> WittSeries:
        return self + (-self._coerce(other))

    def __rsub__(self, other: object) -> WittSeries:
        return self._coerce(other) - self

    def __mul__(self, other: object) -> WittSeries:
        o = self._coerce(other)
        ring = self.ring
        if self.is_zero() or o.is_zero():
            return ring.zero
        if self.is_constant() and o.is_constant():
            return ring.from_scalar(self.to_scalar() * o.to_scalar())
        if o.is_teichmuller():
            return self._teich_mul(o.comps[0])
        if self.is_teichmuller():
            return o._teich_mul(self.comps[0])
        _, P = _mod_p_tables(ring.p, ring.r_w)
        zero = ring._zpoly
        return WittSeries(ring, tuple(_eval_table(P[n], self.comps, o.comps, zero) for n in range(ring.r_w)))

    __rmul__ = __mul__

    def _teich_mul(self, a: TruncPoly) -> WittSeries:
        # [a] * x = (a x_0, a^p x_1, a^{p^2} x_2, ...)
        return WittSeries(self.ring, tuple(c * a.frobenius(i) for i, c in enumerate(self.comps)))

    def __pow__(self, e: int) -> WittSeries:
        res, base = self.ring.one, self
        while e:
            if e & 1:
                res = res * base
            e >>= 1
            if e:
                base = base * base
        return res

    def frobenius(self, k: int = 1) -> WittSeries:
        if k < 0:
            raise ParameterError("Frobenius of a series ring is not invertible")
        if k == 0:
            return self
        return WittSeries(self.ring, tuple(c.frobenius(k) for c in self.comps))

    def verschiebung(self) -> WittSeries:
        return WittSeries(self.ring, (self.ring._zpoly,) + self.comps[:-1])

    def mul_p(self) -> WittSeries:
        """p * x computed as V(F(x))."""
        return self.frobenius().verschiebung()

    def divide_by_p(self) -> WittSeries:
        """Unique b of length r_w - 1 with p*b = self; the degree bound drops to deg // p."""
        ring = self.ring
        if ring.r_w < 2:
            raise NotDivisibleError("not divisible by p: Witt length 1 carries no p-multiples")
        if not self.comps[0].is_zero():
            raise NotDivisibleError("not divisible by p: first Witt component is nonzero")
        deg = ring.deg // ring.p
        target = get_series_ring(ring.p, ring.m, ring.r_w - 1, ring.vars, deg)
        comps = tuple(c.pth_root(deg) for c in self.comps[1:])
        return WittSeries(target, comps)

    def is_unit(self) -> bool:
        return self.comps[0].constant_term() != 0

    def inverse(self) -> WittSeries:
        ring = self.ring
        if not self.is_unit():
            raise ZeroDivisionError("series is not a unit")
        if self.is_constant():
            return ring.from_scalar(self.to_scalar().inverse())
        x0 = self.comps[0]
        F = ring.field
        c = x0.constant_term()
        cinv = F.inv(c)
        u = x0.scale(cinv) - ring.const_poly(1)
        # 1/(1+u) as a finite geometric sum, u is nilpotent modulo the degree bound
        inv0, term = ring.const_poly(1), ring.const_poly(1)
        for _ in range(ring.deg):
            term = -(term * u)
            if term.is_zero():
                break
            inv0 = inv0 + term
        y = ring.teichmuller(inv0.scale(cinv))
        two = ring.from_int(2)
        steps = max(1, (ring.r_w - 1).bit_length() + 1)
        for _ in range(steps):
            y = y * (two - self * y)
        return y

    def evaluate_zero(self) -> WittSeries:
        return WittSeries(self.ring, tuple(c.evaluate_zero() for c in self.comps))

    def first_component(self) -> TruncPoly:
        return self.comps[0]

    def change_ring(self, ring: WittSeriesRing) -> WittSeries:
        """Reinterpret in a ring with the same field and variables (shorter length or lower degree)."""
        if ring.field is not self.ring.field or ring.vars != self.ring.vars:
            raise ParameterError("incompatible target ring")
        if ring.r_w > self.ring.r_w:
            raise ParameterError("cannot extend Witt length")
        return WittSeries(ring, tuple(c.truncate(ring.deg) for c in self.comps[: ring.r_w]))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, WittSeries) and other.ring is self.ring and other.comps == self.comps

    def __hash__(self) -> int:
        return hash(self.comps)

    def __repr__(self) -> str:
        return "(" + ", ".join(repr(c) for c in self.comps) + ")"


def witt_series_from_polys(ring: WittSeriesRing, comps: Iterable[TruncPoly]) -> WittSeries:
    return ring.from_components(list(comps))
