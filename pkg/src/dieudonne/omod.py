"""O-graded Dieudonne modules over W_r(F_q).

The module is ``M = M_0 + .. + M_{f-1}``, each piece free of rank ``h``.
``V[tau]`` is the matrix of the sigma^{-1}-linear ``V : M_tau -> M_{tau-1}`` and
``F[tau]`` the matrix of the sigma-linear ``F : M_tau -> M_{tau+1}``; indices
are taken mod f.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Sequence

from .errors import InvalidModuleError, ParameterError, PrecisionError
from .polygons import (
    RatPolygon,
    average,
    compare,
    contact_points,
    hodge_diamond,
    newton_polygon,
)
from .semilinear import (
    Matrix,
    SNFResult,
    TwistedMap,
    as_matrix,
    block_diag,
    compose,
    det,
    diagonal,
    embed_matrix,
    identity_map,
    inverse,
    is_scalar,
    matfrob,
    matmul,
    shape,
    smith_normal_form,
    submatrix,
    transpose,
    truncate_matrix,
)
from .witt import FqElem, WittRing, WittScalar, from_witt_coordinates, get_witt_ring


@dataclass(frozen=True)
class Signature:
    """Per-tau pairs (p_tau, q_tau) with p_tau + q_tau = h."""

    p_tau: tuple[int, ...]
    q_tau: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_tau", tuple(self.p_tau))
        object.__setattr__(self, "q_tau", tuple(self.q_tau))
        if len(self.p_tau) != len(self.q_tau) or not self.p_tau:
            raise ParameterError("signature needs one (p, q) pair per tau")
        sums = {a + b for a, b in zip(self.p_tau, self.q_tau)}
        if len(sums) != 1 or min(self.p_tau + self.q_tau) < 0:
            raise ParameterError(f"p_tau + q_tau must be constant and entries nonnegative: {self}")

    @classmethod
    def from_q(cls, q_tau: Sequence[int], h: int) -> Signature:
        return cls(tuple(h - q for q in q_tau), tuple(q_tau))

    @property
    def f(self) -> int:
        return len(self.q_tau)

    @property
    def h(self) -> int:
        return self.p_tau[0] + self.q_tau[0]

    @property
    def d(self) -> int:
        return sum(self.p_tau)

    def dual(self) -> Signature:
        return Signature(self.q_tau, self.p_tau)

    def k(self, tau: int) -> int:
        return k_tau(self, tau)

    def to_json(self) -> dict[str, Any]:
        return {"p_tau": list(self.p_tau), "q_tau": list(self.q_tau), "h": self.h, "d": self.d}


def k_tau(sig: Signature, tau: int) -> int:
    """Sum over tau' with q_tau' < q_tau of (q_tau - q_tau')."""
    q0 = sig.q_tau[tau % sig.f]
    return sum(q0 - q for q in sig.q_tau if q < q0)


def hodge_polygon_of_signature(sig: Signature, tau: int | None = None) -> RatPolygon:
    """Hdg_tau (q_tau zeros then p_tau ones) or, for tau None, their average Hdg_O."""

    def one(t: int) -> RatPolygon:
        return RatPolygon((Fraction(0),) * sig.q_tau[t] + (Fraction(1),) * sig.p_tau[t])

    if tau is not None:
        return one(tau % sig.f)
    return average([one(t) for t in range(sig.f)])


@dataclass(frozen=True)
class HasseReport:
    """Partial Hasse invariant at a point.

    ``scalar`` depends on the deterministic basis; ``invertible`` does not.
    ``lattice_val`` is the valuation of the divided coefficient; when
    ``lattice_val_saturated`` it is only a lower bound.
    """

    tau: int
    q_tau: int
    k_tau: int
    invertible: bool
    scalar: FqElem
    lattice_val: int
    lattice_val_saturated: bool = False

    def to_json(self) -> dict[str, Any]:
        return {
            "tau": self.tau,
            "q_tau": self.q_tau,
            "k_tau": self.k_tau,
            "invertible": self.invertible,
            "scalar": list(self.scalar.coeffs),
            "lattice_val": self.lattice_val,
            "lattice_val_saturated": self.lattice_val_saturated,
        }


@dataclass(frozen=True)
class ODieudonneModule:
    ring: WittRing
    f: int
    h: int
    V: tuple[Matrix, ...]
    F: tuple[Matrix, ...] | None = None
    f_reconstructed: bool = False
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "V", tuple(as_matrix(v) for v in self.V))
        if self.F is not None:
            object.__setattr__(self, "F", tuple(as_matrix(x) for x in self.F))
        if self.check:
            self.validate()

    @property
    def p(self) -> int:
        return self.ring.p

    @property
    def m(self) -> int:
        return self.ring.m

    @property
    def r(self) -> int:
        return self.ring.r

    def V_map(self, tau: int) -> TwistedMap:
        return TwistedMap(-1, self.V[tau % self.f], self.ring)

    def F_map(self, tau: int) -> TwistedMap:
        if self.F is None:
            raise ParameterError("F matrices are not available")
        return TwistedMap(1, self.F[tau % self.f], self.ring)

    @cached_property
    def _snfs(self) -> tuple[SNFResult, ...]:
        return tuple(smith_normal_form(v, self.ring) for v in self.V)

    def snf_of_V(self, tau: int) -> SNFResult:
        """SNF of V_tau : M_tau -> M_{tau-1}."""
        return self._snfs[tau % self.f]

    def validate(self) -> None:
        ring, f, h = self.ring, self.f, self.h
        if f < 1 or ring.m % f:
            raise ParameterError(f"f = {f} must divide the residue degree m = {ring.m}")
        if len(self.V) != f or (self.F is not None and len(self.F) != f):
            raise ParameterError(f"expected {f} matrices per operator")
        for mats in (self.V, self.F or ()):
            for A in mats:
                if shape(A) != (h, h):
                    raise ParameterError(f"expected {h}x{h} matrices, got {shape(A)}")
                for row in A:
                    for x in row:
                        if not isinstance(x, WittScalar) or x.ring is not ring:
                            raise ParameterError("matrix entries must lie in the module's Witt ring")
        for tau in range(f):
            self._exponents(tau)
        if self.F is None:
            return
        for tau in range(f):
            fv = compose(self.F_map(tau - 1), self.V_map(tau))
            vf = compose(self.V_map(tau + 1), self.F_map(tau))
            if not is_scalar(fv.matrix, ring.p) or not is_scalar(vf.matrix, ring.p):
                raise InvalidModuleError(f"FV = VF = p fails at tau = {tau}")

    def _exponents(self, tau: int) -> tuple[int, ...]:
        """Elementary divisor exponents of V_tau, each 0 or 1."""
        divs = self.snf_of_V(tau).divisors
        out = []
        for e, sat in zip(divs.exponents, divs.saturated):
            if sat and self.r == 1:
                e = 1
            elif sat or e > 1:
                raise InvalidModuleError(
                    f"not a BT-module: V_{tau % self.f} has an elementary divisor p^{e}{'+' if sat else ''}"
                )
            out.append(e)
        return tuple(out)

    def signature(self) -> Signature:
        return self._signature

    @cached_property
    def _signature(self) -> Signature:
        ps, qs = [], []
        for tau in range(self.f):
            ex = self._exponents(tau + 1)
            ps.append(sum(1 for e in ex if e == 1))
            qs.append(sum(1 for e in ex if e == 0))
        return Signature(tuple(ps), tuple(qs))

    def with_reconstructed_F(self) -> ODieudonneModule:
        """Attach F = p * V^{-1}; F is then one lift, determined by V only mod p^{r-1}."""
        if self.F is not None:
            return self
        ring = self.ring
        Fs: list[Matrix] = [()] * self.f
        for tau in range(self.f):
            snf = self.snf_of_V(tau)
            mid = diagonal(ring, [ring.from_int(ring.p ** (1 - min(e, 1))) for e in snf.pivots])
            pvinv = matmul(matmul(snf.Q, mid, ring), snf.P, ring)
            Fs[(tau - 1) % self.f] = matfrob(pvinv, 1)
        return ODieudonneModule(ring, self.f, self.h, self.V, tuple(Fs), True, self.check)


# ---------------------------------------------------------------------------
# polygons attached to a module


def hodge_polygon(M: ODieudonneModule, tau: int) -> RatPolygon:
    """Hdg_tau from the elementary divisors of V_{tau+1} : M_{tau+1} -> M_tau."""
    return hodge_diamond(M.snf_of_V(tau + 1).divisors, M.h).reverse()


def o_hodge_polygon(M: ODieudonneModule) -> RatPolygon:
    return average([hodge_polygon(M, tau) for tau in range(M.f)])


def Vf_map(M: ODieudonneModule, tau: int) -> TwistedMap:
    """V^f on M_tau (twist -f): apply V_tau first and V_{tau+1} last."""
    phi = identity_map(M.ring, M.h)
    cur = tau % M.f
    for _ in range(M.f):
        phi = compose(M.V_map(cur), phi)
        cur = (cur - 1) % M.f
    return phi


# ---------------------------------------------------------------------------
# partial Hasse invariants


def partial_hasse(M: ODieudonneModule, tau: int) -> HasseReport:
    """Divided top exterior power of V^f on the Hodge part of M_tau, in the SNF basis.

    With P V_{tau+1} Q = D and U = P^{-1}, the columns u_1..u_q of U carrying unit
    pivots lift a basis of VM_{tau+1} / pM_tau.  The invariant is the coefficient
    of u_1 ^ .. ^ u_q in p^{-k} (V^f)(u_1 ^ .. ^ u_q), i.e. a q x q minor.
    """
    tau %= M.f
    sig = M.signature()
    q, k = sig.q_tau[tau], k_tau(sig, tau)
    ring = M.ring
    if M.r <= k:
        raise PrecisionError(f"precision r = {M.r} must exceed k_tau = {k}")
    snf = M.snf_of_V(tau + 1)
    B = Vf_map(M, tau)
    C = matmul(matmul(snf.P, B.matrix, ring), matfrob(snf.Pinv, B.twist), ring)
    c = det(submatrix(C, range(q), range(q)), ring)
    v = c.valuation()
    if v < k:
        raise InvalidModuleError(f"divisibility violated: minor has valuation {v} < k_tau = {k}")
    F0 = FqElem(ring.field, 0)
    if c.is_zero():
        return HasseReport(tau, q, k, False, F0, M.r - k, True)
    scalar = c.divide_by_p_power(k).reduce()
    return HasseReport(tau, q, k, not scalar.is_zero(), scalar, v - k, False)


@dataclass(frozen=True)
class MuOrdinaryCertificate:
    mu_ordinary: bool
    newton: RatPolygon
    hodge: RatPolygon
    reports: tuple[HasseReport, ...]

    def to_json(self) -> dict[str, Any]:
        return {
            "mu_ordinary": self.mu_ordinary,
            "newton": self.newton.to_json(),
            "hodge": self.hodge.to_json(),
            "hasse": [r.to_json() for r in self.reports],
        }


def mu_ordinary(M: ODieudonneModule) -> MuOrdinaryCertificate:
    newt, hdg = newton_polygon(M), o_hodge_polygon(M)
    reports = tuple(partial_hasse(M, tau) for tau in range(M.f))
    mu = newt == hdg
    if mu != all(rep.invertible for rep in reports):
        raise AssertionError("polygon equality and Hasse invertibility disagree")
    return MuOrdinaryCertificate(mu, newt, hdg, reports)


def hasse_contact_agreement(M: ODieudonneModule, tau: int) -> tuple[bool, bool]:
    """(Hasse invertible at tau, polygons touch at q_tau) from two independent paths."""
    rep = partial_hasse(M, tau)
    q = M.signature().q_tau[tau % M.f]
    touch = q in contact_points(newton_polygon(M), o_hodge_polygon(M))
    return rep.invertible, touch


def hodge_newton_split(M: ODieudonneModule, x: int) -> tuple[Signature, Signature]:
    """Predicted signatures of the two Hodge-Newton factors at a contact break x."""
    sig = M.signature()
    h = sig.h
    newt, hdg = newton_polygon(M), o_hodge_polygon(M)
    if x not in (0, h) and x not in newt.break_abscissas():
        raise ParameterError(f"x = {x} is not a break abscissa of the Newton polygon")
    if newt.value(x) != hdg.value(x):
        raise ParameterError(f"x = {x} is not a contact point of Newton and Hodge")
    q1 = tuple(min(q, x) for q in sig.q_tau)
    q2 = tuple(max(q - x, 0) for q in sig.q_tau)
    s1 = Signature(tuple(x - q for q in q1), q1)
    s2 = Signature(tuple(h - x - q for q in q2), q2)
    vals = hdg.values()
    if x:
        if hodge_polygon_of_signature(s1).values() != vals[: x + 1]:
            raise AssertionError("Hodge polygon of the first factor does not match")
    if h - x:
        shifted = tuple(v - vals[x] for v in vals[x:])
        if hodge_polygon_of_signature(s2).values() != shifted:
            raise AssertionError("Hodge polygon of the second factor does not match")
    for tau in range(sig.f):
        if k_tau(sig, tau) != _k_or_zero(s1, tau) + _k_or_zero(s2, tau):
            raise AssertionError("k_tau is not additive across the split")
    return s1, s2


def _k_or_zero(sig: Signature, tau: int) -> int:
    return k_tau(sig, tau) if sig.h else 0


# ---------------------------------------------------------------------------
# duality, products, determinants, truncation


def dualize(M: ODieudonneModule) -> ODieudonneModule:
    """Hom(M, W) with V^D_tau = sigma^{-1}(F_{tau-1})^T and F^D_tau = sigma(V_{tau+1})^T."""
    if M.F is None:
        raise ParameterError("F required for duality")
    f = M.f
    VD = tuple(transpose(matfrob(M.F[(tau - 1) % f], -1)) for tau in range(f))
    FD = tuple(transpose(matfrob(M.V[(tau + 1) % f], 1)) for tau in range(f))
    return ODieudonneModule(M.ring, f, M.h, VD, FD, M.f_reconstructed, M.check)


def product(M1: ODieudonneModule, M2: ODieudonneModule) -> ODieudonneModule:
    if M1.ring is not M2.ring or M1.f != M2.f:
        raise ParameterError("product needs identical base parameters")
    ring = M1.ring
    V = tuple(block_diag(ring, a, b) for a, b in zip(M1.V, M2.V))
    F = None
    if M1.F is not None and M2.F is not None:
        F = tuple(block_diag(ring, a, b) for a, b in zip(M1.F, M2.F))
    return ODieudonneModule(ring, M1.f, M1.h + M2.h, V, F, M1.f_reconstructed or M2.f_reconstructed, M1.check)


@dataclass(frozen=True)
class ProductHasseReport:
    tau: int
    k1: int
    k2: int
    k: int
    additive: bool
    factor1: HasseReport
    factor2: HasseReport
    product: HasseReport
    multiplicative: bool | None

    def to_json(self) -> dict[str, Any]:
        return {
            "tau": self.tau,
            "k1": self.k1,
            "k2": self.k2,
            "k": self.k,
            "additive": self.additive,
            "multiplicative": self.multiplicative,
            "factor1": self.factor1.to_json(),
            "factor2": self.factor2.to_json(),
            "product": self.product.to_json(),
        }


def check_product_hasse(M1: ODieudonneModule, M2: ODieudonneModule, tau: int) -> ProductHasseReport:
    M = product(M1, M2)
    r1, r2, r = partial_hasse(M1, tau), partial_hasse(M2, tau), partial_hasse(M, tau)
    additive = r.k_tau == r1.k_tau + r2.k_tau
    mult = None
    if additive:
        mult = r.scalar == r1.scalar * r2.scalar
        if not mult:
            raise AssertionError("Hasse scalar is not multiplicative although k is additive")
    return ProductHasseReport(tau % M.f, r1.k_tau, r2.k_tau, r.k_tau, additive, r1, r2, r, mult)


def det_crystal_factor(M: ODieudonneModule, tau: int) -> tuple[int, WittScalar]:
    """det(V^f on M_tau) = p^d u with d = sum p_tau and u a unit of W_{r-d}."""
    d = M.signature().d
    if M.r <= d:
        raise PrecisionError(f"precision r = {M.r} must exceed d = {d}")
    D = Vf_map(M, tau).det()
    v = D.valuation()
    if v != d:
        raise InvalidModuleError(f"not a BT-module: det V^f has valuation {v}, expected {d}")
    u = D.divide_by_p_power(d)
    assert u.is_unit()
    return d, u


def truncate(M: ODieudonneModule, s: int) -> ODieudonneModule:
    if s > M.r:
        raise ParameterError(f"cannot raise precision from {M.r} to {s}")
    if s == M.r:
        return M
    ring = get_witt_ring(M.p, M.m, s)
    V = tuple(truncate_matrix(v, s) for v in M.V)
    F = None if M.F is None else tuple(truncate_matrix(x, s) for x in M.F)
    return ODieudonneModule(ring, M.f, M.h, V, F, M.f_reconstructed, M.check)


def base_change(M: ODieudonneModule, m2: int) -> ODieudonneModule:
    """Extend scalars along F_{p^m} in F_{p^m2}."""
    if m2 % M.m:
        raise ParameterError(f"{M.m} does not divide {m2}")
    ring = get_witt_ring(M.p, m2, M.r)
    V = tuple(embed_matrix(v, ring) for v in M.V)
    F = None if M.F is None else tuple(embed_matrix(x, ring) for x in M.F)
    return ODieudonneModule(ring, M.f, M.h, V, F, M.f_reconstructed, M.check)


# ---------------------------------------------------------------------------
# constructors


def module_from_ints(
    p: int, m: int, f: int, r: int, V: Sequence[Sequence[Sequence[int]]], F: Sequence | None = None
) -> ODieudonneModule:
    ring = get_witt_ring(p, m, r)
    conv = lambda A: tuple(tuple(ring.from_int(x) for x in row) for row in A)  # noqa: E731
    h = len(V[0])
    return ODieudonneModule(ring, f, h, tuple(conv(A) for A in V), None if F is None else tuple(conv(A) for A in F))


def random_invertible(ring: WittRing, n: int, rng: random.Random) -> Matrix:
    while True:
        A = tuple(tuple(ring.random(rng) for _ in range(n)) for _ in range(n))
        if det(A, ring).is_unit():
            return A


def random_signature(f: int, h: int, rng: random.Random, max_d: int | None = None) -> Signature:
    while True:
        q = tuple(rng.randint(0, h) for _ in range(f))
        sig = Signature.from_q(q, h)
        if max_d is None or sig.d <= max_d:
            return sig


def random_module(
    ring: WittRing, f: int, sig: Signature, rng: random.Random, with_F: bool = True
) -> ODieudonneModule:
    """V_tau = U diag(1^{q_{tau-1}}, p^{p_{tau-1}}) W with random units U, W."""
    if sig.f != f:
        raise ParameterError("signature length differs from f")
    h = sig.h
    V: list[Matrix] = []
    F: list[Matrix] = [()] * f
    for tau in range(f):
        t = (tau - 1) % f
        U, W = random_invertible(ring, h, rng), random_invertible(ring, h, rng)
        D = diagonal(ring, [ring.one] * sig.q_tau[t] + [ring.from_int(ring.p)] * sig.p_tau[t])
        V.append(matmul(matmul(U, D, ring), W, ring))
        if with_F:
            Dp = diagonal(ring, [ring.from_int(ring.p)] * sig.q_tau[t] + [ring.one] * sig.p_tau[t])
            Fm = matmul(matmul(inverse(matfrob(W, 1), ring), Dp, ring), inverse(matfrob(U, 1), ring), ring)
            F[t] = Fm
    return ODieudonneModule(ring, f, h, tuple(V), tuple(F) if with_F else None)


# ---------------------------------------------------------------------------
# JSON


def _entry_from_json(ring: WittRing, x: Any) -> WittScalar:
    if isinstance(x, bool):
        raise ParameterError("booleans are not matrix entries")
    if isinstance(x, int):
        return ring.from_int(x)
    coords = [FqElem.from_coeffs(ring.p, ring.m, c) for c in x][: ring.r]
    return from_witt_coordinates(ring, coords)


def _entry_to_json(x: WittScalar) -> Any:
    if not any(x.c[1:]):
        return x.c[0]
    return [list(a.coeffs) for a in x.witt_coordinates()]


def module_from_json(data: dict[str, Any], r: int | None = None) -> ODieudonneModule:
    p, m, f = data["p"], data["m"], data["f"]
    r = data["r"] if r is None else r
    ring = get_witt_ring(p, m, r)
    conv = lambda A: tuple(tuple(_entry_from_json(ring, x) for x in row) for row in A)  # noqa: E731
    V = tuple(conv(A) for A in data["V"])
    F = tuple(conv(A) for A in data["F"]) if data.get("F") is not None else None
    return ODieudonneModule(ring, f, data["h"], V, F)


def module_to_json(M: ODieudonneModule) -> dict[str, Any]:
    conv = lambda A: [[_entry_to_json(x) for x in row] for row in A]  # noqa: E731
    out: dict[str, Any] = {"p": M.p, "m": M.m, "f": M.f, "r": M.r, "h": M.h, "V": [conv(A) for A in M.V]}
    if M.F is not None:
        out["F"] = [conv(A) for A in M.F]
    return out
