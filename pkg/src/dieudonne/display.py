"""Displays with O-action over k and over truncated power series rings.

Each graded piece ``P_tau`` has rank ``h`` and a basis whose first ``p_tau``
vectors span the Lie part ``T_tau`` and whose last ``q_tau`` vectors span the
Hodge part ``L_tau``.  ``HW[tau]`` is the matrix of the phi-linear map
``F + V^{-1} : P_tau -> P_{tau+1}``: Lie columns carry ``F``, Hodge columns
carry ``V^{-1}``.

From this, the linearized Verschiebung is
``V#_{tau+1} = diag(p I_{p_tau}, I_{q_tau}) * HW[tau]^{-1} : P_{tau+1} -> P_tau^(phi)``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Any, Sequence

from .errors import InvalidModuleError, NotDivisibleError, ParameterError, PrecisionError
from .omod import ODieudonneModule, Signature, k_tau
from .semilinear import (
    Matrix,
    as_matrix,
    block_diag,
    det,
    diagonal,
    inverse,
    matfrob,
    matmul,
    shape,
    submatrix,
    transpose,
)
from .witt import (
    FqElem,
    TruncPoly,
    WittScalar,
    WittSeries,
    WittSeriesRing,
    get_series_ring,
    get_witt_ring,
)

DEFAULT_DEG = 8


@dataclass(frozen=True)
class Display:
    ring: WittSeriesRing
    f: int
    p_tau: tuple[int, ...]
    q_tau: tuple[int, ...]
    HW: tuple[Matrix, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_tau", tuple(self.p_tau))
        object.__setattr__(self, "q_tau", tuple(self.q_tau))
        object.__setattr__(self, "HW", tuple(as_matrix(B) for B in self.HW))
        self.validate()

    @property
    def h(self) -> int:
        return self.p_tau[0] + self.q_tau[0]

    @property
    def p(self) -> int:
        return self.ring.p

    @property
    def m(self) -> int:
        return self.ring.m

    @property
    def r_w(self) -> int:
        return self.ring.r_w

    def signature(self) -> Signature:
        return Signature(self.p_tau, self.q_tau)

    def validate(self) -> None:
        ring, f = self.ring, self.f
        if f < 1 or ring.m % f:
            raise ParameterError(f"f = {f} must divide the residue degree m = {ring.m}")
        if not (len(self.p_tau) == len(self.q_tau) == len(self.HW) == f):
            raise ParameterError(f"expected {f} blocks")
        self.signature()
        h = self.h
        for tau, B in enumerate(self.HW):
            if shape(B) != (h, h):
                raise ParameterError(f"HW block {tau} must be {h}x{h}")
            for row in B:
                for x in row:
                    if not isinstance(x, WittSeries) or x.ring is not ring:
                        raise ParameterError("HW entries must lie in the display's Witt series ring")
            if not det(B, ring).is_unit():
                raise InvalidModuleError(f"HW block {tau} is not invertible")

    def lie_scaling(self, tau: int) -> Matrix:
        """diag(p I_{p_tau}, I_{q_tau})."""
        t = tau % self.f
        pz, one = self.ring.from_int(self.p), self.ring.one
        return diagonal(self.ring, [pz] * self.p_tau[t] + [one] * self.q_tau[t])

    def v_sharp(self, tau: int) -> Matrix:
        """Matrix of V#_tau : P_tau -> P_{tau-1}^(phi)."""
        t = (tau - 1) % self.f
        return matmul(self.lie_scaling(t), inverse(self.HW[t], self.ring), self.ring)

    def is_special(self) -> bool:
        return self.ring.nvars == 0


def _entry_ring(base: WittSeriesRing, x: Any) -> WittSeries:
    if isinstance(x, WittSeries):
        return x
    if isinstance(x, WittScalar):
        return base.from_scalar(x)
    return base.from_int(x)


def make_display(
    base: WittSeriesRing, f: int, sig: Signature, HW: Sequence[Sequence[Sequence[Any]]]
) -> Display:
    mats = tuple(tuple(tuple(_entry_ring(base, x) for x in row) for row in B) for B in HW)
    return Display(base, f, sig.p_tau, sig.q_tau, mats)


def special_base(p: int, m: int, r_w: int, deg: int = DEFAULT_DEG) -> WittSeriesRing:
    return get_series_ring(p, m, r_w, (), deg)


# ---------------------------------------------------------------------------
# Lubin-Tate pieces and mu-ordinary products


def lt_display(A: Sequence[int] | set[int], base: WittSeriesRing, f: int) -> Display:
    """Rank one per tau with Lie part exactly at tau in A; HW blocks are all 1."""
    A = {a % f for a in A}
    p_tau = tuple(1 if t in A else 0 for t in range(f))
    q_tau = tuple(1 - x for x in p_tau)
    HW = tuple(((base.one,),) for _ in range(f))
    return Display(base, f, p_tau, q_tau, HW)


def _permutation(ring: WittSeriesRing, order: Sequence[int]) -> Matrix:
    """Matrix sending basis vector order[i] to position i."""
    n = len(order)
    return tuple(tuple(ring.one if order[i] == j else ring.zero for j in range(n)) for i in range(n))


def _sum_order(p1: int, q1: int, p2: int, q2: int) -> list[int]:
    h1 = p1 + q1
    lie = list(range(p1)) + [h1 + j for j in range(p2)]
    hodge = [p1 + j for j in range(q1)] + [h1 + p2 + j for j in range(q2)]
    return lie + hodge


def direct_sum(D1: Display, D2: Display) -> Display:
    """D1 + D2 with each block reordered to (Lie1, Lie2, Hodge1, Hodge2)."""
    if D1.ring is not D2.ring or D1.f != D2.f:
        raise ParameterError("direct sum needs identical bases")
    ring, f = D1.ring, D1.f
    perms = [_permutation(ring, _sum_order(D1.p_tau[t], D1.q_tau[t], D2.p_tau[t], D2.q_tau[t])) for t in range(f)]
    HW = []
    for t in range(f):
        B = block_diag(ring, D1.HW[t], D2.HW[t])
        # new coordinates = Pi * old; the map becomes Pi_{t+1} B Pi_t^T (permutations are fixed by phi)
        HW.append(matmul(matmul(perms[(t + 1) % f], B, ring), transpose(perms[t]), ring))
    p_tau = tuple(a + b for a, b in zip(D1.p_tau, D2.p_tau))
    q_tau = tuple(a + b for a, b in zip(D1.q_tau, D2.q_tau))
    return Display(ring, f, p_tau, q_tau, tuple(HW))


def x_ord_factors(sig: Signature) -> list[tuple[frozenset[int], int]]:
    """(A_l, multiplicity) pairs of the mu-ordinary product for a signature."""
    levels = sorted(set(sig.q_tau) | {0, sig.h})
    out = []
    for lo, hi in zip(levels, levels[1:]):
        A = frozenset(t for t in range(sig.f) if sig.q_tau[t] <= lo)
        out.append((A, hi - lo))
    return out


def x_ord(sig: Signature, base: WittSeriesRing) -> Display:
    """Product of Lubin-Tate pieces LT_{A_l}^{q^(l+1) - q^(l)} realizing the signature."""
    pieces: list[Display] = []
    for A, mult in x_ord_factors(sig):
        pieces.extend([lt_display(A, base, sig.f)] * mult)
    if not pieces:
        raise ParameterError("signature of height zero")
    D = pieces[0]
    for E in pieces[1:]:
        D = direct_sum(D, E)
    assert D.p_tau == sig.p_tau and D.q_tau == sig.q_tau
    return D


# ---------------------------------------------------------------------------
# special fiber and conversions


def special_fiber(D: Display) -> ODieudonneModule:
    """Set every variable to 0 and read off V and F over W_{r_w}(F_q)."""
    ring = get_witt_ring(D.p, D.m, D.r_w)
    f = D.f
    V: list[Matrix] = [()] * f
    F: list[Matrix] = [()] * f
    for t in range(f):
        B = tuple(tuple(x.evaluate_zero().to_scalar() for x in row) for row in D.HW[t])
        pz = ring.from_int(D.p)
        Dl = diagonal(ring, [pz] * D.p_tau[t] + [ring.one] * D.q_tau[t])
        Dh = diagonal(ring, [ring.one] * D.p_tau[t] + [pz] * D.q_tau[t])
        V[(t + 1) % f] = matfrob(matmul(Dl, inverse(B, ring), ring), -1)
        F[t] = matmul(B, Dh, ring)
    return ODieudonneModule(ring, f, D.h, tuple(V), tuple(F))


def display_of_module(M: ODieudonneModule, deg: int = DEFAULT_DEG) -> Display:
    """Display over k of a module whose basis is adapted to the Hodge filtration.

    The first p_tau rows of sigma(V_{tau+1}) must be divisible by p, i.e. the last
    q_tau basis vectors of M_tau lift V M_{tau+1} mod p.  Dividing those rows costs
    one digit, so the display has Witt length r - 1.
    """
    if M.r < 2:
        raise PrecisionError("a display needs precision r >= 2")
    sig = M.signature()
    small = get_witt_ring(M.p, M.m, M.r - 1)
    HW = []
    for t in range(M.f):
        W = matfrob(M.V[(t + 1) % M.f], 1)
        rows = []
        for i, row in enumerate(W):
            if i < sig.p_tau[t]:
                try:
                    rows.append(tuple(x.divide_by_p_power(1) for x in row))
                except NotDivisibleError as exc:
                    raise ParameterError(f"basis of M_{t} is not adapted to the Hodge filtration") from exc
            else:
                rows.append(tuple(x.truncate(small.r) for x in row))
        HW.append(inverse(tuple(rows), small))
    return make_display(special_base(M.p, M.m, small.r, deg), M.f, sig, HW)


# ---------------------------------------------------------------------------
# universal deformation


def deformation_variables(sig: Signature) -> tuple[str, ...]:
    return tuple(
        f"t{t}_{k}_{l}" for t in range(sig.f) for k in range(sig.p_tau[t]) for l in range(sig.q_tau[t])
    )


def _unipotent(ring: WittSeriesRing, p: int, q: int, names: Sequence[str], sign: int) -> Matrix:
    rows = []
    it = iter(names)
    h = p + q
    block = [[next(it) for _ in range(q)] for _ in range(p)]
    for i in range(h):
        row = []
        for j in range(h):
            if i == j:
                row.append(ring.one)
            elif i < p and j >= p:
                x = ring.teichmuller(ring.var(block[i][j - p]))
                row.append(x if sign > 0 else -x)
            else:
                row.append(ring.zero)
        rows.append(tuple(row))
    return tuple(rows)


def _split_names(sig: Signature, names: Sequence[str]) -> list[list[str]]:
    out, pos = [], 0
    for t in range(sig.f):
        n = sig.p_tau[t] * sig.q_tau[t]
        out.append(list(names[pos : pos + n]))
        pos += n
    return out


def universal_deformation(
    D0: Display,
    var_names: Sequence[str] | None = None,
    deg: int = DEFAULT_DEG,
    r_w: int | None = None,
) -> Display:
    """HW'[tau] = U_{tau+1} HW[tau] with U_tau = (I, [t^tau]; 0, I) Teichmueller-unipotent."""
    if not D0.is_special():
        raise ParameterError("universal_deformation expects a display over k")
    sig = D0.signature()
    canon = deformation_variables(sig)
    names = canon if var_names is None else tuple(var_names)
    if len(names) != len(canon):
        raise ParameterError(f"expected {len(canon)} deformation variables, got {len(names)}")
    r_w = D0.r_w if r_w is None else r_w
    if r_w > D0.r_w:
        raise ParameterError("cannot raise the Witt length of the special fiber")
    ring = get_series_ring(D0.p, D0.m, r_w, names, deg)
    per_tau = _split_names(sig, names)
    f = D0.f
    HW = []
    for t in range(f):
        B = tuple(tuple(ring.from_scalar(x.to_scalar()) for x in row) for row in D0.HW[t])
        u = (t + 1) % f
        U = _unipotent(ring, sig.p_tau[u], sig.q_tau[u], per_tau[u], 1)
        HW.append(matmul(U, B, ring))
    return Display(ring, f, sig.p_tau, sig.q_tau, tuple(HW))


def deformed_v_sharp(D0: Display, D: Display, tau: int) -> Matrix:
    """V#_tau of the deformation as A * (I, -[t^tau]; 0, I), A the constant lift of V#_tau(D0)."""
    ring = D.ring
    sig = D.signature()
    t = tau % D.f
    A = tuple(tuple(ring.from_scalar(x.to_scalar()) for x in row) for row in D0.v_sharp(t))
    per_tau = _split_names(sig, ring.vars)
    Uinv = _unipotent(ring, sig.p_tau[t], sig.q_tau[t], per_tau[t], -1)
    return matmul(A, Uinv, ring)


def rescale_basis(D: Display, units: Sequence[Sequence[WittSeries]]) -> Display:
    """Replace e^tau_i by units[tau][i] * e^tau_i; HW becomes L_{tau+1}^{-1} HW phi(L_tau)."""
    ring, f = D.ring, D.f
    HW = []
    for t in range(f):
        L = diagonal(ring, list(units[t]))
        Lnext_inv = diagonal(ring, [u.inverse() for u in units[(t + 1) % f]])
        HW.append(matmul(matmul(Lnext_inv, D.HW[t], ring), matfrob(L, 1), ring))
    return Display(ring, f, D.p_tau, D.q_tau, tuple(HW))


# ---------------------------------------------------------------------------
# Hasse invariant on the deformation space


@dataclass(frozen=True)
class HasseSeries:
    """First Witt component of p^{-k_tau} det of the Hodge block of V^f.

    The series is exact modulo monomials of total degree above ``deg``.
    """

    tau: int
    k_tau: int
    series: TruncPoly
    deg: int
    r_w: int
    unit_normalized: bool = False

    def valuation(self) -> int | None:
        """t-adic order; None when the series vanishes at this truncation."""
        return self.series.min_degree()

    def at_zero(self) -> FqElem:
        return FqElem(self.series.field, self.series.constant_term())

    def is_unit(self) -> bool:
        return self.series.constant_term() != 0

    def to_json(self, names: Sequence[str]) -> dict[str, Any]:
        F = self.series.field
        terms = sorted(self.series.terms.items())
        return {
            "tau": self.tau,
            "k_tau": self.k_tau,
            "deg": self.deg,
            "r_w": self.r_w,
            "unit_normalized": self.unit_normalized,
            "valuation": self.valuation(),
            "vars": list(names),
            "terms": [[list(e), list(FqElem(F, c).coeffs)] for e, c in terms],
        }


def v_power(D: Display, tau: int) -> Matrix:
    """phi^{f-1}(A_{tau+1}) ... phi(A_{tau-1}) A_tau with A_j = V#_j : P_j -> P_{j-1}^(phi)."""
    ring, f = D.ring, D.f
    out = D.v_sharp(tau)
    cur = tau
    for j in range(1, f):
        cur = (cur - 1) % f
        out = matmul(matfrob(D.v_sharp(cur), j), out, ring)
    return out


def hasse_series(D: Display, tau: int, normalize: bool = False) -> HasseSeries:
    t = tau % D.f
    sig = D.signature()
    k = k_tau(sig, t)
    if D.r_w <= k:
        raise PrecisionError(f"Witt length {D.r_w} must exceed k_tau = {k}")
    ring = D.ring
    Vf = v_power(D, t)
    p_t, q_t = sig.p_tau[t], sig.q_tau[t]
    for i in range(p_t):
        for x in Vf[i]:
            if not x.comps[0].is_zero():
                raise InvalidModuleError("Lie rows of V^f are not divisible by p")
    hodge = list(range(p_t, p_t + q_t))
    c = det(submatrix(Vf, hodge, hodge), ring)
    for _ in range(k):
        try:
            c = c.divide_by_p()
        except NotDivisibleError as exc:
            raise InvalidModuleError(f"divisibility violated: det of the Hodge block is not divisible by p^{k}") from exc
    series = c.first_component()
    if normalize:
        series = _normalize(series)
    return HasseSeries(t, k, series, c.ring.deg, D.r_w, normalize)


def _normalize(s: TruncPoly) -> TruncPoly:
    if s.is_zero():
        return s
    F = s.field
    lead = min(s.terms.items(), key=lambda kv: (sum(kv[0]), kv[0]))[1]
    return s.scale(F.inv(lead))


# ---------------------------------------------------------------------------
# JSON


def _coord_to_json(c: TruncPoly) -> Any:
    F = c.field
    if c.is_constant():
        return list(FqElem(F, c.constant_term()).coeffs)
    return {"terms": [[list(e), list(FqElem(F, v).coeffs)] for e, v in sorted(c.terms.items())]}


def _coord_from_json(ring: WittSeriesRing, x: Any) -> TruncPoly:
    F = ring.field
    if isinstance(x, dict):
        acc = TruncPoly.zero(F, ring.nvars, ring.deg)
        for exps, coeffs in x["terms"]:
            if len(exps) != ring.nvars:
                raise ParameterError("exponent vector length differs from the number of variables")
            code = FqElem.from_coeffs(ring.p, ring.m, coeffs).code
            acc = acc + TruncPoly(F, ring.nvars, ring.deg, {tuple(exps): code})
        return acc
    return ring.const_poly(FqElem.from_coeffs(ring.p, ring.m, x).code)


def _series_from_json(ring: WittSeriesRing, x: Any) -> WittSeries:
    if isinstance(x, bool):
        raise ParameterError("booleans are not matrix entries")
    if isinstance(x, int):
        return ring.from_int(x)
    return ring.from_components([_coord_from_json(ring, c) for c in x][: ring.r_w])


def _series_to_json(x: WittSeries) -> Any:
    if x.is_constant():
        s = x.to_scalar()
        if not any(s.c[1:]):
            return s.c[0]
    return [_coord_to_json(c) for c in x.comps]


def display_from_json(data: dict[str, Any]) -> Display:
    blocks = data["blocks"]
    ring = get_series_ring(data["p"], data["m"], data["r_w"], tuple(data.get("vars", [])), data.get("deg", DEFAULT_DEG))
    p_tau = tuple(b["p_tau"] for b in blocks)
    q_tau = tuple(b["q_tau"] for b in blocks)
    HW = tuple(tuple(tuple(_series_from_json(ring, x) for x in row) for row in b["HW"]) for b in blocks)
    return Display(ring, data["f"], p_tau, q_tau, HW)


def display_to_json(D: Display) -> dict[str, Any]:
    return {
        "p": D.p,
        "m": D.m,
        "f": D.f,
        "r_w": D.r_w,
        "deg": D.ring.deg,
        "vars": list(D.ring.vars),
        "blocks": [
            {
                "p_tau": D.p_tau[t],
                "q_tau": D.q_tau[t],
                "HW": [[_series_to_json(x) for x in row] for row in D.HW[t]],
            }
            for t in range(D.f)
        ],
    }


def random_teichmuller_units(D: Display, rng: random.Random) -> list[list[WittSeries]]:
    """Diagonal Teichmueller units, one per basis vector, for basis rescaling tests."""
    ring = D.ring
    F = ring.field
    out = []
    for _ in range(D.f):
        row = []
        for _ in range(D.h):
            code = rng.randrange(1, F.q)
            row.append(ring.teichmuller(ring.const_poly(code)))
        out.append(row)
    return out
