"""Exact rational polygons: Hodge polygons from elementary divisors and Newton
polygons from characteristic polynomials of linearized Frobenius powers."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Sequence

from .errors import InvalidModuleError, ParameterError, PrecisionError
from .semilinear import ElemDivisors, charpoly, compose, identity_map

CONVEX = "convex"
CONCAVE = "concave"


@dataclass(frozen=True)
class RatPolygon:
    """Piecewise linear function on [0, width] with integer break candidates.

    ``slopes`` are listed left to right: ascending for convex polygons,
    descending for concave ones.
    """

    slopes: tuple[Fraction, ...]
    orientation: str = CONVEX

    def __post_init__(self) -> None:
        slopes = tuple(Fraction(s) for s in self.slopes)
        if self.orientation == CONVEX:
            slopes = tuple(sorted(slopes))
        elif self.orientation == CONCAVE:
            slopes = tuple(sorted(slopes, reverse=True))
        else:
            raise ParameterError(f"unknown orientation {self.orientation!r}")
        object.__setattr__(self, "slopes", slopes)

    @property
    def width(self) -> int:
        return len(self.slopes)

    def value(self, i: int) -> Fraction:
        if not 0 <= i <= self.width:
            raise ParameterError(f"abscissa {i} outside [0, {self.width}]")
        return sum(self.slopes[:i], Fraction(0))

    def values(self) -> tuple[Fraction, ...]:
        out, acc = [Fraction(0)], Fraction(0)
        for s in self.slopes:
            acc += s
            out.append(acc)
        return tuple(out)

    def endpoint(self) -> Fraction:
        return self.value(self.width)

    def break_abscissas(self) -> tuple[int, ...]:
        """Interior integer abscissas where the slope changes."""
        s = self.slopes
        return tuple(i for i in range(1, self.width) if s[i - 1] != s[i])

    def vertices(self) -> tuple[tuple[int, Fraction], ...]:
        vals = self.values()
        xs = (0,) + self.break_abscissas() + ((self.width,) if self.width else ())
        return tuple((x, vals[x]) for x in xs)

    def reverse(self) -> RatPolygon:
        """Read the polygon from its right end: descending slopes become ascending."""
        other = CONVEX if self.orientation == CONCAVE else CONCAVE
        return RatPolygon(tuple(reversed(self.slopes)), other)

    def to_json(self) -> dict[str, Any]:
        return {
            "width": self.width,
            "slopes": [_frac_str(s) for s in self.slopes],
            "breaks": [[x, _frac_str(y)] for x, y in self.vertices()],
        }

    def __str__(self) -> str:
        return "(" + ", ".join(str(s) for s in self.slopes) + ")"


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def parse_frac(s: str) -> Fraction:
    return Fraction(s)


def zero_polygon(h: int) -> RatPolygon:
    return RatPolygon((Fraction(0),) * h)


def hodge_diamond(divs: ElemDivisors, pad_to: int) -> RatPolygon:
    """Concave polygon with slopes a_1 >= a_2 >= .. padded by zeros to width ``pad_to``."""
    if divs.any_saturated():
        raise PrecisionError("precision exhausted: an elementary divisor is only known to be >= r")
    exps = [e for e in divs.exponents]
    if len(exps) > pad_to:
        nonzero = [e for e in exps if e]
        if len(nonzero) > pad_to:
            raise ParameterError(f"{len(nonzero)} nonzero divisors do not fit in width {pad_to}")
        exps = nonzero
    exps = exps + [0] * (pad_to - len(exps))
    return RatPolygon(tuple(Fraction(e) for e in exps), CONCAVE)


def concat(P: RatPolygon, Q: RatPolygon) -> RatPolygon:
    if P.orientation != Q.orientation:
        raise ParameterError("cannot concatenate polygons of different orientation")
    return RatPolygon(P.slopes + Q.slopes, P.orientation)


def average(polys: Sequence[RatPolygon]) -> RatPolygon:
    if not polys:
        raise ParameterError("average of an empty family")
    h, orient = polys[0].width, polys[0].orientation
    if any(P.width != h for P in polys):
        raise ParameterError("width mismatch in average")
    if any(P.orientation != orient for P in polys):
        raise ParameterError("orientation mismatch in average")
    n = len(polys)
    return RatPolygon(tuple(sum((P.slopes[j] for P in polys), Fraction(0)) / n for j in range(h)), orient)


def _cross(o: tuple[int, Fraction], a: tuple[int, Fraction], b: tuple[int, Fraction]) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def lower_hull(points: Iterable[tuple[int, Fraction]]) -> list[tuple[int, Fraction]]:
    pts = sorted((x, Fraction(y)) for x, y in points)
    hull: list[tuple[int, Fraction]] = []
    for pt in pts:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], pt) <= 0:
            hull.pop()
        hull.append(pt)
    return hull


def _hull_value(hull: Sequence[tuple[int, Fraction]], x: int) -> Fraction:
    for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
        if x0 <= x <= x1:
            return y0 + (y1 - y0) * Fraction(x - x0, x1 - x0)
    raise ParameterError(f"abscissa {x} outside the hull")


def newton_slopes(coeffs: Sequence[Any], r: int, det_valuation: int | None = None) -> tuple[Fraction, ...]:
    """Ascending root valuations of a monic polynomial with W_r coefficients (lowest degree first).

    Coefficients that vanish mod p^r are unknown (valuation >= r).  The constant
    term's valuation may be supplied exactly; otherwise it must be known.
    """
    h = len(coeffs) - 1
    if h == 0:
        return ()
    known: list[tuple[int, Fraction]] = []
    unknown: list[int] = []
    for i in range(h + 1):
        c = coeffs[h - i]
        v = c.valuation()
        if i == h and det_valuation is not None:
            if v < r and v != det_valuation:
                raise InvalidModuleError(f"determinant valuation {v} disagrees with the expected {det_valuation}")
            known.append((i, Fraction(det_valuation)))
        elif v < r:
            known.append((i, Fraction(v)))
        elif i == h:
            raise PrecisionError("precision exhausted: determinant vanishes at working precision")
        else:
            unknown.append(i)
    hull = lower_hull(known)
    for i in unknown:
        if _hull_value(hull, i) > r:
            raise PrecisionError(f"precision exhausted: Newton hull is ambiguous at abscissa {i}")
    slopes: list[Fraction] = []
    for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
        s = (y1 - y0) / (x1 - x0)
        slopes.extend([s] * (x1 - x0))
    return tuple(slopes)


def linearized_frobenius_power(module: Any, tau: int):
    """The sigma-linear composite V^m on M_tau (twist 0), m the residue degree."""
    ring, f = module.ring, module.f
    phi = identity_map(ring, module.h)
    cur = tau % f
    for _ in range(ring.m):
        phi = compose(module.V_map(cur), phi)
        cur = (cur - 1) % f
    assert phi.twist == 0
    return phi


def newton_polygon(module: Any, tau: int = 0) -> RatPolygon:
    """Newt_O: slopes of (M_tau, V^f) divided by f."""
    ring = module.ring
    L = linearized_frobenius_power(module, tau)
    coeffs = charpoly(L.matrix, ring)
    d = module.signature().d
    slopes = newton_slopes(coeffs, ring.r, d * (ring.m // module.f))
    return RatPolygon(tuple(s / ring.m for s in slopes))


ABOVE, BELOW, EQUAL, CROSSING = "above", "below", "equal", "crossing"


def _check_comparable(P: RatPolygon, Q: RatPolygon) -> None:
    if P.width != Q.width:
        raise ParameterError(f"width mismatch: {P.width} vs {Q.width}")
    if P.endpoint() != Q.endpoint():
        raise ParameterError(f"endpoint mismatch: {P.endpoint()} vs {Q.endpoint()}")


def compare(P: RatPolygon, Q: RatPolygon) -> str:
    """Position of P relative to Q; polygons must share both endpoints."""
    _check_comparable(P, Q)
    diffs = [a - b for a, b in zip(P.values(), Q.values())]
    if all(d == 0 for d in diffs):
        return EQUAL
    if all(d >= 0 for d in diffs):
        return ABOVE
    if all(d <= 0 for d in diffs):
        return BELOW
    return CROSSING


def contact_points(P: RatPolygon, Q: RatPolygon) -> tuple[int, ...]:
    _check_comparable(P, Q)
    return tuple(i for i, (a, b) in enumerate(zip(P.values(), Q.values())) if a == b)


def polygons_svg(polys: dict[str, RatPolygon], size: int = 320) -> str:
    """Static SVG plot of several polygons on a shared frame."""
    colors = ["#000000", "#c0392b", "#2471a3", "#229954", "#7d3c98"]
    h = max(P.width for P in polys.values())
    top = max((max(P.values()) for P in polys.values()), default=Fraction(1)) or Fraction(1)
    pad = 24
    sx = (size - 2 * pad) / max(h, 1)
    sy = (size - 2 * pad) / float(top)

    def pt(x: int, y: Fraction) -> str:
        return f"{pad + x * sx:.2f},{size - pad - float(y) * sy:.2f}"

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'<line x1="{pad}" y1="{size - pad}" x2="{size - pad}" y2="{size - pad}" stroke="#888"/>',
        f'<line x1="{pad}" y1="{size - pad}" x2="{pad}" y2="{pad}" stroke="#888"/>',
    ]
    for k, (name, P) in enumerate(sorted(polys.items())):
        color = colors[k % len(colors)]
        path = " ".join(pt(x, y) for x, y in P.vertices())
        dash = ' stroke-dasharray="5,3"' if k % 2 else ""
        lines.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"{dash}/>')
        lines.append(f'<text x="{pad + 4}" y="{pad + 14 * (k + 1)}" fill="{color}" font-size="12">{name}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
