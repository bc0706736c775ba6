"""Connection specifications on P^1 over K.

A ConnectionSpec is the trivial bundle O^r with an absolute integrable
connection nabla = d + A, together with an effective pole divisor
D = sum m_x * x supported at K-rational points and infinity.  Validation
(integrability, admissibility), divisor extraction, gauge transformation and
pullback live here, plus the JSON ingestion schema used by the CLI.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from . import _linalg as la
from .field import (INFINITY, RF, FieldError, Poly, ScalarTower, format_elem,
                    laurent_expand, order_at)
from .forms import AbsoluteForm1, ShapeError, exterior_d, format_form, wedge


class SpecError(ValueError):
    """Malformed connection specification."""


@dataclass(frozen=True)
class DivisorPoint:
    point: object  # RF or INFINITY
    mult: int

    def is_infinity(self) -> bool:
        return self.point == INFINITY

    def label(self) -> str:
        return "infinity" if self.is_infinity() else format_elem(self.point)


class ConnectionSpec:
    """rank-r connection d + A on the trivial bundle, with pole divisor D."""

    __slots__ = ("tower", "rank", "A", "divisor")

    def __init__(self, tower: ScalarTower, rank: int, A: AbsoluteForm1,
                 divisor: Sequence[DivisorPoint] | None = None):
        if rank < 1 or A.r != rank:
            raise SpecError("rank must match the connection matrix shape")
        self.tower = tower
        self.rank = rank
        self.A = A
        if divisor is None:
            divisor = minimal_divisor_of(A)
        divisor = tuple(divisor)
        pts = [d.label() for d in divisor]
        if len(set(pts)) != len(pts):
            raise SpecError("divisor points must be distinct")
        for d in divisor:
            if d.mult < 1:
                raise SpecError("divisor multiplicities must be >= 1")
            if not d.is_infinity() and not d.point.is_z_free():
                raise SpecError("divisor points must be K-rational (z-free) or infinity")
        self.divisor = divisor

    def deg_divisor(self) -> int:
        return sum(d.mult for d in self.divisor)

    def mult_at_infinity(self) -> int:
        for d in self.divisor:
            if d.is_infinity():
                return d.mult
        return 0

    def finite_points(self):
        return [d for d in self.divisor if not d.is_infinity()]

    def __repr__(self):
        div = " + ".join(f"{d.mult}({d.label()})" for d in self.divisor)
        return f"ConnectionSpec(rank={self.rank}, D={div})"


# ---------------------------------------------------------------------------
# pole bookkeeping
# ---------------------------------------------------------------------------

def _entry_iter(A: AbsoluteForm1, include_base: bool = True):
    for row in A.fiber:
        for x in row:
            yield x, True
    if include_base:
        for m in A.base.values():
            for row in m:
                for x in row:
                    yield x, False


def _candidate_points(tower: ScalarTower, A: AbsoluteForm1, hints=()):
    """All finite K-rational poles of the entries of A.

    Discovery covers the denominators the grammar produces: powers of z,
    z-linear factors over K, and univariate-over-Q factors with rational
    roots.  Supplied divisor points extend the candidates.  Completeness is
    verified exactly (the z-degree of every denominator must be accounted
    for); anything unexplained raises SpecError asking for an explicit
    divisor.
    """
    from .field import to_z_poly, zpoly_deriv, zpoly_gcd, zpoly_long_divmod
    zi = tower.n - 1
    seen: dict = {}
    for h in hints:
        seen.setdefault(format_elem(h), h)

    def add(point: RF):
        seen.setdefault(format_elem(point), point)

    for f, _ in _entry_iter(A):
        if f.is_zero() or f.den.degree(zi) == 0:
            continue
        den = RF(tower, f.den, Poly(tower.n), Poly.const(tower.n, 1), reduce=False)
        coeffs = to_z_poly(den)
        if coeffs[0].is_zero():
            add(tower.zero())
        g = zpoly_gcd(coeffs, zpoly_deriv(coeffs))
        sqf = zpoly_long_divmod(coeffs, g)[0] if len(g) > 1 else list(coeffs)
        while sqf and sqf[0].is_zero():
            sqf = sqf[1:]
        if len(sqf) == 2:
            add(-sqf[0] / sqf[1])
        elif len(sqf) > 2 and all(c.is_rational() for c in sqf):
            from .forms import _rational_roots
            roots = _rational_roots([c.rational_value() for c in sqf])
            for root in roots:
                add(tower.rational(root))
    points = list(seen.values())
    # exact completeness check: all finite poles must be at known points
    for f, _ in _entry_iter(A):
        if f.is_zero():
            continue
        zdeg = f.den.degree(zi)
        if zdeg == 0:
            continue
        total = 0
        for p in points:
            o = order_at(f, p)
            if o < 0:
                total += -o
        if total != zdeg:
            raise SpecError(
                "connection has poles at points that are not K-rational or not "
                "discoverable; supply the divisor explicitly")
    return points


def fiber_pole_order(A: AbsoluteForm1, point) -> int:
    """Pole order of the fiber part (as a form) at the point; 0 if regular."""
    worst = 0
    for row in A.fiber:
        for f in row:
            if f.is_zero():
                continue
            o = order_at(f, point)
            if point == INFINITY:
                o = o - 2  # dz has a double pole at infinity
            worst = min(worst, o)
    return -worst


def base_pole_order(A: AbsoluteForm1, point) -> int:
    worst = 0
    for m in A.base.values():
        for row in m:
            for f in row:
                if f.is_zero():
                    continue
                worst = min(worst, order_at(f, point))
    return -worst


def minimal_divisor_of(A: AbsoluteForm1) -> tuple:
    """Exact fiber-part pole divisor; points of order 0 omitted."""
    tower = A.tower
    pts = _candidate_points(tower, A)
    out = []
    for p in pts:
        m = fiber_pole_order(A, p)
        if m > 0:
            out.append(DivisorPoint(p, m))
    m = fiber_pole_order(A, INFINITY)
    if m > 0:
        out.append(DivisorPoint(INFINITY, m))
    out.sort(key=lambda d: (d.is_infinity(), d.label()))
    return tuple(out)


def minimal_divisor(spec: ConnectionSpec) -> tuple:
    return minimal_divisor_of(spec.A)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def check_integrability(spec: ConnectionSpec) -> bool:
    """True iff dA + A ^ A = 0 exactly."""
    return (exterior_d(spec.A) + wedge(spec.A, spec.A)).is_zero()


@dataclass(frozen=True)
class Admissibility:
    ok: bool
    reason: str = ""
    point: str = ""

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class LocalData:
    """Decomposition A = g * s_x + eta / z_loc^(m-1) at a divisor point.

    ``g`` is the rank-r matrix of rational functions, regular and (for
    admissible specs) invertible at x, taken with respect to the default
    generator s_x = dz_loc / z_loc^m.  ``eta`` is the base-part matrix times
    z_loc^(m-1), regular at x.
    """
    point: object
    mult: int
    g: list
    eta: AbsoluteForm1


def local_data(spec: ConnectionSpec, d: DivisorPoint) -> LocalData:
    tower = spec.tower
    z = tower.z()
    if d.is_infinity():
        # s_inf = du/u^m = -z^(m-2) dz, so g = -A_fiber * z^(2-m);
        # eta = u^(m-1) * base parts = z^(1-m) * base parts
        g = la.mat_scale(spec.A.fiber, -(z ** (2 - d.mult)))
        eta = AbsoluteForm1(tower, spec.rank, None,
                            {tau: la.mat_scale(m, z ** (1 - d.mult))
                             for tau, m in spec.A.base.items()})
        return LocalData(INFINITY, d.mult, g, eta)
    zloc = z - d.point
    g = la.mat_scale(spec.A.fiber, zloc ** d.mult)
    eta = AbsoluteForm1(tower, spec.rank, None,
                        {tau: la.mat_scale(m, zloc ** (d.mult - 1))
                         for tau, m in spec.A.base.items()})
    return LocalData(d.point, d.mult, g, eta)


def leading_matrix(spec: ConnectionSpec, d: DivisorPoint):
    """Value of the LocalData matrix g at the point (entries in K)."""
    tower = spec.tower
    out = la.mat_zero(tower, spec.rank)
    for i in range(spec.rank):
        for j in range(spec.rank):
            f = spec.A.fiber[i][j]
            if f.is_zero():
                continue
            if d.is_infinity():
                out[i][j] = -laurent_expand(f, INFINITY, 2 - d.mult).coeff(2 - d.mult)
            else:
                out[i][j] = laurent_expand(f, d.point, -d.mult).coeff(-d.mult)
    return out


def check_admissible(spec: ConnectionSpec) -> Admissibility:
    """Admissibility: base-part pole depth <= m_x - 1 and invertible leading g.

    Assumes check_integrability has been verified by the caller.
    """
    tower = spec.tower
    if not spec.divisor:
        return Admissibility(False, "empty divisor (D must be nonempty)")
    # all poles of A must lie on D
    div_pts = {d.label(): d for d in spec.divisor}
    for p in _candidate_points(tower, spec.A) + [INFINITY]:
        lbl = "infinity" if p == INFINITY else format_elem(p)
        fo = fiber_pole_order(spec.A, p)
        bo = base_pole_order(spec.A, p)
        d = div_pts.get(lbl)
        m = d.mult if d else 0
        if fo > m:
            return Admissibility(False, f"fiber part has a pole of order {fo} > {m}", lbl)
        if bo > m - 1:
            return Admissibility(
                False, f"base part has a pole of order {bo} > m - 1 = {m - 1}", lbl)
    for d in spec.divisor:
        if fiber_pole_order(spec.A, d.point if not d.is_infinity() else INFINITY) != d.mult:
            return Admissibility(False, "divisor is not minimal for the fiber part",
                                 d.label())
        g0 = leading_matrix(spec, d)
        if la.mat_det(g0).is_zero():
            return Admissibility(False, "leading coefficient matrix g is singular",
                                 d.label())
    return Admissibility(True)


# ---------------------------------------------------------------------------
# gauge transformation and pullback
# ---------------------------------------------------------------------------

def d_matrix(tower: ScalarTower, M) -> AbsoluteForm1:
    r = len(M)
    fiber = [[x.deriv_z() for x in row] for row in M]
    base = {tau: [[x.deriv(tau) for x in row] for row in M] for tau in tower.base_vars}
    return AbsoluteForm1(tower, r, fiber, base)


def gauge_transform(spec: ConnectionSpec, M) -> ConnectionSpec:
    """Change of basis e' = M e: A' = M^-1 A M + M^-1 dM."""
    tower = spec.tower
    Minv = la.mat_inv(M)  # raises FieldError on singular M
    A2 = spec.A.left_mul(Minv).right_mul(M) + d_matrix(tower, M).left_mul(Minv)
    return ConnectionSpec(tower, spec.rank, A2)


def pullback(spec: ConnectionSpec, phi: RF,
             base_subst: Mapping[str, RF] | None = None) -> ConnectionSpec:
    """Substitute z = phi(z') (plus optional base substitutions) into A.

    dz becomes phi' dz'; substituted base variables contribute their full
    exterior derivative to the new decomposition.
    """
    tower = spec.tower
    if phi.deriv_z().is_zero():
        raise SpecError("pullback substitution must be nonconstant in z")
    subst = {tower.fiber: phi}
    if base_subst:
        subst.update(base_subst)
    r = spec.rank
    fiber = la.mat_zero(tower, r)
    base: dict = {}

    def add(dst, m):
        for i in range(r):
            for j in range(r):
                dst[i][j] = dst[i][j] + m[i][j]

    Fs = la.mat_map(spec.A.fiber, lambda x: x.subst(subst))
    add(fiber, la.mat_scale(Fs, phi.deriv_z()))
    for tau in tower.base_vars:
        if not phi.deriv(tau).is_zero():
            add_target = base.setdefault(tau, la.mat_zero(tower, r))
            add(add_target, la.mat_scale(Fs, phi.deriv(tau)))
    for tau, m in spec.A.base.items():
        Cs = la.mat_map(m, lambda x: x.subst(subst))
        e = (base_subst or {}).get(tau)
        if e is None:
            add_target = base.setdefault(tau, la.mat_zero(tower, r))
            add(add_target, Cs)
        else:
            dz_part = e.deriv_z()
            if not dz_part.is_zero():
                add(fiber, la.mat_scale(Cs, dz_part))
            for sig in tower.base_vars:
                dpart = e.deriv(sig)
                if not dpart.is_zero():
                    add_target = base.setdefault(sig, la.mat_zero(tower, r))
                    add(add_target, la.mat_scale(Cs, dpart))
    A2 = AbsoluteForm1(tower, r, fiber, base)
    return ConnectionSpec(tower, r, A2)


# ---------------------------------------------------------------------------
# JSON ingestion
# ---------------------------------------------------------------------------

_DIFF_PREFIX = "d"


def parse_form_entry(tower: ScalarTower, text: str) -> AbsoluteForm1:
    """Parse one matrix entry: a sum of terms coeff*dz or coeff*d<var>.

    Differentials behave like symbols that must occur linearly and never in a
    denominator; the grammar is otherwise the field expression grammar.
    """
    diff_names = [f"d{tower.fiber}"] + [f"d{v}" for v in tower.base_vars]
    clash = set(diff_names) & (set(tower.vars) | {tower.ext_name})
    if clash:
        raise SpecError(f"differential names clash with variables: {sorted(clash)}")
    shadow = ScalarTower(tower.base_vars + tuple(diff_names),
                         ext=None, fiber=tower.fiber, constants=tower.constants)
    if tower.ext_name:
        shadow = ScalarTower(tower.base_vars + tuple(diff_names),
                             ext=(tower.ext_name, _lift_poly_names(tower, shadow)),
                             fiber=tower.fiber, constants=tower.constants)
    from .field import _Parser
    val = _Parser(shadow, text).parse()
    # decompose: val must be K-linear in the differential symbols
    zero_diffs = {n: shadow.zero() for n in diff_names}
    out_fiber = tower.zero()
    out_base = {}
    reassembled = shadow.zero()
    for name in diff_names:
        coeff = val.deriv(name).subst(zero_diffs)
        coeff_t = _project(tower, shadow, coeff, diff_names)
        reassembled = reassembled + coeff * shadow.var(name)
        if name == f"d{tower.fiber}":
            out_fiber = coeff_t
        elif not coeff_t.is_zero():
            out_base[name[1:]] = coeff_t
    if not (val - reassembled).is_zero():
        raise SpecError(f"entry is not a K-linear combination of differentials: {text!r}")
    return AbsoluteForm1.scalar(tower, out_fiber, out_base)


def _lift_poly_names(tower: ScalarTower, shadow: ScalarTower):
    """Re-express the extension square in the shadow tower's variables."""
    s = tower.ext_square
    # same leading variables (constants + base) prefix, z moved: rebuild by name
    terms = {}
    for e, c in s.terms.items():
        newe = [0] * shadow.n
        for i, k in enumerate(e):
            if not k:
                continue
            newe[shadow.index(tower.vars[i])] = k
        terms[tuple(newe)] = c
    return Poly(shadow.n, terms)


def _project(tower: ScalarTower, shadow: ScalarTower, f: RF, diff_names) -> RF:
    """Map a differential-free shadow element back into the real tower."""
    forbidden = {shadow.index(n) for n in diff_names}

    def conv(poly: Poly) -> Poly:
        terms = {}
        for e, c in poly.terms.items():
            newe = [0] * tower.n
            for i, k in enumerate(e):
                if not k:
                    continue
                if i in forbidden:
                    raise SpecError("differential symbols may not appear in denominators")
                newe[tower.index(shadow.vars[i])] = k
            terms[tuple(newe)] = c
        return Poly(tower.n, terms)

    return RF(tower, conv(f.p), conv(f.q), conv(f.den))


def spec_from_json(doc: Mapping) -> ConnectionSpec:
    """Build a ConnectionSpec from the documented JSON schema."""
    if not isinstance(doc, Mapping):
        raise SpecError("top-level JSON value must be an object")
    try:
        base_vars = list(doc["base_vars"])
        rank = int(doc["rank"])
        matrix = doc["matrix"]
    except KeyError as e:
        raise SpecError(f"missing required field {e.args[0]!r}") from None
    constants = list(doc.get("constants", []))
    ext = None
    if "extension" in doc and doc["extension"] is not None:
        ext_doc = doc["extension"]
        ext = (ext_doc["gen"], ext_doc["square"])
    tower = ScalarTower(base_vars, ext=None, constants=constants)
    if ext is not None:
        tower = ScalarTower(base_vars, ext=(ext[0], tower.parse(ext[1]).p),
                            constants=constants)
    if len(matrix) != rank or any(len(row) != rank for row in matrix):
        raise SpecError(f"matrix must be {rank}x{rank}")
    fiber = la.mat_zero(tower, rank)
    base: dict = {}
    for i, row in enumerate(matrix):
        for j, entry in enumerate(row):
            try:
                form = parse_form_entry(tower, entry)
            except (FieldError, SpecError) as e:
                raise SpecError(f"matrix[{i}][{j}]: {e}") from None
            fiber[i][j] = form.scalar_fiber()
            for tau in form.base:
                base.setdefault(tau, la.mat_zero(tower, rank))[i][j] = form.scalar_base(tau)
    A = AbsoluteForm1(tower, rank, fiber, base)
    divisor = None
    if doc.get("divisor"):
        divisor = []
        for item in doc["divisor"]:
            pt = item["point"]
            point = INFINITY if pt == "infinity" else tower.parse(pt)
            divisor.append(DivisorPoint(point, int(item["mult"])))
    return ConnectionSpec(tower, rank, A, divisor)


def spec_from_json_file(path: str) -> ConnectionSpec:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise SpecError(f"invalid JSON: {e}") from None
    return spec_from_json(doc)
