"""Absolute differential forms on P^1 x Spec K with matrix coefficients.

AbsoluteForm1 decomposes uniquely as F dz + sum_tau C_tau dtau over the
differential base variables of the tower (constants contribute no
directions).  AbsoluteForm2 stores the dz^dtau and dsigma^dtau coefficient
matrices.  The module also provides the residue map to base 1-forms and the
reduction of closed z-free scalar 1-forms into the value group
Omega^1_K / dlog(K^x) (x) Q, represented by BaseFormClass.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

from . import _linalg as la
from .field import (INFINITY, RF, FieldError, Poly, ScalarTower, format_elem,
                    laurent_expand, poly_exact_div, poly_gcd, to_z_poly,
                    zpoly_deriv, zpoly_ext_euclid_inverse, zpoly_long_divmod,
                    zpoly_mul, zpoly_trim)


class ShapeError(ValueError):
    pass


class NotAClassError(ValueError):
    """Input to dlog_reduce is not a closed z-free base form."""


class CannotCertifyError(Exception):
    """The class cannot be decided with the recognized factor policy.

    Deliberately distinct from a nonzero verdict; callers must not treat it
    as inequality.
    """


def _as_matrix(tower: ScalarTower, m, r: int):
    if isinstance(m, RF):
        if r != 1:
            raise ShapeError("scalar given for a matrix slot")
        return [[m]]
    return m


class AbsoluteForm1:
    """Matrix-valued absolute 1-form A = fiber * dz + sum base[tau] * dtau."""

    __slots__ = ("tower", "r", "fiber", "base")

    def __init__(self, tower: ScalarTower, r: int, fiber=None, base=None):
        self.tower = tower
        self.r = r
        self.fiber = _as_matrix(tower, fiber, r) if fiber is not None else la.mat_zero(tower, r)
        self.base = {}
        for tau, m in (base or {}).items():
            if tau not in tower.base_vars:
                raise ShapeError(f"{tau!r} is not a differential base variable")
            m = _as_matrix(tower, m, r)
            if not la.mat_is_zero(m):
                self.base[tau] = m

    @classmethod
    def scalar(cls, tower: ScalarTower, fiber: RF | None = None,
               base: Mapping[str, RF] | None = None) -> "AbsoluteForm1":
        return cls(tower, 1, fiber, base)

    @classmethod
    def zero(cls, tower: ScalarTower, r: int = 1) -> "AbsoluteForm1":
        return cls(tower, r)

    def base_part(self, tau: str):
        return self.base.get(tau) or la.mat_zero(self.tower, self.r)

    def scalar_fiber(self) -> RF:
        return self.fiber[0][0]

    def scalar_base(self, tau: str) -> RF:
        return self.base_part(tau)[0][0]

    def is_zero(self) -> bool:
        return la.mat_is_zero(self.fiber) and not self.base

    def has_fiber_part(self) -> bool:
        return not la.mat_is_zero(self.fiber)

    def __add__(self, other: "AbsoluteForm1") -> "AbsoluteForm1":
        self._check(other)
        base = {}
        for tau in set(self.base) | set(other.base):
            base[tau] = la.mat_add(self.base_part(tau), other.base_part(tau))
        return AbsoluteForm1(self.tower, self.r, la.mat_add(self.fiber, other.fiber), base)

    def __sub__(self, other: "AbsoluteForm1") -> "AbsoluteForm1":
        return self + (-other)

    def __neg__(self) -> "AbsoluteForm1":
        return AbsoluteForm1(self.tower, self.r, la.mat_neg(self.fiber),
                             {tau: la.mat_neg(m) for tau, m in self.base.items()})

    def scale(self, c: RF) -> "AbsoluteForm1":
        return AbsoluteForm1(self.tower, self.r, la.mat_scale(self.fiber, c),
                             {tau: la.mat_scale(m, c) for tau, m in self.base.items()})

    def left_mul(self, M) -> "AbsoluteForm1":
        return AbsoluteForm1(self.tower, self.r, la.mat_mul(M, self.fiber),
                             {tau: la.mat_mul(M, m) for tau, m in self.base.items()})

    def right_mul(self, M) -> "AbsoluteForm1":
        return AbsoluteForm1(self.tower, self.r, la.mat_mul(self.fiber, M),
                             {tau: la.mat_mul(m, M) for tau, m in self.base.items()})

    def entry(self, i: int, j: int) -> "AbsoluteForm1":
        return AbsoluteForm1(self.tower, 1, [[self.fiber[i][j]]],
                             {tau: [[m[i][j]]] for tau, m in self.base.items()})

    def trace(self) -> "AbsoluteForm1":
        return AbsoluteForm1(self.tower, 1, [[la.mat_trace(self.fiber)]],
                             {tau: [[la.mat_trace(m)]] for tau, m in self.base.items()})

    def subst_entries(self, assignments) -> "AbsoluteForm1":
        f = la.mat_map(self.fiber, lambda x: x.subst(assignments))
        base = {tau: la.mat_map(m, lambda x: x.subst(assignments))
                for tau, m in self.base.items()}
        return AbsoluteForm1(self.tower, self.r, f, base)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AbsoluteForm1):
            return NotImplemented
        if self.tower != other.tower or self.r != other.r:
            return False
        if not la.mat_eq(self.fiber, other.fiber):
            return False
        for tau in set(self.base) | set(other.base):
            if not la.mat_eq(self.base_part(tau), other.base_part(tau)):
                return False
        return True

    def _check(self, other: "AbsoluteForm1"):
        if self.r != other.r or self.tower != other.tower:
            raise ShapeError("shape or tower mismatch between forms")

    def __repr__(self):
        return f"AbsoluteForm1({format_form(self)})"


class AbsoluteForm2:
    """Matrix-valued absolute 2-form: mixed[tau] dz^dtau + pure[(s,t)] ds^dt."""

    __slots__ = ("tower", "r", "mixed", "pure")

    def __init__(self, tower: ScalarTower, r: int, mixed=None, pure=None):
        self.tower = tower
        self.r = r
        self.mixed = {t: m for t, m in (mixed or {}).items() if not la.mat_is_zero(m)}
        self.pure = {p: m for p, m in (pure or {}).items() if not la.mat_is_zero(m)}

    def is_zero(self) -> bool:
        return not self.mixed and not self.pure

    def mixed_part(self, tau: str):
        return self.mixed.get(tau) or la.mat_zero(self.tower, self.r)

    def pure_part(self, sigma: str, tau: str):
        return self.pure.get((sigma, tau)) or la.mat_zero(self.tower, self.r)

    def __add__(self, other: "AbsoluteForm2") -> "AbsoluteForm2":
        mixed = {}
        for tau in set(self.mixed) | set(other.mixed):
            mixed[tau] = la.mat_add(self.mixed_part(tau), other.mixed_part(tau))
        pure = {}
        for key in set(self.pure) | set(other.pure):
            pure[key] = la.mat_add(self.pure_part(*key), other.pure_part(*key))
        return AbsoluteForm2(self.tower, self.r, mixed, pure)

    def __neg__(self) -> "AbsoluteForm2":
        return AbsoluteForm2(self.tower, self.r,
                             {t: la.mat_neg(m) for t, m in self.mixed.items()},
                             {p: la.mat_neg(m) for p, m in self.pure.items()})

    def __sub__(self, other):
        return self + (-other)


def wedge(a: AbsoluteForm1, b: AbsoluteForm1) -> AbsoluteForm2:
    """Wedge with matrix multiplication of coefficients.

    For matrices wedge(a, a) is generally nonzero; for scalars it vanishes.
    """
    a._check(b)
    tower, r = a.tower, a.r
    mixed = {}
    for tau in set(a.base) | set(b.base):
        m = la.mat_sub(la.mat_mul(a.fiber, b.base_part(tau)),
                       la.mat_mul(a.base_part(tau), b.fiber))
        mixed[tau] = m
    order = {v: i for i, v in enumerate(tower.base_vars)}
    pure = {}
    for sigma in a.base:
        for tau in b.base:
            if sigma == tau:
                continue
            m = la.mat_mul(a.base_part(sigma), b.base_part(tau))
            if order[sigma] < order[tau]:
                key, sgn = (sigma, tau), 1
            else:
                key, sgn = (tau, sigma), -1
            m = m if sgn == 1 else la.mat_neg(m)
            pure[key] = la.mat_add(pure[key], m) if key in pure else m
    return AbsoluteForm2(tower, r, mixed, pure)


def exterior_d(a: AbsoluteForm1) -> AbsoluteForm2:
    """Exterior derivative; constants of the tower are killed."""
    tower, r = a.tower, a.r
    zname = tower.fiber
    mixed = {}
    for tau in tower.base_vars:
        m = la.mat_sub(la.mat_map(a.base_part(tau), lambda x: x.deriv(zname)) if tau in a.base
                       else la.mat_zero(tower, r),
                       la.mat_map(a.fiber, lambda x: x.deriv(tau)))
        mixed[tau] = m
    pure = {}
    bv = tower.base_vars
    for i, sigma in enumerate(bv):
        for tau in bv[i + 1:]:
            m = la.mat_sub(la.mat_map(a.base_part(tau), lambda x: x.deriv(sigma)) if tau in a.base
                           else la.mat_zero(tower, r),
                           la.mat_map(a.base_part(sigma), lambda x: x.deriv(tau)) if sigma in a.base
                           else la.mat_zero(tower, r))
            pure[(sigma, tau)] = m
    return AbsoluteForm2(tower, r, mixed, pure)


def d_elem(f: RF) -> AbsoluteForm1:
    """d of a scalar function as an absolute 1-form."""
    tower = f.tower
    return AbsoluteForm1.scalar(tower, f.deriv_z(),
                                {tau: f.deriv(tau) for tau in tower.base_vars})


def dlog_elem(f: RF) -> AbsoluteForm1:
    """dlog f = df / f."""
    if f.is_zero():
        raise FieldError("dlog of zero")
    inv = f.inv()
    tower = f.tower
    return AbsoluteForm1.scalar(tower, f.deriv_z() * inv,
                                {tau: f.deriv(tau) * inv for tau in tower.base_vars})


def residue(omega: AbsoluteForm2, point) -> AbsoluteForm1:
    """Residue at a K-point or infinity: the coefficient of dloc/loc ^ dtau.

    Returns a matrix of base 1-forms (an AbsoluteForm1 with zero fiber part).
    Exact, via Laurent expansion of the dz^dtau coefficients.
    """
    tower, r = omega.tower, omega.r
    base = {}
    for tau, m in omega.mixed.items():
        out = la.mat_zero(tower, r)
        for i in range(r):
            for j in range(r):
                f = m[i][j]
                if f.is_zero():
                    continue
                if point == INFINITY:
                    # f dz = -f(1/u)/u^2 du: residue is -(u-coefficient at 1)
                    out[i][j] = -laurent_expand(f, INFINITY, 1).coeff(1)
                else:
                    out[i][j] = laurent_expand(f, point, -1).coeff(-1)
        base[tau] = out
    return AbsoluteForm1(tower, r, None, base)


def residue_sum_is_zero(omega: AbsoluteForm2, points: Sequence) -> bool:
    """Check the residue theorem over the given points plus infinity."""
    total = residue(omega, INFINITY)
    for p in points:
        total = total + residue(omega, p)
    return total.is_zero()


# ---------------------------------------------------------------------------
# the value group Omega^1_K / dlog(K^x) (x) Q
# ---------------------------------------------------------------------------

class BaseFormClass:
    """A class in Omega^1_K / dlog(K^x) (x) Q.

    ``representative`` maps base variables to z-free coefficients after all
    recognized rational-residue dlog components have been moved into
    ``log_part`` (a tuple of (canonical factor string, rational coefficient)).
    Two classes are equal iff their representatives agree.
    """

    __slots__ = ("tower", "representative", "log_part")

    def __init__(self, tower: ScalarTower, representative: Mapping[str, RF],
                 log_part: Sequence[tuple]):
        self.tower = tower
        self.representative = {t: c for t, c in representative.items() if not c.is_zero()}
        merged: dict = {}
        for name, coeff in log_part:
            merged[name] = merged.get(name, Fraction(0)) + coeff
        self.log_part = tuple(sorted((n, c) for n, c in merged.items() if c))

    def is_zero(self) -> bool:
        return not self.representative

    def __eq__(self, other) -> bool:
        if not isinstance(other, BaseFormClass):
            return NotImplemented
        if self.tower != other.tower:
            return False
        keys = set(self.representative) | set(other.representative)
        zero = self.tower.zero()
        return all(self.representative.get(k, zero) == other.representative.get(k, zero)
                   for k in keys)

    def rep_form(self) -> AbsoluteForm1:
        return AbsoluteForm1.scalar(self.tower, None, dict(self.representative))

    def __str__(self):
        parts = []
        for tau in self.tower.base_vars:
            c = self.representative.get(tau)
            if c is not None:
                parts.append(f"({format_elem(c)})*d{tau}")
        rep = " + ".join(parts) if parts else "0"
        logs = ", ".join(f"({name})^({c})" for name, c in self.log_part)
        return rep if not logs else f"{rep}  [dlog part: {logs}]"

    def __repr__(self):
        return f"BaseFormClass({self})"


def _den_factor_candidates(tower: ScalarTower, dens, aux_factors):
    """Split denominators into variable powers, aux factors, and univariate
    leftovers; return (primes, leftovers).

    primes: list of dicts with keys kind ('var' | 'aux' | 'uni'), data.
    leftovers: unfactored non-constant polys (certified=False handling).
    """
    n = tower.n
    seen = {}
    leftovers = []
    aux = []
    for f in aux_factors:
        if isinstance(f, str):
            f = tower.parse(f)
        if isinstance(f, RF):
            if not f.q.is_zero() or not f.den.is_const():
                raise FieldError("auxiliary factors must be polynomials")
            f = f.p
        aux.append(f)
    nconst = len(tower.constants)
    for den in dens:
        # variable powers first
        rest = den
        for i, v in enumerate(tower.vars):
            dmin = min((e[i] for e in rest.terms), default=0)
            if dmin > 0:
                rest = rest.shift_var(i, -dmin)
                if ("var", v) not in seen:
                    seen[("var", v)] = {"kind": "var", "var": v}
        if rest.is_const():
            continue
        for f in aux:
            while True:
                try:
                    rest2 = poly_exact_div(rest, f)
                except FieldError:
                    break
                rest = rest2
                key = ("aux", _poly_key(f))
                if key not in seen:
                    seen[key] = {"kind": "aux", "poly": f}
        if rest.is_const():
            continue
        used = rest.vars_used()
        nonconst_used = [i for i in used if i >= nconst]
        if len(nonconst_used) == 1:
            vi = nonconst_used[0]
            for prime, certified in _factor_univariate(tower, rest, vi):
                key = ("uni", _poly_key(prime))
                if key not in seen:
                    seen[key] = {"kind": "uni", "poly": prime, "var_index": vi,
                                 "certified": certified}
            continue
        # several non-constant variables: accept the factor when it is linear
        # in one of them with coprime coefficient polynomials
        lin = None
        for i in nonconst_used:
            if rest.degree(i) == 1:
                split = rest.split(i)
                if poly_gcd(split.get(1), split.get(0, Poly(tower.n))).is_const():
                    lin = i
                    break
        if lin is not None:
            key = ("uni", _poly_key(rest))
            if key not in seen:
                seen[key] = {"kind": "uni", "poly": rest, "var_index": lin,
                             "certified": True}
        else:
            leftovers.append(rest)
    return list(seen.values()), leftovers


def _poly_key(p: Poly):
    return tuple(sorted(p.terms.items()))


def _factor_univariate(tower: ScalarTower, poly: Poly, vi: int):
    """Factor a poly in variable vi (constants allowed in coefficients only if
    the poly is linear in vi).  Returns [(irreducible, certified)].
    """
    out = []
    if poly.degree(vi) == 1:
        return [(poly, True)]
    if poly.vars_used() - {vi}:
        # nonlinear with parameters: keep whole, uncertified
        return [(poly, False)]
    # pure Q[x]: squarefree split then rational-root splitting
    coeffs = [Fraction(0)] * (poly.degree(vi) + 1)
    for e, c in poly.terms.items():
        coeffs[e[vi]] = c
    for sqf in _squarefree_parts(coeffs):
        for fac, cert in _factor_squarefree_q(sqf):
            p = Poly(tower.n, {_exp(tower.n, vi, d): c for d, c in enumerate(fac) if c})
            out.append((p, cert))
    return out


def _exp(n, i, d):
    e = [0] * n
    e[i] = d
    return tuple(e)


def _q_deg(c):
    i = len(c) - 1
    while i >= 0 and not c[i]:
        i -= 1
    return i


def _q_divmod(a, b):
    a = list(a)
    db = _q_deg(b)
    q = [Fraction(0)] * max(_q_deg(a) - db + 1, 0)
    while _q_deg(a) >= db:
        da = _q_deg(a)
        f = a[da] / b[db]
        q[da - db] = f
        for i in range(db + 1):
            a[da - db + i] -= f * b[i]
    return q, a[:max(_q_deg(a) + 1, 0)]


def _q_gcd(a, b):
    a, b = list(a), list(b)
    while _q_deg(b) >= 0:
        _, r = _q_divmod(a, b)
        a, b = b, r
    d = _q_deg(a)
    if d < 0:
        return []
    lead = a[d]
    return [c / lead for c in a[:d + 1]]


def _squarefree_parts(coeffs):
    """Squarefree factors of a Q[x] polynomial (multiplicities dropped)."""
    d = _q_deg(coeffs)
    if d <= 0:
        return []
    deriv = [coeffs[i] * i for i in range(1, d + 1)]
    g = _q_gcd(coeffs, deriv)
    if _q_deg(g) == 0:
        return [[c / coeffs[d] for c in coeffs[:d + 1]]]
    sqf, _ = _q_divmod(coeffs, g)
    lead = sqf[_q_deg(sqf)]
    sqf = [c / lead for c in sqf[:_q_deg(sqf) + 1]]
    return [sqf] + _squarefree_parts(g)


def _rational_roots(coeffs):
    """Rational roots of a Q[x] polynomial via the rational root theorem."""
    from math import gcd as igcd
    den_lcm = 1
    for c in coeffs:
        den_lcm = den_lcm * c.denominator // igcd(den_lcm, c.denominator)
    ints = [int(c * den_lcm) for c in coeffs]
    while ints and ints[0] == 0:
        ints = ints[1:]  # roots at 0 are handled as the variable factor
    if not ints:
        return []
    a0, an = abs(ints[0]), abs(ints[-1])

    def divisors(m):
        out = set()
        i = 1
        while i * i <= m:
            if m % i == 0:
                out.add(i)
                out.add(m // i)
            i += 1
        return sorted(out)

    roots = []
    for p in divisors(a0) if a0 else [0]:
        for q in divisors(an):
            for cand in (Fraction(p, q), Fraction(-p, q)):
                val = Fraction(0)
                for c in reversed(coeffs):
                    val = val * cand + c
                if val == 0 and cand not in roots:
                    roots.append(cand)
    return roots


def _factor_squarefree_q(coeffs):
    """Split off rational roots; certify remainders of degree <= 3 irreducible."""
    out = []
    cur = list(coeffs)
    for r in _rational_roots(cur):
        q, rem = _q_divmod(cur, [-r, Fraction(1)])
        if _q_deg(rem) >= 0:
            continue
        out.append(([-r, Fraction(1)], True))
        cur = q
    d = _q_deg(cur)
    if d >= 1:
        lead = cur[d]
        out.append(([c / lead for c in cur[:d + 1]], d <= 3))
    return out


def dlog_reduce(omega: AbsoluteForm1, aux_factors: Sequence = ()) -> BaseFormClass:
    """Reduce a closed z-free scalar base 1-form modulo Q-spans of dlog(K^x).

    Subtracts c * dlog(p), c in Q, for every recognized irreducible polar
    divisor p along which the form has a simple pole with rational residue.
    Components with higher-order poles, or with residues that are not
    rational constants along a variable or parameter-linear divisor, stay in
    the representative (they certify a nonzero class).  An unrecognized
    irreducible factor carrying a simple pole, or a non-rational residue
    along an unproven factor, raises CannotCertifyError.
    """
    tower = omega.tower
    if omega.r != 1:
        raise ShapeError("dlog_reduce expects a scalar form")
    if omega.has_fiber_part():
        raise NotAClassError("form has a nonzero fiber (dz) part")
    comps = {tau: omega.scalar_base(tau) for tau in omega.base}
    for c in comps.values():
        if not c.is_z_free():
            raise NotAClassError("coefficients must not involve the fiber coordinate")
    if not exterior_d(omega).is_zero():
        raise NotAClassError("form is not closed")

    log_part: list = []
    primes, leftovers = _den_factor_candidates(
        tower, [c.den for c in comps.values() if not c.is_zero()], aux_factors)
    # rewrite dlog w as (1/2) dlog s before reduction: nothing to do at the
    # form level (dlog w is already w-free), but w-valued residues are
    # rejected below.

    zero = tower.zero()

    def comp(tau):
        return comps.get(tau, zero)

    for prime in sorted(primes, key=_prime_sort_key(tower)):
        if prime["kind"] == "var":
            v = prime["var"]
            if v in tower.constants or v == tower.fiber:
                continue
            vals = {}
            ok = True
            for tau, c in comps.items():
                if c.is_zero():
                    continue
                vi = tower.index(v)
                if c.den.degree(vi) == 0:
                    continue
                lau = laurent_expand(c, 0, -1, var=v)
                if lau.val < -1:
                    ok = False
                    break
                vals[tau] = lau.coeff(-1)
            if not ok:
                continue  # higher-order pole: no dlog component along v
            res = vals.get(v)
            if res is None or res.is_zero():
                continue
            if any(tau != v and not r.is_zero() for tau, r in vals.items()):
                continue  # residues off the dv direction cannot come from dlog v
            if res.is_rational():
                lam = res.rational_value()
                comps[v] = comp(v) - tower.rational(lam) / tower.var(v)
                log_part.append((v, lam))
            # non-rational residue along a variable divisor certifies nonzero
        else:
            p = prime["poly"]
            certified = prime.get("certified", True)
            lam = _residue_along(tower, comps, p)
            if lam is None:
                continue  # pole of order >= 2 only: stays in the representative
            if lam == "mixed":
                continue
            if isinstance(lam, RF) and not lam.is_rational():
                if certified and _is_parameter_valued(tower, lam):
                    continue  # provably non-rational residue: honest nonzero
                raise CannotCertifyError(
                    f"residue along {_fmt_poly(tower, p)} is not a rational constant")
            if isinstance(lam, RF):
                lam = lam.rational_value()
            if lam:
                dl = dlog_of_poly(tower, p)
                for tau, c in dl.items():
                    comps[tau] = comp(tau) - tower.rational(lam) * c
                log_part.append((_fmt_poly(tower, p), lam))
    # leftovers: unrecognized non-monomial multivariate denominators
    for rest in leftovers:
        if _has_simple_pole(tower, comps, rest):
            raise CannotCertifyError(
                f"unrecognized irreducible factor {_fmt_poly(tower, rest)} in a denominator")
    rep = {tau: c for tau, c in comps.items() if not c.is_zero()}
    for c in rep.values():
        if not c.q.is_zero():
            raise CannotCertifyError(
                "residual component takes values in the quadratic extension")
    return BaseFormClass(tower, rep, log_part)


def _prime_sort_key(tower):
    def key(prime):
        if prime["kind"] == "var":
            return (0, prime["var"])
        return (1, _fmt_poly(tower, prime["poly"]))
    return key


def _fmt_poly(tower, p: Poly) -> str:
    from .field import format_poly
    return format_poly(tower, p)


def dlog_of_poly(tower: ScalarTower, p: Poly) -> dict:
    """Components of dlog p over the differential base variables."""
    f = RF(tower, p, Poly(tower.n), Poly.const(tower.n, 1))
    inv = f.inv()
    out = {}
    for tau in tower.base_vars:
        c = f.deriv(tau) * inv
        if not c.is_zero():
            out[tau] = c
    return out


def _residue_along(tower: ScalarTower, comps, p: Poly):
    """Residue coefficient lambda with polar part lambda * dlog p, if the pole
    is simple; None when only higher-order poles are present; 'mixed' when the
    polar structure is not proportional to dlog p.
    """
    # find a variable in which p is linear, or fall back to univariate modular
    lin_var = None
    for i in p.vars_used():
        if p.degree(i) == 1:
            lin_var = i
            break
    results = {}
    if lin_var is not None:
        v = tower.vars[lin_var]
        split = p.split(lin_var)
        A = RF(tower, split.get(1), Poly(tower.n), Poly.const(tower.n, 1))
        B = RF(tower, split.get(0, Poly(tower.n)), Poly(tower.n), Poly.const(tower.n, 1))
        root = -B / A
        for tau in tower.base_vars:
            c = comps.get(tau)
            dpt = p.deriv(tower.index(tau))
            dptE = RF(tower, dpt, Poly(tower.n), Poly.const(tower.n, 1))
            dpt_at = dptE.subst({v: root}) if not dptE.is_zero() else tower.zero()
            if c is None or c.is_zero():
                num = tower.zero()
            else:
                val = _val_along_linear(tower, c, lin_var, root)
                if val <= -2:
                    return None
                num = laurent_expand(c, root, -1, var=v).coeff(-1) if val == -1 else tower.zero()
            # polar part num/(v - root) dtau = num*A/p dtau; dlog p has
            # dtau-part (d_tau p)/p; lambda = num*A/(d_tau p) evaluated mod p
            if dpt_at.is_zero():
                if not num.is_zero():
                    return "mixed"
                continue
            results[tau] = (num * A) / dpt_at
    else:
        # p univariate (degree >= 2) in a single variable over Q
        vi = next(iter(p.vars_used()))
        v = tower.vars[vi]
        plist = to_z_poly(RF(tower, p, Poly(tower.n), Poly.const(tower.n, 1)), var=v)
        pd = zpoly_deriv(plist)
        for tau, c in comps.items():
            if c.is_zero():
                continue
            from .field import _rf_as_quotient_lists
            cn, cd = _rf_as_quotient_lists(c, vi)
            # valuation of the denominator along p
            k = 0
            rem = cd
            while True:
                q, r = zpoly_long_divmod(rem, plist)
                if r:
                    break
                rem = q
                k += 1
            if k == 0:
                continue
            if k >= 2:
                return None
            if tau != v:
                # dlog p has no dtau-part off v; a simple pole here is mixed
                return "mixed"
            denom = zpoly_mul(rem, pd)
            inv = zpoly_ext_euclid_inverse(denom, plist)
            if inv is None:
                return "mixed"
            lam_list = zpoly_long_divmod(zpoly_mul(cn, inv), plist)[1]
            if len(lam_list) > 1:
                return "mixed"
            results[tau] = lam_list[0] if lam_list else tower.zero()
    vals = list(results.values())
    if not vals:
        return None
    first = vals[0]
    if any(not (r == first) for r in vals[1:]):
        return "mixed"
    return None if first.is_zero() else first


def _val_along_linear(tower, c: RF, lin_var: int, root: RF) -> int:
    v = tower.vars[lin_var]
    if c.den.degree(lin_var) == 0 and c.p.degree(lin_var) == 0 and c.q.degree(lin_var) == 0:
        return 0
    from .field import order_at
    return order_at(c, root, var=v)


def _is_parameter_valued(tower, lam: RF) -> bool:
    """True when lam is z-free and w-free (лives in the parameter field)."""
    return lam.is_z_free() and lam.q.is_zero()


def _has_simple_pole(tower, comps, rest: Poly) -> bool:
    for c in comps.values():
        if c.is_zero():
            continue
        try:
            poly_exact_div(c.den, rest)
            return True
        except FieldError:
            continue
    return False


def format_form(a: AbsoluteForm1) -> str:
    """Canonical printing of a scalar or matrix 1-form in the grammar."""
    tower = a.tower
    if a.r == 1:
        parts = []
        f = a.scalar_fiber()
        if not f.is_zero():
            parts.append(f"({format_elem(f)})*d{tower.fiber}")
        for tau in tower.base_vars:
            c = a.scalar_base(tau)
            if not c.is_zero():
                parts.append(f"({format_elem(c)})*d{tau}")
        return " + ".join(parts) if parts else "0"
    rows = []
    for i in range(a.r):
        row = [format_form(a.entry(i, j)) for j in range(a.r)]
        rows.append("[" + ", ".join(row) + "]")
    return "[" + ", ".join(rows) + "]"
