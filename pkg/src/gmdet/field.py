"""Exact scalar arithmetic.

Multivariate polynomials and rational functions over Q in a declared list of
base variables plus the fiber coordinate ``z``, with an optional quadratic
extension generated by ``w`` subject to the single relation ``w**2 = s`` for a
nonzero polynomial ``s`` in the base variables.

Everything here is immutable after construction and all operations are pure,
so values can be shared freely between threads.

Monomial order: graded lexicographic on the declared variable tuple (base
variables first, ``z`` last).  Canonical form of a rational function: numerator
and denominator coprime, denominator ``w``-free with leading grlex coefficient
1.  Over the extension this canonical form is unique up to that normalization;
the gcd is computed in the ``w``-free subring after norm multiplication.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence


class FieldError(ValueError):
    """Malformed input to a field operation (zero denominator, bad point...)."""


# ---------------------------------------------------------------------------
# sparse multivariate polynomials over Q
# ---------------------------------------------------------------------------

class Poly:
    """Sparse distributed polynomial over Q in a fixed number of variables.

    Terms map exponent tuples to nonzero Fractions.  The variable names live
    in the ScalarTower; a Poly only knows the arity ``n``.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[tuple, Fraction] | None = None):
        self.n = n
        if terms is None:
            self.terms = {}
        else:
            self.terms = {e: c for e, c in terms.items() if c}

    @classmethod
    def const(cls, n: int, c) -> "Poly":
        c = Fraction(c)
        return cls(n, {(0,) * n: c} if c else {})

    @classmethod
    def var(cls, n: int, i: int) -> "Poly":
        e = [0] * n
        e[i] = 1
        return cls(n, {tuple(e): Fraction(1)})

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return all(not any(e) for e in self.terms)

    def const_value(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        if not self.is_const():
            raise FieldError("polynomial is not constant")
        return next(iter(self.terms.values()))

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def __add__(self, other: "Poly") -> "Poly":
        t = dict(self.terms)
        for e, c in other.terms.items():
            s = t.get(e, Fraction(0)) + c
            if s:
                t[e] = s
            else:
                t.pop(e, None)
        return Poly(self.n, t)

    def __neg__(self) -> "Poly":
        return Poly(self.n, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        if not self.terms or not other.terms:
            return Poly(self.n)
        # multiply the smaller term set into the larger one
        a, b = self.terms, other.terms
        if len(a) > len(b):
            a, b = b, a
        t: dict = {}
        for ea, ca in a.items():
            for eb, cb in b.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                s = t.get(e, Fraction(0)) + ca * cb
                if s:
                    t[e] = s
                else:
                    del t[e]
        return Poly(self.n, t)

    def scale(self, c) -> "Poly":
        c = Fraction(c)
        if not c:
            return Poly(self.n)
        return Poly(self.n, {e: k * c for e, k in self.terms.items()})

    def __pow__(self, k: int) -> "Poly":
        if k < 0:
            raise FieldError("negative power of a polynomial")
        result = Poly.const(self.n, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def degree(self, i: int) -> int:
        """Degree in variable i, -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(e[i] for e in self.terms)

    def total_degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def vars_used(self) -> set:
        used = set()
        for e in self.terms:
            for i, k in enumerate(e):
                if k:
                    used.add(i)
        return used

    def deriv(self, i: int) -> "Poly":
        t: dict = {}
        for e, c in self.terms.items():
            if e[i]:
                e2 = list(e)
                e2[i] -= 1
                e2 = tuple(e2)
                s = t.get(e2, Fraction(0)) + c * e[i]
                if s:
                    t[e2] = s
                else:
                    del t[e2]
        return Poly(self.n, t)

    def split(self, i: int) -> dict:
        """View as univariate in variable i: degree -> Poly with that slot zeroed."""
        out: dict = {}
        for e, c in self.terms.items():
            d = e[i]
            e2 = list(e)
            e2[i] = 0
            e2 = tuple(e2)
            out.setdefault(d, {})[e2] = c
        return {d: Poly(self.n, t) for d, t in out.items()}

    @staticmethod
    def join(n: int, i: int, coeffs: Mapping[int, "Poly"]) -> "Poly":
        t: dict = {}
        for d, p in coeffs.items():
            for e, c in p.terms.items():
                e2 = list(e)
                e2[i] += d
                t[tuple(e2)] = t.get(tuple(e2), Fraction(0)) + c
        return Poly(n, {e: c for e, c in t.items() if c})

    def shift_var(self, i: int, k: int) -> "Poly":
        """Multiply by var_i**k (k may be negative if every term allows it)."""
        t: dict = {}
        for e, c in self.terms.items():
            if e[i] + k < 0:
                raise FieldError("negative exponent in shift_var")
            e2 = list(e)
            e2[i] += k
            t[tuple(e2)] = c
        return Poly(self.n, t)

    def leading(self) -> tuple:
        """(exponent, coefficient) of the grlex-leading term."""
        if not self.terms:
            raise FieldError("zero polynomial has no leading term")
        e = max(self.terms, key=lambda e: (sum(e), e))
        return e, self.terms[e]

    def content(self) -> Fraction:
        """Positive rational c with self/c integer-primitive (0 for zero)."""
        if not self.terms:
            return Fraction(0)
        from math import gcd as igcd
        num = 0
        den = 1
        for c in self.terms.values():
            num = igcd(num, abs(c.numerator))
            den = den * c.denominator // igcd(den, c.denominator)
        return Fraction(num, den)


def poly_exact_div(a: Poly, b: Poly) -> Poly:
    """Exact multivariate division a/b; raises if b does not divide a."""
    if b.is_zero():
        raise FieldError("division by zero polynomial")
    if a.is_zero():
        return Poly(a.n)
    if b.is_const():
        return a.scale(1 / b.const_value())
    n = a.n
    q: dict = {}
    rem = a
    be, bc = b.leading()
    while not rem.is_zero():
        re_, rc = rem.leading()
        e = tuple(x - y for x, y in zip(re_, be))
        if any(x < 0 for x in e):
            raise FieldError("inexact polynomial division")
        c = rc / bc
        q[e] = q.get(e, Fraction(0)) + c
        rem = rem - b * Poly(n, {e: c})
    return Poly(n, q)


def _prim_positive(p: Poly) -> Poly:
    if p.is_zero():
        return p
    c = p.content()
    _, lc = p.leading()
    if lc < 0:
        c = -c
    return p.scale(1 / c)


def _gcd_list(ps: Iterable[Poly]) -> Poly:
    g = None
    for p in ps:
        g = p if g is None else poly_gcd(g, p)
        if g.is_const() and not g.is_zero():
            break
    return g


def _univar_gcd(a: Poly, b: Poly, v: int) -> Poly:
    """Dense monic Euclid over Q when only variable v occurs in both."""
    def dense(p: Poly):
        d = p.degree(v)
        out = [Fraction(0)] * (d + 1)
        for e, c in p.terms.items():
            out[e[v]] = c
        return out

    def deg(L):
        i = len(L) - 1
        while i >= 0 and not L[i]:
            i -= 1
        return i

    A, B = dense(a), dense(b)
    da, db = deg(A), deg(B)
    if da < db:
        A, B, da, db = B, A, db, da
    while db >= 0:
        while da >= db:
            f = A[da] / B[db]
            for i in range(db + 1):
                A[da - db + i] -= f * B[i]
            da = deg(A)
        A, B, da, db = B, A, db, da
    if da < 0:
        return Poly(a.n)
    lead = A[da]
    return Poly(a.n, {_unit_exp(a.n, v, d): c / lead for d, c in enumerate(A[:da + 1]) if c})


def _unit_exp(n: int, v: int, d: int) -> tuple:
    e = [0] * n
    e[v] = d
    return tuple(e)


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """GCD over Q, primitive with positive leading coefficient (1 for units)."""
    if a.is_zero():
        return _prim_positive(b)
    if b.is_zero():
        return _prim_positive(a)
    if a.is_const() or b.is_const():
        return Poly.const(a.n, 1)
    used = a.vars_used() | b.vars_used()
    if len(used) == 1:
        v = next(iter(used))
        return _prim_positive(_univar_gcd(a, b, v))
    v = max(used)
    A = a.split(v)
    B = b.split(v)
    ca = _gcd_list(A.values())
    cb = _gcd_list(B.values())
    cont = poly_gcd(ca, cb)
    Ap = {d: poly_exact_div(p, ca) for d, p in A.items()}
    Bp = {d: poly_exact_div(p, cb) for d, p in B.items()}
    g = _prs_gcd(a.n, v, Ap, Bp)
    return _prim_positive(cont * g)


def _uni_deg(u: dict) -> int:
    return max(u) if u else -1


def _uni_scale(u: dict, p: Poly) -> dict:
    return {d: c * p for d, c in u.items()} if not p.is_zero() else {}


def _uni_sub(u: dict, v: dict) -> dict:
    out = dict(u)
    for d, c in v.items():
        s = out.get(d)
        s = (-c) if s is None else s - c
        if s.is_zero():
            out.pop(d, None)
        else:
            out[d] = s
    return out


def _uni_shift(u: dict, k: int) -> dict:
    return {d + k: c for d, c in u.items()}


def _uni_primitive(u: dict) -> dict:
    if not u:
        return u
    g = _gcd_list(u.values())
    if g.is_zero():
        return {}
    return {d: poly_exact_div(c, g) for d, c in u.items()}


def _pseudo_rem(A: dict, B: dict) -> dict:
    dB = _uni_deg(B)
    lB = B[dB]
    R = dict(A)
    while _uni_deg(R) >= dB and R:
        dR = _uni_deg(R)
        lR = R[dR]
        R = _uni_sub(_uni_scale(R, lB), _uni_shift(_uni_scale(B, lR), dR - dB))
        R.pop(dR, None)
    return R


def _prs_gcd(n: int, v: int, A: dict, B: dict) -> Poly:
    # primitive polynomial remainder sequence on primitive inputs
    if _uni_deg(A) < _uni_deg(B):
        A, B = B, A
    while B:
        R = _uni_primitive(_pseudo_rem(A, B))
        A, B = B, R
    return Poly.join(n, v, A)


def poly_lcm(a: Poly, b: Poly) -> Poly:
    if a.is_zero() or b.is_zero():
        return Poly(a.n)
    return _prim_positive(poly_exact_div(a * b, poly_gcd(a, b)))


# ---------------------------------------------------------------------------
# the coefficient field
# ---------------------------------------------------------------------------

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")

FIBER = "z"
EXT_DEFAULT = "w"


class ScalarTower:
    """The coefficient field K = k(base_vars)(z) with optional sqrt extension.

    ``base_vars`` are the differential base variables (the directions dtau of
    base 1-forms).  ``constants`` are extra transcendental parameters adjoined
    to the constant field k; the exterior derivative kills them.  ``vars`` is
    the polynomial variable tuple: constants, then base variables, then the
    fiber coordinate ``z``.  If ``ext`` is present it is a pair (name, s) with
    ``s`` a nonzero z-free Poly; elements then have the shape p + q*w with
    w**2 = s.
    """

    def __init__(self, base_vars: Sequence[str], ext: tuple | None = None,
                 fiber: str = FIBER, constants: Sequence[str] = ()):
        base_vars = tuple(base_vars)
        constants = tuple(constants)
        allnames = constants + base_vars
        if len(set(allnames)) != len(allnames):
            raise FieldError("duplicate variable names")
        if fiber in allnames:
            raise FieldError(f"variables may not use the reserved name {fiber!r}")
        for v in allnames + (fiber,):
            if not _NAME_RE.fullmatch(v):
                raise FieldError(f"bad variable name {v!r}")
        self.base_vars = base_vars
        self.constants = constants
        self.fiber = fiber
        self.vars = constants + base_vars + (fiber,)
        self.n = len(self.vars)
        self._index = {v: i for i, v in enumerate(self.vars)}
        self.ext_name = None
        self.ext_square: Poly | None = None
        if ext is not None:
            name, square = ext
            if name in self.vars:
                raise FieldError("extension generator clashes with a variable")
            if isinstance(square, str):
                square = self.parse(square)
            if isinstance(square, RF):
                if not square.den.is_const() or not square.q.is_zero():
                    raise FieldError("extension square must be a polynomial over Q[base_vars]")
                square = square.p.scale(1 / square.den.const_value())
            if square.is_zero():
                raise FieldError("extension square must be nonzero")
            if square.degree(self.n - 1) > 0:
                raise FieldError("extension square must not involve the fiber coordinate")
            self.ext_name = name
            self.ext_square = square

    # -- constructors ------------------------------------------------------

    def zero(self) -> "RF":
        return RF(self, Poly(self.n), Poly(self.n), Poly.const(self.n, 1), reduce=False)

    def one(self) -> "RF":
        return self.rational(1)

    def rational(self, c) -> "RF":
        return RF(self, Poly.const(self.n, c), Poly(self.n), Poly.const(self.n, 1),
                  reduce=False)

    def var(self, name: str) -> "RF":
        if name == self.ext_name:
            return RF(self, Poly(self.n), Poly.const(self.n, 1), Poly.const(self.n, 1),
                      reduce=False)
        i = self._index.get(name)
        if i is None:
            raise FieldError(f"unknown variable {name!r}")
        return RF(self, Poly.var(self.n, i), Poly(self.n), Poly.const(self.n, 1),
                  reduce=False)

    def z(self) -> "RF":
        return self.var(self.fiber)

    def index(self, name: str) -> int:
        i = self._index.get(name)
        if i is None:
            raise FieldError(f"unknown variable {name!r}")
        return i

    def __eq__(self, other):
        return (isinstance(other, ScalarTower) and self.vars == other.vars
                and self.ext_name == other.ext_name and self.ext_square == other.ext_square)

    def __hash__(self):
        return hash((self.vars, self.ext_name))

    def __repr__(self):
        ext = f", {self.ext_name}^2={format_poly(self, self.ext_square)}" if self.ext_name else ""
        return f"ScalarTower({', '.join(self.vars)}{ext})"

    # -- parsing (the expression grammar, bit-exact; see README) -----------

    def parse(self, text: str) -> "RF":
        return _Parser(self, text).parse()


class RF:
    """Element of the tower: (p + q*w) / den, canonically reduced.

    p, q, den are Polys over Q; den is w-free, nonzero, coprime to (p, q)
    jointly, and normalized to leading grlex coefficient 1.  q is zero when
    the tower has no extension.
    """

    __slots__ = ("tower", "p", "q", "den")

    def __init__(self, tower: ScalarTower, p: Poly, q: Poly, den: Poly, reduce: bool = True):
        if den.is_zero():
            raise FieldError("zero denominator")
        self.tower = tower
        if reduce:
            g = poly_gcd(poly_gcd(p, q), den)
            if not (g.is_const() and g.const_value() == 1):
                p = poly_exact_div(p, g)
                q = poly_exact_div(q, g)
                den = poly_exact_div(den, g)
            _, lc = den.leading()
            if lc != 1:
                p = p.scale(1 / lc)
                q = q.scale(1 / lc)
                den = den.scale(1 / lc)
        self.p = p
        self.q = q
        self.den = den

    # -- basics -------------------------------------------------------------

    def is_zero(self) -> bool:
        return self.p.is_zero() and self.q.is_zero()

    def is_rational(self) -> bool:
        return self.q.is_zero() and self.p.is_const() and self.den.is_const()

    def rational_value(self) -> Fraction:
        if not self.is_rational():
            raise FieldError("element is not a rational constant")
        if self.p.is_zero():
            return Fraction(0)
        return self.p.const_value() / self.den.const_value()

    def __eq__(self, other) -> bool:
        if not isinstance(other, RF):
            return NotImplemented
        return (self.tower == other.tower and self.p == other.p
                and self.q == other.q and self.den == other.den)

    def __hash__(self):
        return hash((self.p, self.q, self.den))

    def __bool__(self):
        return not self.is_zero()

    # -- arithmetic ----------------------------------------------------------

    def _coerce(self, other) -> "RF":
        if isinstance(other, RF):
            return other
        if isinstance(other, (int, Fraction)):
            return self.tower.rational(other)
        raise TypeError(f"cannot coerce {other!r}")

    def __add__(self, other):
        o = self._coerce(other)
        if self.den == o.den:
            return RF(self.tower, self.p + o.p, self.q + o.q, self.den)
        return RF(self.tower, self.p * o.den + o.p * self.den,
                  self.q * o.den + o.q * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return RF(self.tower, -self.p, -self.q, self.den, reduce=False)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        if self.q.is_zero() and o.q.is_zero():
            return RF(self.tower, self.p * o.p, Poly(self.p.n), self.den * o.den)
        s = self.tower.ext_square
        p = self.p * o.p + (self.q * o.q) * s
        q = self.p * o.q + self.q * o.p
        return RF(self.tower, p, q, self.den * o.den)

    __rmul__ = __mul__

    def inv(self) -> "RF":
        if self.is_zero():
            raise FieldError("division by zero")
        if self.q.is_zero():
            return RF(self.tower, self.den, Poly(self.p.n), self.p)
        s = self.tower.ext_square
        norm = self.p * self.p - (self.q * self.q) * s
        if norm.is_zero():
            raise FieldError("zero divisor in the quadratic extension (square is a perfect square?)")
        return RF(self.tower, self.den * self.p, -(self.den * self.q), norm)

    def __truediv__(self, other):
        return self * self._coerce(other).inv()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inv()

    def __pow__(self, k: int):
        if k < 0:
            return self.inv() ** (-k)
        result = self.tower.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- calculus ------------------------------------------------------------

    def deriv(self, name: str) -> "RF":
        """Partial derivative by a variable name (handles the w chain rule)."""
        i = self.tower.index(name)
        p, q, den = self.p, self.q, self.den
        if self.tower.ext_name is None or self.q.is_zero():
            num = p.deriv(i) * den - p * den.deriv(i)
            return RF(self.tower, num, Poly(p.n), den * den)
        s = self.tower.ext_square
        two_s = s.scale(2)
        # d(p+qw) = p' + (q' + q s'/(2s)) w; clear 2s
        np_ = p.deriv(i) * two_s
        nq = q.deriv(i) * two_s + q * s.deriv(i)
        num_p = np_ * den - p.scale(2) * s * den.deriv(i)
        num_q = nq * den - q.scale(2) * s * den.deriv(i)
        return RF(self.tower, num_p, num_q, two_s * den * den)

    def deriv_z(self) -> "RF":
        return self.deriv(self.tower.fiber)

    def subst(self, assignments: Mapping[str, "RF"]) -> "RF":
        """Substitute variables by tower elements (simultaneously)."""
        tower = self.tower
        idx = {tower.index(k): v for k, v in assignments.items()}

        def eval_poly(poly: Poly) -> RF:
            acc = tower.zero()
            for e, c in poly.terms.items():
                term = tower.rational(c)
                for i, k in enumerate(e):
                    if not k:
                        continue
                    base = idx.get(i)
                    if base is None:
                        base = tower.var(tower.vars[i])
                    term = term * base ** k
                acc = acc + term
            return acc

        num = eval_poly(self.p)
        if not self.q.is_zero():
            w = tower.var(tower.ext_name)
            num = num + eval_poly(self.q) * w
        den = eval_poly(self.den)
        if den.is_zero():
            raise FieldError("substitution hits a pole of the rational function")
        return num / den

    def conj(self) -> "RF":
        """Conjugate w -> -w."""
        return RF(self.tower, self.p, -self.q, self.den, reduce=False)

    # -- structure access ----------------------------------------------------

    def z_degree(self) -> int:
        """Max fiber-coordinate degree appearing in numerator or denominator."""
        zi = self.tower.n - 1
        return max(self.p.degree(zi), self.q.degree(zi), self.den.degree(zi))

    def is_z_free(self) -> bool:
        zi = self.tower.n - 1
        return self.p.degree(zi) <= 0 and self.q.degree(zi) <= 0 and self.den.degree(zi) <= 0

    def __repr__(self):
        return f"RF({format_elem(self)})"


# ---------------------------------------------------------------------------
# dense z-polynomial helpers (coefficients are z-free tower elements)
# ---------------------------------------------------------------------------

def to_z_poly(f: RF, var: str | None = None) -> list:
    """Dense coefficient list of f as a polynomial in the variable over K
    (low degree first, fiber coordinate by default).

    Requires the denominator to be free of that variable.
    """
    tower = f.tower
    zi = tower.n - 1 if var is None else tower.index(var)
    if f.den.degree(zi) > 0:
        raise FieldError("element is not polynomial in the requested variable")
    deg = max(f.p.degree(zi), f.q.degree(zi), 0)
    out = []
    psplit = f.p.split(zi)
    qsplit = f.q.split(zi)
    for d in range(deg + 1):
        p = psplit.get(d, Poly(tower.n))
        q = qsplit.get(d, Poly(tower.n))
        out.append(RF(tower, p, q, f.den))
    return zpoly_trim(out)


def from_z_poly(coeffs: Sequence[RF], tower: ScalarTower) -> RF:
    z = tower.z()
    acc = tower.zero()
    for d, c in enumerate(coeffs):
        acc = acc + c * z ** d
    return acc


def zpoly_trim(c: list) -> list:
    while c and c[-1].is_zero():
        c.pop()
    return c


def zpoly_deg(c: Sequence[RF]) -> int:
    return len(c) - 1


def zpoly_add(a, b):
    n = max(len(a), len(b))
    out = []
    for i in range(n):
        x = a[i] if i < len(a) else None
        y = b[i] if i < len(b) else None
        out.append(y if x is None else (x if y is None else x + y))
    return zpoly_trim(out)


def zpoly_scale(a, c: RF):
    if c.is_zero():
        return []
    return zpoly_trim([x * c for x in a])


def zpoly_mul(a, b):
    if not a or not b:
        return []
    tower = a[0].tower
    out = [tower.zero() for _ in range(len(a) + len(b) - 1)]
    for i, x in enumerate(a):
        if x.is_zero():
            continue
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return zpoly_trim(out)


def zpoly_gcd(a, b):
    a, b = list(a), list(b)
    while b:
        _, r = zpoly_long_divmod(a, b)
        a, b = b, r
    if a:
        a = zpoly_scale(a, a[-1].inv())
    return a


def zpoly_long_divmod(a, b):
    """Classic long division in K[z] (handles degree gaps correctly)."""
    if not b:
        raise FieldError("division by the zero polynomial")
    tower = b[0].tower
    r = list(a)
    if len(r) < len(b):
        return [], zpoly_trim(r)
    q = [tower.zero() for _ in range(len(r) - len(b) + 1)]
    lb = b[-1]
    while len(r) >= len(b) and r:
        c = r[-1] / lb
        k = len(r) - len(b)
        q[k] = c
        for i in range(len(b)):
            r[k + i] = r[k + i] - c * b[i]
        zpoly_trim(r)
    return zpoly_trim(q), zpoly_trim(r)


def zpoly_deriv(a):
    return zpoly_trim([a[i] * i for i in range(1, len(a))])


def zpoly_eval(a, x: RF) -> RF:
    tower = x.tower
    acc = tower.zero()
    for c in reversed(a):
        acc = acc * x + c
    return acc


def zpoly_ext_euclid_inverse(a, m):
    """Inverse of a modulo m in K[z]; None if gcd(a, m) is nonconstant."""
    tower = m[0].tower
    r0, r1 = list(m), list(a)
    s0, s1 = [], [tower.one()]
    while r1:
        q, r = zpoly_long_divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, zpoly_add(s0, zpoly_scale(zpoly_mul(q, s1), tower.rational(-1)))
    if zpoly_deg(r0) != 0:
        return None
    c = r0[0].inv()
    _, red = zpoly_long_divmod(zpoly_scale(s0, c), m)
    return red


# ---------------------------------------------------------------------------
# Laurent expansion
# ---------------------------------------------------------------------------

INFINITY = "infinity"


class Laurent:
    """Truncated Laurent expansion: coeffs[k] is the coefficient of loc**(val+k).

    ``order`` is the largest exponent guaranteed correct.
    """

    __slots__ = ("tower", "val", "coeffs", "order")

    def __init__(self, tower: ScalarTower, val: int, coeffs: list, order: int):
        while coeffs and coeffs[0].is_zero():
            coeffs = coeffs[1:]
            val += 1
        if not coeffs:
            val = order + 1
        self.tower = tower
        self.val = val
        self.coeffs = coeffs
        self.order = order

    def coeff(self, k: int) -> RF:
        if k > self.order:
            raise FieldError("coefficient beyond computed order")
        i = k - self.val
        if i < 0 or i >= len(self.coeffs):
            return self.tower.zero()
        return self.coeffs[i]

    def is_zero(self) -> bool:
        return not self.coeffs


def _zlist_shift(coeffs: list, c: RF) -> list:
    """Taylor shift: coefficients of p(c + x) from those of p(x)."""
    out = list(coeffs)
    n = len(out)
    # synthetic division by (x - c) repeatedly
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            out[j] = out[j] + c * out[j + 1]
    return out


def _series_inv(coeffs: list, order: int) -> list:
    """Multiplicative inverse of a series with unit constant term, to x**order."""
    c0 = coeffs[0]
    inv0 = c0.inv()
    tower = c0.tower
    out = [inv0]
    for k in range(1, order + 1):
        acc = tower.zero()
        for j in range(1, k + 1):
            cj = coeffs[j] if j < len(coeffs) else None
            if cj is None or cj.is_zero():
                continue
            acc = acc + cj * out[k - j]
        out.append(-inv0 * acc)
    return out


def _rf_as_quotient_lists(f: RF, var_index: int | None = None):
    """(num_list, den_list) with var-free RF coefficients; num may carry w."""
    tower = f.tower
    zi = tower.n - 1 if var_index is None else var_index
    dsplit = f.den.split(zi)
    den = []
    for d in range(f.den.degree(zi) + 1):
        den.append(RF(tower, dsplit.get(d, Poly(tower.n)), Poly(tower.n),
                      Poly.const(tower.n, 1), reduce=False))
    psplit = f.p.split(zi)
    qsplit = f.q.split(zi)
    deg = max(f.p.degree(zi), f.q.degree(zi), 0)
    num = []
    for d in range(deg + 1):
        num.append(RF(tower, psplit.get(d, Poly(tower.n)), qsplit.get(d, Poly(tower.n)),
                      Poly.const(tower.n, 1), reduce=False))
    return zpoly_trim(num), zpoly_trim(den)


def laurent_expand(f: RF, point, order: int, var: str | None = None) -> Laurent:
    """Truncated Laurent expansion of f at a K-point or at infinity.

    Expands in the fiber coordinate by default, or in the named variable.  At
    a finite point the local coordinate is (var - point); at infinity it is
    u = 1/var.  The zero function returns an empty expansion.
    """
    tower = f.tower
    vi = tower.n - 1 if var is None else tower.index(var)
    if f.is_zero():
        return Laurent(tower, order + 1, [], order)
    num, den = _rf_as_quotient_lists(f, vi)
    if point == INFINITY:
        # f(1/u) = u^(dd-dn) * rev(num)(u)/rev(den)(u)
        dn, dd = len(num) - 1, len(den) - 1
        nlist = list(reversed(num))
        dlist = list(reversed(den))
        shift = dd - dn
    else:
        if not isinstance(point, RF):
            point = tower.rational(point)
        if max(point.p.degree(vi), point.q.degree(vi), point.den.degree(vi)) > 0:
            raise FieldError("expansion point must not involve the expansion variable")
        nlist = _zlist_shift(num, point)
        dlist = _zlist_shift(den, point)
        shift = 0
    # strip common powers of the local coordinate
    vn = 0
    while vn < len(nlist) and nlist[vn].is_zero():
        vn += 1
    vd = 0
    while vd < len(dlist) and dlist[vd].is_zero():
        vd += 1
    val = vn - vd + shift
    need = order - val
    if need < 0:
        return Laurent(tower, order + 1, [], order)
    inv = _series_inv(dlist[vd:], need)
    prod = []
    ntail = nlist[vn:]
    for k in range(need + 1):
        acc = tower.zero()
        for j in range(k + 1):
            if j < len(ntail) and not ntail[j].is_zero():
                acc = acc + ntail[j] * inv[k - j]
        prod.append(acc)
    return Laurent(tower, val, prod, order)


def order_at(f: RF, point, var: str | None = None) -> int:
    """Valuation of f at the point (negative for a pole); raises on f == 0."""
    if f.is_zero():
        raise FieldError("the zero function has no valuation")
    vi = f.tower.n - 1 if var is None else f.tower.index(var)
    num, den = _rf_as_quotient_lists(f, vi)
    if point == INFINITY:
        # leading coefficients never vanish after trim
        return (len(den) - 1) - (len(num) - 1)
    if not isinstance(point, RF):
        point = f.tower.rational(point)
    def val(lst):
        lst = _zlist_shift(lst, point)
        v = 0
        while v < len(lst) and lst[v].is_zero():
            v += 1
        return v
    return val(num) - val(den)


# ---------------------------------------------------------------------------
# resultant-style traces over divisors of sections
# ---------------------------------------------------------------------------

def normalize(f: RF) -> RF:
    """Canonical reduced representative (the identity on this representation).

    Kept as an explicit operation so callers can rely on canonical equality:
    normalize(f) == normalize(g) iff f == g as field elements.
    """
    return RF(f.tower, f.p, f.q, f.den)


def resultant_trace(G, h: RF) -> RF:
    """Trace of h over the roots of G: sum of h(beta) over G(beta) = 0.

    G is a squarefree polynomial in z over K (an RF polynomial in z, or a
    dense coefficient list); h a rational function whose denominator is
    coprime to G.  Computed from power sums via Newton's identities, without
    factoring G.
    """
    if isinstance(G, RF):
        G = to_z_poly(G)
    G = zpoly_trim(list(G))
    if not G or len(G) == 1:
        tower = h.tower
        return tower.zero()
    tower = G[0].tower
    # monic normalization
    lead = G[-1]
    G = zpoly_scale(G, lead.inv())
    d = len(G) - 1
    g = zpoly_gcd(G, zpoly_deriv(G))
    if zpoly_deg(g) > 0:
        raise FieldError("degenerate divisor: G is not squarefree")
    hn, hd = _rf_as_quotient_lists(h)
    _, hn = zpoly_long_divmod(hn, G)
    if len(hd) > 1:
        inv = zpoly_ext_euclid_inverse(hd, G)
        if inv is None:
            raise FieldError("pole on divisor: denominator of h shares a root with G")
        r = zpoly_long_divmod(zpoly_mul(hn, inv), G)[1]
    else:
        r = zpoly_scale(hn, hd[0].inv())
    # power sums p_k of the roots of monic G via Newton's identities
    e = [tower.zero() for _ in range(d + 1)]
    e[0] = tower.one()
    for i in range(1, d + 1):
        e[i] = G[d - i] * tower.rational((-1) ** i)
    kmax = max(zpoly_deg(r), 0)
    psums = [tower.rational(d)]
    for k in range(1, kmax + 1):
        acc = tower.zero()
        for i in range(1, min(k - 1, d) + 1):
            acc = acc + e[i] * psums[k - i] * tower.rational((-1) ** (i - 1))
        if k <= d:
            acc = acc + e[k] * tower.rational((-1) ** (k - 1) * k)
        psums.append(acc)
    out = tower.zero()
    for k, c in enumerate(r):
        if not c.is_zero():
            out = out + c * psums[k]
    return out


# ---------------------------------------------------------------------------
# expression grammar (parser and canonical printer)
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()]))")


class _Parser:
    """Recursive-descent parser for the expression grammar.

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := ('+'|'-')* power
    power  := atom (('^'|'**') intexp)?
    intexp := ('+'|'-')? INT | '(' ('+'|'-')? INT ')'
    atom   := INT | NAME | '(' expr ')'
    """

    def __init__(self, tower: ScalarTower, text: str, extra_names: Mapping[str, RF] | None = None):
        self.tower = tower
        self.text = text
        self.tokens = self._tokenize(text)
        self.pos = 0
        self.extra = extra_names or {}

    @staticmethod
    def _tokenize(text: str):
        tokens = []
        i = 0
        while i < len(text):
            m = _TOKEN_RE.match(text, i)
            if not m or m.end() == i:
                if text[i:].strip():
                    raise FieldError(f"bad character in expression: {text[i:i+10]!r}")
                break
            i = m.end()
            if m.group(1):
                tokens.append(("int", int(m.group(1))))
            elif m.group(2):
                tokens.append(("name", m.group(2)))
            else:
                op = m.group(3)
                tokens.append(("op", "^" if op == "**" else op))
        tokens.append(("end", None))
        return tokens

    def _peek(self):
        return self.tokens[self.pos]

    def _next(self):
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def _expect_op(self, op):
        t = self._next()
        if t != ("op", op):
            raise FieldError(f"expected {op!r} in expression {self.text!r}")

    def parse(self) -> RF:
        v = self._expr()
        if self._peek()[0] != "end":
            raise FieldError(f"trailing input in expression {self.text!r}")
        return v

    def _expr(self) -> RF:
        v = self._term()
        while self._peek() == ("op", "+") or self._peek() == ("op", "-"):
            op = self._next()[1]
            w = self._term()
            v = v + w if op == "+" else v - w
        return v

    def _term(self) -> RF:
        v = self._unary()
        while self._peek() == ("op", "*") or self._peek() == ("op", "/"):
            op = self._next()[1]
            w = self._unary()
            v = v * w if op == "*" else v / w
        return v

    def _unary(self) -> RF:
        sign = 1
        while self._peek() in (("op", "+"), ("op", "-")):
            if self._next()[1] == "-":
                sign = -sign
        v = self._power()
        return v if sign == 1 else -v

    def _power(self) -> RF:
        v = self._atom()
        if self._peek() == ("op", "^"):
            self._next()
            k = self._intexp()
            v = v ** k
        return v

    def _intexp(self) -> int:
        sign = 1
        if self._peek() == ("op", "("):
            self._next()
            k = self._intexp()
            self._expect_op(")")
            return k
        while self._peek() in (("op", "+"), ("op", "-")):
            if self._next()[1] == "-":
                sign = -sign
        t = self._next()
        if t[0] != "int":
            raise FieldError("exponent must be an integer")
        return sign * t[1]

    def _atom(self) -> RF:
        t = self._next()
        if t[0] == "int":
            return self.tower.rational(t[1])
        if t[0] == "name":
            name = t[1]
            if name in self.extra:
                return self.extra[name]
            if name == self.tower.ext_name or name in self.tower.vars:
                return self.tower.var(name)
            raise FieldError(f"unknown name {name!r} in expression")
        if t == ("op", "("):
            v = self._expr()
            self._expect_op(")")
            return v
        raise FieldError(f"unexpected token in expression {self.text!r}")


def _format_frac(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_poly(tower: ScalarTower, poly: Poly) -> str:
    if poly.is_zero():
        return "0"
    items = sorted(poly.terms.items(), key=lambda ec: (sum(ec[0]), ec[0]), reverse=True)
    parts = []
    for e, c in items:
        factors = []
        for i, k in enumerate(e):
            if k == 1:
                factors.append(tower.vars[i])
            elif k > 1:
                factors.append(f"{tower.vars[i]}^{k}")
        if not factors:
            body = _format_frac(abs(c))
        else:
            mag = abs(c)
            body = "*".join(factors) if mag == 1 else _format_frac(mag) + "*" + "*".join(factors)
        sign = "-" if c < 0 else "+"
        parts.append((sign, body))
    first_sign, first_body = parts[0]
    out = ("-" if first_sign == "-" else "") + first_body
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def format_elem(f: RF) -> str:
    """Canonical printing in the expression grammar."""
    tower = f.tower
    if f.is_zero():
        return "0"
    if f.q.is_zero():
        num = format_poly(tower, f.p)
    else:
        w = tower.ext_name
        if f.p.is_zero():
            num = f"({format_poly(tower, f.q)})*{w}"
        else:
            num = f"{format_poly(tower, f.p)} + ({format_poly(tower, f.q)})*{w}"
    if f.den.is_const() and f.den.const_value() == 1:
        return num
    return f"({num})/({format_poly(tower, f.den)})"
