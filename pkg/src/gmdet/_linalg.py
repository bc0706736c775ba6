"""Small exact-matrix helpers over a ScalarTower (lists of lists of RF)."""

from __future__ import annotations

from .field import RF, FieldError, ScalarTower


def mat_shape(m):
    return len(m), len(m[0]) if m else 0


def mat_zero(tower: ScalarTower, r: int, c: int | None = None):
    c = r if c is None else c
    return [[tower.zero() for _ in range(c)] for _ in range(r)]


def mat_eye(tower: ScalarTower, r: int):
    m = mat_zero(tower, r)
    for i in range(r):
        m[i][i] = tower.one()
    return m


def mat_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_sub(a, b):
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_neg(a):
    return [[-x for x in row] for row in a]


def mat_scale(a, c: RF):
    return [[x * c for x in row] for row in a]


def mat_mul(a, b):
    n, k = len(a), len(b)
    m = len(b[0])
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = a[i][0] * b[0][j]
            for l in range(1, k):
                acc = acc + a[i][l] * b[l][j]
            row.append(acc)
        out.append(row)
    return out


def mat_trace(a):
    acc = a[0][0]
    for i in range(1, len(a)):
        acc = acc + a[i][i]
    return acc


def mat_map(a, f):
    return [[f(x) for x in row] for row in a]


def mat_is_zero(a):
    return all(x.is_zero() for row in a for x in row)


def mat_eq(a, b):
    return all(x == y for ra, rb in zip(a, b) for x, y in zip(ra, rb))


def mat_det(a) -> RF:
    """Determinant by fraction-full Gaussian elimination (exact field ops)."""
    n = len(a)
    m = [row[:] for row in a]
    tower = m[0][0].tower
    det = tower.one()
    for col in range(n):
        piv = None
        for r in range(col, n):
            if not m[r][col].is_zero():
                piv = r
                break
        if piv is None:
            return tower.zero()
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det = det * m[col][col]
        inv = m[col][col].inv()
        for r in range(col + 1, n):
            if m[r][col].is_zero():
                continue
            f = m[r][col] * inv
            for c in range(col, n):
                m[r][c] = m[r][c] - f * m[col][c]
    return det


def mat_inv(a):
    """Inverse over the tower field; FieldError on singular input."""
    n = len(a)
    tower = a[0][0].tower
    m = [row[:] + eye_row for row, eye_row in zip(a, mat_eye(tower, n))]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if not m[r][col].is_zero():
                piv = r
                break
        if piv is None:
            raise FieldError("singular matrix")
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
        inv = m[col][col].inv()
        m[col] = [x * inv for x in m[col]]
        for r in range(n):
            if r == col or m[r][col].is_zero():
                continue
            f = m[r][col]
            m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m]


def mat_solve(a, rhs):
    """Solve a @ x = rhs for a column vector rhs (list of RF)."""
    inv = mat_inv(a)
    return [sum_col(inv[i], rhs) for i in range(len(inv))]


def sum_col(row, vec):
    acc = row[0] * vec[0]
    for x, y in zip(row[1:], vec[1:]):
        acc = acc + x * y
    return acc


def mat_kernel(a):
    """Basis of the right kernel of a (possibly non-square) matrix."""
    if not a:
        return []
    rows = [row[:] for row in a]
    tower = rows[0][0].tower
    ncols = len(rows[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = None
        for rr in range(r, len(rows)):
            if not rows[rr][c].is_zero():
                piv = rr
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = rows[r][c].inv()
        rows[r] = [x * inv for x in rows[r]]
        for rr in range(len(rows)):
            if rr != r and not rows[rr][c].is_zero():
                f = rows[rr][c]
                rows[rr] = [x - f * y for x, y in zip(rows[rr], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [tower.zero() for _ in range(ncols)]
        v[fc] = tower.one()
        for ri, pc in enumerate(pivots):
            v[pc] = -rows[ri][fc]
        basis.append(v)
    return basis
