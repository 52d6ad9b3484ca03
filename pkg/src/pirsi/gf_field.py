"""Arithmetic in GF(2^t) and small dense linear algebra over it.

Elements are plain Python ints in ``[0, 2**t)``; polynomials over GF(2) are
stored as coefficient bitmasks (bit ``i`` is the coefficient of ``x**i``).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

# Lowest-valued irreducible polynomial of each degree, except t=1 which uses x+1.
DEFAULT_POLYS = {
    1: 0x3,
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x83,
    8: 0x11B,
    9: 0x203,
    10: 0x409,
    11: 0x805,
    12: 0x1009,
    13: 0x201B,
    14: 0x4021,
    15: 0x8003,
    16: 0x1002B,
}


def poly_mod(a: int, m: int) -> int:
    """Remainder of polynomial ``a`` modulo ``m`` over GF(2)."""
    dm = m.bit_length() - 1
    while a and a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


def is_irreducible(poly: int) -> bool:
    """Trial division by every polynomial of degree 1..deg/2."""
    d = poly.bit_length() - 1
    if d < 1:
        return False
    for q in range(2, 1 << (d // 2 + 1)):
        if poly_mod(poly, q) == 0:
            return False
    return True


def clmul(a: int, b: int) -> int:
    """Carry-less (GF(2)[x]) product."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


@dataclass(frozen=True)
class FieldSpec:
    """GF(2^t) with a fixed reduction polynomial."""

    t: int
    reduction_poly: int

    def __post_init__(self):
        if self.t < 1:
            raise ValueError("field width must be >= 1")
        if self.reduction_poly.bit_length() - 1 != self.t:
            raise ValueError(
                f"reduction polynomial {self.reduction_poly:#x} is not of degree {self.t}"
            )

    @property
    def order(self) -> int:
        return 1 << self.t

    @property
    def nbytes(self) -> int:
        return (self.t + 7) // 8

    def check(self, a: int) -> None:
        if not 0 <= a < self.order:
            raise ValueError(f"{a} is not an element of GF(2^{self.t})")

    def add(self, a: int, b: int) -> int:
        return a ^ b

    def mul(self, a: int, b: int) -> int:
        # Shift-and-add with reduction folded into each doubling step.
        top = self.order
        r = 0
        while b:
            if b & 1:
                r ^= a
            b >>= 1
            a <<= 1
            if a & top:
                a ^= self.reduction_poly
        return r

    def pow(self, a: int, e: int) -> int:
        r = 1
        while e:
            if e & 1:
                r = self.mul(r, a)
            a = self.mul(a, a)
            e >>= 1
        return r

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse in GF(2^t)")
        # a^(2^t - 2) = a^-1 in the multiplicative group of order 2^t - 1.
        return self.pow(a, self.order - 2)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def to_bytes(self, a: int) -> bytes:
        return a.to_bytes(self.nbytes, "big")

    def from_bytes(self, data: bytes) -> int:
        a = int.from_bytes(data, "big")
        self.check(a)
        return a


@lru_cache(maxsize=None)
def default_field(t: int) -> FieldSpec:
    """The field GF(2^t) built on the default polynomial table (t <= 16)."""
    try:
        poly = DEFAULT_POLYS[t]
    except KeyError:
        raise ValueError(f"no default reduction polynomial for t={t}") from None
    return FieldSpec(t, poly)


@dataclass(frozen=True)
class FieldElement:
    """A t-bit field element; width travels with the value."""

    value: int
    width_t: int

    def __post_init__(self):
        if self.width_t < 1 or not 0 <= self.value < (1 << self.width_t):
            raise ValueError(f"value {self.value} does not fit in {self.width_t} bits")

    def to_bytes(self) -> bytes:
        return self.value.to_bytes((self.width_t + 7) // 8, "big")

    @classmethod
    def from_bytes(cls, data: bytes, width_t: int) -> FieldElement:
        return cls(int.from_bytes(data, "big"), width_t)

    def __add__(self, other: FieldElement) -> FieldElement:
        return gf_add(self, other)


def _check_width(a: FieldElement, b: FieldElement) -> None:
    if a.width_t != b.width_t:
        raise ValueError(f"width mismatch: {a.width_t} vs {b.width_t}")


def gf_add(a: FieldElement, b: FieldElement) -> FieldElement:
    _check_width(a, b)
    return FieldElement(a.value ^ b.value, a.width_t)


def gf_mul(a: FieldElement, b: FieldElement, spec: FieldSpec | None = None) -> FieldElement:
    _check_width(a, b)
    spec = spec or default_field(a.width_t)
    if spec.t != a.width_t:
        raise ValueError(f"element width {a.width_t} does not match field width {spec.t}")
    return FieldElement(spec.mul(a.value, b.value), a.width_t)


def gf_inv(a: FieldElement, spec: FieldSpec | None = None) -> FieldElement:
    spec = spec or default_field(a.width_t)
    if spec.t != a.width_t:
        raise ValueError(f"element width {a.width_t} does not match field width {spec.t}")
    return FieldElement(spec.inv(a.value), a.width_t)


# -- matrices: lists of rows, each row a list of ints ------------------------


def row_reduce(field: FieldSpec, rows: list[list[int]]) -> list[list[int]]:
    """Reduced row echelon form; zero rows dropped."""
    mat = [list(r) for r in rows]
    if not mat:
        return []
    ncols = len(mat[0])
    pivot_row = 0
    for col in range(ncols):
        sel = next((r for r in range(pivot_row, len(mat)) if mat[r][col]), None)
        if sel is None:
            continue
        mat[pivot_row], mat[sel] = mat[sel], mat[pivot_row]
        inv = field.inv(mat[pivot_row][col])
        mat[pivot_row] = [field.mul(inv, v) for v in mat[pivot_row]]
        for r in range(len(mat)):
            if r != pivot_row and mat[r][col]:
                f = mat[r][col]
                pr = mat[pivot_row]
                mat[r] = [v ^ field.mul(f, p) for v, p in zip(mat[r], pr)]
        pivot_row += 1
        if pivot_row == len(mat):
            break
    return mat[:pivot_row]


def rank(field: FieldSpec, rows: list[list[int]]) -> int:
    return len(row_reduce(field, rows))


def solve(field: FieldSpec, a: list[list[int]], b: list[int]) -> list[int]:
    """Solve the square system ``a x = b``; raises if ``a`` is singular."""
    n = len(a)
    if any(len(row) != n for row in a) or len(b) != n:
        raise ValueError("solve needs a square system")
    aug = [list(row) + [rhs] for row, rhs in zip(a, b)]
    red = row_reduce(field, aug)
    if len(red) != n or any(red[i][i] != 1 for i in range(n)):
        raise ArithmeticError("singular system")
    return [red[i][n] for i in range(n)]


def invert(field: FieldSpec, a: list[list[int]]) -> list[list[int]]:
    n = len(a)
    aug = [list(row) + [int(i == j) for j in range(n)] for i, row in enumerate(a)]
    red = row_reduce(field, aug)
    if len(red) != n or any(red[i][i] != 1 for i in range(n)):
        raise ArithmeticError("singular matrix")
    return [row[n:] for row in red]


def mat_vec(field: FieldSpec, a: list[list[int]], x: list[int]) -> list[int]:
    out = []
    for row in a:
        acc = 0
        for c, v in zip(row, x):
            if c and v:
                acc ^= field.mul(c, v)
        out.append(acc)
    return out
