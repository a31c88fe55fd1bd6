"""Finite fields F_{p^e} backed by exp/log tables.

Elements are plain integers.  The integer ``v`` encodes the polynomial
``c_0 + c_1 x + ... + c_{e-1} x^{e-1}`` with ``v = sum c_i p^i`` (base-p
digits), so the prime field F_p sits at ``0..p-1`` and addition is digit-wise.
Multiplication goes through the discrete log against a fixed generator.

All arithmetic helpers accept numpy integer arrays as well as scalars.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

MAX_FIELD_SIZE = 1 << 20


class FieldError(ValueError):
    """Invalid field parameters (non-prime p, reducible modulus, ...)."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    i = 3
    while i * i <= n:
        if n % i == 0:
            return False
        i += 2
    return True


def _poly_mod_eval(poly: tuple[int, ...], x: int, p: int) -> int:
    acc = 0
    for c in reversed(poly):
        acc = (acc * x + c) % p
    return acc


def _polymod(a: list[int], b: list[int], p: int) -> list[int]:
    """Remainder of a by b over F_p (coefficient lists, low degree first)."""
    a = [c % p for c in a]
    inv_lead = pow(b[-1], p - 2, p)
    db = len(b) - 1
    while len(a) - 1 >= db and any(a):
        while a and a[-1] == 0:
            a.pop()
        if len(a) - 1 < db:
            break
        coef = a[-1] * inv_lead % p
        shift = len(a) - 1 - db
        for i, c in enumerate(b):
            a[shift + i] = (a[shift + i] - coef * c) % p
        a.pop()
    while a and a[-1] == 0:
        a.pop()
    return a


def is_irreducible(modulus: tuple[int, ...], p: int) -> bool:
    """Irreducibility of a monic polynomial over F_p by exhaustive trial division.

    ``modulus`` is low-degree-first and includes the leading coefficient.
    """
    deg = len(modulus) - 1
    if deg < 1 or modulus[-1] % p == 0:
        return False
    if deg == 1:
        return True
    if any(_poly_mod_eval(modulus, r, p) == 0 for r in range(p)):
        return False
    for k in range(2, deg // 2 + 1):
        for low in itertools.product(range(p), repeat=k):
            if _polymod(list(modulus), list(low) + [1], p) == []:
                return False
    return True


def default_modulus(p: int, e: int) -> tuple[int, ...]:
    """Smallest monic irreducible of degree e in lexicographic coefficient order.

    Order is lexicographic on (c_{e-1}, ..., c_0) with the leading 1 implied.
    """
    if e == 1:
        return (0, 1)
    for high_first in itertools.product(range(p), repeat=e):
        cand = tuple(reversed(high_first)) + (1,)
        if is_irreducible(cand, p):
            return cand
    raise FieldError(f"no irreducible polynomial of degree {e} over F_{p}")  # pragma: no cover


@dataclass(frozen=True, eq=False)
class FiniteField:
    p: int
    e: int
    modulus: tuple[int, ...]
    generator: int
    exp_table: np.ndarray = field(repr=False)
    log_table: np.ndarray = field(repr=False)

    @property
    def q(self) -> int:
        return self.p**self.e

    @property
    def order(self) -> int:
        return self.q - 1

    def __repr__(self) -> str:
        return f"GF({self.p}^{self.e})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FiniteField)
            and (self.p, self.e, self.modulus) == (other.p, other.e, other.modulus)
        )

    def __hash__(self) -> int:
        return hash((self.p, self.e, self.modulus))

    # -- encodings ---------------------------------------------------------
    @cached_property
    def digits(self) -> np.ndarray:
        """(q, e) array of base-p coefficient vectors."""
        v = np.arange(self.q, dtype=np.int64)
        out = np.empty((self.q, self.e), dtype=np.int64)
        for i in range(self.e):
            out[:, i] = v % self.p
            v //= self.p
        return out

    @cached_property
    def _powers(self) -> np.ndarray:
        return self.p ** np.arange(self.e, dtype=np.int64)

    def from_digits(self, d) -> np.ndarray:
        return (np.asarray(d, dtype=np.int64) % self.p) @ self._powers

    def to_vector(self, x: int) -> tuple[int, ...]:
        return tuple(int(c) for c in self.digits[x])

    def from_vector(self, coeffs) -> int:
        return int(self.from_digits(coeffs))

    def element(self, n: int) -> int:
        """Image of the integer n in the prime field."""
        return n % self.p

    @property
    def zero(self) -> int:
        return 0

    @property
    def one(self) -> int:
        return 1

    def elements(self) -> np.ndarray:
        return np.arange(self.q, dtype=np.int64)

    def nonzero(self) -> np.ndarray:
        return np.arange(1, self.q, dtype=np.int64)

    # -- arithmetic --------------------------------------------------------
    def add(self, a, b):
        if self.e == 1:
            return (np.asarray(a) + np.asarray(b)) % self.p
        da, db = self.digits[a], self.digits[b]
        return self.from_digits(da + db)

    def neg(self, a):
        if self.e == 1:
            return (-np.asarray(a)) % self.p
        return self.from_digits(-self.digits[a])

    def sub(self, a, b):
        if self.e == 1:
            return (np.asarray(a) - np.asarray(b)) % self.p
        return self.from_digits(self.digits[a] - self.digits[b])

    def mul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        la = self.log_table[a]
        lb = self.log_table[b]
        out = self.exp_table[(la + lb) % self.order]
        return np.where((a == 0) | (b == 0), 0, out)

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("inverse of zero")
        return self.exp_table[(-self.log_table[a]) % self.order]

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a, k):
        """a**k; 0**0 = 1, negative k requires a != 0."""
        a = np.asarray(a, dtype=np.int64)
        k = np.asarray(k, dtype=np.int64)
        if np.any((a == 0) & (k < 0)):
            raise ZeroDivisionError("negative power of zero")
        out = self.exp_table[(self.log_table[a] * k) % self.order]
        out = np.where(a == 0, np.where(k == 0, 1, 0), out)
        return out

    def log(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("log of zero")
        return self.log_table[a]

    def exp(self, k):
        return self.exp_table[np.asarray(k, dtype=np.int64) % self.order]

    def frobenius(self, a, times: int = 1):
        return self.pow(a, self.p**times)

    def is_square(self, a):
        """True for nonzero squares (p odd)."""
        a = np.asarray(a, dtype=np.int64)
        return (a != 0) & (self.log_table[a] % 2 == 0)

    def sqrt(self, a: int) -> int:
        """One square root of a square a (p odd)."""
        if a == 0:
            return 0
        la = int(self.log_table[a])
        if la % 2:
            raise ValueError(f"{a} is not a square in {self}")
        return int(self.exp_table[la // 2])

    def scalar(self, a) -> int:
        return int(a)

    # -- trace / norm ------------------------------------------------------
    def absolute_trace(self, a):
        """Trace down to F_p, returned as an integer in 0..p-1."""
        a = np.asarray(a, dtype=np.int64)
        acc = np.zeros_like(a)
        cur = a
        for _ in range(self.e):
            acc = self.add(acc, cur)
            cur = self.frobenius(cur)
        return acc  # prime-field element encodes as its own integer value

    @cached_property
    def absolute_trace_table(self) -> np.ndarray:
        return np.asarray(self.absolute_trace(self.elements()), dtype=np.int64)

    def subfield_elements(self, e_sub: int) -> np.ndarray:
        if self.e % e_sub:
            raise FieldError(f"degree {e_sub} does not divide {self.e}")
        x = self.elements()
        return x[self.pow(x, self.p**e_sub) == x]


def make_field(p: int, e: int = 1, modulus=None) -> FiniteField:
    """Build F_{p^e}; deterministic for identical inputs.

    The generator is the smallest element index of multiplicative order q-1.
    """
    if not is_prime(p):
        raise FieldError(f"p = {p} is not prime")
    if e < 1:
        raise FieldError("extension degree must be >= 1")
    q = p**e
    if q > MAX_FIELD_SIZE:
        raise FieldError(f"q = {q} exceeds cap {MAX_FIELD_SIZE}")
    if modulus is None:
        modulus = default_modulus(p, e)
    else:
        modulus = tuple(int(c) % p for c in modulus)
        if len(modulus) != e + 1 or modulus[-1] != 1:
            raise FieldError("modulus must be monic of degree e (low degree first)")
        if not is_irreducible(modulus, p):
            raise FieldError(f"modulus {modulus} is reducible over F_{p}")

    # Multiplication table by x in the coefficient encoding; used to walk powers.
    powers = p ** np.arange(e, dtype=np.int64)
    red = np.array([(-c) % p for c in modulus[:-1]], dtype=np.int64)

    def mul_poly(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        prod = np.zeros(2 * e - 1, dtype=np.int64)
        for i in range(e):
            if a[i]:
                prod[i : i + e] += a[i] * b
        prod %= p
        for k in range(2 * e - 2, e - 1, -1):
            c = prod[k]
            if c:
                prod[k] = 0
                prod[k - e : k] = (prod[k - e : k] + c * red) % p
        return prod[:e]

    def to_digits(v: int) -> np.ndarray:
        return np.array([(v // p**i) % p for i in range(e)], dtype=np.int64)

    n = q - 1
    prime_factors = []
    m, r = n, 2
    while r * r <= m:
        if m % r == 0:
            prime_factors.append(r)
            while m % r == 0:
                m //= r
        r += 1
    if m > 1:
        prime_factors.append(m)

    def walk(g: int):
        gd = to_digits(g)
        exp_t = np.empty(n, dtype=np.int64)
        cur = to_digits(1)
        for k in range(n):
            exp_t[k] = int(cur @ powers)
            cur = mul_poly(cur, gd)
        return exp_t

    def poly_pow(gd: np.ndarray, k: int) -> int:
        acc, base = to_digits(1), gd
        while k:
            if k & 1:
                acc = mul_poly(acc, base)
            base = mul_poly(base, base)
            k >>= 1
        return int(acc @ powers)

    generator = None
    for cand in range(1, q):
        gd = to_digits(cand)
        # primitive iff g^(n/r) != 1 for every prime r | n
        if all(poly_pow(gd, n // r) != 1 for r in prime_factors):
            generator = cand
            break
    if generator is None:  # pragma: no cover
        raise FieldError("no generator found")
    exp_t = walk(generator)
    log_t = np.zeros(q, dtype=np.int64)
    log_t[exp_t] = np.arange(n, dtype=np.int64)
    if len(set(exp_t.tolist())) != n:  # pragma: no cover
        raise FieldError("generator walk is not a bijection")
    exp_t.setflags(write=False)
    log_t.setflags(write=False)
    return FiniteField(p, e, modulus, generator, exp_t, log_t)


# -- subfields -------------------------------------------------------------

def embedding(sub: FiniteField, ambient: FiniteField) -> np.ndarray:
    """Injective ring map sub -> ambient as an index array of length |sub|.

    Sends the class of x in sub to the smallest-index root of sub's modulus
    in ambient; for prime subfields this is the identity on 0..p-1.
    """
    if sub.p != ambient.p or ambient.e % sub.e:
        raise FieldError(f"{sub} is not a subfield of {ambient}")
    if sub.e == 1:
        return np.arange(sub.p, dtype=np.int64)
    xs = ambient.elements()
    val = np.zeros_like(xs)
    for c in reversed(sub.modulus):
        val = ambient.add(ambient.mul(val, xs), c)
    root = int(xs[val == 0][0])
    root_pows = [1]
    for _ in range(sub.e - 1):
        root_pows.append(int(ambient.mul(root_pows[-1], root)))
    out = np.zeros(sub.q, dtype=np.int64)
    for i, rp in enumerate(root_pows):
        out = ambient.add(out, ambient.mul(sub.digits[:, i], rp))
    return out


def _restrict(sub: FiniteField, ambient: FiniteField, y) -> np.ndarray:
    emb = embedding(sub, ambient)
    back = np.full(ambient.q, -1, dtype=np.int64)
    back[emb] = np.arange(sub.q, dtype=np.int64)
    out = back[np.asarray(y, dtype=np.int64)]
    if np.any(out < 0):  # pragma: no cover
        raise FieldError("value does not lie in the subfield")
    return out


def trace_to(sub: FiniteField, ambient: FiniteField, x):
    """Relative trace ambient -> sub: sum of x^{|sub|^i} over [ambient:sub] conjugates."""
    if sub.p != ambient.p or ambient.e % sub.e:
        raise FieldError(f"{sub} is not a subfield of {ambient}")
    r = ambient.e // sub.e
    x = np.asarray(x, dtype=np.int64)
    acc = np.zeros_like(x)
    cur = x
    for _ in range(r):
        acc = ambient.add(acc, cur)
        cur = ambient.pow(cur, sub.q)
    return _restrict(sub, ambient, acc)


def norm_to(sub: FiniteField, ambient: FiniteField, x):
    """Relative norm ambient* -> sub*: x^{(Q-1)/(q-1)}."""
    if sub.p != ambient.p or ambient.e % sub.e:
        raise FieldError(f"{sub} is not a subfield of {ambient}")
    x = np.asarray(x, dtype=np.int64)
    return _restrict(sub, ambient, ambient.pow(x, (ambient.q - 1) // (sub.q - 1)))
