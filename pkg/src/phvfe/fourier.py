"""Normalised discrete Fourier transform on V(k1) = k1^n.

    F(phi)(y) = (-1)^n q^{-n/2} sum_x phi(x) psi_b(<x, y>),   <x, y> = x^T B y.

Grid functions are dense over k1^n in mixed-radix order (index = sum x_i q^i).
Because field elements are base-p digit vectors, that index is also the base-p
number whose digit ``i*e + a`` is the a-th coordinate digit of x_i, so the
grid reshapes directly to the additive group F_p^{en}.

Two paths:
  * naive: builds the q^n x q^n kernel with field arithmetic, O(q^{2n});
  * fast: rewrites Tr(b <x, y>) as X^T G Y over F_p (G the trace-form Gram
    matrix), runs one radix-p pass per F_p axis, then permutes by Y -> G Y.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .characters import AddChar
from .ff_core import FiniteField
from .poly_geom import all_points, pairing

MAX_GRID = 1 << 26
NAIVE_MAX_GRID = 1 << 13


class GridTooLarge(ValueError):
    pass


@dataclass
class GridFunction:
    field: FiniteField
    n: int
    values: np.ndarray
    summands: int = 1

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape[-1] != self.field.q**self.n:
            raise ValueError("grid function must have q^n values on its last axis")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function has non-finite values")

    @classmethod
    def from_callable(cls, field: FiniteField, n: int, fn) -> "GridFunction":
        return cls(field, n, fn(all_points(field, n)))

    def norm(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.values) ** 2, axis=-1))

    def pullback_neg(self) -> "GridFunction":
        """x -> phi(-x)."""
        pts = all_points(self.field, self.n)
        neg = self.field.neg(pts)
        idx = neg @ (self.field.q ** np.arange(self.n, dtype=np.int64))
        return GridFunction(self.field, self.n, self.values[..., idx], self.summands)


def _check_size(field: FiniteField, n: int, cap: int) -> None:
    if field.q**n > cap:
        raise GridTooLarge(f"q^n = {field.q}^{n} exceeds grid cap {cap}")


def _B_key(B) -> tuple:
    B = np.asarray(B, dtype=np.int64)
    return tuple(map(tuple, B.tolist()))


@lru_cache(maxsize=16)
def _naive_kernel(field: FiniteField, n: int, B_key: tuple, b: int) -> np.ndarray:
    B = np.array(B_key, dtype=np.int64)
    pts = all_points(field, n)
    N = pts.shape[0]
    rows = np.repeat(np.arange(N), N)
    cols = np.tile(np.arange(N), N)
    vals = pairing(field, B, pts[rows], pts[cols]).reshape(N, N)
    K = AddChar(field, b)(vals)
    K.setflags(write=False)
    return K


@lru_cache(maxsize=16)
def gram_matrix(field: FiniteField, n: int, B_key: tuple, b: int = 1) -> np.ndarray:
    """G[(i,a),(j,c)] = Tr(b B_ij beta_a beta_c) over F_p, beta_a = x^a; digit order i*e+a."""
    B = np.array(B_key, dtype=np.int64)
    e, p = field.e, field.p
    basis = [p**a for a in range(e)]
    tr = field.absolute_trace_table
    G = np.zeros((n * e, n * e), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            bij = int(B[i, j]) % p
            if not bij:
                continue
            for a in range(e):
                for c in range(e):
                    prod = field.mul(field.mul(basis[a], basis[c]), field.mul(bij, b))
                    G[i * e + a, j * e + c] = tr[int(prod)]
    return G


@lru_cache(maxsize=16)
def _fast_permutation(field: FiniteField, n: int, B_key: tuple, b: int) -> np.ndarray:
    G = gram_matrix(field, n, B_key, b)
    p, en = field.p, n * field.e
    idx = np.arange(p**en, dtype=np.int64)
    digits = np.stack([(idx // p**k) % p for k in range(en)], axis=1)
    W = (digits @ G.T) % p
    return W @ (p ** np.arange(en, dtype=np.int64))


def _radix_p(values: np.ndarray, p: int, en: int) -> np.ndarray:
    """sum_X phi(X) w^{X.W} over F_p^{en} by one p-point transform per axis."""
    lead = values.shape[:-1]
    arr = values.reshape(lead + (p,) * en)
    w = np.exp(2j * np.pi * np.outer(np.arange(p), np.arange(p)) / p)
    off = len(lead)
    for ax in range(en):
        arr = np.moveaxis(np.tensordot(arr, w, axes=([off + ax], [0])), -1, off + ax)
    return arr.reshape(values.shape)


def dft_values(values: np.ndarray, field: FiniteField, n: int, B, b: int = 1,
               fast: bool = True, cap: int = MAX_GRID) -> np.ndarray:
    """Transform along the last axis (leading axes are a batch)."""
    _check_size(field, n, cap)
    if b % field.q == 0:
        raise ValueError("additive character must be nontrivial")
    values = np.asarray(values, dtype=complex)
    q = field.q
    norm = (-1) ** n * q ** (-n / 2)
    key = _B_key(B)
    if fast:
        raw = _radix_p(values, field.p, n * field.e)
        out = raw[..., _fast_permutation(field, n, key, b)]
    else:
        _check_size(field, n, NAIVE_MAX_GRID)
        # sum_x phi(x) K[x, y]
        out = values @ _naive_kernel(field, n, key, b)
    return norm * out


def dft(phi: GridFunction, B, psi: AddChar | None = None, fast: bool = True,
        cap: int = MAX_GRID) -> GridFunction:
    b = 1 if psi is None else psi.b
    if psi is not None and psi.field != phi.field:
        raise ValueError("additive character lives on a different field")
    vals = dft_values(phi.values, phi.field, phi.n, B, b=b, fast=fast, cap=cap)
    return GridFunction(phi.field, phi.n, vals, phi.summands * phi.field.q**phi.n)


def parseval_check(phi: GridFunction, B=None, fast: bool = True) -> float:
    """| ||F(phi)|| - ||phi|| | (worst over a batch)."""
    B = np.eye(phi.n, dtype=np.int64) if B is None else B
    out = dft(phi, B, fast=fast)
    return float(np.max(np.abs(out.norm() - phi.norm())))


def involution_check(phi: GridFunction, B=None, fast: bool = True) -> float:
    """max_x |F(F(phi))(x) - phi(-x)|."""
    B = np.eye(phi.n, dtype=np.int64) if B is None else B
    twice = dft(dft(phi, B, fast=fast), B, fast=fast)
    return float(np.max(np.abs(twice.values - phi.pullback_neg().values)))
