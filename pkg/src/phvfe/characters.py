"""Multiplicative and additive characters of F_q, Gauss sums, and a few
character-sum identities.

Values live in C through the fixed embedding psi_1(x) = exp(2 pi i Tr(x) / p)
and chi_k(g^j) = exp(2 pi i k j / (q-1)) against the field's canonical
generator g.  Characters are indexed by their exponent k.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .ff_core import FieldError, FiniteField, embedding, make_field

TWO_PI_I = 2j * np.pi


def sum_tol(n_terms: int) -> float:
    """Comparison tolerance for a sum of n_terms unit-modulus terms."""
    return 1e-12 * n_terms + 1e-10


@dataclass(frozen=True)
class MultChar:
    field: FiniteField
    k: int

    def __post_init__(self):
        object.__setattr__(self, "k", self.k % self.field.order)

    @property
    def is_trivial(self) -> bool:
        return self.k == 0

    @property
    def order(self) -> int:
        n = self.field.order
        return n // np.gcd(self.k, n)

    def __mul__(self, other: "MultChar") -> "MultChar":
        _same_field(self, other)
        return MultChar(self.field, self.k + other.k)

    def inverse(self) -> "MultChar":
        return MultChar(self.field, -self.k)

    def __call__(self, x):
        """chi(x) with chi(0) = 0 (also for the trivial character)."""
        x = np.asarray(x, dtype=np.int64)
        return mult_char_values(self.field, self.k, x)

    def to_json(self) -> dict:
        return {"q": self.field.q, "k": self.k}

    def __repr__(self) -> str:
        return f"chi[{self.k}/{self.field.order}]"


@dataclass(frozen=True)
class AddChar:
    """psi_b(x) = exp(2 pi i Tr(b x) / p)."""

    field: FiniteField
    b: int = 1

    @property
    def is_trivial(self) -> bool:
        return self.b == 0

    def __call__(self, x):
        x = np.asarray(x, dtype=np.int64)
        tr = self.field.absolute_trace_table[self.field.mul(self.b, x)]
        return np.exp(TWO_PI_I * tr / self.field.p)


def _same_field(a: MultChar, b: MultChar) -> None:
    if a.field != b.field:
        raise FieldError("characters live on different fields")


def all_characters(field: FiniteField) -> list[MultChar]:
    return [MultChar(field, k) for k in range(field.order)]


def quadratic_character(field: FiniteField) -> MultChar:
    if field.p == 2:
        raise FieldError("no quadratic character in characteristic 2")
    return MultChar(field, field.order // 2)


def mult_char_values(field: FiniteField, k: int, x: np.ndarray) -> np.ndarray:
    logs = field.log_table[x]
    vals = np.exp(TWO_PI_I * ((k * logs) % field.order) / field.order)
    return np.where(x == 0, 0, vals)


def chi2_values(field: FiniteField, x) -> np.ndarray:
    """Quadratic character as an integer array in {-1, 0, 1}."""
    x = np.asarray(x, dtype=np.int64)
    s = 1 - 2 * (field.log_table[x] % 2)
    return np.where(x == 0, 0, s)


# -- Gauss sums -------------------------------------------------------------

def gauss_sum(chi: MultChar, psi: AddChar | None = None) -> complex:
    """g(chi, psi) = -sum_{a != 0} chi(a) psi(a), by direct summation."""
    field = chi.field
    psi = psi if psi is not None else AddChar(field, 1)
    if psi.is_trivial:
        raise ValueError("gauss_sum needs a nontrivial additive character")
    a = field.nonzero()
    return complex(-np.sum(chi(a) * psi(a)))


def _cache_path(field: FiniteField) -> Path | None:
    root = os.environ.get("PHVFE_CACHE_DIR")
    if not root:
        return None
    mod = "-".join(map(str, field.modulus))
    return Path(root) / f"gauss_p{field.p}_e{field.e}_m{mod}.npy"


@lru_cache(maxsize=64)
def gauss_table(field: FiniteField) -> np.ndarray:
    """All g(chi_k, psi_1), k = 0..q-2, as a read-only complex array.

    Evaluated as one length-(q-1) discrete Fourier transform of psi_1(g^j)
    over the exponent j.  Optionally persisted under $PHVFE_CACHE_DIR.
    """
    path = _cache_path(field)
    if path is not None and path.exists():
        table = np.load(path)
    else:
        n = field.order
        w = AddChar(field, 1)(field.exp_table)
        # sum_j w_j exp(+2 pi i k j / n) = n * ifft(w)[k]
        table = -n * np.fft.ifft(w)
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            np.save(path, table)
    table.setflags(write=False)
    return table


def gauss(field: FiniteField, k: int) -> complex:
    return complex(gauss_table(field)[k % field.order])


# -- norm composition -------------------------------------------------------

def norm_exponent_map(sub: FiniteField, ambient: FiniteField) -> int:
    """Multiplier s with (chi_k o N) = chi_{k s} on ambient, for chi_k on sub."""
    emb = embedding(sub, ambient)
    norm_g = int(ambient.pow(ambient.generator, (ambient.q - 1) // (sub.q - 1)))
    idx = int(np.nonzero(emb == norm_g)[0][0])
    log_sub = int(sub.log_table[idx])
    return log_sub * ((ambient.q - 1) // (sub.q - 1))


def lift(chi: MultChar, ambient: FiniteField) -> MultChar:
    """chi o N for the norm N: ambient* -> chi.field*."""
    if chi.field == ambient:
        return chi
    return MultChar(ambient, chi.k * norm_exponent_map(chi.field, ambient))


def gauss_product(chi: MultChar, lambdas, mus, field: FiniteField | None = None) -> complex:
    """prod_i g(chi (lambda_i o N))/sqrt(q) * prod_j g(chi^-1 (mu_j o N))/sqrt(q).

    ``lambdas`` and ``mus`` may live on any subfield of chi's field.
    """
    k1 = field if field is not None else chi.field
    if chi.field != k1:
        raise FieldError("chi must be a character of k1")
    sq = np.sqrt(k1.q)
    out = 1.0 + 0j
    for lam in lambdas:
        out *= gauss(k1, chi.k + lift(lam, k1).k) / sq
    for mu in mus:
        out *= gauss(k1, -chi.k + lift(mu, k1).k) / sq
    return complex(out)


def gauss_product_exponents(field: FiniteField, ks: np.ndarray, lam_ks, mu_ks) -> np.ndarray:
    """Vectorised gauss_product over many chi exponents; lambdas/mus as k1-exponents."""
    table = gauss_table(field)
    sq = np.sqrt(field.q)
    ks = np.asarray(ks, dtype=np.int64)
    out = np.ones(ks.shape, dtype=complex)
    for lk in lam_ks:
        out *= table[(ks + lk) % field.order] / sq
    for mk in mu_ks:
        out *= table[(-ks + mk) % field.order] / sq
    return out


# -- identities -------------------------------------------------------------

def check_eqsim(lam: MultChar, a: int) -> float:
    """| (1-q) psi(a) lam(a) - sum_nu g(lam nu) nu^{-1}(a) |."""
    field = lam.field
    if a == 0:
        raise ValueError("eqsim needs a != 0")
    q = field.q
    lhs = (1 - q) * AddChar(field, 1)(a) * lam(a)
    rhs = 0j
    for nu in all_characters(field):
        rhs += gauss(field, lam.k + nu.k) * nu.inverse()(a)
    return float(abs(lhs - rhs))


def orthogonality_residual(field: FiniteField) -> float:
    """max over (chi, chi') of |sum_a chi(a) chi'(a)^-1 - (q-1)[chi = chi']|."""
    a = field.nonzero()
    vals = np.stack([MultChar(field, k)(a) for k in range(field.order)])
    gram = vals @ vals.conj().T
    return float(np.max(np.abs(gram - field.order * np.eye(field.order))))


def hasse_davenport_residual(chi: MultChar, ambient: FiniteField) -> float:
    """| g(chi o N, psi o T) - g(chi, psi)^r |, both sides by direct summation.

    With the sign convention g = -sum chi psi the classical relation loses its signs.
    """
    r = ambient.e // chi.field.e
    lifted = lift(chi, ambient)
    return abs(gauss_sum(lifted) - gauss_sum(chi) ** r)


def match_collections(table_a, table_b, **fit_kwargs) -> bool:
    """Do two complete tables fit to the same exponent multisets?"""
    from .func_eq import fit_exponents

    for t in (table_a, table_b):
        if len(t.rows) != t.field.order:
            raise ValueError("incomplete character-sum table")
    fa = fit_exponents(table_a, **fit_kwargs)
    fb = fit_exponents(table_b, **fit_kwargs)
    return (
        fa.field == fb.field
        and sorted(fa.lambda_ks) == sorted(fb.lambda_ks)
        and sorted(fa.mu_ks) == sorted(fb.mu_ks)
    )


def identity_suite(field: FiniteField) -> dict[str, float]:
    """Worst residuals of the standard Gauss-sum identities over one field."""
    q = field.q
    tab = gauss_table(field)
    ks = np.arange(field.order)
    minus_one = field.neg(1)
    direct = np.array([gauss_sum(MultChar(field, int(k))) for k in ks])
    chi_m1 = np.array([MultChar(field, int(k))(minus_one) for k in ks])
    nontriv = ks != 0
    out = {
        "gauss_trivial": abs(tab[0] - 1.0),
        "gauss_modulus": float(np.max(np.abs(np.abs(tab[nontriv]) - np.sqrt(q)), initial=0.0)),
        "gauss_reflection": float(
            np.max(np.abs(tab[nontriv] * tab[(-ks[nontriv]) % field.order] - chi_m1[nontriv] * q), initial=0.0)
        ),
        "gauss_table_vs_direct": float(np.max(np.abs(tab - direct))),
        "orthogonality": orthogonality_residual(field),
    }
    worst = 0.0
    for k in ks:
        lam = MultChar(field, int(k))
        for a in field.nonzero():
            worst = max(worst, check_eqsim(lam, int(a)))
    out["eqsim"] = worst
    if field.e > 1:
        base = make_field(field.p)
        out["hasse_davenport"] = max(hasse_davenport_residual(c, field) for c in all_characters(base))
    return out
