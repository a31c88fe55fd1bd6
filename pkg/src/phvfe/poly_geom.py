"""Sparse multivariate polynomials over F_q and the duality checks for
regular prehomogeneous spaces.

Everything here is exact: gradients are formal (exponent drop), never
numerical.  Points are integer arrays of shape (N, n) holding field elements.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .ff_core import FiniteField


class PolyParseError(ValueError):
    pass


@dataclass(frozen=True)
class Polynomial:
    field: FiniteField
    nvars: int
    terms: tuple[tuple[int, tuple[int, ...]], ...]

    @classmethod
    def from_terms(cls, field: FiniteField, nvars: int, terms) -> "Polynomial":
        """Combine like terms and drop zero coefficients."""
        acc: dict[tuple[int, ...], int] = {}
        for c, ex in terms:
            ex = tuple(int(a) for a in ex)
            if len(ex) != nvars:
                raise ValueError("exponent vector has wrong length")
            acc[ex] = int(field.add(acc.get(ex, 0), int(c)))
        clean = sorted(((c, ex) for ex, c in acc.items() if c != 0), key=lambda t: t[1])
        return cls(field, nvars, tuple(clean))

    @classmethod
    def parse(cls, text: str, field: FiniteField, nvars: int) -> "Polynomial":
        """Parse ``c*x1^a1*...*xn^an`` sums; integer coefficients are reduced mod p."""
        s = text.replace(" ", "")
        if not s:
            raise PolyParseError("empty polynomial")
        if s[0] not in "+-":
            s = "+" + s
        pieces = re.findall(r"([+-])([^+-]+)", s)
        if "".join(sign + body for sign, body in pieces) != s:
            raise PolyParseError(f"cannot parse polynomial {text!r}")
        terms = []
        for sign, body in pieces:
            coef = 1
            ex = [0] * nvars
            for fac in body.split("*"):
                if re.fullmatch(r"\d+", fac):
                    coef *= int(fac)
                    continue
                m = re.fullmatch(r"x(\d+)(?:\^(\d+))?", fac)
                if not m:
                    raise PolyParseError(f"bad factor {fac!r} in {text!r}")
                i = int(m.group(1))
                if not 1 <= i <= nvars:
                    raise PolyParseError(f"variable x{i} out of range 1..{nvars}")
                ex[i - 1] += int(m.group(2) or 1)
            if sign == "-":
                coef = -coef
            terms.append((field.element(coef), tuple(ex)))
        return cls.from_terms(field, nvars, terms)

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        out = []
        for c, ex in self.terms:
            if self.field.e > 1 and c >= self.field.p:
                raise ValueError("only prime-field coefficients have a text form")
            facs = [str(c)] if c != 1 or not any(ex) else []
            for i, a in enumerate(ex):
                if a == 1:
                    facs.append(f"x{i + 1}")
                elif a > 1:
                    facs.append(f"x{i + 1}^{a}")
            out.append("*".join(facs))
        return "+".join(out)

    @property
    def degree(self) -> int:
        return max((sum(ex) for _, ex in self.terms), default=0)

    def is_homogeneous(self) -> bool:
        return len({sum(ex) for _, ex in self.terms}) <= 1

    def scale(self, c: int) -> "Polynomial":
        return Polynomial.from_terms(
            self.field, self.nvars, [(int(self.field.mul(c, t)), ex) for t, ex in self.terms]
        )

    def __call__(self, pts) -> np.ndarray:
        """Evaluate at points of shape (N, n) (or a single point of shape (n,))."""
        F = self.field
        pts = np.asarray(pts, dtype=np.int64)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        acc = np.zeros(pts.shape[0], dtype=np.int64)
        for c, ex in self.terms:
            val = np.full(pts.shape[0], c, dtype=np.int64)
            for i, a in enumerate(ex):
                if a:
                    val = F.mul(val, F.pow(pts[:, i], a))
            acc = F.add(acc, val)
        return int(acc[0]) if single else acc

    def derivative(self, i: int) -> "Polynomial":
        F = self.field
        terms = []
        for c, ex in self.terms:
            a = ex[i]
            if a == 0 or a % F.p == 0:
                continue
            new = list(ex)
            new[i] -= 1
            terms.append((int(F.mul(c, F.element(a))), tuple(new)))
        return Polynomial.from_terms(F, self.nvars, terms)

    def gradient(self) -> list["Polynomial"]:
        return [self.derivative(i) for i in range(self.nvars)]


# -- pairings ----------------------------------------------------------------

def mat_inverse_mod(B: np.ndarray, p: int) -> np.ndarray:
    """Inverse of an integer matrix over F_p by Gauss-Jordan elimination."""
    B = np.asarray(B, dtype=np.int64) % p
    n = B.shape[0]
    aug = np.concatenate([B, np.eye(n, dtype=np.int64)], axis=1)
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r, col] % p), None)
        if piv is None:
            raise ValueError("pairing matrix is singular mod p")
        aug[[col, piv]] = aug[[piv, col]]
        aug[col] = aug[col] * pow(int(aug[col, col]), p - 2, p) % p
        for r in range(n):
            if r != col and aug[r, col]:
                aug[r] = (aug[r] - aug[r, col] * aug[col]) % p
    return aug[:, n:]


def apply_matrix(field: FiniteField, M: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Row-wise M @ v over the field for vecs of shape (N, n); M has prime-field entries."""
    N, n = vecs.shape
    out = np.zeros((N, M.shape[0]), dtype=np.int64)
    for i in range(M.shape[0]):
        acc = np.zeros(N, dtype=np.int64)
        for j in range(n):
            if M[i, j] % field.p:
                acc = field.add(acc, field.mul(vecs[:, j], int(M[i, j]) % field.p))
        out[:, i] = acc
    return out


def pairing(field: FiniteField, B: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """<x, y> = x^T B y row-wise."""
    By = apply_matrix(field, B, np.atleast_2d(y))
    x = np.atleast_2d(x)
    acc = np.zeros(x.shape[0], dtype=np.int64)
    for i in range(x.shape[1]):
        acc = field.add(acc, field.mul(x[:, i], By[:, i]))
    return acc


@dataclass(frozen=True)
class GradientMap:
    """x -> B^{-1} grad f(x) / f(x), defined where f != 0."""

    f: Polynomial
    B: np.ndarray
    B_inv: np.ndarray
    partials: tuple[Polynomial, ...]

    def grad(self, pts: np.ndarray) -> np.ndarray:
        """B^{-1} grad f at pts, without dividing by f."""
        pts = np.atleast_2d(pts)
        raw = np.stack([d(pts) for d in self.partials], axis=1)
        return apply_matrix(self.f.field, self.B_inv, raw)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        F = self.f.field
        pts = np.atleast_2d(pts)
        fx = self.f(pts)
        if np.any(fx == 0):
            raise ZeroDivisionError("grad log f evaluated on f = 0")
        inv = F.inv(fx)
        return F.mul(self.grad(pts), inv[:, None])


def grad_log(f: Polynomial, B) -> GradientMap:
    B = np.asarray(B, dtype=np.int64)
    B_inv = mat_inverse_mod(B, f.field.p)
    return GradientMap(f, B, B_inv, tuple(f.gradient()))


# -- sampling ----------------------------------------------------------------

def sample_open(f: Polynomial, rng: np.random.Generator, count: int) -> np.ndarray:
    """count uniform points of {f != 0}, by rejection."""
    F = f.field
    out = np.empty((0, f.nvars), dtype=np.int64)
    while out.shape[0] < count:
        cand = rng.integers(0, F.q, size=(2 * count + 8, f.nvars))
        out = np.concatenate([out, cand[f(cand) != 0]])
    return out[:count]


def all_points(field: FiniteField, n: int) -> np.ndarray:
    """All of F_q^n in mixed-radix order: index = sum x_i q^i."""
    idx = np.arange(field.q**n, dtype=np.int64)
    return np.stack([(idx // field.q**i) % field.q for i in range(n)], axis=1)


# -- duality checks ------------------------------------------------------------

@dataclass
class DualityReport:
    name: str
    checked: int
    failures: int
    witness: list[int] | None = None

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def to_json(self) -> dict:
        return {"check": self.name, "checked": self.checked, "failures": self.failures,
                "witness": self.witness, "ok": self.ok}


def _points_for(f: Polynomial, rng, samples: int | None, exhaustive_up_to: int) -> np.ndarray:
    F = f.field
    if samples is None or F.q**f.nvars <= exhaustive_up_to:
        pts = all_points(F, f.nvars)
        return pts[f(pts) != 0]
    return sample_open(f, rng, samples)


def check_gradient_duality(f: Polynomial, f_dual: Polynomial, B, samples: int | None = None,
              rng: np.random.Generator | None = None, exhaustive_up_to: int = 0) -> DualityReport:
    """Exact check of f_dual(F(x)) = 1/f(x) and F_dual(F(x)) = x on U.

    samples=None means exhaustive over U; otherwise random points (resampling f = 0).
    """
    F = f.field
    rng = rng if rng is not None else np.random.default_rng(0)
    pts = _points_for(f, rng, samples, exhaustive_up_to)
    gm, gm_dual = grad_log(f, B), grad_log(f_dual, B)
    y = gm(pts)
    fy = f_dual(y)
    bad = fy != F.inv(f(pts))
    ok_dual = fy != 0
    back = np.zeros_like(pts)
    if np.any(ok_dual):
        back[ok_dual] = gm_dual(y[ok_dual])
    bad |= ~ok_dual
    bad |= np.any(back != pts, axis=1)
    witness = pts[np.argmax(bad)].tolist() if bad.any() else None
    return DualityReport("gradient_duality", int(pts.shape[0]), int(bad.sum()), witness)


@dataclass(frozen=True)
class ExtendedR:
    """R(x, t) = f(x) / (t_1 ... t_d) on V x A^d with pairing <x,x'> + sum t t'."""

    f: Polynomial
    d: int
    gm: GradientMap

    def value(self, y: np.ndarray) -> np.ndarray:
        F = self.f.field
        n = self.f.nvars
        x, t = y[:, :n], y[:, n:]
        prod_t = np.ones(y.shape[0], dtype=np.int64)
        for i in range(self.d):
            prod_t = F.mul(prod_t, t[:, i])
        return F.div(self.f(x), prod_t)

    def grad(self, y: np.ndarray) -> np.ndarray:
        """Gradient w.r.t. the extended pairing: (B^-1 grad f / prod t, -R / t_i)."""
        F = self.f.field
        n = self.f.nvars
        x, t = y[:, :n], y[:, n:]
        prod_t = np.ones(y.shape[0], dtype=np.int64)
        for i in range(self.d):
            prod_t = F.mul(prod_t, t[:, i])
        inv_pt = F.inv(prod_t)
        gx = F.mul(self.gm.grad(x), inv_pt[:, None])
        r = self.value(y)
        gt = np.stack([F.neg(F.div(r, t[:, i])) for i in range(self.d)], axis=1)
        return np.concatenate([gx, gt], axis=1)


def extended_pairing(field: FiniteField, B, n: int, y: np.ndarray, xi: np.ndarray) -> np.ndarray:
    acc = pairing(field, np.asarray(B), y[:, :n], xi[:, :n])
    for i in range(n, y.shape[1]):
        acc = field.add(acc, field.mul(y[:, i], xi[:, i]))
    return acc


def check_critical_points(f: Polynomial, f_dual: Polynomial, B, d: int, samples: int = 200,
                 rng: np.random.Generator | None = None) -> DualityReport:
    """Exact check of the grad R / grad R_dual inversion and the critical value.

    For y = (x, t) in U x (F_q^*)^d, xi = grad R(y) must satisfy
      (a) xi in U_dual x (F_q^*)^d,
      (b) (-1)^d R_dual(xi)^-2 grad R_dual(xi) = y,
      (c) with y_xi from (b): R(y_xi) + <y_xi, xi> = (-1)^d / R_dual(xi), and <y_xi, xi> = 0,
      (d) -y_xi is a critical point of R + <., xi>, i.e. grad R(-y_xi) = -xi.
    """
    F = f.field
    rng = rng if rng is not None else np.random.default_rng(0)
    n = f.nvars
    B = np.asarray(B, dtype=np.int64)
    R = ExtendedR(f, d, grad_log(f, B))
    Rd = ExtendedR(f_dual, d, grad_log(f_dual, B))
    x = sample_open(f, rng, samples)
    t = rng.integers(1, F.q, size=(samples, d))
    y = np.concatenate([x, t], axis=1)
    xi = R.grad(y)
    sign = F.element((-1) ** d)

    bad = (f_dual(xi[:, :n]) == 0) | np.any(xi[:, n:] == 0, axis=1)
    good = ~bad
    if np.any(good):
        xg, yg = xi[good], y[good]
        rd = Rd.value(xg)
        scale = F.mul(sign, F.inv(F.mul(rd, rd)))
        y_back = F.mul(Rd.grad(xg), scale[:, None])
        fail_b = np.any(y_back != yg, axis=1)
        crit_pair = extended_pairing(F, B, n, y_back, xg)
        crit_val = F.add(R.value(y_back), crit_pair)
        fail_c = (crit_val != F.mul(sign, F.inv(rd))) | (crit_pair != 0)
        fail_d = np.any(R.grad(F.neg(y_back)) != F.neg(xg), axis=1)
        bad[good] = fail_b | fail_c | fail_d
    witness = y[np.argmax(bad)].tolist() if bad.any() else None
    return DualityReport("critical_points", samples, int(bad.sum()), witness)
