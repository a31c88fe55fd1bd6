"""Verifier for the finite-field functional equation of a regular PVS.

Pipeline per character chi of k1^*:

    phi_chi = t_rho(x) chi(f(x))  on U, 0 off U
    F(phi_chi)(y) / (t_dual(y) chi^{-1}(f_dual(y)))   should be constant = C_chi on U_dual
    F(phi_chi)(y)                                     should vanish off U_dual (generic chi)

and the table of C_chi is then fitted to

    C_chi = zeta * chi^{-1}(a) * prod_i g(chi lambda_i)/sqrt(q) * prod_j g(chi^{-1} mu_j)/sqrt(q)

reading the exponent multisets off the weight drops |C_chi| = q^{-c(chi)/2}.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .catalog import PVSInstance
from .characters import MultChar, gauss_product_exponents, lift, norm_exponent_map
from .ff_core import FiniteField, make_field
from .fourier import GridFunction, dft_values
from .poly_geom import all_points

DEFAULT_TOL = 1e-7
FIT_TOL = 1e-6
ROUNDING_SLACK = 0.1


class VerificationError(RuntimeError):
    """A functional-equation check failed; carries the offending data."""

    def __init__(self, msg: str, **details):
        super().__init__(msg)
        self.details = details


class FitError(VerificationError):
    pass


class AmbiguousFit(FitError):
    pass


@dataclass
class CharSumRow:
    k: int
    C: complex
    ratio_residual: float
    support_residual: float


@dataclass
class CharSumTable:
    instance: str
    field: FiniteField
    rho_name: str
    twist: str
    d: int
    rows: list[CharSumRow]
    candidate_residuals: dict[str, float]
    tol: float = DEFAULT_TOL

    @property
    def C(self) -> np.ndarray:
        return np.array([r.C for r in self.rows])

    @property
    def ks(self) -> np.ndarray:
        return np.array([r.k for r in self.rows])

    @property
    def valid_twists(self) -> list[str]:
        return [k for k, v in self.candidate_residuals.items() if v < self.tol]

    @property
    def max_ratio_residual(self) -> float:
        return max(r.ratio_residual for r in self.rows)

    def scaled(self, a: int) -> "CharSumTable":
        """Same table with every C_chi multiplied by chi(a)."""
        F = self.field
        la = int(F.log(a))
        rows = [
            CharSumRow(r.k, r.C * np.exp(2j * np.pi * r.k * la / F.order), r.ratio_residual,
                       r.support_residual)
            for r in self.rows
        ]
        return CharSumTable(self.instance, F, self.rho_name, self.twist, self.d, rows,
                            dict(self.candidate_residuals), self.tol)

    def to_csv(self) -> str:
        lines = ["chi_exponent,C_re,C_im,abs_C,ratio_residual,support_residual"]
        for r in self.rows:
            lines.append(",".join([str(r.k)] + [_fmt(v) for v in (
                r.C.real, r.C.imag, abs(r.C), r.ratio_residual, r.support_residual)]))
        return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    x = float(x)
    if x == 0:
        return "0"
    return f"{x:.12g}"


# -- phi and the table --------------------------------------------------------

def _char_phases(field: FiniteField, ks: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """chi_k(v) for each k (rows) and nonzero v (columns)."""
    logs = field.log_table[vals]
    return np.exp(2j * np.pi * ((np.outer(ks, logs)) % field.order) / field.order)


def build_phi(inst: PVSInstance, rho_name: str, chi: MultChar, k1: FiniteField | None = None) -> GridFunction:
    """phi_chi(x) = Tr(rho_x) chi(f(x)) on U(k1), extended by zero."""
    if k1 is not None and k1 != inst.field:
        inst = inst.with_field(k1)
    F = inst.field
    pts = all_points(F, inst.n)
    fx = inst.f(pts)
    on_u = fx != 0
    vals = np.zeros(pts.shape[0], dtype=complex)
    vals[on_u] = inst.rho_traces[rho_name](pts[on_u]) * chi(fx[on_u])
    return GridFunction(F, inst.n, vals)


@dataclass
class _Grid:
    pts: np.ndarray
    on_u: np.ndarray
    fx: np.ndarray
    on_ud: np.ndarray
    fdx: np.ndarray


def _grid(inst: PVSInstance) -> _Grid:
    pts = all_points(inst.field, inst.n)
    fx = inst.f(pts)
    fdx = inst.f_dual(pts)
    return _Grid(pts, fx != 0, fx, fdx != 0, fdx)


def transformed_phis(inst: PVSInstance, rho_name: str, ks=None, fast: bool = True,
                     threads: int = 1) -> tuple[np.ndarray, _Grid]:
    """F(phi_chi) for each chi exponent in ks, as an array of shape (len(ks), q^n)."""
    F = inst.field
    ks = np.arange(F.order) if ks is None else np.asarray(ks)
    g = _grid(inst)
    t_rho = inst.rho_traces[rho_name](g.pts[g.on_u])
    phases = _char_phases(F, ks, g.fx[g.on_u])

    def run(block: np.ndarray) -> np.ndarray:
        phi = np.zeros((len(block), g.pts.shape[0]), dtype=complex)
        phi[:, g.on_u] = phases[block] * t_rho[None, :]
        return dft_values(phi, F, inst.n, inst.B, fast=fast)

    blocks = np.array_split(np.arange(len(ks)), max(1, min(threads, len(ks))))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    return np.concatenate(parts, axis=0), g


def compute_table(inst: PVSInstance, rho_name: str = "trivial", k1: FiniteField | None = None,
                  fast: bool = True, tol: float = DEFAULT_TOL, threads: int = 1,
                  strict: bool = True) -> CharSumTable:
    """Proportionality table over all chi, with one global choice of dual twist.

    strict=True raises VerificationError when no twist candidate gives a
    constant ratio for every chi.
    """
    if k1 is not None and k1 != inst.field:
        inst = inst.with_field(k1)
    if rho_name not in inst.rho_traces:
        raise KeyError(f"{inst.name} has no representation {rho_name!r}")
    F = inst.field
    ks = np.arange(F.order)
    transformed, g = transformed_phis(inst, rho_name, ks, fast=fast, threads=threads)
    on_dual = transformed[:, g.on_ud]
    inv_chi_fd = np.conj(_char_phases(F, ks, g.fdx[g.on_ud]))

    best = None
    cand_res: dict[str, float] = {}
    for name, cand in inst.dual_twist_candidates(rho_name).items():
        denom = cand(g.pts[g.on_ud])[None, :] * inv_chi_fd
        ratio = on_dual / denom
        mean = ratio.mean(axis=1)
        dev = np.abs(ratio - mean[:, None])
        res = dev.max(axis=1)
        cand_res[name] = float(res.max())
        if best is None or cand_res[name] < cand_res[best[0]]:
            best = (name, mean, res, dev)
    name, mean, res, dev = best
    if strict and cand_res[name] >= tol:
        k_bad = int(np.argmax(res))
        y_bad = g.pts[g.on_ud][int(np.argmax(dev[k_bad]))].tolist()
        raise VerificationError(
            f"{inst.name}/{rho_name} over {F}: no dual twist gives a constant ratio "
            f"(best {name!r}, residual {cand_res[name]:.3g} at chi {k_bad}, y {y_bad})",
            candidate_residuals=cand_res, chi=k_bad, point=y_bad,
        )
    off = transformed[:, ~g.on_ud]
    support = np.abs(off).max(axis=1) if off.shape[1] else np.zeros(len(ks))
    rows = [CharSumRow(int(k), complex(mean[i]), float(res[i]), float(support[i]))
            for i, k in enumerate(ks)]
    return CharSumTable(inst.name, F, rho_name, name, inst.d, rows, cand_res, tol)


# -- fitting ------------------------------------------------------------------------

@dataclass
class FitResult:
    field: FiniteField
    m: int
    lambda_ks: list[int]
    mu_ks: list[int]
    zeta: complex
    shift: int
    k0_prime_e: int
    lambda_k0: list[int]
    mu_k0: list[int]
    fit_residual: float
    weights: list[int]
    exceptional: list[int]
    shift_in_k0_prime: bool
    instance: str = ""
    rho_name: str = ""
    twist: str = ""
    d: int = 0
    n_fitting_splits: int = 1

    @property
    def lambdas(self) -> list[MultChar]:
        return [MultChar(self.field, k) for k in self.lambda_ks]

    @property
    def mus(self) -> list[MultChar]:
        return [MultChar(self.field, k) for k in self.mu_ks]

    @property
    def weight_exceptional(self) -> set[int]:
        n = self.field.order
        return {(-k) % n for k in self.lambda_ks} | {k % n for k in self.mu_ks}

    def predict(self, ks) -> np.ndarray:
        F = self.field
        ks = np.asarray(ks)
        la = int(F.log(self.shift))
        chi_inv_a = np.exp(-2j * np.pi * ((ks * la) % F.order) / F.order)
        return self.zeta * chi_inv_a * gauss_product_exponents(F, ks, self.lambda_ks, self.mu_ks)

    def to_json(self) -> dict:
        q = self.field.q
        q0 = self.field.p**self.k0_prime_e
        return {
            "instance": self.instance,
            "rho": self.rho_name,
            "dual_twist": self.twist,
            "field": {"p": self.field.p, "e": self.field.e, "q": q},
            "d": self.d,
            "m": self.m,
            "lambdas": [{"q": q, "k": k} for k in self.lambda_ks],
            "mus": [{"q": q, "k": k} for k in self.mu_ks],
            "k0_prime": {"q": q0, "lambdas": [{"q": q0, "k": k} for k in self.lambda_k0],
                         "mus": [{"q": q0, "k": k} for k in self.mu_k0]},
            "zeta": {"re": _fmt(self.zeta.real), "im": _fmt(self.zeta.imag),
                     "abs": _fmt(abs(self.zeta)), "arg": _fmt(np.angle(self.zeta))},
            "shift": {"q": q, "element": self.shift, "log": int(self.field.log(self.shift)),
                      "in_k0_prime": self.shift_in_k0_prime},
            "fit_residual": _fmt(self.fit_residual),
            "weights": self.weights,
            "exceptional": [{"q": q, "k": k} for k in self.exceptional],
        }


def weight_drops(C: np.ndarray, q: int, slack: float = ROUNDING_SLACK) -> np.ndarray:
    """c(chi) = round(-2 log_q |C_chi|), rejecting values off the integer lattice."""
    raw = -2 * np.log(np.abs(C)) / np.log(q)
    c = np.rint(raw).astype(int)
    off = np.abs(raw - c)
    if np.any(off >= slack) or np.any(c < 0):
        k = int(np.argmax(np.where(c < 0, np.inf, off)))
        raise FitError(f"|C_chi| at chi {k} is not q^(-c/2) for a non-negative integer c "
                       f"(-2 log_q |C| = {raw[k]:.4f})", chi=k, raw=float(raw[k]))
    return c


def _descend(field: FiniteField, e_sub: int, k: int) -> int | None:
    """Exponent on the standalone F_{p^e_sub} of the character whose norm-pullback is chi_k."""
    q_sub = field.p**e_sub
    step = (field.q - 1) // (q_sub - 1)
    if k % step:
        return None
    if e_sub == field.e:
        return k
    sub = make_field(field.p, e_sub)
    s_full = norm_exponent_map(sub, field)  # = s * step, s invertible mod q_sub - 1
    s = (s_full // step) % (q_sub - 1)
    return (k // step) * pow(s, -1, q_sub - 1) % (q_sub - 1)


def smallest_subfield(field: FiniteField, ks, candidates=None) -> int:
    degrees = [e for e in range(1, field.e + 1) if field.e % e == 0]
    if candidates is not None:
        degrees = [e for e in degrees if e in set(candidates)]
    for e_sub in degrees:
        step = (field.q - 1) // (field.p**e_sub - 1)
        if all(k % step == 0 for k in ks):
            return e_sub
    raise FitError("fitted characters are not norm pullbacks from any candidate subfield")


def _fit_split(F: FiniteField, C: np.ndarray, ks: np.ndarray, generic: np.ndarray,
               lam_ks, mu_ks) -> tuple[float, complex, int, np.ndarray]:
    gp = gauss_product_exponents(F, ks, lam_ks, mu_ks)
    r = C / gp
    n = F.order
    Ls = np.arange(n)
    phase = np.exp(2j * np.pi * ((np.outer(Ls, ks)) % n) / n)  # chi(a) for log a = L
    rows = generic if generic.any() else np.ones_like(generic)
    zetas = (r[None, :] * phase)[:, rows].mean(axis=1)
    preds = zetas[:, None] * np.conj(phase) * gp[None, :]
    resid = np.abs(preds - C[None, :]).max(axis=1)
    L = int(np.argmin(resid))
    return float(resid[L]), complex(zetas[L]), L, preds[L]


def fit_exponents(table: CharSumTable, m_max: int = 2, k0_candidates=None,
                  tol: float = FIT_TOL) -> FitResult:
    """Fit (m, Lambda, M, zeta, a) to the table from its weight drops."""
    F = table.field
    if len(table.rows) != F.order:
        raise FitError("fit needs a complete table (one row per character)")
    C, ks = table.C, table.ks
    c = weight_drops(C, F.q)
    total = int(c.sum())
    if (total - table.d) % 2 or total < table.d:
        raise FitError(f"sum of weight drops {total} incompatible with d = {table.d}",
                       weights=c.tolist())
    m = (total - table.d) // 2
    if m > m_max:
        raise FitError(f"fit needs m = {m} > m_max = {m_max}", weights=c.tolist())
    pool = sorted(int(k) for k, ck in zip(ks, c) for _ in range(int(ck)))
    generic = c == 0

    fits = []
    for mu_pick in sorted(set(itertools.combinations(range(len(pool)), m))):
        mu = sorted(pool[i] for i in mu_pick)
        rest = [pool[i] for i in range(len(pool)) if i not in mu_pick]
        lam = sorted((-k) % F.order for k in rest)
        key = (tuple(lam), tuple(mu))
        if any(f[0] == key for f in fits):
            continue
        resid, zeta, L, pred = _fit_split(F, C, ks, generic, lam, mu)
        fits.append((key, resid, zeta, L, pred))
    accepted = [f for f in fits if f[1] < tol]
    if not accepted:
        best = min(fits, key=lambda f: f[1])
        raise FitError(f"no split fits within {tol:g} (best residual {best[1]:.3g})",
                       best_residual=best[1])
    accepted.sort(key=lambda f: f[0])
    chosen = accepted[0]
    for other in accepted[1:]:
        if np.max(np.abs(other[4] - chosen[4])) >= tol:
            raise AmbiguousFit("inequivalent exponent splits fit the same table",
                               splits=[f[0] for f in accepted])
    (lam, mu), resid, zeta, L, _ = chosen
    e0 = smallest_subfield(F, [*lam, *mu], k0_candidates)
    shift = int(F.exp(L))
    q0 = F.p**e0
    support_bad = {r.k for r in table.rows if r.support_residual >= table.tol}
    return FitResult(
        field=F,
        m=m,
        lambda_ks=list(lam),
        mu_ks=list(mu),
        zeta=zeta,
        shift=shift,
        k0_prime_e=e0,
        lambda_k0=[_descend(F, e0, k) for k in lam],
        mu_k0=[_descend(F, e0, k) for k in mu],
        fit_residual=resid,
        weights=c.tolist(),
        exceptional=sorted({int(k) for k, ck in zip(ks, c) if ck > 0} | support_bad),
        shift_in_k0_prime=bool(F.pow(shift, q0) == shift),
        instance=table.instance,
        rho_name=table.rho_name,
        twist=table.twist,
        d=table.d,
        n_fitting_splits=len(accepted),
    )


# -- support ----------------------------------------------------------------------

@dataclass
class SupportScan:
    support_exceptional: list[int]
    weight_exceptional: list[int]
    max_generic_support: float

    @property
    def ok(self) -> bool:
        return self.support_exceptional == self.weight_exceptional

    def to_json(self) -> dict:
        return {"support_exceptional": self.support_exceptional,
                "weight_exceptional": self.weight_exceptional,
                "max_generic_support_residual": _fmt(self.max_generic_support),
                "ok": self.ok}


def support_scan(table: CharSumTable, fit: FitResult | None = None,
                 tol: float | None = None) -> SupportScan:
    """Characters whose transform does not vanish off U_dual, against the fitted weight drops."""
    tol = table.tol if tol is None else tol
    fit = fit_exponents(table) if fit is None else fit
    sup = sorted(r.k for r in table.rows if r.support_residual >= tol)
    wt = sorted(fit.weight_exceptional)
    generic = [r.support_residual for r in table.rows if r.k not in set(wt)]
    return SupportScan(sup, wt, max(generic, default=0.0))


# -- extensions ---------------------------------------------------------------------

@dataclass
class CrossReport:
    instance: str
    rho_name: str
    small: FitResult
    large: FitResult
    lifted_lambdas: list[int]
    lifted_mus: list[int]
    zeta_residual: float
    degree: int
    same_twist: bool

    @property
    def multisets_match(self) -> bool:
        return (sorted(self.lifted_lambdas) == sorted(self.large.lambda_ks)
                and sorted(self.lifted_mus) == sorted(self.large.mu_ks))

    def ok(self, tol: float = FIT_TOL) -> bool:
        return self.multisets_match and self.zeta_residual < tol and self.same_twist

    def to_json(self, tol: float = FIT_TOL) -> dict:
        return {
            "instance": self.instance, "rho": self.rho_name, "degree": self.degree,
            "small": self.small.to_json(), "large": self.large.to_json(),
            "lifted_lambdas": self.lifted_lambdas, "lifted_mus": self.lifted_mus,
            "zeta_residual": _fmt(self.zeta_residual), "same_twist": self.same_twist,
            "multisets_match": self.multisets_match, "ok": self.ok(tol),
        }


def cross_extension_check(inst: PVSInstance, rho_name: str, k1: FiniteField, k2: FiniteField,
                          fast: bool = True, m_max: int = 2, tol: float = DEFAULT_TOL) -> CrossReport:
    """Fit over k1 and k2 = k1-extension; Lambda, M must pull back by norm, zeta exponentiate."""
    if k1.p != k2.p or k2.e % k1.e:
        raise ValueError(f"{k1} is not a subfield of {k2}")
    fits = []
    for fld in (k1, k2):
        table = compute_table(inst.with_field(fld), rho_name, fast=fast, tol=tol)
        fits.append(fit_exponents(table, m_max=m_max))
    small, large = fits
    lifted_l = sorted(lift(MultChar(k1, k), k2).k for k in small.lambda_ks)
    lifted_m = sorted(lift(MultChar(k1, k), k2).k for k in small.mu_ks)
    r = k2.e // k1.e
    return CrossReport(inst.name, rho_name, small, large, lifted_l, lifted_m,
                       float(abs(large.zeta - small.zeta**r)), r, small.twist == large.twist)
