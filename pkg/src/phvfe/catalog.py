"""Concrete regular prehomogeneous spaces.

Each instance is described by a small ``key: value`` config document; the
built-ins are generated as config text and go through the same loader, so a
config file and a built-in are interchangeable.  Example::

    name: sym_det_2
    p: odd
    n: 3
    d: 2
    f: x1*x3-x2^2
    fdual: x1*x3-x2^2
    pairing: diag:1,2,1
    group: sym_congruence:2
    rho.trivial: 1
    rho.sign: chi2(x1*x3-x2^2)
    dual.trivial: 1
    dual.sign: chi2(x1*x3-x2^2)
    eps.trivial: 1
    eps.sign: chi2(x1*x3-x2^2)

``rho.*`` are trace functions Tr(rho_x) on U, ``dual.*`` the same
representations read on the dual orbit, and ``eps.*`` the candidate sign
twists; the verifier tries every ``dual.<rho> * eps.<name>`` product.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .characters import chi2_values
from .ff_core import FiniteField
from .poly_geom import (
    DualityReport,
    Polynomial,
    all_points,
    check_gradient_duality,
    check_critical_points,
    grad_log,
    sample_open,
)

EXHAUSTIVE_DUALITY_POINTS = 4096


class CatalogError(ValueError):
    """Config could not be parsed or instance is incompatible with the field."""


class CharacteristicError(CatalogError):
    pass


class UnknownInstance(CatalogError):
    pass


class ValidationFailure(CatalogError):
    def __init__(self, msg: str, report: DualityReport | None = None):
        super().__init__(msg)
        self.report = report

    @property
    def witness(self):
        return None if self.report is None else self.report.witness


# -- trace-function formulas -----------------------------------------------------

@dataclass(frozen=True)
class TraceExpr:
    """const * prod chi2(poly_i(x)); values are roots of unity on the open orbit."""

    const: complex
    polys: tuple[str, ...]
    text: str

    @classmethod
    def parse(cls, text: str) -> "TraceExpr":
        s = text.replace(" ", "")
        polys = []
        const = 1 + 0j
        i = 0
        factors = []
        depth = 0
        start = 0
        for i, ch in enumerate(s):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "*" and depth == 0:
                factors.append(s[start:i])
                start = i + 1
        factors.append(s[start:])
        for fac in factors:
            m = re.fullmatch(r"chi2\((.+)\)", fac)
            if m:
                polys.append(m.group(1))
                continue
            try:
                const *= complex(fac.replace("i", "j"))
            except ValueError:
                raise CatalogError(f"bad trace factor {fac!r}") from None
        if not np.isclose(abs(const), 1.0):
            raise CatalogError("trace constants must be roots of unity")
        return cls(const, tuple(polys), text.strip())

    def bind(self, field: FiniteField, nvars: int) -> Callable[[np.ndarray], np.ndarray]:
        polys = [Polynomial.parse(p, field, nvars) for p in self.polys]
        const = self.const

        def trace(pts: np.ndarray) -> np.ndarray:
            pts = np.atleast_2d(pts)
            out = np.full(pts.shape[0], const, dtype=complex)
            for poly in polys:
                out *= chi2_values(field, poly(pts))
            return out

        return trace

    @property
    def needs_odd_p(self) -> bool:
        return bool(self.polys)


# -- group samplers ---------------------------------------------------------------

def _field_matmul(F: FiniteField, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Matrix product over F with broadcasting on leading axes."""
    A, B = np.broadcast_arrays(A[..., :, :, None], B[..., None, :, :])
    prod = F.mul(A, B)  # (..., m, k, m)
    out = prod[..., 0, :]
    for k in range(1, prod.shape[-2]):
        out = F.add(out, prod[..., k, :])
    return out


def _det(F: FiniteField, M: np.ndarray) -> int:
    m = M.shape[0]
    acc = 0
    for perm in itertools.permutations(range(m)):
        term = 1
        for i, j in enumerate(perm):
            term = int(F.mul(term, int(M[i, j])))
        if _perm_sign(perm) < 0:
            term = int(F.neg(term))
        acc = int(F.add(acc, term))
    return acc


def _perm_sign(perm) -> int:
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def _random_gl(F: FiniteField, m: int, rng) -> tuple[np.ndarray, int]:
    while True:
        g = rng.integers(0, F.q, size=(m, m))
        det = _det(F, g)
        if det:
            return g, det


def sym_coords(m: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(m) for j in range(i, m)]


def sym_to_matrix(pts: np.ndarray, m: int) -> np.ndarray:
    out = np.zeros((pts.shape[0], m, m), dtype=np.int64)
    for c, (i, j) in enumerate(sym_coords(m)):
        out[:, i, j] = pts[:, c]
        out[:, j, i] = pts[:, c]
    return out


def matrix_to_sym(mats: np.ndarray, m: int) -> np.ndarray:
    return np.stack([mats[:, i, j] for i, j in sym_coords(m)], axis=1)


GroupElement = tuple[Callable[[np.ndarray], np.ndarray], int]


def make_sampler(desc: str, field: FiniteField, n: int, d: int):
    """Sampler rng -> (action on (N, n) points, alpha(g)) for a group description."""
    F = field
    kind, _, arg = desc.partition(":")

    if kind == "dilation":
        power = int(arg or 1)

        def sample(rng) -> GroupElement:
            t = int(rng.integers(1, F.q))
            s = int(F.pow(t, power))
            return (lambda pts: F.mul(pts, s)), int(F.pow(s, d))

        return sample

    if kind == "orthogonal":
        quad = Polynomial.parse("+".join(f"x{i + 1}^2" for i in range(n)), F, n)

        def reflect(pts, v, qv_inv):
            dot = np.zeros(pts.shape[0], dtype=np.int64)
            for i in range(n):
                dot = F.add(dot, F.mul(pts[:, i], int(v[i])))
            coef = F.mul(F.mul(dot, 2 % F.p), qv_inv)
            return F.sub(pts, F.mul(coef[:, None], v[None, :]))

        def sample(rng) -> GroupElement:
            vs = sample_open(quad, rng, 3)
            t = int(rng.integers(1, F.q))

            def act(pts):
                out = np.atleast_2d(pts)
                for v in vs:
                    out = reflect(out, v, int(F.inv(quad(v))))
                return F.mul(out, t)

            return act, int(F.mul(t, t))

        return sample

    if kind == "matrix_lr":
        m = int(arg)

        def sample(rng) -> GroupElement:
            g, dg = _random_gl(F, m, rng)
            h, dh = _random_gl(F, m, rng)

            def act(pts):
                mats = np.atleast_2d(pts).reshape(-1, m, m)
                out = _field_matmul(F, _field_matmul(F, g[None], mats), h.T[None])
                return out.reshape(-1, m * m)

            return act, int(F.mul(dg, dh))

        return sample

    if kind == "sym_congruence":
        m = int(arg)

        def sample(rng) -> GroupElement:
            g, dg = _random_gl(F, m, rng)

            def act(pts):
                mats = sym_to_matrix(np.atleast_2d(pts), m)
                out = _field_matmul(F, _field_matmul(F, g[None], mats), g.T[None])
                return matrix_to_sym(out, m)

            return act, int(F.mul(dg, dg))

        return sample

    raise CatalogError(f"unknown group description {desc!r}")


# -- config ----------------------------------------------------------------------

@dataclass(frozen=True)
class CatalogConfig:
    name: str
    n: int
    d: int
    f: str
    fdual: str
    pairing: str
    group: str
    rho: dict[str, TraceExpr]
    dual: dict[str, TraceExpr]
    eps: dict[str, TraceExpr]
    p_constraint: str = "any"
    fdual_scale: str = "fixed"
    m_hint: int = 0
    exceptional_hint: tuple[int, ...] | None = None
    text: str = ""

    def pairing_matrix(self) -> np.ndarray:
        return parse_pairing(self.pairing, self.n)


def parse_pairing(text: str, n: int) -> np.ndarray:
    text = text.strip()
    if text == "identity":
        return np.eye(n, dtype=np.int64)
    kind, _, body = text.partition(":")
    if kind == "diag":
        vals = [int(v) for v in body.split(",")]
        if len(vals) != n:
            raise CatalogError("diag pairing has wrong length")
        return np.diag(vals).astype(np.int64)
    if kind == "rows":
        rows = [[int(v) for v in r.split(",")] for r in body.split(";")]
        B = np.array(rows, dtype=np.int64)
        if B.shape != (n, n) or np.any(B != B.T):
            raise CatalogError("pairing must be a symmetric n x n matrix")
        return B
    raise CatalogError(f"bad pairing {text!r}")


REQUIRED_KEYS = ("name", "n", "d", "f", "fdual", "pairing", "group")


def parse_config(text: str) -> CatalogConfig:
    kv: dict[str, str] = {}
    rho, dual, eps = {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise CatalogError(f"line {lineno}: expected 'key: value'")
        key, _, val = line.partition(":")
        key, val = key.strip(), val.strip()
        for prefix, bucket in (("rho.", rho), ("dual.", dual), ("eps.", eps)):
            if key.startswith(prefix):
                bucket[key[len(prefix):]] = TraceExpr.parse(val)
                break
        else:
            kv[key] = val
    missing = [k for k in REQUIRED_KEYS if k not in kv]
    if missing:
        raise CatalogError(f"config missing keys: {', '.join(missing)}")
    if not rho:
        rho = {"trivial": TraceExpr.parse("1")}
    if not eps:
        eps = {"trivial": TraceExpr.parse("1")}
    for name in rho:
        dual.setdefault(name, rho[name] if name == "trivial" else None)
        if dual[name] is None:
            raise CatalogError(f"rho {name!r} has no dual.{name} entry")
    hint = kv.get("exceptional_hint")
    return CatalogConfig(
        name=kv["name"],
        n=int(kv["n"]),
        d=int(kv["d"]),
        f=kv["f"],
        fdual=kv["fdual"],
        pairing=kv["pairing"],
        group=kv["group"],
        rho=rho,
        dual=dual,
        eps=eps,
        p_constraint=kv.get("p", "any"),
        fdual_scale=kv.get("fdual_scale", "fixed"),
        m_hint=int(kv.get("m_hint", 0)),
        exceptional_hint=tuple(int(v) for v in hint.split(",")) if hint else None,
        text=text,
    )


def parse_config_file(text: str) -> list[CatalogConfig]:
    """Split a file into ``---``-separated documents."""
    docs = [d for d in re.split(r"^---\s*$", text, flags=re.M) if d.strip()]
    return [parse_config(d) for d in docs]


# -- instances --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PVSInstance:
    name: str
    field: FiniteField
    n: int
    d: int
    f: Polynomial
    f_dual: Polynomial
    B: np.ndarray
    rho_traces: dict[str, Callable]
    dual_traces: dict[str, Callable]
    eps_traces: dict[str, Callable]
    group_sampler: Callable
    m_hint: int = 0
    exceptional_hint: tuple[int, ...] | None = None
    config: CatalogConfig | None = dc_field(default=None, repr=False)

    @property
    def rho_names(self) -> list[str]:
        return list(self.rho_traces)

    def dual_twist_candidates(self, rho_name: str) -> dict[str, Callable]:
        """Named candidates t_dual = rho_dual * eps on U_dual, keyed by eps name."""
        base = self.dual_traces[rho_name]
        out = {}
        for eps_name, eps in self.eps_traces.items():
            out[eps_name] = (lambda b, e: (lambda pts: b(pts) * e(pts)))(base, eps)
        return out

    def with_field(self, field: FiniteField) -> "PVSInstance":
        if self.config is None:
            raise CatalogError("instance has no config to rebuild from")
        return build_instance(self.config, field)


def _solve_scale(f: Polynomial, f_dual: Polynomial, B, rng) -> int:
    """Scalar s with (s f_dual)(F(x)) = 1/f(x) at one witness point."""
    F = f.field
    gm = grad_log(f, B)
    for x in sample_open(f, rng, 64):
        val = f_dual(gm(x[None])[0])
        if val:
            return int(F.inv(F.mul(val, f(x))))
    raise ValidationFailure("could not solve the dual normalisation: f_dual vanishes on F(U)")


def build_instance(cfg: CatalogConfig, field: FiniteField) -> PVSInstance:
    """Bind a config to a field without running the validation suite."""
    odd_needed = cfg.p_constraint == "odd" or any(
        t.needs_odd_p for t in (*cfg.rho.values(), *cfg.dual.values(), *cfg.eps.values())
    )
    if odd_needed and field.p == 2:
        raise CharacteristicError(f"{cfg.name} needs odd characteristic, got p = 2")
    f = Polynomial.parse(cfg.f, field, cfg.n)
    if not f.is_homogeneous() or f.degree != cfg.d:
        raise CatalogError(f"{cfg.name}: f must be homogeneous of degree {cfg.d}")
    B = cfg.pairing_matrix()
    if cfg.fdual == "solve":
        if cfg.n != 1 or cfg.d != 1:
            raise CatalogError("fdual: solve is only available for n = d = 1; give fdual explicitly")
        f_dual = Polynomial.parse("x1", field, 1)
        scale = "solve"
    else:
        f_dual = Polynomial.parse(cfg.fdual, field, cfg.n)
        scale = cfg.fdual_scale
    if scale == "solve":
        f_dual = f_dual.scale(_solve_scale(f, f_dual, B, np.random.default_rng(0)))
    return PVSInstance(
        name=cfg.name,
        field=field,
        n=cfg.n,
        d=cfg.d,
        f=f,
        f_dual=f_dual,
        B=B,
        rho_traces={k: v.bind(field, cfg.n) for k, v in cfg.rho.items()},
        dual_traces={k: v.bind(field, cfg.n) for k, v in cfg.dual.items()},
        eps_traces={k: v.bind(field, cfg.n) for k, v in cfg.eps.items()},
        group_sampler=make_sampler(cfg.group, field, cfg.n, cfg.d),
        m_hint=cfg.m_hint,
        exceptional_hint=cfg.exceptional_hint,
        config=cfg,
    )


# -- validation -------------------------------------------------------------------

@dataclass
class ValidationResult:
    instance: str
    field: str
    reports: list[dict]

    @property
    def ok(self) -> bool:
        return all(r["ok"] for r in self.reports)

    def to_json(self) -> dict:
        return {"instance": self.instance, "field": self.field, "ok": self.ok, "checks": self.reports}


def invariance_report(inst: PVSInstance, rng, trials: int = 100, per_trial: int = 4) -> list[DualityReport]:
    """f(g x) = alpha(g) f(x) and t(g x) = t(x) for sampled (g, x)."""
    F = inst.field
    fails_f, fails_t = 0, 0
    wit_f = wit_t = None
    for _ in range(trials):
        act, alpha = inst.group_sampler(rng)
        x = sample_open(inst.f, rng, per_trial)
        gx = act(x)
        bad_f = inst.f(gx) != F.mul(alpha, inst.f(x))
        if bad_f.any():
            fails_f += int(bad_f.sum())
            wit_f = wit_f or x[np.argmax(bad_f)].tolist()
        for t in inst.rho_traces.values():
            bad_t = np.abs(t(gx) - t(x)) > 1e-12
            if bad_t.any():
                fails_t += int(bad_t.sum())
                wit_t = wit_t or x[np.argmax(bad_t)].tolist()
    return [
        DualityReport("relative_invariance", trials * per_trial, fails_f, wit_f),
        DualityReport("trace_invariance", trials * per_trial, fails_t, wit_t),
    ]


def trace_unit_report(inst: PVSInstance, rng, samples: int = 200) -> DualityReport:
    """Every trace function takes unit-modulus values on U (resp. U_dual)."""
    x = sample_open(inst.f, rng, samples)
    xd = sample_open(inst.f_dual, rng, samples)
    bad = 0
    for t in inst.rho_traces.values():
        bad += int(np.sum(np.abs(np.abs(t(x)) - 1) > 1e-12))
    for t in (*inst.dual_traces.values(), *inst.eps_traces.values()):
        bad += int(np.sum(np.abs(np.abs(t(xd)) - 1) > 1e-12))
    return DualityReport("trace_unit_modulus", samples, bad)


def validate_instance(inst: PVSInstance, seed: int = 0, samples: int = 500,
                      critical_samples: int = 200) -> ValidationResult:
    rng = np.random.default_rng(seed)
    F = inst.field
    exhaustive = F.q**inst.n <= EXHAUSTIVE_DUALITY_POINTS
    reports = [
        check_gradient_duality(inst.f, inst.f_dual, inst.B, samples=None if exhaustive else samples, rng=rng),
        check_critical_points(inst.f, inst.f_dual, inst.B, inst.d, samples=critical_samples, rng=rng),
        *invariance_report(inst, rng),
        trace_unit_report(inst, rng),
    ]
    return ValidationResult(inst.name, repr(F), [r.to_json() for r in reports])


def load_instance(cfg: CatalogConfig | str, field: FiniteField, seed: int = 0) -> PVSInstance:
    """Parse (if needed), bind and validate; raises ValidationFailure with a witness."""
    if isinstance(cfg, str):
        cfg = parse_config(cfg)
    inst = build_instance(cfg, field)
    result = validate_instance(inst, seed=seed)
    for r in result.reports:
        if not r["ok"]:
            raise ValidationFailure(
                f"{cfg.name} over {field}: {r['check']} failed at {r['witness']}",
                DualityReport(r["check"], r["checked"], r["failures"], r["witness"]),
            )
    return inst


def trace_rho(inst: PVSInstance, rho_name: str, x, k1: FiniteField | None = None) -> complex:
    """Tr(rho_x) at a single point x of U(k1)."""
    if k1 is not None and k1 != inst.field:
        inst = inst.with_field(k1)
    if rho_name not in inst.rho_traces:
        raise UnknownInstance(f"{inst.name} has no representation {rho_name!r}")
    x = np.asarray(x, dtype=np.int64)
    if inst.f(x) == 0:
        raise ValueError(f"{x.tolist()} is not in the open orbit")
    return complex(inst.rho_traces[rho_name](x[None])[0])


# -- built-ins --------------------------------------------------------------------

def _det_text(m: int, var) -> str:
    """Leibniz expansion of det as polynomial text; var(i, j) -> variable number."""
    terms = []
    for perm in itertools.permutations(range(m)):
        mono = "*".join(f"x{var(i, j)}" for i, j in enumerate(perm))
        terms.append(("-" if _perm_sign(perm) < 0 else "+") + mono)
    return "".join(terms).lstrip("+")


def _builtin_text(name: str) -> str:
    if name == "gl1_line":
        return """name: gl1_line
n: 1
d: 1
f: x1
fdual: x1
pairing: identity
group: dilation:1
"""
    if name == "gl1_square":
        return """name: gl1_square
p: odd
n: 1
d: 1
f: x1
fdual: x1
pairing: identity
group: dilation:2
rho.trivial: 1
rho.sign: chi2(x1)
dual.trivial: 1
dual.sign: chi2(x1)
eps.trivial: 1
eps.sign: chi2(x1)
"""
    m = re.fullmatch(r"(quadratic|matrix_det|sym_det)_(\d+)", name)
    if not m:
        raise UnknownInstance(f"unknown instance {name!r}")
    kind, size = m.group(1), int(m.group(2))
    if size < 1:
        raise UnknownInstance(f"unknown instance {name!r}")
    if kind == "quadratic":
        q = "+".join(f"x{i + 1}^2" for i in range(size))
        return f"""name: {name}
p: odd
n: {size}
d: 2
f: {q}
fdual: {q}
fdual_scale: solve
pairing: identity
group: orthogonal
eps.trivial: 1
eps.sign: chi2({q})
"""
    if kind == "matrix_det":
        det = _det_text(size, lambda i, j: i * size + j + 1)
        return f"""name: {name}
n: {size * size}
d: {size}
f: {det}
fdual: {det}
pairing: identity
group: matrix_lr:{size}
"""
    coords = sym_coords(size)
    index = {c: k + 1 for k, c in enumerate(coords)}
    det = _det_text(size, lambda i, j: index[(min(i, j), max(i, j))])
    diag = ",".join("1" if i == j else "2" for i, j in coords)
    return f"""name: {name}
p: odd
n: {len(coords)}
d: {size}
f: {det}
fdual: {det}
pairing: diag:{diag}
group: sym_congruence:{size}
rho.trivial: 1
rho.sign: chi2({det})
dual.trivial: 1
dual.sign: chi2({det})
eps.trivial: 1
eps.sign: chi2({det})
"""


BUILTIN_NAMES = ("gl1_line", "gl1_square", "quadratic_2", "quadratic_3",
                 "matrix_det_2", "sym_det_2", "sym_det_3")


def builtin_config(name: str) -> CatalogConfig:
    return parse_config(_builtin_text(name))


def get_instance(name: str, field: FiniteField) -> PVSInstance:
    """A built-in bound to field (validation is separate, see validate_instance)."""
    return build_instance(builtin_config(name), field)


def builtin_instances(field: FiniteField) -> list[PVSInstance]:
    """The default built-in list, skipping instances incompatible with field."""
    out = []
    for name in BUILTIN_NAMES:
        try:
            out.append(get_instance(name, field))
        except CharacteristicError:
            continue
    return out
