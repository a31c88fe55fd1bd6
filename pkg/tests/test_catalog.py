import itertools

import numpy as np
import pytest

from phvfe.catalog import (
    BUILTIN_NAMES,
    CatalogError,
    CharacteristicError,
    TraceExpr,
    UnknownInstance,
    ValidationFailure,
    builtin_config,
    builtin_instances,
    build_instance,
    get_instance,
    invariance_report,
    load_instance,
    parse_config,
    parse_config_file,
    parse_pairing,
    sym_coords,
    sym_to_matrix,
    matrix_to_sym,
    trace_rho,
    validate_instance,
)
from phvfe.ff_core import make_field
from phvfe.poly_geom import all_points

F5, F7 = make_field(5), make_field(7)


def test_builtin_names_and_reps():
    assert set(BUILTIN_NAMES) >= {"gl1_line", "gl1_square", "quadratic_2", "matrix_det_2", "sym_det_2"}
    assert get_instance("gl1_square", F5).rho_names == ["trivial", "sign"]
    assert get_instance("matrix_det_2", F5).rho_names == ["trivial"]


def test_unknown_instance():
    with pytest.raises(UnknownInstance):
        get_instance("nope", F5)
    with pytest.raises(UnknownInstance):
        get_instance("sym_det_0", F5)


def test_characteristic_two_rejected():
    F2 = make_field(2)
    for name in ("quadratic_2", "gl1_square", "sym_det_2"):
        with pytest.raises(CharacteristicError):
            get_instance(name, F2)
    names = [inst.name for inst in builtin_instances(F2)]
    assert names == ["gl1_line", "matrix_det_2"]


def test_gl1_square_sign_values_f5():
    inst = get_instance("gl1_square", F5)
    assert trace_rho(inst, "sign", [1]) == 1
    assert trace_rho(inst, "sign", [2]) == -1
    assert trace_rho(inst, "sign", [4]) == 1
    assert trace_rho(inst, "trivial", [3]) == 1


def test_sym_det_2_sign_values():
    inst = get_instance("sym_det_2", F7)
    assert trace_rho(inst, "sign", [1, 0, 1]) == 1
    assert trace_rho(inst, "sign", [1, 0, 3]) == -1
    # [[0,1],[1,0]] and diag(1,6) both have det -1, a non-square mod 7
    assert trace_rho(inst, "sign", [0, 1, 0]) == -1
    assert trace_rho(inst, "sign", [1, 0, 6]) == -1


def test_trace_rho_rejects_singular_point():
    inst = get_instance("sym_det_2", F7)
    with pytest.raises(ValueError):
        trace_rho(inst, "sign", [1, 1, 1])
    with pytest.raises(UnknownInstance):
        trace_rho(inst, "nope", [1, 0, 1])


def test_trace_rho_other_field():
    inst = get_instance("gl1_square", F5)
    F25 = make_field(5, 2)
    # every element of F_5 is a square in F_25
    assert trace_rho(inst, "sign", [2], k1=F25) == 1


def test_sym_coords_round_trip():
    assert sym_coords(2) == [(0, 0), (0, 1), (1, 1)]
    pts = all_points(make_field(3), 3)
    assert np.array_equal(matrix_to_sym(sym_to_matrix(pts, 2), 2), pts)


def test_sym_det_2_orbits_brute_force():
    """GL_2(F_3) acting by g x g^T: two open orbits, sign trace constant on each."""
    F = make_field(3)
    inst = get_instance("sym_det_2", F)
    gl = [np.array(m).reshape(2, 2) for m in itertools.product(range(3), repeat=4)
          if (m[0] * m[3] - m[1] * m[2]) % 3]
    assert len(gl) == 48
    open_pts = [tuple(x) for x in all_points(F, 3) if inst.f(x) != 0]
    remaining = set(open_pts)
    orbits = []
    while remaining:
        x = remaining.pop()
        X = np.array([[x[0], x[1]], [x[1], x[2]]])
        orb = set()
        for g in gl:
            Y = (g @ X @ g.T) % 3
            orb.add((int(Y[0, 0]), int(Y[0, 1]), int(Y[1, 1])))
        remaining -= orb
        orbits.append(orb)
    assert len(orbits) == 2
    for orb in orbits:
        vals = {trace_rho(inst, "sign", list(x)) for x in orb}
        assert len(vals) == 1


VALIDATE_CASES = [(name, p, e) for name in BUILTIN_NAMES
                  for p, e in [(3, 1), (5, 1), (7, 1), (3, 2)]
                  if name != "sym_det_3" or p**e <= 5]


@pytest.mark.parametrize("name,p,e", VALIDATE_CASES)
def test_builtins_validate(name, p, e):
    F = make_field(p, e)
    inst = get_instance(name, F)
    res = validate_instance(inst, seed=1, samples=200, critical_samples=100)
    assert res.ok, res.to_json()


@pytest.mark.parametrize("name,p", [("matrix_det_2", 5), ("sym_det_2", 7), ("quadratic_3", 5)])
def test_relative_invariance(name, p):
    inst = get_instance(name, make_field(p))
    reports = invariance_report(inst, np.random.default_rng(2), trials=60)
    assert all(r.ok for r in reports)


def test_matrix_det_group_character_is_det_product():
    inst = get_instance("matrix_det_2", F5)
    rng = np.random.default_rng(0)
    x = np.array([[1, 2, 3, 4], [2, 0, 0, 3]])
    for _ in range(20):
        act, alpha = inst.group_sampler(rng)
        assert np.array_equal(inst.f(act(x)), F5.mul(alpha, inst.f(x)))


CUSTOM = """name: my_square
p: odd
n: 1
d: 1
f: x1
fdual: x1
pairing: identity
group: dilation:2
rho.trivial: 1
rho.sign: chi2(x1)
dual.sign: chi2(x1)
eps.sign: chi2(x1)
"""


def test_config_round_trip():
    cfg = parse_config(CUSTOM)
    assert cfg.name == "my_square" and cfg.n == 1 and cfg.p_constraint == "odd"
    assert set(cfg.rho) == {"trivial", "sign"} and set(cfg.dual) == {"trivial", "sign"}
    inst = load_instance(CUSTOM, F7)
    assert trace_rho(inst, "sign", [3]) == -1


def test_config_file_split():
    text = CUSTOM + "---\n" + builtin_config("gl1_line").text
    docs = parse_config_file(text)
    assert [d.name for d in docs] == ["my_square", "gl1_line"]


def test_config_missing_keys():
    with pytest.raises(CatalogError, match="missing"):
        parse_config("name: x\nn: 1\n")


def test_config_rho_without_dual():
    with pytest.raises(CatalogError):
        parse_config(CUSTOM.replace("dual.sign: chi2(x1)\n", ""))


def test_config_inhomogeneous_rejected():
    with pytest.raises(CatalogError, match="homogeneous"):
        build_instance(parse_config(CUSTOM.replace("f: x1", "f: x1^2+x1")), F7)


def test_wrong_dual_scale_rejected_with_witness():
    text = builtin_config("quadratic_2").text.replace("fdual_scale: solve\n", "")
    with pytest.raises(ValidationFailure) as info:
        load_instance(text, F7)
    w = info.value.witness
    assert w is not None and len(w) == 2
    inst = build_instance(parse_config(text), F7)
    from phvfe.poly_geom import grad_log
    y = grad_log(inst.f, inst.B)(np.array([w]))
    assert inst.f_dual(y)[0] != F7.inv(inst.f(np.array([w])))[0]


def test_non_invariant_trace_rejected():
    text = builtin_config("gl1_line").text + "rho.sign: chi2(x1)\ndual.sign: chi2(x1)\n"
    with pytest.raises(ValidationFailure, match="trace_invariance"):
        load_instance(text, F7)


def test_solve_dual_only_for_lines():
    cfg = parse_config(CUSTOM.replace("fdual: x1", "fdual: solve"))
    assert build_instance(cfg, F7).f_dual.terms == ((1, (1,)),)
    text = builtin_config("quadratic_2").text.replace("fdual: x1^2+x2^2", "fdual: solve")
    with pytest.raises(CatalogError):
        build_instance(parse_config(text), F7)


def test_parse_pairing():
    assert np.array_equal(parse_pairing("diag:1,2", 2), np.diag([1, 2]))
    assert np.array_equal(parse_pairing("rows:0,1;1,0", 2), [[0, 1], [1, 0]])
    with pytest.raises(CatalogError):
        parse_pairing("rows:0,1;2,0", 2)
    with pytest.raises(CatalogError):
        parse_pairing("diag:1", 2)


def test_trace_expr():
    t = TraceExpr.parse("chi2(x1)*-1")
    assert t.polys == ("x1",) and t.const == -1 and t.needs_odd_p
    vals = t.bind(F5, 1)(np.array([[1], [2]]))
    assert vals.tolist() == [-1, 1]
    with pytest.raises(CatalogError):
        TraceExpr.parse("2")
    with pytest.raises(CatalogError):
        TraceExpr.parse("foo(x1)")


@pytest.mark.parametrize("p", [3, 5, 7])
def test_builtin_zero_locus_and_duals(p):
    F = make_field(p)
    for inst in builtin_instances(F):
        if F.q**inst.n > 5000:
            continue
        pts = all_points(F, inst.n)
        assert np.sum(inst.f(pts) == 0) <= inst.d * F.q ** (inst.n - 1)
        assert inst.f_dual.degree == inst.d


def test_shipped_config_file_validates():
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "configs" / "catalog.cfg"
    docs = parse_config_file(path.read_text())
    assert [d.name for d in docs] == ["binary_form", "line_sign", "det_twisted_pairing"]
    for cfg in docs:
        for p in (5, 7):
            load_instance(cfg, make_field(p))
