import pytest
from hypothesis import given, settings, strategies as st

from conftest import CORPUS, checks, pipeline
from randprog import random_program
from semtrans.anf import normalize_program
from semtrans.cfa import analyze
from semtrans.defun import _Defun, constructor_name, defun_program, field_order, ordered_free
from semtrans.errors import (
    ArityConflict, DuplicateConstructor, MixedDefun, OutOfFuel, TransformError,
)
from semtrans.pipeline import generated_structs, outcome, transform
from semtrans.syntax import (
    App, Fun, FunId, Let, Match, PRecord, PVar, Record, Var, free_vars, parse_program, parse_term,
    program_terms,
)

programs = st.integers(0, 10**6).map(random_program)
annotated = st.integers(0, 10**6).map(lambda s: random_program(s, annotate=True))


def defun_only(text):
    """Defunctionalize an ANF program without converting it to CPS first."""
    p = normalize_program(parse_program(text))
    return defun_program(p, analyze(p))


COMPOSE = """
(def compose (f g) (fun (x) (f (g x))))
(def inc (x) (+ x 1))
(def main ([Integer n]) ((compose inc (fun (y) (* y 2))) n))
"""


def test_functions_become_records_and_calls_go_through_apply():
    q = defun_only(COMPOSE)
    assert not any(isinstance(t, Fun) for t in program_terms(q))
    structs = {sd.name: sd.fields for sd in q.structs}
    assert structs == {"Fun-compose-1": ("f", "g"), "Fun-main-1": (), "Top-inc": ()}
    assert q.function("compose").body == parse_term("{Fun-compose-1 f g}")
    assert outcome(q, [5]) == ("value", ("int", 11))


def test_apply_dispatches_on_every_callee():
    text = """(def pick (b) (if b (fun (x) (+ x 1)) +))
              (def main ([Integer n]) (let f (pick (< n 0)) (f n n)))"""
    with pytest.raises(ArityConflict):
        defun_only(text)
    text = """(def pick (b k) (if b (fun (x y) (+ x k)) +))
              (def main ([Integer n]) (let f (pick (< n 0) 7) (f n n)))"""
    q = defun_only(text)
    apply = q.functions[-1]
    assert apply.name.startswith("apply-")
    assert isinstance(apply.body, Match)
    labels = [p.struct for p, _ in apply.body.branches]
    assert labels == ["Fun-pick-1", "Prim-+"]
    assert outcome(q, [-2]) == ("value", ("int", 5))
    assert outcome(q, [3]) == ("value", ("int", 6))


def test_single_callee_apply_uses_a_let_pattern():
    q = defun_only("(def main ([Integer n]) (let f (fun #:name Inc (x) (+ x n)) (f 1)))")
    apply = q.function("apply-Inc")
    assert isinstance(apply.body, Let)
    assert apply.body.pattern == PRecord("Inc", (PVar("n"),))


def test_no_defun_functions_stay_higher_order():
    q = defun_only("(def main ([Integer n]) (let f (fun #:no-defun (x) (+ x n)) (f 1)))")
    assert any(isinstance(t, Fun) for t in program_terms(q))
    assert q.structs == ()


def test_mixed_defun_is_an_error():
    text = """(def main ([Integer n])
                (let f (if (< n 0) (fun #:no-defun (x) x) (fun (y) y)) (f n)))"""
    p = normalize_program(parse_program(text))
    site = next(t.fn.label for t in program_terms(p) if isinstance(t, App) and t.fn.name == "f")
    with pytest.raises(MixedDefun) as info:
        defun_program(p, analyze(p))
    assert info.value.label == site and f"label {site}" in str(info.value)


def test_duplicate_constructor_names():
    with pytest.raises(DuplicateConstructor):
        defun_only("(def-struct {K}) (def main ([Integer n]) (let f (fun #:name K (x) x) (f n)))")
    with pytest.raises(DuplicateConstructor):
        defun_only("(def main ([Integer n]) (let f (fun #:name K (x) x) "
                   "(let g (fun #:name K (x) x) (g (f n)))))")


def test_constructor_names():
    p = normalize_program(parse_program(COMPOSE))
    fun = next(t for t in program_terms(p) if isinstance(t, Fun))
    assert constructor_name(p, FunId("fun", fun.label)) == "Fun-compose-1"
    assert constructor_name(p, FunId("top", "inc")) == "Top-inc"
    assert constructor_name(p, FunId("prim", "+")) == "Prim-+"


def test_field_order_ignores_generated_prefix():
    assert sorted(["x", "$k1", "env", "$2"], key=field_order) == ["$2", "env", "$k1", "x"]
    assert ordered_free(parse_term("(fun (a) (g b a c b))")) == ["g", "b", "c"]


def test_overlapping_callee_sets_share_one_apply():
    # k1 sees {A}, k2 sees {A, B}: both sites dispatch through the same function
    text = """(def main ([Integer n])
                (let a (fun (x) x)
                  (let b (fun (x) (+ x 1))
                    (let k1 a
                      (let k2 (if (< n 0) a b)
                        (let r (k1 n) (k2 r)))))))"""
    q = defun_only(text)
    applies = [fd for fd in q.functions if fd.name.startswith("apply-")]
    assert len(applies) == 1
    assert outcome(q, [1]) == ("value", ("int", 2))


# -- properties


def check_closed_records(source, result):
    structs = {sd.name: sd.fields for sd in result.structs}
    d = _Defun(source, analyze(source))
    for t in program_terms(source):
        if isinstance(t, Fun) and d.defun(FunId("fun", t.label)):
            name = d.constructor(FunId("fun", t.label))
            if name not in structs:
                continue  # nested in a function that is never applied
            assert set(structs[name]) == set(free_vars(t, source.function_names))


def apply_branches(result, source):
    """Constructor labels handled by each generated apply function."""
    out = {}
    for fd in result.functions:
        if fd.name in source.function_names:
            continue
        body = fd.body
        patterns = [body.pattern] if isinstance(body, Let) else [p for p, _ in body.branches]
        labels = [p.struct for p in patterns]
        assert len(labels) == len(set(labels))
        out[fd.name] = set(labels)
    return out


def check_apply_totality(source, analysis, result):
    tables = apply_branches(result, source)
    d = _Defun(source, analysis)
    for t in program_terms(source):
        if not (isinstance(t, App) and isinstance(t.fn, Var)):
            continue
        bound = d.scope[t.label]
        if d.top_level(t.fn.name, bound) or d.prim_op(t.fn.name, bound):
            continue
        callees = analysis.callees.get(t.fn.label, frozenset())
        if callees and all(d.defun(f) for f in callees):
            ctors = {d.constructor(f) for f in callees}
            assert any(ctors <= labels for labels in tables.values())


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_properties(name):
    res = pipeline(name)
    source, out = res.programs["cps"], res.programs["defun"]
    check_apply_totality(source, res.analyses["cps"], out)
    for c in checks(name):
        assert outcome(out, c.args, generated_structs(res.programs["parse"], out)) == \
            outcome(source, c.args, generated_structs(res.programs["parse"], source))


def test_cbv_closures_record_their_free_variables():
    out = pipeline("cbv").programs["defun"]
    structs = {sd.name: sd.fields for sd in out.structs}
    assert structs["Closure"] == ("body", "env", "x")


def test_no_fun_survives_when_everything_is_eligible():
    for name in ("factorial",):
        out = pipeline(name).programs["defun"]
        assert not any(isinstance(t, Fun) for t in program_terms(out))


def random_pipeline(p):
    try:
        return transform(p, "defun")
    except TransformError:
        return None


@settings(max_examples=150, deadline=None)
@given(programs)
def test_random_first_order_result(p):
    res = random_pipeline(p)
    if res is None:
        return
    out = res.programs["defun"]
    assert not any(isinstance(t, Fun) for t in program_terms(out))
    check_closed_records(res.programs["cps"], out)


@settings(max_examples=150, deadline=None)
@given(annotated, st.integers(-2, 2))
def test_random_defun_preserves_semantics(p, n):
    res = random_pipeline(p)
    if res is None:
        return
    source = res.programs["cps"]
    expected = outcome(source, [n], fuel=50000)
    if expected[:2] == ("error", OutOfFuel.kind):
        return
    out = res.programs["defun"]
    assert outcome(out, [n], generated_structs(p, out), fuel=1000000) == expected
    check_apply_totality(source, res.analyses["cps"], out)


@settings(max_examples=100, deadline=None)
@given(annotated)
def test_random_surviving_funs_are_no_defun(p):
    res = random_pipeline(p)
    if res is None:
        return
    for t in program_terms(res.programs["defun"]):
        if isinstance(t, Fun):
            assert t.annotations.no_defun
    for t in program_terms(res.programs["defun"]):
        if isinstance(t, Record) and t.struct.startswith("Fun-"):
            assert t.struct in {sd.name for sd in res.programs["defun"].structs}
