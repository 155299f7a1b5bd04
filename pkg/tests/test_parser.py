import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtgq.errors import ParseError
from dtgq.parser import build_model, format_discourse, format_model, load_model, parse_discourse, parse_model
from dtgq.syntax import ContextStep, DepType, ExpectStep, Leaf, Par, RefreshStep, Seq, SentenceStep, SigmaRefresh


def test_base_type():
    desc = parse_model("type M = {m1,m2}")
    (t,) = desc.types
    assert t.name == "M" and [a for a, _ in t.elements] == ["m1", "m2"]


def test_dependent_type_projection():
    m = load_model("type M = {m1, m2}\ntype D(m:M) = {d1->m1, d2->m2}\n")
    assert set(m.fiber(DepType("D", ("m",)), {"m": "m1"})) == {"d1"}
    den = m.types["D"]
    assert den.params == ("m",) and den.projections["m"] == {"d1": "m1", "d2": "m2"}


def test_duplicate_atom():
    with pytest.raises(ParseError) as e:
        parse_model("type M = {m1, m1}")
    assert e.value.code == "DuplicateDeclaration"


def test_duplicate_type():
    with pytest.raises(ParseError) as e:
        parse_model("type M = {a}\ntype M = {b}\n")
    assert e.value.code == "DuplicateDeclaration"
    assert e.value.span.start_line == 2


def test_parent_count_mismatch():
    with pytest.raises(ParseError) as e:
        parse_model("type M = {m1}\ntype D(m:M) = {d1}\n")
    assert e.value.code == "SyntaxError"


def test_unknown_declaration():
    with pytest.raises(ParseError) as e:
        parse_model("typ M = {m1}")
    assert e.value.code == "UnknownDirective"


def test_pragmas():
    desc = parse_model("pragma numerals=atleast\ntype S = {a, b, c, d}\n")
    assert desc.pragmas == {"numerals": "atleast"}
    m = build_model(desc)
    assert m.quantifier("three").accepts({"a", "b", "c", "d"}, {"a", "b", "c", "d"})
    # an explicit setting beats the pragma
    assert not build_model(desc, "exactly").quantifier("three").accepts({"a", "b", "c", "d"}, {"a", "b", "c", "d"})
    with pytest.raises(ParseError):
        parse_model("pragma numerals=some")
    with pytest.raises(ParseError) as e:
        parse_model("pragma colour=red")
    assert e.value.code == "UnknownDirective"


def test_comments_and_blank_lines():
    desc = parse_model("# people\n\ntype M = {m1}  # one\n\n")
    assert len(desc.types) == 1


def test_sentence_step():
    (step,) = parse_discourse("sentence phi1: forall m:M | exists w:W . L(m,w)")
    assert isinstance(step, SentenceStep)
    assert isinstance(step.chain, Seq)
    assert step.predicate == "L" and step.args == ("m", "w")


def test_sigma_refresh_step():
    (step,) = parse_discourse("refresh sigma t2 = Sigma p:T_phi_2(t_phi_1) . T_phi_3(t_phi_1, p)")
    assert isinstance(step, RefreshStep)
    d = step.directive
    assert isinstance(d, SigmaRefresh) and d.var == "t2"
    assert d.type.index_vars == ("t_phi_1",)


def test_missing_term():
    with pytest.raises(ParseError) as e:
        parse_discourse("sentence bad: forall m:M | . L(m)")
    assert e.value.code == "SyntaxError"
    assert e.value.span.start_line == 1


def test_chain_forms():
    steps = parse_discourse(
        "context s:S, a:A\n"
        "sentence c: pack(three s:S, five a:A) . W(s, a)\n"
        "sentence b: par(three s:S ; five a:A) . W(s, a)\n"
        "sentence n: (forall s:S | exists a:A) | exists a2:A . V(s, a, a2)\n"
    )
    assert isinstance(steps[0], ContextStep)
    assert isinstance(steps[1].chain, Leaf) and len(steps[1].chain.pack.phrases) == 2
    assert isinstance(steps[2].chain, Par)
    assert isinstance(steps[3].chain, Seq) and isinstance(steps[3].chain.left, Seq)


def test_chain_clash():
    with pytest.raises(ParseError) as e:
        parse_discourse("sentence x: forall a:A | exists a:A . R(a)")
    assert e.value.code == "VariableClash"


def test_seq_binds_left():
    (step,) = parse_discourse("sentence x: forall a:A | forall b:B | forall c:C . R(a, b, c)")
    assert isinstance(step.chain.left, Seq)


def test_expect_step():
    (step,) = parse_discourse("expect phi false")
    assert isinstance(step, ExpectStep) and step.value is False


def test_unknown_keyword():
    with pytest.raises(ParseError) as e:
        parse_discourse("assert phi true")
    assert e.value.code == "UnknownDirective"


def test_formation_error_becomes_parse_error():
    with pytest.raises(ParseError) as e:
        parse_discourse("sentence x: pack(forall a:A, exists a:A) . R(a)")
    assert e.value.code == "DuplicateBindingVariable"
    assert e.value.span is not None


def test_discourse_round_trip(stories):
    for path in sorted(stories.glob("*.dtgq")):
        steps = parse_discourse(path.read_text())
        again = parse_discourse(format_discourse(steps))
        assert again == steps, path.name


def test_model_round_trip(stories):
    for path in sorted(stories.glob("*.model")):
        desc = parse_model(path.read_text())
        assert parse_model(format_model(desc)) == desc, path.name


# error spans ------------------------------------------------------------------


BROKEN = [
    "type M = {m1,",
    "type M = m1}",
    "type D(m:M) = {d1 -> }",
    "pred L(m:M) = {(m1, m2}",
    "type M = {m1}\ntype M = {m2}",
    "pragma numerals",
    "sentence : forall m:M . L(m)",
    "sentence a: forall m:M",
    "sentence a: par(forall m:M ; ) . L(m)",
    "context m:",
    "refresh sigma = Sigma p:P . Q(p)",
    "expect phi maybe",
    "\n\n   )",
]


def _bounds_ok(text, span):
    lines = text.split("\n")
    if not (1 <= span.start_line <= len(lines) and 1 <= span.end_line <= len(lines)):
        return False
    return 1 <= span.start_col <= len(lines[span.start_line - 1]) + 1


@pytest.mark.parametrize("text", BROKEN)
def test_error_span_inside_document(text):
    with pytest.raises(ParseError) as e:
        if text.lstrip().startswith(("type", "pred", "pragma")):
            parse_model(text)
        else:
            parse_discourse(text)
    assert e.value.span is not None and _bounds_ok(text, e.value.span)


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="typeMD=:{}(),->|.;# \nabc12", max_size=40))
def test_fuzzed_errors_have_spans(text):
    for parse in (parse_model, parse_discourse):
        try:
            parse(text)
        except ParseError as e:
            assert e.span is not None and _bounds_ok(text, e.span)
