import pytest
from hypothesis import given, strategies as st

from semtrans.errors import SourceSyntaxError
from semtrans.sexpr import Atom, SList, Str, quote_string, read_all, read_one


def shape(d):
    """Strip positions so data can be compared structurally."""
    if isinstance(d, Atom):
        return d.text
    if isinstance(d, Str):
        return ("str", d.value)
    return (d.bracket, tuple(shape(i) for i in d.items))


def test_brackets_and_atoms():
    d = read_one("(a [b 12] {C -3})")
    assert shape(d) == ("(", ("a", ("[", ("b", "12")), ("{", ("C", "-3"))))
    assert d.items[2].items[1].is_int
    assert not d.items[0].is_int


def test_positions_are_line_and_column():
    a, b = read_all("x\n  (y)")
    assert a.pos == (1, 1)
    assert b.pos == (2, 3)
    assert b.items[0].pos == (2, 4)


def test_comments_and_lang_line_skipped():
    text = "#lang racket\n; a comment\n#| block\n comment |# foo ; trailing\nbar"
    assert [shape(d) for d in read_all(text)] == ["foo", "bar"]


def test_string_escapes():
    assert read_one(r'"a\"b\\c\nd"').value == 'a"b\\c\nd'


@pytest.mark.parametrize("text", ["(a", "a)", "(a]", '"abc', r'"\q"', "#| open"])
def test_malformed_input(text):
    with pytest.raises(SourceSyntaxError):
        read_all(text)


def test_read_one_requires_single_datum():
    with pytest.raises(SourceSyntaxError):
        read_one("a b")


@given(st.text())
def test_quote_string_round_trips(s):
    assert read_one(quote_string(s)) == Str(s, (1, 1))


atoms = st.from_regex(r"[a-z+*<=?!-][a-z0-9+*<=?!$-]{0,5}", fullmatch=True)
data = st.recursive(
    atoms | st.text(max_size=5).map(lambda s: ("str", s)),
    lambda kids: st.tuples(st.sampled_from("([{"), st.lists(kids, max_size=4).map(tuple)),
    max_leaves=20,
)


def render(d):
    if isinstance(d, str):
        return d
    if d[0] == "str":
        return quote_string(d[1])
    return d[0] + " ".join(render(i) for i in d[1]) + {"(": ")", "[": "]", "{": "}"}[d[0]]


@given(data)
def test_render_read_round_trip(d):
    assert shape(read_one(render(d))) == d


@given(st.lists(data, max_size=4))
def test_read_all_reads_every_datum(ds):
    text = "\n".join(render(d) for d in ds)
    assert [shape(x) for x in read_all(text)] == ds


def test_slist_is_hashable():
    assert hash(read_one("(a b)")) == hash(SList("(", (Atom("a", (1, 2)), Atom("b", (1, 4))), (1, 1)))
