import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slic.corpus import corpus, load
from slic.errors import (BaseTypeError, DuplicateDeclaration, LexError, ParseError, StaticError,
                         UseBeforeDeclaration)
from slic.frontend import ast as A
from slic.frontend import parse, parse_syntax, pretty
from slic.frontend.ast import strip_spans


def roundtrip(p: A.Program) -> A.Program:
    return parse_syntax(pretty(p))


class TestParse:
    def test_three_liner(self):
        p = parse("real x = 0; real y ~ normal(x, 1); x = 1;")
        assert len(p.decls) == 2
        assert sum(isinstance(s, A.Assign) for s in p.stmts) == 1
        assert p.decls[1].dist == A.DistCall("normal", (A.Var("x"), A.IntLit(1)))

    def test_empty(self):
        assert parse("") == A.Program(())
        assert pretty(parse("")) == ""

    def test_eight_schools(self):
        p = load("eight_schools").program()
        assert len(p.decls) == 6
        assert sum(isinstance(s, A.For) for s in p.stmts) == 1
        assert p.data_names == ("N", "y", "sigma")
        assert set(p.sampled_names) == {"mu", "tau", "theta"}

    def test_single_decl_prints_one_line(self):
        text = pretty(parse("data real x;"))
        assert text == "data real x;"

    def test_crlf_and_comments(self):
        p = parse("// comment\r\ndata real x;\r\nreal y ~ normal(x, 1); // trailing\r\n")
        assert [d.name for d in p.decls] == ["x", "y"]

    def test_bounds_and_dims(self):
        p = parse("data int N; real<lower=0, upper=1>[N, 2] w;")
        t = p.decl("w").type
        assert (t.lower, t.upper) == (0, 1)
        assert len(t.dims) == 2

    def test_density_call_bar_syntax(self):
        p = parse("real m ~ normal(0, 1); target += normal_lpdf(m | 0, 2);")
        tp = p.stmts[1]
        assert isinstance(tp, A.TargetPlus)
        assert tp.expr.name == "normal_lpdf" and len(tp.expr.args) == 3

    def test_negative_literal_folds(self):
        p = parse("real x = -2;")
        assert p.decls[0].init == A.IntLit(-2)


class TestDiagnostics:
    @pytest.mark.parametrize("src,err", [
        ("real x = 1 $ 2;", LexError),
        ("real x = ;", ParseError),
        ("real x; real x;", DuplicateDeclaration),
        ("real y = x; real x;", UseBeforeDeclaration),
        ("real x ~ normal(0);", ParseError),
        ("real x ~ poisson(1);", ParseError),
        ("bool b = 1.5;", BaseTypeError),
        ("data int n; int k = n / 2;", BaseTypeError),
        ("real x; if (true) { real y; }", ParseError),
        ("int<lower=0.5> k;", ParseError),
        ("real<lower=1, upper=0> k;", ParseError),
        ("real target;", ParseError),
        ("for (i in 1:3) { i = 2; }", StaticError),
    ])
    def test_errors_carry_spans(self, src, err):
        with pytest.raises(err) as info:
            parse(src)
        span = info.value.span
        assert span is not None
        assert 0 <= span.start < max(len(src), 1)
        assert span.line >= 1 and span.col >= 1

    def test_error_points_at_second_line(self):
        with pytest.raises(ParseError) as info:
            parse("real x;\nreal y = ;\n")
        assert info.value.span.line == 2


@pytest.mark.parametrize("name", sorted(corpus()))
def test_corpus_round_trip(name):
    p = parse_syntax(load(name).source)
    assert strip_spans(roundtrip(p)) == strip_spans(p)


# -- random ASTs -----------------------------------------------------------------

names = st.sampled_from(["a", "b", "x", "y_1", "theta"])
reals = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


def exprs():
    leaves = st.one_of(
        st.integers(-50, 50).map(A.IntLit),
        reals.map(A.RealLit),
        st.booleans().map(A.BoolLit),
        names.map(A.Var),
    )

    def extend(inner):
        return st.one_of(
            st.tuples(st.sampled_from(["-", "!"]), inner).map(lambda t: A.Unary(*t)),
            st.tuples(st.sampled_from(list("+-*/") + ["<", "<=", ">", ">=", "==", "!=", "&&", "||"]),
                      inner, inner).map(lambda t: A.Binary(*t)),
            st.tuples(inner, inner, inner).map(lambda t: A.Cond(*t)),
            st.tuples(names.map(A.Var), inner).map(lambda t: A.Index(*t)),
            st.tuples(st.sampled_from(["log", "exp", "sqrt", "square"]), inner).map(
                lambda t: A.Call(t[0], (t[1],))),
            st.tuples(inner, inner).map(lambda t: A.Call("pow", t)),
            st.tuples(inner, inner, inner).map(lambda t: A.Call("normal_lpdf", t)),
            st.lists(inner, min_size=1, max_size=3).map(lambda xs: A.ArrayLit(tuple(xs))),
        )

    return st.recursive(leaves, extend, max_leaves=8)


def dists(e):
    two = st.tuples(st.sampled_from(["normal", "cauchy", "logistic", "gamma", "uniform", "binomial"]), e, e)
    one = st.tuples(st.sampled_from(["bernoulli", "categorical"]), e)
    return st.one_of(two.map(lambda t: A.DistCall(t[0], t[1:])), one.map(lambda t: A.DistCall(t[0], t[1:])))


lvalues = st.one_of(names.map(A.Var), st.tuples(names.map(A.Var), exprs()).map(lambda t: A.Index(*t)))


def stmts():
    e = exprs()
    atoms = st.one_of(
        st.tuples(lvalues, e).map(lambda t: A.Assign(*t)),
        st.tuples(lvalues, dists(e)).map(lambda t: A.Tilde(*t)),
        e.map(A.TargetPlus),
    )

    def extend(inner):
        body = st.lists(inner, max_size=3).map(tuple)
        return st.one_of(
            st.tuples(e, body, body).map(lambda t: A.If(*t)),
            st.tuples(st.just("i"), e, e, body).map(lambda t: A.For(*t)),
        )

    return st.recursive(atoms, extend, max_leaves=6)


type_specs = st.builds(
    A.TypeSpec,
    st.sampled_from(["int", "real", "bool"]),
    st.none(),
    st.none(),
    st.lists(exprs(), max_size=2).map(tuple),
)
decls = st.builds(
    A.Decl,
    type_specs,
    st.sampled_from(["p", "q", "r"]),
    st.sampled_from([None, "data", "model", "genquant"]),
    st.one_of(st.none(), exprs()),
)
programs = st.lists(st.one_of(decls, stmts()), max_size=6).map(lambda xs: A.Program(tuple(xs)))


@settings(max_examples=300, deadline=None)
@given(programs)
def test_random_ast_round_trip(p):
    assert strip_spans(roundtrip(p)) == p


@settings(max_examples=200, deadline=None)
@given(exprs())
def test_expression_round_trip(e):
    p = A.Program((A.TargetPlus(e),))
    assert strip_spans(roundtrip(p)) == p
