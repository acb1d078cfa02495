from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import assert_preserved, check_noninterference
from progen import random_inputs, random_source
from slic import condind
from slic.corpus import corpus, load
from slic.errors import DiscreteParameterError, StaticError
from slic.frontend import ast as A
from slic.frontend import parse, pretty
from slic.levels import Level, infer
from slic.shredder import emit, shred

GOLDEN = Path(__file__).parent / "golden"
COMPILABLE = [n for n in sorted(corpus()) if n != "shred_violation"]


def typed_fixture(name):
    return infer(load(name).program())


class TestShred:
    def test_guard_program_split(self):
        b = shred(typed_fixture("guard"))
        assert pretty(A.Program(tuple(b.tdata))) == "if (g) {\n  x = 1;\n} else {\n  x = -1;\n}"
        assert pretty(A.Program(tuple(b.model))) == (
            "if (g) {\n  y ~ normal(x, 1);\n} else {\n  y ~ normal(x, 2);\n}"
        )
        assert [d.name for d in b.data] == ["g"]
        assert [d.name for d in b.tdata_decls] == ["x"]
        assert [d.name for d in b.parameters] == ["y"]

    def test_single_level_program(self):
        b = shred(infer(parse("data real a; real t = a * 2;")))
        assert b.tdata and not b.model and not b.genquant

    def test_blocks_are_single_level(self):
        for name in COMPILABLE:
            typed = typed_fixture(name)
            b = shred(typed, allow_discrete=True)
            for lv in Level:
                for s in b.stmts(lv):
                    assert typed.stmt_levels(s) == {lv}, (name, s)

    def test_discrete_parameter_rejected(self):
        with pytest.raises(DiscreteParameterError):
            shred(typed_fixture("coins"))

    def test_loop_duplicated(self):
        src = "data int N; data real[N] y; real mu ~ normal(0, 1); real[N] s;\n" \
              "for (n in 1:N) { y[n] ~ normal(mu, 1); s[n] = mu + n; }"
        b = shred(infer(parse(src)))
        assert len(b.model) == 2 and len(b.genquant) == 1  # mu's prior, then the loop copy
        assert isinstance(b.model[1], A.For) and isinstance(b.genquant[0], A.For)
        assert b.model[1].hi == b.genquant[0].hi == A.Var("N")


class TestEmit:
    def test_empty(self):
        assert emit(shred(infer(parse("")))) == ""

    def test_eight_schools_blocks(self):
        text = emit(shred(typed_fixture("eight_schools")))
        heads = [ln for ln in text.splitlines() if ln.endswith("{") and not ln.startswith(" ")]
        assert heads == ["data {", "parameters {", "model {"]
        for want in ("int N;", "real y[N];", "real<lower=0> sigma[N];", "real mu;", "real<lower=0> tau;", "real theta[N];"):
            assert want in text
        assert "theta[n] ~ normal(mu, tau);" in text

    def test_deterministic(self):
        t = typed_fixture("eight_schools")
        assert emit(shred(t)) == emit(shred(t))

    @pytest.mark.parametrize("name", ["coins", "hmm"])
    def test_marginalised_golden(self, name):
        typed, _ = condind.marginalize(typed_fixture(name))
        text = emit(shred(typed))
        assert "categorical_rng(softmax(" in text.split("generated quantities {")[1]
        assert text == (GOLDEN / f"{name}_marginalized.stan").read_text()


@pytest.mark.parametrize("name", COMPILABLE)
def test_corpus_preservation(name):
    fx = load(name)
    typed = infer(fx.program())
    rng = np.random.default_rng(7)
    for k in range(100):
        assert_preserved(typed, random_inputs(typed, rng, fx.data), k)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_random_program_preservation(seed):
    rng = np.random.default_rng(seed)
    try:
        typed = infer(parse(random_source(rng)))
    except StaticError:
        return
    for k in range(5):
        assert_preserved(typed, random_inputs(typed, rng), k)


# -- noninterference ------------------------------------------------------------------------


@pytest.mark.parametrize("name", COMPILABLE)
def test_corpus_noninterference(name):
    fx = load(name)
    typed = infer(fx.program())
    rng = np.random.default_rng(3)
    for _ in range(20):
        check_noninterference(typed, random_inputs(typed, rng, fx.data), rng)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_random_program_noninterference(seed):
    rng = np.random.default_rng(seed)
    try:
        typed = infer(parse(random_source(rng)))
    except StaticError:
        return
    check_noninterference(typed, random_inputs(typed, rng), rng)
