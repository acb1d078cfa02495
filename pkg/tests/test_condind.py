import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slic import condind as C
from slic.corpus import hmm_data, hmm_source, load
from slic.errors import NotEliminable, SupportTooLarge
from slic.frontend import ast as A
from slic.frontend import parse, pretty
from slic.levels import Level, infer
from slic.runtime.interp import Store, run_program
from slic.runtime.model import Model


def typed_of(src):
    return infer(parse(src))


def show(stmts):
    return [pretty(A.Program((s,))) for s in stmts]


def transformed_target(typed, values, seed=0) -> float:
    gen = {n for n, lv in typed.levels.items() if lv == Level.GENQUANT}
    return float(run_program(typed.program, Store(values, np.random.default_rng(seed)), gen).target)


def latent_supports(typed, values):
    """Every unobserved scalar discrete variable, including generative leaves that sum to one."""
    out = []
    for s in typed.program.stmts:
        if isinstance(s, A.Decl) and s.type.base == "int" and not s.type.dims and s.name not in values \
                and typed.levels[s.name] != Level.DATA:
            out.append(C.Support(s.name, int(s.type.lower), int(s.type.upper)))
    return out


def brute_log_evidence(typed, values) -> float:
    supports = latent_supports(typed, values)
    return C.log_sum_exp(C.enumerate_log_target(typed.program, values, supports).values())


def hmm_typed(n):
    return typed_of(hmm_source(n))


# -- random discrete networks ------------------------------------------------------------


def random_network(rng, n_vars, n_obs):
    """Binary variables with random parent sets, some observed children, and the factor scopes."""
    lines, scopes = [], []
    for k in range(n_vars):
        parents = [f"z{j}" for j in range(k) if rng.random() < 0.4]
        lines.append(f"int<lower=0, upper=1> z{k} ~ bernoulli({_cpt(rng, parents)});")
        scopes.append(({f"z{k}", *parents}, f"z{k}"))
    for k in range(n_obs):
        parents = [f"z{j}" for j in range(n_vars) if rng.random() < 0.4] or [f"z{rng.integers(n_vars)}"]
        lines.append(f"data int<lower=0, upper=1> o{k};")
        lines.append(f"o{k} ~ bernoulli({_cpt(rng, parents)});")
        scopes.append(({f"o{k}", *parents}, f"o{k}"))
    data = {f"o{k}": int(rng.integers(2)) for k in range(n_obs)}
    return "\n".join(lines), data, scopes


def _cpt(rng, parents):
    if not parents:
        return repr(round(float(rng.uniform(0.1, 0.9)), 3))
    p, rest = parents[0], parents[1:]
    return f"({p} == 1 ? {_cpt(rng, rest)} : {_cpt(rng, rest)})"


class TestSupport:
    def test_support_values(self):
        s = C.Support("k", -1, 2)
        assert s.size == 4 and list(s.values()) == [-1, 0, 1, 2]

    def test_factor_table(self):
        t = C.FactorTable([C.Support("a", 0, 1), C.Support("b", 1, 3)], np.arange(6.0))
        assert t[{"a": 1, "b": 2}] == 4.0
        with pytest.raises(ValueError):
            C.FactorTable([C.Support("a", 0, 1)], np.zeros(3))

    @pytest.mark.parametrize("src,z", [
        ("model real z ~ normal(0, 1);", "z"),
        ("model int<lower=0> z ~ binomial(3, 0.5);", "z"),
        ("data int<lower=0, upper=1> z; z ~ bernoulli(0.5);", "z"),
        ("data int<lower=0, upper=1> y; int<lower=0, upper=1>[2] z; z[1] ~ bernoulli(0.5); "
         "z[2] ~ bernoulli(0.5); y ~ bernoulli(z[1] == 1 ? 0.2 : 0.4);", "z"),
    ])
    def test_not_eliminable(self, src, z):
        with pytest.raises(NotEliminable):
            C.ci_slice(typed_of(src), z)

    def test_genquant_discrete_not_eliminable(self):
        with pytest.raises(NotEliminable):
            C.support_of(typed_of("int<lower=0, upper=1> z ~ bernoulli(0.5);"), "z")

    def test_tilde_under_branch_rejected(self):
        src = ("data bool g; data int<lower=0, upper=1> y; model int<lower=0, upper=1> z;\n"
               "if (g) { z ~ bernoulli(0.2); } else { z ~ bernoulli(0.7); }\n"
               "y ~ bernoulli(z == 1 ? 0.9 : 0.1);")
        with pytest.raises(NotEliminable):
            C.marginalize(typed_of(src))


class TestSlice:
    def test_hmm_z1(self):
        sl = C.ci_slice(hmm_typed(3), "z1")
        assert show(sl.s2) == [
            "z1 ~ bernoulli(alpha[1]);",
            "z2 ~ bernoulli(alpha[z1 + 1]);",
            "y1 ~ bernoulli(beta[z1 + 1]);",
        ]
        assert all(sl.level_of(s) == C.L2 for s in sl.s2)
        assert all(sl.level_of(s) == C.L3 for s in sl.s3)

    def test_single_coin(self):
        sl = C.ci_slice(typed_of("model int<lower=0, upper=1> c ~ bernoulli(0.5);"), "c")
        assert show(sl.s2) == ["c ~ bernoulli(0.5);"] and sl.s1 == [] and sl.s3 == []

    def test_deterministic_closure(self):
        typed = infer(load("coins").program())
        sl = C.ci_slice(typed, "c1")
        assert "both_heads" in sl.tainted
        assert len(sl.s2) == 3  # c1's prior, the indicator, the observation factor

    def test_s1_collects_prerequisites(self):
        src = ("data real a; model real m ~ normal(0, 1); real s = m * a; model int<lower=0, upper=1> z;\n"
               "z ~ bernoulli(inv_logit(s)); target += m;")
        sl = C.ci_slice(typed_of(src), "z")
        assert show(sl.s1) == ["s = m * a;"]
        assert show(sl.s2) == ["z ~ bernoulli(inv_logit(s));"]
        assert set(show(sl.s3)) == {"m ~ normal(0, 1);", "target += m;"}

    def test_concatenation_preserves_density(self):
        typed = hmm_typed(4)
        data = hmm_data(4)
        sl = C.ci_slice(typed, "z2")
        reordered = A.Program(tuple(sl.blocked.data + sl.blocked.parameters + sl.s1 + sl.s2 + sl.s3))
        for combo in itertools.product([0, 1], repeat=4):
            vals = dict(data) | {f"z{i + 1}": v for i, v in enumerate(combo)}
            a = run_program(typed.program, Store(vals)).target
            b = run_program(reordered, Store(vals)).target
            assert a == pytest.approx(b, rel=1e-14)


class TestBlanket:
    def test_hmm_z1(self):
        assert C.markov_blanket(hmm_typed(3), "z1") == {"z2", "y1"}

    def test_hmm_after_eliminating_z1(self):
        typed, blanket = C.eliminate_one(hmm_typed(3), "z1")
        assert blanket == {"z2", "y1"}
        assert C.markov_blanket(typed, "z2") == {"z3", "y2"}

    def test_isolated(self):
        assert C.markov_blanket(typed_of("model int<lower=0, upper=1> z ~ bernoulli(0.3);"), "z") == set()

    def test_sprinkler(self):
        typed = infer(load("sprinkler").program())
        assert C.markov_blanket(typed, "rain") == {"sprinkler", "wet"}
        assert C.markov_blanket(typed, "sprinkler") == {"rain", "wet"}

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_random_network_adjacency(self, seed):
        rng = np.random.default_rng(seed)
        src, data, scopes = random_network(rng, int(rng.integers(1, 5)), int(rng.integers(1, 3)))
        typed = typed_of(src)
        for z in C.discrete_parameters(typed):
            sl = C.ci_slice(typed, z)
            adjacent = [sc for sc, head in scopes if z in sc and typed.levels[head] != Level.GENQUANT]
            assert len(sl.s2) == len(adjacent)
            want = set().union(*adjacent) - {z}
            assert C.markov_blanket(typed, z) == want


class TestElimination:
    def test_coin_marginal_and_redraw(self):
        typed, plan = C.marginalize(infer(load("coins").program()))
        assert plan.order == ["c1", "c2"]
        m = Model(typed.program, {}, typed=typed)
        assert m.dim == 0
        assert m.log_density([]) == pytest.approx(math.log(0.75), abs=1e-12)
        runner = m.genquant_runner([])
        rng = np.random.default_rng(0)
        draws = [runner.draw(rng) for _ in range(20000)]
        p = np.mean([d["c1"] for d in draws])
        assert abs(p - 1 / 3) < 4 * math.sqrt(2 / 9 / 20000)
        assert not any(d["c1"] == 1 and d["c2"] == 1 for d in draws)

    def test_single_unobserved_discrete_sums_to_one(self):
        typed, _ = C.marginalize(typed_of("model int<lower=0, upper=1> z ~ bernoulli(0.3);"))
        assert Model(typed.program, {}, typed=typed).log_density([]) == pytest.approx(0.0, abs=1e-15)

    def test_output_has_no_discrete_parameters(self):
        typed, _ = C.marginalize(hmm_typed(3))
        assert C.discrete_parameters(typed) == []
        assert all(typed.levels[z] == Level.GENQUANT for z in ("z1", "z2", "z3"))

    def test_hmm3_golden_evidence(self):
        typed = hmm_typed(3)
        data = hmm_data(3)
        out, _ = C.marginalize(typed)
        want = brute_log_evidence(typed, data)
        assert want == pytest.approx(-2.666946646223793, abs=1e-12)
        assert transformed_target(out, data) == pytest.approx(want, abs=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_hmm_random_parameters(self, n):
        typed = hmm_typed(n)
        out, _ = C.marginalize(typed)
        rng = np.random.default_rng(n)
        for _ in range(5):
            data = hmm_data(n, rng.uniform(0.05, 0.95, 2).tolist(), rng.uniform(0.05, 0.95, 2).tolist(),
                            rng.integers(0, 2, n).tolist())
            assert abs(transformed_target(out, data) - brute_log_evidence(typed, data)) <= 1e-9

    def test_order_invariance(self):
        n = 5
        typed = hmm_typed(n)
        data = hmm_data(n)
        want = brute_log_evidence(typed, data)
        for order in itertools.permutations([f"z{i + 1}" for i in range(n)]):
            out, _ = C.marginalize(typed, list(order))
            assert abs(transformed_target(out, data) - want) <= 1e-9, order

    @pytest.mark.parametrize("name", ["coins", "hmm", "sprinkler", "mixture"])
    def test_corpus_marginal(self, name):
        fx = load(name)
        typed = infer(fx.program())
        out, _ = C.marginalize(typed)
        cont = Model(out.program, fx.data, typed=out)
        rng = np.random.default_rng(4)
        for _ in range(20):
            u = rng.normal(size=cont.dim)
            vals = dict(cont.base_values) | cont.constrain(u)
            assert abs(transformed_target(out, vals) - brute_log_evidence(typed, vals)) <= 1e-9

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_random_network_marginal(self, seed):
        rng = np.random.default_rng(seed)
        src, data, _ = random_network(rng, int(rng.integers(1, 6)), int(rng.integers(1, 4)))
        typed = typed_of(src)
        out, _ = C.marginalize(typed)
        assert abs(transformed_target(out, data) - brute_log_evidence(typed, data)) <= 1e-9

    def test_hmm_redraw_matches_conditional(self):
        typed = hmm_typed(3)
        data = hmm_data(3)
        table = C.enumerate_log_target(typed.program, data, [C.support_of(typed, f"z{i}") for i in (1, 2, 3)])
        norm = C.log_sum_exp(table.values())
        probs = {k: math.exp(v - norm) for k, v in table.items()}
        out, _ = C.marginalize(typed)
        runner = Model(out.program, data, typed=out).genquant_runner([])
        rng = np.random.default_rng(1)
        n = 50000
        counts = dict.fromkeys(probs, 0)
        for _ in range(n):
            d = runner.draw(rng)
            counts[(d["z1"], d["z2"], d["z3"])] += 1
        for k, p in probs.items():
            assert abs(counts[k] / n - p) <= 3 * math.sqrt(p * (1 - p) / n), k

    def test_support_cap(self):
        with pytest.raises(SupportTooLarge):
            C.marginalize(hmm_typed(3), cap=1)

    def test_duplicate_plan_rejected(self):
        with pytest.raises(NotEliminable):
            C.marginalize(hmm_typed(2), ["z1", "z1"])


class TestOrdering:
    def test_hmm_endpoint_first(self):
        for n in (3, 4, 5):
            assert C.auto_order(hmm_typed(n)).order[0] in ("z1", f"z{n}")

    @staticmethod
    def widest_table(typed, order):
        _, plan = C.marginalize(typed, list(order))
        discrete = set(C.discrete_parameters(typed))
        return max(2 ** len(b & discrete) for b in plan.blankets)

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_hmm_greedy_is_optimal(self, n):
        typed = hmm_typed(n)
        names = [f"z{i + 1}" for i in range(n)]
        best = min(self.widest_table(typed, o) for o in itertools.permutations(names))
        assert self.widest_table(typed, C.auto_order(typed).order) == best

    def test_singleton(self):
        typed = typed_of("data int<lower=0, upper=1> y; int<lower=0, upper=1> z ~ bernoulli(0.4);"
                         " y ~ bernoulli(z == 1 ? 0.9 : 0.2);")
        assert C.auto_order(typed).order == ["z"]

    def test_clique_declaration_tie_break(self):
        src = ("data int<lower=0, upper=1> y;\n"
               "int<lower=0, upper=1> c ~ bernoulli(0.5);\n"
               "int<lower=0, upper=1> a ~ bernoulli(0.5);\n"
               "int<lower=0, upper=1> b ~ bernoulli(0.5);\n"
               "y ~ bernoulli(a + b + c == 3 ? 0.9 : 0.1);")
        assert C.auto_order(typed_of(src)).order == ["c", "a", "b"]


def test_statement_counts_grow_linearly():
    ns = list(range(4, 17, 2))
    steps = []
    for n in ns:
        out, _ = C.marginalize(hmm_typed(n))
        m = Model(out.program, hmm_data(n), typed=out, fast=False)
        steps.append(m._run_model([]).steps)
    diffs = np.diff(steps)
    assert np.all(diffs == diffs[0])  # exactly linear: every extra step adds the same work
