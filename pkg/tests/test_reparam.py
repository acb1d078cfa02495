import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slic import reparam as R
from slic.corpus import load
from slic.errors import IneligibleSite
from slic.frontend import parse, pretty
from slic.levels import infer
from slic.runtime.interp import Store, run_program
from slic.runtime.model import Model


def fixture(name):
    fx = load(name)
    return fx.program(), fx.data


def log_scale_jacobian(name, cp_values):
    """Sum of log-scales over the non-centred sites of the two test models."""
    if name == "funnel":
        return 9 * cp_values["y"] / 2 + math.log(3.0)  # y's own prior scale is 3
    # eight schools: theta[n] ~ normal(mu, tau) is non-centred; mu's scale is the constant 5
    return cp_values["N"] * math.log(cp_values["tau"]) + math.log(5.0)


class TestSites:
    def test_eight_schools_sites(self):
        prog, _ = fixture("eight_schools")
        assert list(R.sites(prog)) == ["mu", "theta"]

    @pytest.mark.parametrize("src,name,why", [
        ("data real y; y ~ normal(0, 1);", "y", "observed data"),
        ("real<lower=0> s ~ normal(0, 1); data real y; y ~ normal(0, s);", "s", "bounds"),
        ("data bool g; data real y; real z; if (g) { z ~ normal(0, 1); } else { z ~ normal(1, 1); }"
         " y ~ normal(z, 1);", "z", "conditional"),
        ("data real y; real z ~ gamma(2, 2); y ~ normal(z, 1);", "z", "location-scale"),
        ("data real y; real z ~ normal(0, 1); z = z + 1; y ~ normal(z, 1);", "z", "assigned"),
        ("data real y; real m ~ normal(0, 1); real t = 2 * m; y ~ normal(t, 1);", "t", "assigned"),
        ("data real y; real z ~ normal(0, 1);", "z", "model-level"),
    ])
    def test_ineligible(self, src, name, why):
        prog = parse(src)
        with pytest.raises(IneligibleSite, match=why):
            R.ncp(prog, [name])

    def test_vip_rejects_non_normal(self):
        prog = parse("data real y; real z ~ cauchy(0, 1); y ~ normal(z, 1);")
        assert R.sites(prog)["z"][0].family == "cauchy"
        R.ncp(prog)  # the general form accepts any location-scale family
        with pytest.raises(IneligibleSite, match="normal"):
            R.vip(prog, {"z": 0.5})

    @pytest.mark.parametrize("bad", [-0.1, 1.5, [0.2, 2.0], "x"])
    def test_lambda_range(self, bad):
        with pytest.raises(ValueError):
            R.LambdaMap({"z": bad})

    def test_lambda_json_round_trip(self):
        lam = R.LambdaMap({"b": [0.25, 1.0], "a": 0.5})
        assert R.LambdaMap.from_json(lam.to_json()) == lam


class TestNcp:
    def test_text(self):
        prog = parse("data real y; real z ~ normal(1, 2); y ~ normal(z, 1);")
        assert pretty(R.ncp(prog)) == (
            "data real y;\nreal z;\nreal z_raw;\nz_raw ~ normal(0.0, 1.0);\nz = 1 + 2 * z_raw;\ny ~ normal(z, 1);"
        )

    def test_fresh_name_avoids_collision(self):
        prog = parse("data real y; data real z_raw; real z ~ normal(z_raw, 2); y ~ normal(z, 1);")
        _, raw = R.ncp_with_names(prog)
        assert raw["z"] != "z_raw"

    def test_funnel_matches_hand_written(self):
        out = R.ncp(fixture("funnel")[0], ["x"])
        ref = Model(load("funnel_ncp").program())
        got = Model(out)
        rng = np.random.default_rng(0)
        for _ in range(20):
            u = rng.normal(size=ref.dim) * 2
            assert got.log_density(u) == pytest.approx(ref.log_density(u), rel=1e-12)

    @pytest.mark.parametrize("name", ["eight_schools", "funnel"])
    def test_density_relation(self, name):
        prog, data = fixture(name)
        cp, ncp_m, bij = R.bijection(prog, data)
        rng = np.random.default_rng(1)
        for _ in range(100):
            u = rng.normal(size=cp.dim) * 1.5
            v = bij.forward(u)
            vals = dict(cp.base_values) | cp.constrain(u)
            want = cp.log_density(u) + log_scale_jacobian(name, vals)
            assert ncp_m.log_density(v) == pytest.approx(want, rel=1e-10, abs=1e-10)
            assert np.allclose(bij.inverse(v), u, rtol=1e-10, atol=1e-10)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-4, 4), min_size=10, max_size=10))
    def test_bijection_round_trip(self, xs):
        _, _, bij = R.bijection(*fixture("funnel"))
        u = np.array(xs)
        assert np.allclose(bij.forward(bij.inverse(u)), u, atol=1e-9)


class TestVip:
    @pytest.mark.parametrize("name", ["eight_schools", "funnel"])
    def test_lambda_one_is_identity(self, name):
        prog, _ = fixture(name)
        assert pretty(R.vip(prog, 1.0)) == pretty(prog)

    @pytest.mark.parametrize("name", ["eight_schools", "funnel"])
    def test_lambda_zero_is_ncp(self, name):
        prog, _ = fixture(name)
        assert pretty(R.vip(prog, 0.0)) == pretty(R.ncp(prog))

    def test_per_element_weights(self):
        prog, data = fixture("eight_schools")
        lam = {"mu": 1.0, "theta": [0.0, 0.25, 0.5, 0.75, 1.0, 0.1, 0.2, 0.3]}
        out = R.vip(prog, lam)
        assert "theta_lambda" in pretty(out)
        assert Model(out, data).dim == Model(prog, data).dim

    def test_symbolic_weights_are_data(self):
        prog, data = fixture("eight_schools")
        out = R.vip(prog, {"theta": 0.3}, symbolic=True)
        names = [d.name for d in out.decls if d.level == "data"]
        assert "theta_lambda" in names
        fixed = Model(R.vip(prog, {"theta": [0.3] * 8}), data)
        sym = Model(out, data | {"theta_lambda": [0.3] * 8})
        u = np.random.default_rng(2).normal(size=fixed.dim)
        assert sym.log_density(u) == pytest.approx(fixed.log_density(u), rel=1e-12)

    @pytest.mark.parametrize("lam", [0.0, 0.5, 0.8])
    def test_marginal_moments_preserved(self, lam):
        # z = mu + sigma^(1-lam) (z_tilde - lam mu) must be N(mu, sigma^2) for every lam
        prog = parse("model real z ~ normal(1.3, 2.0);")
        out = R.vip(prog, {"z": lam})
        fresh = {d.name for d in out.decls}
        rng = np.random.default_rng(5)
        n = 100_000
        zs = np.array([run_program(out, Store({}, rng), fresh).values["z"] for _ in range(n)])
        assert abs(zs.mean() - 1.3) < 4 * 2.0 / math.sqrt(n)
        assert abs(zs.var() - 4.0) < 4 * 4.0 * math.sqrt(2 / n)

    def test_density_consistent_with_change_of_variables(self):
        prog, data = fixture("funnel")
        lam = 0.5
        out = R.vip(prog, {"x": lam})
        cp = Model(prog, data)
        m = Model(out, data)
        rng = np.random.default_rng(3)
        for _ in range(20):
            v = rng.normal(size=m.dim)
            vals = m._run_model(v).values
            u = cp.unconstrain(vals)
            # dz/dz_tilde = sigma^(1-lam) with sigma = exp(y/2), nine times
            jac = 9 * (1 - lam) * vals["y"] / 2
            assert m.log_density(v) == pytest.approx(cp.log_density(u) + jac, rel=1e-10, abs=1e-10)


class TestVipOptimize:
    def test_no_sites(self):
        res = R.vip_optimize(parse("model real<lower=0> s ~ cauchy(0, 1);"), {}, R.VipConfig(steps=50))
        assert res.lam == {} and res.param_names == ["s"]

    def test_runs_and_improves(self):
        prog, data = fixture("eight_schools")
        res = R.vip_optimize(prog, data, R.VipConfig(steps=300, samples=4, seed=1))
        assert set(res.lam) == {"mu", "theta"}
        assert all(0 <= x <= 1 for x in R._flat(res.lam["theta"]))
        assert len(res.elbo) == 300
        assert np.mean(res.elbo[-50:]) > np.mean(res.elbo[:50])

    def test_deterministic(self):
        prog, data = fixture("funnel")
        cfg = R.VipConfig(steps=40, samples=2, seed=7)
        a, b = R.vip_optimize(prog, data, cfg), R.vip_optimize(prog, data, cfg)
        assert a.lam == b.lam and np.array_equal(a.mean, b.mean)


def test_vip_model_is_well_typed():
    prog, _ = fixture("eight_schools")
    infer(R.vip(prog, 0.4))
