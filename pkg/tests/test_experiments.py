import json

import numpy as np
import pytest

from structbandit.bandit import (
    DecisionSet,
    Environment,
    ScheduleParams,
    Schedule,
    compute_schedule,
    make_theta_star,
    run_baseline,
    run_episode,
)
from structbandit.exceptions import ConfigurationError, InputError
from structbandit.experiments import (
    ExperimentSpec,
    bootstrap_difference,
    build_model,
    cell_configs,
    cell_hash,
    concentration_diagnostic,
    containment_report,
    load_sweep,
    re_phase_diagnostic,
    regret_summary,
    run_sweep,
)
from structbandit.structure import StructureModel


def tiny_spec(**kw):
    base = dict(name="tiny", truth={"kind": "l1", "s": 1}, p_list=[8], T_list=[200], seeds=[0, 1, 2],
                constants={"c_prime": 0.5})
    base.update(kw)
    return ExperimentSpec(**base)


def test_bookkeeping(tmp_path):
    res = run_sweep(tiny_spec(), tmp_path)
    assert res.computed == 3 and res.cached == 0
    assert len(list((tmp_path / "traces").glob("*.csv"))) == 3
    lines = (tmp_path / "aggregate.csv").read_text().splitlines()
    assert len(lines) == 2
    assert res.aggregates[0]["count"] == 3
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "complete" and len(manifest["cells"]) == 3
    assert (tmp_path / "plots" / "regret_vs_T__l1_p8.txt").exists()


def test_rerun_is_fully_cached(tmp_path):
    first = run_sweep(tiny_spec(), tmp_path)
    before = {p.name: p.read_bytes() for p in (tmp_path / "traces").iterdir()}
    again = run_sweep(tiny_spec(), tmp_path)
    assert again.computed == 0 and again.cached == 3
    assert again.aggregates == first.aggregates
    assert before == {p.name: p.read_bytes() for p in (tmp_path / "traces").iterdir()}


def test_resume_after_partial_run(tmp_path):
    run_sweep(tiny_spec(seeds=[0]), tmp_path)
    res = run_sweep(tiny_spec(), tmp_path)
    assert res.cached == 1 and res.computed == 2


def test_identical_outputs_across_directories(tmp_path):
    run_sweep(tiny_spec(), tmp_path / "a")
    run_sweep(tiny_spec(), tmp_path / "b", threads=2)
    for sub in ("traces", "plots"):
        for f in sorted((tmp_path / "a" / sub).glob("*.*")):
            assert f.read_bytes() == (tmp_path / "b" / sub / f.name).read_bytes()
    assert (tmp_path / "a" / "aggregate.csv").read_bytes() == (tmp_path / "b" / "aggregate.csv").read_bytes()


def test_aggregates_recomputed_from_traces(tmp_path):
    res = run_sweep(tiny_spec(structures=["l1", "l2"], kappa_directions=10), tmp_path)
    assert load_sweep(tmp_path).aggregates == res.aggregates


def test_infeasible_cells_are_skipped_with_reason(tmp_path):
    res = run_sweep(tiny_spec(T_list=[10, 200]), tmp_path)
    assert len(res.skipped) == 3
    assert {c["result"]["reason"] for c in res.skipped} == {"horizon_too_short"}
    assert all(c["result"]["min_T"] > 10 for c in res.skipped)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert len(manifest["skipped"]) == 3
    assert [r["T"] for r in res.aggregates] == [200]


def test_cell_hash_depends_on_content():
    a, b = cell_configs(tiny_spec())[:2]
    assert cell_hash(a) != cell_hash(b)
    assert cell_hash(a) == cell_hash(json.loads(json.dumps(a)))
    renamed = cell_configs(tiny_spec(name="other"))[0]
    assert cell_hash(renamed) == cell_hash(a)


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        tiny_spec(seeds=[1, 1])
    with pytest.raises(ConfigurationError):
        tiny_spec(T_list=[])
    with pytest.raises(ConfigurationError):
        tiny_spec(structures=["l3"])


def test_build_model_variants():
    truth = {"kind": "group", "s": 1, "group_size": 4, "rows": 2}
    assert build_model("group", 8, truth).n_groups == 2
    assert build_model("nuclear", 8, truth).shape == (2, 4)
    with pytest.raises(ConfigurationError):
        build_model("group", 10, truth)


class TestConcentration:
    model = StructureModel("l1", 8)

    def test_zero_noise(self):
        env = Environment(np.eye(8)[0], 0.0, "zero")
        tab = concentration_diagnostic(env, DecisionSet("ball", 8), self.model, [16, 64], 30)
        assert all(m == 0.0 for m in tab.mean)
        assert tab.slope is None

    def test_linear_in_noise_bound(self):
        a = concentration_diagnostic(Environment(np.eye(8)[0], 0.1), DecisionSet("ball", 8),
                                     self.model, [32, 128], 50, seed=3)
        b = concentration_diagnostic(Environment(np.eye(8)[0], 0.2), DecisionSet("ball", 8),
                                     self.model, [32, 128], 50, seed=4)
        np.testing.assert_allclose(np.array(b.mean) / np.array(a.mean), 2.0, rtol=0.1)

    def test_needs_trials(self):
        with pytest.raises(InputError):
            concentration_diagnostic(Environment(np.eye(8)[0], 0.1), DecisionSet("ball", 8),
                                     self.model, [8], 10)


class TestREPhase:
    model = StructureModel("l1", 16, s=2)

    def test_kappa_grows_with_t(self):
        theta = make_theta_star(self.model, 0)
        tab = re_phase_diagnostic(DecisionSet("ball", 16), self.model, theta, [2, 800], range(20),
                                  directions=100)
        assert np.mean([r.kappa[1] > r.kappa[0] for r in tab.rows]) >= 0.95

    def test_more_directions_never_raise_threshold_time(self):
        theta = make_theta_star(self.model, 1)
        grid = [1, 2, 4, 8, 16, 32, 64]
        few = re_phase_diagnostic(DecisionSet("ball", 16), self.model, theta, grid, range(10),
                                  directions=50, threshold=0.02)
        many = re_phase_diagnostic(DecisionSet("ball", 16), self.model, theta, grid, range(10),
                                   directions=200, threshold=0.02)
        for a, b in zip(few.rows, many.rows):
            assert all(kb <= ka for ka, kb in zip(a.kappa, b.kappa))
            if a.t_star is not None and b.t_star is not None:
                assert b.t_star >= a.t_star

    def test_single_row_is_near_zero(self):
        m = StructureModel("l1", 32, s=2)
        tab = re_phase_diagnostic(DecisionSet("ball", 32), m, make_theta_star(m, 0), [1], range(5))
        assert max(r.kappa[0] for r in tab.rows) < 0.05


def episode(beta=None, noise=0.1, seed=0, T=300):
    model = StructureModel("l1", 8, s=1)
    env = Environment(make_theta_star(model, seed), noise)
    params = ScheduleParams.for_model(model, T, c_prime=0.5)
    sched = compute_schedule(params)
    if beta is not None:
        sched = Schedule(sched.n, beta, sched.lambda_scale)
    return run_episode(env, DecisionSet("ball", 8), model, params, seed=seed, schedule=sched)


class TestContainmentReport:
    def test_all_contained(self):
        rep = containment_report([episode(beta=1e6)])
        assert rep["pooled"] == 1.0

    def test_point_ellipsoid_misses(self):
        rep = containment_report([episode(beta=0.0, seed=s) for s in range(2)])
        assert rep["pooled"] <= 0.01
        assert rep["worst"]["ratio"] == float("inf")

    def test_worst_round_identified(self):
        tr = episode()
        rep = containment_report([tr])
        j = rep["worst"]["round"] - 1
        assert tr.distance[j] == np.nanmax(tr.distance)

    def test_empty(self):
        with pytest.raises(InputError):
            containment_report([])


class TestRegretSummary:
    def setup_method(self):
        model = StructureModel("l1", 8, s=1)
        self.env = Environment(make_theta_star(model, 0), 0.1)
        self.dset = DecisionSet("ball", 8)

    def test_oracle_is_degenerate(self):
        traces = [run_baseline(self.env, self.dset, T, "oracle") for T in (100, 200, 400)]
        s = regret_summary(traces)
        assert s["mean_R_T"] == [0.0, 0.0, 0.0]
        assert s["slope"] is None and s["degenerate"]

    def test_uniform_is_linear(self):
        traces = [run_baseline(self.env, self.dset, T, "uniform", seed=k)
                  for T in (500, 1000, 2000, 4000) for k in range(3)]
        assert regret_summary(traces)["slope"] == pytest.approx(1.0, abs=0.05)

    def test_needs_three_horizons(self):
        traces = [run_baseline(self.env, self.dset, T, "uniform") for T in (100, 200)]
        s = regret_summary(traces)
        assert s["slope"] is None and s["sublinear"] is None


def test_bootstrap_difference():
    rng = np.random.default_rng(0)
    a = rng.normal(0, 1, 30)
    res = bootstrap_difference(a, a + 5, resamples=2000)
    assert res["excludes_zero"] and res["upper"] < 0
    same = bootstrap_difference(a, rng.permutation(a), resamples=2000)
    assert not same["excludes_zero"]
