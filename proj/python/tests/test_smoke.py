import importlib.util
import math
import pathlib
import subprocess
import sys

import pytest

import rewardlab as rl

ROOT = pathlib.Path(__file__).resolve().parents[2]


def load_aggregator():
    spec = importlib.util.spec_from_file_location("aggregate_summary", ROOT / "tools" / "aggregate_summary.py")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def test_noise_model():
    n = rl.NoiseModel("uniform:0.3")
    assert n.label() == "uniform:0.3"
    assert n.expected(2.0) == pytest.approx(0.7 * 2.0)
    assert rl.NoiseModel().is_identity
    assert rl.NoiseModel("sparse:0.5").sample(3.0, seed=1, count=5) == rl.NoiseModel("sparse:0.5").sample(3.0, seed=1, count=5)
    with pytest.raises(ValueError):
        rl.NoiseModel("laplace:1")


def test_gaussian_samples_match_their_moments():
    xs = rl.NoiseModel("gaussian:0.5").sample(1.0, seed=3, count=200000)
    mean = sum(xs) / len(xs)
    var = sum((x - mean) ** 2 for x in xs) / (len(xs) - 1)
    assert abs(mean - 1.0) < 4 * 0.5 / math.sqrt(len(xs))
    assert var == pytest.approx(0.25, rel=0.02)


def test_chain_values():
    assert rl.chain_true_values(5, 2.0) == pytest.approx([5, 4, 3, 2, 1, 0])
    v = rl.chain_true_values(3, 1.0, 1.0, 0.5)
    assert v == pytest.approx([1.75, 1.5, 1.0, 0.0])


def test_tabular_records():
    recs = rl.tabular_experiment("chain5", reward=5.0, alphas=[1.0], seeds=3, episodes=20)
    assert len(recs) == 6
    assert [r["source"] for r in recs[:2]] == ["sampled", "estimator"]
    assert all(r["fallback_events"] == (5 if r["source"] == "estimator" else 0) for r in recs)


def test_variance_helpers():
    assert rl.sample_mean_variance_ratio("bernoulli", 0.5, 5.0, 10, 200000) == pytest.approx(0.1, rel=0.05)
    assert rl.predicted_variance_gap(6.25, 0.0, 10) == pytest.approx(-5.625)
    g = rl.variance_gap(0.5, 5.0, -1.0, 1.0, 10, 100000)
    assert not g["covariance_condition"]
    assert abs(g["measured"] - g["analytic"]) <= 4 * g["standard_error"]


def test_scoring():
    assert rl.normalized_improvement(10, 5, 0) == 100.0
    assert rl.normalized_improvement(-15.08, -20.42, -20.7) == pytest.approx(1882.6, rel=0.02)
    with pytest.raises(rl.SuiteError):
        rl.normalized_improvement(1, 2, 2)
    assert rl.random_policy_baseline("pointmass", 10, 4) == rl.random_policy_baseline("pointmass", 10, 4)


def test_train_is_deterministic():
    a = rl.train("pointmass", noise="gaussian:0.2", source="estimated:sa", seed=3, updates=3, num_envs=2, hidden=[8])
    b = rl.train("pointmass", noise="gaussian:0.2", source="estimated:sa", seed=3, updates=3, num_envs=2, hidden=[8])
    assert len(a) == 3
    assert math.isnan(a[0]["mean_return"])

    def canon(recs):
        return [{k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in r.items()} for r in recs]

    assert canon(a) == canon(b)
    with pytest.raises(ValueError):
        rl.train(bogus=1)


def test_config_hash_ignores_order():
    assert rl.config_hash("env.id=grid5\nsuite.seeds=1,2\n") == rl.config_hash("suite.seeds = 1,2\nenv.id = grid5")
    with pytest.raises(rl.SuiteError):
        rl.config_hash("nonsense.key=1")


def test_suite_summary_is_recomputable(tmp_path):
    cfg = tmp_path / "suite.cfg"
    cfg.write_text(
        "env.id = grid5\nnoise.kind = gaussian\nnoise.sigma = 0, 0.3\nsuite.seeds = 1, 2, 3\n"
        "train.sources = sampled, estimated:sa, estimated:s\ntrain.updates = 3\ntrain.num_envs = 2\n"
        "suite.random_episodes = 5\n"
        f"output.results = {tmp_path / 'r.csv'}\noutput.summary = {tmp_path / 's.csv'}\n"
    )
    assert rl.run_suite(str(cfg)) == 0
    count, problems = load_aggregator().check(tmp_path / "r.csv", tmp_path / "s.csv")
    assert count == 6
    assert problems == []
    first = (tmp_path / "r.csv").read_bytes()
    rl.run_suite(str(cfg))
    assert (tmp_path / "r.csv").read_bytes() == first


def test_aggregator_flags_tampering(tmp_path):
    cfg = tmp_path / "suite.cfg"
    cfg.write_text(
        "suite.seeds = 1, 2\ntrain.sources = sampled, estimated:sa\ntrain.updates = 2\ntrain.num_envs = 2\n"
        "train.rollout = 50\nsuite.random_episodes = 3\n"
        f"output.results = {tmp_path / 'r.csv'}\noutput.summary = {tmp_path / 's.csv'}\n"
    )
    rl.run_suite(str(cfg))
    lines = (tmp_path / "s.csv").read_text().splitlines()
    cols = lines[2].split(",")
    cols[5] = str(float(cols[5]) + 1.0)
    lines[2] = ",".join(cols)
    (tmp_path / "s.csv").write_text("\n".join(lines) + "\n")
    script = ROOT / "tools" / "aggregate_summary.py"
    proc = subprocess.run([sys.executable, str(script), str(tmp_path / "r.csv"), str(tmp_path / "s.csv")],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert "seed_mean_return" in proc.stdout
