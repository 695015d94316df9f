import csv

import pytest

from rlmc import config
from rlmc.cli import main

SMALL = {
    "ergodicity": "replicas.chains = 4000\nreplicas.block = 1000\nreplicas.n_boot = 5\n",
    "drift-check": "replicas.n_mc = 20000\ngrid.eta = 0.05,0.5\ngrid.x = 0,10\n",
    "one-step-order": "replicas.strong = 20000\nreplicas.weak = 20000\nreplicas.block = 8192\n",
    "density-check": "replicas.n_mc = 50000\n",
    "moment-check": ("replicas.steps = 20000\nreplicas.burn_in = 100\nreplicas.chains = 2000\n"
                     "replicas.block = 500\nreplicas.bootstrap_blocks = 20\nreplicas.n_boot = 50\n"
                     "moment.recursion_n_max = 1000\ngrid.checkpoints = 1,10,100\n"),
    "schedule-diag": "schedule.n_max = 20000\n",
    "decreasing-rate": "schedule.n_max = 20000\n",
    "bias-sweep": "",
}


def _run(tmp_path, name, text, *extra):
    cfg = tmp_path / f"{name}.cfg"
    cfg.write_text(text)
    out = tmp_path / f"{name}-{len(list(tmp_path.iterdir()))}.csv"
    code = main([name, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


@pytest.mark.parametrize("name", sorted(SMALL))
def test_experiment_is_reproducible(tmp_path, name):
    code1, out1 = _run(tmp_path, name, SMALL[name], "--seed", "7")
    code2, out2 = _run(tmp_path, name, SMALL[name], "--seed", "7")
    assert code1 in (0, 1)
    assert out1.read_bytes() == out2.read_bytes()
    summary = out1.with_name(out1.name + ".summary").read_text()
    assert "seed = 7" in summary and "all_pass = " in summary


@pytest.mark.parametrize("name", ["ergodicity", "drift-check", "one-step-order", "moment-check"])
def test_workers_do_not_change_results(tmp_path, name):
    _, one = _run(tmp_path, name, SMALL[name], "--workers", "1")
    _, many = _run(tmp_path, name, SMALL[name], "--workers", "8")
    assert one.read_bytes() == many.read_bytes()


def test_seed_changes_output(tmp_path):
    _, a = _run(tmp_path, "drift-check", SMALL["drift-check"], "--seed", "1")
    _, b = _run(tmp_path, "drift-check", SMALL["drift-check"], "--seed", "2")
    assert a.read_bytes() != b.read_bytes()


def test_drift_check_passes_and_layout(tmp_path):
    code, out = _run(tmp_path, "drift-check", SMALL["drift-check"])
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["experiment", "eta", "x", "statistic", "value", "std_error", "pass"]
    assert {r[3] for r in rows[1:]} >= {"lambda", "b", "Q_eta_V_exact", "Q_eta_V_mc"}
    lam = next(r for r in rows[1:] if r[3] == "lambda" and float(r[1]) == 0.05)
    assert float(lam[4]) == pytest.approx(0.9075)


def test_schedule_diag_columns(tmp_path):
    code, out = _run(tmp_path, "schedule-diag", "schedule.n_max = 100000\n")
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["n", "gamma_n", "t_n", "u_n", "u_n_over_sqrt_gamma_n", "exp_decay_ratio"]
    n, g, *_ = rows[1]
    assert (int(n), float(g)) == (1, 2.0)


def test_density_check_columns(tmp_path):
    _, out = _run(tmp_path, "density-check", SMALL["density-check"])
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["x_tilde", "q_eta", "mc_histogram_density"]
    assert len(rows) == 102
    assert "e" in rows[1][0] and len(rows[1][0].split("e")[0].replace("-", "").replace(".", "")) == 17


def test_failing_check_exit_code(tmp_path):
    code, _ = _run(tmp_path, "bias-sweep", "bias.min_slope = 5\n")
    assert code == 1


@pytest.mark.parametrize("name, text, match", [
    ("decreasing-rate", "schedule.c = 0.5\n", "omega >= m/2"),
    ("moment-check", "schedule.kind = constant\n", "does not tend to 0"),
    ("drift-check", "grid.eta = 1.5\n", "outside"),
    ("drift-check", "replicas.n_mc = 0\n", "positive"),
    ("drift-check", "grid.eta = \n", "nonempty"),
    ("bias-sweep", "potential.kind = banana\n", "unknown kind"),
    ("bias-sweep", "just words\n", "key = value"),
    ("schedule-diag", "schedule.c = 0.5\n", "omega"),
])
def test_config_errors(tmp_path, capsys, name, text, match):
    code, _ = _run(tmp_path, name, text)
    assert code == 2
    assert match in capsys.readouterr().err


def test_run_subcommand_reads_experiment(tmp_path):
    cfg = tmp_path / "r.cfg"
    cfg.write_text("experiment = bias-sweep\n")
    out = tmp_path / "r.csv"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0].startswith("experiment,eta,statistic")
    cfg.write_text("grid.eta = 0.1\n")
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 2


def test_parse_text_comments_and_matrix():
    vals = config.parse_text("# header\npotential.matrix = 2,0.5; 0.5,1  # dense\nseed=3\n")
    cfg = config.ExperimentConfig("bias-sweep", vals)
    p = cfg.potential()
    assert p.dim == 2 and not p.is_diagonal and cfg.seed() == 3


def test_trajectory_dump(tmp_path):
    from rlmc.potential import Potential
    from rlmc.sampler import run_constant
    from rlmc.streams import RngStreams
    run = run_constant(Potential.quadratic([1.0, 2.0]), 0.1, [1.0, 1.0], 3, RngStreams(1))
    path = tmp_path / "t.csv"
    run.to_csv(path)
    assert path.read_text().splitlines()[0] == "k,t_k,gamma_k,x_1,x_2"


CONFIG_DIR = __import__("pathlib").Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.cfg")), ids=lambda p: p.name)
def test_sample_configs_validate(path):
    from rlmc.experiments import make_config
    vals = config.load(path)
    cfg = make_config(vals["experiment"], vals)
    cfg.potential()
    cfg.schedule()
    cfg.seed()


def test_benchmark_smoke(capsys):
    import importlib.util
    spec = importlib.util.spec_from_file_location("bench", CONFIG_DIR.parent / "benchmarks" / "bench_kernels.py")
    bench = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(bench)
    bench.main(["--steps", "2000", "--repeat", "1"])
    out = capsys.readouterr().out
    assert "affine recursion" in out
