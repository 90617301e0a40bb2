import json
import math
import os
import subprocess
import sys

import numpy as np

from bamle import cone_values
from bamle.cli import main


def run_cli(args):
    return main(args)


def test_solve_cone_preset(tmp_path):
    out = tmp_path / "cone"
    code = run_cli(["solve", "--preset", "cone-1d", "--A", "1", "--beta",
                    "1", "--tolerance", "1e-14", "--output-dir", str(out)])
    assert code == 0
    field = json.loads((out / "field.json").read_text())
    grid, = _load_preset_grid()
    exact = cone_values(grid, 1.0, 1.0)
    got = np.array([field["values"][grid.ids[i]] for i in range(grid.n)])
    assert np.max(np.abs(got - exact)) < 1e-10
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "solve"
    assert (out / "field.csv").exists()


def _load_preset_grid():
    from bamle import cone_1d
    grid, _ = cone_1d(1.0, 1.0, 0.05, 10.0)
    return (grid,)


def test_solve_ray_preset(tmp_path):
    out = tmp_path / "ray"
    code = run_cli(["solve", "--preset", "counterexample-ray", "--a", "0.5",
                    "--N", "20", "--output-dir", str(out)])
    assert code == 0
    field = json.loads((out / "field.json").read_text())
    assert field["residual"] < 1e-12


def test_solve_all_terminal_echoes(tmp_path):
    doc = {"nodes": [0, 1], "edges": [[0, 1]],
           "terminal": {"0": 0.25, "1": 0.75}}
    p = tmp_path / "g.json"
    p.write_text(json.dumps(doc))
    out = tmp_path / "o"
    code = run_cli(["solve", "--input", str(p), "--beta", "1.0",
                    "--output-dir", str(out)])
    assert code == 0
    field = json.loads((out / "field.json").read_text())
    assert field["values"] == {"0": 0.25, "1": 0.75}


def test_malformed_json_exit_1(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"nodes": [1, 2,')
    code = run_cli(["solve", "--input", str(p),
                    "--output-dir", str(tmp_path / "o")])
    assert code == 1
    err = capsys.readouterr().err
    assert "line" in err and "column" in err


def test_divergence_exit_3(tmp_path):
    code = run_cli(["solve", "--preset", "path-1d", "--N", "8",
                    "--init", "const:1e9",
                    "--output-dir", str(tmp_path / "o")])
    assert code == 3


def test_iteration_cap_exit_2(tmp_path):
    code = run_cli(["solve", "--preset", "square-2d", "--N", "11",
                    "--tolerance", "1e-15", "--max-iters", "3",
                    "--output-dir", str(tmp_path / "o")])
    assert code == 2


def test_sweep_beta_monotone(tmp_path):
    out = tmp_path / "sw"
    code = run_cli(["sweep", "--preset", "square-2d", "--N", "11",
                    "--axis", "beta", "--values", "0.25,0.5,1.0",
                    "--tolerance", "1e-13", "--output-dir", str(out)])
    assert code == 0
    rows = (out / "sweep_summary.csv").read_text().strip().splitlines()
    for line in rows[2:]:
        parts = line.split(",")
        assert float(parts[5]) > -1e-9     # pointwise nondecreasing


def test_sweep_single_value_matches_solve(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert run_cli(["solve", "--preset", "path-1d", "--N", "10",
                    "--beta", "0.5", "--output-dir", str(a)]) == 0
    assert run_cli(["sweep", "--preset", "path-1d", "--N", "10",
                    "--axis", "beta", "--values", "0.5",
                    "--output-dir", str(b)]) == 0
    field = json.loads((a / "field.json").read_text())["values"]
    rows = (b / "sweep.csv").read_text().strip().splitlines()[1:]
    for row in rows:
        param, node, value = row.split(",")
        assert float(value) == field[node]


def test_sweep_epsilon_cone(tmp_path):
    out = tmp_path / "swe"
    code = run_cli(["sweep", "--preset", "cone-1d", "--A", "1.0",
                    "--beta", "1.0", "--axis", "epsilon",
                    "--values", "0.025,0.05,0.1", "--tolerance", "1e-14",
                    "--output-dir", str(out)])
    assert code == 0
    rows = (out / "sweep_summary.csv").read_text().strip().splitlines()
    for line in rows[2:]:
        assert float(line.split(",")[4]) < 1e-9    # cone exact at every eps


def test_extend_psi_cone_preset_is_cone_field(tmp_path):
    out = tmp_path / "ext"
    code = run_cli(["extend", "--preset", "cone-1d", "--A", "1.0",
                    "--beta", "1.0", "--which", "psi",
                    "--output-dir", str(out)])
    assert code == 0
    vals = json.loads((out / "extension_psi.json").read_text())["values"]
    grid, = _load_preset_grid()
    exact = cone_values(grid, 1.0, 1.0)
    got = np.array([vals[v] for v in grid.ids])
    assert np.max(np.abs(got - exact)) < 1e-10
    lam = tmp_path / "lam"
    code = run_cli(["extend", "--preset", "cone-1d", "--A", "1.0",
                    "--beta", "1.0", "--which", "lambda",
                    "--output-dir", str(lam)])
    assert code == 0
    lvals = json.loads((lam / "extension_lambda.json").read_text())["values"]
    lgot = np.array([lvals[v] for v in grid.ids])
    # cone data realizes the slope bound, so both envelopes collapse
    assert np.max(np.abs(lgot - exact)) < 1e-10


def test_simulate_three_node(tmp_path):
    out = tmp_path / "sim"
    code = run_cli(["simulate", "--preset", "path-1d", "--N", "2",
                    "--beta", str(math.log(2.0)), "--epsilon", "1.0",
                    "--start", "1", "--episodes", "30000", "--seed", "5",
                    "--output-dir", str(out)])
    assert code == 0
    stats = json.loads((out / "stats.json").read_text())
    # interior value between terminals 0 and 1 at odds 2:1 is 2/3
    assert abs(stats["mean_payoff"] - 2.0 / 3.0) <= \
        3.0 * stats["std_error"]
    csv = (out / "stats.csv").read_text().splitlines()
    assert csv[0] == "start,n,mean,se,term_rate,steps,seed"


def test_verify_cone_all_pass(tmp_path):
    out = tmp_path / "ver"
    code = run_cli(["verify", "--preset", "cone-1d", "--A", "1.0",
                    "--beta", "1.0", "--tolerance", "1e-14",
                    "--output-dir", str(out), "--no-figures"])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert all(entry["passed"] for entry in report.values())


def test_verify_emits_figure_by_default(tmp_path):
    out = tmp_path / "verfig"
    code = run_cli(["verify", "--preset", "path-1d", "--N", "10",
                    "--beta", "0.5", "--tolerance", "1e-13",
                    "--output-dir", str(out)])
    assert code == 0
    assert (out / "report.png").exists()
    assert (out / "report.csv").exists()


def test_solve_figures_flag(tmp_path):
    out = tmp_path / "fig"
    code = run_cli(["solve", "--preset", "square-2d", "--N", "11",
                    "--tolerance", "1e-12", "--figures",
                    "--output-dir", str(out)])
    assert code == 0
    assert (out / "field.png").exists()


def _run_subprocess(args, env_extra=None):
    env = dict(os.environ)
    env.update(env_extra or {})
    return subprocess.run([sys.executable, "-m", "bamle.cli"] + args,
                          capture_output=True, text=True, env=env)


def test_byte_identical_runs_any_worker_count(tmp_path):
    dirs = [tmp_path / f"d{k}" for k in range(3)]
    envs = [None, None, {"BAMLE_THREADS": "7"}]
    for d, env in zip(dirs, envs):
        r = _run_subprocess(["simulate", "--preset", "path-1d", "--N", "10",
                             "--beta", "0.5", "--start", "5",
                             "--episodes", "5000", "--seed", "11",
                             "--output-dir", str(d)], env)
        assert r.returncode == 0, r.stderr
    varying = {"wall_time_s", "argv", "inputs", "outputs"}
    ref_stats = (dirs[0] / "stats.csv").read_bytes()
    ref_manifest = json.loads((dirs[0] / "manifest.json").read_text())
    for d in dirs[1:]:
        assert (d / "stats.csv").read_bytes() == ref_stats
        man = json.loads((d / "manifest.json").read_text())
        for key in man:
            if key not in varying:
                assert man[key] == ref_manifest[key]


def test_verify_accepts_field_file(tmp_path):
    a = tmp_path / "solve"
    assert run_cli(["solve", "--preset", "path-1d", "--N", "10",
                    "--beta", "0.5", "--tolerance", "1e-14",
                    "--output-dir", str(a)]) == 0
    out = tmp_path / "ver"
    code = run_cli(["verify", "--preset", "path-1d", "--N", "10",
                    "--beta", "0.5", "--field", str(a / "field.json"),
                    "--output-dir", str(out), "--no-figures"])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert all(entry["passed"] for entry in report.values())


def test_grid_json_beta_respected(tmp_path):
    doc = {"dim": 1, "extent": [1.0], "h": 0.1, "epsilon": 0.1,
           "boundary": "linear-x", "beta": 0.7}
    p = tmp_path / "grid.json"
    p.write_text(json.dumps(doc))
    out = tmp_path / "o"
    assert run_cli(["solve", "--input", str(p),
                    "--output-dir", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["bias"]["beta"] == 0.7
    assert manifest["bias"]["epsilon"] == 0.1


def test_graph_json_end_to_end(tmp_path):
    doc = {"nodes": [0, 1, 2, 3], "edges": [[0, 1], [1, 2], [2, 3]],
           "terminal": {"0": 0.0, "3": 1.0}, "edge_length": 1.0}
    p = tmp_path / "g.json"
    p.write_text(json.dumps(doc))
    out = tmp_path / "o"
    assert run_cli(["solve", "--input", str(p), "--beta", "0.5",
                    "--tolerance", "1e-14", "--output-dir", str(out),
                    "--figures"]) == 0
    assert (out / "field.png").exists()
    field = json.loads((out / "field.json").read_text())["values"]
    from bamle import load_space, make_bias, path_closed_form
    closed = path_closed_form(3, 0.0, 1.0, make_bias(0.5, 1.0).rho)
    got = np.array([field[str(k)] for k in range(4)])
    assert np.max(np.abs(got - closed)) < 1e-10


def test_bad_threads_env_rejected():
    r = _run_subprocess(["solve", "--preset", "path-1d",
                         "--output-dir", "/tmp/bamle_na"],
                        {"BAMLE_THREADS": "zebra"})
    assert r.returncode != 0
