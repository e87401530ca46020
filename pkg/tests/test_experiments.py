"""Config parsing and the experiment harness: defaults, determinism and
output formats."""

import numpy as np
import pytest

from smsfem import experiments
from smsfem.experiments import (ConfigError, ExperimentConfig,
                                config_from_mapping, mild_random_grid,
                                parse_config, run, write_csv,
                                write_plot_data)
from smsfem.meshes import tensor_triangulation


def test_parse_config_accumulates_and_strips(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("experiment = ex4   # trailing comment\n"
                    "\n"
                    "# full-line comment\n"
                    "N = 8\n"
                    "N = 16\n"
                    "method=sms-galerkin\n")
    raw = parse_config(str(path))
    assert raw["experiment"] == ["ex4"]
    assert raw["N"] == ["8", "16"]
    assert raw["method"] == ["sms-galerkin"]


def test_parse_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("just a line without equals\n")
    with pytest.raises(ConfigError):
        parse_config(str(bad))
    with pytest.raises(ConfigError):
        parse_config(str(tmp_path / "missing.cfg"))


def test_config_defaults_and_validation():
    cfg = ExperimentConfig(experiment="ex4")
    assert cfg.N == [20, 64]
    assert cfg.methods == ["supg", "sms-galerkin", "sms-supg"]
    assert cfg.eps == [1e-8]
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="ex99")
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="ex4", methods=["multigrid"])
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="ex4", eps=[-1.0])
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="ex4", scale="poster")


def test_config_paper_scale_overrides():
    cfg = ExperimentConfig(experiment="ex3", scale="paper")
    assert cfg.grids == 200
    assert cfg.N == [80]


def test_config_from_mapping_overrides():
    raw = {"experiment": ["ex4"], "N": ["8"], "seed": ["7"],
           "out": ["filedir"], "snap_rule": ["nearest"]}
    cfg = config_from_mapping(raw, out="clidir", seed=3)
    assert cfg.experiment == "ex4"
    assert cfg.N == [8]
    assert cfg.seed == 3          # CLI beats the file entry
    assert cfg.out == "clidir"
    assert cfg.options == {"snap_rule": "nearest"}
    with pytest.raises(ConfigError):
        config_from_mapping({})
    with pytest.raises(ConfigError):
        config_from_mapping({"experiment": ["ex4"], "seed": ["1", "2"]})
    with pytest.raises(ConfigError):
        config_from_mapping({"experiment": ["ex4"], "N": ["eight"]})


def test_write_csv_and_plot_data(tmp_path):
    p = tmp_path / "t.csv"
    write_csv(str(p), ["a", "b"], [("x", 0.5), ("y", 2.0)], ["seed = 0"])
    lines = p.read_text().splitlines()
    assert lines[0] == "# seed = 0"
    assert lines[1] == "a,b"
    assert lines[2] == "x,%.16e" % 0.5
    d = tmp_path / "t.dat"
    write_plot_data(str(d), [(1.0, 2.0), (3.0, 4.0)])
    rows = d.read_text().splitlines()
    assert rows[0] == "%.16e %.16e" % (1.0, 2.0)


def test_mild_random_grid_freezes_outflow_strip():
    N, b = 10, np.array([2.0, 3.0])
    mesh = mild_random_grid(N, b, seed=4)
    h = 1.0 / N
    lines = np.concatenate([np.linspace(0.0, 1.0 - h, N), [1.0]])
    base = tensor_triangulation(lines, lines)
    assert mesh.n_nodes == base.n_nodes
    strip = [(base.nodes[v][0] >= 1.0 - h - 1e-12)
             or (base.nodes[v][1] >= 1.0 - h - 1e-12)
             for v in range(base.n_nodes)]
    for v in range(base.n_nodes):
        if strip[v]:
            assert np.array_equal(mesh.nodes[v], base.nodes[v])
    moved = [v for v in range(base.n_nodes)
             if not np.array_equal(mesh.nodes[v], base.nodes[v])]
    assert moved
    assert np.all(mesh.areas() > 0)


def test_safe_decomposition_clean_mesh_identity():
    from smsfem.meshes import structured_triangulation
    m = structured_triangulation(5, 5)
    out, dec = experiments._safe_decomposition(m, np.array([1.0, 1.0]))
    assert out is m
    assert dec.n_delta


def test_run_ex4_deterministic_output(tmp_path):
    files = {}
    for tag in ("a", "b"):
        cfg = ExperimentConfig(experiment="ex4", N=[8],
                               methods=["sms-galerkin"],
                               out=str(tmp_path / tag))
        out = run(cfg)
        files[tag] = out
    text_a = open(files["a"][0]).read()
    text_b = open(files["b"][0]).read()
    assert "wall_time" not in text_a
    assert text_a == text_b
    header = [l for l in text_a.splitlines() if not l.startswith("#")][0]
    assert header == "method,N,eps,osc,smear"


def test_run_random_study_zero_grids(tmp_path):
    cfg = ExperimentConfig(experiment="ex3", grids=0, N=[8],
                           methods=["supg", "sms-galerkin"],
                           out=str(tmp_path))
    paths = run(cfg)
    grid_rows = [l for l in open(paths[0]).read().splitlines()
                 if not l.startswith("#")]
    assert grid_rows == ["grid,grid_seed,method,conv_residual_l2"]
    summary = [l for l in open(paths[1]).read().splitlines()
               if not l.startswith("#")]
    assert summary[0] == "method,mean_error,mean_ratio_supg"
    assert "nan" in summary[1]


def test_same_grid_requires_tabulated_crosswind(tmp_path):
    cfg = ExperimentConfig(experiment="ex2", N=[15], methods=["supg"],
                           out=str(tmp_path))
    with pytest.raises(ConfigError):
        run(cfg)


def test_same_grid_crosswind_override(tmp_path):
    cfg = ExperimentConfig(experiment="ex2", N=[15], methods=["supg"],
                           eps=[1e-4], out=str(tmp_path),
                           options={"delta_c": ["15:0.8"],
                                    "delta_multiplier": ["15:1.6"]})
    paths = run(cfg)
    rows = [l for l in open(paths[0]).read().splitlines()
            if not l.startswith("#")]
    assert rows[0] == "method,N,eps,linf_interior"
    assert rows[1].startswith("supg,15,")
