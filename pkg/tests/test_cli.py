"""End-to-end command-line runs (in process, via main())."""

import numpy as np
import pytest
import scipy.io

from oscgmrf import (
    Mesh,
    NoiseSpec,
    build_regular_mesh,
    interpolation_matrix,
    sample,
    synthesize_observations,
    system_precision,
    write_observation_csv,
)
from oscgmrf.cli import main
from oscgmrf.fem import assemble

from conftest import table1_model

BASE = """\
[mesh]
nx = 3
ny = 3
extent = 0 1 0 1

[model]
variant = L1
b11 = 0.5
b21 = 0.25
b22 = 1.0
h11 = 0.25
h22 = 0.36
noise1 = matern
kappa_n1 = 0.5
noise2 = oscillating
kappa_n2 = 0.6
omega2 = 0.95

[run]
seed = 5
count = 4
"""


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "run.ini").write_text(BASE)
    return tmp_path


def run(tmp_path, command, config="run.ini", **flags):
    argv = [command, "-c", str(tmp_path / config), "-o", str(tmp_path / "out")]
    for key, val in flags.items():
        argv += [f"--{key}", str(val)]
    return main(argv)


def test_mesh_command(workdir, capsys):
    assert run(workdir, "mesh") == 0
    out = capsys.readouterr().out
    assert "9 vertices" in out and "8 triangles" in out
    mesh = Mesh.load(workdir / "out" / "mesh.txt")
    assert mesh.num_vertices == 9
    assert mesh.num_triangles == 8


def test_missing_option_exits_2(workdir, capsys):
    (workdir / "bad.ini").write_text("[mesh]\nny = 3\nextent = 0 1 0 1\n")
    assert run(workdir, "mesh", config="bad.ini") == 2
    assert "'nx'" in capsys.readouterr().err


def test_build_writes_matrix_market(workdir, capsys):
    assert run(workdir, "build") == 0
    Q = scipy.io.mmread(workdir / "out" / "precision.mtx").tocsc()
    assert Q.shape == (18, 18)
    assert abs(Q - Q.T).max() == 0.0
    ref = system_precision(assemble(build_regular_mesh(3, 3, extent=(0, 1, 0, 1))),
                           table1_model()).Q
    assert abs(Q - ref).max() < 1e-15
    out = capsys.readouterr().out
    assert "x1 non-oscillating" in out
    assert "x2 oscillating" in out


def test_sample_outputs_and_reruns_are_byte_identical(workdir, capsys):
    assert run(workdir, "sample") == 0
    draws = (workdir / "out" / "draws.csv").read_bytes()
    corr = (workdir / "out" / "correlation.csv").read_bytes()
    header = draws.decode().splitlines()[0]
    assert header == "field_index,vertex,x,y,draw_0,draw_1,draw_2,draw_3"
    assert len(draws.decode().splitlines()) == 1 + 2 * 9  # both fields, all vertices

    assert run(workdir, "sample") == 0
    assert (workdir / "out" / "draws.csv").read_bytes() == draws
    assert (workdir / "out" / "correlation.csv").read_bytes() == corr

    assert run(workdir, "sample", seed=99) == 0
    assert (workdir / "out" / "draws.csv").read_bytes() != draws


def test_sample_threads_flag_changes_nothing(workdir):
    assert run(workdir, "sample") == 0
    draws = (workdir / "out" / "draws.csv").read_bytes()
    assert run(workdir, "sample", threads=2) == 0
    assert (workdir / "out" / "draws.csv").read_bytes() == draws


def test_sample_without_coupling_has_no_cross_correlation(tmp_path):
    config = BASE.replace("b21 = 0.25", "b21 = 0").replace("count = 4", "count = 400")
    (tmp_path / "run.ini").write_text(config)
    assert run(tmp_path, "sample") == 0
    rows = (tmp_path / "out" / "draws.csv").read_text().splitlines()[1:]
    table = [row.split(",") for row in rows]
    x1 = np.array([[float(v) for v in r[4:]] for r in table if r[0] == "1"])
    x2 = np.array([[float(v) for v in r[4:]] for r in table if r[0] == "2"])
    center = 4  # vertex at (0.5, 0.5) of the 3x3 grid
    r = np.corrcoef(x1[center], x2[center])[0, 1]
    assert abs(r) < 3.0 / np.sqrt(400)
    # and the binned curve reports exact zeros
    corr_rows = (tmp_path / "out" / "correlation.csv").read_text().splitlines()[1:]
    assert all(float(row.split(",")[4]) == 0.0 for row in corr_rows)


def test_corr_command_omega_zero_stays_nonnegative(tmp_path):
    config = BASE.replace("omega2 = 0.95", "omega2 = 0")
    (tmp_path / "run.ini").write_text(config)
    assert run(tmp_path, "corr") == 0
    rows = (tmp_path / "out" / "correlation.csv").read_text().splitlines()
    assert rows[0] == "distance,count,rho11,rho22,rho12"
    assert all(float(r.split(",")[3]) > -1e-10 for r in rows[1:])


def test_spectra_command(workdir):
    (workdir / "run.ini").write_text(BASE + "\n[spectra]\nk_max = 2\nk_count = 50\n")
    assert run(workdir, "spectra") == 0
    rows = (workdir / "out" / "spectra.csv").read_text().splitlines()
    assert rows[0] == "k,s11,s12,s21,s22"
    assert len(rows) == 51
    data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
    assert np.all(data[:, 1] > 0) and np.all(data[:, 4] > 0)
    np.testing.assert_array_equal(data[:, 2], data[:, 3])


FIT_MODEL = """\
[model]
variant = L1
b11 = 1.0
b21 = 0.0
b22 = 1.0
h11 = 1.0
h22 = 1.0

[observations]
file = obs.csv
noise_precision = 400

[run]
seed = 5
"""


@pytest.fixture
def fit_workdir(tmp_path):
    """A small simulated dataset a white-noise model can fit in seconds."""
    mesh = build_regular_mesh(7, 7, extent=(0.0, 6.0, 0.0, 6.0))
    truth = table1_model(
        b11=0.8, b21=0.4, b22=1.0, h11=0.6, h22=0.7,
        noise1=NoiseSpec(kind="white"), noise2=NoiseSpec(kind="white"),
    )
    x = sample(system_precision(assemble(mesh), truth), count=1, seed=2).draws[0]
    rng = np.random.default_rng(20)
    m = 80
    coords = np.column_stack([rng.uniform(0, 6, m), rng.uniform(0, 6, m)])
    fidx = np.tile([1, 2], m // 2)
    A = interpolation_matrix(mesh, coords, fidx)
    y = synthesize_observations(x, A, np.full(m, 400.0), seed=2)
    write_observation_csv(tmp_path / "obs.csv", coords, fidx, y)
    write_observation_csv(tmp_path / "targets.csv", coords[:5], fidx[:5])
    (tmp_path / "run.ini").write_text(
        "[mesh]\nnx = 7\nny = 7\nextent = 0 6 0 6\n\n" + FIT_MODEL
    )
    return tmp_path


def test_fit_command(fit_workdir, capsys):
    assert run(fit_workdir, "fit") == 0
    out = capsys.readouterr().out
    assert "converged True" in out
    rows = (fit_workdir / "out" / "fit.csv").read_text().splitlines()
    assert rows[0] == "parameter,estimate,stderr"
    names = [r.split(",")[0] for r in rows[1:]]
    assert names == ["b11", "b21", "b22", "h11", "h22"]
    for r in rows[1:]:
        _, est, sd = r.split(",")
        assert np.isfinite(float(est)) and float(sd) > 0
    # the fitted model file is itself a loadable config
    from oscgmrf import load_config

    fitted = load_config(str(fit_workdir / "out" / "fitted_model.ini")).model()
    assert fitted.operator.b21 > 0


def test_fit_with_targets_also_predicts(fit_workdir):
    cfgpath = fit_workdir / "run.ini"
    cfgpath.write_text(cfgpath.read_text() + "\n[predict]\ntargets = targets.csv\n")
    assert run(fit_workdir, "fit") == 0
    rows = (fit_workdir / "out" / "prediction.csv").read_text().splitlines()
    assert rows[0] == "field_index,x,y,mean,sd"
    assert len(rows) == 6


def test_fit_that_stops_early_exits_3(fit_workdir, capsys):
    cfgpath = fit_workdir / "run.ini"
    cfgpath.write_text(cfgpath.read_text() + "\n[fit]\nmaxiter = 1\n")
    assert run(fit_workdir, "fit") == 3
    assert "did not converge" in capsys.readouterr().err
    # outputs are still written for inspection
    assert (fit_workdir / "out" / "fit.csv").exists()


def test_predict_command(fit_workdir):
    cfgpath = fit_workdir / "run.ini"
    cfgpath.write_text(cfgpath.read_text() + "\n[predict]\ntargets = targets.csv\n")
    assert run(fit_workdir, "predict") == 0
    rows = (fit_workdir / "out" / "prediction.csv").read_text().splitlines()
    assert len(rows) == 6
    data = [r.split(",") for r in rows[1:]]
    assert all(float(sd) > 0 for *_, sd in data)


def test_predict_without_targets_exits_2(fit_workdir, capsys):
    assert run(fit_workdir, "predict") == 2
    assert "targets" in capsys.readouterr().err


def test_malformed_observation_csv_exits_2(fit_workdir, capsys):
    (fit_workdir / "obs.csv").write_text(
        "field_index,x,y,value\n1,0.5,0.5,1.0\n1,bad,0.5,1.0\n"
    )
    assert run(fit_workdir, "fit") == 2
    assert "line 3" in capsys.readouterr().err


def test_missing_observation_file_exits_2(fit_workdir, capsys):
    (fit_workdir / "obs.csv").unlink()
    assert run(fit_workdir, "fit") == 2
    assert "obs.csv" in capsys.readouterr().err


def test_observation_outside_mesh_exits_2(fit_workdir, capsys):
    (fit_workdir / "obs.csv").write_text(
        "field_index,x,y,value\n1,100,100,1.0\n"
    )
    assert run(fit_workdir, "fit") == 2
    assert "error:" in capsys.readouterr().err


def test_unwritable_output_directory_exits_4(workdir, capsys):
    blocker = workdir / "out"
    blocker.write_text("a file where the directory should go")
    assert run(workdir, "mesh") == 4
    assert "I/O error" in capsys.readouterr().err


def test_unknown_ordering_exits_2(workdir, capsys):
    (workdir / "run.ini").write_text(BASE + "ordering = fancy\n")
    assert run(workdir, "sample") == 2
    assert "fancy" in capsys.readouterr().err


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "oscgmrf" in capsys.readouterr().out
