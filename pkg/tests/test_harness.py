import numpy as np
import pytest

from epflow.eos import ALUMINIUM, COPPER
from epflow.errors import ConfigError, DomainMismatch
from epflow.integrator import ConservedCell
from epflow.harness import analysis, cli, problems
from epflow.harness import problem_accuracy, problem_piston, problem_wilkins, run, run_many
from epflow.harness.analysis import Reference, error_norms, observed_orders, reference_solution
from epflow.harness.output import read_csv, write_report


@pytest.fixture(autouse=True)
def private_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("EPFLOW_CACHE", str(tmp_path / "cache"))


def test_accuracy_setup():
    cfg = problem_accuracy()
    m = cfg.material
    assert (m.gamma0, m.hugoniot_slope_s, m.a0) == (2.0, 1.49, 3940.0)
    assert (m.shear_mu, m.yield_Y0) == (4.5e9, 90e9)
    assert cfg.boundary.periodic and cfg.t_final == 1.0 and cfg.domain == (0.0, 1.0)
    st = cfg.replace(n_cells=64).initial_state()
    assert st.totals()[0] == pytest.approx(m.rho0, rel=1e-14)
    rho, u, p, s = st.primitives(m)
    # pressure from averaged conserved variables: close to 2 Pa, not exact
    assert np.all(np.abs(p - 2.0) < 0.05) and np.all(s == 0)


def test_accuracy_stays_elastic():
    cfg = problem_accuracy(n_cells=40, t_final=2e-4)
    rep = run(cfg, trajectory_every=0)
    assert np.abs(rep.state.sxx).max() < 1e-3 * cfg.material.yield_limit


def test_piston_and_wilkins_setups():
    cfg = problem_piston()
    assert cfg.material == COPPER and cfg.t_final == 150e-6
    assert (cfg.boundary.left.kind, cfg.boundary.left.velocity) == ("piston", 20.0)
    assert cfg.boundary.right.kind == "wall"
    w = problem_wilkins()
    m = w.material
    assert m == ALUMINIUM
    assert (m.rho0, m.a0, m.gamma0, m.hugoniot_slope_s, m.shear_mu, m.yield_Y0) == \
        (2785.0, 5328.0, 2.0, 1.338, 27.6e9, 300e6)
    assert (w.boundary.left.kind, w.boundary.right.kind) == ("free", "wall")
    st = w.replace(n_cells=100).initial_state()
    _, u, p, _ = st.primitives(m)
    assert np.all(u[:10] == pytest.approx(800.0)) and np.all(u[10:] == 0.0)
    assert p[0] == pytest.approx(1e-6, abs=1e-4)


def test_config_validation():
    with pytest.raises(ConfigError):
        problem_piston(n_cells=4)
    with pytest.raises(ConfigError):
        problem_piston(t_final=0.0)
    with pytest.raises(ConfigError):
        problems.build_problem("sod")
    with pytest.raises(ConfigError):
        problems.build_problem("piston", bogus=1)


def test_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# piston variant\nproblem = piston\ncells = 32\nY0 = 1e8  # stronger\n"
                    "left = piston:10\nmode=ccl\n")
    cfg = problems.resolve_problem(str(path), t_final=1e-5)
    assert cfg.n_cells == 32 and cfg.mode == "ccl" and cfg.t_final == 1e-5
    assert cfg.material.yield_Y0 == 1e8 and cfg.boundary.left.velocity == 10.0
    with pytest.raises(ConfigError):
        problems.parse_config_text("cells 32")
    with pytest.raises(ConfigError):
        problems.resolve_problem(str(tmp_path / "missing.cfg"))
    path.write_text("cells = 32\n")
    with pytest.raises(ConfigError):
        problems.resolve_problem(str(path))


def test_run_snaps_and_records():
    cfg = problem_piston(n_cells=30, t_final=7.3e-6)
    rep = run(cfg, trajectory_every=3)
    assert rep.t_final == 7.3e-6
    assert rep.dt.sum() == pytest.approx(7.3e-6, rel=1e-12)
    assert np.all(np.diff(rep.trajectory_t) > 0)
    assert np.all(np.diff(rep.trajectory, axis=1) > 0)
    assert rep.trajectory_t[-1] == rep.t_final
    assert rep.conservation.shape == (rep.steps + 1, 5)
    assert rep.max_drift() < 1e-12
    assert rep.mesh_tangled == 0


def test_periodic_run_drift():
    rep = run(problem_accuracy(n_cells=50, t_final=1e-4), trajectory_every=0)
    assert rep.max_drift() <= 1e-11
    assert rep.trajectory.shape[0] == 2


def test_runs_are_deterministic():
    cfg = problem_wilkins(n_cells=40, t_final=1e-6)
    a, b = run(cfg), run(cfg)
    assert np.array_equal(a.state.U, b.state.U) and np.array_equal(a.state.nodes, b.state.nodes)


def test_error_norm_examples():
    rep = run(problem_piston(n_cells=20, t_final=5e-6), trajectory_every=0)
    ref = analysis.reference_from_state(rep.state)
    scale = np.abs(np.vstack([rep.state.U, rep.state.sxx])).max(axis=1)
    l1, l2 = error_norms(rep, ref, "center")
    assert np.all(l1 == 0) and np.all(l2 == 0)
    l1, _ = error_norms(rep, ref, "average")
    assert np.all(l1 <= 1e-14 * scale)
    nodes = np.linspace(0.0, 1.0, 11)
    vals = np.vstack([np.full(10, 5.0), np.zeros(10), np.ones(10), np.zeros(10)])
    shifted = Reference(nodes, vals + np.array([[0.25], [0], [0], [0]]))
    st_like = ConservedCell(nodes, vals[:3], vals[3])
    for sample in ("center", "average"):
        l1, l2 = error_norms(st_like, shifted, sample)
        assert l1[0] == pytest.approx(0.25) and l2[0] == pytest.approx(0.25)
        assert np.all(np.abs(l1[1:]) < 1e-12)
    with pytest.raises(DomainMismatch):
        error_norms(st_like, Reference(nodes * 2, vals))


def test_average_sampling_is_exact_for_cubic_cumulative():
    nodes = np.linspace(0.0, 1.0, 41)
    v = np.diff(nodes ** 3) / np.diff(nodes)          # averages of 3x^2
    ref = Reference(nodes, np.vstack([v] * 4))
    q = np.linspace(0.1, 0.9, 17)
    got = ref.averages(q)[0]
    np.testing.assert_allclose(got, np.diff(q ** 3) / np.diff(q), rtol=1e-12)


def test_orders_and_nan_sentinel():
    errs = np.array([[4e-3, 1.0], [5e-4, 1.0]])
    o = observed_orders(errs, [100, 200])
    assert np.isnan(o[0]).all()
    assert o[1, 0] == pytest.approx(3.0) and o[1, 1] == 0.0
    o = observed_orders(np.array([[0.0], [0.0]]), [100, 200])
    assert np.isnan(o[1, 0])
    tab = analysis.ConvergenceTable([100, 200], np.array([[1e-3] * 4, [0.0] * 4]),
                                    np.zeros((2, 4)), [0, 0])
    assert "nan" in analysis.format_table(tab)


def test_reference_uses_ccl_and_is_cached(tmp_path):
    cfg = problem_piston(n_cells=20, t_final=5e-6, mode="mmcc")
    ref = reference_solution(cfg, n_ref=40)
    direct = run(cfg.replace(n_cells=40, mode="ccl"), trajectory_every=0)
    np.testing.assert_array_equal(ref.nodes, direct.state.nodes)
    files = list((tmp_path / "cache").iterdir())
    assert len(files) == 1
    again = reference_solution(cfg, n_ref=40)
    np.testing.assert_array_equal(again.values, ref.values)


def test_reference_self_consistency():
    cfg = problem_piston(t_final=40e-6)
    fine = reference_solution(cfg, n_ref=1600, cache=False)
    half = reference_solution(cfg, n_ref=800, cache=False)
    prod = run(cfg.replace(n_cells=200), trajectory_every=0)
    gap = _gap(half, fine)
    assert np.all(gap < error_norms(prod, fine)[0])


def _gap(coarse, fine):
    h = np.diff(coarse.nodes)
    err = coarse.values - fine.at(coarse.centers)
    return np.abs(err) @ h


def test_run_many_parallel_matches_serial(monkeypatch):
    cfgs = [problem_piston(n_cells=n, t_final=3e-6) for n in (20, 30)]
    monkeypatch.setenv("EPFLOW_WORKERS", "1")
    serial = run_many(cfgs)
    monkeypatch.setenv("EPFLOW_WORKERS", "2")
    par = run_many(cfgs)
    for a, b in zip(serial, par):
        np.testing.assert_array_equal(a.state.U, b.state.U)


def test_csv_output(tmp_path):
    rep = run(problem_piston(n_cells=16, t_final=4e-6), trajectory_every=1)
    paths = write_report(rep, tmp_path / "out")
    names = {p.rsplit("/", 1)[-1] for p in map(str, paths)}
    assert {"density.csv", "velocity.csv", "pressure.csv", "sxx.csv", "energy.csv",
            "trajectory.csv", "conservation.csv", "steps.csv"} <= names
    head, data = read_csv(tmp_path / "out" / "density.csv")
    assert head == ["x_center [m]", "dx [m]", "rho [kg/m^3]"]
    np.testing.assert_array_equal(data[:, 2], rep.state.U[0])
    head, data = read_csv(tmp_path / "out" / "trajectory.csv")
    assert head[0] == "t [s]" and data.shape == (rep.steps + 1, 18)
    assert np.all(np.diff(data[:, 0]) > 0) and np.all(np.diff(data[:, 1:], axis=1) > 0)
    head, data = read_csv(tmp_path / "out" / "conservation.csv")
    assert head[:4] == ["t [s]", "mass [kg/m^2]", "momentum [kg/(m s)]", "energy [J/m^2]"]


def test_cli_exit_codes(tmp_path, capsys):
    out = tmp_path / "o"
    code = cli.main(["run", "--problem", "piston", "--cells", "16", "--t-final", "3e-6",
                     "--out", str(out)])
    assert code == 0 and (out / "density.csv").exists()
    assert cli.main(["run", "--problem", "nosuch", "--out", str(out)]) == 2
    assert cli.main(["run", "--problem", "piston", "--set", "cfl=3", "--out", str(out)]) == 2
    code = cli.main(["run", "--problem", "piston", "--cells", "20", "--t-final", "2e-5",
                     "--set", "left=piston:50000", "--out", str(out)])
    assert code == 3
    err = capsys.readouterr().err
    assert "MeshTangled" in err and "step 0" in err
    with pytest.raises(SystemExit):
        cli.main(["converge", "--problem", "piston", "--cells", "a,b"])


def test_cli_converge_and_compare(tmp_path, capsys):
    code = cli.main(["converge", "--problem", "piston", "--cells", "16,32", "--t-final", "5e-6",
                     "--n-ref", "128", "--out", str(tmp_path), "--sample", "average"])
    assert code == 0
    text = capsys.readouterr().out
    assert "L1 error" in text and "L2 error" in text
    rows = (tmp_path / "piston-l1.csv").read_text().splitlines()
    assert rows[0].startswith("N,l1_rho,order_rho") and rows[1].split(",")[2] == "nan"
    code = cli.main(["compare", "--problem", "piston", "--cells", "16", "--t-final", "5e-6",
                     "--n-ref", "128"])
    assert code == 0 and "MMCC L1(rho) <= CCL L1(rho)" in capsys.readouterr().out
