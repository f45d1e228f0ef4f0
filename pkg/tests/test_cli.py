import json
import math

import numpy as np
import pytest

from wuwave import cli, nls, records
from wuwave.cli import ConfigError, ExperimentConfig, load_config, main, parse_config_text
from wuwave.errors import BlowupDetected
from wuwave.spectral import Grid
from wuwave.stokes import read_table
from wuwave.waterwave import WaterState

# --------------------------------------------------------------------------
# configuration


def test_defaults_are_the_desk_preset():
    cfg = ExperimentConfig().validate()
    assert (cfg.eps, cfg.q, cfg.n, cfg.dt, cfg.delta, cfg.mu) == (0.1, 10, 1024, 0.02, 0.01, 0.1)
    assert cfg.q1 == pytest.approx(1.0)
    assert cfg.sp == 11.0
    assert cfg.t_star == pytest.approx(100 * math.log(10))


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# experiment\neps = 0.05\nq = 40   # q1 = 2\n\nn = 2048\n", encoding="utf-8")
    cfg = load_config(path, ["delta=0.001", "out=somewhere"])
    assert (cfg.eps, cfg.q, cfg.n, cfg.delta, cfg.out) == (0.05, 40, 2048, 0.001, "somewhere")
    assert load_config(path, ["q=20"]).q == 20


@pytest.mark.parametrize("text", ["eps 0.1", "colour = red", "n = many"])
def test_config_parse_errors(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


@pytest.mark.parametrize("override", [
    "eps=0.3", "eps=0", "q=0", "q=5", "s=3", "n=1000", "n_env=2048", "dt=1.0", "delta=-1", "stride=0",
])
def test_config_validation(override):
    with pytest.raises(ConfigError):
        load_config(None, [override])


def test_config_error_exit_code(capsys):
    assert main(["nls", "q=5"]) == cli.EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err
    assert main(["nls", "novalue"]) == cli.EXIT_CONFIG


# --------------------------------------------------------------------------
# records


def test_csv_schema_and_exact_round_trip(tmp_path):
    rows = [{"t": 0.1, "x": 1 / 3, "k": 7}, {"t": 0.2, "x": math.pi * 1e-300, "k": -1}]
    records.write_csv(tmp_path / "a.csv", "demo", ["t", "x", "k"], rows)
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[:2] == ["# wuwave demo v1", "t,x,k"]
    schema, back = records.read_csv(tmp_path / "a.csv")
    assert schema == "# wuwave demo v1"
    assert [r["x"] for r in back] == [1 / 3, math.pi * 1e-300]


def test_checkpoint_round_trip(tmp_path):
    g = Grid(3, 48)
    rng = np.random.default_rng(5)
    state = WaterState(g, 1.25, 0.01 * (rng.normal(size=48) + 1j * rng.normal(size=48)),
                       0.01 * (rng.normal(size=48) + 1j * rng.normal(size=48)))
    records.write_checkpoint(tmp_path / "c.bin", state, 0.1)
    back, eps = records.read_checkpoint(tmp_path / "c.bin")
    assert eps == 0.1 and back.t == 1.25 and back.grid.q == 3 and back.grid.n == 48
    assert np.array_equal(back.offset, state.offset) and np.array_equal(back.u, state.u)
    blob = (tmp_path / "c.bin").read_bytes()
    assert blob.startswith(b"wuwave checkpoint v1\n")
    (tmp_path / "d.bin").write_bytes(blob[:-8])
    with pytest.raises(ValueError):
        records.read_checkpoint(tmp_path / "d.bin")


def test_manifest_hash(tmp_path):
    a = records.write_manifest(tmp_path / "a.json", "nls", {"eps": 0.1})
    b = records.write_manifest(tmp_path / "b.json", "nls", {"eps": 0.1})
    c = records.write_manifest(tmp_path / "c.json", "nls", {"eps": 0.2})
    assert a["input_hash"] == b["input_hash"] != c["input_hash"]
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_content_hash_matches_git_blob_hash():
    # `printf 'hello\n' | git hash-object --stdin`
    assert records.content_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a"


def test_json_non_finite(tmp_path):
    records.write_json(tmp_path / "s.json", {"a": float("nan"), "b": np.float64(2.0), "c": np.bool_(True)})
    assert json.loads((tmp_path / "s.json").read_text()) == {"a": "nan", "b": 2.0, "c": True}


def test_plot_is_deterministic(tmp_path):
    series = {"a": ([0, 1, 2], [1e-3, 1e-2, 1e-1]), "zero": ([0, 1, 2], [0, 0, 0])}
    records.plot_series(tmp_path / "a.svg", series, "t", "y", "demo", logy=True)
    records.plot_series(tmp_path / "b.svg", series, "t", "y", "demo", logy=True)
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    records.plot_series(tmp_path / "z.svg", {"zero": ([0, 1], [0, 0])}, "t", "y", logy=True)
    assert (tmp_path / "z.svg").read_text().lstrip().startswith("<?xml")


# --------------------------------------------------------------------------
# stokes


def test_stokes_command(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["stokes", "--eps", "0.1", "--out", str(out1)]) == cli.EXIT_PASS
    assert main(["stokes", "--eps", "0.1", "--out", str(out2)]) == cli.EXIT_PASS
    for name in ("stokes_table.txt", "stokes_expansion.txt", "eulerian.csv", "summary.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    wave = read_table(out1 / "stokes_table.txt")
    assert wave.coefficient("F", 1) == pytest.approx(0.1j, abs=1e-15)
    row = next(line for line in (out1 / "stokes_table.txt").read_text().splitlines() if line.startswith("1 "))
    assert float(row.split()[1]) == pytest.approx(0.1, abs=1e-15)
    _, harm = records.read_csv(out1 / "eulerian.csv")
    assert max(abs(r["difference"]) for r in harm) <= 5 * 0.1**4


def test_stokes_command_flat(tmp_path):
    assert main(["stokes", "--eps", "0", "--out", str(tmp_path)]) == cli.EXIT_PASS
    wave = read_table(tmp_path / "stokes_table.txt")
    assert not np.any(wave.F_hat) and not np.any(wave.G_hat)


# --------------------------------------------------------------------------
# nls


@pytest.fixture(scope="module")
def nls_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("nls")
    code = main(["nls", "nls_n=64", "delta=1e-3", f"out={out}"])
    return code, out


def test_nls_command(nls_run):
    code, out = nls_run
    summary = json.loads((out / "summary.json").read_text())
    # the literal sup ratio is ~366 under the Parseval-normalized norm
    assert code == cli.EXIT_TOLERANCE and not summary["literal_pass"]
    assert summary["normalized_pass"]
    assert summary["T0"] == pytest.approx(math.log(100))
    schema, rows = records.read_csv(out / "nls_run.csv")
    assert schema == "# wuwave nls-run v1"
    assert rows[0]["t"] == 0.0 and rows[-1]["t"] == pytest.approx(summary["T0"])
    assert (out / "nls_run.svg").stat().st_size > 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "nls" and manifest["config"]["delta"] == 1e-3


def test_nls_scan_matches_enumeration(nls_run):
    _, out = nls_run
    schema, rows = records.read_csv(out / "nls_scan.csv")
    assert schema == "# wuwave nls-scan v1"
    assert [r["q"] for r in rows] == [0.5, 0.8, 1, 1.5, 2, 3, 4]
    for r in rows:
        best = max((nls.mode_rate(k, r["q"]), k) for k in range(1, int(2 * r["q"]) + 2))
        assert r["tau"] == pytest.approx(best[0], abs=1e-14)
        if r["tau"] > 0:
            assert r["rel_err"] <= 0.01


# --------------------------------------------------------------------------
# water-wave commands


def test_unperturbed_instability_run(tmp_path):
    """delta = 0: the run stays on the Stokes family."""
    code = main(["instability", "n=256", "dt=0.025", "t_end=50", "delta=0", "stride=250",
                 "checkpoint_stride=1000", "family_resolution=21", f"out={tmp_path}"])
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert code == cli.EXIT_TOLERANCE  # t* is infinite, so the distance criterion cannot pass
    assert not summary["aborted"] and summary["admissibility"]["passed"]
    _, rows = records.read_csv(tmp_path / "timeseries.csv")
    assert [r["t"] for r in rows] == pytest.approx([0.0, 6.25, 12.5, 18.75, 25, 31.25, 37.5, 43.75, 50])
    assert max(r["family_distance"] for r in rows) <= 1e-6
    assert max(r["holo_zeta"] for r in rows) <= 1e-6 * math.sqrt(10)
    assert (tmp_path / "timeseries.csv").read_text().splitlines()[1].split(",") == cli.Diagnostics.COLUMNS
    names = sorted(p.name for p in (tmp_path / "checkpoints").iterdir())
    assert names == ["step0000000.bin", "step0001000.bin", "step0002000.bin"]
    last, eps = records.read_checkpoint(tmp_path / "checkpoints" / "step0002000.bin")
    assert eps == 0.1 and last.t == pytest.approx(50.0)
    for key in ("initial_distance", "final_distance", "fitted_sideband_rate", "expected_rate"):
        assert key in summary
    assert summary["expected_rate"] == pytest.approx(0.01)


def test_instability_abort_keeps_partial_output(tmp_path, monkeypatch):
    def exploding(state, t_end, dt, observers=(), every=1):
        for ob in observers:
            ob(state, 0)
        raise BlowupDetected("chord-arc lost", t=3.0)

    monkeypatch.setattr(cli, "evolve", exploding)
    code = main(["instability", "n=256", "dt=0.025", "t_end=10", "family_resolution=21", f"out={tmp_path}"])
    assert code == cli.EXIT_ABORT
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["aborted"] and summary["abort_time"] == 3.0
    _, rows = records.read_csv(tmp_path / "timeseries.csv")
    assert len(rows) == 1
    assert (tmp_path / "checkpoints" / "step0000000.bin").exists()


def test_compare_command(tmp_path):
    code = main(["compare", "n=256", "compare_eps=0.05,0.1", "compare_t_end=0", f"out={tmp_path}"])
    schema, rows = records.read_csv(tmp_path / "compare.csv")
    assert schema == "# wuwave compare v1"
    assert (tmp_path / "compare.csv").read_text().splitlines()[1] == "eps,t,Es_sqrt,bound,ratio"
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["bound_pass"]
    slope = cli.scaling_slope([0.05, 0.1], [r["Es_sqrt"] for r in rows])
    assert summary["slope"] == pytest.approx(slope)
    assert code == (cli.EXIT_PASS if summary["slope_pass"] else cli.EXIT_TOLERANCE)


def test_scaling_slope():
    assert cli.scaling_slope([0.05, 0.1], [0.05**1.5, 0.1**1.5]) == pytest.approx(1.5)


def test_sweep(tmp_path):
    code = main(["sweep", "nls", "--param", "delta", "--values", "1e-3,1e-4", "nls_n=64",
                 "scan_qs=1", f"out={tmp_path}"])
    assert code == cli.EXIT_TOLERANCE
    for v in ("1e-3", "1e-4"):
        summary = json.loads((tmp_path / f"delta={v}" / "summary.json").read_text())
        assert summary["delta"] == float(v)


def test_sweep_rejects_bad_values(tmp_path):
    assert main(["sweep", "nls", "--param", "q", "--values", "10,5", f"out={tmp_path}"]) == cli.EXIT_CONFIG
