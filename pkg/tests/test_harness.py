import numpy as np
import pytest

from vmlaser import cli
from vmlaser.harness import RunConfig, builtin_f0, parse_config, run
from vmlaser.numerics import trapezoid
from vmlaser.phase_space import NR, QR, PhaseGrid

MINIMAL = """
# smoke configuration
model = qr
L = 6.283185307179586
p_max = 8
nx = 32
np = 65
nt_per_window = 8
window_length = 0.5
t_end = 0.5
tol_fp = 1e-7
max_iters = 40
f0 = uniform_maxwellian(0)
n_ext = uniform(0)
A0 = 1, 1
Adot0 = 0, 1
sigma = maxwellian
output_dir = out
"""


def _cfg(**overrides):
    cfg = parse_config(MINIMAL)
    for k, v in overrides.items():
        setattr(cfg, k, v)
    return cfg


def test_parse_minimal_and_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.model == "qr"
    assert cfg.np_ == 65
    assert cfg.snapshot_stride == 8  # optional key defaulted


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ValueError, match="line 4: unknown key 'banana'"):
        parse_config("model = qr\n\n\nbanana = 3\n")
    with pytest.raises(ValueError, match="duplicate key 'model'"):
        parse_config("model = qr\nmodel = nr\n")
    with pytest.raises(ValueError, match="missing mandatory"):
        parse_config("model = qr\n")
    with pytest.raises(ValueError, match="expected 'key = value'"):
        parse_config("just words\n")


def test_validation_rules():
    with pytest.raises(ValueError, match="np must be odd"):
        parse_config(MINIMAL.replace("np = 65", "np = 64"))
    with pytest.raises(ValueError, match="FR evolution unsupported"):
        parse_config(MINIMAL.replace("model = qr", "model = fr"))
    with pytest.raises(ValueError, match="model must be"):
        parse_config(MINIMAL.replace("model = qr", "model = quantum"))
    with pytest.raises(ValueError, match="integer multiple"):
        parse_config(MINIMAL.replace("t_end = 0.5", "t_end = 0.8"))
    with pytest.raises(ValueError):
        parse_config(MINIMAL.replace("f0 = uniform_maxwellian(0)",
                                     "f0 = uniform_maxwellian(1, 2)"))


def test_serialize_round_trip():
    cfg = parse_config(MINIMAL)
    again = parse_config(cfg.serialize())
    assert again == cfg
    assert again.sha256() == cfg.sha256()


def test_builtin_f0_profiles():
    g = PhaseGrid(2 * np.pi, 16, 8.0, 129)
    f0, info = builtin_f0("uniform_maxwellian(1)", g, NR)
    expect = np.exp(-0.5 * g.p ** 2) / np.sqrt(2 * np.pi)
    assert np.abs(f0.values - expect[None, :]).max() < 1e-15
    assert info["M0"] > 0 and info["M2"] > 0
    f0, _ = builtin_f0("modulated_maxwellian(1, 0.1, 2)", g, QR)
    n0 = trapezoid(f0.values, g.dp, axis=1)
    assert np.abs(n0 - (1 + 0.1 * np.cos(2 * g.x))).max() < 1e-12
    f0, _ = builtin_f0("two_stream(1, 2.0, 0.05, 1)", g, NR)
    assert np.all(f0.values >= 0)
    with pytest.raises(ValueError):
        builtin_f0("modulated_maxwellian(1, 2.0, 1)", g, NR)  # negative f0


def test_run_vacuum_outputs(tmp_path):
    cfg = _cfg(output_dir=str(tmp_path / "out"))
    assert run(cfg) == 0
    out = tmp_path / "out"
    diag = (out / "diagnostics.csv").read_text().splitlines()
    assert diag[0].startswith("t,mass,WT,")
    assert len(diag) == 1 + 9  # header + nt_per_window + 1 slices
    manifest = (out / "manifest.txt").read_text()
    assert "converged: yes" in manifest
    assert "sentinel_warn: no" in manifest
    assert f"config_sha256: {cfg.sha256()}" in manifest
    # snapshot round-trip
    snap = np.fromfile(out / "f_t000000.bin", dtype="<f8")
    assert snap.shape == (cfg.nx * cfg.np_,)
    assert np.all(snap == 0.0)
    trace = (out / "iteration_trace.csv").read_text().splitlines()
    assert trace[0] == "window,k,dE,dA,dxA_delta,dF,sup_dxxA,sup_dxF"
    assert len(trace) > 1


def test_run_outputs_deterministic(tmp_path):
    cfg1 = _cfg(f0="modulated_maxwellian(1, 0.1, 1)", n_ext="uniform(1)",
                A0="0.1, 1", output_dir=str(tmp_path / "a"))
    cfg2 = _cfg(f0="modulated_maxwellian(1, 0.1, 1)", n_ext="uniform(1)",
                A0="0.1, 1", output_dir=str(tmp_path / "b"))
    assert run(cfg1) == 0
    assert run(cfg2) == 0
    for name in ("diagnostics.csv", "iteration_trace.csv", "f_t000000.bin",
                 "f_t000008.bin"):
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes()


def test_run_nonconvergence_flagged(tmp_path):
    cfg = _cfg(f0="modulated_maxwellian(1, 0.1, 1)", n_ext="uniform(1)",
               A0="0.1, 1", tol_fp=1e-30, max_iters=3,
               output_dir=str(tmp_path / "out"))
    assert run(cfg) == 2
    manifest = (tmp_path / "out" / "manifest.txt").read_text()
    assert "converged: no" in manifest
    assert (tmp_path / "out" / "iteration_trace.csv").exists()


def test_cli_simulate_and_out_override(tmp_path):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(MINIMAL.replace("output_dir = out",
                                        f"output_dir = {tmp_path / 'ignored'}"))
    out = tmp_path / "real"
    status = cli.main(["simulate", "--config", str(cfg_path),
                       "--out", str(out)])
    assert status == 0
    assert (out / "manifest.txt").exists()


def test_cli_equilibrium(tmp_path):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(MINIMAL
                        .replace("n_ext = uniform(0)", "n_ext = uniform(1)")
                        .replace("output_dir = out",
                                 f"output_dir = {tmp_path / 'eq'}"))
    assert cli.main(["equilibrium", "--config", str(cfg_path)]) == 0
    text = (tmp_path / "eq" / "equilibrium.txt").read_text()
    assert "alpha:" in text and "poisson_residual:" in text
    vals = np.fromfile(tmp_path / "eq" / "equilibrium.bin", dtype="<f8")
    assert vals.shape == (32 * 65,)
    assert np.all(vals >= 0)


def test_cli_stability_fills_reference_columns(tmp_path):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(MINIMAL
                        .replace("model = qr", "model = nr")
                        .replace("n_ext = uniform(0)", "n_ext = uniform(1)")
                        .replace("A0 = 1, 1", "A0 = 0, 1")
                        .replace("output_dir = out",
                                 f"output_dir = {tmp_path / 'st'}"))
    status = cli.main(["stability", "--config", str(cfg_path),
                       "--eps", "0.01", "--mode", "1"])
    assert status == 0
    lines = (tmp_path / "st" / "diagnostics.csv").read_text().splitlines()
    header = lines[0].split(",")
    first = lines[1].split(",")
    for col in ("relative_entropy", "l1_dist", "l2_dist", "h1_phi_dist"):
        assert first[header.index(col)] != ""
    rel0 = float(first[header.index("relative_entropy")])
    assert rel0 > 0


def test_cli_appendix_b(capsys):
    assert cli.main(["appendix-b", "--alpha", "1", "--beta", "1",
                     "--t", "0.1"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("alpha,beta,t,T1,")
    cells = out[1].split(",")
    assert float(cells[3]) == pytest.approx(0.5196301715066209, abs=1e-9)
    assert float(cells[5]) == pytest.approx(1.1236600402992667, abs=1e-8)


def test_cli_wave_check(capsys):
    assert cli.main(["wave-check", "--nx", "32", "--nt", "32"]) == 0
    out = capsys.readouterr().out
    free = float(out.split("free_wave_max_error:")[1].split()[0])
    assert free < 1e-13
