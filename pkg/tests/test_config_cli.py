import json
import math
import subprocess
import sys

import pytest

from zenoqst.cli import RunReport, cmd_qst, cmd_sweep, cmd_zeno, main, sweep_point
from zenoqst.config import ConfigError, SweepAxis, load_config, load_preset, parse_config, preset_names

TINY_SWEEP = """
[couplings]
omega = 0.1
[sweep]
axis1 = kappa/g
axis1_range = 0, 0.1, 2
axis2 = Gamma/g
axis2_range = 0, 0.1, 3
"""


def test_presets_parse():
    assert set(preset_names()) >= {"fig4", "fig5", "fig6", "cesium", "qst", "qss", "network"}
    for name in preset_names():
        load_preset(name)
    with pytest.raises(ConfigError):
        load_preset("nope")


def test_preset_grids():
    fig4 = load_preset("fig4").sweep
    assert (fig4.axis1.name, fig4.axis2.name) == ("lambda/g", "Omega/g")
    assert fig4.axis1.points == fig4.axis2.points == 21
    assert fig4.axis1.values()[0] == pytest.approx(0.1)
    fig5 = load_preset("fig5").sweep
    assert {fig5.axis1.name, fig5.axis2.name} == {"kappa/g", "Gamma/g"}
    fig6 = load_preset("fig6").sweep
    assert {fig6.axis1.name, fig6.axis2.name} == {"kappa/g", "kappa_f/lambda"}


def test_cesium_preset_values():
    cfg = load_preset("cesium")
    assert cfg.kappa == pytest.approx(3.5 / 750)
    assert cfg.gamma == pytest.approx(2.62 / 750)
    assert cfg.kappa_f == pytest.approx(0.152 / (2 * math.pi * 750))
    assert cfg.omega == pytest.approx(0.1)
    assert cfg.lam == 1.0


def test_config_parsing():
    cfg = parse_config(
        """
        [couplings]
        omega = 0.05   # drive
        lambda = 0.5
        [noise]
        kappa_f_over_lambda = 0.1
        [protocol]
        qubit = 0.6, 0.8j
        [integrator]
        method = rk4
        rk4_step = 0.01
        """
    )
    assert cfg.kappa_f == pytest.approx(0.05)
    assert cfg.protocol["qubit"] == (0.6, 0.8j)
    assert cfg.settings.method == "rk4"
    assert cfg.parameters()["kappa_f/lambda"] == pytest.approx(0.1)
    assert any(line.startswith("protocol.qubit") for line in cfg.echo())


@pytest.mark.parametrize(
    "text",
    [
        "[couplings]\nbogus = 1\n",
        "[mystery]\nx = 1\n",
        "[couplings]\nomega = fast\n",
        "[couplings]\nomega = -0.1\n",
        "[couplings]\ng = 2\n",
        "[noise]\nkappa = -1\n",
        "[noise]\nkappa_f = 0.1\nkappa_f_over_lambda = 0.1\n",
        "[protocol]\nqubit = 1, 1\n",
        "[system]\nphoton_cutoff = 0\n",
        "[sweep]\naxis1 = kappa/g\n",
        "[sweep]\naxis1 = x\naxis1_range = 0,1,3\naxis2 = Omega/g\naxis2_range = 0,1,3\n",
        "[integrator]\nmethod = euler\n",
        "[fiber]\nlength_m = 1\n",
        "not an ini file",
    ],
)
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_sweep_axis_rules():
    with pytest.raises(ConfigError):
        SweepAxis("kappa/g", 0.1, 0.0, 3)
    with pytest.raises(ConfigError):
        SweepAxis("kappa/g", 0.0, 0.1, 1)
    grid = parse_config(TINY_SWEEP).sweep
    pts = grid.points()
    assert len(pts) == 6
    assert [p["kappa/g"] for p in pts[:3]] == [0, 0, 0]
    assert [p["Gamma/g"] for p in pts[:3]] == [0, 0.05, 0.1]
    assert pts[0]["Omega/g"] == 0.1


def test_sweep_point_errors_are_recorded():
    base = {"lambda/g": 1.0, "Omega/g": 0.1, "kappa/g": 0.0, "Gamma/g": 0.0, "kappa_f/lambda": 0.0}
    fid, err = sweep_point(base)
    assert err == "" and fid == pytest.approx(0.99544, abs=1e-4)
    fid, err = sweep_point(dict(base, **{"Omega/g": 0.0}))
    assert fid is None and err == "E_VALUE"


def test_sweep_csv_deterministic_across_workers():
    cfg = parse_config(TINY_SWEEP, source="tiny.ini")
    one = cmd_sweep(cfg, workers=1)
    two = cmd_sweep(cfg, workers=2)
    assert one == two
    lines = one.splitlines()
    header = [x for x in lines if x.startswith("#")]
    assert any("source = tiny.ini" in x for x in header)
    body = [x for x in lines if not x.startswith("#")]
    assert body[0] == "kappa/g,Gamma/g,fidelity,error"
    assert len(body) == 7
    first = body[1].split(",")
    assert first[:2] == ["0", "0"] and float(first[2]) == pytest.approx(0.99544, abs=1e-4) and first[3] == ""


def test_sweep_without_grid():
    with pytest.raises(ConfigError):
        cmd_sweep(parse_config("[couplings]\nomega = 0.1\n"))


def test_strict_gates():
    hot = parse_config("[couplings]\nomega = 0.5\n")
    report = cmd_qst(hot)
    assert any("Zeno ratio" in w for w in report.warnings)
    with pytest.raises(ConfigError):
        cmd_qst(hot, strict=True)
    long_fiber = parse_config("[fiber]\nlength_m = 1000\nbandwidth_rad_s = 1e9\n")
    with pytest.raises(ConfigError):
        cmd_qst(long_fiber, strict=True)


def test_zeno_report():
    text = cmd_zeno(parse_config("[couplings]\nomega = 0.1\n"))
    assert "0.05774" in text
    assert "  +0.000000000000  3" in text


def test_report_serialisation():
    report = cmd_qst(load_preset("cesium"))
    data = json.loads(report.to_json())
    assert data["fidelity"] == pytest.approx(0.9754, abs=0.01)
    assert "fidelity:" in report.to_text()
    assert isinstance(report, RunReport)


def test_main_exit_codes(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["qst", "--preset", "cesium", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["command"] == "qst"
    assert main(["qst", "--config", str(tmp_path / "missing.ini")]) == 1
    bad = tmp_path / "bad.ini"
    bad.write_text("[couplings]\nomega = 0.5\n")
    assert main(["qst", "--config", str(bad), "--strict"]) == 1
    assert main(["qst", "--config", str(bad)]) == 0
    assert main(["sweep", "--preset", "qst"]) == 1
    assert main(["qst", "--workers", "0"]) == 1
    assert "config error" in capsys.readouterr().err


def test_main_numeric_failure(monkeypatch):
    import zenoqst.cli as cli
    from zenoqst.dynamics import IntegrationError

    def boom(*_a, **_k):
        raise IntegrationError("diverged")

    monkeypatch.setattr(cli, "cmd_qst", boom)
    assert main(["qst"]) == 2


def test_main_sweep_and_zeno(tmp_path):
    cfg = tmp_path / "s.ini"
    cfg.write_text(TINY_SWEEP)
    csv = tmp_path / "s.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(csv)]) == 0
    assert csv.read_text().splitlines()[-1].startswith("0.1,0.1,")
    assert main(["zeno", "--out", str(tmp_path / "z.txt")]) == 0
    assert load_config(cfg).sweep is not None


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "zenoqst", "zeno"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "effective coupling" in proc.stdout
