import csv
import json
from pathlib import Path

import numpy as np
import pytest

from ndfwm.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, SPECTRUM_COLUMNS, main, manifest_path
from ndfwm.config import ConfigError, config_from_dict, parse_config
from ndfwm.spectrum import find_extrema

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def load(name):
    return json.loads((CONFIGS / name).read_text())


def small_config(**changes):
    doc = {
        "schema": 1,
        "transition": {"fg": 1, "fe": 2, "gamma_transit": 0.01},
        "pump": {"rabi": 2.0, "detuning": 1.0, "polarization": [0, 0, 1]},
        "probe": {"polarization": [1, 0, 0]},
        "grid": {"delta_min": -4, "delta_max": 4, "points": 41},
    }
    for key, val in changes.items():
        doc[key] = val
    return doc


def write(tmp_path, doc, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_averaged_config_parses_and_round_trips():
    cfg = parse_config((CONFIGS / "cs_f4_parallel_average.json").read_text())
    req = cfg.request
    assert (req.transition.fg.value, req.transition.fe.value) == (4, 5)
    assert req.pump.detuning == -2.0 and req.transition.gamma_transit == 0.01
    assert req.average.rabi_max == 18.0 and req.average.samples == 64
    again = config_from_dict(cfg.resolved())
    assert again.resolved() == cfg.resolved()
    np.testing.assert_allclose(again.request.probe_polarization.as_array(), req.probe_polarization.as_array())


@pytest.mark.parametrize(
    "mutate,field",
    [
        (lambda d: d["probe"].update(polarization=[0, 0, 0]), "probe.polarization"),
        (lambda d: d["probe"].update(polarization=[]), "probe.polarization"),
        (lambda d: d["grid"].update(points=1), "grid.points"),
        (lambda d: d["grid"].update(delta_max=-5), "grid.delta_max"),
        (lambda d: d["pump"].update(colour="red"), "pump.colour"),
        (lambda d: d.update(extra=1), "extra"),
        (lambda d: d["transition"].update(fe=3), "transition"),
        (lambda d: d["transition"].update(gamma_transit=0), "transition.gamma_transit"),
        (lambda d: d["pump"].update(polarization=[0, [1, 2, 3], 0]), "pump.polarization[1]"),
        (lambda d: d.update(schema=2), "schema"),
    ],
)
def test_invalid_configs_rejected(mutate, field):
    doc = small_config()
    mutate(doc)
    with pytest.raises(ConfigError) as err:
        config_from_dict(doc)
    assert str(err.value).startswith(field)


def test_json_syntax_error_reports_position():
    with pytest.raises(ConfigError, match="line 2, column"):
        parse_config('{\n  "schema": 1,,\n}')


def test_spectrum_header_and_rows(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["spectrum", str(write(tmp_path, small_config())), "-o", str(out)]) == EXIT_OK
    header, data = read_csv(out)
    assert header == SPECTRUM_COLUMNS
    assert data.shape == (41, 8)
    np.testing.assert_allclose(data[:, 1], np.sum(data[:, 2:] ** 2, axis=1), rtol=1e-14)
    man = json.loads(manifest_path(out).read_text())
    assert man["exit_status"] == 0 and man["config"]["grid"]["points"] == 41
    assert man["diagnostics"]["solver"]["paths"]


def test_decompose_header(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["decompose", str(write(tmp_path, small_config())), "-o", str(out)]) == EXIT_OK
    header, _ = read_csv(out)
    extra = [f"absm{k}_{c}_{p}" for k in (0, 1) for c in ("m", "0", "p") for p in ("re", "im")]
    assert header == SPECTRUM_COLUMNS + extra


def test_json_output_mirrors_csv(tmp_path):
    cfg = write(tmp_path, small_config())
    assert main(["spectrum", str(cfg), "-o", str(tmp_path / "s.csv")]) == EXIT_OK
    assert main(["spectrum", str(cfg), "-o", str(tmp_path / "s.json"), "--format", "json"]) == EXIT_OK
    header, data = read_csv(tmp_path / "s.csv")
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["columns"] == header
    for i, c in enumerate(header):
        assert np.array_equal(np.array(doc["data"][c]), data[:, i])


@pytest.mark.parametrize("command", ["spectrum", "decompose", "average"])
def test_byte_identical_across_workers(tmp_path, command):
    doc = small_config(average={"rabi_max": 3.0, "samples": 6})
    cfg = write(tmp_path, doc)
    outs = []
    for w in (1, 2, 8):
        out = tmp_path / f"{command}_{w}.csv"
        assert main([command, str(cfg), "-o", str(out), "--workers", str(w)]) == EXIT_OK
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_ptls_spectrum_sidebands(tmp_path):
    out = tmp_path / "ptls.csv"
    assert main(["spectrum", str(CONFIGS / "ptls_sidebands.json"), "-o", str(out)]) == EXIT_OK
    _, data = read_csv(out)
    maxima = [e.delta for e in find_extrema(data[:, 0], data[:, 1]) if e.kind == "max"]
    target = np.sqrt(3.0 ** 2 + 2.0 ** 2)
    assert abs(min(maxima) + target) <= 0.05
    assert abs(max(maxima) - target) <= 0.05


def test_dressed_outputs(tmp_path):
    out = tmp_path / "dressed.csv"
    assert main(["dressed", str(CONFIGS / "f1_perpendicular_dressed.json"), "-o", str(out)]) == EXIT_OK
    with open(out) as fh:
        assert next(csv.reader(fh)) == ["index", "energy", "label", "uncoupled"]
    with open(tmp_path / "dressed_resonances.csv") as fh:
        assert next(csv.reader(fh)) == ["delta", "weight", "initial", "final", "kind"]
    assert manifest_path(out).exists()


def test_verify_passes(tmp_path, capsys):
    out = tmp_path / "verify.csv"
    assert main(["verify", str(CONFIGS / "oracle_check.json"), "-o", str(out)]) == EXIT_OK
    lines = [ln for ln in capsys.readouterr().out.splitlines() if ln.startswith("[")]
    assert len(lines) == 4 and all(ln.startswith("[PASS]") for ln in lines)


def test_exit_codes(tmp_path):
    assert main(["spectrum", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    bad = small_config()
    bad["grid"]["points"] = 1
    assert main(["spectrum", str(write(tmp_path, bad))]) == EXIT_CONFIG
    assert main(["average", str(write(tmp_path, small_config(), "noavg.json")), "-o", str(tmp_path / "a.csv")]) == EXIT_CONFIG
    assert main(["spectrum", str(write(tmp_path, small_config(), "w.json")), "--workers", "0"]) == EXIT_CONFIG


def test_numerical_failure_exit(tmp_path, monkeypatch):
    from ndfwm import cli
    from ndfwm.response import SolverError

    def boom(*args, **kwargs):
        raise SolverError("singular system", condition=np.inf)

    monkeypatch.setattr(cli, "spectrum_sweep", boom)
    out = tmp_path / "f.csv"
    assert main(["spectrum", str(write(tmp_path, small_config())), "-o", str(out)]) == EXIT_NUMERICAL
    man = json.loads(manifest_path(out).read_text())
    assert man["exit_status"] == EXIT_NUMERICAL and man["error"]["type"] == "SolverError"
