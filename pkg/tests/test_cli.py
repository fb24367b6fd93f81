import json
import math

import pytest

from relplasma.cli import ABSORPTION_COLUMNS, DIELECTRIC_COLUMNS, main
from relplasma.config import ConfigError, parse_config_text, resolve

DIEL = ["scan-dielectric", "--T", "0.2", "--mu", "0.0", "--k-min", "0.05", "--k-max", "0.1",
        "--n-k", "2", "--omega-min", "0.1", "--omega-max", "0.3", "--n-omega", "3"]
ABS = ["scan-absorption", "--T", "0.005", "--mu", "0.95", "--omega", "0.01,0.02",
       "--samples", "4000", "--strata", "8", "--target-rel-error", "0.5",
       "--n-ion", "1e-9"]


def _body(text):
    return [ln for ln in text.splitlines() if not ln.startswith("#")]


def test_dielectric_scan_rows(tmp_path, capsys):
    out = tmp_path / "d.csv"
    assert main(DIEL + ["--out", str(out)]) == 0
    body = _body(out.read_text())
    assert body[0] == ",".join(DIELECTRIC_COLUMNS)
    rows = [list(map(float, r.split(","))) for r in body[1:]]
    assert len(rows) == 6
    assert [(r[0], r[1]) for r in rows] == sorted((r[0], r[1]) for r in rows)
    assert all(math.isfinite(x) for r in rows for x in r)


def test_dielectric_output_thread_independent(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(DIEL + ["--threads", "1", "--out", str(a)]) == 0
    assert main(DIEL + ["--threads", "4", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_header_echoes_resolved_config(tmp_path):
    out = tmp_path / "d.csv"
    main(DIEL + ["--out", str(out)])
    head = [ln for ln in out.read_text().splitlines() if ln.startswith("#")]
    assert "# beta = 5" in head
    assert "# grid.n_k = 2" in head


def test_json_output(capsys):
    assert main(DIEL + ["--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data) == 6 and set(data[0]) == set(DIELECTRIC_COLUMNS)


def test_static_point_reports_note(capsys):
    args = DIEL[:]
    args[args.index("--omega-min") + 1] = "0"
    assert main(args + ["--format", "json"]) == 0
    captured = capsys.readouterr()
    data = json.loads(captured.out)
    assert data[0]["omega"] == 0.0 and data[0]["re_eps_t"] is None
    assert "eps_t-undefined-at-omega-0" in captured.err


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("plasma.T = 0.2  # in units of m\ngrid.n_k = 1\ngrid.n_omega = 1\n")
    assert main(["scan-dielectric", "--config", str(cfg), "--n-omega", "2",
                 "--format", "json"]) == 0
    assert len(json.loads(capsys.readouterr().out)) == 2


@pytest.mark.parametrize("extra, field", [
    (["--k-min", "0"], "grid.k_min"),
    (["--k-min", "0.5", "--k-max", "0.1"], "grid.k_max"),
    (["--tol", "-1"], "numerics.tol"),
    (["--T-keV", "10"], "plasma.T"),
])
def test_config_errors_exit_2(extra, field, capsys):
    assert main(DIEL + extra) == 2
    assert field in capsys.readouterr().err


def test_absorption_zero_frequency_rejected(capsys):
    args = ABS[:]
    args[args.index("--omega") + 1] = "0.0"
    assert main(args) == 2
    assert "grid.omegas" in capsys.readouterr().err


def test_missing_temperature(capsys):
    assert main(["scan-dielectric"]) == 2
    assert "plasma.T_keV" in capsys.readouterr().err


def test_parse_config_text():
    assert parse_config_text("# c\n\nion.Z = 2\n") == {"ion.Z": "2"}
    with pytest.raises(ConfigError):
        parse_config_text("bogus.key = 1")
    with pytest.raises(ConfigError):
        parse_config_text("ion.Z 2")


def test_resolve_units():
    cfg = resolve({"plasma.T_keV": "10", "plasma.n_e_m3": "1e30"}, mode="absorption")
    assert cfg.beta == pytest.approx(51.099895)
    assert cfg.mu > 0 and cfg.n_ion > 0 and cfg.kappa > 0
    with pytest.raises(ConfigError):
        resolve({"plasma.T": "0.1", "ion.Z": "1.5"})
    with pytest.raises(ConfigError):
        resolve({"plasma.T": "0.1", "numerics.k_seq": "0.001,0.002"}, mode="absorption")
    with pytest.raises(ConfigError):
        resolve({"plasma.T": "0.1", "numerics.vacuum": "yes", "numerics.cutoff": "5"})


def test_absorption_scan(tmp_path):
    out = tmp_path / "a.csv"
    assert main(ABS + ["--out", str(out)]) == 0
    body = _body(out.read_text())
    assert body[0] == ",".join(ABSORPTION_COLUMNS)
    rows = [list(map(float, r.split(","))) for r in body[1:]]
    assert [r[0] for r in rows] == [0.01, 0.02]
    assert all(r[1] > 0 and r[3] > 0 for r in rows)


def test_absorption_seed_consistency(tmp_path):
    vals = []
    for seed in ("1", "2"):
        out = tmp_path / f"s{seed}.csv"
        assert main(ABS + ["--seed", seed, "--out", str(out)]) == 0
        vals.append([list(map(float, r.split(","))) for r in _body(out.read_text())[1:]])
    for r1, r2 in zip(*vals):
        assert r1[1] != r2[1]
        assert abs(r1[1] - r2[1]) < 3 * math.hypot(r1[3], r2[3])


def test_self_test_quick(capsys):
    assert main(["self-test", "--quick"]) == 0
    assert capsys.readouterr().out.count("PASS") == 8
