import hashlib
import json
import subprocess
import sys

import pytest

from tmclock import budget as bud
from tmclock import catalog as cat
from tmclock.cli import config_hash, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _data_rows(text):
    return [r for r in text.splitlines() if r and not r.startswith("#")]


def test_polarizability_scan_rows(capsys):
    code, out, _ = run(capsys, "polarizability", "scan", "--from", "800", "--to", "810", "--step", "0.5")
    assert code == 0
    rows = _data_rows(out)
    assert rows[0].startswith("lambda_nm,g7_alpha_s_au")
    assert len(rows) == 1 + 21
    assert float(rows[1].split(",")[0]) == 800.0 and float(rows[-1].split(",")[0]) == 810.0


def test_scan_header_hashes(capsys):
    _, out, _ = run(capsys, "polarizability", "scan", "--from", "800", "--to", "801", "--step", "1", "--level", "g7")
    header = {l.split(":", 1)[0][2:]: l.split(":", 1)[1].strip() for l in out.splitlines() if l.startswith("# ") and ":" in l}
    record = json.loads(header["config"])
    assert header["config_sha256"] == config_hash(record)
    assert header["catalog_sha256"].split()[0] == cat.bundled_catalog().digest()
    assert len(_data_rows(out)[0].split(",")) == 5


def test_magic_find_json_window(capsys):
    code, out, _ = run(capsys, "magic", "find", "--offset-au=-1,0,1")
    assert code == 0
    doc = json.loads(out)
    roots = doc["result"]["roots"]
    assert [r["continuum_offset_au"] for r in roots] == [-1.0, 0.0, 1.0]
    for r in roots:
        assert 806.0 <= r["lambda_magic_nm"] <= 807.05
    assert doc["meta"]["catalog_sha256"] == cat.bundled_catalog().digest()


def test_magic_find_text(capsys):
    code, out, _ = run(capsys, "magic", "find", "--offset-au=0", "--format", "text")
    assert code == 0
    assert "lambda* (nm)" in out and len(_data_rows(out)) == 2


def test_budget_json_matches_library(capsys):
    code, out, _ = run(capsys, "budget", "--format", "json")
    assert code == 0
    res = json.loads(out)["result"]
    lib = bud.assemble_budget().as_record()
    assert res["total_uncertainty_mHz"] == lib["total_uncertainty_mHz"]
    assert [r["name"] for r in res["rows"]] == [r["name"] for r in lib["rows"]]


def test_budget_flag_changes_only_bbr(capsys):
    _, a, _ = run(capsys, "budget", "--format", "json")
    _, b, _ = run(capsys, "budget", "--format", "json", "--dtemp", "6")
    ra, rb = json.loads(a)["result"]["rows"], json.loads(b)["result"]["rows"]
    assert rb[0]["uncertainty"] == pytest.approx(2 * ra[0]["uncertainty"])
    assert ra[1:] == rb[1:]


def test_spin_sim_output(capsys):
    code, out, _ = run(capsys, "spin-sim", "--atoms", "2", "--tmax-ms", "5", "--dt-ms", "1")
    assert code == 0
    rows = _data_rows(out)
    assert rows[0].split(",")[0] == "t_ms" and len(rows[0].split(",")) == 10
    assert len(rows) == 1 + 6
    first = [float(x) for x in rows[1].split(",")[1:]]
    assert first[4] == pytest.approx(1.0, abs=1e-12) and sum(first) == pytest.approx(1.0)
    assert any(l.startswith("# summary:") for l in out.splitlines())


def test_fit_alpha(capsys):
    code, out, _ = run(capsys, "fit", "alpha", "--fa", "230e3", "--fr", "400", "--power", "4", "--lambda-nm", "532")
    assert code == 0
    assert json.loads(out)["result"]["alpha_au"] == pytest.approx(314.69, abs=0.01)


def test_fit_lifetime(tmp_path, capsys):
    from tmclock.fitting import synthetic_trace

    tr = synthetic_trace(tau=112.0)
    src = tmp_path / "trace.csv"
    src.write_text("t_ms,n\n" + "\n".join(f"{float(a)!r},{float(b)!r}" for a, b in zip(tr.t, tr.n)))
    code, out, _ = run(capsys, "fit", "lifetime", "--in", str(src))
    assert code == 0
    assert json.loads(out)["result"]["tau_ms"] == pytest.approx(112.0, rel=1e-6)


def test_catalog_validate_and_merge(tmp_path, capsys):
    levels = tmp_path / "levels.csv"
    lines = tmp_path / "lines.csv"
    levels.write_text(cat.read_bundled("levels.csv"))
    lines.write_text(cat.read_bundled("lines_calculated.csv"))
    code, out, _ = run(capsys, "catalog", "validate", "--levels", str(levels), "--lines", str(lines))
    assert code == 0 and json.loads(out)["result"]["valid"] is True
    code, out, _ = run(capsys, "catalog", "merge")
    assert code == 0
    assert f"# catalog_sha256: {cat.bundled_catalog().digest()}" in out


def test_missing_required_option(capsys):
    code, _, err = run(capsys, "fit", "alpha", "--fa", "1e5")
    assert code == 1 and "--fr" in err


def test_module_error_is_reported(capsys):
    code, _, err = run(capsys, "magic", "find", "--bracket", "700:701")
    assert code == 1 and err.startswith("tmclock: error:")


def test_unknown_flag_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["budget", "--no-such-flag", "1"])
    assert exc.value.code == 2


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dtemp": 6.0, "format": "json"}))
    _, out, _ = run(capsys, "budget", "--config", str(cfg))
    doc = json.loads(out)
    assert doc["meta"]["config"]["dtemp"] == 6.0
    # explicit flags win over the file
    _, out, _ = run(capsys, "budget", "--config", str(cfg), "--dtemp", "3")
    assert json.loads(out)["meta"]["config"]["dtemp"] == 3.0


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"temperature_typo": 1.0}))
    code, _, err = run(capsys, "budget", "--config", str(cfg))
    assert code == 1 and "temperature_typo" in err


def test_out_is_atomic_and_identical(tmp_path, capsys):
    target = tmp_path / "scan.csv"
    argv = ["polarizability", "scan", "--from", "805", "--to", "808", "--step", "0.25"]
    assert main(argv + ["--out", str(target)]) == 0
    first = target.read_bytes()
    assert capsys.readouterr().out == ""
    assert main(argv + ["--out", str(target)]) == 0
    assert target.read_bytes() == first
    assert [p.name for p in tmp_path.iterdir()] == ["scan.csv"]


def test_determinism_across_processes(tmp_path):
    argv = [sys.executable, "-m", "tmclock", "magic", "find", "--offset-au=-1,0,1"]
    digests = {hashlib.sha256(subprocess.run(argv, check=True, capture_output=True).stdout).hexdigest() for _ in range(2)}
    assert len(digests) == 1
