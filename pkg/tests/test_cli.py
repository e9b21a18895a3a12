import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from chermnykh.cli import EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, main
from chermnykh.model import format_preset, sun_earth_inputs


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_equilibria_csv(capsys):
    code, out, _ = run(capsys, "equilibria")
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0] == "family,x,y,residual,iterations,stability"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["L1", "L2", "L3", "L4", "L5"]
    assert lines[4].endswith(",marginal") and lines[1].endswith(",unstable")


def test_equilibria_with_drag_leave_axis(capsys):
    code, out, _ = run(capsys, "equilibria", "--q1", "0.5", "--format", "json")
    assert code == EXIT_OK
    rows = json.loads(out)
    assert all(r["y"] != 0.0 for r in rows[:3])


def test_sun_earth_preset(capsys):
    code, out, _ = run(capsys, "equilibria", "--preset", "sun-earth", "--q1", "1.0", "--format", "json")
    assert code == EXIT_OK
    l4 = json.loads(out)[3]
    assert l4["x"] == pytest.approx(0.5 - 3.00348e-6, abs=1e-9)
    assert l4["y"] == pytest.approx(3**0.5 / 2, abs=1e-9)


def test_preset_from_file(capsys, tmp_path):
    path = tmp_path / "mine.txt"
    path.write_text(format_preset(sun_earth_inputs(q1=0.999)))
    code, out, _ = run(capsys, "stability", "--preset", str(path), "--family", "L4")
    assert code == EXIT_OK
    assert [r["family"] for r in json.loads(out)] == ["L4"]


@pytest.mark.parametrize("argv", [
    ["equilibria", "--mu", "0.7"],
    ["equilibria", "--q1", "-0.1"],
    ["equilibria", "--preset", "no-such-preset"],
    ["routh", "--q1", "0.5"],
    ["routh", "--preset", "sun-earth"],
    ["table1", "--q1", "0.5"],
    ["zvc", "--bbox", "1,0,0,1"],
    ["zvc", "--bbox", "a,b"],
    ["integrate", "--x", "0.5"],
    ["nonsense"],
])
def test_invalid_input_exit_code(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_INPUT
    assert err


def test_collapsed_families_are_a_numerical_failure(capsys):
    code, _, err = run(capsys, "equilibria", "--preset", "sun-earth", "--q1", "0.9")
    assert code == EXIT_NUMERIC and "coincides" in err


def test_collision_is_a_numerical_failure(capsys):
    code, _, err = run(capsys, "integrate", "--x", "0.975", "--y", "0.0", "--t-end", "1")
    assert code == EXIT_NUMERIC
    assert "numerical failure" in err


def test_routh(capsys):
    code, out, _ = run(capsys, "routh")
    assert code == EXIT_OK
    assert out.strip() == "0.0385209"


def test_stability_json(capsys):
    code, out, _ = run(capsys, "stability", "--q1", "0.5", "--family", "L4", "--family", "L5")
    assert code == EXIT_OK
    data = json.loads(out)
    assert [r["family"] for r in data] == ["L4", "L5"]
    assert all(r["class"] == "unstable" for r in data)


def test_integrate_writes_trajectory(capsys, tmp_path):
    code, out, err = run(capsys, "integrate", "--x", "0.48", "--y", "0.866", "--t-end", "1",
                         "--stride", "0.1", "--out", str(tmp_path))
    assert code == EXIT_OK
    path = tmp_path / "trajectory.csv"
    assert out.strip() == str(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x,y,vx,vy,C" and len(lines) == 12
    assert "max |dC|" in err


def test_zvc_csv_and_metadata(capsys):
    code, out, _ = run(capsys, "zvc", "--mb", "0.2", "--grid", "150")
    assert code == EXIT_OK
    assert out.startswith("# levels = C(L4/5)")
    code, bare, _ = run(capsys, "zvc", "--mb", "0.2", "--grid", "150", "--no-metadata")
    assert not any(ln.startswith("#") for ln in bare.splitlines())
    assert bare.splitlines()[0] == "component,closed,x,y"


def test_zvc_svg(capsys):
    code, out, _ = run(capsys, "zvc", "--grid", "120", "--level", "3.2", "--format", "svg")
    assert code == EXIT_OK
    assert ET.fromstring(out).tag.endswith("svg")


def test_zvc_needs_level_without_triangular_minimum(capsys):
    code, _, err = run(capsys, "zvc", "--q1", "0", "--mb", "0.2", "--grid", "100")
    assert code == EXIT_INPUT and "--level" in err


def test_table1_text(capsys):
    code, out, _ = run(capsys, "table1", "--grid", "200")
    assert code == EXIT_OK
    rows = {ln.split()[0]: ln.split()[1:] for ln in out.strip().splitlines()[1:]}
    assert rows["A"] == ["no"] * 3
    assert rows["B"] == ["very-small"] * 3
    assert rows["C"] == ["yes"] * 3


def test_outputs_are_byte_identical(tmp_path):
    def once(d):
        main(["table1", "--grid", "150", "--format", "csv", "--out", str(d)])
        main(["equilibria", "--q1", "0.5", "--out", str(d)])
        return (d / "table1.csv").read_bytes(), (d / "equilibria.csv").read_bytes()

    assert once(tmp_path / "a") == once(tmp_path / "b")


def test_threads_env(capsys, monkeypatch):
    monkeypatch.setenv("CHERMNYKH_THREADS", "4")
    code, threaded, _ = run(capsys, "table1", "--grid", "150", "--format", "csv")
    monkeypatch.setenv("CHERMNYKH_THREADS", "1")
    _, serial, _ = run(capsys, "table1", "--grid", "150", "--format", "csv")
    assert code == EXIT_OK and threaded == serial
    monkeypatch.setenv("CHERMNYKH_THREADS", "many")
    code, _, _ = run(capsys, "table1", "--grid", "150")
    assert code == EXIT_INPUT


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "chermnykh", "routh"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "0.0385209"


def test_table1_offsets_are_tunable(capsys):
    code, out, _ = run(capsys, "table1", "--grid", "150", "--large-offset", "0.5")
    assert code == EXIT_OK
    rows = {ln.split()[0]: ln.split()[1:] for ln in out.strip().splitlines()[1:]}
    assert rows["C"] == ["very-small"] * 3  # ovals open up before C + 0.5
    code, _, err = run(capsys, "table1", "--small-offset", "0.1", "--large-offset", "0.05")
    assert code == EXIT_INPUT and "offset" in err
