import csv
import io
import json
import shutil
import subprocess

import pytest

from closedrange.cli import EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, RunConfig, flatten, main
from closedrange.geometry import scene_to_dict
from closedrange.scenes import disc_complement


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def disc_file(tmp_path):
    p = tmp_path / "disc.json"
    p.write_text(json.dumps(scene_to_dict(disc_complement())))
    return str(p)


# -- cap ------------------------------------------------------------------------

def test_cap_disc(disc_file, capsys):
    code, out, _ = run(["cap", "--scene", disc_file, "--center", "0,0", "--radius", "3"], capsys)
    d = json.loads(out)
    assert code == EXIT_OK and abs(d["estimate"] - 1) < 0.01
    assert {"estimate", "lower", "upper", "n", "method", "schema_version"} <= set(d)


def test_cap_missing_file(capsys):
    code, _, err = run(["cap", "--scene", "/nonexistent/scene.json", "--radius", "1"], capsys)
    assert code == EXIT_INPUT and "error" in err


def test_cap_empty_clip(disc_file, capsys):
    code, out, _ = run(["cap", "--scene", disc_file, "--center", "10,0", "--radius", "1"], capsys)
    assert code == EXIT_OK and json.loads(out)["estimate"] == 0


def test_cap_builtin_spec(capsys):
    code, out, _ = run(["cap", "--scene", "lattice_discs(0.1, 1)", "--center", "0,0", "--radius", "0.5"], capsys)
    assert code == EXIT_OK and abs(json.loads(out)["estimate"] - 0.1) < 0.001


def test_bad_scene_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"mode": "complement", "obstacles": [{"kind": "disc", "center": [0, 0], "radius": -1}]}')
    code, _, err = run(["cap", "--scene", str(p), "--radius", "1"], capsys)
    assert code == EXIT_INPUT and "obstacles[0]" in err


def test_argparse_error_exits_2():
    with pytest.raises(SystemExit) as e:
        main(["cap", "--scene", "unit_disc"])
    assert e.value.code == 2


# -- lambda1 ---------------------------------------------------------------------

def test_lambda1_unit_disc(tmp_path, capsys):
    csv_path = tmp_path / "v.csv"
    code, out, _ = run(["lambda1", "--scene", "unit_disc", "--emit-eigvector", str(csv_path)], capsys)
    d = json.loads(out)
    assert code == EXIT_OK and abs(d["richardson"] - 5.7832) / 5.7832 < 0.01
    rows = list(csv.reader(io.StringIO(csv_path.read_text())))
    assert rows[0] == ["x", "y", "value"] and len(rows) - 1 == d["n_interior"]


def test_lambda1_box_and_fraction_spacings(capsys):
    code, out, _ = run(["lambda1", "--scene", "plane", "--box=0,1,0,1", "--h", "1/16,1/32"], capsys)
    assert code == EXIT_OK and json.loads(out)["h_list"] == [1 / 16, 1 / 32]


def test_lambda1_empty_interior(capsys):
    code, _, err = run(["lambda1", "--scene", "unit_disc", "--box=2,3,2,3", "--h", "1/4,1/8"], capsys)
    assert code == EXIT_NUMERIC and "numeric" in err


def test_lambda1_unbounded_needs_box(capsys):
    code, _, _ = run(["lambda1", "--scene", "lattice_discs"], capsys)
    assert code == EXIT_INPUT


# -- bergman / classify -------------------------------------------------------------

def test_bergman_csv(capsys):
    code, out, _ = run(["bergman", "--scene", "integer_lattice_points", "--format", "csv"], capsys)
    rows = dict(list(csv.reader(io.StringIO(out)))[1:])
    assert code == EXIT_OK and rows["dimension"] == "zero"


def test_classify_unsupported_inconclusive(disc_file, capsys):
    code, out, _ = run(["classify", "--scene", disc_file], capsys)
    assert code == EXIT_OK and json.loads(out)["verdict"] == "inconclusive"


def test_flatten_paths():
    assert flatten({"a": {"b": [1, {"c": 2}]}}) == [("a.b[0]", 1), ("a.b[1].c", 2)]


# -- sweep ---------------------------------------------------------------------------

def test_sweep_unknown_preset(capsys):
    code, _, err = run(["sweep", "--preset", "nope"], capsys)
    assert code == EXIT_INPUT and "preset" in err


def test_sweep_capacity_convergence(capsys):
    code, out, _ = run(["sweep", "--preset", "capacity_convergence"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == EXIT_OK and rows[0][:3] == ["shape", "n", "estimate"] and len(rows) == 16


def test_sweep_slit_shrink(capsys):
    code, out, _ = run(["sweep", "--preset", "slit_shrink"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == EXIT_OK and rows[0] == ["slit_len", "cap", "lambda1"] and len(rows) == 4
    lams = [float(r[2]) for r in rows[1:]]
    assert lams[0] > lams[1] > lams[2]


# -- determinism and sidecar ---------------------------------------------------------

def test_outputs_byte_identical_with_sidecar(tmp_path, disc_file):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.json"
        assert main(["cap", "--scene", disc_file, "--radius", "3", "--out", str(path)]) == EXIT_OK
        outs.append(path.read_bytes())
        meta = json.loads((tmp_path / f"r{k}.json.meta.json").read_text())
        assert {"version", "config_hash", "config", "wall_time_s"} <= set(meta)
    assert outs[0] == outs[1]


def test_thread_count_does_not_change_output(tmp_path):
    texts = []
    for t in ("1", "3"):
        path = tmp_path / f"b{t}.json"
        assert main(["cap", "--scene", "lattice_discs(0.1, 1)", "--radius", "2", "--threads", t,
                     "--out", str(path)]) == EXIT_OK
        texts.append(path.read_bytes())
    assert texts[0] == texts[1]


def test_config_digest_stable():
    a = RunConfig("cap", "x.json", {"radius": 3.0}, None, "json", 0, None)
    b = RunConfig("cap", "x.json", {"radius": 3.0}, None, "json", 0, None)
    c = RunConfig("cap", "x.json", {"radius": 3.5}, None, "json", 0, None)
    assert a.digest() == b.digest() != c.digest()


@pytest.mark.skipif(shutil.which("closedrange") is None, reason="console script not installed")
def test_console_script():
    r = subprocess.run(["closedrange", "cap", "--scene", "unit_disc", "--center", "3,0", "--radius", "1"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0 and json.loads(r.stdout)["method"] in {"energy_max+leja", "empty"}
