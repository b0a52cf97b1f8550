import json
import subprocess
import sys

import pytest

from primadkit.cli import main


@pytest.fixture
def template(tmp_path, example_yaml):
    path = tmp_path / "template.yaml"
    path.write_text(example_yaml)
    return path


@pytest.fixture(autouse=True)
def no_probe(monkeypatch):
    monkeypatch.setenv("PRIMADKIT_NO_PROBE", "1")


def test_annotate_ok(tmp_path, data_dir, template, capsys):
    out = tmp_path / "a.txt"
    assert main(["annotate", str(data_dir / "run_unannotated.txt"), "--template", str(template), "--output", str(out)]) == 0
    assert out.exists()
    assert capsys.readouterr().err.startswith("valid")


def test_annotate_refuses_in_place(tmp_path, data_dir, template, capsys):
    run = tmp_path / "run.txt"
    run.write_bytes((data_dir / "run_unannotated.txt").read_bytes())
    assert main(["annotate", str(run), "--template", str(template), "--output", str(run)]) == 2
    assert "refusing to overwrite" in capsys.readouterr().err
    assert main(["annotate", str(run), "--template", str(template), "--output", str(run), "--force"]) == 0


def test_annotate_without_template_is_incomplete(tmp_path, data_dir, capsys):
    assert main(["annotate", str(data_dir / "run_unannotated.txt"), "--output", str(tmp_path / "a.txt")]) == 1
    assert "missing: actor.role" in capsys.readouterr().err


def test_validate(tmp_path, data_dir, template, capsys):
    assert main(["validate", str(data_dir / "scan" / "reference.txt")]) == 0
    assert capsys.readouterr().out.strip() == "valid"
    assert main(["validate", str(template), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["level"] == "valid"


def test_validate_missing_method(tmp_path, example_yaml, capsys):
    path = tmp_path / "m.yaml"
    path.write_text(example_yaml.split("method:")[0] + "actor:" + example_yaml.split("actor:")[1])
    assert main(["validate", str(path)]) == 1
    out = capsys.readouterr().out
    assert "missing: method.retrieval" in out and "missing: method.score_ties" in out


def test_validate_garbage_header(tmp_path, capsys):
    run = tmp_path / "run.txt"
    run.write_text("# platform: [oops\n# : :\n1 Q0 d1 0 1.0 r\n")
    assert main(["validate", str(run)]) == 2
    assert "line" in capsys.readouterr().err


def test_validate_unannotated(data_dir, capsys):
    assert main(["validate", str(data_dir / "run_unannotated.txt")]) == 2


def test_scan(data_dir, tmp_path, capsys):
    ref = str(data_dir / "scan" / "reference.txt")
    assert main(["scan", ref, str(data_dir / "scan" / "runs"), "--json"]) == 0
    groups = json.loads(capsys.readouterr().out)
    assert {k: [p.rsplit("/", 1)[1] for p in v] for k, v in groups.items()} == {
        "priMad": ["r1_w07.txt", "r2_w08.txt"],
        "primaD": ["r3_wapo.txt"],
    }
    assert main(["scan", ref, str(tmp_path)]) == 0
    assert capsys.readouterr().out == ""
    assert main(["scan", str(data_dir / "run_unannotated.txt"), str(tmp_path)]) == 2


def test_diff(data_dir, capsys):
    assert main(["diff", str(data_dir / "scan" / "reference.txt"), str(data_dir / "scan" / "runs" / "r1_w07.txt")]) == 0
    assert capsys.readouterr().out.splitlines() == ["priMad", "  M method.retrieval[2].weight"]


def _evaluate_args(data_dir, *extra):
    base, adv = str(data_dir / "run_unannotated.txt"), str(data_dir / "run_advanced.txt")
    return ["evaluate", "--orig-base", base, "--orig-adv", adv, "--rep-base", base, "--rep-adv", adv,
            "--qrels", str(data_dir / "qrels.txt"), *extra]


def test_evaluate_identity(data_dir, tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(_evaluate_args(data_dir, "--json", str(out))) == 0
    table = capsys.readouterr().out
    assert "Effect Ratio" in table
    doc = json.loads(out.read_text())
    assert doc["overall"] == {"ER": 1.0, "DRI": 0.0}
    assert doc["baseline"]["KTU"] == 1.0 and doc["baseline"]["p-value"] == 1.0


def test_evaluate_json_stdout(data_dir, capsys):
    assert main(_evaluate_args(data_dir, "--json", "--measure", "P_10", "--rbo-p", "0.9", "--depth", "5")) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["measure"] == "P_10"


def test_evaluate_data_change(data_dir, tmp_path, capsys):
    qrels_rep = tmp_path / "q.txt"
    qrels_rep.write_text((data_dir / "qrels.txt").read_text().replace(" 0\n", " 1\n"))
    assert main(_evaluate_args(data_dir, "--qrels-rep", str(qrels_rep))) == 0
    rows = [line.strip() for line in capsys.readouterr().out.splitlines() if line[:2] == "  " and line[2:3] != " "]
    labels = {r.split("  ")[0] for r in rows}
    assert labels == {"Average Precision", "Effect Ratio", "Delta Relative Improvement"}


def test_evaluate_requires_qrels(data_dir, capsys):
    args = _evaluate_args(data_dir)
    i = args.index("--qrels")
    del args[i : i + 2]
    with pytest.raises(SystemExit) as exc:
        main(args)
    assert exc.value.code == 2
    assert "--qrels" in capsys.readouterr().err


def test_evaluate_bad_measure(data_dir):
    with pytest.raises(SystemExit) as exc:
        main(_evaluate_args(data_dir, "--measure", "bpref"))
    assert exc.value.code == 2


def test_module_entry_point(data_dir):
    proc = subprocess.run(
        [sys.executable, "-m", "primadkit", "validate", str(data_dir / "scan" / "reference.txt")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and proc.stdout.strip() == "valid"
