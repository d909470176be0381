import hashlib
import json
from pathlib import Path

import pytest

from refground.cli import main
from refground.config import ConfigError, PipelineConfig, load_config, save_config


def tree_digest(root: Path) -> str:
    h = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_file():
            h.update(path.relative_to(root).as_posix().encode())
            h.update(path.read_bytes())
    return h.hexdigest()


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "dataset"
    assert main(["simulate", "--out", str(out), "--kind", "dialogue", "--rooms", "2"]) == 0
    return out


def episode_dir(dataset):
    return dataset / "episode_00000"


# -- simulate -----------------------------------------------------------------


def test_simulate_layout(dataset):
    assert (dataset / "manifest.jsonl").exists()
    ep = episode_dir(dataset)
    for name in ("room.json", "episode.jsonl", "instructions.jsonl", "frame_00000.depth"):
        assert (ep / name).exists()


def test_simulate_rerun_byte_identical(dataset, tmp_path):
    again = tmp_path / "again"
    assert main(["simulate", "--out", str(again), "--kind", "dialogue", "--rooms", "2"]) == 0
    assert tree_digest(again) == tree_digest(dataset)


# -- parse --------------------------------------------------------------------


def test_parse_outputs_graph_json(capsys):
    assert main(["parse", "take the plastic cup on the table"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["root"] == "cup"
    assert payload["self"] == [["material", "plastic"]]


def test_parse_with_tags(capsys):
    assert main(["parse", "bring a cup", "--tags"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].split("\t") == ["O", "O", "B-r(g)"]


def test_parse_failure_exit_code(capsys):
    assert main(["parse", "bring the red thing"]) == 2
    assert capsys.readouterr().out == ""


# -- ground ---------------------------------------------------------------------


def test_ground_prints_query(dataset, capsys):
    case = json.loads((episode_dir(dataset) / "instructions.jsonl").read_text().splitlines()[0])
    assert main(["ground", str(episode_dir(dataset)), case["text"]]) == 0
    out = capsys.readouterr().out.strip()
    assert out  # the query line


def test_ground_parse_failure_prints_nothing(dataset, capsys):
    assert main(["ground", str(episode_dir(dataset)), "bring the widget"]) == 2
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "cannot parse" in captured.err


def test_ground_missing_episode_is_io_error(tmp_path, capsys):
    assert main(["ground", str(tmp_path / "nope"), "bring a cup"]) == 3
    assert capsys.readouterr().out == ""


def test_ground_writes_outcome_record(dataset, tmp_path, capsys):
    out_file = tmp_path / "outcome.json"
    assert main(
        ["ground", str(episode_dir(dataset)), "bring a cup", "--out", str(out_file)]
    ) == 0
    query = capsys.readouterr().out.strip()
    payload = json.loads(out_file.read_text())
    assert payload["query"] == query
    assert payload["state"] in {
        "confirm",
        "inform-mismatch",
        "inform-ambiguity",
        "inform-missing",
    }


def test_ground_determinism(dataset, capsys):
    assert main(["ground", str(episode_dir(dataset)), "bring a cup"]) == 0
    first = capsys.readouterr().out
    assert main(["ground", str(episode_dir(dataset)), "bring a cup"]) == 0
    assert capsys.readouterr().out == first


# -- aggregate ---------------------------------------------------------------------


def test_aggregate_session_reusable(dataset, tmp_path, capsys):
    session_file = tmp_path / "session.json"
    assert main(["aggregate", str(episode_dir(dataset)), "--out", str(session_file)]) == 0
    capsys.readouterr()
    assert main(["ground", str(episode_dir(dataset)), "bring a cup"]) == 0
    direct = capsys.readouterr().out
    assert (
        main(
            [
                "ground",
                str(episode_dir(dataset)),
                "bring a cup",
                "--session",
                str(session_file),
            ]
        )
        == 0
    )
    assert capsys.readouterr().out == direct


# -- eval --------------------------------------------------------------------------


def test_eval_writes_reports(dataset, tmp_path, capsys):
    report = tmp_path / "report.json"
    assert main(["eval", str(dataset), "--out", str(report)]) == 0
    table = capsys.readouterr().out
    assert "dialogue metrics" in table
    payload = json.loads(report.read_text())
    assert 0.0 <= payload["dialogue"]["aa_f1"] <= 1.0
    assert report.with_suffix(".txt").exists()


def test_eval_missing_manifest(tmp_path, capsys):
    assert main(["eval", str(tmp_path)]) == 3


# -- config ------------------------------------------------------------------------


def test_config_round_trip(tmp_path):
    cfg = PipelineConfig(gamma=0.07, acknowledgements=("Okay.", "Right away."))
    path = tmp_path / "pipeline.cfg"
    save_config(cfg, path)
    loaded = load_config(path)
    assert loaded == cfg


def test_config_unknown_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("not_a_key = 3\n")
    with pytest.raises(ConfigError, match="line 1"):
        load_config(path)


def test_config_bad_value_names_line(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("# comment\ncell_size = banana\n")
    with pytest.raises(ConfigError, match="line 2"):
        load_config(path)


def test_config_validation_names_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("cell_size = -1\n")
    with pytest.raises(ConfigError, match="cell_size"):
        load_config(path)


def test_cli_rejects_bad_config(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("gamma = 2.0\n")
    assert main(["parse", "bring a cup", "--config", str(path)]) == 3


def test_cli_seed_override(dataset, capsys):
    assert main(["ground", str(episode_dir(dataset)), "bring a cup", "--seed", "99"]) == 0
    capsys.readouterr()
