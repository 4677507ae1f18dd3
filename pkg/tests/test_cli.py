import json
from pathlib import Path

import pytest

from uimotif.cli import main
from uimotif.emitter import Framework
from uimotif.miner import MinerConfig
from uimotif.pipeline import (
    EXIT_EMIT,
    EXIT_OK,
    EXIT_PARSE,
    EmptyCorpus,
    RunConfig,
    run_corpus,
    run_pipeline,
)
from uimotif.synth import boxes_to_json, demo_boxes, write_corpus


@pytest.fixture
def doc(tmp_path):
    write_corpus(tmp_path / "in", 1, 3)
    return next((tmp_path / "in").glob("*.json"))


def run_cli(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_pipeline_writes_artifacts(doc, tmp_path):
    out = tmp_path / "out"
    result = run_pipeline(doc, out, RunConfig(framework=Framework.REACT))
    assert result.exit_code == EXIT_OK
    for name in ("mined.json", "report.json", "manifest.json", "bundle/App.tsx"):
        assert (out / name).is_file()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["framework"] == "react"
    assert set(manifest["wall_times"]) == {"parse", "mine", "emit", "eval"}


def test_pipeline_bad_json_exits_parse(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_pipeline(bad, tmp_path / "out").exit_code == EXIT_PARSE


def test_pipeline_fuel_one_exits_emit(doc, tmp_path):
    result = run_pipeline(doc, tmp_path / "out", RunConfig(fuel=1))
    assert result.exit_code == EXIT_EMIT
    assert "FuelExhausted" in result.error


def test_pipeline_accepts_boxes(tmp_path):
    src = tmp_path / "boxes.json"
    src.write_text(boxes_to_json(demo_boxes(1)))
    result = run_pipeline(src, tmp_path / "out")
    assert result.exit_code == EXIT_OK
    assert result.report.roundtrip_ted == 0


def read_tree(root: Path) -> dict[str, bytes]:
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_corpus_is_independent_of_workers(tmp_path):
    write_corpus(tmp_path / "in", 6, 2)
    cfg = RunConfig(framework=Framework.VUE)
    a = run_corpus(tmp_path / "in", tmp_path / "a", cfg, workers=1)
    b = run_corpus(tmp_path / "in", tmp_path / "b", cfg, workers=2)
    assert a.exit_code == b.exit_code == EXIT_OK
    assert a.manifest.outputs == b.manifest.outputs
    ta, tb = read_tree(tmp_path / "a"), read_tree(tmp_path / "b")
    ta = {k: v for k, v in ta.items() if not k.endswith("manifest.json")}
    tb = {k: v for k, v in tb.items() if not k.endswith("manifest.json")}
    assert ta == tb


def test_corpus_reports_failures_and_continues(tmp_path):
    write_corpus(tmp_path / "in", 9, 4)
    (tmp_path / "in" / "doc_bad.json").write_text("[1, 2")
    result = run_corpus(tmp_path / "in", tmp_path / "out")
    assert len(result.reports) == 9
    assert list(result.failures) == ["doc_bad.json"]
    assert result.exit_code != EXIT_OK
    agg = json.loads((tmp_path / "out" / "aggregate.json").read_text())
    assert agg["documents"] == 10 and agg["succeeded"] == 9


def test_empty_corpus(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    with pytest.raises(EmptyCorpus):
        run_corpus(tmp_path / "empty", tmp_path / "out")
    code, _ = run_cli(capsys, "corpus", str(tmp_path / "empty"), "-o", str(tmp_path / "out"))
    assert code == EXIT_PARSE


def test_cli_mine_emit_eval(doc, tmp_path, capsys):
    mined = tmp_path / "mined.json"
    code, out = run_cli(capsys, "mine", str(doc), "-o", str(mined), "--json")
    assert code == EXIT_OK and json.loads(out)["templates"] >= 1
    bundle = tmp_path / "bundle"
    code, out = run_cli(capsys, "emit", str(mined), "--framework", "angular", "-o", str(bundle), "--json")
    assert code == EXIT_OK and (bundle / "manifest.json").is_file()
    code, out = run_cli(capsys, "eval", "--blueprint", str(mined), "--bundle", str(bundle),
                        "--framework", "angular")
    report = json.loads(out)
    assert code == EXIT_OK and report["pc"] == 1.0 and report["lpa"] == 1.0


def test_cli_roundtrip_and_ingest(tmp_path, capsys):
    src = tmp_path / "boxes.json"
    src.write_text(boxes_to_json(demo_boxes(0)))
    code, out = run_cli(capsys, "roundtrip", str(src), "--json")
    assert code == EXIT_OK and json.loads(out)["roundtrip_ted"] == 0
    code, out = run_cli(capsys, "ingest", str(src), "-o", str(tmp_path / "tree.json"), "--json")
    assert code == EXIT_OK and json.loads(out)["nodes"] > len(demo_boxes(0))


def test_cli_unknown_framework_is_usage_error(doc):
    with pytest.raises(SystemExit):
        main(["pipeline", str(doc), "--framework", "svelte"])


def test_out_dir_precedence(doc, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("UIMOTIF_OUT_DIR", str(tmp_path / "env"))
    run_cli(capsys, "pipeline", str(doc))
    assert (tmp_path / "env" / "report.json").is_file()
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"out_dir": str(tmp_path / "conf"), "framework": "vue"}))
    run_cli(capsys, "pipeline", str(doc), "--config", str(cfg))
    assert (tmp_path / "conf" / "bundle" / "App.vue").is_file()
    run_cli(capsys, "pipeline", str(doc), "--config", str(cfg), "-o", str(tmp_path / "flag"),
            "--framework", "react")
    assert (tmp_path / "flag" / "bundle" / "App.tsx").is_file()
    monkeypatch.delenv("UIMOTIF_OUT_DIR")
    run_cli(capsys, "pipeline", str(doc))
    assert (tmp_path / "out" / "report.json").is_file()


def test_config_sets_miner_defaults(doc, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"eta": 0.3, "min_support": 3}))
    run_cli(capsys, "pipeline", str(doc), "--config", str(cfg), "-o", str(tmp_path / "o1"))
    manifest = json.loads((tmp_path / "o1" / "manifest.json").read_text())
    assert manifest["config"]["miner"]["eta"] == 0.3
    assert manifest["config"]["miner"]["min_support"] == 3
    run_cli(capsys, "pipeline", str(doc), "--config", str(cfg), "--eta", "0.05", "-o", str(tmp_path / "o2"))
    manifest = json.loads((tmp_path / "o2" / "manifest.json").read_text())
    assert manifest["config"]["miner"]["eta"] == 0.05


def test_config_rejects_unknown_keys(doc, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"etaa": 0.3}))
    code, _ = run_cli(capsys, "pipeline", str(doc), "--config", str(cfg))
    assert code == EXIT_PARSE


def test_synth_command(tmp_path, capsys):
    code, out = run_cli(capsys, "synth", "-o", str(tmp_path / "s"), "--count", "3", "--json")
    assert code == EXIT_OK
    assert sorted(p.name for p in (tmp_path / "s").glob("*.json")) == ["doc000.json", "doc001.json", "doc002.json"]
    assert (tmp_path / "s" / "boxes" / "demo_boxes.json").is_file()


def test_miner_config_reaches_run_config():
    assert RunConfig(miner=MinerConfig(eta=0.2)).to_json()["miner"]["eta"] == 0.2
