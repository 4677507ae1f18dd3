"""Command-line entry point."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

from .emitter import FuelExhausted, Framework, IncompleteStream, InternalConstraintViolation, emit
from .metrics import UnparsableBundle, evaluate, parse_html_bundle, tree_edit_distance
from .miner import MinerConfig, mine
from .model import Blueprint, BlueprintError, expand, parse_blueprint, serialize_blueprint
from .pipeline import (
    EXIT_EMIT,
    EXIT_EVAL,
    EXIT_MINE,
    EXIT_OK,
    EXIT_PARSE,
    EmptyCorpus,
    RunConfig,
    dump_json,
    load_tree,
    read_bundle,
    run_corpus,
    run_pipeline,
    sha256,
    write_bundle,
)

OUT_DIR_ENV = "UIMOTIF_OUT_DIR"

DEFAULTS = {
    "eta": 0.15,
    "min_size": 2,
    "min_support": 2,
    "framework": "html",
    "fuzz_seed": None,
    "fuel": None,
    "gap_threshold": None,
    "strict_labels": False,
    "workers": 1,
}


class CliError(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


def _settings(args: argparse.Namespace) -> dict:
    """Effective settings: flags override the config file, which overrides defaults."""
    merged = dict(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(EXIT_PARSE, f"config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise CliError(EXIT_PARSE, "config file must hold a JSON object")
        unknown = set(loaded) - set(DEFAULTS) - {"out_dir"}
        if unknown:
            raise CliError(EXIT_PARSE, f"unknown config keys: {sorted(unknown)}")
        merged.update(loaded)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            merged[key] = value
    merged["out_dir"] = (getattr(args, "out", None) or merged.get("out_dir")
                         or os.environ.get(OUT_DIR_ENV) or "out")
    return merged


def _run_config(s: dict) -> RunConfig:
    try:
        return RunConfig(
            miner=MinerConfig(eta=float(s["eta"]), min_size=int(s["min_size"]), min_support=int(s["min_support"])),
            framework=Framework.parse(s["framework"]),
            fuzz_seed=s["fuzz_seed"],
            fuel=s["fuel"],
            gap_threshold=s["gap_threshold"],
            strict_labels=bool(s["strict_labels"]),
        )
    except ValueError as exc:
        raise CliError(EXIT_PARSE, str(exc)) from None


def _read_blueprint(path: str) -> Blueprint:
    try:
        return parse_blueprint(Path(path).read_bytes())
    except (OSError, BlueprintError) as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc}") from None


def _read_tree(path: str, gap: Optional[float]):
    try:
        return load_tree(Path(path).read_bytes(), gap)
    except (OSError, BlueprintError) as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc}") from None


def _mine(tree, cfg: RunConfig) -> Blueprint:
    try:
        return mine(tree, cfg.miner)
    except (BlueprintError, ValueError) as exc:
        raise CliError(EXIT_MINE, f"[mine] {exc}") from None


def _emit(bp: Blueprint, cfg: RunConfig):
    try:
        return emit(bp, cfg.framework, fuzz_seed=cfg.fuzz_seed, fuel=cfg.fuel)
    except (FuelExhausted, IncompleteStream, InternalConstraintViolation) as exc:
        raise CliError(EXIT_EMIT, f"[emit] {type(exc).__name__}: {exc}") from None


def _write_out(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


# --- subcommands ---------------------------------------------------------------


def cmd_ingest(args, s) -> dict:
    tree = _read_tree(args.input, s["gap_threshold"])
    data = serialize_blueprint(Blueprint(tree))
    out = Path(args.output or Path(s["out_dir"]) / "tree.json")
    _write_out(out, data)
    return {"output": str(out), "nodes": len(tree), "sha256": sha256(data)}


def cmd_mine(args, s) -> dict:
    cfg = _run_config(s)
    bp = _mine(_read_tree(args.input, cfg.gap_threshold), cfg)
    data = serialize_blueprint(bp)
    out = Path(args.output or Path(s["out_dir"]) / "mined.json")
    _write_out(out, data)
    return {"output": str(out), "templates": len(bp.templates), "instances": len(bp.instances),
            "loop_groups": len(bp.loop_groups), "sha256": sha256(data)}


def cmd_emit(args, s) -> dict:
    cfg = _run_config(s)
    bp = _read_blueprint(args.blueprint)
    result = _emit(bp, cfg)
    out = Path(s["out_dir"])
    hashes = write_bundle(result.bundle, out)
    manifest = {"framework": cfg.framework.value, "fuzz_seed": cfg.fuzz_seed, "files": hashes,
                "proposals": result.proposals, "rejections": result.rejections}
    _write_out(out / "manifest.json", dump_json(manifest))
    return {"output": str(out), **manifest}


def cmd_eval(args, s) -> dict:
    cfg = _run_config(s)
    bp = _read_blueprint(args.blueprint)
    try:
        bundle = read_bundle(Path(args.bundle), cfg.framework)
    except (OSError, ValueError) as exc:
        raise CliError(EXIT_PARSE, f"{args.bundle}: {exc}") from None
    try:
        return evaluate(bp, bundle, strict=cfg.strict_labels).to_json()
    except (UnparsableBundle, BlueprintError) as exc:
        raise CliError(EXIT_EVAL, f"[eval] {exc}") from None


def cmd_roundtrip(args, s) -> dict:
    cfg = _run_config(s)
    bp = _mine(_read_tree(args.input, cfg.gap_threshold), cfg)
    bundle = _emit(bp, RunConfig(cfg.miner, Framework.HTML, cfg.fuzz_seed, cfg.fuel)).bundle
    try:
        parsed = parse_html_bundle(bundle)
    except UnparsableBundle as exc:
        raise CliError(EXIT_EVAL, f"[eval] {exc}") from None
    return {"roundtrip_ted": tree_edit_distance(parsed, expand(bp), strict=cfg.strict_labels),
            "nodes": len(bp.tree)}


def cmd_pipeline(args, s) -> dict:
    result = run_pipeline(Path(args.input), Path(s["out_dir"]), _run_config(s))
    out = {"exit_code": result.exit_code, "output": s["out_dir"],
           "report": result.report.to_json() if result.report else None}
    if result.error:
        out["error"] = result.error
    return out


def cmd_corpus(args, s) -> dict:
    try:
        result = run_corpus(Path(args.directory), Path(s["out_dir"]), _run_config(s), int(s["workers"]))
    except EmptyCorpus as exc:
        raise CliError(EXIT_PARSE, f"EmptyCorpus: {exc}") from None
    return {"exit_code": result.exit_code, "output": s["out_dir"], **result.aggregate}


def cmd_synth(args, s) -> dict:
    from .synth import boxes_to_json, demo_boxes, write_corpus

    out = Path(args.output or s["out_dir"])
    names = write_corpus(out, args.count, args.seed)
    boxes = out / "boxes" / "demo_boxes.json"
    boxes.parent.mkdir(exist_ok=True)
    boxes.write_text(boxes_to_json(demo_boxes(args.seed)), encoding="utf-8")
    return {"output": str(out), "documents": names, "boxes": str(boxes)}


COMMANDS = {
    "ingest": cmd_ingest, "mine": cmd_mine, "emit": cmd_emit, "eval": cmd_eval,
    "roundtrip": cmd_roundtrip, "pipeline": cmd_pipeline, "corpus": cmd_corpus, "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--config", help="JSON file with default settings")
    miner = argparse.ArgumentParser(add_help=False)
    miner.add_argument("--eta", type=float, help="near-duplicate merge threshold")
    miner.add_argument("--min-size", dest="min_size", type=int)
    miner.add_argument("--min-support", dest="min_support", type=int)
    miner.add_argument("--gap-threshold", dest="gap_threshold", type=float,
                       help="layout gap threshold for box input (default: inferred)")
    fw = argparse.ArgumentParser(add_help=False)
    fw.add_argument("--framework", choices=[f.value for f in Framework])
    fw.add_argument("--fuzz-seed", dest="fuzz_seed", type=int, help="use the fuzz proposer with this seed")
    fw.add_argument("--fuel", type=int, help="proposal budget for emission")
    fw.add_argument("--strict-labels", dest="strict_labels", action="store_true",
                    help="TED also compares payload values")

    p = argparse.ArgumentParser(prog="uimotif", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ingest", parents=[common, miner], help="group detector boxes into a tree")
    sp.add_argument("input")
    sp.add_argument("-o", "--output")

    sp = sub.add_parser("mine", parents=[common, miner], help="mine templates into mined.json")
    sp.add_argument("input", help="box list or blueprint JSON")
    sp.add_argument("-o", "--output")

    sp = sub.add_parser("emit", parents=[common, fw], help="emit a code bundle")
    sp.add_argument("blueprint")
    sp.add_argument("-o", "--out", help=f"output directory (default ${OUT_DIR_ENV} or ./out)")

    sp = sub.add_parser("eval", parents=[common, fw], help="score a bundle against its blueprint")
    sp.add_argument("--blueprint", required=True)
    sp.add_argument("--bundle", required=True)

    sp = sub.add_parser("roundtrip", parents=[common, miner, fw], help="mine, emit HTML, parse back, report TED")
    sp.add_argument("input")

    sp = sub.add_parser("pipeline", parents=[common, miner, fw], help="run every stage on one document")
    sp.add_argument("input")
    sp.add_argument("-o", "--out")

    sp = sub.add_parser("corpus", parents=[common, miner, fw], help="run the pipeline over a directory")
    sp.add_argument("directory")
    sp.add_argument("-o", "--out")
    sp.add_argument("--workers", type=int)

    sp = sub.add_parser("synth", parents=[common], help="write a synthetic corpus and demo boxes")
    sp.add_argument("-o", "--output")
    sp.add_argument("--count", type=int, default=25)
    sp.add_argument("--seed", type=int, default=0)
    return p


def _print_human(result: dict) -> None:
    for key, value in result.items():
        if isinstance(value, (dict, list)):
            value = json.dumps(value, sort_keys=True)
        print(f"{key}: {value}")


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = _settings(args)
        result = COMMANDS[args.command](args, settings)
    except CliError as exc:
        if args.json:
            print(json.dumps({"error": str(exc), "exit_code": exc.code}, sort_keys=True))
        else:
            print(f"error: {exc}", file=sys.stderr)
        return exc.code
    if args.json or args.command == "eval":
        print(json.dumps(result, indent=2, sort_keys=True))
    else:
        _print_human(result)
    return int(result.get("exit_code", EXIT_OK))


if __name__ == "__main__":
    sys.exit(main())
