"""End-to-end runs: ingest, mine, emit, evaluate, with reproducible manifests."""
from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .emitter import (
    CodeBundle,
    FuelExhausted,
    Framework,
    IncompleteStream,
    InternalConstraintViolation,
    emit,
)
from .layout import group_boxes, infer_gap_threshold, parse_boxes
from .metrics import EvalReport, UnparsableBundle, evaluate
from .miner import MinerConfig, mine
from .model import Blueprint, BlueprintError, MalformedJson, UiTree, parse_blueprint, serialize_blueprint

EXIT_OK, EXIT_PARSE, EXIT_MINE, EXIT_EMIT, EXIT_EVAL = 0, 1, 2, 3, 4


class StageError(Exception):
    """A pipeline stage failed; ``code`` is the process exit status for it."""

    def __init__(self, stage: str, code: int, message: str) -> None:
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.code = code


class EmptyCorpus(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    miner: MinerConfig = MinerConfig()
    framework: Framework = Framework.HTML
    fuzz_seed: Optional[int] = None
    fuel: Optional[int] = None
    gap_threshold: Optional[float] = None
    strict_labels: bool = False

    def to_json(self) -> dict:
        return {
            "miner": asdict(self.miner),
            "framework": self.framework.value,
            "fuzz_seed": self.fuzz_seed,
            "fuel": self.fuel,
            "gap_threshold": self.gap_threshold,
            "strict_labels": self.strict_labels,
        }


@dataclass
class RunManifest:
    tool_version: str
    config: dict
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    wall_times: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class PipelineResult:
    exit_code: int
    report: Optional[EvalReport]
    manifest: RunManifest
    error: Optional[str] = None


def sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _write(path: Path, data: bytes) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    return sha256(data)


def write_bundle(bundle: CodeBundle, out_dir: Path) -> dict[str, str]:
    """Write every bundle file under ``out_dir``; returns path -> sha256."""
    return {rel: _write(out_dir / rel, text.encode("utf-8")) for rel, text in bundle.files}


def read_bundle(directory: Path, framework: Framework) -> CodeBundle:
    """Load a bundle written by ``emit``; the top-level manifest is not part of it."""
    files = sorted(
        (p.relative_to(directory).as_posix(), p.read_text(encoding="utf-8"))
        for p in directory.rglob("*") if p.is_file() and p != directory / "manifest.json"
    )
    return CodeBundle(framework, tuple(files))


def dump_json(value) -> bytes:
    return (json.dumps(value, indent=2, sort_keys=True) + "\n").encode("utf-8")


def load_tree(data: bytes, gap_threshold: Optional[float] = None) -> UiTree:
    """A JSON array is a box list (grouped into a tree); an object is a blueprint."""
    try:
        head = data.lstrip()[:1]
    except TypeError:
        raise MalformedJson("input must be bytes") from None
    if head == b"[":
        items = parse_boxes(data)
        threshold = gap_threshold if gap_threshold is not None else infer_gap_threshold(items)
        return group_boxes(items, threshold)
    return parse_blueprint(data).tree


def run_pipeline(input_path: Path, out_dir: Path, cfg: RunConfig = RunConfig()) -> PipelineResult:
    """Ingest, mine, emit and evaluate one document; artifacts land in ``out_dir``."""
    input_path, out_dir = Path(input_path), Path(out_dir)
    manifest = RunManifest(__version__, cfg.to_json())
    clock = time.perf_counter

    def finish(code: int, report=None, error=None) -> PipelineResult:
        _write(out_dir / "manifest.json", dump_json(manifest.to_json()))
        return PipelineResult(code, report, manifest, error)

    try:
        t0 = clock()
        try:
            data = input_path.read_bytes()
            manifest.inputs[input_path.name] = sha256(data)
            tree = load_tree(data, cfg.gap_threshold)
        except (OSError, BlueprintError) as exc:
            raise StageError("parse", EXIT_PARSE, str(exc)) from None
        manifest.wall_times["parse"] = clock() - t0

        t0 = clock()
        try:
            bp: Blueprint = mine(tree, cfg.miner)
        except (BlueprintError, ValueError) as exc:
            raise StageError("mine", EXIT_MINE, str(exc)) from None
        mined = serialize_blueprint(bp)
        manifest.outputs["mined.json"] = _write(out_dir / "mined.json", mined)
        manifest.wall_times["mine"] = clock() - t0

        t0 = clock()
        try:
            result = emit(bp, cfg.framework, fuzz_seed=cfg.fuzz_seed, fuel=cfg.fuel)
        except (FuelExhausted, IncompleteStream, InternalConstraintViolation) as exc:
            raise StageError("emit", EXIT_EMIT, f"{type(exc).__name__}: {exc}") from None
        for rel, digest in write_bundle(result.bundle, out_dir / "bundle").items():
            manifest.outputs[f"bundle/{rel}"] = digest
        manifest.wall_times["emit"] = clock() - t0

        t0 = clock()
        try:
            report = evaluate(bp, result.bundle, strict=cfg.strict_labels)
        except (UnparsableBundle, BlueprintError) as exc:
            raise StageError("eval", EXIT_EVAL, str(exc)) from None
        manifest.outputs["report.json"] = _write(out_dir / "report.json", dump_json(report.to_json()))
        manifest.wall_times["eval"] = clock() - t0
        if report.pc != 1.0:
            return finish(EXIT_EVAL, report, f"[eval] prop coverage {report.pc} below 1.0")
        return finish(EXIT_OK, report)
    except StageError as exc:
        return finish(exc.code, None, str(exc))


def _run_one(args) -> tuple[str, PipelineResult]:
    path, out_dir, cfg = args
    return path.name, run_pipeline(path, out_dir / path.stem, cfg)


@dataclass
class CorpusResult:
    exit_code: int
    aggregate: dict
    reports: dict[str, EvalReport]
    failures: dict[str, str]
    manifest: RunManifest


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def run_corpus(corpus_dir: Path, out_dir: Path, cfg: RunConfig = RunConfig(), workers: int = 1) -> CorpusResult:
    """Run every ``*.json`` document; results are merged in filename order."""
    corpus_dir, out_dir = Path(corpus_dir), Path(out_dir)
    paths = sorted(p for p in corpus_dir.glob("*.json") if p.is_file())
    if not paths:
        raise EmptyCorpus(f"no .json documents in {corpus_dir}")
    jobs = [(p, out_dir, cfg) for p in paths]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    results.sort(key=lambda r: r[0])

    reports = {name: r.report for name, r in results if r.exit_code == EXIT_OK}
    failures = {name: r.error or f"exit {r.exit_code}" for name, r in results if r.exit_code != EXIT_OK}
    ordered = [reports[n] for n in sorted(reports)]
    aggregate = {
        "documents": len(paths),
        "succeeded": len(reports),
        "failures": failures,
        "mean": {
            "crr": _mean([r.crr for r in ordered]),
            "lpa": _mean([r.lpa for r in ordered]),
            "pc": _mean([r.pc for r in ordered]),
            "afc": _mean([r.afc for r in ordered]),
            "ted": _mean([r.ted for r in ordered]),
            "roundtrip_ted": _mean([r.roundtrip_ted for r in ordered]),
        },
        "per_document": {n: reports[n].to_json() for n in sorted(reports)},
    }
    manifest = RunManifest(__version__, {**cfg.to_json(), "workers": workers})
    for name, r in results:
        stem = Path(name).stem
        manifest.inputs[name] = r.manifest.inputs.get(name, "")
        for rel, digest in r.manifest.outputs.items():
            manifest.outputs[f"{stem}/{rel}"] = digest
        for stage, secs in r.manifest.wall_times.items():
            manifest.wall_times[f"{stem}/{stage}"] = secs
    manifest.outputs["aggregate.json"] = _write(out_dir / "aggregate.json", dump_json(aggregate))
    _write(out_dir / "manifest.json", dump_json(manifest.to_json()))
    code = next((r.exit_code for _, r in results if r.exit_code != EXIT_OK), EXIT_OK)
    return CorpusResult(code, aggregate, reports, failures, manifest)
