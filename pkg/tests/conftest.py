from __future__ import annotations

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

REPO = Path(__file__).resolve().parents[1]
CORPUS_DIR = REPO / "fixtures" / "corpus"
GOLDEN_DIR = REPO / "fixtures" / "golden"

PIPELINE_COMMANDS = (
    "parse",
    "extract-sections",
    "validate",
    "extract-images",
    "classify-images",
    "verify-charts",
    "extract-features",
    "rate-charts",
)


def load_corpus() -> dict[str, tuple[dict, bytes, dict]]:
    """accession -> (filing metadata, primary document bytes, golden labels)."""
    out = {}
    for golden_path in sorted(GOLDEN_DIR.glob("*.json")):
        golden = json.loads(golden_path.read_text(encoding="utf-8"))
        accession = golden["accession_number"]
        meta = json.loads((CORPUS_DIR / accession / "filing.json").read_text(encoding="utf-8"))
        doc = (CORPUS_DIR / accession / meta["primary_document"]).read_bytes()
        out[accession] = (meta, doc, golden)
    return out


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


def run_pipeline(data_dir: Path, commands=PIPELINE_COMMANDS) -> None:
    from ipocorpus.cli import main

    runner = CliRunner()
    result = runner.invoke(
        main, ["fetch", "--data-dir", str(data_dir), "--from-dir", str(CORPUS_DIR)]
    )
    assert result.exit_code == 0, result.output
    for command in commands:
        result = runner.invoke(main, [command, "--data-dir", str(data_dir)])
        assert result.exit_code == 0, f"{command}: {result.output}"


@pytest.fixture(scope="session")
def pipeline_dir(tmp_path_factory) -> Path:
    """One full deterministic pipeline run over the fixture corpus, shared read-only."""
    data_dir = tmp_path_factory.mktemp("pipeline")
    run_pipeline(data_dir)
    return data_dir


@pytest.fixture()
def fresh_pipeline_dir(tmp_path) -> Path:
    """A private pipeline run for tests that mutate state (adjudications)."""
    data_dir = tmp_path / "data"
    run_pipeline(data_dir)
    return data_dir
