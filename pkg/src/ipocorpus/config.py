"""Run configuration with flags > environment > config file precedence."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .judges import JudgeAdapter, HttpChatJudge, OfflineImageJudge, OfflineTextJudge

ENV_PREFIX = "IPOCORPUS_"


@dataclass
class RunConfig:
    data_dir: Path = Path("data")
    user_agent: str = "ipocorpus research client contact@example.com"
    max_requests_per_second: float = 10.0
    retry_budget: int = 3
    fuzzy_threshold: float = 0.85
    min_tokens: int = 50
    vote_threshold: float = 0.5
    text_judge: str = "offline:text"
    image_judges: str = "offline:image:8"
    tokenizer: str = "whitespace"
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        self.data_dir = Path(self.data_dir)
        if not 0.0 < self.fuzzy_threshold <= 1.0:
            raise ValueError("fuzzy_threshold must be in (0, 1]")
        if not 0.0 <= self.vote_threshold < 1.0:
            raise ValueError("vote_threshold must be in [0, 1)")
        if self.min_tokens < 0:
            raise ValueError("min_tokens must be >= 0")
        if self.max_requests_per_second <= 0:
            raise ValueError("max_requests_per_second must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def load_config(flag_values: dict, config_file: Path | None = None) -> RunConfig:
    """Merge sources: explicit flags win over IPOCORPUS_* env vars over the config file."""
    merged: dict = {}
    if config_file is not None:
        merged.update(json.loads(Path(config_file).read_text(encoding="utf-8")))
    for spec in fields(RunConfig):
        env_key = ENV_PREFIX + spec.name.upper()
        if env_key in os.environ:
            raw = os.environ[env_key]
            merged[spec.name] = _coerce(spec.type, raw)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    known = {f.name for f in fields(RunConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**merged)


def _coerce(type_name: object, raw: str):
    name = str(type_name)
    if "float" in name:
        return float(raw)
    if "int" in name:
        return int(raw)
    return raw


def build_text_judge(spec: str) -> JudgeAdapter:
    """Judge spec: "offline:text" or "http|<judge_id>|<base_url>|<model>[|<credential_env>]"."""
    if spec == "offline:text":
        return OfflineTextJudge()
    if spec.startswith("http|"):
        parts = spec.split("|")
        if len(parts) not in (4, 5):
            raise ValueError(f"bad judge spec {spec!r}")
        judge_id, base_url, model = parts[1], parts[2], parts[3]
        credential_env = parts[4] if len(parts) == 5 else "JUDGE_API_KEY"
        return HttpChatJudge(judge_id, base_url, model, credential_env=credential_env)
    raise ValueError(f"bad judge spec {spec!r}")


def build_image_judges(spec: str) -> list[JudgeAdapter]:
    """Ensemble spec: "offline:image:<n>" or comma-separated http specs."""
    if spec.startswith("offline:image:"):
        count = int(spec.rsplit(":", 1)[1])
        if count < 1:
            raise ValueError("ensemble needs at least one judge")
        return [OfflineImageJudge(salt) for salt in range(count)]
    return [build_text_judge(part) for part in spec.split(",")]
