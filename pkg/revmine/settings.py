"""Run defaults (settings/default.json) and guideline data (_data/guidelines.yml)."""

from __future__ import annotations

import copy
import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional

try:
    import yaml  # type: ignore
except ImportError:  # pragma: no cover - fallbacks below cover it
    yaml = None

from .logs import print_warning

REPO_ROOT = Path(__file__).resolve().parents[1]
SETTINGS_PATH = REPO_ROOT / "settings" / "default.json"
GUIDELINES_DATA_PATH = REPO_ROOT / "_data" / "guidelines.yml"
DATABASE_DIR = REPO_ROOT / "database"
HISTORY_PATH = DATABASE_DIR / "runs" / "history.jsonl"
GENERATED_DIR = REPO_ROOT / "data" / "generated"

VERSION = "1.0.0"
APP_NAME = "revmine"

DEFAULT_SETTINGS: Dict[str, Any] = {
    "version": VERSION,
    "run": {
        "seed": 42,
        "annotator": None,
        "language": "english",
        "jobs": 1,
    },
    "features": {
        "window": 2,
        "affix_lengths": [1, 2, 3, 4],
        "use_pos": True,
        "use_position": True,
        "use_stylistics": True,
        "use_embeddings": False,
        "embedding_dim": 0,
    },
    "training": {
        "l2_lambda": 1.0,
        "max_iterations": 200,
        "convergence_tol": 1e-5,
    },
    "experiments": {
        "kFolds": 10,
    },
    "guidelines": {
        "maxLen": 3,
        "dropEmptyReviewsAfterEachStep": True,
    },
    "tracking": {
        "enabled": True,
        "historyPath": None,
    },
}

# Used when PyYAML or _data/guidelines.yml is unavailable.
FALLBACK_GUIDELINES: Dict[str, Any] = {
    "self_reference_lexicon": ["app", "apps", "application", "applications"],
    "noun_tags": ["NN", "NNS", "NNP", "NNPS"],
    "default_steps": ["preprocess", "self_refs", "nounless", "length_cap"],
    "pos_lexicon": {},
}


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


class SettingsManager:
    """Run defaults with dot-notation access."""

    def __init__(self, path: Optional[Path] = None):
        env_path = os.environ.get("REVMINE_SETTINGS")
        self.path = Path(path or env_path or SETTINGS_PATH)
        self.settings = self._load()

    def _load(self) -> Dict[str, Any]:
        if self.path.exists():
            try:
                return _merge(DEFAULT_SETTINGS, json.loads(self.path.read_text(encoding="utf-8")))
            except (OSError, json.JSONDecodeError) as exc:
                print_warning(f"Failed to read {self.path}: {exc}; using built-in defaults")
        return copy.deepcopy(DEFAULT_SETTINGS)

    def save(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(self.settings, indent=2) + "\n", encoding="utf-8")

    def get(self, key: str, default: Any = None) -> Any:
        value: Any = self.settings
        for k in key.split("."):
            if not isinstance(value, dict) or k not in value:
                return default
            value = value[k]
        return default if value is None else value

    def set(self, key: str, value: Any):
        keys = key.split(".")
        target = self.settings
        for k in keys[:-1]:
            target = target.setdefault(k, {})
        target[keys[-1]] = value
        self.save()

    def history_path(self) -> Optional[Path]:
        if not self.get("tracking.enabled", True):
            return None
        override = os.environ.get("REVMINE_HISTORY") or self.get("tracking.historyPath")
        return Path(override) if override else HISTORY_PATH


def ensure_dirs(root: Optional[Path] = None) -> List[Path]:
    """Ensure the run-history and generated-data directories exist."""
    base = Path(root) if root is not None else REPO_ROOT
    dirs = [base / "database" / "runs", base / "data" / "generated"]
    for dir_path in dirs:
        dir_path.mkdir(parents=True, exist_ok=True)
    return dirs


def parse_value(raw: str) -> Any:
    """Interpret a command-line settings value as JSON, falling back to a string."""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


_guideline_cache: Optional[Dict[str, Any]] = None


def load_guideline_data(path: Path = GUIDELINES_DATA_PATH) -> Dict[str, Any]:
    """Self-reference lexicon, noun tags, default steps and extra POS lexicon."""
    global _guideline_cache
    if path == GUIDELINES_DATA_PATH and _guideline_cache is not None:
        return _guideline_cache
    data = copy.deepcopy(FALLBACK_GUIDELINES)
    if yaml is not None and path.exists():
        try:
            loaded = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
            data.update({k: v for k, v in loaded.items() if k in FALLBACK_GUIDELINES})
        except (OSError, yaml.YAMLError) as exc:
            print_warning(f"Failed to read {path}: {exc}")
    if path == GUIDELINES_DATA_PATH:
        _guideline_cache = data
    return data


def default_self_reference_lexicon() -> List[str]:
    return [str(w).lower() for w in load_guideline_data()["self_reference_lexicon"]]


def default_noun_tags() -> List[str]:
    return [str(t) for t in load_guideline_data()["noun_tags"]]


def default_steps() -> List[str]:
    return [str(s) for s in load_guideline_data()["default_steps"]]
