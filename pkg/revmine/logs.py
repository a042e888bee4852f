"""Console helpers and the append-only JSON Lines run history.

Everything here writes to stderr or to the history file, never to stdout:
stdout is reserved for primary command output so that re-runs stay
byte-identical.
"""

from __future__ import annotations

import datetime as dt
import json
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

UTC = dt.timezone.utc

LEVELS = {"quiet": 0, "info": 1, "debug": 2}

_level: Optional[int] = None


def iso_now() -> str:
    return dt.datetime.now(UTC).isoformat(timespec="seconds").replace("+00:00", "Z")


def get_level() -> int:
    if _level is not None:
        return _level
    return LEVELS.get(os.environ.get("REVMINE_LOG", "info").strip().lower(), 1)


def set_level(name: Optional[str]) -> None:
    """Override the REVMINE_LOG level for this process (None resets)."""
    global _level
    _level = None if name is None else LEVELS.get(name, 1)


def is_debug() -> bool:
    return get_level() >= LEVELS["debug"]


def print_header(title: str, char: str = "="):
    if get_level() < LEVELS["info"]:
        return
    width = max(60, len(title) + 4)
    print(f"\n{char * width}", file=sys.stderr)
    print(f"  {title}", file=sys.stderr)
    print(f"{char * width}\n", file=sys.stderr)


def print_success(message: str):
    if get_level() >= LEVELS["info"]:
        print(f"✅ {message}", file=sys.stderr)


def print_error(message: str):
    print(f"❌ {message}", file=sys.stderr)


def print_warning(message: str):
    if get_level() >= LEVELS["info"]:
        print(f"⚠️  {message}", file=sys.stderr)


def print_info(message: str):
    if get_level() >= LEVELS["info"]:
        print(f"ℹ️  {message}", file=sys.stderr)


def print_progress(message: str):
    if get_level() >= LEVELS["info"]:
        print(f"🔄 {message}", file=sys.stderr)


def print_debug(message: str):
    if is_debug():
        print(f"🐛 {message}", file=sys.stderr)


class JSONLogger:
    """Append-only JSON Lines logger."""

    def __init__(self, path: Path):
        self.path = Path(path)

    def append(self, entry: Dict[str, Any]) -> Dict[str, Any]:
        payload = {"timestamp": iso_now(), **entry}
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as f:
            f.write(json.dumps(payload, ensure_ascii=False, default=str) + "\n")
        return payload

    def tail(self, limit: int = 10) -> List[Dict[str, Any]]:
        if not self.path.exists():
            return []
        with self.path.open("r", encoding="utf-8") as f:
            lines = f.readlines()[-limit:]
        entries = []
        for line in lines:
            line = line.strip()
            if not line:
                continue
            try:
                entries.append(json.loads(line))
            except json.JSONDecodeError:
                continue
        return entries
