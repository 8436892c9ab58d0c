"""Report records and atomic file output.

Every report carries the finite-family caveat: sup-type quantities computed
here are lower bounds over the sampled balls/grids, never certified suprema.
canonical_bytes drops the wall-time field so determinism checks can compare
runs byte for byte.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

__all__ = [
    "LOWER_BOUND_CAVEAT",
    "Report",
    "REPORT_SCHEMA",
    "validate_report",
    "canonical_bytes",
    "atomic_write_text",
    "write_report",
]

LOWER_BOUND_CAVEAT = (
    "sup-type values are lower bounds over a finite ball family and sampled grids"
)

REPORT_SCHEMA = {
    "type": "object",
    "required": ["command", "config_fingerprint", "results", "warnings", "wall_time_s"],
    "properties": {
        "command": {"type": "string"},
        "config_fingerprint": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "results": {"type": "object"},
        "warnings": {"type": "array", "items": {"type": "string"}},
        "wall_time_s": {"type": "number"},
    },
    "additionalProperties": False,
}


@dataclass
class Report:
    command: str
    config_fingerprint: str
    results: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    wall_time_s: float = 0.0

    def __post_init__(self):
        if LOWER_BOUND_CAVEAT not in self.warnings:
            self.warnings.insert(0, LOWER_BOUND_CAVEAT)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config_fingerprint": self.config_fingerprint,
            "results": self.results,
            "warnings": self.warnings,
            "wall_time_s": self.wall_time_s,
        }


def validate_report(doc: dict) -> None:
    import jsonschema

    jsonschema.validate(doc, REPORT_SCHEMA)


def canonical_bytes(doc: dict) -> bytes:
    """Serialization used for determinism comparisons: sorted keys, timing
    stripped."""
    trimmed = {k: v for k, v in doc.items() if k != "wall_time_s"}
    return json.dumps(trimmed, sort_keys=True, indent=1).encode()


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".molab-tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_report(path: str, report: Report) -> None:
    doc = report.to_dict()
    validate_report(doc)
    atomic_write_text(path, json.dumps(doc, sort_keys=True, indent=1) + "\n")
