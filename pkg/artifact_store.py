"""Canonical on-disk formats, content hashes and per-stage manifests.

Everything written here is byte-stable: sorted JSON keys, shortest
round-trip float repr, LF line endings and no wall-clock timestamps.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import pandas as pd
from loguru import logger

try:
    from .errors import IngestError, MissingStageInputError
except ImportError:
    from errors import IngestError, MissingStageInputError


MANIFEST_DIR = "manifests"


def _dumps(data: Any, indent: Optional[int] = None) -> str:
    return json.dumps(data, sort_keys=True, indent=indent, ensure_ascii=False, allow_nan=False,
                      separators=(",", ": ") if indent else (",", ":"))


def write_json(path, data: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_dumps(data, indent=2) + "\n", encoding="utf-8", newline="\n")
    return path


def read_json(path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_jsonl(path, records: Iterable[Mapping[str, Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(_dumps(record) + "\n")
    return path


def read_jsonl(path) -> List[Dict[str, Any]]:
    records = []
    with Path(path).open(encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise IngestError(f"{path}:{line_number}: invalid JSON line ({e.msg})",
                                  {"path": str(path), "line": line_number}) from e
    return records


def write_csv(path, records: Sequence[Mapping[str, Any]], columns: Sequence[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(list(records), columns=list(columns))
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def file_hash(path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def files_hash(paths: Iterable[Path], root: Optional[Path] = None) -> str:
    """One hash over several files, keyed by their (relative) names."""
    digest = hashlib.sha256()
    for path in sorted(Path(p) for p in paths):
        name = path.relative_to(root).as_posix() if root else path.name
        digest.update(name.encode("utf-8"))
        digest.update(file_hash(path).encode("ascii"))
    return digest.hexdigest()


class StageStore:
    """Output directory of one pipeline run."""

    def __init__(self, out_dir):
        self.root = Path(out_dir)

    def path(self, name: str) -> Path:
        return self.root / name

    def require(self, producers: Mapping[str, str]):
        """Fail with the producing command of the first missing upstream file."""
        for name, command in producers.items():
            if not self.path(name).is_file():
                raise MissingStageInputError(
                    f"run {command} first: {name} missing",
                    {"missing": name, "command": command, "out_dir": str(self.root)},
                )

    def write_manifest(self, stage: str, config_hash: str, seed: Optional[int],
                       inputs: Mapping[str, str], outputs: Sequence[str],
                       extra: Optional[Mapping[str, Any]] = None) -> Path:
        """Record input hashes, output hashes, config hash and seed of a stage."""
        manifest = {
            "stage": stage,
            "config_hash": config_hash,
            "seed": seed,
            "inputs": dict(sorted(inputs.items())),
            "outputs": {name: file_hash(self.path(name)) for name in sorted(outputs)},
        }
        if extra:
            manifest.update(extra)
        path = write_json(self.root / MANIFEST_DIR / f"{stage}.json", manifest)
        logger.info(f"🧾 Manifest written: {path}")
        return path

    def input_hashes(self, names: Iterable[str]) -> Dict[str, str]:
        return {name: file_hash(self.path(name)) for name in names}
