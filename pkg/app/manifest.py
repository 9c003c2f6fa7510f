"""Run manifest: resolved config, seeds, UTC timestamps and SHA-256 digests of every artifact"""

import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict

import pytz

from . import __version__

MANIFEST_NAME = "manifest.json"


def utc_now() -> str:
    return datetime.now(pytz.UTC).isoformat()


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: Dict[str, Any]
    seeds: Dict[str, int]
    tool_version: str = __version__
    started_at: str = field(default_factory=utc_now)
    finished_at: str = ""
    artifacts: Dict[str, str] = field(default_factory=dict)

    def add_artifact(self, path, out_dir) -> None:
        path = Path(path)
        self.artifacts[path.relative_to(out_dir).as_posix()] = sha256_file(path)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def write(self, out_dir) -> Path:
        self.finished_at = utc_now()
        path = Path(out_dir) / MANIFEST_NAME
        path.write_text(self.to_json(), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))

    def verify(self, out_dir) -> Dict[str, bool]:
        """Artifact name -> whether the file on disk still matches its digest"""
        out_dir = Path(out_dir)
        return {
            name: (out_dir / name).exists() and sha256_file(out_dir / name) == digest
            for name, digest in self.artifacts.items()
        }
