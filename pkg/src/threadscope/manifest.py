"""Run manifests: a JSON record of what a command ran with, written
before any other artifact so a finished output tree is always explained
by the manifest sitting next to it.

A manifest pins the subcommand name, every effective parameter except
the output location, sha256 digests of the input files, and the seeds.
Two runs with identical inputs and manifests produce byte-identical
outputs, and `replay` re-executes a manifest into a fresh directory.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .errors import ManifestError

ARTIFACT_VERSION = 1
MANIFEST_NAME = "manifest.json"


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass(frozen=True)
class ManifestInput:
    param: str
    path: str
    sha256: str


@dataclass(frozen=True)
class RunManifest:
    command: str
    params: dict
    inputs: tuple[ManifestInput, ...] = ()
    seeds: dict = field(default_factory=dict)
    artifact_version: int = ARTIFACT_VERSION

    def to_json(self) -> str:
        payload = {
            "artifact_version": self.artifact_version,
            "command": self.command,
            "params": self.params,
            "inputs": [
                {"param": i.param, "path": i.path, "sha256": i.sha256}
                for i in self.inputs
            ],
            "seeds": self.seeds,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def build_manifest(
    command: str,
    params: Mapping[str, object],
    input_paths: Mapping[str, str | Path],
    seeds: Mapping[str, int] | None = None,
) -> RunManifest:
    """Digest the inputs and freeze the run record.  Callers pass params
    already stripped of output locations."""
    inputs = tuple(
        ManifestInput(param=param, path=str(path), sha256=sha256_file(path))
        for param, path in sorted(input_paths.items())
    )
    return RunManifest(
        command=command,
        params=dict(params),
        inputs=inputs,
        seeds=dict(seeds or {}),
    )


def write_manifest(manifest: RunManifest, path: str | Path) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(manifest.to_json(), encoding="utf-8")


def read_manifest(path: str | Path) -> RunManifest:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: not valid JSON ({exc})") from exc
    for key in ("artifact_version", "command", "params", "inputs", "seeds"):
        if key not in payload:
            raise ManifestError(f"{path}: missing manifest field {key!r}")
    inputs = tuple(
        ManifestInput(param=i["param"], path=i["path"], sha256=i["sha256"])
        for i in payload["inputs"]
    )
    return RunManifest(
        command=payload["command"],
        params=payload["params"],
        inputs=inputs,
        seeds=payload["seeds"],
        artifact_version=payload["artifact_version"],
    )


def verify_inputs(manifest: RunManifest) -> list[str]:
    """Re-digest each recorded input; return problems, empty if all match."""
    problems: list[str] = []
    for entry in manifest.inputs:
        path = Path(entry.path)
        if not path.exists():
            problems.append(f"{entry.param}: {entry.path} is missing")
            continue
        actual = sha256_file(path)
        if actual != entry.sha256:
            problems.append(
                f"{entry.param}: {entry.path} digest changed "
                f"(recorded {entry.sha256[:12]}, found {actual[:12]})"
            )
    return problems
