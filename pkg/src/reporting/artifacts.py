"""Artifact files of one command: CSV tables, the shared run manifest and cleanup on failure."""

from __future__ import annotations

import hashlib
import json
import platform
from importlib import metadata
from pathlib import Path
from typing import Any

import polars as pl

from das.logger import log_info, log_warn
from src.config import PipelineConfig

MANIFEST_NAME = "manifest.json"
VERSIONED_PACKAGES = ("market-calibration", "numpy", "scipy", "polars", "duckdb", "pydantic")


def package_versions() -> dict[str, str]:
    versions = {"python": platform.python_version()}
    for name in VERSIONED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class ArtifactWriter:
    """
    Writes the artifacts of one command into the output directory and remembers
    them, so a failing command can remove exactly what it produced.
    """

    def __init__(self, out_dir: Path, command: str):
        self.out_dir = out_dir
        self.command = command
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def _track(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.path(name)
        self.written.append(path)
        return path

    def csv(self, name: str, df: pl.DataFrame) -> Path:
        path = self._track(name)
        df.write_csv(path)
        log_info(f"{name}: {df.height} rows")
        return path

    def json(self, name: str, payload: dict[str, Any]) -> Path:
        path = self._track(name)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path

    def discard(self) -> None:
        for path in self.written:
            if path.exists():
                path.unlink()
                log_warn(f"removed partial output {path}")
        self.written.clear()

    def manifest(self, cfg: PipelineConfig, seed: int, extra: dict[str, Any] | None = None) -> Path:
        """
        Record this command in manifest.json (one entry per command, other entries kept):
        config hash and body, seed, package versions and the digest of every artifact.
        """
        path = self.path(MANIFEST_NAME)
        manifest: dict[str, Any] = {}
        if path.exists():
            try:
                manifest = json.loads(path.read_text())
            except json.JSONDecodeError:
                log_warn(f"{path} is not valid JSON; starting a new manifest")
        runs = manifest.setdefault("runs", {})
        runs[self.command] = {
            "config_hash": cfg.config_hash(),
            "config": json.loads(cfg.canonical_json()),
            "seed": seed,
            "versions": package_versions(),
            "artifacts": {p.name: file_digest(p) for p in self.written},
            **(extra or {}),
        }
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return path
