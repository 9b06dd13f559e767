"""Serialization helpers: canonical JSON, deterministic CSV, bundled maps."""

from __future__ import annotations

import hashlib
import json
import sys
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from .errors import ValidationError
from .interval_maps import PiecewiseMap, map_from_jsonable, map_to_jsonable

BUNDLED_MAPS = ("d2", "l3", "w2")


def format_float(x) -> str:
    """Fixed 17-significant-digit form, the roundtrip-safe CSV float format."""
    if isinstance(x, complex):
        return f"{format_float(x.real)}{'+' if x.imag >= 0 else '-'}{format_float(abs(x.imag))}j"
    return format(float(x), ".17g")


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_dumps(config).encode()).hexdigest()[:16]


def load_map(spec: str) -> PiecewiseMap:
    """Load a map from a JSON file path or a bundled fixture name (d2/l3/w2)."""
    name = spec.lower().removesuffix(".json")
    path = Path(spec)
    if path.exists():
        return map_from_jsonable(json.loads(path.read_text()))
    if name in BUNDLED_MAPS:
        data = resources.files("transferlab").joinpath(f"data/{name}.json").read_text()
        return map_from_jsonable(json.loads(data))
    raise ValidationError(f"map spec {spec!r} is neither a file nor a bundled name")


def save_map(pmap: PiecewiseMap, path: str):
    Path(path).write_text(json.dumps(map_to_jsonable(pmap), indent=2) + "\n")


def csv_lines(header: Iterable[str], rows: Iterable[Iterable], config: dict, version: str):
    """Deterministic CSV with the config echoed as comment lines."""
    yield f"# config: {canonical_dumps(config)}"
    yield f"# config_hash: {config_hash(config)}"
    yield f"# artifact_version: {version}"
    yield ",".join(header)
    for row in rows:
        yield ",".join(
            cell if isinstance(cell, str) else format_float(cell) if isinstance(cell, (float, complex)) else str(cell)
            for cell in row
        )


def write_lines(lines: Iterable[str], out: Optional[str]):
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def json_artifact(result, config: dict, version: str) -> dict:
    return {
        "artifact_version": version,
        "config": config,
        "config_hash": config_hash(config),
        "result": result,
    }
