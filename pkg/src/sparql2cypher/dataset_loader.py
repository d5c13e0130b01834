"""
Dataset loading utilities for Spider4SSC-style query files.
"""

import json
import logging
from pathlib import Path
from typing import Any, Union

import requests
from pydantic import ValidationError

from .schemas import DatasetEntry

logger = logging.getLogger(__name__)


class DatasetLoadError(Exception):
    """Custom exception for dataset loading errors."""

    pass


def load_dataset(source: Union[str, Path], timeout: float = 30.0) -> list[DatasetEntry]:
    """
    Load dataset entries from a file path or URL.

    The payload is a JSON list of entries or JSON Lines, one entry per line.

    Args:
        source: Local path, or an http(s) URL
        timeout: Seconds to wait for a URL

    Returns:
        list[DatasetEntry]: Validated entries in file order

    Raises:
        DatasetLoadError: If the dataset cannot be read or an entry is invalid
    """
    text = str(source)
    try:
        if text.startswith(("http://", "https://")):
            payload, format_type = _load_url_text(text, timeout)
        else:
            payload, format_type = _load_file_text(Path(text))
        records = _parse_records(payload, format_type)
    except DatasetLoadError:
        raise
    except Exception as e:
        raise DatasetLoadError(f"Failed to load dataset: {str(e)}") from e

    return validate_entries(records)


def validate_entries(records: list[Any]) -> list[DatasetEntry]:
    """
    Validate raw records as dataset entries.

    Raises:
        DatasetLoadError: Naming the first invalid entry by index
    """
    entries = []
    for index, record in enumerate(records):
        try:
            entries.append(DatasetEntry.model_validate(record))
        except ValidationError as e:
            raise DatasetLoadError(f"Invalid dataset entry {index}: {e}") from e
    logger.debug("loaded %d dataset entries", len(entries))
    return entries


def _load_file_text(path: Path) -> tuple[str, str]:
    path = path.expanduser().resolve()
    if not path.exists():
        raise DatasetLoadError(f"File not found: {path}")
    return path.read_text(encoding="utf-8"), _detect_format_from_path(path)


def _load_url_text(url: str, timeout: float) -> tuple[str, str]:
    try:
        response = requests.get(url, timeout=timeout)
        response.raise_for_status()
    except requests.RequestException as e:
        raise DatasetLoadError(f"Failed to fetch dataset from URL: {str(e)}") from e

    format_type = "jsonl" if url.lower().endswith((".jsonl", ".ndjson")) else "json"
    return response.text, format_type


def _detect_format_from_path(path: Path) -> str:
    """Detect file format from file extension."""
    format_map = {
        ".json": "json",
        ".jsonl": "jsonl",
        ".ndjson": "jsonl",
    }
    format_type = format_map.get(path.suffix.lower())
    if not format_type:
        raise DatasetLoadError(f"Cannot detect format from extension: {path.suffix}")
    return format_type


def _parse_records(payload: str, format_type: str) -> list[Any]:
    if format_type == "jsonl":
        return [json.loads(line) for line in payload.splitlines() if line.strip()]
    data = json.loads(payload)
    if not isinstance(data, list):
        raise DatasetLoadError("Dataset JSON must be a list of entries")
    return data


def entry_id(entry: DatasetEntry, index: int) -> str:
    """Stable id of an entry: its own `id` field when present, else its position."""
    explicit = (entry.model_extra or {}).get("id")
    return str(explicit) if explicit is not None else str(index)


def dump_entries(entries: list[DatasetEntry]) -> str:
    """Serialize entries back to JSON, keeping only the fields each entry carried or gained."""
    records = [entry.model_dump(exclude_unset=True) for entry in entries]
    return json.dumps(records, indent=2, ensure_ascii=False) + "\n"


def save_dataset(entries: list[DatasetEntry], path: Union[str, Path]):
    """
    Write entries to a JSON file.

    Raises:
        DatasetLoadError: If the file cannot be written
    """
    path = Path(path).expanduser()
    try:
        path.write_text(dump_entries(entries), encoding="utf-8")
    except OSError as e:
        raise DatasetLoadError(f"Failed to write dataset: {str(e)}") from e
