import json
import pandas as pd
from pathlib import Path


def save_json_to_file(data: dict, file_path: str | Path, ensure_ascii: bool = False, indent: int = 2) -> None:
    """
    Save a Python dictionary as a JSON file with sorted keys.

    :param data: Dictionary to save
    :param file_path: Output file path (str or Path)
    :param ensure_ascii: If True, escapes non-ASCII characters
    :param indent: Indentation level for pretty-printing
    """
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)  # Ensure directory exists

    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, ensure_ascii=ensure_ascii, indent=indent, sort_keys=True)
        f.write("\n")


def canonical_json(data) -> str:
    """Compact, key-sorted JSON used for oracle output."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def write_csv(frame: pd.DataFrame, output_path: str | Path) -> Path:
    path = Path(output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path
